//! PGM (P2 ASCII / P5 binary) grayscale I/O. Samples are normalized to
//! `[0, 1]` by the header's maxval on load.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Image, PixelGrid, Region};

fn pgm_err(msg: impl Into<String>) -> Error {
    Error::Pgm(msg.into())
}

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(pgm_err("missing P2/P5 magic number")),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(pgm_err("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap_or("");
        *field = text
            .parse()
            .map_err(|_| pgm_err(format!("bad header field at byte {start}")))?;
    }
    // Exactly one whitespace byte separates the header from binary data.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(pgm_err("header not terminated by whitespace"));
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(pgm_err(format!("maxval {maxval} outside 1..=65535")));
    }
    Ok(Header {
        binary,
        width: width as usize,
        height: height as usize,
        maxval,
        data_start: pos + 1,
    })
}

/// Decodes a PGM buffer into raw samples and their maxval.
pub fn decode(bytes: &[u8]) -> Result<(PixelGrid, Vec<u16>, u32)> {
    let header = parse_header(bytes)?;
    let grid = PixelGrid::new(header.width, header.height)?;
    let n = grid.len();
    let data = &bytes[header.data_start.min(bytes.len())..];
    let samples: Vec<u16> = if header.binary {
        let wide = header.maxval > 255;
        let need = if wide { 2 * n } else { n };
        if data.len() < need {
            return Err(pgm_err(format!(
                "expected {need} data bytes, found {}",
                data.len()
            )));
        }
        if wide {
            data[..need]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        } else {
            data[..n].iter().map(|&b| u16::from(b)).collect()
        }
    } else {
        let text = std::str::from_utf8(data).map_err(|_| pgm_err("non-ASCII P2 body"))?;
        let samples = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_ascii_whitespace)
            .take(n)
            .map(|t| t.parse::<u16>().map_err(|_| pgm_err(format!("bad sample '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        if samples.len() < n {
            return Err(pgm_err(format!(
                "expected {n} samples, found {}",
                samples.len()
            )));
        }
        samples
    };
    if let Some(&s) = samples.iter().find(|&&s| u32::from(s) > header.maxval) {
        return Err(pgm_err(format!("sample {s} exceeds maxval {}", header.maxval)));
    }
    Ok((grid, samples, header.maxval))
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let (grid, samples, maxval) = decode(bytes)?;
    let scale = f64::from(maxval);
    Image::new(grid, samples.iter().map(|&s| f64::from(s) / scale).collect())
}

pub fn read_image(path: &Path) -> Result<Image> {
    decode_image(&std::fs::read(path)?)
}

/// Binary P5 encoding; samples above 255 switch to two-byte big-endian.
pub fn encode_p5(grid: PixelGrid, samples: &[u16], maxval: u16) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", grid.width(), grid.height(), maxval).into_bytes();
    if maxval > 255 {
        for s in samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(samples.iter().map(|&s| s as u8));
    }
    out
}

pub fn encode_p2(grid: PixelGrid, samples: &[u16], maxval: u16) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n{}\n", grid.width(), grid.height(), maxval);
    for row in samples.chunks(grid.width()) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

/// Quantizes values in `[0, 1]` to 8 bits (clamping outside values).
pub fn encode_image(image: &Image) -> Vec<u8> {
    let samples: Vec<u16> = image
        .values()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u16)
        .collect();
    encode_p5(image.grid(), &samples, 255)
}

/// Mask as P5 with 255 inside the region and 0 elsewhere.
pub fn encode_mask(region: &Region) -> Vec<u8> {
    let samples: Vec<u16> = region
        .to_bitmap()
        .into_iter()
        .map(|b| if b { 255 } else { 0 })
        .collect();
    encode_p5(region.grid(), &samples, 255)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(bytes)?;
    Ok(())
}

/// Pixels with a nonzero sample.
pub fn decode_mask(bytes: &[u8]) -> Result<Region> {
    let (grid, samples, _) = decode(bytes)?;
    let bits: Vec<bool> = samples.iter().map(|&s| s > 0).collect();
    Ok(Region::from_bitmap(grid, &bits))
}
