//! Shape dictionaries: a JSON document with a grid block and an entries
//! array, plus rasterization of each entry onto the pixel grid.
//!
//! Coordinates are continuous, with pixel `(i, j)` occupying the unit square
//! `[i, i+1] x [j, j+1]`; a pixel belongs to a shape iff its center lies in
//! the closed shape. Angles are degrees, counter-clockwise as displayed
//! (y grows downward), about the shape's own center.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shapecomp::grid::{PixelGrid, ShapeMask};
use shapecomp::{pgm, Error, Result};

/// Slack for the closed inclusion test, so centers on a rotated edge count.
const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSize {
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Rectangle {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        #[serde(default)]
        angle: f64,
    },
    Disc {
        cx: f64,
        cy: f64,
        r: f64,
    },
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        #[serde(default)]
        angle: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// A PGM mask (nonzero = inside), path relative to the dictionary file.
    Raster {
        file: String,
        #[serde(default)]
        offset: [i64; 2],
        #[serde(default)]
        angle: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub label: String,
    #[serde(flatten)]
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionarySpec {
    pub grid: GridSize,
    pub entries: Vec<Entry>,
}

impl DictionarySpec {
    pub fn pixel_grid(&self) -> Result<PixelGrid> {
        PixelGrid::new(self.grid.width, self.grid.height)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.label.as_str()).collect()
    }

    /// Rasterizes every entry in file order; raster files resolve against `base`.
    pub fn rasterize(&self, base: &Path) -> Result<Vec<ShapeMask>> {
        let grid = self.pixel_grid()?;
        self.entries.iter().map(|e| rasterize(e, grid, base)).collect()
    }
}

fn entry_error(label: &str, message: impl Into<String>) -> Error {
    Error::DictionaryEntry {
        label: label.to_string(),
        message: message.into(),
    }
}

pub fn parse_dictionary(text: &str) -> Result<DictionarySpec> {
    let spec: DictionarySpec = serde_json::from_str(text).map_err(|e| Error::DictionarySyntax {
        line: e.line(),
        message: e.to_string(),
    })?;
    spec.pixel_grid()?;
    let mut seen = HashSet::new();
    for entry in &spec.entries {
        if !seen.insert(entry.label.as_str()) {
            return Err(entry_error(&entry.label, "duplicate label"));
        }
        validate(entry)?;
    }
    Ok(spec)
}

pub fn render_dictionary(spec: &DictionarySpec) -> String {
    let mut text = serde_json::to_string_pretty(spec).expect("dictionary serializes");
    text.push('\n');
    text
}

fn validate(entry: &Entry) -> Result<()> {
    let bad = |m: &str| Err(entry_error(&entry.label, m));
    let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
    match &entry.shape {
        Shape::Rectangle { x, y, w, h, angle } => {
            if !finite(&[*x, *y, *w, *h, *angle]) {
                return bad("non-finite parameter");
            }
            if *w <= 0.0 || *h <= 0.0 {
                return bad("width and height must be positive");
            }
        }
        Shape::Disc { cx, cy, r } => {
            if !finite(&[*cx, *cy, *r]) || *r <= 0.0 {
                return bad("radius must be positive and finite");
            }
        }
        Shape::Ellipse { cx, cy, rx, ry, angle } => {
            if !finite(&[*cx, *cy, *rx, *ry, *angle]) || *rx <= 0.0 || *ry <= 0.0 {
                return bad("radii must be positive and finite");
            }
        }
        Shape::Polygon { vertices } => {
            if vertices.len() < 3 {
                return bad("polygon needs at least 3 vertices");
            }
            if !vertices.iter().all(|v| finite(v)) {
                return bad("non-finite vertex");
            }
        }
        Shape::Raster { file, angle, .. } => {
            if file.is_empty() {
                return bad("empty raster file reference");
            }
            if !angle.is_finite() {
                return bad("non-finite angle");
            }
        }
    }
    Ok(())
}

/// `(cos, sin)` of `degrees`, exact for multiples of 90.
fn cos_sin(degrees: f64) -> (f64, f64) {
    let turns = degrees / 90.0;
    if turns == turns.round() {
        match (turns.round() as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        let r = degrees.to_radians();
        (r.cos(), r.sin())
    }
}

/// Maps a grid point into the shape's unrotated frame. With y pointing down,
/// a displayed counter-clockwise turn by θ is `(dx, dy) -> (dx cos + dy sin,
/// -dx sin + dy cos)`, so the inverse applies the opposite sign.
fn unrotate(px: f64, py: f64, cx: f64, cy: f64, (c, s): (f64, f64)) -> (f64, f64) {
    let (dx, dy) = (px - cx, py - cy);
    (cx + dx * c - dy * s, cy + dx * s + dy * c)
}

/// Bounding box after rotation, clipped to the grid: `(x0, y0, x1, y1)` exclusive.
fn pixel_window(grid: PixelGrid, corners: &[(f64, f64)]) -> (usize, usize, usize, usize) {
    let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| corners.iter().map(pick).fold(init, f);
    let clamp = |v: f64, hi: usize| v.max(0.0).min(hi as f64) as usize;
    let x0 = clamp(fold(f64::min, f64::INFINITY, |c| c.0).floor() - 1.0, grid.width());
    let y0 = clamp(fold(f64::min, f64::INFINITY, |c| c.1).floor() - 1.0, grid.height());
    let x1 = clamp(fold(f64::max, f64::NEG_INFINITY, |c| c.0).ceil() + 1.0, grid.width());
    let y1 = clamp(fold(f64::max, f64::NEG_INFINITY, |c| c.1).ceil() + 1.0, grid.height());
    (x0, y0, x1, y1)
}

fn rotated_box(cx: f64, cy: f64, hw: f64, hh: f64, rot: (f64, f64)) -> Vec<(f64, f64)> {
    // Rotating forward is unrotating by the conjugate.
    let fwd = (rot.0, -rot.1);
    [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)]
        .iter()
        .map(|&(dx, dy)| unrotate(cx + dx, cy + dy, cx, cy, fwd))
        .collect()
}

fn collect(
    grid: PixelGrid,
    window: (usize, usize, usize, usize),
    label: &str,
    mut inside: impl FnMut(f64, f64) -> bool,
) -> Result<ShapeMask> {
    let (x0, y0, x1, y1) = window;
    let mut pixels = Vec::new();
    for y in y0..y1 {
        for x in x0..x1 {
            if inside(x as f64 + 0.5, y as f64 + 0.5) {
                pixels.push(grid.index(x, y));
            }
        }
    }
    if pixels.is_empty() {
        return Err(entry_error(label, "rasterizes to an empty mask"));
    }
    ShapeMask::new(grid, pixels)
}

fn point_on_segment(p: (f64, f64), a: [f64; 2], b: [f64; 2]) -> bool {
    let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
    let (fx, fy) = (p.0 - a[0], p.1 - a[1]);
    let cross = ex * fy - ey * fx;
    let len2 = ex * ex + ey * ey;
    if cross.abs() > EDGE_TOL * len2.sqrt().max(1.0) {
        return false;
    }
    let dot = ex * fx + ey * fy;
    dot >= -EDGE_TOL && dot <= len2 + EDGE_TOL
}

/// Closed point-in-polygon: boundary points count, interior by even-odd.
fn in_polygon(p: (f64, f64), v: &[[f64; 2]]) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if point_on_segment(p, a, b) {
            return true;
        }
        if (a[1] > p.1) != (b[1] > p.1) {
            let x = a[0] + (p.1 - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn rasterize(entry: &Entry, grid: PixelGrid, base: &Path) -> Result<ShapeMask> {
    let label = entry.label.as_str();
    match &entry.shape {
        Shape::Rectangle { x, y, w, h, angle } => {
            let (hw, hh) = (w / 2.0, h / 2.0);
            let (cx, cy) = (x + hw, y + hh);
            let rot = cos_sin(*angle);
            let window = pixel_window(grid, &rotated_box(cx, cy, hw, hh, rot));
            collect(grid, window, label, |px, py| {
                let (ux, uy) = unrotate(px, py, cx, cy, rot);
                (ux - cx).abs() <= hw + EDGE_TOL && (uy - cy).abs() <= hh + EDGE_TOL
            })
        }
        Shape::Disc { cx, cy, r } => {
            let window = pixel_window(grid, &[(cx - r, cy - r), (cx + r, cy + r)]);
            collect(grid, window, label, |px, py| (px - cx).powi(2) + (py - cy).powi(2) <= r * r + EDGE_TOL)
        }
        Shape::Ellipse { cx, cy, rx, ry, angle } => {
            let rot = cos_sin(*angle);
            let window = pixel_window(grid, &rotated_box(*cx, *cy, *rx, *ry, rot));
            collect(grid, window, label, |px, py| {
                let (ux, uy) = unrotate(px, py, *cx, *cy, rot);
                ((ux - cx) / rx).powi(2) + ((uy - cy) / ry).powi(2) <= 1.0 + EDGE_TOL
            })
        }
        Shape::Polygon { vertices } => {
            let corners: Vec<(f64, f64)> = vertices.iter().map(|v| (v[0], v[1])).collect();
            let window = pixel_window(grid, &corners);
            collect(grid, window, label, |px, py| in_polygon((px, py), vertices))
        }
        Shape::Raster { file, offset, angle } => {
            let path = base.join(file);
            let bytes = std::fs::read(&path).map_err(|e| entry_error(label, format!("{}: {e}", path.display())))?;
            let source = pgm::decode_mask(&bytes).map_err(|e| entry_error(label, format!("{}: {e}", path.display())))?;
            let sg = source.grid();
            let (hw, hh) = (sg.width() as f64 / 2.0, sg.height() as f64 / 2.0);
            let (cx, cy) = (offset[0] as f64 + hw, offset[1] as f64 + hh);
            let rot = cos_sin(*angle);
            let window = pixel_window(grid, &rotated_box(cx, cy, hw, hh, rot));
            collect(grid, window, label, |px, py| {
                let (ux, uy) = unrotate(px, py, cx, cy, rot);
                let (sx, sy) = (ux - offset[0] as f64, uy - offset[1] as f64);
                if sx < 0.0 || sy < 0.0 {
                    return false;
                }
                let (ix, iy) = (sx.floor() as usize, sy.floor() as usize);
                ix < sg.width() && iy < sg.height() && source.contains(sg.index(ix, iy))
            })
        }
    }
}

/// Squares of `size x size` centered on a `cols x rows` lattice spread
/// uniformly over a `width x height` grid (spacing `width/cols`,
/// `height/rows`), clipped to the grid. Corners snap to whole pixels so every
/// unclipped square covers exactly `size^2` pixels.
pub fn block_grid(width: usize, height: usize, cols: usize, rows: usize, size: usize) -> DictionarySpec {
    let (sx, sy) = (width as f64 / cols as f64, height as f64 / rows as f64);
    let half = size as f64 / 2.0;
    let mut entries = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            let cx = (c as f64 + 0.5) * sx;
            let cy = (r as f64 + 0.5) * sy;
            entries.push(Entry {
                label: format!("b{r:02}_{c:02}"),
                shape: Shape::Rectangle {
                    x: (cx - half).round(),
                    y: (cy - half).round(),
                    w: size as f64,
                    h: size as f64,
                    angle: 0.0,
                },
            });
        }
    }
    DictionarySpec {
        grid: GridSize { width, height },
        entries,
    }
}

/// The 1200-square block dictionary: 15x15 squares on a 40x30 lattice over 120x100.
pub fn default_block_grid() -> DictionarySpec {
    block_grid(120, 100, 40, 30, 15)
}
