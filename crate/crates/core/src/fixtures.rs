//! Small reference geometries used by tests, examples and the CLI demos.
//!
//! Layouts given by constructor lists are realized as one 2x2 pixel block
//! per constructor; shape `j` is the union of the blocks whose constructor
//! has bit `j` set. This reproduces an exact bearing matrix without having
//! to find a planar drawing.

use crate::dsd::CompositionSpec;
use crate::grid::{InhomogeneityField, PixelGrid, ShapeMask};

const BLOCK: usize = 2;

/// One 2x2 block per constructor row, laid out left to right in rows of
/// eight blocks with one pixel of spacing.
pub fn from_constructors(rows: &[&[u8]]) -> Vec<ShapeMask> {
    let n = rows.first().map_or(0, |r| r.len());
    let per_line = 8;
    let stride = BLOCK + 1;
    let lines = rows.len().div_ceil(per_line);
    let grid = PixelGrid::new(per_line * stride, lines.max(1) * stride).expect("positive size");
    let mut pixels = vec![Vec::new(); n];
    for (b, row) in rows.iter().enumerate() {
        let (x0, y0) = ((b % per_line) * stride, (b / per_line) * stride);
        for (j, &bit) in row.iter().enumerate() {
            if bit == 1 {
                for dy in 0..BLOCK {
                    for dx in 0..BLOCK {
                        pixels[j].push(grid.index(x0 + dx, y0 + dy));
                    }
                }
            }
        }
    }
    pixels
        .into_iter()
        .map(|p| ShapeMask::new(grid, p).expect("every shape owns a block"))
        .collect()
}

fn spec(include: &[usize], exclude: &[usize]) -> CompositionSpec {
    CompositionSpec::new(include.to_vec(), exclude.to_vec()).expect("valid fixture spec")
}

/// Three overlapping rectangles on a 12x8 grid whose decomposition has five
/// shapelets: `S3` lies inside `S1` and straddles the edge of `S2`.
pub fn three_shape_dsd() -> Vec<ShapeMask> {
    let grid = PixelGrid::new(12, 8).expect("positive size");
    vec![
        ShapeMask::rect(grid, 0, 0, 8, 6).expect("on grid"),
        ShapeMask::rect(grid, 5, 2, 7, 6).expect("on grid"),
        ShapeMask::rect(grid, 2, 3, 5, 2).expect("on grid"),
    ]
}

/// `(S1 ∪ S2) \ S3` on [`three_shape_dsd`].
pub fn three_shape_spec() -> CompositionSpec {
    spec(&[0, 1], &[2])
}

/// Four shapes whose composition `(S1 ∪ S2) \ (S3 ∪ S4)` links to
/// `α = (1, 1, -2, -2)` through eight exclusion inequalities.
pub fn four_shape_linkage() -> Vec<ShapeMask> {
    from_constructors(&[
        &[1, 0, 0, 0],
        &[0, 1, 0, 0],
        &[1, 1, 0, 0],
        &[0, 0, 1, 0],
        &[1, 0, 1, 0],
        &[1, 1, 1, 0],
        &[0, 0, 0, 1],
        &[1, 0, 0, 1],
        &[1, 1, 0, 1],
        &[0, 0, 1, 1],
        &[0, 1, 0, 1],
    ])
}

pub fn four_shape_spec() -> CompositionSpec {
    spec(&[0, 1], &[2, 3])
}

/// Five shapes whose composition `(S1 ∪ S2 ∪ S3) \ (S4 ∪ S5)` has a whole
/// edge of linkage maximizers (`α4 + α5 = -3`, `α4, α5 <= -1`).
pub fn five_rectangle_degenerate() -> Vec<ShapeMask> {
    from_constructors(&[
        &[1, 0, 0, 0, 0],
        &[0, 1, 0, 0, 0],
        &[0, 0, 1, 0, 0],
        &[1, 1, 1, 0, 0],
        &[1, 1, 1, 1, 1],
        &[1, 0, 0, 1, 0],
        &[0, 1, 0, 0, 1],
    ])
}

pub fn five_rectangle_spec() -> CompositionSpec {
    spec(&[0, 1, 2], &[3, 4])
}

/// The seven-cell, four-shape bearing matrix of the certificate example.
pub const EXAMPLE_CELLS: [[u8; 4]; 7] = [
    [1, 0, 0, 1],
    [1, 1, 0, 0],
    [1, 0, 1, 0],
    [1, 1, 1, 0],
    [0, 1, 0, 0],
    [0, 1, 1, 0],
    [0, 0, 1, 0],
];

/// Cell integrals for the certificate example: the first cell is the object
/// (`p = 0, q = 1`), every other cell is background (`p = 1, q = 0`).
pub fn example_cell_integrals() -> (Vec<f64>, Vec<f64>) {
    let p = (0..7).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect();
    let q = (0..7).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    (p, q)
}

/// A planar realization of [`EXAMPLE_CELLS`] on a 9x9 grid: three squares
/// in a Venn layout plus `S4`, which equals the region covered by `S1` only.
pub fn example_venn() -> Vec<ShapeMask> {
    let grid = PixelGrid::new(9, 9).expect("positive size");
    let s1 = ShapeMask::rect(grid, 0, 0, 6, 6).expect("on grid");
    let s2 = ShapeMask::rect(grid, 3, 0, 6, 6).expect("on grid");
    let s3 = ShapeMask::rect(grid, 1, 3, 7, 6).expect("on grid");
    let s4 = ShapeMask::from_fn(grid, |x, y| {
        let i = grid.index(x, y);
        s1.contains(i) && !s2.contains(i) && !s3.contains(i)
    })
    .expect("nonempty private region");
    vec![s1, s2, s3, s4]
}

/// Binary field for [`example_venn`]: object on `S4`, background elsewhere.
pub fn example_venn_field() -> InhomogeneityField {
    let shapes = example_venn();
    let grid = shapes[0].grid();
    let diff: Vec<f64> = (0..grid.len())
        .map(|i| if shapes[3].contains(i) { -1.0 } else { 1.0 })
        .collect();
    InhomogeneityField::from_difference(grid, &diff).expect("finite field")
}

/// A four-piece puzzle: four L-tetrominoes (each cell a 2x2 pixel block)
/// tile an 8x8 pad at `(4, 4)` on a 16x16 grid. The returned dictionary
/// lists the four true placements first, then twelve decoys (translated or
/// rotated copies) that each stick out of the pad.
pub struct Puzzle {
    pub dictionary: Vec<ShapeMask>,
    pub pad: ShapeMask,
    pub pieces: usize,
}

type Cells = Vec<(i32, i32)>;

fn rotate_cells(cells: &[(i32, i32)]) -> Cells {
    // 90 degrees counter-clockwise, renormalized to nonnegative coordinates.
    let turned: Cells = cells.iter().map(|&(x, y)| (y, -x)).collect();
    let min_x = turned.iter().map(|c| c.0).min().unwrap_or(0);
    let min_y = turned.iter().map(|c| c.1).min().unwrap_or(0);
    turned.iter().map(|&(x, y)| (x - min_x, y - min_y)).collect()
}

pub fn mini_puzzle() -> Puzzle {
    let grid = PixelGrid::new(16, 16).expect("positive size");
    let origin = (4i32, 4i32);
    let pieces: [Cells; 4] = [
        vec![(0, 0), (0, 1), (1, 1), (2, 1)],
        vec![(1, 0), (2, 0), (3, 0), (3, 1)],
        vec![(0, 2), (1, 2), (2, 2), (0, 3)],
        vec![(3, 2), (1, 3), (2, 3), (3, 3)],
    ];
    let place = |cells: &[(i32, i32)], dx: i32, dy: i32| -> Option<ShapeMask> {
        let mut pixels = Vec::new();
        for &(cx, cy) in cells {
            for by in 0..2 {
                for bx in 0..2 {
                    let x = origin.0 + 2 * cx + dx + bx;
                    let y = origin.1 + 2 * cy + dy + by;
                    if x < 0 || y < 0 || x >= 16 || y >= 16 {
                        return None;
                    }
                    pixels.push(grid.index(x as usize, y as usize));
                }
            }
        }
        ShapeMask::new(grid, pixels).ok()
    };
    let pad = ShapeMask::rect(grid, 4, 4, 8, 8).expect("on grid");
    let mut dictionary: Vec<ShapeMask> = pieces.iter().map(|c| place(c, 0, 0).expect("inside")).collect();

    let shifts = [(-2, 0), (2, 0), (0, -2), (0, 2), (-1, -1), (1, 1), (3, -1), (-3, 1)];
    for (k, cells) in pieces.iter().enumerate() {
        let rotated = rotate_cells(cells);
        let mut candidates = Vec::new();
        for &(dx, dy) in &shifts {
            candidates.push(place(cells, dx, dy));
            candidates.push(place(&rotated, dx + 2 * (k as i32 % 2), dy + 2 * (k as i32 / 2)));
        }
        let mut added = 0;
        for decoy in candidates.into_iter().flatten() {
            let protrudes = decoy.pixels().iter().any(|&x| !pad.contains(x));
            if protrudes && !dictionary.contains(&decoy) {
                dictionary.push(decoy);
                added += 1;
                if added == 3 {
                    break;
                }
            }
        }
    }
    Puzzle {
        dictionary,
        pad,
        pieces: 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_blocks_reproduce_rows() {
        let shapes = five_rectangle_degenerate();
        let d = crate::dsd::decompose(&shapes).unwrap();
        assert_eq!(d.bearing.row_count(), 7);
    }

    #[test]
    fn venn_layout_has_the_seven_example_cells() {
        let d = crate::dsd::decompose(&example_venn()).unwrap();
        let mut expected: Vec<Vec<bool>> = EXAMPLE_CELLS
            .iter()
            .map(|r| r.iter().map(|&b| b == 1).collect())
            .collect();
        expected.sort();
        let got: Vec<Vec<bool>> = d.bearing.rows().iter().map(|r| r.to_bits()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn puzzle_pieces_tile_the_pad_and_decoys_protrude() {
        let puzzle = mini_puzzle();
        assert_eq!(puzzle.dictionary.len(), 16);
        let mut covered: Vec<usize> = puzzle.dictionary[..4].iter().flat_map(|s| s.pixels().to_vec()).collect();
        covered.sort_unstable();
        assert_eq!(covered, puzzle.pad.pixels());
        for decoy in &puzzle.dictionary[4..] {
            assert_eq!(decoy.len(), 16);
            assert!(decoy.pixels().iter().any(|&x| !puzzle.pad.contains(x)));
        }
    }
}
