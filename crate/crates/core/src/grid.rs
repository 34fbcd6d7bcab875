//! Pixel-grid domain model: images, shape masks, inhomogeneity measures and
//! the per-shape integrals derived from them.
//!
//! All integrals are unit-weight pixel sums. Unobserved pixels carry zero in
//! both measures, so they never contribute to any integral.

use crate::error::{Error, Result};

/// A `width x height` raster; pixel `(x, y)` has index `y * width + x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelGrid {
    width: usize,
    height: usize,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub(crate) fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub(crate) fn ensure_same(&self, other: &PixelGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }
}

/// Grayscale image with an optional observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    grid: PixelGrid,
    values: Vec<f64>,
    observed: Option<Vec<bool>>,
}

impl Image {
    pub fn new(grid: PixelGrid, values: Vec<f64>) -> Result<Self> {
        Self::with_observed(grid, values, None)
    }

    pub fn with_observed(
        grid: PixelGrid,
        values: Vec<f64>,
        observed: Option<Vec<bool>>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ValueCount {
                values: values.len(),
                pixels: grid.len(),
            });
        }
        if let Some(mask) = &observed {
            if mask.len() != grid.len() {
                return Err(Error::ValueCount {
                    values: mask.len(),
                    pixels: grid.len(),
                });
            }
        }
        let image = Self {
            grid,
            values,
            observed,
        };
        if let Some(i) = (0..grid.len()).find(|&i| image.is_observed(i) && !image.values[i].is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(image)
    }

    pub fn grid(&self) -> PixelGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_observed(&self, index: usize) -> bool {
        self.observed.as_ref().is_none_or(|m| m[index])
    }

    pub fn observed_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.grid.len())
            .filter(|&i| self.is_observed(i))
            .map(|i| self.values[i])
    }
}

/// A nonempty set of pixels on a grid; pixel indices are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShapeMask {
    grid: PixelGrid,
    pixels: Vec<usize>,
}

impl ShapeMask {
    pub fn new(grid: PixelGrid, mut pixels: Vec<usize>) -> Result<Self> {
        pixels.sort_unstable();
        pixels.dedup();
        if pixels.is_empty() {
            return Err(Error::EmptyMask);
        }
        if let Some(&last) = pixels.last() {
            if last >= grid.len() {
                return Err(Error::OffGrid {
                    index: last,
                    len: grid.len(),
                });
            }
        }
        Ok(Self { grid, pixels })
    }

    pub fn from_fn(grid: PixelGrid, mut inside: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let pixels = (0..grid.len())
            .filter(|&i| {
                let (x, y) = grid.coords(i);
                inside(x, y)
            })
            .collect();
        Self::new(grid, pixels)
    }

    /// Axis-aligned block `[x0, x0 + w) x [y0, y0 + h)`, clipped to the grid.
    pub fn rect(grid: PixelGrid, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        Self::from_fn(grid, |x, y| x >= x0 && x < x0 + w && y >= y0 && y < y0 + h)
    }

    pub fn grid(&self) -> PixelGrid {
        self.grid
    }

    pub fn pixels(&self) -> &[usize] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.pixels.binary_search(&index).is_ok()
    }

    pub fn to_bitmap(&self) -> Vec<bool> {
        let mut bits = vec![false; self.grid.len()];
        for &p in &self.pixels {
            bits[p] = true;
        }
        bits
    }

    pub fn is_disjoint(&self, other: &ShapeMask) -> bool {
        let (mut a, mut b) = (0, 0);
        while a < self.pixels.len() && b < other.pixels.len() {
            match self.pixels[a].cmp(&other.pixels[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }
}

/// A pixel set that may be empty (compositions and level sets can vanish).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    grid: PixelGrid,
    pixels: Vec<usize>,
}

impl Region {
    pub fn empty(grid: PixelGrid) -> Self {
        Self {
            grid,
            pixels: Vec::new(),
        }
    }

    pub(crate) fn from_sorted(grid: PixelGrid, pixels: Vec<usize>) -> Self {
        debug_assert!(pixels.windows(2).all(|w| w[0] < w[1]));
        Self { grid, pixels }
    }

    pub fn from_bitmap(grid: PixelGrid, bits: &[bool]) -> Self {
        let pixels = bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Self { grid, pixels }
    }

    pub fn grid(&self) -> PixelGrid {
        self.grid
    }

    pub fn pixels(&self) -> &[usize] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.pixels.binary_search(&index).is_ok()
    }

    pub fn to_bitmap(&self) -> Vec<bool> {
        let mut bits = vec![false; self.grid.len()];
        for &p in &self.pixels {
            bits[p] = true;
        }
        bits
    }

    pub fn into_mask(self) -> Result<ShapeMask> {
        ShapeMask::new(self.grid, self.pixels)
    }
}

impl From<ShapeMask> for Region {
    fn from(mask: ShapeMask) -> Self {
        Self {
            grid: mask.grid,
            pixels: mask.pixels,
        }
    }
}

/// Per-pixel inside/outside costs. Both measures are nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct InhomogeneityField {
    grid: PixelGrid,
    pi_in: Vec<f64>,
    pi_ex: Vec<f64>,
}

impl InhomogeneityField {
    pub fn new(grid: PixelGrid, pi_in: Vec<f64>, pi_ex: Vec<f64>) -> Result<Self> {
        for v in [&pi_in, &pi_ex] {
            if v.len() != grid.len() {
                return Err(Error::ValueCount {
                    values: v.len(),
                    pixels: grid.len(),
                });
            }
        }
        if let Some(i) = (0..grid.len()).find(|&i| {
            !(pi_in[i].is_finite() && pi_ex[i].is_finite() && pi_in[i] >= 0.0 && pi_ex[i] >= 0.0)
        }) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, pi_in, pi_ex })
    }

    /// Field whose difference `pi_in - pi_ex` equals `diff`, split into
    /// positive and negative parts.
    pub fn from_difference(grid: PixelGrid, diff: &[f64]) -> Result<Self> {
        let pi_in = diff.iter().map(|&d| d.max(0.0)).collect();
        let pi_ex = diff.iter().map(|&d| (-d).max(0.0)).collect();
        Self::new(grid, pi_in, pi_ex)
    }

    pub fn grid(&self) -> PixelGrid {
        self.grid
    }

    pub fn pi_in(&self) -> &[f64] {
        &self.pi_in
    }

    pub fn pi_ex(&self) -> &[f64] {
        &self.pi_ex
    }

    /// `pi_in(x) - pi_ex(x)`.
    pub fn diff(&self, index: usize) -> f64 {
        self.pi_in[index] - self.pi_ex[index]
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(
            self.grid,
            self.pi_in.iter().map(|v| v * k).collect(),
            self.pi_ex.iter().map(|v| v * k).collect(),
        )
    }
}

/// Positive and negative parts of `pi_in - pi_ex` integrated over each shape
/// (or each cell, when used at cell level).
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeIntegrals {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl ShapeIntegrals {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// `P_j - Q_j`, the composition cost of shape `j` on its own.
    pub fn net(&self, j: usize) -> f64 {
        self.p[j] - self.q[j]
    }
}

/// Chan-Vese measures `(u - u_in)^2` and `(u - u_ex)^2`; unobserved pixels
/// get zero in both.
pub fn chan_vese_measures(image: &Image, u_in: f64, u_ex: f64) -> Result<InhomogeneityField> {
    if u_in == u_ex {
        return Err(Error::DegenerateLevels(u_in));
    }
    let n = image.grid().len();
    let mut pi_in = vec![0.0; n];
    let mut pi_ex = vec![0.0; n];
    for i in 0..n {
        if image.is_observed(i) {
            let u = image.values()[i];
            pi_in[i] = (u - u_in).powi(2);
            pi_ex[i] = (u - u_ex).powi(2);
        }
    }
    InhomogeneityField::new(image.grid(), pi_in, pi_ex)
}

/// Empirical quantiles of the observed values (linear interpolation between
/// order statistics at position `p * (n - 1)`). The low quantile is the
/// inside level: objects are dark on a bright background.
pub fn quantile_levels(image: &Image, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(Error::InvalidQuantiles { lo, hi });
    }
    let mut values: Vec<f64> = image.observed_values().collect();
    if values.is_empty() {
        return Err(Error::NoObservedPixels);
    }
    values.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let pos = p * (values.len() - 1) as f64;
        let below = pos.floor() as usize;
        let above = pos.ceil() as usize;
        let frac = pos - below as f64;
        values[below] + frac * (values[above] - values[below])
    };
    Ok((at(lo), at(hi)))
}

pub fn shape_integrals(field: &InhomogeneityField, masks: &[ShapeMask]) -> Result<ShapeIntegrals> {
    let mut p = Vec::with_capacity(masks.len());
    let mut q = Vec::with_capacity(masks.len());
    for mask in masks {
        field.grid.ensure_same(&mask.grid())?;
        let (mut pj, mut qj) = (0.0, 0.0);
        for &x in mask.pixels() {
            let d = field.diff(x);
            if d > 0.0 {
                pj += d;
            } else {
                qj -= d;
            }
        }
        p.push(pj);
        q.push(qj);
    }
    Ok(ShapeIntegrals { p, q })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocReport {
    pub holds: bool,
    pub violations: usize,
}

/// Lucid object condition: `pi_in < pi_ex` on every pixel of `sigma` and
/// `pi_in > pi_ex` everywhere else. Ties count as violations.
pub fn loc_holds(field: &InhomogeneityField, sigma: &Region) -> LocReport {
    let inside = sigma.to_bitmap();
    let violations = (0..field.grid.len())
        .filter(|&i| {
            let d = field.diff(i);
            if inside[i] {
                d >= 0.0
            } else {
                d <= 0.0
            }
        })
        .count();
    LocReport {
        holds: violations == 0,
        violations,
    }
}
