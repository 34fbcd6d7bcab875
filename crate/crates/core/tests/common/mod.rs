//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapecomp::dsd::{self, CompositionSpec};
use shapecomp::grid::{self, Image, InhomogeneityField, PixelGrid, Region, ShapeMask};
use shapecomp::linkage;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rect(rng: &mut ChaCha8Rng, grid: PixelGrid, min: usize, max: usize) -> ShapeMask {
    let w = rng.gen_range(min..=max.min(grid.width()));
    let h = rng.gen_range(min..=max.min(grid.height()));
    let x = rng.gen_range(0..=grid.width() - w);
    let y = rng.gen_range(0..=grid.height() - h);
    ShapeMask::rect(grid, x, y, w, h).unwrap()
}

/// Binary image: 0 on `sigma`, 1 elsewhere, with levels 0.25 / 0.75, so
/// the lucid object condition holds for `sigma`.
pub fn binary_field(sigma: &Region) -> InhomogeneityField {
    let grid = sigma.grid();
    let values = (0..grid.len()).map(|x| if sigma.contains(x) { 0.0 } else { 1.0 }).collect();
    let image = Image::new(grid, values).unwrap();
    grid::chan_vese_measures(&image, 0.25, 0.75).unwrap()
}

pub fn random_field(rng: &mut ChaCha8Rng, grid: PixelGrid) -> InhomogeneityField {
    let pi_in = (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let pi_ex = (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    InhomogeneityField::new(grid, pi_in, pi_ex).unwrap()
}

pub struct DisjointInstance {
    pub field: InhomogeneityField,
    pub shapes: Vec<ShapeMask>,
    pub s: usize,
}

/// Up to twelve pairwise disjoint rectangles (one per 8x10 slot of a 32x32
/// grid) over a noisy field with a per-shape bias. Rejects instances where
/// the `s`-th and `(s+1)`-th most negative net values are not separated,
/// where a net value is near zero, or where a shape has no positive part.
pub fn disjoint_instance(rng: &mut ChaCha8Rng) -> DisjointInstance {
    let grid = PixelGrid::new(32, 32).unwrap();
    loop {
        let n = rng.gen_range(1..=12);
        let mut slots: Vec<usize> = (0..12).collect();
        for i in (1..slots.len()).rev() {
            slots.swap(i, rng.gen_range(0..=i));
        }
        let shapes: Vec<ShapeMask> = slots[..n]
            .iter()
            .map(|&slot| {
                let (sx, sy) = ((slot % 4) * 8, (slot / 4) * 10);
                let w = rng.gen_range(2..=7);
                let h = rng.gen_range(2..=9);
                let x = sx + rng.gen_range(0..=7 - w);
                let y = sy + rng.gen_range(0..=9 - h);
                ShapeMask::rect(grid, x, y, w, h).unwrap()
            })
            .collect();
        let mut diff: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for shape in &shapes {
            let bias = rng.gen_range(-0.8..0.6);
            for &x in shape.pixels() {
                diff[x] += bias;
            }
        }
        let field = InhomogeneityField::from_difference(grid, &diff).unwrap();
        let ints = grid::shape_integrals(&field, &shapes).unwrap();
        let s = rng.gen_range(1..=n);
        if ints.p.iter().any(|&p| p < 1e-3) {
            continue;
        }
        let mut nets: Vec<f64> = (0..n).map(|j| ints.net(j)).collect();
        if nets.iter().any(|v| v.abs() < 1e-3) {
            continue;
        }
        nets.sort_by(f64::total_cmp);
        let m = nets.iter().filter(|&&v| v < 0.0).count();
        if s < m && nets[s] - nets[s - 1] < 1e-3 {
            continue;
        }
        return DisjointInstance { field, shapes, s };
    }
}

pub struct CompositionInstance {
    pub shapes: Vec<ShapeMask>,
    pub spec: CompositionSpec,
    pub sigma: Region,
}

impl CompositionInstance {
    pub fn size(&self) -> usize {
        self.spec.size()
    }
}

/// Random non-redundant basic composition on a 24x24 grid with `n⊕ <= 3`,
/// `n⊖ <= 2` and up to `max_exterior` extra shapes, in shuffled order.
pub fn basic_composition(rng: &mut ChaCha8Rng, max_exterior: usize) -> CompositionInstance {
    let grid = PixelGrid::new(24, 24).unwrap();
    loop {
        let n_plus = rng.gen_range(1..=3);
        let n_minus = rng.gen_range(0..=2);
        let mut members: Vec<ShapeMask> = (0..n_plus).map(|_| random_rect(rng, grid, 4, 12)).collect();
        let union: Vec<usize> = {
            let mut u: Vec<usize> = members.iter().flat_map(|s| s.pixels().to_vec()).collect();
            u.sort_unstable();
            u.dedup();
            u
        };
        for _ in 0..n_minus {
            // Anchor each excluded shape on a pixel of the included union.
            let anchor = union[rng.gen_range(0..union.len())];
            let (ax, ay) = grid.coords(anchor);
            let w = rng.gen_range(2..=8usize);
            let h = rng.gen_range(2..=8usize);
            let x = ax.saturating_sub(rng.gen_range(0..w)).min(grid.width() - w);
            let y = ay.saturating_sub(rng.gen_range(0..h)).min(grid.height() - h);
            members.push(ShapeMask::rect(grid, x, y, w, h).unwrap());
        }
        let n_ext = rng.gen_range(0..=max_exterior);
        let exterior: Vec<ShapeMask> = (0..n_ext).map(|_| random_rect(rng, grid, 2, 8)).collect();

        let mut shapes: Vec<ShapeMask> = members.into_iter().chain(exterior).collect();
        let mut order: Vec<usize> = (0..shapes.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        // order[k] = new position of original shape k.
        let mut shuffled = vec![None; shapes.len()];
        for (k, shape) in shapes.drain(..).enumerate() {
            shuffled[order[k]] = Some(shape);
        }
        let shapes: Vec<ShapeMask> = shuffled.into_iter().map(Option::unwrap).collect();
        if (0..shapes.len()).any(|a| (a + 1..shapes.len()).any(|b| shapes[a] == shapes[b])) {
            continue;
        }
        let include: Vec<usize> = (0..n_plus).map(|k| order[k]).collect();
        let exclude: Vec<usize> = (n_plus..n_plus + n_minus).map(|k| order[k]).collect();
        let spec = CompositionSpec::new(include, exclude).unwrap();
        if !dsd::is_nonredundant(&shapes, &spec).unwrap() {
            continue;
        }
        let Ok(report) = linkage::is_basic(&shapes, &spec) else {
            continue;
        };
        if !report.basic {
            continue;
        }
        let sigma = dsd::compose_region(&shapes, &spec).unwrap();
        if sigma.is_empty() {
            continue;
        }
        return CompositionInstance { shapes, spec, sigma };
    }
}

/// Whether any composition other than `spec` with at most `spec.size()`
/// shapes produces the same region.
pub fn has_alternative_representation(shapes: &[ShapeMask], spec: &CompositionSpec) -> bool {
    let n = shapes.len();
    let s = spec.size();
    let target = dsd::compose_region(shapes, spec).unwrap();
    let full = (1u32 << n) - 1;
    for plus in 1..=full {
        if plus.count_ones() as usize > s {
            continue;
        }
        let rest = full & !plus;
        let mut minus = rest;
        loop {
            if (plus.count_ones() + minus.count_ones()) as usize <= s {
                let inc: Vec<usize> = (0..n).filter(|j| plus >> j & 1 == 1).collect();
                let exc: Vec<usize> = (0..n).filter(|j| minus >> j & 1 == 1).collect();
                let other = CompositionSpec::new(inc, exc).unwrap();
                if &other != spec && dsd::compose_region(shapes, &other).unwrap() == target {
                    return true;
                }
            }
            if minus == 0 {
                break;
            }
            minus = (minus - 1) & rest;
        }
    }
    false
}

/// Basic composition passing the recovery check whose region has no other
/// representation of the same or smaller size.
pub fn recoverable_composition(rng: &mut ChaCha8Rng) -> CompositionInstance {
    loop {
        let inst = basic_composition(rng, 5);
        let Ok(report) = shapecomp::certify::verify_recovery_conditions(&inst.shapes, &inst.spec) else {
            continue;
        };
        if report.verdict && !has_alternative_representation(&inst.shapes, &inst.spec) {
            return inst;
        }
    }
}
