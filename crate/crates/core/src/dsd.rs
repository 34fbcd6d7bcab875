//! Disjoint shape decomposition.
//!
//! Overlapping shapes are split into shapelets: maximal pixel sets sharing
//! one membership pattern (the constructor vector) across all shapes. The
//! stacked constructors form the bearing matrix, which maps shape
//! coefficients to constant values per shapelet.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::grid::{PixelGrid, Region, ShapeMask};

/// Binary membership signature over `len` shapes.
///
/// Bits are packed most-significant first so that comparing the word
/// vectors compares the bit sequences lexicographically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ConstructorVector {
    words: Vec<u64>,
    len: usize,
}

impl ConstructorVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            if b {
                v.set(j);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, j: usize) -> bool {
        self.words[j / 64] >> (63 - j % 64) & 1 == 1
    }

    pub fn set(&mut self, j: usize) {
        self.words[j / 64] |= 1 << (63 - j % 64);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices `j` with bit `j` set, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&j| self.get(j))
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len).map(|j| self.get(j)).collect()
    }

    /// Keeps only the listed coordinates, in the listed order.
    pub fn restrict(&self, columns: &[usize]) -> Self {
        let mut v = Self::zeros(columns.len());
        for (k, &j) in columns.iter().enumerate() {
            if self.get(j) {
                v.set(k);
            }
        }
        v
    }
}

impl Ord for ConstructorVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.words
            .cmp(&other.words)
            .then(self.len.cmp(&other.len))
    }
}

impl PartialOrd for ConstructorVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ConstructorVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for j in 0..self.len {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", u8::from(self.get(j)))?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shapelet {
    pub pixels: Vec<usize>,
    pub constructor: ConstructorVector,
}

/// Stacked constructor vectors, one row per shapelet (or cell).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BearingMatrix {
    rows: Vec<ConstructorVector>,
    shape_count: usize,
}

impl BearingMatrix {
    pub fn new(rows: Vec<ConstructorVector>, shape_count: usize) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != shape_count {
                return Err(Error::Dimension(format!(
                    "row {i} has {} columns, expected {shape_count}",
                    row.len()
                )));
            }
            if row.is_zero() {
                return Err(Error::Dimension(format!("row {i} is zero")));
            }
        }
        let mut sorted: Vec<&ConstructorVector> = rows.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Dimension("repeated bearing rows".into()));
        }
        Ok(Self { rows, shape_count })
    }

    /// Builds from a dense 0/1 table (rows of equal length).
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let shape_count = rows.first().map_or(0, Vec::len);
        let rows = rows
            .iter()
            .map(|r| ConstructorVector::from_bits(&r.iter().map(|&b| b != 0).collect::<Vec<_>>()))
            .collect();
        Self::new(rows, shape_count)
    }

    pub fn rows(&self) -> &[ConstructorVector] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn shape_count(&self) -> usize {
        self.shape_count
    }

    pub fn get(&self, row: usize, shape: usize) -> bool {
        self.rows[row].get(shape)
    }

    /// `beta = B alpha`.
    pub fn apply(&self, alpha: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.ones().map(|j| alpha[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| (0..self.shape_count).map(|j| f64::from(u8::from(r.get(j)))).collect())
            .collect()
    }

    /// Row-major 0/1 text, space separated, one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let cells: Vec<&str> = (0..self.shape_count)
                .map(|j| if r.get(j) { "1" } else { "0" })
                .collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_ascii_whitespace()
                    .map(|t| match t {
                        "0" => Ok(0u8),
                        "1" => Ok(1u8),
                        other => Err(Error::Dimension(format!("bad bearing entry '{other}'"))),
                    })
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_dense(&rows)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub shapelets: Vec<Shapelet>,
    pub bearing: BearingMatrix,
    /// For each shape `j`, the shapelets it contains (ascending).
    pub index_sets: Vec<Vec<usize>>,
}

fn common_grid(shapes: &[ShapeMask]) -> Result<PixelGrid> {
    let grid = shapes.first().ok_or(Error::EmptyShapeList)?.grid();
    for s in shapes {
        grid.ensure_same(&s.grid())?;
    }
    Ok(grid)
}

/// Groups the pixels of the union by their membership signature. Shapelets
/// come out in ascending lexicographic order of their constructors.
pub fn decompose(shapes: &[ShapeMask]) -> Result<Decomposition> {
    let grid = common_grid(shapes)?;
    let n = shapes.len();
    let mut signature: Vec<Option<ConstructorVector>> = vec![None; grid.len()];
    for (j, shape) in shapes.iter().enumerate() {
        for &x in shape.pixels() {
            signature[x]
                .get_or_insert_with(|| ConstructorVector::zeros(n))
                .set(j);
        }
    }
    let mut groups: BTreeMap<ConstructorVector, Vec<usize>> = BTreeMap::new();
    for (x, sig) in signature.into_iter().enumerate() {
        if let Some(sig) = sig {
            groups.entry(sig).or_default().push(x);
        }
    }
    let mut index_sets = vec![Vec::new(); n];
    let mut rows = Vec::with_capacity(groups.len());
    let mut shapelets = Vec::with_capacity(groups.len());
    for (i, (constructor, pixels)) in groups.into_iter().enumerate() {
        for j in constructor.ones() {
            index_sets[j].push(i);
        }
        rows.push(constructor.clone());
        shapelets.push(Shapelet {
            pixels,
            constructor,
        });
    }
    Ok(Decomposition {
        shapelets,
        bearing: BearingMatrix { rows, shape_count: n },
        index_sets,
    })
}

/// Index sets of a composition `(union of include) minus (union of exclude)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompositionSpec {
    include: Vec<usize>,
    exclude: Vec<usize>,
}

impl CompositionSpec {
    pub fn new(mut include: Vec<usize>, mut exclude: Vec<usize>) -> Result<Self> {
        include.sort_unstable();
        include.dedup();
        exclude.sort_unstable();
        exclude.dedup();
        if include.is_empty() {
            return Err(Error::InvalidComposition("include set is empty".into()));
        }
        if let Some(j) = include.iter().find(|j| exclude.binary_search(j).is_ok()) {
            return Err(Error::InvalidComposition(format!(
                "shape {j} is both included and excluded"
            )));
        }
        Ok(Self { include, exclude })
    }

    pub fn include(&self) -> &[usize] {
        &self.include
    }

    pub fn exclude(&self) -> &[usize] {
        &self.exclude
    }

    /// `include ∪ exclude`, ascending.
    pub fn members(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.include.iter().chain(&self.exclude).copied().collect();
        m.sort_unstable();
        m
    }

    pub fn size(&self) -> usize {
        self.include.len() + self.exclude.len()
    }

    pub fn check_indices(&self, shape_count: usize) -> Result<()> {
        match self.members().last() {
            Some(&j) if j >= shape_count => Err(Error::ShapeIndex {
                index: j,
                count: shape_count,
            }),
            _ => Ok(()),
        }
    }
}

fn region_of(grid: PixelGrid, shapes: &[ShapeMask], include: &[usize], exclude: &[usize]) -> Region {
    let mut state = vec![0u8; grid.len()];
    for &j in include {
        for &x in shapes[j].pixels() {
            state[x] |= 1;
        }
    }
    for &j in exclude {
        for &x in shapes[j].pixels() {
            state[x] |= 2;
        }
    }
    let pixels = state
        .iter()
        .enumerate()
        .filter_map(|(x, &s)| (s == 1).then_some(x))
        .collect();
    Region::from_sorted(grid, pixels)
}

pub fn compose_region(shapes: &[ShapeMask], spec: &CompositionSpec) -> Result<Region> {
    let grid = common_grid(shapes)?;
    spec.check_indices(shapes.len())?;
    Ok(region_of(grid, shapes, &spec.include, &spec.exclude))
}

/// True when dropping any single shape from either index set changes the
/// composed pixel set.
pub fn is_nonredundant(shapes: &[ShapeMask], spec: &CompositionSpec) -> Result<bool> {
    let grid = common_grid(shapes)?;
    spec.check_indices(shapes.len())?;
    Ok(first_redundant(grid, shapes, spec).is_none())
}

/// The first shape (include set first, then exclude) whose removal leaves
/// the composed pixel set unchanged.
pub fn first_redundant_shape(shapes: &[ShapeMask], spec: &CompositionSpec) -> Result<Option<usize>> {
    let grid = common_grid(shapes)?;
    spec.check_indices(shapes.len())?;
    Ok(first_redundant(grid, shapes, spec))
}

pub(crate) fn first_redundant(grid: PixelGrid, shapes: &[ShapeMask], spec: &CompositionSpec) -> Option<usize> {
    let full = region_of(grid, shapes, &spec.include, &spec.exclude);
    let without = |set: &[usize], j: usize| -> Vec<usize> { set.iter().copied().filter(|&k| k != j).collect() };
    spec.include
        .iter()
        .copied()
        .find(|&j| region_of(grid, shapes, &without(&spec.include, j), &spec.exclude) == full)
        .or_else(|| {
            spec.exclude
                .iter()
                .copied()
                .find(|&j| region_of(grid, shapes, &spec.include, &without(&spec.exclude, j)) == full)
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionReport {
    pub pairwise_disjoint: bool,
    pub covers_union: bool,
    pub reconstructs_shapes: bool,
}

impl PartitionReport {
    pub fn all_pass(&self) -> bool {
        self.pairwise_disjoint && self.covers_union && self.reconstructs_shapes
    }
}

/// Checks that shapelets are pairwise disjoint, that they cover exactly the
/// union of the shapes, and that each shape is the union of its shapelets.
pub fn verify_partition_properties(
    shapes: &[ShapeMask],
    shapelets: &[Shapelet],
    index_sets: &[Vec<usize>],
) -> PartitionReport {
    let Some(grid) = shapes.first().map(ShapeMask::grid) else {
        return PartitionReport {
            pairwise_disjoint: true,
            covers_union: shapelets.iter().all(|s| s.pixels.is_empty()),
            reconstructs_shapes: index_sets.is_empty(),
        };
    };
    let n = grid.len();
    let mut owner_count = vec![0usize; n];
    for s in shapelets {
        for &x in &s.pixels {
            if x < n {
                owner_count[x] += 1;
            }
        }
    }
    let pairwise_disjoint = owner_count.iter().all(|&c| c <= 1)
        && shapelets.iter().flat_map(|s| &s.pixels).all(|&x| x < n);

    let mut in_union = vec![false; n];
    for s in shapes {
        for &x in s.pixels() {
            in_union[x] = true;
        }
    }
    let covers_union = (0..n).all(|x| in_union[x] == (owner_count[x] > 0));

    let reconstructs_shapes = index_sets.len() == shapes.len()
        && shapes.iter().zip(index_sets).all(|(shape, set)| {
            let mut pixels: Vec<usize> = set
                .iter()
                .filter_map(|&i| shapelets.get(i))
                .flat_map(|s| s.pixels.iter().copied())
                .collect();
            pixels.sort_unstable();
            pixels == shape.pixels()
        });

    PartitionReport {
        pairwise_disjoint,
        covers_union,
        reconstructs_shapes,
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of distinct `(include, exclude)` selections, counting the empty
/// selection once. Without `s` every shape may be used; with `s` at most
/// `s` shapes participate.
pub fn count_compositions(n_s: usize, s: Option<usize>) -> Result<BigUint> {
    if n_s == 0 {
        return Err(Error::EmptyShapeList);
    }
    match s {
        None => {
            let three = BigUint::from(3u32).pow(n_s as u32);
            let two = BigUint::from(2u32).pow(n_s as u32);
            Ok(three - two + BigUint::one())
        }
        Some(s) if s > n_s => Err(Error::InvalidComposition(format!(
            "cardinality bound {s} exceeds dictionary size {n_s}"
        ))),
        Some(s) => {
            let mut total = BigUint::one();
            for k in 1..=s {
                let ways = BigUint::from(2u32).pow(k as u32) - BigUint::one();
                total += binomial(n_s, k) * ways;
            }
            Ok(total)
        }
    }
}
