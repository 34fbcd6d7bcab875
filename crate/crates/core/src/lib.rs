//! Image segmentation as a sparse set-algebraic composition of dictionary
//! shapes.
//!
//! A region is written as `(∪_{I⊕} S_j) \ (∪_{I⊖} S_j)` over a dictionary of
//! binary shapes. Finding the best composition is combinatorial; this crate
//! solves its convex relaxation (an L1-budgeted piecewise-linear program)
//! and provides the analysis tools that say when the relaxation is exact:
//! disjoint shape decomposition, the linkage process, optimality
//! certificates and recovery-condition checks, plus brute-force oracles.

pub mod certify;
pub mod dsd;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod linalg;
pub mod linkage;
pub mod lp;
pub mod pgm;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Image, InhomogeneityField, PixelGrid, Region, ShapeIntegrals, ShapeMask};
