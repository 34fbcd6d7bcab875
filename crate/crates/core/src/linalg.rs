//! Small dense linear algebra: rank and square solves by row reduction with
//! partial pivoting. Matrices here are tens of rows, built from 0/1 data.

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-10;

/// Numerical rank of a row-major matrix.
pub fn rank(rows: &[Vec<f64>]) -> usize {
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..n {
        if r == m {
            break;
        }
        let (pivot, best) = (r..m)
            .map(|i| (i, a[i][col].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= PIVOT_TOL {
            continue;
        }
        a.swap(r, pivot);
        for i in r + 1..m {
            let f = a[i][col] / a[r][col];
            if f != 0.0 {
                for k in col..n {
                    a[i][k] -= f * a[r][k];
                }
            }
        }
        r += 1;
    }
    r
}

pub fn transpose(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Solves the square system `a x = b`.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!("solve needs a square {n}x{n} system")));
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut row = r.clone();
            row.push(bi);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty range");
        if m[pivot][col].abs() <= PIVOT_TOL {
            return Err(Error::Singular);
        }
        m.swap(col, pivot);
        for i in 0..n {
            if i != col {
                let f = m[i][col] / m[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        m[i][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| m[i][n] / m[i][i]).collect())
}
