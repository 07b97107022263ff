//! Block operator matrices over the free eigenbasis and the transforms
//! `J_k`, `Gamma_k` acting on them.
//!
//! A matrix lives on an ordered set of component indices (usually the
//! window `-N..=N`); each index owns `block` consecutive coordinates. Entry
//! `(i*b + j, l*b + k)` is `<X e_{n_l}^k, e_{n_i}^j>`.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::freebasis::FreeBasis;
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::potential::{BoundaryCondition, DerivedPotential};

/// Free points `mu_{n,j}` attached to each coordinate of a block matrix.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub block: usize,
    pub indices: Arc<[i64]>,
    pub points: Arc<[C64]>,
}

impl Ladder {
    pub fn new(block: usize, indices: Arc<[i64]>, points: Arc<[C64]>) -> Self {
        assert_eq!(points.len(), block * indices.len());
        Self { block, indices, points }
    }

    /// The ladder of the unperturbed operator: every slot of component `n`
    /// sits at `lambda_n`.
    pub fn free(bc: BoundaryCondition, omega: f64, window: usize) -> Self {
        let n = window as i64;
        let indices: Arc<[i64]> = (-n..=n).collect();
        let b = bc.block_size();
        let points: Vec<C64> = indices
            .iter()
            .flat_map(|&k| std::iter::repeat(C64::from(crate::freebasis::free_eigenvalue(bc, omega, k))).take(b))
            .collect();
        Self::new(b, indices, points.into())
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    /// `max |1/(mu_a - mu_b)|` over the entries `Gamma_k` does not zero:
    /// the operator norm of `Gamma_k` on the window.
    pub fn gamma_norm(&self, k: usize) -> f64 {
        let b = self.block;
        let mut best: f64 = 0.0;
        for (i, &m) in self.indices.iter().enumerate() {
            for (l, &n) in self.indices.iter().enumerate() {
                if !gamma_active(m, n, k) {
                    continue;
                }
                for j in 0..b {
                    for q in 0..b {
                        let d = self.points[i * b + j] - self.points[l * b + q];
                        best = best.max(1.0 / d.norm());
                    }
                }
            }
        }
        best
    }
}

#[inline]
fn in_central(m: i64, k: usize) -> bool {
    m.unsigned_abs() as usize <= k
}

#[inline]
fn j_keeps(m: i64, n: i64, k: usize) -> bool {
    m == n || (in_central(m, k) && in_central(n, k))
}

#[inline]
fn gamma_active(m: i64, n: i64, k: usize) -> bool {
    m != n && !(in_central(m, k) && in_central(n, k))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    pub block: usize,
    pub indices: Arc<[i64]>,
    pub data: CMatrix,
}

impl BlockMatrix {
    pub fn zeros(block: usize, indices: Arc<[i64]>) -> Self {
        let d = block * indices.len();
        Self { block, indices, data: CMatrix::zeros(d, d) }
    }

    pub fn identity(block: usize, indices: Arc<[i64]>) -> Self {
        let d = block * indices.len();
        Self { block, indices, data: CMatrix::identity(d, d) }
    }

    pub fn window(window: usize) -> Arc<[i64]> {
        let n = window as i64;
        (-n..=n).collect()
    }

    pub fn diagonal(ladder: &Ladder) -> Self {
        let data = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&ladder.points));
        Self { block: ladder.block, indices: ladder.indices.clone(), data }
    }

    pub fn from_dense(block: usize, indices: Arc<[i64]>, data: CMatrix) -> Self {
        assert_eq!(data.nrows(), block * indices.len());
        assert_eq!(data.ncols(), block * indices.len());
        Self { block, indices, data }
    }

    pub fn like(&self, data: CMatrix) -> Self {
        Self::from_dense(self.block, self.indices.clone(), data)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn position(&self, n: i64) -> Option<usize> {
        self.indices.binary_search(&n).ok()
    }

    /// The `b x b` block `X_{mn}`.
    pub fn block_at(&self, m: i64, n: i64) -> CMatrix {
        let (i, l) = (self.position(m).expect("row index"), self.position(n).expect("column index"));
        let b = self.block;
        self.data.view((i * b, l * b), (b, b)).into_owned()
    }

    pub fn hs_norm(&self) -> f64 {
        linalg::frobenius(&self.data)
    }

    pub fn op_norm(&self) -> f64 {
        linalg::op_norm(&self.data)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.like(&self.data * s)
    }

    pub fn add_scaled(&self, s: C64, other: &Self) -> Self {
        self.like(&self.data + &other.data * s)
    }

    /// `||P_n X||_2` for every index, in index order.
    pub fn row_block_norms(&self) -> Vec<f64> {
        let b = self.block;
        (0..self.indices.len())
            .map(|i| linalg::frobenius(&self.data.rows(i * b, b).into_owned()))
            .collect()
    }

    /// `||X P_n||_2` for every index, in index order.
    pub fn col_block_norms(&self) -> Vec<f64> {
        let b = self.block;
        (0..self.indices.len())
            .map(|i| linalg::frobenius(&self.data.columns(i * b, b).into_owned()))
            .collect()
    }

    fn map_blocks(&self, mut f: impl FnMut(i64, i64, usize, usize) -> Option<C64>) -> Self {
        let b = self.block;
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for (i, &m) in self.indices.iter().enumerate() {
            for (l, &n) in self.indices.iter().enumerate() {
                for j in 0..b {
                    for q in 0..b {
                        let (r, c) = (i * b + j, l * b + q);
                        if let Some(v) = f(m, n, r, c) {
                            out[(r, c)] = v;
                        }
                    }
                }
            }
        }
        self.like(out)
    }

    /// `J_k X`: the central `(2k+1)`-block square plus the outer block
    /// diagonal.
    pub fn apply_j(&self, k: usize) -> Self {
        self.map_blocks(|m, n, r, c| j_keeps(m, n, k).then(|| self.data[(r, c)]))
    }

    /// `Gamma_k X`: every entry outside the image of `J_k` divided by the gap
    /// between its row and column points. Satisfies
    /// `A_0 Gamma_k X - (Gamma_k X) A_0 = X - J_k X` exactly.
    pub fn apply_gamma(&self, ladder: &Ladder, k: usize) -> Result<Self> {
        assert_eq!(ladder.dim(), self.dim(), "ladder does not match the matrix");
        let mut zero_at = None;
        let out = self.map_blocks(|m, n, r, c| {
            if !gamma_active(m, n, k) {
                return None;
            }
            let d = ladder.points[r] - ladder.points[c];
            if d.norm() <= f64::EPSILON * (1.0 + ladder.points[r].norm()) {
                zero_at.get_or_insert((m, n));
                return None;
            }
            Some(self.data[(r, c)] / d)
        });
        match zero_at {
            Some((m, n)) => Err(Error::ZeroDenominator { m, n }),
            None => Ok(out),
        }
    }

    /// True when every entry outside `P_(m) X P_(m)` vanishes.
    pub fn is_central(&self, m: usize) -> bool {
        let b = self.block;
        self.indices.iter().enumerate().all(|(i, &r)| {
            self.indices.iter().enumerate().all(|(l, &c)| {
                (in_central(r, m) && in_central(c, m))
                    || self.data.view((i * b, l * b), (b, b)).iter().all(|z| *z == ZERO)
            })
        })
    }

    /// Per-entry CSV with columns `m,n,j,k,re,im` (slots 1-based).
    pub fn to_csv(&self) -> String {
        let b = self.block;
        let mut out = String::from("m,n,j,k,re,im\n");
        for (i, &m) in self.indices.iter().enumerate() {
            for (l, &n) in self.indices.iter().enumerate() {
                for j in 0..b {
                    for q in 0..b {
                        let z = self.data[(i * b + j, l * b + q)];
                        let _ = writeln!(out, "{m},{n},{},{},{:e},{:e}", j + 1, q + 1, z.re, z.im);
                    }
                }
            }
        }
        out
    }
}

impl Mul for &BlockMatrix {
    type Output = BlockMatrix;

    fn mul(self, rhs: &BlockMatrix) -> BlockMatrix {
        self.like(&self.data * &rhs.data)
    }
}

impl Add for &BlockMatrix {
    type Output = BlockMatrix;

    fn add(self, rhs: &BlockMatrix) -> BlockMatrix {
        self.like(&self.data + &rhs.data)
    }
}

impl Sub for &BlockMatrix {
    type Output = BlockMatrix;

    fn sub(self, rhs: &BlockMatrix) -> BlockMatrix {
        self.like(&self.data - &rhs.data)
    }
}

/// `||A_0 (Gamma X) - (Gamma X) A_0 - (X - J_k X)||_2`.
pub fn commutator_residual(a0: &BlockMatrix, x: &BlockMatrix, ladder: &Ladder, k: usize) -> Result<f64> {
    let gx = x.apply_gamma(ladder, k)?;
    let lhs = &(a0 * &gx) - &(&gx * a0);
    let rhs = x - &x.apply_j(k);
    Ok((&lhs - &rhs).hs_norm())
}

/// The perturbation `Q` in the free basis.
pub fn build_q(derived: &DerivedPotential, window: usize) -> Result<BlockMatrix> {
    derived.check_window(window)?;
    let basis = FreeBasis::new(derived, window);
    let indices = basis.indices();
    let mut q = BlockMatrix::zeros(basis.block(), indices.clone());
    match derived.bc() {
        BoundaryCondition::Per | BoundaryCondition::Ap => {
            let eps = derived.bc().epsilon();
            let s = basis.shift;
            for (i, &m) in indices.iter().enumerate() {
                for (l, &n) in indices.iter().enumerate() {
                    q.data[(2 * i, 2 * l + 1)] = derived.q2.get(-m - n + s - eps);
                    q.data[(2 * i + 1, 2 * l)] = derived.q3.get(m + n - s + eps);
                }
            }
        }
        BoundaryCondition::Dir => {
            let span = 2 * window as i64;
            let theta: Vec<C64> = (-span..=span).map(|big_m| derived.dir_theta(big_m)).collect();
            for (i, &m) in indices.iter().enumerate() {
                for (l, &n) in indices.iter().enumerate() {
                    q.data[(i, l)] = theta[(m + n + span) as usize];
                }
            }
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn toy_gamma_matches_the_two_by_two_example() {
        let indices: Arc<[i64]> = vec![-1, 1].into();
        let ladder = Ladder::new(1, indices.clone(), vec![c64(2.0, 0.0), c64(-3.0, 0.0)].into());
        let x = BlockMatrix::from_dense(
            1,
            indices,
            CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0), c64(4.0, 0.0)]),
        );
        let g = x.apply_gamma(&ladder, 0).unwrap();
        assert_eq!(g.data[(0, 0)], ZERO);
        assert!((g.data[(0, 1)] - c64(2.0 / 5.0, 0.0)).norm() < 1e-15);
        assert!((g.data[(1, 0)] - c64(3.0 / -5.0, 0.0)).norm() < 1e-15);
        let j = x.apply_j(0);
        assert_eq!(j.data[(0, 1)], ZERO);
        assert_eq!(j.data[(1, 1)], c64(4.0, 0.0));
    }

    #[test]
    fn identity_norm() {
        let id = BlockMatrix::identity(2, BlockMatrix::window(3));
        assert!((id.hs_norm() - (14.0f64).sqrt()).abs() < 1e-14);
    }
}
