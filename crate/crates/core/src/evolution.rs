//! The group generated by `i L`: exact 2x2 block exponentials, the
//! direct-sum group of `A_0 - V`, its conjugation back to Fourier
//! coordinates, the partial-sum truncation bound and the equiconvergence
//! scan.

use std::ops::Range;

use serde::Serialize;

use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};
use crate::freebasis::ResolutionOfIdentity;
use crate::linalg::{self, c64, expm, CMatrix, CVector, C64, I};
use crate::potential::{w_as_fourier_operator, BoundaryCondition, DerivedPotential};
use crate::simop::{Problem, SimilarityResult};

/// `sin(x)/x`, with the Taylor polynomial near zero.
fn sinc(x: C64) -> C64 {
    if x.norm() < 1e-4 {
        let x2 = x * x;
        return C64::from(1.0) - x2 / 6.0 + x2 * x2 / 120.0;
    }
    x.sin() / x
}

/// `exp(i t M)` for a 2x2 `M = [[a, b], [c, d]]`:
/// `e^{it(a+d)/2} (cos(rho t) I + i t sinc(rho t) [[(a-d)/2, b], [c, (d-a)/2]])`
/// with `rho^2 = (a-d)^2/4 + bc`. Both functions are even in `rho`, so the
/// branch of the root is irrelevant.
pub fn exp_block2(m: &CMatrix, t: f64) -> CMatrix {
    if m.nrows() == 1 {
        return CMatrix::from_element(1, 1, (I * m[(0, 0)] * t).exp());
    }
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let h = (a - d) * 0.5;
    let rho = (h * h + b * c).sqrt();
    let phase = (I * (a + d) * (0.5 * t)).exp();
    let cs = (rho * t).cos();
    let sn = I * sinc(rho * t) * t;
    CMatrix::from_row_slice(2, 2, &[phase * (cs + sn * h), phase * sn * b, phase * sn * c, phase * (cs - sn * h)])
}

/// Everything needed to evaluate `T(t) = W (I+U) T~(t) (I+U)^{-1} W^{-1}` on
/// a window.
#[derive(Clone, Debug)]
pub struct GroupEvaluator {
    pub window: usize,
    pub m: usize,
    pub block: usize,
    pub res: ResolutionOfIdentity,
    pub a0: BlockMatrix,
    pub q: BlockMatrix,
    pub v: BlockMatrix,
    pub w: CMatrix,
    pub w_inv: CMatrix,
    pub iu: CMatrix,
    pub iu_inv: CMatrix,
    /// `Z = W (I + U)` and its inverse.
    pub z: CMatrix,
    pub z_inv: CMatrix,
    pub z_norm: f64,
    pub central_gen: CMatrix,
    /// `(n, (A_0 - V)_{nn})` for `|n| > m`.
    pub tail_gens: Vec<(i64, CMatrix)>,
    pub gamma_bc: f64,
}

fn dense_inverse(m: &CMatrix) -> Result<CMatrix> {
    let smin = linalg::smallest_singular_value(m);
    if smin < 1e-12 {
        return Err(Error::SingularTransform(smin));
    }
    m.clone().try_inverse().ok_or(Error::SingularTransform(smin))
}

impl GroupEvaluator {
    pub fn new(derived: &DerivedPotential, problem: &Problem, result: &SimilarityResult) -> Result<Self> {
        let window = problem.window;
        let block = problem.a0.block;
        let dim = problem.a0.dim();
        let w = w_as_fourier_operator(derived, window).data;
        let w_inv = dense_inverse(&w)?;
        let iu = CMatrix::identity(dim, dim) + &result.u.data;
        let iu_inv = dense_inverse(&iu)?;
        let z = &w * &iu;
        let z_inv = &iu_inv * &w_inv;
        let z_norm = linalg::op_norm(&z);
        let gen = &problem.a0 - &result.v;
        let res = ResolutionOfIdentity::new(window, result.m, block);
        let c = res.central_range();
        let central_gen = gen.data.view((c.start, c.start), (c.len(), c.len())).into_owned();
        let tail_gens = gen
            .indices
            .iter()
            .filter(|n| n.unsigned_abs() as usize > result.m)
            .map(|&n| (n, gen.block_at(n, n)))
            .collect();
        let gamma_bc = match derived.bc() {
            BoundaryCondition::Dir => derived.nu.im.abs(),
            _ => derived.p1_mean().im.abs().max(derived.p4_mean().im.abs()),
        };
        Ok(Self {
            window,
            m: result.m,
            block,
            res,
            a0: problem.a0.clone(),
            q: problem.q.clone(),
            v: result.v.clone(),
            w,
            w_inv,
            iu,
            iu_inv,
            z,
            z_inv,
            z_norm,
            central_gen,
            tail_gens,
            gamma_bc,
        })
    }

    pub fn dim(&self) -> usize {
        self.res.dim()
    }

    /// `T~(t)` as a dense block-diagonal matrix.
    pub fn tilde_group_matrix(&self, t: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        let c = self.res.central_range();
        let ec = expm(&(&self.central_gen * (I * t)));
        out.view_mut((c.start, c.start), (c.len(), c.len())).copy_from(&ec);
        for (n, g) in &self.tail_gens {
            let r = self.res.range_of(*n);
            out.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&exp_block2(g, t));
        }
        out
    }

    pub fn tilde_group(&self, t: f64, x: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim());
        let c = self.res.central_range();
        let ec = expm(&(&self.central_gen * (I * t)));
        out.rows_mut(c.start, c.len()).copy_from(&(ec * x.rows(c.start, c.len())));
        for (n, g) in &self.tail_gens {
            let r = self.res.range_of(*n);
            let y = exp_block2(g, t) * x.rows(r.start, r.len());
            out.rows_mut(r.start, r.len()).copy_from(&y);
        }
        out
    }

    /// `T(t) x` in Fourier coordinates of the original operator.
    pub fn full_group(&self, t: f64, x: &CVector) -> CVector {
        &self.z * self.tilde_group(t, &(&self.z_inv * x))
    }

    /// Generator `i W (A_0 - Q) W^{-1}` of the full group.
    pub fn generator(&self) -> CMatrix {
        &self.w * (&self.a0.data - &self.q.data) * &self.w_inv * I
    }

    /// `(||T(t)x - Z T~(t) P_(n) Z^{-1} x||, bound)` where the bound is
    /// `||Z|| (sum_{|k| > n} e^{2|t|(||V_k|| + gamma)} ||P_k Z^{-1} x||^2)^{1/2}`.
    pub fn truncation_bound(&self, x: &CVector, t: f64, n: usize) -> (f64, f64) {
        assert!(n > self.m && n <= self.window);
        let y = &self.z_inv * x;
        let full = &self.z * self.tilde_group(t, &y);
        let mut y_cut = y.clone();
        let mut tail_sum = 0.0;
        for (k, _) in &self.tail_gens {
            if k.unsigned_abs() as usize > n {
                let r = self.res.range_of(*k);
                let piece = y.rows(r.start, r.len()).into_owned();
                let vk = self.v.block_at(*k, *k);
                let growth = (2.0 * t.abs() * (linalg::op_norm(&vk) + self.gamma_bc)).exp();
                tail_sum += growth * linalg::vec_norm(&piece).powi(2);
                y_cut.rows_mut(r.start, r.len()).fill(c64(0.0, 0.0));
            }
        }
        let partial = &self.z * self.tilde_group(t, &y_cut);
        let actual = linalg::vec_norm(&(full - partial));
        let bound = self.z_norm * tail_sum.sqrt();
        (actual, bound)
    }

    /// Residual of pushing each far-block eigenvector through `Z`:
    /// `max ||L y - mu y|| / ||y||` with `L = W (A_0 - Q) W^{-1}`.
    pub fn pushforward_residual(&self) -> f64 {
        let l = &self.w * (&self.a0.data - &self.q.data) * &self.w_inv;
        let mut worst: f64 = 0.0;
        for (n, g) in &self.tail_gens {
            let r = self.res.range_of(*n);
            for (mu, vec) in block_eigenpairs(g) {
                let mut x = CVector::zeros(self.dim());
                x.rows_mut(r.start, r.len()).copy_from(&vec);
                let y = &self.z * x;
                let resid = linalg::vec_norm(&(&l * &y - &y * mu)) / linalg::vec_norm(&y);
                worst = worst.max(resid);
            }
        }
        worst
    }

    /// Equiconvergence scan `l -> ||W [(I+U) P_(l) (I+U)^{-1} - P_(l)] W^{-1}||_2`
    /// for `m < l <= N`, plus the resolution-of-identity checks on
    /// `P~_n = Z P_n Z^{-1}`.
    pub fn equiconvergence_scan(&self) -> EquiScan {
        let dim = self.dim();
        let w_iu = &self.z;
        let inv_w_iu = &self.z_inv;
        let mut diff = CMatrix::zeros(dim, dim);
        let add_range = |diff: &mut CMatrix, r: Range<usize>| {
            for s in r {
                *diff += w_iu.column(s) * inv_w_iu.row(s) - self.w.column(s) * self.w_inv.row(s);
            }
        };
        let mut values = Vec::new();
        let mut ells = Vec::new();
        add_range(&mut diff, self.res.central_range());
        let central_value = linalg::frobenius(&diff);
        for ell in self.m + 1..=self.window {
            let l = ell as i64;
            add_range(&mut diff, self.res.range_of(-l));
            add_range(&mut diff, self.res.range_of(l));
            ells.push(ell);
            values.push(linalg::frobenius(&diff));
        }
        let (offdiag, sum_defect) = self.resolution_checks();
        EquiScan {
            central_value,
            ells,
            values,
            floor: self.equiconvergence_floor(),
            max_cross_product: offdiag,
            sum_defect,
            z_condition: self.z_norm * linalg::op_norm(&self.z_inv),
        }
    }

    /// Round-off floor of the scan: `||Z|| ||Z^{-1}||` times the defect of
    /// `Z^{-1} Z` and `W W^{-1}` from the identity.
    fn equiconvergence_floor(&self) -> f64 {
        let dim = self.dim();
        let id = CMatrix::identity(dim, dim);
        let d1 = linalg::frobenius(&(&self.z_inv * &self.z - &id));
        let d2 = linalg::frobenius(&(&self.w * &self.w_inv - &id));
        let cond = self.z_norm * linalg::op_norm(&self.z_inv);
        cond * d1.max(d2).max(f64::EPSILON)
    }

    /// `(max_{i != j} ||P~_i P~_j||_2, ||sum P~ - I||_2)` over the coarse
    /// resolution. Cross products are evaluated through the Gram blocks of
    /// `G = Z^{-1} Z - I`: `||P~_i P~_j||^2 = tr(G_ij^* C_i G_ij R_j)` with
    /// `C_i = Z_i^* Z_i` and `R_j = Zinv_j Zinv_j^*`.
    fn resolution_checks(&self) -> (f64, f64) {
        let dim = self.dim();
        let id = CMatrix::identity(dim, dim);
        let g = &self.z_inv * &self.z - &id;
        let pieces = self.res.pieces();
        let cs: Vec<CMatrix> = pieces
            .iter()
            .map(|r| {
                let zi = self.z.columns(r.start, r.len());
                zi.adjoint() * zi
            })
            .collect();
        let rs: Vec<CMatrix> = pieces
            .iter()
            .map(|r| {
                let zj = self.z_inv.rows(r.start, r.len());
                zj * zj.adjoint()
            })
            .collect();
        let mut worst: f64 = 0.0;
        for (i, ri) in pieces.iter().enumerate() {
            for (j, rj) in pieces.iter().enumerate() {
                if i == j {
                    continue;
                }
                let gij = g.view((ri.start, rj.start), (ri.len(), rj.len()));
                let val = (gij.adjoint() * &cs[i] * gij * &rs[j]).trace().re.max(0.0).sqrt();
                worst = worst.max(val);
            }
        }
        let sum_defect = linalg::frobenius(&(&self.z * &self.z_inv - &id));
        (worst, sum_defect)
    }
}

/// Eigenpairs of a 1x1 or 2x2 generator block.
fn block_eigenpairs(g: &CMatrix) -> Vec<(C64, CVector)> {
    if g.nrows() == 1 {
        return vec![(g[(0, 0)], CVector::from_element(1, c64(1.0, 0.0)))];
    }
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    linalg::eig_2x2(a, b, c, d)
        .into_iter()
        .map(|mu| {
            // null vector of g - mu, taken from the better-conditioned row
            let v = if (a - mu).norm() + b.norm() >= c.norm() + (d - mu).norm() {
                CVector::from_vec(vec![b, mu - a])
            } else {
                CVector::from_vec(vec![mu - d, c])
            };
            let v = if linalg::vec_norm(&v) == 0.0 { CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]) } else { v };
            let nv = linalg::vec_norm(&v);
            (mu, v / C64::from(nv))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct EquiScan {
    /// The difference with the central projections alone (`l = m`).
    pub central_value: f64,
    /// `m + 1, ..., N`.
    pub ells: Vec<usize>,
    pub values: Vec<f64>,
    pub floor: f64,
    pub max_cross_product: f64,
    pub sum_defect: f64,
    pub z_condition: f64,
}

impl EquiScan {
    /// True when no value exceeds its predecessor by more than `slack`.
    pub fn nonincreasing(&self, slack: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

/// `(t, n, slot, coefficient)` for every coefficient of `T(t) x` over a
/// time grid; slots are 1-based.
pub fn evolution_trace_rows(eval: &GroupEvaluator, x: &CVector, times: &[f64]) -> Vec<(f64, i64, usize, C64)> {
    let b = eval.block;
    let n = eval.window as i64;
    let mut rows = Vec::with_capacity(times.len() * x.len());
    for &t in times {
        let y = eval.full_group(t, x);
        rows.extend(y.iter().enumerate().map(|(i, z)| (t, (i / b) as i64 - n, i % b + 1, *z)));
    }
    rows
}

/// A smooth deterministic state with coefficients decaying like
/// `e^{-|n|/2}`.
pub fn smooth_state(dim: usize, block: usize) -> CVector {
    let half = (dim / block / 2) as f64;
    CVector::from_fn(dim, |i, _| {
        let n = (i / block) as f64 - half;
        let slot = (i % block) as f64;
        c64((-n.abs() / 2.0).exp(), 0.0) * (I * (0.3 * n + 0.7 * slot)).exp()
    })
}
