//! The similarity engine: preliminary transform producing `B`, the weighted
//! space `M(B)`, the fixed point of `Phi`, and the final `U`, `V`.

use serde::Serialize;

use crate::blockmat::{build_q, BlockMatrix, Ladder};
use crate::error::{Error, Result};
use crate::freebasis::{tilde_free_diagonal, FreeBasis};
use crate::linalg::{self, CMatrix, C64};
use crate::potential::DerivedPotential;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SimopConfig {
    /// `k` is the smallest cut with `||Gamma_k Q||_2 <= 1 - k_margin`.
    pub k_margin: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Similarity residual allowed relative to `||Q||_2`.
    pub residual_rel: f64,
}

impl Default for SimopConfig {
    fn default() -> Self {
        Self { k_margin: 0.1, tol: 1e-13, max_iter: 200, residual_rel: 1e-8 }
    }
}

/// `A_0`, `Q` and the ladder of one window.
#[derive(Clone, Debug)]
pub struct Problem {
    pub window: usize,
    pub a0: BlockMatrix,
    pub q: BlockMatrix,
    pub ladder: Ladder,
    pub delta_p: f64,
}

impl Problem {
    pub fn new(derived: &DerivedPotential, window: usize) -> Result<Self> {
        let q = build_q(derived, window)?;
        Ok(Self {
            window,
            a0: tilde_free_diagonal(derived, window),
            q,
            ladder: FreeBasis::new(derived, window).ladder(),
            delta_p: derived.delta_p,
        })
    }

    /// `A_0 - Q`, the window matrix of the transformed operator.
    pub fn operator(&self) -> BlockMatrix {
        &self.a0 - &self.q
    }
}

fn max_abs_index(indices: &[i64]) -> usize {
    indices.iter().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0)
}

/// Smallest `k` with `||Gamma_k Q||_2 <= 1 - margin`, and that norm.
pub fn choose_k(q: &BlockMatrix, ladder: &Ladder, margin: f64) -> Result<(usize, f64)> {
    let g0 = q.apply_gamma(ladder, 0)?;
    let b = q.block;
    let top = max_abs_index(&q.indices);
    // ||Gamma_k Q||^2 = ||Gamma_0 Q||^2 minus the central square of Gamma_0 Q
    let mut shell = vec![0.0; top + 1];
    for (i, &m) in q.indices.iter().enumerate() {
        for (l, &n) in q.indices.iter().enumerate() {
            let s = m.unsigned_abs().max(n.unsigned_abs()) as usize;
            for j in 0..b {
                for p in 0..b {
                    shell[s] += g0.data[(i * b + j, l * b + p)].norm_sqr();
                }
            }
        }
    }
    let mut remaining: f64 = shell.iter().sum();
    for (k, s) in shell.iter().enumerate() {
        remaining -= s;
        let norm = remaining.max(0.0).sqrt();
        if norm <= 1.0 - margin || k == top {
            return Ok((k, if k == top { 0.0 } else { norm }));
        }
    }
    Ok((top, 0.0))
}

#[derive(Clone, Debug)]
pub struct Preliminary {
    pub k: usize,
    pub gamma_q: BlockMatrix,
    pub gamma_q_norm: f64,
    pub b: BlockMatrix,
    /// Nuclear norm of `B - J_0 Q - Q Gamma_0 Q`.
    pub c_nuclear: f64,
}

/// `B = J_k Q + (I + Gamma_k Q)^{-1}(Q Gamma_k Q - (Gamma_k Q) J_k Q)`.
pub fn build_b(q: &BlockMatrix, k: usize, ladder: &Ladder) -> Result<Preliminary> {
    let gq = q.apply_gamma(ladder, k)?;
    let jq = q.apply_j(k);
    let dim = q.dim();
    let iu = CMatrix::identity(dim, dim) + &gq.data;
    let smin = linalg::smallest_singular_value(&iu);
    if smin < 1e-12 {
        return Err(Error::SingularTransform(smin));
    }
    let rhs = &q.data * &gq.data - &gq.data * &jq.data;
    let corr = iu.lu().solve(&rhs).ok_or(Error::SingularTransform(smin))?;
    let b = q.like(&jq.data + corr);
    let g00 = q.apply_gamma(ladder, 0)?;
    let c = &(&b - &q.apply_j(0)) - &(q * &g00);
    Ok(Preliminary {
        k,
        gamma_q_norm: gq.hs_norm(),
        gamma_q: gq,
        b,
        c_nuclear: linalg::singular_values(&c.data).iter().sum(),
    })
}

/// The weight sequences of `M(B)`, all indexed by `|n|` from 0 to one past
/// the largest window index (where every sequence is 0).
#[derive(Clone, Debug, Serialize)]
pub struct WeightData {
    pub alpha: Vec<f64>,
    pub alpha_prime: Vec<f64>,
    pub alpha_tilde: Vec<f64>,
    pub delta_p: f64,
}

impl WeightData {
    pub fn alpha_of(&self, n: i64) -> f64 {
        self.alpha[n.unsigned_abs() as usize]
    }

    /// `gamma_m = alpha~_{m+1}`.
    pub fn gamma(&self, m: usize) -> f64 {
        self.alpha_tilde[m + 1]
    }

    fn inv_alpha(&self, n: i64) -> f64 {
        let a = self.alpha_of(n);
        if a > 0.0 {
            1.0 / a
        } else {
            0.0
        }
    }

    /// `max(||X f(A)^{-1}||_2, ||f(A)^{-1} X||_2)`.
    pub fn star_norm(&self, x: &BlockMatrix) -> f64 {
        let b = x.block;
        let mut left = x.data.clone();
        let mut right = x.data.clone();
        for (i, &n) in x.indices.iter().enumerate() {
            let s = self.inv_alpha(n);
            for j in 0..b {
                left.column_mut(i * b + j).scale_mut(s);
                right.row_mut(i * b + j).scale_mut(s);
            }
        }
        linalg::frobenius(&left).max(linalg::frobenius(&right))
    }

    /// `f(A) = sum alpha_n P_n` as a block matrix.
    pub fn f_of_a(&self, like: &BlockMatrix) -> BlockMatrix {
        let b = like.block;
        let diag: Vec<C64> = like
            .indices
            .iter()
            .flat_map(|&n| std::iter::repeat(C64::from(self.alpha_of(n))).take(b))
            .collect();
        like.like(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }
}

/// Smallest `m0` below the largest window index with `B = P_(m0) B P_(m0)`.
pub fn central_cut(b: &BlockMatrix) -> Option<usize> {
    let top = max_abs_index(&b.indices);
    (0..top).find(|&m| b.is_central(m))
}

/// Component distances `d_{jl}` (minimum over slot points).
fn component_distance(ladder: &Ladder, i: usize, l: usize) -> f64 {
    let b = ladder.block;
    let mut best = f64::INFINITY;
    for j in 0..b {
        for p in 0..b {
            best = best.min((ladder.points[i * b + j] - ladder.points[l * b + p]).norm());
        }
    }
    best
}

pub fn weights_of(b: &BlockMatrix, ladder: &Ladder, delta_p: f64) -> Result<WeightData> {
    if let Some(m0) = central_cut(b) {
        return Err(Error::TrivialPerturbation(m0));
    }
    let top = max_abs_index(&b.indices);
    let rows = b.row_block_norms();
    let cols = b.col_block_norms();
    let mut row_shell = vec![0.0; top + 2];
    let mut col_shell = vec![0.0; top + 2];
    for (i, &n) in b.indices.iter().enumerate() {
        let s = n.unsigned_abs() as usize;
        row_shell[s] += rows[i] * rows[i];
        col_shell[s] += cols[i] * cols[i];
    }
    let norm = b.hs_norm();
    let mut alpha = vec![0.0; top + 2];
    let (mut rt, mut ct) = (0.0, 0.0);
    for s in (0..=top).rev() {
        rt += row_shell[s];
        ct += col_shell[s];
        alpha[s] = rt.sqrt().sqrt().max(ct.sqrt().sqrt()) / norm.sqrt();
    }
    // alpha'_{n+1} = max alpha_l / d_{jl} over |l| <= n < |j|
    let mut alpha_prime = vec![0.0; top + 2];
    for n in 0..=top {
        let mut best: f64 = 0.0;
        for (l, &nl) in b.indices.iter().enumerate() {
            if nl.unsigned_abs() as usize > n {
                continue;
            }
            for (j, &nj) in b.indices.iter().enumerate() {
                if nj.unsigned_abs() as usize > n {
                    best = best.max(alpha[nl.unsigned_abs() as usize] / component_distance(ladder, j, l));
                }
            }
        }
        alpha_prime[n + 1] = best;
    }
    let alpha_tilde: Vec<f64> = (0..=top + 1)
        .map(|n| if n == 0 { delta_p * alpha[0] } else { delta_p * alpha[n] + alpha_prime[n] })
        .collect();
    Ok(WeightData { alpha, alpha_prime, alpha_tilde, delta_p })
}

/// Smallest `m` with `4 alpha~_{m+1} ||B||_* < 1`.
pub fn choose_m(weights: &WeightData, b: &BlockMatrix) -> usize {
    let star = weights.star_norm(b);
    let top = weights.alpha.len() - 2;
    (0..=top).find(|&m| 4.0 * weights.gamma(m) * star < 1.0).unwrap_or(top)
}

/// `Phi(X) = B Gamma X - (Gamma X)(J B) - (Gamma X) J (B Gamma X) + B`.
pub fn phi(x: &BlockMatrix, b: &BlockMatrix, jb: &BlockMatrix, ladder: &Ladder, m: usize) -> Result<BlockMatrix> {
    let gx = x.apply_gamma(ladder, m)?;
    let bgx = b * &gx;
    let out = &bgx - &(&gx * jb);
    let out = &out - &(&gx * &bgx.apply_j(m));
    Ok(&out + b)
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointTrace {
    pub iterations: usize,
    /// `||X_{i+1} - X_i||_2` per step.
    pub steps: Vec<f64>,
    /// Step ratios measured in `||.||_*`, recorded while above round-off.
    pub ratios: Vec<f64>,
    /// `||Phi(X*) - X*||_2`.
    pub residual: f64,
    /// Largest `||X_i - B||_2 / ||B||_2` over the iterates.
    pub ball_ratio: f64,
}

pub fn fixed_point(
    b: &BlockMatrix,
    m: usize,
    ladder: &Ladder,
    weights: Option<&WeightData>,
    cfg: &SimopConfig,
) -> Result<(BlockMatrix, FixedPointTrace)> {
    let jb = b.apply_j(m);
    let star = |x: &BlockMatrix| weights.map_or_else(|| x.hs_norm(), |w| w.star_norm(x));
    let b_norm = b.hs_norm();
    let floor = 1e-12 * star(b).max(f64::MIN_POSITIVE);
    let mut x = b.clone();
    let mut steps = vec![b_norm];
    let mut ratios = Vec::new();
    let mut prev_star = star(b);
    let mut ball_ratio: f64 = 0.0;
    for it in 1..=cfg.max_iter {
        let next = phi(&x, b, &jb, ladder, m)?;
        let diff = &next - &x;
        let step = diff.hs_norm();
        let step_star = star(&diff);
        if prev_star > floor {
            ratios.push(step_star / prev_star);
        }
        steps.push(step);
        prev_star = step_star;
        x = next;
        if b_norm > 0.0 {
            ball_ratio = ball_ratio.max((&x - b).hs_norm() / b_norm);
        }
        if step < cfg.tol {
            let residual = (&phi(&x, b, &jb, ladder, m)? - &x).hs_norm();
            let trace = FixedPointTrace { iterations: it + 1, steps, ratios, residual, ball_ratio };
            return Ok((x, trace));
        }
    }
    let ratio = ratios.last().copied().unwrap_or(f64::NAN);
    Err(Error::NoConvergence { iterations: cfg.max_iter, last_step: *steps.last().unwrap(), ratio })
}

#[derive(Clone, Debug)]
pub struct SimilarityResult {
    pub window: usize,
    pub k: usize,
    pub m: usize,
    pub b: BlockMatrix,
    pub x_star: BlockMatrix,
    pub v: BlockMatrix,
    pub u: BlockMatrix,
    pub weights: Option<WeightData>,
    pub trace: FixedPointTrace,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub k: usize,
    pub m: usize,
    pub delta_p: f64,
    pub q_norm: f64,
    pub gamma_kq_norm: f64,
    pub b_norm: f64,
    pub b_star_norm: f64,
    pub contraction_bound: f64,
    pub max_step_ratio: f64,
    pub iterations: usize,
    pub fixed_point_residual: f64,
    pub similarity_residual: f64,
    pub min_singular_i_plus_u: f64,
    pub c_nuclear: f64,
    /// `B` was already supported in the central square.
    pub trivial: bool,
}

/// `V = J_m X*`, `U = Gamma_k Q + Gamma_m X* + (Gamma_k Q)(Gamma_m X*)` and
/// the similarity residual `||(A_0 - Q)(I + U) - (I + U)(A_0 - V)||_2`.
pub fn assemble(
    problem: &Problem,
    pre: &Preliminary,
    m: usize,
    x_star: &BlockMatrix,
) -> Result<(BlockMatrix, BlockMatrix, f64, f64)> {
    let v = x_star.apply_j(m);
    let gx = x_star.apply_gamma(&problem.ladder, m)?;
    let u = &(&pre.gamma_q + &gx) + &(&pre.gamma_q * &gx);
    let dim = u.dim();
    let iu = u.like(CMatrix::identity(dim, dim) + &u.data);
    let lhs = &problem.operator() * &iu;
    let rhs = &iu * &(&problem.a0 - &v);
    let residual = (&lhs - &rhs).hs_norm();
    let smin = linalg::smallest_singular_value(&iu.data);
    if smin < 1e-12 {
        return Err(Error::SingularTransform(smin));
    }
    Ok((v, u, residual, smin))
}

/// Outcome of the fixed-point stage for a given `B`.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub m: usize,
    pub weights: Option<WeightData>,
    pub x_star: BlockMatrix,
    pub trace: FixedPointTrace,
    /// `B` was already supported in a central square, so `X* = B`.
    pub trivial: bool,
}

/// Weights, `m` and the fixed point of `Phi` for a perturbation `B` of the
/// diagonal operator with the given ladder.
pub fn solve_reduced(b: &BlockMatrix, ladder: &Ladder, delta_p: f64, cfg: &SimopConfig) -> Result<Reduced> {
    match weights_of(b, ladder, delta_p) {
        Ok(w) => {
            let m = choose_m(&w, b);
            let (x_star, trace) = fixed_point(b, m, ladder, Some(&w), cfg)?;
            Ok(Reduced { m, weights: Some(w), x_star, trace, trivial: false })
        }
        Err(Error::TrivialPerturbation(m0)) => {
            let trace = FixedPointTrace { iterations: 1, steps: vec![b.hs_norm()], ratios: vec![], residual: 0.0, ball_ratio: 0.0 };
            Ok(Reduced { m: m0, weights: None, x_star: b.clone(), trace, trivial: true })
        }
        Err(e) => Err(e),
    }
}

/// Full run on one window.
pub fn run(problem: &Problem, cfg: &SimopConfig) -> Result<SimilarityResult> {
    let (k, _) = choose_k(&problem.q, &problem.ladder, cfg.k_margin)?;
    let pre = build_b(&problem.q, k, &problem.ladder)?;
    let b = pre.b.clone();
    let Reduced { m, weights, x_star, trace, trivial } = solve_reduced(&b, &problem.ladder, problem.delta_p, cfg)?;
    let (v, u, residual, smin) = assemble(problem, &pre, m, &x_star)?;
    let q_norm = problem.q.hs_norm();
    let b_star = weights.as_ref().map_or(b.hs_norm(), |w| w.star_norm(&b));
    let diagnostics = Diagnostics {
        k,
        m,
        delta_p: problem.delta_p,
        q_norm,
        gamma_kq_norm: pre.gamma_q_norm,
        b_norm: b.hs_norm(),
        b_star_norm: b_star,
        contraction_bound: weights.as_ref().map_or(0.0, |w| 4.0 * w.gamma(m) * b_star),
        max_step_ratio: trace.ratios.iter().copied().fold(0.0, f64::max),
        iterations: trace.iterations,
        fixed_point_residual: trace.residual,
        similarity_residual: residual,
        min_singular_i_plus_u: smin,
        c_nuclear: pre.c_nuclear,
        trivial,
    };
    if residual > cfg.residual_rel * q_norm.max(1e-300) && q_norm > 0.0 {
        return Err(Error::ContractViolation {
            module: "simop",
            what: "similarity residual",
            value: residual,
            threshold: cfg.residual_rel * q_norm,
        });
    }
    Ok(SimilarityResult { window: problem.window, k, m, b, x_star, v, u, weights, trace, diagnostics })
}

/// The two-level model `A = diag(a, d)`, `B = [[0, b], [c, 0]]` on the
/// indices `{-1, 1}` with `delta = ||Gamma_0||`.
#[derive(Clone, Debug)]
pub struct TwoLevel {
    pub reduced: Reduced,
    pub b: BlockMatrix,
    /// Eigenvalues of `A - J_m X*`, ordered like the diagonal of `A`.
    pub values: [C64; 2],
    /// `4 alpha~_{m+1} ||B||_*`.
    pub bound: f64,
}

pub fn two_level(a: f64, d: f64, b12: C64, b21: C64, cfg: &SimopConfig) -> Result<TwoLevel> {
    let indices: std::sync::Arc<[i64]> = vec![-1, 1].into();
    let ladder = Ladder::new(1, indices.clone(), vec![C64::from(a), C64::from(d)].into());
    let b = BlockMatrix::from_dense(1, indices, CMatrix::from_row_slice(2, 2, &[C64::from(0.0), b12, b21, C64::from(0.0)]));
    let reduced = solve_reduced(&b, &ladder, ladder.gamma_norm(0), cfg)?;
    let z = &BlockMatrix::diagonal(&ladder) - &reduced.x_star.apply_j(reduced.m);
    let e = linalg::eig_2x2(z.data[(0, 0)], z.data[(0, 1)], z.data[(1, 0)], z.data[(1, 1)]);
    let bound = reduced.weights.as_ref().map_or(0.0, |w| 4.0 * w.gamma(reduced.m) * w.star_norm(&b));
    Ok(TwoLevel { reduced, b, values: e, bound })
}
