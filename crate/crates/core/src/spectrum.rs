//! Eigenvalue asymptotics: exact eigenvalues of the far blocks of
//! `A_0 - V`, the second-order predictions, and a dense oracle.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::blockmat::{BlockMatrix, Ladder};
use crate::freebasis::FreeBasis;
use crate::linalg::{self, CMatrix, C64};
use crate::potential::{BoundaryCondition, Branch, DerivedPotential};
use crate::simop::{Problem, SimilarityResult};

/// Eigenvalues of a 2x2 block. Near-degenerate blocks are first balanced by
/// `diag(1, rho)` with `rho = sqrt(c/b)` so the off-diagonal entries agree.
pub fn block_eigenvalues(z: &CMatrix) -> Vec<C64> {
    match z.nrows() {
        1 => vec![z[(0, 0)]],
        2 => {
            let (a, b, c, d) = (z[(0, 0)], z[(0, 1)], z[(1, 0)], z[(1, 1)]);
            let off = (b * c).norm().sqrt();
            if off > 0.0 && (a - d).norm() < off && b.norm() > 0.0 && c.norm() > 0.0 {
                let s = (b * c).sqrt();
                linalg::eig_2x2(a, s, s, d).to_vec()
            } else {
                linalg::eig_2x2(a, b, c, d).to_vec()
            }
        }
        _ => linalg::eigenvalues(z),
    }
}

/// Eigenvalue pairs of the far blocks `(A_0 - V)_{nn}`, `m < |n| <= N`.
pub fn tail_eigenvalues(a0: &BlockMatrix, result: &SimilarityResult) -> Vec<(i64, Vec<C64>, f64)> {
    let z = a0 - &result.v;
    z.indices
        .iter()
        .filter(|n| n.unsigned_abs() as usize > result.m)
        .map(|&n| {
            let block = z.block_at(n, n);
            let eigs = block_eigenvalues(&block);
            let defect = (eigs.iter().sum::<C64>() - block.trace()).norm();
            (n, eigs, defect)
        })
        .collect()
}

/// Eigenvalues of the central block `(A_0 - V)_(m)`.
pub fn central_eigenvalues(a0: &BlockMatrix, result: &SimilarityResult) -> Vec<C64> {
    let z = a0 - &result.v;
    let b = z.block;
    let lo = z.position(-(result.m as i64)).unwrap() * b;
    let hi = (z.position(result.m as i64).unwrap() + 1) * b;
    linalg::eigenvalues(&z.data.view((lo, lo), (hi - lo, hi - lo)).into_owned())
}

/// Second-order prediction of `sigma_n`. In the resonant branch the second
/// entry, when present, is the variant in which the shared sum is attached
/// to `lambda_n - p4^(0)` instead of the regrouped point.
#[derive(Clone, Debug, Serialize)]
pub struct Prediction {
    pub n: i64,
    pub first_order: Vec<C64>,
    pub second_order: Vec<C64>,
    pub variant: Option<Vec<C64>>,
    /// Leading splitting `sqrt(q2^ q3^)` at the matched index (resonant only).
    pub splitting: Option<C64>,
}

/// Precomputed coefficient products for the prediction sums.
pub struct Predictor<'a> {
    derived: &'a DerivedPotential,
    /// `(L, q2^(-L-eps) q3^(L+eps))` for nonzero products.
    products: Vec<(i64, C64)>,
    /// Dirichlet entries `theta_M`, `|M| <= grid`.
    theta: Vec<C64>,
}

impl<'a> Predictor<'a> {
    pub fn new(derived: &'a DerivedPotential) -> Self {
        let half = derived.grid as i64;
        let mut products = Vec::new();
        let mut theta = Vec::new();
        match derived.bc() {
            BoundaryCondition::Dir => {
                theta = (-half..=half).map(|m| derived.dir_theta(m)).collect();
            }
            bc => {
                let eps = bc.epsilon();
                for l in -half..=half {
                    let p = derived.q2.get(-l - eps) * derived.q3.get(l + eps);
                    if p != C64::from(0.0) {
                        products.push((l, p));
                    }
                }
            }
        }
        Self { derived, products, theta }
    }

    fn theta(&self, m: i64) -> C64 {
        let half = self.derived.grid as i64;
        if m.abs() > half {
            return C64::from(0.0);
        }
        self.theta[(m + half) as usize]
    }

    pub fn predict(&self, n: i64) -> Prediction {
        let d = self.derived;
        let omega = d.omega();
        let basis_lambda = |k: i64| C64::from(crate::freebasis::free_eigenvalue(d.bc(), omega, k));
        match (d.bc(), d.branch) {
            (BoundaryCondition::Dir, _) => {
                let base = basis_lambda(n) - d.nu;
                let first = base - self.theta(2 * n);
                let half = d.grid as i64;
                let sum: C64 = (-2 * half..=2 * half)
                    .filter(|&l| l != 0)
                    .map(|l| self.theta(l + 2 * n).powi(2) / l as f64)
                    .sum();
                Prediction {
                    n,
                    first_order: vec![first],
                    second_order: vec![first - sum * (omega / PI)],
                    variant: None,
                    splitting: None,
                }
            }
            (_, Branch::Generic) => {
                let wb = d.beta * omega;
                let (mut s1, mut s2) = (C64::from(0.0), C64::from(0.0));
                for &(l, p) in &self.products {
                    if l == 2 * n {
                        continue;
                    }
                    let base = 2.0 * PI * (l - 2 * n) as f64;
                    s1 += p * omega / (base + wb);
                    s2 += p * omega / (base - wb);
                }
                let f1 = basis_lambda(n) - d.p1_mean();
                let f2 = basis_lambda(n) - d.p4_mean();
                Prediction {
                    n,
                    first_order: vec![f1, f2],
                    second_order: vec![f1 - s1, f2 - s2],
                    variant: None,
                    splitting: None,
                }
            }
            (bc, Branch::ResonantInteger { r_int }) => {
                let eps = bc.epsilon();
                let matched = 2 * n - r_int;
                let mut s = C64::from(0.0);
                for &(l, p) in &self.products {
                    if l != matched {
                        s += p * omega / (2.0 * PI * (l - matched) as f64);
                    }
                }
                let root = (d.q2.get(-matched - eps) * d.q3.get(matched + eps)).sqrt();
                let mu = basis_lambda(n) - d.p1_mean();
                let alt = basis_lambda(n) - d.p4_mean();
                Prediction {
                    n,
                    first_order: vec![mu, mu],
                    second_order: vec![mu - s - root, mu - s + root],
                    variant: Some(vec![mu - s - root, alt - s + root]),
                    splitting: Some(root),
                }
            }
        }
    }
}

/// Dense eigensolve of the window matrix `A_0 - Q`.
/// The Schur eigenvalues are grouped by free component and each group is
/// polished by a Rayleigh-Ritz step on its own invariant subspace, which
/// keeps near-defective pairs as accurate as their entries. A polished group
/// is kept only if every value moved less than a quarter of the distance
/// from the group to the rest of the spectrum.
pub fn oracle_spectrum(problem: &Problem) -> Vec<C64> {
    let a = problem.operator().data;
    let raw = linalg::eigenvalues(&a);
    let clusters = cluster(&raw, &problem.ladder);
    let mut groups: Vec<Vec<C64>> = clusters.by_component.into_iter().map(|(_, g)| g).filter(|g| !g.is_empty()).collect();
    groups.extend(clusters.unmatched.into_iter().map(|z| vec![z]));
    let polish = |g: Vec<C64>| -> Vec<C64> {
        let sigma = g.iter().sum::<C64>() / g.len() as f64;
        let spread = g.iter().map(|z| (z - sigma).norm()).fold(0.0, f64::max);
        let outside = raw
            .iter()
            .filter(|z| !g.contains(z))
            .map(|z| (z - sigma).norm())
            .fold(f64::INFINITY, f64::min);
        let polished = linalg::refine_cluster(&a, sigma, g.len(), 60).filter(|p| {
            p.iter().all(|z| (z - sigma).norm() < spread + 0.25 * (outside - spread))
        });
        polished.unwrap_or(g)
    };
    let mut eigs: Vec<C64> = groups.into_par_iter().flat_map_iter(polish).collect();
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    eigs
}

/// Oracle eigenvalues grouped by the component of the nearest free point.
/// Eigenvalues farther than `d_min / 4` from every point, or components
/// that collect the wrong number of eigenvalues, are reported as ambiguous.
#[derive(Clone, Debug, Serialize)]
pub struct Clustering {
    pub by_component: Vec<(i64, Vec<C64>)>,
    pub unmatched: Vec<C64>,
    pub ambiguous: Vec<i64>,
}

pub fn cluster(eigs: &[C64], ladder: &Ladder) -> Clustering {
    let b = ladder.block;
    let mut dmin = f64::INFINITY;
    for i in 0..ladder.indices.len() {
        for l in 0..ladder.indices.len() {
            if i == l {
                continue;
            }
            for j in 0..b {
                for p in 0..b {
                    dmin = dmin.min((ladder.points[i * b + j] - ladder.points[l * b + p]).norm());
                }
            }
        }
    }
    let band = dmin / 4.0;
    let mut groups: Vec<Vec<C64>> = vec![Vec::new(); ladder.indices.len()];
    let mut unmatched = Vec::new();
    for &z in eigs {
        let (pos, dist) = ladder
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (i / b, (z - p).norm()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if dist <= band {
            groups[pos].push(z);
        } else {
            unmatched.push(z);
        }
    }
    let mut ambiguous = Vec::new();
    let by_component = ladder
        .indices
        .iter()
        .zip(groups)
        .map(|(&n, g)| {
            if g.len() != b {
                ambiguous.push(n);
            }
            (n, g)
        })
        .collect();
    Clustering { by_component, unmatched, ambiguous }
}

/// Largest error of the best pairing between two small point sets.
pub fn pair_error(a: &[C64], b: &[C64]) -> f64 {
    match (a.len(), b.len()) {
        (1, 1) => (a[0] - b[0]).norm(),
        (2, 2) => {
            let straight = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
            let crossed = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
            straight.min(crossed)
        }
        _ => linalg::multiset_distance(a, b),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub n: i64,
    pub block_eigs: Vec<C64>,
    pub trace_defect: f64,
    pub prediction: Prediction,
    pub oracle: Option<Vec<C64>>,
    /// Oracle minus first-order values.
    pub first_residual: Option<f64>,
    /// Oracle minus second-order values.
    pub second_residual: Option<f64>,
    pub variant_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub bc: BoundaryCondition,
    pub branch: Branch,
    pub window: usize,
    pub m: usize,
    pub central: Vec<C64>,
    pub tail: Vec<TailRow>,
    pub oracle: Vec<C64>,
    pub ambiguous: Vec<i64>,
    /// Optimal-matching distance between `central u tail` and the oracle.
    pub decomposition_error: f64,
    pub first_fit: Option<DecayFit>,
    pub second_fit: Option<DecayFit>,
    /// Which resonant variant tracks the oracle better, when applicable.
    pub resonant_variant: Option<String>,
}

pub fn spectral_report(derived: &DerivedPotential, problem: &Problem, result: &SimilarityResult) -> SpectralReport {
    let oracle = oracle_spectrum(problem);
    let clusters = cluster(&oracle, &problem.ladder);
    let predictor = Predictor::new(derived);
    let central = central_eigenvalues(&problem.a0, result);
    let tail: Vec<TailRow> = tail_eigenvalues(&problem.a0, result)
        .into_iter()
        .map(|(n, block_eigs, trace_defect)| {
            let prediction = predictor.predict(n);
            let group = clusters
                .by_component
                .iter()
                .find(|(k, _)| *k == n)
                .filter(|_| !clusters.ambiguous.contains(&n))
                .map(|(_, g)| g.clone());
            let first_residual = group.as_ref().map(|g| pair_error(g, &prediction.first_order));
            let second_residual = group.as_ref().map(|g| pair_error(g, &prediction.second_order));
            let variant_residual = group
                .as_ref()
                .zip(prediction.variant.as_ref())
                .map(|(g, v)| pair_error(g, v));
            TailRow { n, block_eigs, trace_defect, prediction, oracle: group, first_residual, second_residual, variant_residual }
        })
        .collect();
    let mut assembled = central.clone();
    assembled.extend(tail.iter().flat_map(|t| t.block_eigs.iter().copied()));
    let decomposition_error = linalg::multiset_distance(&assembled, &oracle);

    let interior = (problem.window / 2) as i64;
    let collect = |f: &dyn Fn(&TailRow) -> Option<f64>| -> Vec<(f64, f64)> {
        let mut by_abs: std::collections::BTreeMap<i64, f64> = Default::default();
        for row in tail.iter().filter(|t| t.n.abs() <= interior) {
            if let Some(v) = f(row) {
                let e = by_abs.entry(row.n.abs()).or_insert(0.0);
                *e = e.max(v);
            }
        }
        by_abs.into_iter().map(|(n, v)| (n as f64, v)).collect()
    };
    let scale = free_scale(derived, interior);
    let first_fit = residual_fit(&collect(&|t| t.first_residual), scale).ok();
    let second_fit = residual_fit(&collect(&|t| t.second_residual), scale).ok();
    let resonant_variant = matches!(derived.branch, Branch::ResonantInteger { .. }).then(|| {
        let main: f64 = tail.iter().filter_map(|t| t.second_residual).sum();
        let alt: f64 = tail.iter().filter_map(|t| t.variant_residual).sum();
        if main <= alt { "regrouped point (-p1^(0) on both)" } else { "-p4^(0) on the second point" }.to_string()
    });

    SpectralReport {
        bc: derived.bc(),
        branch: derived.branch,
        window: problem.window,
        m: result.m,
        central,
        tail,
        oracle,
        ambiguous: clusters.ambiguous,
        decomposition_error,
        first_fit,
        second_fit,
        resonant_variant,
    }
}

fn free_scale(derived: &DerivedPotential, n: i64) -> f64 {
    FreeBasis::new(derived, n.unsigned_abs() as usize)
        .points_of(n)
        .iter()
        .map(|z| z.norm())
        .fold(1.0, f64::max)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DecayFit {
    /// Fitted `p` in `C |n|^{-p}`.
    pub p: f64,
    pub c: f64,
    /// Two standard errors on `p`.
    pub band: f64,
    pub points: usize,
    pub in_l2: bool,
    pub in_l4_3: bool,
    pub in_l1: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("inconclusive fit: {0} clean points")]
pub struct Inconclusive(pub usize);

/// Log-log least squares of `(|n|, residual)` pairs. Residuals below the
/// round-off floor `1e-13 * scale` are dropped as unclean.
pub fn residual_fit(samples: &[(f64, f64)], scale: f64) -> Result<DecayFit, Inconclusive> {
    let floor = 1e-13 * scale;
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(n, v)| *n >= 1.0 && *v > floor && v.is_finite())
        .map(|(n, v)| (n.ln(), v.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Inconclusive(pts.len()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = if pts.len() > 2 { (sse / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    let p = -slope;
    Ok(DecayFit {
        p,
        c: intercept.exp(),
        band: 2.0 * se,
        points: pts.len(),
        in_l2: p > 0.5,
        in_l4_3: p > 0.75,
        in_l1: p > 1.0,
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub enum Balance {
    Balanced { c: f64, big_c: f64 },
    Unbalanced { at: i64 },
}

/// Compares `|q3^(2n - r + eps)|` with `|q2^(-2n + r - eps)|` over
/// `n_fit <= |n| <= n_max`. Matched pairs that are both negligible carry no
/// information and are skipped.
pub fn balanced_check(derived: &DerivedPotential, r_int: i64, n_fit: i64, n_max: i64) -> Balance {
    let eps = derived.bc().epsilon();
    let scale = derived.q2.iter().chain(derived.q3.iter()).map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let tiny = 1e-14 * scale.max(f64::MIN_POSITIVE);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for n in (-n_max..=n_max).filter(|n| n.abs() >= n_fit) {
        let j = 2 * n - r_int + eps;
        let (a, b) = (derived.q2.get(-j).norm(), derived.q3.get(j).norm());
        match (a > tiny, b > tiny) {
            (false, false) => continue,
            (true, true) => {
                lo = lo.min(b / a);
                hi = hi.max(b / a);
            }
            _ => return Balance::Unbalanced { at: n },
        }
    }
    if hi == 0.0 {
        lo = 1.0;
        hi = 1.0;
    }
    Balance::Balanced { c: lo, big_c: hi }
}

/// Half of the splitting of a pair, compared with the predicted root up to
/// sign: `min(|h - s|, |h + s|) / |s|`.
pub fn splitting_error(pair: &[C64], root: C64) -> f64 {
    let h = (pair[0] - pair[1]) * 0.5;
    (h - root).norm().min((h + root).norm()) / root.norm()
}

/// `lambda_n - p1^(0)`, `lambda_n - p4^(0)` (or `lambda_n - nu`): the exact
/// spectrum when the off-diagonal potential vanishes.
pub fn diagonal_closed_form(derived: &DerivedPotential, n: i64) -> Vec<C64> {
    let l = crate::freebasis::free_eigenvalue(derived.bc(), derived.omega(), n);
    match derived.bc() {
        BoundaryCondition::Dir => vec![l - derived.nu],
        _ => vec![l - derived.p1_mean(), l - derived.p4_mean()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn fit_recovers_a_power_law() {
        let s: Vec<(f64, f64)> = (2..30).map(|n| (n as f64, 3.0 * (n as f64).powf(-1.7))).collect();
        let f = residual_fit(&s, 1.0).unwrap();
        assert!((f.p - 1.7).abs() < 1e-12 && (f.c - 3.0).abs() < 1e-10);
        assert!(f.in_l1);
    }

    #[test]
    fn too_few_points_is_inconclusive() {
        assert_eq!(residual_fit(&[(1.0, 1.0), (2.0, 1e-20)], 1.0), Err(Inconclusive(1)));
    }

    #[test]
    fn balancing_keeps_the_spectrum() {
        let z = CMatrix::from_row_slice(2, 2, &[c64(5.0, 0.0), c64(1e-3, 0.0), c64(4e-3, 0.0), c64(5.0, 1e-4)]);
        let e = block_eigenvalues(&z);
        assert!((e[0] + e[1] - z.trace()).norm() < 1e-14);
        assert!((e[0] * e[1] - z.determinant()).norm() < 1e-13);
    }
}
