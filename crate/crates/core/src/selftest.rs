//! A fixed, seeded invariant suite over the bundled potentials. The report
//! prints values to four significant digits so two runs compare byte for
//! byte.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blockmat::{commutator_residual, BlockMatrix, Ladder};
use crate::bundled;
use crate::config::RunConfig;
use crate::error::Result;
use crate::evolution::{exp_block2, smooth_state, GroupEvaluator};
use crate::freebasis::free_eigenvalue;
use crate::linalg::{self, c64, CMatrix, CVector, C64, I};
use crate::oracle::series_exp;
use crate::pipeline::{compare_solved, solve};
use crate::potential::derive;
use crate::simop::{two_level, SimopConfig};
use crate::spectrum;

pub const SEED: u64 = 0x5EED;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    fn below(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        let pass = value <= limit && value.is_finite();
        self.checks.push(Check { name: name.into(), value, limit, pass });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{}  {:<44} {:>11.3e}  <= {:.3e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.limit
            );
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        out
    }
}

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_block_matrix<R: Rng>(rng: &mut R, block: usize, indices: std::sync::Arc<[i64]>) -> BlockMatrix {
    let d = block * indices.len();
    BlockMatrix::from_dense(block, indices, CMatrix::from_fn(d, d, |_, _| random_complex(rng)))
}

pub fn random_vector<R: Rng>(rng: &mut R, dim: usize) -> CVector {
    CVector::from_fn(dim, |_, _| random_complex(rng))
}

/// Largest `|mu_a - mu_b|^{-1}` over distinct free indices: the norm of
/// `Gamma_0` for the unperturbed ladder.
pub fn free_gamma_bound(bc: crate::potential::BoundaryCondition, omega: f64) -> f64 {
    1.0 / (free_eigenvalue(bc, omega, 1) - free_eigenvalue(bc, omega, 0)).abs()
}

/// Runs the whole suite with the given window and random sample count.
pub fn run_suite(window: usize, samples: usize) -> Result<SelftestReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut rep = SelftestReport::default();
    let cfg = RunConfig::default();

    let toy = two_level(1.0, -1.0, c64(0.1, 0.0), c64(0.1, 0.0), &SimopConfig::default())?;
    let s = 1.01f64.sqrt();
    let err = (toy.values[0] - s).norm().max((toy.values[1] + s).norm());
    rep.below("toy: eigenvalues +-sqrt(1.01)", err, 1e-12);
    let worst = toy.reduced.trace.ratios.iter().copied().fold(0.0, f64::max);
    rep.below("toy: step ratio over 4 gamma ||B||_*", worst - toy.bound, 1e-10);
    let b_norm = toy.b.hs_norm();
    rep.below("toy: ||X* - B|| / 3||B||", (&toy.reduced.x_star - &toy.b).hs_norm() / (3.0 * b_norm), 1.0);

    for t in [0.5, -1.5, 4.0] {
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let m = CMatrix::from_fn(2, 2, |_, _| random_complex(&mut rng));
            worst = worst.max(linalg::frobenius(&(exp_block2(&m, t) - series_exp(&(&m * (I * t))))));
        }
        rep.below(format!("exp_block2 vs series, t = {t}"), worst, 1e-12);
    }

    for (name, spec) in bundled::all() {
        let derived = derive(&spec, &cfg.derive_options())?;
        let solved = solve(&derived, window, &cfg)?;
        let (problem, result) = (&solved.problem, &solved.result);

        let ladder = &problem.ladder;
        let (mut j_idem, mut j_gamma, mut comm, mut free_ratio): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
        let free = Ladder::free(derived.bc(), derived.omega(), window);
        for _ in 0..samples {
            let x = random_block_matrix(&mut rng, problem.a0.block, problem.a0.indices.clone());
            let k = rng.random_range(0..=window / 2);
            let jx = x.apply_j(k);
            j_idem = j_idem.max((&jx.apply_j(k) - &jx).hs_norm());
            j_gamma = j_gamma.max(x.apply_gamma(ladder, k)?.apply_j(k).hs_norm());
            comm = comm.max(commutator_residual(&problem.a0, &x, ladder, k)? / x.hs_norm());
            free_ratio = free_ratio.max(x.apply_gamma(&free, 0)?.hs_norm() / x.hs_norm());
        }
        rep.below(format!("{name}: J idempotent"), j_idem, 0.0);
        rep.below(format!("{name}: J Gamma = 0"), j_gamma, 0.0);
        rep.below(format!("{name}: commutator identity"), comm, 1e-12);
        rep.below(
            format!("{name}: free Gamma_0 over its bound"),
            free_ratio / free_gamma_bound(derived.bc(), derived.omega()),
            1.0,
        );
        rep.below(format!("{name}: window Gamma norm vs delta_P"), (ladder.gamma_norm(0) - derived.delta_p).abs(), 1e-10);

        let q_norm = problem.q.hs_norm();
        rep.below(format!("{name}: similarity residual / ||Q||"), result.diagnostics.similarity_residual / q_norm, 1e-8);
        let report = spectrum::spectral_report(&derived, problem, result);
        rep.below(
            format!("{name}: eigenvalue match / 10 residual"),
            report.decomposition_error / (10.0 * result.diagnostics.similarity_residual),
            1.0,
        );
        let trace = report.tail.iter().map(|t| t.trace_defect).fold(0.0, f64::max);
        rep.below(format!("{name}: tail trace identity"), trace, 1e-12);

        let eval = GroupEvaluator::new(&derived, problem, result)?;
        let mut law: f64 = 0.0;
        for _ in 0..samples.min(5) {
            let x = random_vector(&mut rng, eval.dim());
            let (t, s) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let two = eval.full_group(t, &eval.full_group(s, &x));
            law = law.max(linalg::vec_norm(&(eval.full_group(t + s, &x) - two)) / linalg::vec_norm(&x));
        }
        rep.below(format!("{name}: group law"), law, 1e-10);
        let x = smooth_state(eval.dim(), eval.block);
        let mut excess = f64::NEG_INFINITY;
        for n in eval.m + 1..=window {
            let (actual, bound) = eval.truncation_bound(&x, 1.0, n);
            excess = excess.max(actual - bound);
        }
        rep.below(format!("{name}: truncation bound excess"), excess.max(0.0), 1e-10);
        let scan = eval.equiconvergence_scan();
        rep.below(format!("{name}: projection cross products"), scan.max_cross_product, 1e-8);
        rep.below(format!("{name}: projection sum defect"), scan.sum_defect, 1e-8);

        let smaller = solve(&derived, window * 3 / 4, &cfg)?;
        rep.below(format!("{name}: interior drift"), compare_solved(&smaller, &solved).max_interior_drift, 1e-8);
    }
    Ok(rep)
}

/// The suite as run by the `selftest` subcommand.
pub fn run_default() -> Result<SelftestReport> {
    run_suite(16, 10)
}
