use proptest::prelude::*;

use dirac_simop::bundled;
use dirac_simop::linalg::{self, c64, CMatrix, C64};
use dirac_simop::oracle::{characteristic_root, OdeOptions};
use dirac_simop::potential::{derive, BoundaryCondition, DeriveOptions, FourierSeries, PotentialSpec};
use dirac_simop::simop::{run, Problem, SimopConfig};
use dirac_simop::spectrum::{
    block_eigenvalues, central_eigenvalues, diagonal_closed_form, spectral_report, tail_eigenvalues,
};

fn tail_block(name: &str, window: usize, n: i64) -> Vec<C64> {
    let derived = derive(&bundled::load(name).unwrap(), &DeriveOptions::default()).unwrap();
    let problem = Problem::new(&derived, window).unwrap();
    let result = run(&problem, &SimopConfig::default()).unwrap();
    tail_eigenvalues(&problem.a0, &result).into_iter().find(|t| t.0 == n).unwrap().1
}

fn series(v: &[(i64, f64, f64)]) -> FourierSeries {
    FourierSeries::from_pairs(v.iter().map(|&(n, re, im)| (n, c64(re, im))))
}

/// Roots of the characteristic function, integrated at `rtol = 1e-14`.
#[test]
fn block_eigenvalues_match_frozen_characteristic_roots() {
    let cases: [(&str, i64, &[C64]); 3] = [
        ("per_generic", 4, &[c64(3.701708928250875, 0.0), c64(4.001588807035430, 0.0)]),
        (
            "ap_generic",
            -3,
            &[c64(-5.436796350622342, -0.049234002136815), c64(-5.136891525474530, 0.000828461169790)],
        ),
        ("dir_even", 5, &[c64(4.875954367375181, 0.0)]),
    ];
    for (name, n, want) in cases {
        let got = tail_block(name, 24, n);
        let err = linalg::multiset_distance(&got, want);
        assert!(err < 1e-12, "{name} n = {n}: {err:e}");
    }
}

#[test]
fn block_eigenvalues_are_roots_of_the_characteristic_function() {
    let opts = OdeOptions::default();
    for name in ["per_generic", "ap_generic", "dir_even"] {
        let spec = bundled::load(name).unwrap();
        for z in tail_block(name, 24, 9) {
            let root = characteristic_root(&spec, z, &opts).unwrap();
            assert!((root - z).norm() < 1e-10, "{name}: {z} vs {root}");
        }
    }
}

#[test]
fn self_adjoint_spectrum_is_real() {
    let p2 = series(&[(1, 0.2, 0.1), (-1, 0.1, 0.0)]);
    let p3 = FourierSeries::from_pairs(p2.0.iter().map(|(&n, &c)| (-n, c.conj())));
    let spec = PotentialSpec::new(
        2.5,
        BoundaryCondition::Per,
        [series(&[(0, 0.4, 0.0), (1, 0.1, 0.1), (-1, 0.1, -0.1)]), p2, p3, series(&[(0, -0.1, 0.0)])],
    )
    .unwrap();
    let derived = derive(&spec, &DeriveOptions::default()).unwrap();
    let problem = Problem::new(&derived, 16).unwrap();
    let result = run(&problem, &SimopConfig::default()).unwrap();
    let mut eigs = central_eigenvalues(&problem.a0, &result);
    eigs.extend(tail_eigenvalues(&problem.a0, &result).into_iter().flat_map(|t| t.1));
    let worst = eigs.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst:e}");
}

#[test]
fn second_order_beats_first_order_far_out() {
    for name in ["per_generic", "ap_generic", "dir_even"] {
        let derived = derive(&bundled::load(name).unwrap(), &DeriveOptions::default()).unwrap();
        let problem = Problem::new(&derived, 32).unwrap();
        let result = run(&problem, &SimopConfig::default()).unwrap();
        let report = spectral_report(&derived, &problem, &result);
        for row in report.tail.iter().filter(|t| (8..=16).contains(&t.n.abs())) {
            let (f, s) = (row.first_residual.unwrap(), row.second_residual.unwrap());
            assert!(s < f, "{name} n = {}: {s:e} vs {f:e}", row.n);
        }
        assert!(report.second_fit.unwrap().p > 1.0, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn block_eigenvalues_keep_the_trace(e in prop::array::uniform8(-3.0f64..3.0)) {
        let z = CMatrix::from_row_slice(2, 2, &[c64(e[0], e[1]), c64(e[2], e[3]), c64(e[4], e[5]), c64(e[6], e[7])]);
        let ev = block_eigenvalues(&z);
        prop_assert!((ev[0] + ev[1] - z.trace()).norm() < 1e-13);
        prop_assert!((ev[0] * ev[1] - z.determinant()).norm() < 1e-12);
    }

    /// Without off-diagonal entries the eigenvalues are the shifted ladder.
    #[test]
    fn diagonal_potentials_reproduce_the_closed_form(
        p1 in prop::collection::vec((-3i64..=3, -0.3f64..0.3, -0.3f64..0.3), 0..4),
        p4 in prop::collection::vec((-3i64..=3, -0.3f64..0.3, -0.3f64..0.3), 0..4),
        omega in 1.0f64..6.0, bc in 0usize..3,
    ) {
        let bc = [BoundaryCondition::Per, BoundaryCondition::Ap, BoundaryCondition::Dir][bc];
        let spec = PotentialSpec::new(omega, bc, [series(&p1), FourierSeries::zero(), FourierSeries::zero(), series(&p4)]).unwrap();
        let Ok(derived) = derive(&spec, &DeriveOptions::default()) else { return Ok(()) };
        let problem = Problem::new(&derived, 10).unwrap();
        let result = run(&problem, &SimopConfig::default()).unwrap();
        let mut eigs = central_eigenvalues(&problem.a0, &result);
        eigs.extend(tail_eigenvalues(&problem.a0, &result).into_iter().flat_map(|t| t.1));
        let closed: Vec<C64> = (-10..=10).flat_map(|n| diagonal_closed_form(&derived, n)).collect();
        prop_assert!(linalg::multiset_distance(&eigs, &closed) < 1e-10);
    }
}
