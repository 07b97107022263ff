use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dirac_simop::blockmat::{BlockMatrix, Ladder};
use dirac_simop::bundled;
use dirac_simop::linalg::{self, c64, C64};
use dirac_simop::potential::{derive, BoundaryCondition, DeriveOptions, FourierSeries, PotentialSpec};
use dirac_simop::selftest::random_block_matrix;
use dirac_simop::simop::{choose_m, phi, run, two_level, weights_of, Problem, SimopConfig};
use dirac_simop::spectrum::{central_eigenvalues, oracle_spectrum, tail_eigenvalues};

fn complex_in(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| c64(a, b))
}

fn series(v: &[(i64, f64, f64)]) -> FourierSeries {
    FourierSeries::from_pairs(v.iter().map(|&(n, re, im)| (n, c64(re, im))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The decoupled two-level model keeps the eigenvalues of `A - B`.
    #[test]
    fn two_level_values_are_the_eigenvalues(
        a in -3.0f64..3.0, gap in 1.0f64..3.0, b in complex_in(0.15), c in complex_in(0.15),
    ) {
        let d = a - gap;
        let toy = two_level(a, d, b, c, &SimopConfig::default()).unwrap();
        let exact = linalg::eig_2x2(C64::from(a), -b, -c, C64::from(d));
        let err = linalg::multiset_distance(&toy.values, &exact);
        prop_assert!(err < 1e-12, "{err:e}");
        prop_assert!((toy.values[0] - a).norm() < (toy.values[0] - d).norm());
        let worst = toy.reduced.trace.ratios.iter().copied().fold(0.0, f64::max);
        prop_assert!(worst <= toy.bound + 1e-10);
    }

    #[test]
    fn scaling_b_never_lowers_m(seed in any::<u64>(), scale in 1.0f64..10.0) {
        let ladder = Ladder::free(BoundaryCondition::Per, 2.0 * std::f64::consts::PI, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_block_matrix(&mut rng, 2, BlockMatrix::window(8)).scale(C64::from(0.01));
        let m_of = |x: &BlockMatrix| choose_m(&weights_of(x, &ladder, 1.0).unwrap(), x);
        prop_assert!(m_of(&b.scale(C64::from(scale))) >= m_of(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Random small trigonometric potentials: the similarity holds and the
    /// assembled spectrum is the dense spectrum.
    #[test]
    fn random_potentials_are_decoupled(
        p in prop::array::uniform4(prop::collection::vec((-3i64..=3, -0.15f64..0.15, -0.15f64..0.15), 1..4)),
        omega in 1.0f64..5.0, bc in 0usize..3,
    ) {
        let bc = [BoundaryCondition::Per, BoundaryCondition::Ap, BoundaryCondition::Dir][bc];
        let spec = PotentialSpec::new(omega, bc, [series(&p[0]), series(&p[1]), series(&p[2]), series(&p[3])]).unwrap();
        let Ok(derived) = derive(&spec, &DeriveOptions::default()) else { return Ok(()) };
        let problem = Problem::new(&derived, 12).unwrap();
        let result = match run(&problem, &SimopConfig::default()) {
            Ok(r) => r,
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let d = &result.diagnostics;
        prop_assert!(d.similarity_residual <= 1e-8 * d.q_norm.max(1e-300) || d.q_norm == 0.0);
        let mut eigs = central_eigenvalues(&problem.a0, &result);
        eigs.extend(tail_eigenvalues(&problem.a0, &result).into_iter().flat_map(|t| t.1));
        let err = linalg::multiset_distance(&eigs, &oracle_spectrum(&problem));
        prop_assert!(err < 1e-10, "{err:e}");
    }
}

#[test]
fn the_fixed_point_is_a_fixed_point() {
    for (name, spec) in bundled::all() {
        let derived = derive(&spec, &DeriveOptions::default()).unwrap();
        let problem = Problem::new(&derived, 16).unwrap();
        let r = run(&problem, &SimopConfig::default()).unwrap();
        let again = phi(&r.x_star, &r.b, &r.b.apply_j(r.m), &problem.ladder, r.m).unwrap();
        let defect = (&again - &r.x_star).hs_norm();
        assert!(defect < 1e-12, "{name}: {defect:e}");
        assert!(r.diagnostics.min_singular_i_plus_u > 0.5, "{name}");
    }
}

#[test]
fn cuts_of_the_bundled_potentials() {
    let got: Vec<(usize, usize)> = bundled::all()
        .into_iter()
        .map(|(_, spec)| {
            let derived = derive(&spec, &DeriveOptions::default()).unwrap();
            let r = run(&Problem::new(&derived, 24).unwrap(), &SimopConfig::default()).unwrap();
            (r.k, r.m)
        })
        .collect();
    assert_eq!(got, vec![(0, 0), (0, 1), (0, 5), (0, 2), (0, 0)]);
}

#[test]
fn a_diagonal_potential_is_trivial() {
    let spec = PotentialSpec::new(
        3.0,
        BoundaryCondition::Ap,
        [series(&[(0, 0.2, 0.1), (1, 0.1, 0.0)]), FourierSeries::zero(), FourierSeries::zero(), series(&[(-1, 0.3, 0.0)])],
    )
    .unwrap();
    let derived = derive(&spec, &DeriveOptions::default()).unwrap();
    let r = run(&Problem::new(&derived, 8).unwrap(), &SimopConfig::default()).unwrap();
    assert!(r.diagnostics.trivial);
    assert_eq!(r.u.hs_norm(), 0.0);
}
