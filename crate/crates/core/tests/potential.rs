use std::f64::consts::PI;

use proptest::prelude::*;

use dirac_simop::bundled;
use dirac_simop::linalg::{c64, C64};
use dirac_simop::potential::{derive, BoundaryCondition, Branch, DeriveOptions, FourierSeries, PotentialSpec};
use dirac_simop::Error;

fn single_harmonic(m1: C64, a: C64, m4: C64, b: C64, c: C64, d: C64) -> PotentialSpec {
    PotentialSpec::new(
        2.0 * PI,
        BoundaryCondition::Per,
        [
            FourierSeries::from_pairs([(0, m1), (1, a)]),
            FourierSeries::from_pairs([(1, c)]),
            FourierSeries::from_pairs([(-1, d)]),
            FourierSeries::from_pairs([(0, m4), (1, b)]),
        ],
    )
    .unwrap()
}

fn factorial(k: i32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn small_complex() -> impl Strategy<Value = C64> {
    (-0.3f64..0.3, -0.3f64..0.3).prop_map(|(re, im)| c64(re, im))
}

fn coefficient_list() -> impl Strategy<Value = Vec<(i64, f64, f64)>> {
    prop::collection::vec((-4i64..=4, -0.5f64..0.5, -0.5f64..0.5), 0..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// With one harmonic `s = e^{it}` on the diagonal the phase is
    /// `exp((a + b)(s - 1))`, so `q2^(1 + k) = c e^{-(a+b)} (a+b)^k / k!` and
    /// `q3^(k - 1) = d e^{a+b} (-(a+b))^k / k!`.
    #[test]
    fn transformed_coefficients_match_the_exponential_series(
        m1 in small_complex(), a in small_complex(), m4 in small_complex(),
        b in small_complex(), c in small_complex(), d in small_complex(),
    ) {
        let spec = single_harmonic(m1, a, m4, b, c, d);
        let Ok(derived) = derive(&spec, &DeriveOptions::default()) else { return Ok(()) };
        let s = a + b;
        for k in 0..8 {
            let q2 = c * (-s).exp() * s.powi(k) / factorial(k);
            let q3 = d * s.exp() * (-s).powi(k) / factorial(k);
            prop_assert!((derived.q2.get(1 + k as i64) - q2).norm() < 1e-13);
            prop_assert!((derived.q3.get(k as i64 - 1) - q3).norm() < 1e-13);
        }
    }

    #[test]
    fn scalars_follow_the_diagonal_means(
        p1 in coefficient_list(), p4 in coefficient_list(), omega in 0.5f64..8.0,
    ) {
        let series = |v: &[(i64, f64, f64)]| FourierSeries::from_pairs(v.iter().map(|&(n, re, im)| (n, c64(re, im))));
        let (s1, s4) = (series(&p1), series(&p4));
        let spec = PotentialSpec::new(omega, BoundaryCondition::Ap, [s1.clone(), FourierSeries::zero(), FourierSeries::zero(), s4.clone()]).unwrap();
        // trapezoid means on a fine grid, independent of the FFT path
        let g = 512;
        let mean = |s: &FourierSeries| (0..g).map(|j| s.eval(omega, omega * j as f64 / g as f64)).sum::<C64>() / g as f64;
        let (a1, a4) = (mean(&s1), mean(&s4));
        let Ok(derived) = derive(&spec, &DeriveOptions::default()) else { return Ok(()) };
        prop_assert!((derived.nu - (a1 + a4) * 0.5).norm() < 1e-12);
        prop_assert!((derived.beta - (a1 - a4)).norm() < 1e-12);
        prop_assert!((derived.r - (a1 - a4) * omega / (2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn toml_roundtrip(
        p in prop::array::uniform4(coefficient_list()), omega in 0.5f64..8.0, bc in 0usize..3,
    ) {
        let bc = [BoundaryCondition::Per, BoundaryCondition::Ap, BoundaryCondition::Dir][bc];
        let series = |v: &[(i64, f64, f64)]| FourierSeries::from_pairs(v.iter().map(|&(n, re, im)| (n, c64(re, im))));
        let spec = PotentialSpec::new(omega, bc, [series(&p[0]), series(&p[1]), series(&p[2]), series(&p[3])]).unwrap();
        let back = PotentialSpec::from_toml_str(&spec.to_toml_string(), "roundtrip").unwrap();
        prop_assert_eq!(back, spec);
    }
}

#[test]
fn bundled_potentials_cover_every_branch() {
    let opts = DeriveOptions::default();
    let branches: Vec<(String, BoundaryCondition, Branch)> = bundled::all()
        .into_iter()
        .map(|(n, s)| {
            let d = derive(&s, &opts).unwrap();
            (n.to_string(), d.bc(), d.branch)
        })
        .collect();
    let resonant = Branch::ResonantInteger { r_int: 1 };
    assert_eq!(
        branches,
        vec![
            ("per_generic".into(), BoundaryCondition::Per, Branch::Generic),
            ("ap_generic".into(), BoundaryCondition::Ap, Branch::Generic),
            ("per_resonant".into(), BoundaryCondition::Per, resonant),
            ("ap_resonant".into(), BoundaryCondition::Ap, resonant),
            ("dir_even".into(), BoundaryCondition::Dir, Branch::Generic),
        ]
    );
}

#[test]
fn malformed_potential_files_are_rejected() {
    assert!(PotentialSpec::from_toml_str("omega = 1.0\nbc = \"sideways\"\n", "x").is_err());
    assert!(PotentialSpec::from_toml_str("bc = \"per\"\n", "x").is_err());
    assert!(PotentialSpec::from_toml_str("omega = -2.0\nbc = \"per\"\n", "x").is_err());
    assert!(PotentialSpec::from_toml_str("omega = 1.0\nbc = \"per\"\np5 = []\n", "x").is_err());
}

#[test]
fn near_integer_r_outside_the_branch_tolerance_is_refused() {
    // r = 1 - 2e-9 misses the resonant branch but puts a divisor near zero
    let beta = 1.0 - 2e-9;
    let spec = PotentialSpec::new(
        2.0 * PI,
        BoundaryCondition::Per,
        [FourierSeries::constant(c64(beta, 0.0)), FourierSeries::zero(), FourierSeries::zero(), FourierSeries::zero()],
    )
    .unwrap();
    match derive(&spec, &DeriveOptions::default()) {
        Err(Error::NearResonance { delta_p, .. }) => assert!(delta_p > 1e8),
        other => panic!("expected near-resonance, got {:?}", other.map(|d| d.delta_p)),
    }
}
