use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dirac_simop::blockmat::{build_q, commutator_residual, BlockMatrix, Ladder};
use dirac_simop::bundled;
use dirac_simop::linalg::{c64, C64};
use dirac_simop::potential::{derive, BoundaryCondition, DeriveOptions, FourierSeries, PotentialSpec};
use dirac_simop::selftest::random_block_matrix;
use dirac_simop::simop::Problem;

const NAMES: [&str; 5] = ["per_generic", "ap_generic", "per_resonant", "ap_resonant", "dir_even"];

fn problem(name: &str, window: usize) -> Problem {
    let derived = derive(&bundled::load(name).unwrap(), &DeriveOptions::default()).unwrap();
    Problem::new(&derived, window).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn transform_identities(seed in any::<u64>(), which in 0usize..5, window in 2usize..10, k_frac in 0.0f64..1.0) {
        let p = problem(NAMES[which], window);
        let k = (k_frac * (window / 2) as f64) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_block_matrix(&mut rng, p.a0.block, p.a0.indices.clone());
        let jx = x.apply_j(k);
        let gx = x.apply_gamma(&p.ladder, k).unwrap();
        let norm = x.hs_norm();

        prop_assert_eq!((&jx.apply_j(k) - &jx).hs_norm(), 0.0);
        prop_assert_eq!(gx.apply_j(k).hs_norm(), 0.0);
        prop_assert!(commutator_residual(&p.a0, &x, &p.ladder, k).unwrap() < 1e-12 * norm);
        prop_assert!(gx.hs_norm() <= p.ladder.gamma_norm(k) * norm * (1.0 + 1e-12));
        // J is an orthogonal projection for the Hilbert-Schmidt inner product
        let rest = (&x - &jx).hs_norm();
        prop_assert!((jx.hs_norm().hypot(rest) - norm).abs() < 1e-12 * norm);
        prop_assert!(x.op_norm() <= norm * (1.0 + 1e-12));
    }

    #[test]
    fn free_gamma_is_bounded_by_the_smallest_gap(seed in any::<u64>(), bc in 0usize..3, omega in 0.5f64..6.0) {
        let bc = [BoundaryCondition::Per, BoundaryCondition::Ap, BoundaryCondition::Dir][bc];
        let free = Ladder::free(bc, omega, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_block_matrix(&mut rng, bc.block_size(), BlockMatrix::window(6));
        let gap = match bc {
            BoundaryCondition::Dir => std::f64::consts::PI / omega,
            _ => 2.0 * std::f64::consts::PI / omega,
        };
        prop_assert!(x.apply_gamma(&free, 0).unwrap().hs_norm() <= x.hs_norm() / gap * (1.0 + 1e-12));
    }
}

/// `J_1` on a window of half-width 2 keeps the central 3x3 square of blocks
/// and the two far diagonal blocks.
#[test]
fn j_keeps_the_central_square_and_the_far_diagonal() {
    let idx = BlockMatrix::window(2);
    let x = BlockMatrix::from_dense(1, idx.clone(), dirac_simop::linalg::CMatrix::from_element(5, 5, c64(1.0, 0.0)));
    let kept: Vec<Vec<u8>> = (0..5)
        .map(|i| (0..5).map(|j| u8::from(x.apply_j(1).data[(i, j)] != C64::from(0.0))).collect())
        .collect();
    assert_eq!(
        kept,
        vec![
            vec![1, 0, 0, 0, 0],
            vec![0, 1, 1, 1, 0],
            vec![0, 1, 1, 1, 0],
            vec![0, 1, 1, 1, 0],
            vec![0, 0, 0, 0, 1],
        ]
    );
}

/// Real diagonal entries and `p3 = conj(p2)` make the operator self-adjoint,
/// and the transformed perturbation stays Hermitian.
#[test]
fn self_adjoint_potentials_give_a_hermitian_perturbation() {
    let p1 = FourierSeries::from_pairs([(0, c64(0.3, 0.0)), (1, c64(0.1, 0.05)), (-1, c64(0.1, -0.05))]);
    let p4 = FourierSeries::from_pairs([(0, c64(-0.2, 0.0)), (2, c64(0.0, 0.1)), (-2, c64(0.0, -0.1))]);
    let p2 = FourierSeries::from_pairs([(1, c64(0.2, 0.1)), (-2, c64(0.05, 0.0))]);
    let p3 = FourierSeries::from_pairs(p2.0.iter().map(|(&n, &c)| (-n, c.conj())));
    for bc in [BoundaryCondition::Per, BoundaryCondition::Ap, BoundaryCondition::Dir] {
        let spec = PotentialSpec::new(5.0, bc, [p1.clone(), p2.clone(), p3.clone(), p4.clone()]).unwrap();
        let q = build_q(&derive(&spec, &DeriveOptions::default()).unwrap(), 10).unwrap();
        let defect = dirac_simop::linalg::frobenius(&(&q.data - q.data.adjoint()));
        assert!(defect < 1e-13 * q.hs_norm(), "{bc:?}: {defect:e}");
    }
}
