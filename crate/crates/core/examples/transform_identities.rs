// The transforms J_k and Gamma_k on a random block matrix: J is a
// projection, Gamma lands in its kernel and solves the commutator equation
// `A Gamma X - (Gamma X) A = X - J X`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dirac_simop::blockmat::{commutator_residual, Ladder};
use dirac_simop::bundled;
use dirac_simop::potential::{derive, DeriveOptions};
use dirac_simop::selftest::random_block_matrix;
use dirac_simop::simop::Problem;
use dirac_simop::Result;

pub fn run_example() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let window = 12;
    for name in ["per_generic", "ap_resonant", "dir_even"] {
        let derived = derive(&bundled::load(name).unwrap(), &DeriveOptions::default())?;
        let problem = Problem::new(&derived, window)?;
        let (a0, ladder) = (&problem.a0, &problem.ladder);
        let x = random_block_matrix(&mut rng, a0.block, a0.indices.clone());
        println!("{name}: {0}x{0} blocks of size {1}", a0.indices.len(), a0.block);
        for k in [0, 2, 4] {
            let jx = x.apply_j(k);
            let gx = x.apply_gamma(ladder, k)?;
            println!(
                "  k = {k}: ||J X|| {:.4}  ||J J X - J X|| {:.1e}  ||J Gamma X|| {:.1e}  commutator {:.1e}",
                jx.hs_norm(),
                (&jx.apply_j(k) - &jx).hs_norm(),
                gx.apply_j(k).hs_norm(),
                commutator_residual(a0, &x, ladder, k)?
            );
        }
        let free = Ladder::free(derived.bc(), derived.omega(), window);
        println!(
            "  ||Gamma_k|| over the window: k = 0 {:.4} (delta_P {:.4}), k = 4 {:.4}; free ladder {:.4}",
            ladder.gamma_norm(0),
            derived.delta_p,
            ladder.gamma_norm(4),
            free.gamma_norm(0)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
