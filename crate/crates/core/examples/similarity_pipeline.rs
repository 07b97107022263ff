// The full similarity transform on one window: the preliminary transform
// with cut k, the fixed point X* on the weighted space, and the operators
// U, V with `(A_0 - Q)(I + U) = (I + U)(A_0 - V)`. Starts with the two-level
// model whose answer is known in closed form.

use dirac_simop::bundled;
use dirac_simop::linalg::c64;
use dirac_simop::potential::{derive, DeriveOptions};
use dirac_simop::simop::{run, two_level, Problem, SimopConfig};
use dirac_simop::Result;

pub fn run_example() -> Result<()> {
    let cfg = SimopConfig::default();
    let toy = two_level(1.0, -1.0, c64(0.1, 0.0), c64(0.1, 0.0), &cfg)?;
    println!(
        "two-level model: values {:.15} and {:.15} (sqrt(1.01) = {:.15}), {} iterations",
        toy.values[0].re,
        toy.values[1].re,
        1.01f64.sqrt(),
        toy.reduced.trace.iterations
    );

    println!("\n{:<13} {:>3} {:>3} {:>10} {:>10} {:>11} {:>5} {:>10}", "potential", "k", "m", "||Q||", "||B||", "contraction", "iters", "residual");
    for (name, spec) in bundled::all() {
        let derived = derive(&spec, &DeriveOptions::default())?;
        let problem = Problem::new(&derived, 24)?;
        let result = run(&problem, &cfg)?;
        let d = &result.diagnostics;
        println!(
            "{name:<13} {:>3} {:>3} {:>10.3e} {:>10.3e} {:>11.3e} {:>5} {:>10.2e}",
            d.k, d.m, d.q_norm, d.b_norm, d.max_step_ratio, d.iterations, d.similarity_residual
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
