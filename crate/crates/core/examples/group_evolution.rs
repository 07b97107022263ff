// The group generated by `i L` evaluated through the similarity transform:
// exact 2x2 exponentials on the tail blocks, a dense exponential on the
// central block. Checked against direct integration of `x' = i L x` and
// against the truncation bound for dropping the far blocks.

use dirac_simop::bundled;
use dirac_simop::evolution::{smooth_state, GroupEvaluator};
use dirac_simop::linalg::vec_norm;
use dirac_simop::oracle::{integrate_linear, OdeOptions};
use dirac_simop::potential::{derive, DeriveOptions};
use dirac_simop::simop::{run, Problem, SimopConfig};
use dirac_simop::Result;

pub fn run_example() -> Result<()> {
    let derived = derive(&bundled::load("ap_resonant").unwrap(), &DeriveOptions::default())?;
    let problem = Problem::new(&derived, 16)?;
    let result = run(&problem, &SimopConfig::default())?;
    let eval = GroupEvaluator::new(&derived, &problem, &result)?;
    let omega = derived.omega();

    let x = smooth_state(eval.dim(), eval.block);
    let times: Vec<f64> = (1..=4).map(|k| omega * k as f64 / 4.0).collect();
    let ode = integrate_linear(&eval.generator(), &x, &times, &OdeOptions::default())?;
    println!("{:>8}  {:>10}  {:>12}", "t", "||T(t)x||", "vs ODE");
    for (t, z) in times.iter().zip(&ode) {
        let y = eval.full_group(*t, &x);
        println!("{t:>8.4}  {:>10.6}  {:>12.2e}", vec_norm(&y), vec_norm(&(&y - z)));
    }

    let (s, t) = (0.7, -1.9);
    let law = vec_norm(&(eval.full_group(s + t, &x) - eval.full_group(s, &eval.full_group(t, &x))));
    println!("\ngroup law T(s+t) = T(s)T(t): {law:.1e}");

    println!("\ndropping the blocks |k| > n at t = 1:");
    for n in [eval.m + 1, 6, 10, 14] {
        let (actual, bound) = eval.truncation_bound(&x, 1.0, n);
        println!("  n = {n:>2}: error {actual:.3e} <= bound {bound:.3e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
