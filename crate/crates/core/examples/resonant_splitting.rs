// In the resonant branch each component holds two eigenvalues whose
// half-splitting approaches `sqrt(q2^ q3^)` at the matched index. The
// balanced family keeps every matched pair nonzero, so the splitting is
// visible at every n.

use dirac_simop::bundled;
use dirac_simop::potential::{derive, Branch, DeriveOptions};
use dirac_simop::simop::{run, Problem, SimopConfig};
use dirac_simop::spectrum::{balanced_check, splitting_error, tail_eigenvalues, Predictor};
use dirac_simop::Result;

pub fn run_example() -> Result<()> {
    let derived = derive(&bundled::balanced_resonant(0.05, 48), &DeriveOptions::default())?;
    let Branch::ResonantInteger { r_int } = derived.branch else {
        unreachable!("the balanced family is resonant");
    };
    println!("r = {r_int}, balance: {:?}", balanced_check(&derived, r_int, 4, 16));

    let problem = Problem::new(&derived, 48)?;
    let result = run(&problem, &SimopConfig::default())?;
    let predictor = Predictor::new(&derived);
    println!("{:>4}  {:>22}  {:>22}  {:>9}", "n", "half splitting", "sqrt(q2 q3)", "rel. err");
    for (n, eigs, _) in tail_eigenvalues(&problem.a0, &result) {
        if n.abs() % 4 != 0 || n.abs() > 20 {
            continue;
        }
        let root = predictor.predict(n).splitting.unwrap();
        let half = (eigs[0] - eigs[1]) * 0.5;
        println!(
            "{n:>4}  {:>22}  {:>22}  {:>9.2e}",
            format!("{:.6e}", half),
            format!("{:.6e}", root),
            splitting_error(&eigs, root)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
