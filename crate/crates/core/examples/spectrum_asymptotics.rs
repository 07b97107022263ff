// Block eigenvalues of the decoupled operator against the dense oracle and
// the first- and second-order predictions, with the fitted decay of the
// prediction residuals.

use dirac_simop::bundled;
use dirac_simop::potential::{derive, DeriveOptions};
use dirac_simop::simop::{run, Problem, SimopConfig};
use dirac_simop::spectrum::spectral_report;
use dirac_simop::Result;

pub fn run_example() -> Result<()> {
    let derived = derive(&bundled::load("ap_generic").unwrap(), &DeriveOptions::default())?;
    let problem = Problem::new(&derived, 24)?;
    let result = run(&problem, &SimopConfig::default())?;
    let report = spectral_report(&derived, &problem, &result);

    println!("central block (|n| <= {}): {} eigenvalues", report.m, report.central.len());
    println!("{:>4}  {:>26}  {:>10}  {:>10}  {:>10}", "n", "block eigenvalue", "oracle", "1st order", "2nd order");
    for row in report.tail.iter().filter(|t| t.n.abs() <= 12 && t.n % 3 == 0) {
        let z = row.block_eigs[0];
        let oracle = row.oracle.as_ref().map_or(f64::NAN, |g| dirac_simop::spectrum::pair_error(&row.block_eigs, g));
        println!(
            "{:>4}  {:>26}  {:>10.1e}  {:>10.1e}  {:>10.1e}",
            row.n,
            format!("{z:.10}"),
            oracle,
            row.first_residual.unwrap_or(f64::NAN),
            row.second_residual.unwrap_or(f64::NAN)
        );
    }
    println!("largest distance between the method and the oracle: {:.1e}", report.decomposition_error);
    for (label, fit) in [("first", &report.first_fit), ("second", &report.second_fit)] {
        if let Some(f) = fit {
            println!("{label}-order residuals decay like |n|^-{:.2} (+- {:.2}, {} points)", f.p, f.band, f.points);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
