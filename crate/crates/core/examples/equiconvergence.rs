// Spectral projections of the perturbed operator against the free ones:
// the difference of partial sums over `|n| <= l` shrinks as l grows. The
// projections themselves must still resolve the identity.

use dirac_simop::bundled;
use dirac_simop::evolution::GroupEvaluator;
use dirac_simop::potential::{derive, DeriveOptions};
use dirac_simop::simop::{run, Problem, SimopConfig};
use dirac_simop::Result;

pub fn run_example() -> Result<()> {
    for name in ["per_generic", "dir_even"] {
        let derived = derive(&bundled::load(name).unwrap(), &DeriveOptions::default())?;
        let problem = Problem::new(&derived, 24)?;
        let result = run(&problem, &SimopConfig::default())?;
        let scan = GroupEvaluator::new(&derived, &problem, &result)?.equiconvergence_scan();
        println!("{name}: central projections alone {:.4e}", scan.central_value);
        for (l, v) in scan.ells.iter().zip(&scan.values).filter(|(l, _)| *l % 4 == 0 || **l == scan.ells[0]) {
            println!("  l = {l:>2}: {v:.4e}");
        }
        println!(
            "  nonincreasing: {}, round-off floor {:.1e}, cross products {:.1e}, sum defect {:.1e}",
            scan.nonincreasing(scan.floor),
            scan.floor,
            scan.max_cross_product,
            scan.sum_defect
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
