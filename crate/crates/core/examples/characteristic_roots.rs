// Eigenvalues found without the transform: integrate the Dirac system over
// one period and locate zeros of the boundary condition's characteristic
// function, starting from the method's block eigenvalues.

use dirac_simop::bundled;
use dirac_simop::oracle::{characteristic_root, OdeOptions};
use dirac_simop::potential::{derive, DeriveOptions};
use dirac_simop::simop::{run, Problem, SimopConfig};
use dirac_simop::spectrum::tail_eigenvalues;
use dirac_simop::Result;

pub fn run_example() -> Result<()> {
    let opts = OdeOptions::default();
    for name in ["per_generic", "dir_even"] {
        let spec = bundled::load(name).unwrap();
        let derived = derive(&spec, &DeriveOptions::default())?;
        let problem = Problem::new(&derived, 24)?;
        let result = run(&problem, &SimopConfig::default())?;
        println!("{name}:");
        for (n, eigs, _) in tail_eigenvalues(&problem.a0, &result).into_iter().filter(|(n, _, _)| (4..=8).contains(n)) {
            for z in eigs {
                let root = characteristic_root(&spec, z, &opts)?;
                println!("  n = {n}: method {:>28}  ODE root distance {:.1e}", format!("{z:.12}"), (root - z).norm());
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
