// Reads a potential, derives the scalars that fix the branch and prints
// the leading Fourier coefficients of the transformed off-diagonal entries.

use dirac_simop::bundled;
use dirac_simop::potential::{derive, Branch, DeriveOptions, PotentialSpec};
use dirac_simop::Result;

const CUSTOM: &str = r#"
omega_over_pi = 2
bc = "per"
p1 = [[0, 0.5, 0.0], [1, 0.1, 0.0]]
p2 = [[1, 0.2, 0.0]]
p3 = [[-1, 0.2, 0.0]]
"#;

pub fn run_example() -> Result<()> {
    let opts = DeriveOptions::default();
    let custom = PotentialSpec::from_toml_str(CUSTOM, "inline")?;
    let mut specs = vec![("inline".to_string(), custom)];
    specs.extend(bundled::all().into_iter().map(|(n, s)| (n.to_string(), s)));

    println!("{:<14} {:>4} {:>22} {:>22} {:>9} {:>10}", "potential", "bc", "nu", "beta", "r", "delta_P");
    for (name, spec) in &specs {
        let d = derive(spec, &opts)?;
        let branch = match d.branch {
            Branch::Generic => "generic".to_string(),
            Branch::ResonantInteger { r_int } => format!("r = {r_int}"),
        };
        println!(
            "{name:<14} {:>4} {:>22} {:>22} {:>9.4} {:>10.4}  {branch}",
            d.bc().name(),
            format!("{:.4}", d.nu),
            format!("{:.4}", d.beta),
            d.r.re,
            d.delta_p
        );
    }

    let d = derive(&specs[0].1, &opts)?;
    println!("\ninline potential, transformed coefficients:");
    for k in -3..=3 {
        println!("  k = {k:>2}: q2 {:>24}  q3 {:>24}", format!("{:.3e}", d.q2.get(k)), format!("{:.3e}", d.q3.get(k)));
    }
    println!("part of Q invisible to a window of N = 16: {:.2e}", d.truncation_floor(16));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
