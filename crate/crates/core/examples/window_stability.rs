// Truncation check: solve on several windows and compare the interior
// eigenvalues of consecutive windows.

use dirac_simop::config::RunConfig;
use dirac_simop::pipeline::{sweep, Format};
use dirac_simop::Result;

pub fn run_example() -> Result<()> {
    let mut cfg = RunConfig { bundled: Some("per_resonant".into()), ..RunConfig::default() };
    cfg.sweep.windows = vec![12, 16, 24];
    let report = sweep(&cfg, Format::Csv)?;
    for s in &report.summaries {
        println!("N = {:>2}: k = {}, m = {}, similarity residual {:.2e}", s.window, s.k, s.m, s.similarity_residual);
    }
    for st in &report.stability {
        let worst = st.rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        println!("N = {} vs {}: largest interior drift {:.1e} (at n = {})", st.small, st.large, st.max_interior_drift, worst.0);
    }
    print!("{}", report.artifacts.get("sweep.csv").unwrap_or_default());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
