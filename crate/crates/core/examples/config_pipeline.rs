// A run driven by a TOML config, as the command-line tool does it. The
// artifacts stay in memory here; `Artifacts::write_to` puts them on disk.

use dirac_simop::config::RunConfig;
use dirac_simop::pipeline::{run_pipeline, Format, Stages};
use dirac_simop::Result;

const CONFIG: &str = r#"
bundled = "dir_even"
window = 16

[tolerances]
residual = 1e-9

[evolution]
steps = 4
state = { kind = "basis", n = 2, slot = 1 }
"#;

pub fn run_example() -> Result<()> {
    let cfg = RunConfig::from_toml_str(CONFIG, "inline")?;
    cfg.validate()?;
    let report = run_pipeline(&cfg, Stages::from_config(&cfg), Format::Json)?;
    let s = &report.summary;
    println!(
        "{} ({}) N = {}: m = {}, residual {:.2e}, violations {}",
        s.potential,
        s.bc,
        s.window,
        s.m,
        s.similarity_residual,
        s.violations.len()
    );
    for (name, content) in &report.artifacts.0 {
        println!("  {name}: {} bytes", content.len());
    }
    if let Err(e) = RunConfig::from_toml_str("window = \"wide\"", "bad.toml") {
        println!("a malformed config is rejected: {e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
