use std::path::Path;
use std::process::{Command, Output};

use dirac_simop::config::{InitialState, RunConfig};
use dirac_simop::pipeline::{num, Format, Table};
use dirac_simop::Error;

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirac-simop"))
        .args(args)
        .env("DIRAC_SIMOP_OUT", out)
        .output()
        .expect("binary runs")
}

#[test]
fn config_parse_errors_name_the_line() {
    let text = "window = 16\ngrid = 512\nwindow_size = 3\n";
    let err = RunConfig::from_toml_str(text, "run.toml").unwrap_err().to_string();
    assert!(err.contains("run.toml") && err.contains("line 3"), "{err}");
    let err = RunConfig::from_toml_str("[tolerances]\nresidual = \"tight\"\n", "run.toml").unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn config_defaults_and_overrides() {
    let cfg = RunConfig::from_toml_str("window = 20\n[evolution]\nstate = { kind = \"basis\", n = -3, slot = 2 }\n", "x").unwrap();
    assert_eq!(cfg.window, 20);
    assert_eq!(cfg.grid, RunConfig::default().grid);
    assert_eq!(cfg.evolution.state, InitialState::Basis { n: -3, slot: 2 });
    assert_eq!(cfg.potential_name(), "per_generic");
}

#[test]
fn invalid_configs_are_refused() {
    let bad = [
        "[margins]\nk_margin = 1.5\n",
        "[tolerances]\nresidual = -1.0\n",
        "window = 0\n",
        "bundled = \"per_generic\"\npotential = \"p.toml\"\n",
    ];
    for text in bad {
        let cfg = RunConfig::from_toml_str(text, "x").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{text}");
    }
    let cfg = RunConfig { bundled: Some("nope".into()), ..RunConfig::default() };
    assert!(cfg.load_potential().unwrap_err().to_string().contains("per_generic"));
}

#[test]
fn relative_potential_paths_follow_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pot.toml"), "omega = 2.0\nbc = \"dir\"\np2 = [[1, 0.1, 0.0]]\n").unwrap();
    std::fs::write(dir.path().join("run.toml"), "potential = \"pot.toml\"\nwindow = 8\n").unwrap();
    let cfg = RunConfig::from_file(&dir.path().join("run.toml")).unwrap();
    assert_eq!(cfg.potential_name(), "pot");
    assert_eq!(cfg.load_potential().unwrap().omega, 2.0);
}

#[test]
fn tables_render_both_formats() {
    let mut t = Table::new(vec!["n", "value", "label"]);
    t.push(vec![serde_json::json!(1), num(0.5), serde_json::json!("a,b")]);
    t.push(vec![serde_json::json!(2), num(f64::NAN), serde_json::json!("c")]);
    assert_eq!(t.render(Format::Csv), "n,value,label\n1,0.5,\"a,b\"\n2,,c\n");
    let rows: serde_json::Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
    assert_eq!(rows[1]["value"], serde_json::Value::Null);
    assert_eq!(rows[0]["label"], "a,b");
    assert!("xml".parse::<Format>().is_err());
}

#[test]
fn derive_writes_json_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["derive", "--bundled", "ap_generic", "--format", "json", "--window", "8"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let derived: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("derived.json")).unwrap()).unwrap();
    assert!(derived.is_object());
    assert!(dir.path().join("coefficients.json").exists());
}

#[test]
fn spectrum_and_sweep_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["spectrum", "--bundled", "dir_even", "--window", "12"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["window"], 12);
    assert!(dir.path().join("spectrum.csv").exists());

    let out = cli(&["sweep", "--bundled", "per_resonant", "--windows", "12,16"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("N = 12 -> 16"));
}

#[test]
fn errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "window = [\n").unwrap();
    let out = cli(&["spectrum", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));

    let out = cli(&["derive", "--bundled", "missing"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_reports_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(cli(&["selftest"], a.path()).status.success());
    assert!(cli(&["selftest", "--out-dir", b.path().to_str().unwrap()], a.path()).status.success());
    let first = std::fs::read(a.path().join("selftest.txt")).unwrap();
    let second = std::fs::read(b.path().join("selftest.txt")).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, second);
}
