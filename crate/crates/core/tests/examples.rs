//! Every example under `examples/` runs as a test.

mod derive_potential {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/derive_potential.rs"));
}

#[test]
fn derive_potential_runs() {
    derive_potential::run_example().expect("derive_potential example should run");
}

mod transform_identities {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/transform_identities.rs"));
}

#[test]
fn transform_identities_runs() {
    transform_identities::run_example().expect("transform_identities example should run");
}

mod similarity_pipeline {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/similarity_pipeline.rs"));
}

#[test]
fn similarity_pipeline_runs() {
    similarity_pipeline::run_example().expect("similarity_pipeline example should run");
}

mod spectrum_asymptotics {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/spectrum_asymptotics.rs"));
}

#[test]
fn spectrum_asymptotics_runs() {
    spectrum_asymptotics::run_example().expect("spectrum_asymptotics example should run");
}

mod resonant_splitting {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/resonant_splitting.rs"));
}

#[test]
fn resonant_splitting_runs() {
    resonant_splitting::run_example().expect("resonant_splitting example should run");
}

mod characteristic_roots {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/characteristic_roots.rs"));
}

#[test]
fn characteristic_roots_runs() {
    characteristic_roots::run_example().expect("characteristic_roots example should run");
}

mod group_evolution {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/group_evolution.rs"));
}

#[test]
fn group_evolution_runs() {
    group_evolution::run_example().expect("group_evolution example should run");
}

mod equiconvergence {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/equiconvergence.rs"));
}

#[test]
fn equiconvergence_runs() {
    equiconvergence::run_example().expect("equiconvergence example should run");
}

mod window_stability {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/window_stability.rs"));
}

#[test]
fn window_stability_runs() {
    window_stability::run_example().expect("window_stability example should run");
}

mod config_pipeline {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/config_pipeline.rs"));
}

#[test]
fn config_pipeline_runs() {
    config_pipeline::run_example().expect("config_pipeline example should run");
}
