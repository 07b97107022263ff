//! Bundled trigonometric-polynomial potentials, one per branch, plus the
//! balanced resonant family used for the splitting check.

use crate::linalg::c64;
use crate::potential::{BoundaryCondition, FourierSeries, PotentialSpec};

/// `(name, toml source)` for every bundled potential.
pub const BUNDLED: [(&str, &str); 5] = [
    ("per_generic", include_str!("../data/per_generic.toml")),
    ("ap_generic", include_str!("../data/ap_generic.toml")),
    ("per_resonant", include_str!("../data/per_resonant.toml")),
    ("ap_resonant", include_str!("../data/ap_resonant.toml")),
    ("dir_even", include_str!("../data/dir_even.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn load(name: &str) -> Option<PotentialSpec> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, src)| PotentialSpec::from_toml_str(src, n).expect("bundled potentials parse"))
}

pub fn all() -> Vec<(&'static str, PotentialSpec)> {
    names().map(|n| (n, load(n).unwrap())).collect()
}

/// Periodic, `omega = 2 pi`, `p1 = 1`, `p4 = 0` (so `r = 1`) with
/// `q2^(j) = q3^(j) = c / j^2` for `1 <= |j| <= harmonics`: every matched
/// pair is balanced with `c = C = 1`.
pub fn balanced_resonant(c: f64, harmonics: i64) -> PotentialSpec {
    let coeffs = FourierSeries::from_pairs(
        (1..=harmonics).flat_map(|j| [(-j, c64(c / (j * j) as f64, 0.0)), (j, c64(c / (j * j) as f64, 0.0))]),
    );
    PotentialSpec::new(
        2.0 * std::f64::consts::PI,
        BoundaryCondition::Per,
        [FourierSeries::constant(c64(1.0, 0.0)), coeffs.clone(), coeffs, FourierSeries::zero()],
    )
    .expect("finite coefficients")
}
