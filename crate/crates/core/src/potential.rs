//! Potential ingestion: the matrix potential as sparse Fourier data, the
//! derived scalars and phase functions that remove its diagonal, and the
//! multiplication operator `W` in the free eigenbasis.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};
use crate::freebasis;
use crate::linalg::{c64, C64, I, ZERO};

pub const DEFAULT_GRID: usize = 1024;
pub const DEFAULT_BRANCH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Per,
    Ap,
    Dir,
}

impl BoundaryCondition {
    /// Index shift of the `Q` entries: 0 for per, 1 for ap.
    pub fn epsilon(self) -> i64 {
        match self {
            Self::Ap => 1,
            Self::Per | Self::Dir => 0,
        }
    }

    pub fn block_size(self) -> usize {
        match self {
            Self::Dir => 1,
            Self::Per | Self::Ap => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Per => "per",
            Self::Ap => "ap",
            Self::Dir => "dir",
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per" => Ok(Self::Per),
            "ap" => Ok(Self::Ap),
            "dir" => Ok(Self::Dir),
            other => Err(Error::Config(format!("unknown boundary condition {other:?}"))),
        }
    }
}

/// Sparse Fourier coefficients `n -> f^(n)` of an `omega`-periodic function,
/// with `f(t) = sum f^(n) exp(i 2 pi n t / omega)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries(pub BTreeMap<i64, C64>);

impl FourierSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        Self::from_pairs([(0, c)])
    }

    pub fn from_pairs<It: IntoIterator<Item = (i64, C64)>>(pairs: It) -> Self {
        let mut map = BTreeMap::new();
        for (n, c) in pairs {
            *map.entry(n).or_insert(ZERO) += c;
        }
        map.retain(|_, c| *c != ZERO);
        Self(map)
    }

    pub fn coeff(&self, n: i64) -> C64 {
        self.0.get(&n).copied().unwrap_or(ZERO)
    }

    pub fn bandwidth(&self) -> usize {
        self.0.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, omega: f64, t: f64) -> C64 {
        let kappa = 2.0 * PI / omega;
        self.0
            .iter()
            .map(|(&n, &c)| c * (I * (kappa * n as f64 * t)).exp())
            .sum()
    }

    /// `int_0^t f`, exact: the mean contributes `f^(0) t`, every other
    /// harmonic `f^(n) (e^{i kappa n t} - 1) / (i kappa n)`.
    pub fn antiderivative(&self, omega: f64, t: f64) -> C64 {
        let kappa = 2.0 * PI / omega;
        self.0
            .iter()
            .map(|(&n, &c)| {
                if n == 0 {
                    c * t
                } else {
                    let k = kappa * n as f64;
                    c * ((I * (k * t)).exp() - 1.0) / (I * k)
                }
            })
            .sum()
    }

    /// Periodic part of the antiderivative (the mean term dropped).
    fn periodic_antiderivative(&self, omega: f64, t: f64) -> C64 {
        self.antiderivative(omega, t) - self.coeff(0) * t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub omega: f64,
    pub bc: BoundaryCondition,
    /// `p[j]` holds the coefficients of `p_{j+1}`.
    pub p: [FourierSeries; 4],
}

/// On-disk layout of a potential file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    omega: Option<f64>,
    /// Period as a multiple of pi, exact for the common cases.
    omega_over_pi: Option<f64>,
    bc: BoundaryCondition,
    #[serde(default)]
    p1: Vec<(i64, f64, f64)>,
    #[serde(default)]
    p2: Vec<(i64, f64, f64)>,
    #[serde(default)]
    p3: Vec<(i64, f64, f64)>,
    #[serde(default)]
    p4: Vec<(i64, f64, f64)>,
}

impl PotentialSpec {
    pub fn new(omega: f64, bc: BoundaryCondition, p: [FourierSeries; 4]) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidPotential(format!("omega must be positive, got {omega}")));
        }
        for (j, series) in p.iter().enumerate() {
            if series.0.values().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::InvalidPotential(format!("p{} has a non-finite coefficient", j + 1)));
            }
        }
        Ok(Self { omega, bc, p })
    }

    pub fn zero(omega: f64, bc: BoundaryCondition) -> Self {
        Self { omega, bc, p: Default::default() }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let file: PotentialFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        let omega = match (file.omega, file.omega_over_pi) {
            (Some(w), None) => w,
            (None, Some(k)) => k * PI,
            _ => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    message: "exactly one of `omega` and `omega_over_pi` must be given".into(),
                })
            }
        };
        let series = |v: &[(i64, f64, f64)]| FourierSeries::from_pairs(v.iter().map(|&(n, re, im)| (n, c64(re, im))));
        Self::new(omega, file.bc, [series(&file.p1), series(&file.p2), series(&file.p3), series(&file.p4)])
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        let mut out = format!("omega = {:?}\nbc = \"{}\"\n", self.omega, self.bc.name());
        for (j, series) in self.p.iter().enumerate() {
            let entries: Vec<String> = series
                .0
                .iter()
                .map(|(n, c)| format!("[{n}, {:?}, {:?}]", c.re, c.im))
                .collect();
            out.push_str(&format!("p{} = [{}]\n", j + 1, entries.join(", ")));
        }
        out
    }

    pub fn bandwidth(&self) -> usize {
        self.p.iter().map(FourierSeries::bandwidth).max().unwrap_or(0)
    }

    pub fn min_grid(&self) -> usize {
        4 * self.bandwidth() + 4
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Branch {
    Generic,
    ResonantInteger { r_int: i64 },
}

impl Branch {
    /// Shift between the two Fourier ladders inside one regrouped component.
    pub fn shift(self) -> i64 {
        match self {
            Self::Generic => 0,
            Self::ResonantInteger { r_int } => r_int,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DeriveOptions {
    pub grid: usize,
    pub branch_tol: f64,
    /// Largest `delta_P` accepted in the generic branch.
    pub delta_cap: f64,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        Self { grid: DEFAULT_GRID, branch_tol: DEFAULT_BRANCH_TOL, delta_cap: 1e6 }
    }
}

/// Dense coefficient table `k -> f^(k)` for `-G/2 <= k < G/2`; outside the
/// table the coefficient reads as zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpectrum {
    coeffs: Vec<C64>,
}

impl GridSpectrum {
    fn from_samples(samples: &[C64]) -> Self {
        let g = samples.len();
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(g).process(&mut buf);
        let scale = 1.0 / g as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        Self { coeffs: buf }
    }

    pub fn half(&self) -> i64 {
        (self.coeffs.len() / 2) as i64
    }

    pub fn get(&self, k: i64) -> C64 {
        let h = self.half();
        if k < -h || k >= h {
            return ZERO;
        }
        let g = self.coeffs.len() as i64;
        self.coeffs[k.rem_euclid(g) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        (-self.half()..self.half()).map(move |k| (k, self.get(k)))
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `sqrt(sum_{|k| > cut} |f^(k)|^2)`.
    pub fn tail_norm(&self, cut: i64) -> f64 {
        self.iter().filter(|(k, _)| k.abs() > cut).map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivedPotential {
    pub spec: PotentialSpec,
    pub grid: usize,
    pub nu: C64,
    pub theta: C64,
    pub beta: C64,
    pub r: C64,
    pub branch: Branch,
    pub delta_p: f64,
    /// `phi(t_j)`, `psi(t_j)` at `t_j = j omega / G`, `0 <= j <= G`.
    pub phi_samples: Vec<C64>,
    pub psi_samples: Vec<C64>,
    pub q2: GridSpectrum,
    pub q3: GridSpectrum,
    /// Coefficients of the periodic factors of the two diagonal entries of `W`.
    pub w1: GridSpectrum,
    pub w2: GridSpectrum,
}

pub fn derive(spec: &PotentialSpec, opts: &DeriveOptions) -> Result<DerivedPotential> {
    let g = opts.grid;
    if !g.is_power_of_two() {
        return Err(Error::GridNotPowerOfTwo(g));
    }
    if g < spec.min_grid() {
        return Err(Error::GridTooSmall { given: g, bandwidth: spec.bandwidth(), required: spec.min_grid() });
    }
    let omega = spec.omega;
    let (p1, p2, p3, p4) = (&spec.p[0], &spec.p[1], &spec.p[2], &spec.p[3]);
    let nu = (p1.coeff(0) + p4.coeff(0)) * 0.5;
    let beta = p1.coeff(0) - p4.coeff(0);
    let r = beta * (omega / (2.0 * PI));
    let theta = -r * PI;

    let nearest = r.re.round();
    let branch = if nearest != 0.0 && (r - nearest).norm() < opts.branch_tol {
        Branch::ResonantInteger { r_int: nearest as i64 }
    } else {
        Branch::Generic
    };
    let delta_p = freebasis::delta_p(spec.bc, omega, beta, branch);
    if branch == Branch::Generic && delta_p > opts.delta_cap {
        return Err(Error::NearResonance { delta_p, cap: opts.delta_cap, r });
    }

    let times: Vec<f64> = (0..=g).map(|j| omega * j as f64 / g as f64).collect();
    let phi_samples: Vec<C64> = times.iter().map(|&t| nu * t - p1.antiderivative(omega, t)).collect();
    let psi_samples: Vec<C64> = times.iter().map(|&t| -nu * t + p4.antiderivative(omega, t)).collect();

    // psi - phi is periodic: the linear parts cancel because nu is the mean
    // of the two diagonal averages.
    let diag_sum = FourierSeries::from_pairs(
        p1.0.iter().chain(p4.0.iter()).filter(|(&n, _)| n != 0).map(|(&n, &c)| (n, c)),
    );
    let mut q2s = Vec::with_capacity(g);
    let mut q3s = Vec::with_capacity(g);
    let mut w1s = Vec::with_capacity(g);
    let mut w2s = Vec::with_capacity(g);
    for &t in &times[..g] {
        let d = diag_sum.periodic_antiderivative(omega, t);
        let phase = (I * d).exp();
        q2s.push(p2.eval(omega, t) * phase);
        q3s.push(p3.eval(omega, t) / phase);
        // the periodic parts of phi and psi: phi - theta t / omega = -(int p1)_per
        w1s.push((-I * p1.periodic_antiderivative(omega, t)).exp());
        w2s.push((I * p4.periodic_antiderivative(omega, t)).exp());
    }

    Ok(DerivedPotential {
        spec: spec.clone(),
        grid: g,
        nu,
        theta,
        beta,
        r,
        branch,
        delta_p,
        phi_samples,
        psi_samples,
        q2: GridSpectrum::from_samples(&q2s),
        q3: GridSpectrum::from_samples(&q3s),
        w1: GridSpectrum::from_samples(&w1s),
        w2: GridSpectrum::from_samples(&w2s),
    })
}

impl DerivedPotential {
    pub fn bc(&self) -> BoundaryCondition {
        self.spec.bc
    }

    pub fn omega(&self) -> f64 {
        self.spec.omega
    }

    pub fn p1_mean(&self) -> C64 {
        self.spec.p[0].coeff(0)
    }

    pub fn p4_mean(&self) -> C64 {
        self.spec.p[3].coeff(0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.spec.p[1].is_zero() && self.spec.p[2].is_zero()
    }

    pub fn phi(&self, t: f64) -> C64 {
        self.nu * t - self.spec.p[0].antiderivative(self.omega(), t)
    }

    pub fn psi(&self, t: f64) -> C64 {
        -self.nu * t + self.spec.p[3].antiderivative(self.omega(), t)
    }

    /// Largest Fourier index of `q2`, `q3` touched by `Q` on a window of
    /// half-width `n`.
    pub fn q_index_reach(&self, window: usize) -> usize {
        2 * window + 2 + self.branch.shift().unsigned_abs() as usize
    }

    pub fn check_window(&self, window: usize) -> Result<()> {
        let needed = self.q_index_reach(window);
        let available = self.grid / 2 - 1;
        if needed > available {
            return Err(Error::WindowExceedsGrid { window, needed, available });
        }
        Ok(())
    }

    /// `sqrt(sum_{|j| > 2N} |q2^(j)|^2 + |q3^(j)|^2)`: the part of `Q` that a
    /// window of half-width `N` cannot see.
    pub fn truncation_floor(&self, window: usize) -> f64 {
        let cut = 2 * window as i64;
        self.q2.tail_norm(cut).hypot(self.q3.tail_norm(cut))
    }

    /// Dirichlet entries `theta_M = <Q s_n, s_m>` for `M = m + n`.
    pub fn dir_theta(&self, big_m: i64) -> C64 {
        if big_m.rem_euclid(2) == 0 {
            let j = big_m / 2;
            (self.q2.get(-j) + self.q3.get(j)) * 0.5
        } else {
            let j = (big_m + 1) / 2;
            (self.dir_eta2(-j) + self.dir_eta3(j)) * 0.5
        }
    }

    fn dir_eta2(&self, j: i64) -> C64 {
        self.q2
            .iter()
            .map(|(k, c)| c * (2.0 * I / (PI * (2 * (k - j) - 1) as f64)))
            .sum()
    }

    fn dir_eta3(&self, j: i64) -> C64 {
        self.q3
            .iter()
            .map(|(k, c)| c * (2.0 * I / (PI * (2 * (k - j) + 1) as f64)))
            .sum()
    }
}

/// `W(t)` as the 2x2 diagonal `(w1, w2)`.
pub fn sample_w(derived: &DerivedPotential, t: f64) -> [C64; 2] {
    let shift = match derived.bc() {
        BoundaryCondition::Dir => ZERO,
        _ => derived.theta * (t / derived.omega()),
    };
    [(I * (derived.phi(t) - shift)).exp(), (I * (derived.psi(t) - shift)).exp()]
}

/// `(e^{ix} - 1)/(ix)`, the mean of `e^{ixs}` over `s in [0, 1]`.
fn mean_exp(x: C64) -> C64 {
    if x.norm() < 1e-6 {
        return c64(1.0, 0.0) + I * x * 0.5 - x * x / 6.0;
    }
    ((I * x).exp() - 1.0) / (I * x)
}

/// Matrix of the multiplication operator `W` in the free basis on the
/// window `|n| <= N`.
pub fn w_as_fourier_operator(derived: &DerivedPotential, window: usize) -> BlockMatrix {
    let basis = freebasis::FreeBasis::new(derived, window);
    let indices = basis.indices();
    let mut w = BlockMatrix::zeros(basis.block(), indices.clone());
    match derived.bc() {
        BoundaryCondition::Per | BoundaryCondition::Ap => {
            for (i, &m) in indices.iter().enumerate() {
                for (j, &n) in indices.iter().enumerate() {
                    w.data[(2 * i, 2 * j)] = derived.w1.get(n - m);
                    w.data[(2 * i + 1, 2 * j + 1)] = derived.w2.get(m - n);
                }
            }
        }
        BoundaryCondition::Dir => {
            // e^{i phi} = e^{i theta t / omega} g(t) with g periodic, and the
            // half-frequency basis sees g through mean_exp.
            let theta = derived.theta;
            let span = 2 * window as i64;
            let integral = |spec: &GridSpectrum, big_m: i64| -> C64 {
                spec.iter()
                    .map(|(k, c)| c * mean_exp(theta + PI * (2 * k + big_m) as f64))
                    .sum()
            };
            let f1: Vec<C64> = (-span..=span).map(|d| integral(&derived.w1, d)).collect();
            let f2: Vec<C64> = (-span..=span).map(|d| integral(&derived.w2, d)).collect();
            let at = |v: &[C64], d: i64| v[(d + span) as usize];
            for (i, &m) in indices.iter().enumerate() {
                for (j, &n) in indices.iter().enumerate() {
                    w.data[(i, j)] = (at(&f1, m - n) + at(&f2, n - m)) * 0.5;
                }
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_diag(p1: f64, p4: f64) -> PotentialSpec {
        PotentialSpec::new(
            2.0 * PI,
            BoundaryCondition::Per,
            [
                FourierSeries::constant(c64(p1, 0.0)),
                FourierSeries::zero(),
                FourierSeries::zero(),
                FourierSeries::constant(c64(p4, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn constant_diagonal_scalars() {
        let d = derive(&constant_diag(0.3, 0.0), &DeriveOptions::default()).unwrap();
        assert!((d.nu - c64(0.15, 0.0)).norm() < 1e-15);
        assert!((d.beta - c64(0.3, 0.0)).norm() < 1e-15);
        assert!((d.r - c64(0.3, 0.0)).norm() < 1e-15);
        assert!((d.theta - c64(-0.3 * PI, 0.0)).norm() < 1e-15);
        assert_eq!(d.branch, Branch::Generic);
    }

    #[test]
    fn unit_step_is_resonant() {
        let d = derive(&constant_diag(1.0, 0.0), &DeriveOptions::default()).unwrap();
        assert_eq!(d.branch, Branch::ResonantInteger { r_int: 1 });
    }

    #[test]
    fn phases_start_at_zero_and_end_at_theta() {
        let spec = PotentialSpec::new(
            3.0,
            BoundaryCondition::Ap,
            [
                FourierSeries::from_pairs([(0, c64(0.4, 0.1)), (2, c64(0.3, -0.2)), (-1, c64(0.1, 0.0))]),
                FourierSeries::zero(),
                FourierSeries::zero(),
                FourierSeries::from_pairs([(0, c64(-0.2, 0.0)), (1, c64(0.05, 0.05))]),
            ],
        )
        .unwrap();
        let d = derive(&spec, &DeriveOptions { grid: 64, ..Default::default() }).unwrap();
        let last = d.grid;
        assert!(d.phi_samples[0].norm() < 1e-15 && d.psi_samples[0].norm() < 1e-15);
        assert!((d.phi_samples[last] - d.theta).norm() < 1e-13);
        assert!((d.psi_samples[last] - d.theta).norm() < 1e-13);
    }

    #[test]
    fn grid_checks() {
        let mut spec = constant_diag(0.1, 0.0);
        spec.p[1] = FourierSeries::from_pairs([(20, c64(0.1, 0.0))]);
        let small = DeriveOptions { grid: 64, ..Default::default() };
        assert!(matches!(derive(&spec, &small), Err(Error::GridTooSmall { required: 84, .. })));
        let odd = DeriveOptions { grid: 100, ..Default::default() };
        assert!(matches!(derive(&spec, &odd), Err(Error::GridNotPowerOfTwo(100))));
    }

    #[test]
    fn toml_roundtrip_and_line_numbers() {
        let spec = constant_diag(0.3, -0.1);
        let back = PotentialSpec::from_toml_str(&spec.to_toml_string(), "mem").unwrap();
        assert_eq!(back, spec);
        let bad = "omega = 1.0\nbc = \"per\"\np1 = [[0, 1.0]]\n";
        let msg = PotentialSpec::from_toml_str(bad, "bad.toml").unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn integer_components_are_accepted() {
        let text = "omega_over_pi = 2\nbc = \"dir\"\np2 = [[1, 1, 0]]\n";
        let spec = PotentialSpec::from_toml_str(text, "mem").unwrap();
        assert_eq!(spec.omega, 2.0 * PI);
        assert_eq!(spec.p[1].coeff(1), c64(1.0, 0.0));
    }
}
