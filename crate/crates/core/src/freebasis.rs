//! Free operators: eigenvalue ladders, spectral components and the
//! distances between them. Projections are index ranges of the coordinate
//! basis and are never materialized.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use serde::Serialize;

use crate::blockmat::{BlockMatrix, Ladder};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::potential::{BoundaryCondition, Branch, DerivedPotential};

pub fn free_eigenvalue(bc: BoundaryCondition, omega: f64, n: i64) -> f64 {
    match bc {
        BoundaryCondition::Per => 2.0 * PI * n as f64 / omega,
        BoundaryCondition::Ap => PI * (2 * n + 1) as f64 / omega,
        BoundaryCondition::Dir => PI * n as f64 / omega,
    }
}

/// Operator norm of `Gamma_0^P` on Hilbert-Schmidt matrices: the reciprocal
/// of the smallest gap between points of distinct components.
pub fn delta_p(bc: BoundaryCondition, omega: f64, beta: C64, branch: Branch) -> f64 {
    let base = omega / (2.0 * PI);
    match (bc, branch) {
        (BoundaryCondition::Dir, _) => omega / PI,
        (_, Branch::ResonantInteger { .. }) => base,
        (_, Branch::Generic) => {
            let r = beta * base;
            let fl = r.re.floor() as i64;
            let gap = [fl - 1, fl, fl + 1, fl + 2]
                .into_iter()
                .filter(|&l| l != 0)
                .map(|l| (r - l as f64).norm())
                .fold(f64::INFINITY, f64::min);
            base.max(base / gap)
        }
    }
}

/// The coordinate basis on a window `|n| <= N`. Component `n` holds
/// `e_n^1` and, in the resonant branch, the second-slot vector whose free
/// point coincides with it, `e_{n - r}^2`.
#[derive(Clone, Debug)]
pub struct FreeBasis {
    pub bc: BoundaryCondition,
    pub omega: f64,
    pub window: usize,
    pub shift: i64,
    p1_mean: C64,
    p4_mean: C64,
    nu: C64,
}

impl FreeBasis {
    pub fn new(derived: &DerivedPotential, window: usize) -> Self {
        Self {
            bc: derived.bc(),
            omega: derived.omega(),
            window,
            shift: derived.branch.shift(),
            p1_mean: derived.p1_mean(),
            p4_mean: derived.p4_mean(),
            nu: derived.nu,
        }
    }

    pub fn block(&self) -> usize {
        self.bc.block_size()
    }

    pub fn indices(&self) -> Arc<[i64]> {
        let n = self.window as i64;
        (-n..=n).collect()
    }

    pub fn lambda(&self, n: i64) -> f64 {
        free_eigenvalue(self.bc, self.omega, n)
    }

    /// Free points of component `n`, one per slot.
    pub fn points_of(&self, n: i64) -> Vec<C64> {
        match self.bc {
            BoundaryCondition::Dir => vec![self.lambda(n) - self.nu],
            _ => vec![self.lambda(n) - self.p1_mean, self.lambda(n - self.shift) - self.p4_mean],
        }
    }

    pub fn ladder(&self) -> Ladder {
        let indices = self.indices();
        let points: Vec<C64> = indices.iter().flat_map(|&n| self.points_of(n)).collect();
        Ladder::new(self.block(), indices, points.into())
    }

    pub fn components(&self) -> Vec<SpectralComponent> {
        self.indices()
            .iter()
            .map(|&n| {
                let mut points = self.points_of(n);
                if self.shift != 0 {
                    points.truncate(1);
                }
                SpectralComponent { n, points }
            })
            .collect()
    }
}

/// `A_0`, the diagonal free operator with the averaged diagonal potential
/// removed.
pub fn tilde_free_diagonal(derived: &DerivedPotential, window: usize) -> BlockMatrix {
    BlockMatrix::diagonal(&FreeBasis::new(derived, window).ladder())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralComponent {
    pub n: i64,
    pub points: Vec<C64>,
}

impl SpectralComponent {
    pub fn distance_to(&self, other: &SpectralComponent) -> f64 {
        self.points
            .iter()
            .flat_map(|a| other.points.iter().map(move |b| (a - b).norm()))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Pairwise component distances `d_{mn}` on a window.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    pub indices: Vec<i64>,
    pub d: Vec<Vec<f64>>,
}

impl DistanceTable {
    pub fn get(&self, m: i64, n: i64) -> f64 {
        let pos = |k: i64| self.indices.binary_search(&k).expect("index outside the table");
        self.d[pos(m)][pos(n)]
    }

    /// Smallest distance between distinct components.
    pub fn min_gap(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, row) in self.d.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i != j {
                    best = best.min(v);
                }
            }
        }
        best
    }
}

pub fn distance_table(components: &[SpectralComponent], r: C64) -> Result<DistanceTable> {
    let indices: Vec<i64> = components.iter().map(|c| c.n).collect();
    let mut d = vec![vec![0.0; components.len()]; components.len()];
    for (i, a) in components.iter().enumerate() {
        for (j, b) in components.iter().enumerate().skip(i + 1) {
            let dist = a.distance_to(b);
            if dist < 1e-12 {
                return Err(Error::OverlappingComponents { m: a.n, n: b.n, distance: dist, r });
            }
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    Ok(DistanceTable { indices, d })
}

/// `{P_(m)} u {P_n : m < |n| <= N}` on the window.
#[derive(Clone, Copy, Debug)]
pub struct ResolutionOfIdentity {
    pub window: usize,
    pub coarse: usize,
    pub block: usize,
}

impl ResolutionOfIdentity {
    pub fn new(window: usize, coarse: usize, block: usize) -> Self {
        assert!(coarse <= window);
        Self { window, coarse, block }
    }

    pub fn dim(&self) -> usize {
        self.block * (2 * self.window + 1)
    }

    /// Coordinates of `P_n`.
    pub fn range_of(&self, n: i64) -> Range<usize> {
        let pos = (n + self.window as i64) as usize;
        pos * self.block..(pos + 1) * self.block
    }

    /// Coordinates of `P_(m)`.
    pub fn central_range(&self) -> Range<usize> {
        let lo = self.range_of(-(self.coarse as i64)).start;
        let hi = self.range_of(self.coarse as i64).end;
        lo..hi
    }

    /// The coarse pieces in order: the central block, then each outer index.
    pub fn pieces(&self) -> Vec<Range<usize>> {
        let mut out = vec![self.central_range()];
        let n = self.window as i64;
        let m = self.coarse as i64;
        out.extend((-n..-m).chain(m + 1..=n).map(|k| self.range_of(k)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn ladders() {
        assert!((free_eigenvalue(BoundaryCondition::Per, 2.0 * PI, 3) - 3.0).abs() < 1e-15);
        assert!((free_eigenvalue(BoundaryCondition::Ap, 2.0 * PI, 0) - 0.5).abs() < 1e-15);
        assert!((free_eigenvalue(BoundaryCondition::Dir, PI, -2) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn pieces_partition_the_window() {
        let res = ResolutionOfIdentity::new(5, 2, 2);
        let mut covered = vec![0u8; res.dim()];
        for piece in res.pieces() {
            for i in piece {
                covered[i] += 1;
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn generic_delta_near_half_integer() {
        let d = delta_p(BoundaryCondition::Per, 2.0 * PI, c64(0.5, 0.0), Branch::Generic);
        assert!((d - 2.0).abs() < 1e-14);
        let d = delta_p(BoundaryCondition::Per, 2.0 * PI, c64(-1.3, 0.0), Branch::Generic);
        assert!((d - 1.0 / 0.3).abs() < 1e-12);
    }
}
