//! Dense complex linear algebra shared by the transform engine, the
//! spectral oracle and the group evaluator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 2 && m.ncols() == 2 {
        return op_norm_2x2(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn smallest_singular_value(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Exact spectral norm of a 2x2 matrix from the eigenvalues of `M^* M`.
pub fn op_norm_2x2(a: C64, b: C64, c: C64, d: C64) -> f64 {
    let f2 = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
    let det = (a * d - b * c).norm();
    let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (f2 + disc)).sqrt()
}

/// Eigenvalues of `[[a, b], [c, d]]` from the characteristic polynomial.
/// The pair is returned with the root nearer `a` first.
pub fn eig_2x2(a: C64, b: C64, c: C64, d: C64) -> [C64; 2] {
    let half_tr = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let rho = (half_diff * half_diff + b * c).sqrt();
    let (p, q) = (half_tr + rho, half_tr - rho);
    if (p - a).norm() <= (q - a).norm() {
        [p, q]
    } else {
        [q, p]
    }
}

/// All eigenvalues of a dense complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        2 => eig_2x2(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]).to_vec(),
        _ => {
            let schur = nalgebra::Schur::new(m.clone());
            // complex Schur form is upper triangular; eigenvalues are its diagonal
            let (_, t) = schur.unpack();
            t.diagonal().iter().copied().collect()
        }
    }
}

/// Eigenvalues of `a` in a cluster of `k` values near `sigma`, by subspace
/// inverse iteration on both sides with an oblique Rayleigh-Ritz projection
/// `(Y^* X)^{-1} Y^* A X` after every sweep, stopping once the Ritz values
/// settle. `None` when the shifted matrix cannot be factored or the two
/// subspaces are nearly orthogonal.
pub fn refine_cluster(a: &CMatrix, sigma: C64, k: usize, max_sweeps: usize) -> Option<Vec<C64>> {
    let n = a.nrows();
    let scale = frobenius(a).max(1.0);
    // nudge off the cluster so the factorization has no exact zero pivot
    let shift = sigma + C64::new(1e-15 * scale, 1e-15 * scale);
    let shifted = a - CMatrix::identity(n, n) * shift;
    // P S = L U, so S^* y = x is solved by U^* then L^* then P^{-1}
    let lu = shifted.lu();
    let (l_h, u_h, perm) = (lu.l().adjoint(), lu.u().adjoint(), lu.p().clone());
    let solve_adjoint = |b: &CMatrix| -> Option<CMatrix> {
        let mut y = l_h.solve_upper_triangular(&u_h.solve_lower_triangular(b)?)?;
        perm.inv_permute_rows(&mut y);
        Some(y)
    };
    let start = CMatrix::from_fn(n, k, |i, j| C64::new(1.0 + ((i * (j + 1)) as f64 * 0.37) % 1.0, 0.1 * (i + j) as f64));
    let mut x = start.clone();
    let mut y = start;
    let mut prev: Option<Vec<C64>> = None;
    for _ in 0..max_sweeps {
        x = lu.solve(&x)?.qr().q();
        y = solve_adjoint(&y)?.qr().q();
        if x.iter().chain(y.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return None;
        }
        let yx = y.adjoint() * &x;
        if smallest_singular_value(&yx) < 1e-8 {
            return None;
        }
        let h = yx.try_inverse()? * y.adjoint() * a * &x;
        let mut ritz = eigenvalues(&h);
        ritz.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
        if let Some(p) = &prev {
            if p.iter().zip(&ritz).all(|(u, v)| (u - v).norm() <= 4.0 * f64::EPSILON * scale) {
                return Some(ritz);
            }
        }
        prev = Some(ritz);
    }
    prev
}

/// `exp(A)` by scaling and squaring with a Taylor core. The scaled matrix
/// has 1-norm at most 1/2, where 24 Taylor terms leave a truncation
/// remainder below 1e-30.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.5 {
        squarings = (norm1 / 0.5).log2().ceil() as u32;
    }
    let scaled = a * C64::from(0.5f64.powi(squarings as i32));
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled * C64::from(1.0 / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Minimum-cost assignment of every row to a distinct column
/// (rows <= cols), Hungarian algorithm with potentials. Returns the column
/// chosen for each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows <= cols");
    // 1-based arrays following the classical formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Optimal bipartite matching of two eigenvalue multisets. Returns the
/// largest matched distance; `a` must not be longer than `b`.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hungarian_picks_the_cheap_permutation() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = min_cost_assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn hungarian_rectangular() {
        let cost = vec![vec![10.0, 1.0, 7.0, 0.5], vec![0.2, 9.0, 9.0, 9.0]];
        assert_eq!(min_cost_assignment(&cost), vec![3, 0]);
    }

    #[test]
    fn eig_2x2_matches_trace_and_determinant() {
        let (a, b, c, d) = (c64(1.0, 0.3), c64(-0.2, 1.1), c64(0.7, 0.0), c64(-2.0, 0.5));
        let [l1, l2] = eig_2x2(a, b, c, d);
        assert!((l1 + l2 - (a + d)).norm() < 1e-14);
        assert!((l1 * l2 - (a * d - b * c)).norm() < 1e-13);
    }

    #[test]
    fn op_norm_2x2_agrees_with_svd() {
        let m = CMatrix::from_row_slice(2, 2, &[c64(1.0, 2.0), c64(0.3, -1.0), c64(0.0, 0.5), c64(-0.7, 0.1)]);
        let s = singular_values(&m);
        assert!((op_norm(&m) - s[0]).abs() < 1e-13);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 1.3;
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, c64(t, 0.0), c64(-t, 0.0), ZERO]);
        let e = expm(&m);
        assert!((e[(0, 0)] - c64(t.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - c64(t.sin(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn refined_cluster_recovers_a_close_pair() {
        let n = 8;
        let mut t = CMatrix::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = c64(3.0 * i as f64, 0.1 * i as f64);
            for j in i + 1..n {
                t[(i, j)] = c64(0.3 * (i + 2 * j) as f64 % 1.0, 0.2);
            }
        }
        t[(3, 3)] = c64(9.0, 0.3);
        t[(4, 4)] = c64(9.0 + 1e-4, 0.3);
        t[(3, 4)] = c64(10.0, 0.0);
        let q = CMatrix::from_fn(n, n, |i, j| c64((i * j) as f64 * 0.17 % 1.0, (i + j) as f64 * 0.05)).qr().q();
        let a = &q * t * q.adjoint();
        let got = refine_cluster(&a, c64(9.0, 0.3), 2, 60).unwrap();
        let want = [c64(9.0, 0.3), c64(9.0 + 1e-4, 0.3)];
        assert!(multiset_distance(&got, &want) < 1e-9, "{got:?}");
    }
}
