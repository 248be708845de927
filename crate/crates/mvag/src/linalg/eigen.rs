//! Iterative eigensolver for the t smallest eigenvalues of an aggregated
//! Laplacian.
//!
//! Aggregated Laplacians have spectrum in [0, 2], so the t smallest
//! eigenvalues of L are obtained as the t largest of B = 2I - L via Lanczos
//! with full reorthogonalization. Clustered and repeated eigenvalues are
//! resolved by locking converged Ritz pairs and restarting deflated against
//! them; a final deflated pass confirms that no unlocked eigenvalue of B
//! exceeds the t-th largest locked one.

use super::{LinalgError, SparseSymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The t smallest eigenvalues of a matrix, sorted ascending.
#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
}

impl SpectrumSlice {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn t(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Residual norms ||L v - lambda v||, aligned with `eigenvalues`.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }
}

/// t smallest eigenvalues of a symmetric matrix with spectrum in [0, 2].
///
/// Eigenvalues within `tol` of 0 are clamped to exactly 0. The matvec
/// count is deterministic given (t, tol, seed).
pub fn smallest_eigenvalues(
    m: &SparseSymMatrix,
    t: usize,
    tol: f64,
    seed: u64,
) -> Result<SpectrumSlice, LinalgError> {
    solve(m, t, tol, seed).map(|(slice, _)| slice)
}

/// As [`smallest_eigenvalues`], additionally returning the eigenvectors as
/// `t` orthonormal columns of length n. Each eigenvector's sign is fixed so
/// that its largest-magnitude component is positive.
pub fn smallest_eigenvectors(
    m: &SparseSymMatrix,
    t: usize,
    tol: f64,
    seed: u64,
) -> Result<(SpectrumSlice, Vec<Vec<f64>>), LinalgError> {
    solve(m, t, tol, seed)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// w -= sum (w.u) u over the given vectors, two passes for stability.
fn reorthogonalize(w: &mut [f64], sets: &[&[Vec<f64>]]) {
    for _ in 0..2 {
        for set in sets {
            for u in set.iter() {
                let c = dot(w, u);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
        }
    }
}

fn seeded_unit_vector(n: usize, seed: u64, restart: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let nrm = norm(&v);
    for x in &mut v {
        *x /= nrm;
    }
    v
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by the implicit
/// QL method with shifts. `d` is the diagonal, `e` the subdiagonal
/// (len m-1). Returns eigenvalues ascending and the matrix `z` with
/// z[row][col]: column `col` is the eigenvector of eigenvalue `col`.
fn tridiag_eigen(d_in: &[f64], e_in: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = d_in.len();
    debug_assert_eq!(e_in.len() + 1, m);
    let mut d = d_in.to_vec();
    let mut e = vec![0.0; m];
    e[..m - 1].copy_from_slice(e_in);
    let mut z = vec![vec![0.0; m]; m];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..m {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut mm = l;
        while mm < m {
            if e[mm].abs() <= eps * tst1 {
                break;
            }
            mm += 1;
        }
        if mm > l {
            let mut iter = 0;
            loop {
                iter += 1;
                debug_assert!(iter < 100, "tridiagonal QL failed to converge");
                if iter >= 100 {
                    break;
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(m).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[mm];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..mm).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g2 = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g2;
                    d[i + 1] = h + s * (c * g2 + s * d[i]);
                    for row in z.iter_mut() {
                        let h2 = row[i + 1];
                        row[i + 1] = s * row[i] + c * h2;
                        row[i] = c * row[i] - s * h2;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Sort ascending, carrying eigenvector columns along.
    for i in 0..m.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().take(m).skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d.swap(i, k);
            for row in z.iter_mut() {
                row.swap(i, k);
            }
        }
    }
    (d, z)
}

struct Locked {
    mu: f64,
    vec: Vec<f64>,
    residual: f64,
}

struct RunOutcome {
    /// Largest converged Ritz value of this run, if any converged.
    top: Option<f64>,
    locked_any: bool,
}

const CHECK_STRIDE: usize = 4;
const BREAKDOWN_TOL: f64 = 1e-13;

fn solve(
    m: &SparseSymMatrix,
    t: usize,
    tol: f64,
    seed: u64,
) -> Result<(SpectrumSlice, Vec<Vec<f64>>), LinalgError> {
    let n = m.n();
    if t < 1 || t > n {
        return Err(LinalgError::BadEigenCount { requested: t, n });
    }
    let cap = (10 * n).max(1000);
    let mut matvecs = 0usize;
    let mut locked: Vec<Locked> = Vec::new();
    let mut restart = 0u64;
    let mut boost = 0u32;
    let mut last_top: Option<f64> = None;
    let mut worst_estimate = f64::INFINITY;

    loop {
        if locked.len() >= t {
            let mut mus: Vec<f64> = locked.iter().map(|l| l.mu).collect();
            mus.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let t_th = mus[t - 1];
            let confirmed = locked.len() == n
                || matches!(last_top, Some(top) if top <= t_th + 1e-12);
            if confirmed {
                break;
            }
        } else if locked.len() == n {
            break;
        }
        if matvecs >= cap {
            return Err(LinalgError::NoConvergence {
                iterations: matvecs,
                worst_residual: worst_estimate,
            });
        }
        let target = (t.saturating_sub(locked.len())).max(1);
        let outcome = run_once(
            m,
            &mut locked,
            target,
            seed,
            &mut restart,
            boost,
            &mut matvecs,
            cap,
            tol,
            &mut worst_estimate,
        );
        last_top = outcome.top;
        if !outcome.locked_any {
            // fruitless run: widen the basis and try a different start vector
            boost += 1;
        }
    }

    // Assemble the answer: map back lambda = 2 - mu, ascending in lambda.
    locked.sort_by(|a, b| b.mu.partial_cmp(&a.mu).unwrap());
    locked.truncate(t);
    let mut eigenvalues = Vec::with_capacity(t);
    let mut residuals = Vec::with_capacity(t);
    let mut vectors = Vec::with_capacity(t);
    for l in locked {
        let mut lambda = 2.0 - l.mu;
        if lambda.abs() <= tol {
            lambda = 0.0;
        }
        eigenvalues.push(lambda);
        residuals.push(l.residual);
        vectors.push(sign_fixed(l.vec));
    }
    Ok((
        SpectrumSlice {
            eigenvalues,
            residuals,
        },
        vectors,
    ))
}

fn sign_fixed(mut v: Vec<f64>) -> Vec<f64> {
    let mut imax = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[imax].abs() {
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    v
}

#[allow(clippy::too_many_arguments)]
fn run_once(
    m: &SparseSymMatrix,
    locked: &mut Vec<Locked>,
    target: usize,
    seed: u64,
    restart: &mut u64,
    boost: u32,
    matvecs: &mut usize,
    cap: usize,
    tol: f64,
    worst_estimate: &mut f64,
) -> RunOutcome {
    let n = m.n();
    let n_active = n - locked.len();
    let base = (3 * target + 10).max(40);
    let basis_cap = (base << boost.min(8)).min(n_active);

    let bmatvec = |x: &[f64], y: &mut [f64], count: &mut usize| {
        m.matvec(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = 2.0 * xi - *yi;
        }
        *count += 1;
    };

    // Start vector orthogonal to everything already locked.
    let locked_vecs: Vec<Vec<f64>> = locked.iter().map(|l| l.vec.clone()).collect();
    let mut v = loop {
        let mut cand = seeded_unit_vector(n, seed, *restart);
        *restart += 1;
        reorthogonalize(&mut cand, &[&locked_vecs]);
        let nrm = norm(&cand);
        if nrm > 1e-8 {
            for x in &mut cand {
                *x /= nrm;
            }
            break cand;
        }
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(basis_cap);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut last_check = 0usize;

    loop {
        basis.push(v.clone());
        let j = basis.len();
        bmatvec(&v, &mut w, matvecs);
        let a = dot(&w, &v);
        alpha.push(a);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= a * vi;
        }
        if j >= 2 {
            let b_prev = beta[j - 2];
            for (wi, ui) in w.iter_mut().zip(&basis[j - 2]) {
                *wi -= b_prev * ui;
            }
        }
        reorthogonalize(&mut w, &[&locked_vecs, &basis]);
        let b = norm(&w);
        let breakdown = b <= BREAKDOWN_TOL;
        let out_of_budget = *matvecs >= cap;
        let full = j == basis_cap;
        let due = j >= target && j - last_check >= CHECK_STRIDE;

        if breakdown || full || due || out_of_budget {
            last_check = j;
            let (theta, z) = tridiag_eigen(&alpha, &beta);
            // Ritz values descending = columns m-1, m-2, ...
            let mut prefix: Vec<usize> = Vec::new();
            for col in (0..j).rev() {
                let est = if breakdown { 0.0 } else { (b * z[j - 1][col]).abs() };
                if est <= tol * 0.5 {
                    prefix.push(col);
                } else {
                    *worst_estimate = worst_estimate.min(est);
                    break;
                }
            }
            let enough = prefix.len() >= target;
            if enough || breakdown || full || out_of_budget {
                // Lock the converged prefix, verifying explicit residuals.
                let mut top: Option<f64> = None;
                let mut locked_any = false;
                for &col in &prefix {
                    let mut y = vec![0.0; n];
                    for (k, bk) in basis.iter().enumerate() {
                        let c = z[k][col];
                        for (yi, bi) in y.iter_mut().zip(bk) {
                            *yi += c * bi;
                        }
                    }
                    // Nudge back into exact orthogonality with the locked set.
                    let lv: Vec<Vec<f64>> = locked.iter().map(|l| l.vec.clone()).collect();
                    reorthogonalize(&mut y, &[&lv]);
                    let nrm = norm(&y);
                    if nrm < 0.5 {
                        continue;
                    }
                    for x in &mut y {
                        *x /= nrm;
                    }
                    let mut by = vec![0.0; n];
                    bmatvec(&y, &mut by, matvecs);
                    let mu = theta[col];
                    let mut res2 = 0.0;
                    for (byi, yi) in by.iter().zip(&y) {
                        let r = byi - mu * yi;
                        res2 += r * r;
                    }
                    let res = res2.sqrt();
                    if res <= tol {
                        locked.push(Locked {
                            mu,
                            vec: y,
                            residual: res,
                        });
                        locked_any = true;
                        if top.is_none() {
                            top = Some(mu);
                        }
                    } else {
                        *worst_estimate = worst_estimate.min(res);
                        break;
                    }
                }
                return RunOutcome { top, locked_any };
            }
        }
        beta.push(b);
        v = w.iter().map(|x| x / b).collect();
    }
}
