//! Small dense linear algebra for per-bin Hermitian matrices.
//!
//! Everything here is sized for sensor counts in the tens, so plain
//! O(n^3) routines are used: a cyclic Jacobi eigensolver for Hermitian
//! matrices, a complex Cholesky factorization for positive-definite
//! solves, and pivoted Gaussian elimination for the tiny real systems
//! of the variance solver. All routines are deterministic.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

/// Squared Frobenius norm of a complex matrix.
pub fn frob_norm_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Frobenius norm of the difference `a - b`.
pub fn frob_dist(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Complex identity matrix.
pub fn identity(n: usize) -> CMat {
    let mut m = CMat::zeros((n, n));
    for i in 0..n {
        m[(i, i)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Outer product `v v^H`.
pub fn outer(v: &CVec) -> CMat {
    let n = v.len();
    let mut m = CMat::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    m
}

/// `a^H b`.
pub fn hdot(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendecomposition of a Hermitian matrix via cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted in descending order and the matching
/// eigenvectors as columns. Each eigenvector is phase-fixed so that its
/// first component of non-negligible magnitude is real and positive,
/// which keeps downstream subspace code deterministic.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigen input must be square");
    let mut m = a.clone();
    // Work on the exactly Hermitian part; inputs may carry tiny asymmetry.
    for i in 0..n {
        for j in 0..n {
            let h = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = h;
            m[(j, i)] = h.conj();
        }
    }
    let mut v = identity(n);
    let scale: f64 = frob_norm_sq(&m).sqrt().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = m[(p, q)];
                let gm = g.norm();
                if gm <= tol * 1e-2 {
                    continue;
                }
                let phase = g / gm; // e^{i phi}
                let alpha = m[(p, p)].re;
                let beta = m[(q, q)].re;
                let theta = (beta - alpha) / (2.0 * gm);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let sp = phase * s; // s * e^{i phi}

                // Column update: B = M * J
                for r in 0..n {
                    let mrp = m[(r, p)];
                    let mrq = m[(r, q)];
                    m[(r, p)] = mrp * c - mrq * sp.conj();
                    m[(r, q)] = mrp * sp + mrq * c;
                }
                // Row update: M = J^H * B
                for r in 0..n {
                    let mpr = m[(p, r)];
                    let mqr = m[(q, r)];
                    m[(p, r)] = mpr * c - mqr * sp;
                    m[(q, r)] = mpr * sp.conj() + mqr * c;
                }
                // Accumulate eigenvectors: V = V * J
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * c - vrq * sp.conj();
                    v[(r, q)] = vrp * sp + vrq * c;
                }
                // Clamp the rotated pair onto exact Hermitian form.
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).unwrap().then(i.cmp(&j)));

    let mut sorted_vals = Vec::with_capacity(n);
    let mut vecs = CMat::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        sorted_vals.push(evals[src]);
        // Phase fix: first component with |.| > 1e-12 made real positive.
        let mut phase = Complex64::new(1.0, 0.0);
        for r in 0..n {
            let z = v[(r, src)];
            if z.norm() > 1e-12 {
                phase = z.conj() / z.norm();
                break;
            }
        }
        for r in 0..n {
            vecs[(r, col)] = v[(r, src)] * phase;
        }
    }
    (sorted_vals, vecs)
}

/// Cholesky factor `L` (lower triangular) of a Hermitian positive-definite matrix.
pub fn cholesky(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let mut l = CMat::zeros((n, n));
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(CoreError::NotPositiveDefinite(format!(
                "pivot {j} is {d:.3e}"
            )));
        }
        let dj = d.sqrt();
        l[(j, j)] = Complex64::new(dj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Solve `A x = b` with `A` Hermitian positive definite.
pub fn solve_hpd(a: &CMat, b: &CVec) -> Result<CVec> {
    let l = cholesky(a)?;
    Ok(cholesky_solve(&l, b))
}

/// Solve using a precomputed Cholesky factor.
pub fn cholesky_solve(l: &CMat, b: &CVec) -> CVec {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let t = l[(i, k)] * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = l[(k, i)].conj() * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Solve the dense real system `A x = b` by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot vanishes.
pub fn solve_real(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in (col + 1)..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= 1e-300 * scale.max(1.0) || best == 0.0 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
            x[r] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for c in (i + 1)..n {
            s -= m[i * n + c] * x[c];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

/// Eigenvalues of a small real symmetric matrix (cyclic Jacobi).
pub fn sym_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let scale = m
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for _ in 0..50 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = m[p * n + q];
                if g.abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * g);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let mrp = m[r * n + p];
                    let mrq = m[r * n + q];
                    m[r * n + p] = c * mrp - s * mrq;
                    m[r * n + q] = s * mrp + c * mrq;
                }
                for r in 0..n {
                    let mpr = m[p * n + r];
                    let mqr = m[q * n + r];
                    m[p * n + r] = c * mpr - s * mqr;
                    m[q * n + r] = s * mpr + c * mqr;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
    vals
}
