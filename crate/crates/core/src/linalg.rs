//! Deterministic small-matrix numerics: symmetric eigendecomposition via
//! cyclic Jacobi, SVD via one-sided Jacobi, and Haar-orthogonal sampling.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::RngStream;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

const MAX_SWEEPS: usize = 100;

/// Full SVD `A = U Σ Vᵀ` with `U` m×m, `V` n×n orthogonal and `sigma`
/// sorted descending of length `min(m, n)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

/// Eigenvalues of a symmetric matrix, sorted descending.
pub fn sym_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    Ok(sym_eig(a)?.0)
}

/// Eigendecomposition of a symmetric matrix: `(values desc, vectors)` with
/// eigenvectors in the columns of the returned matrix.
///
/// Cyclic Jacobi with an off-diagonal Frobenius threshold of `1e-14 * ‖a‖_F`
/// and a cap of 100 sweeps.
pub fn sym_eig(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    if a.rows() != a.cols() {
        return Err(Error::invalid("sym_eig requires a square matrix"));
    }
    if a.rel_asymmetry() > 1e-12 {
        return Err(Error::invalid("matrix is not symmetric within 1e-12"));
    }
    let n = a.rows();
    // work on the symmetrized copy
    let mut m = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut vecs = Mat::identity(n);
    let norm = m.frob_norm();
    let tol = 1e-14 * norm;

    let mut converged = norm == 0.0 || n == 1;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off_sq = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off_sq += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        if off_sq.sqrt() <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // A <- Jᵀ A J on rows/cols p, q
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = vecs[(k, p)];
                    let vkq = vecs[(k, q)];
                    vecs[(k, p)] = c * vkp - s * vkq;
                    vecs[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let mut off_sq = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off_sq += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        if off_sq.sqrt() > tol {
            return Err(Error::numerical(format!(
                "jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    Ok((values, vectors))
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &Mat) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::invalid("svd requires finite entries"));
    }
    if a.rows() < a.cols() {
        let r = svd(&a.transpose())?;
        return Ok(SvdResult { u: r.v, sigma: r.sigma, v: r.u });
    }
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut v = Mat::identity(n);
    let norm = a.frob_norm();
    let tol = 1e-15 * norm.max(f64::MIN_POSITIVE);

    let mut converged = norm == 0.0 || n <= 1;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    alpha += w[(i, p)] * w[(i, p)];
                    beta += w[(i, q)] * w[(i, q)];
                    gamma += w[(i, p)] * w[(i, q)];
                }
                if gamma.abs() <= tol * tol || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wip = w[(i, p)];
                    let wiq = w[(i, q)];
                    w[(i, p)] = c * wip - s * wiq;
                    w[(i, q)] = s * wip + c * wiq;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::numerical(format!(
            "one-sided jacobi svd did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    sigma = order.iter().map(|&j| sigma[j]).collect();
    let v = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);

    // left singular vectors: normalized columns, orthonormal completion for
    // the null space and the extra m - n columns
    let mut u = Mat::zeros(m, m);
    let sig_max = sigma.first().copied().unwrap_or(0.0);
    let zero_tol = sig_max * 1e-12;
    let mut filled = 0usize;
    for j in 0..n {
        if sigma[j] > zero_tol && sigma[j] > 0.0 {
            let src = order[j];
            for i in 0..m {
                u[(i, filled)] = w[(i, src)] / sigma[j];
            }
            filled += 1;
        }
    }
    // Gram-Schmidt completion against the columns already in place
    let mut cand = 0usize;
    while filled < m && cand < m + n {
        let mut col = vec![0.0; m];
        if cand < m {
            col[cand] = 1.0;
        }
        for _ in 0..2 {
            for j in 0..filled {
                let dot: f64 = (0..m).map(|i| col[i] * u[(i, j)]).sum();
                for i in 0..m {
                    col[i] -= dot * u[(i, j)];
                }
            }
        }
        let nrm: f64 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        cand += 1;
        if nrm > 1e-8 {
            for i in 0..m {
                u[(i, filled)] = col[i] / nrm;
            }
            filled += 1;
        }
    }
    if filled < m {
        return Err(Error::numerical("failed to complete left singular basis"));
    }
    Ok(SvdResult { u, sigma, v })
}

/// Sample an n×n orthogonal matrix from the Haar measure on O(n).
///
/// QR of an i.i.d. standard-Gaussian matrix with each column of Q multiplied
/// by the sign of the corresponding diagonal of R; without the sign fix the
/// distribution is not Haar.
pub fn sample_haar_orthogonal(n: usize, rng: &mut ChaCha12Rng) -> Mat {
    assert!(n >= 1, "n must be positive");
    let g = Mat::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let (q, r_diag) = householder_qr(&g);
    let mut out = q;
    for j in 0..n {
        if r_diag[j] < 0.0 {
            for i in 0..n {
                out[(i, j)] = -out[(i, j)];
            }
        }
    }
    out
}

/// Convenience wrapper taking an [`RngStream`].
pub fn sample_haar_orthogonal_stream(n: usize, stream: RngStream) -> Mat {
    sample_haar_orthogonal(n, &mut stream.rng())
}

/// Householder QR; returns `Q` (square) and the diagonal of `R`.
fn householder_qr(a: &Mat) -> (Mat, Vec<f64>) {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut q = Mat::identity(m);
    for k in 0..n.min(m.saturating_sub(1)) {
        let mut norm_x: f64 = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        if r[(k, k)] > 0.0 {
            norm_x = -norm_x;
        }
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= norm_x;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // apply H = I - 2vvᵀ/‖v‖² to R (left) and accumulate into Q
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
            let f = 2.0 * dot / vnorm_sq;
            for i in k..m {
                r[(i, j)] -= f * v[i - k];
            }
        }
        for j in 0..m {
            let dot: f64 = (k..m).map(|i| v[i - k] * q[(i, j)]).sum();
            let f = 2.0 * dot / vnorm_sq;
            for i in k..m {
                q[(i, j)] -= f * v[i - k];
            }
        }
    }
    let diag = (0..n.min(m)).map(|i| r[(i, i)]).collect();
    (q.transpose(), diag)
}
