//! Small dense helpers used in hot loops: symmetric eigendecomposition via
//! cyclic Jacobi rotations and Gauss-Legendre nodes.
//!
//! Matrices here are row-major flat slices. Dimensions in this crate are tiny
//! (a handful of state factors), so Jacobi beats a general-purpose solver and
//! lets the Monte Carlo stepper run without per-step allocation.

/// Scratch space for [`sym_eigen`] / [`psd_sqrt`].
#[derive(Clone, Debug, Default)]
pub struct SymEigenWork {
    a: Vec<f64>,
    v: Vec<f64>,
    lambda: Vec<f64>,
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// `mat` is n x n row-major and only its symmetric part is used. On return
/// `work.lambda` holds eigenvalues and `work.v` the eigenvectors (column `j`
/// of `v` pairs with `lambda[j]`). Deterministic: fixed sweep order, fixed
/// convergence threshold.
pub fn sym_eigen(mat: &[f64], n: usize, work: &mut SymEigenWork) {
    assert_eq!(mat.len(), n * n);
    work.a.clear();
    work.a.extend_from_slice(mat);
    work.v.clear();
    work.v.resize(n * n, 0.0);
    work.lambda.resize(n, 0.0);
    for i in 0..n {
        work.v[i * n + i] = 1.0;
    }
    let a = &mut work.a;
    let v = &mut work.v;

    let scale: f64 = mat
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
        .max(1e-300);
    let tol = 1e-15 * scale;

    for _sweep in 0..64 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    for i in 0..n {
        work.lambda[i] = a[i * n + i];
    }
}

/// Symmetric PSD square root: `out = V diag(sqrt(max(lambda, 0))) V^T`.
///
/// Eigenvalues below zero are clipped; the return value counts eigenvalues
/// below `-clip_tol` (genuine PSD violations as opposed to roundoff).
pub fn psd_sqrt(mat: &[f64], n: usize, work: &mut SymEigenWork, out: &mut [f64], clip_tol: f64) -> usize {
    sym_eigen(mat, n, work);
    let mut clipped = 0;
    for l in work.lambda.iter_mut() {
        if *l < -clip_tol {
            clipped += 1;
        }
        *l = l.max(0.0).sqrt();
    }
    let v = &work.v;
    let lam = &work.lambda;
    for r in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += v[r * n + k] * lam[k] * v[c * n + k];
            }
            out[r * n + c] = acc;
        }
    }
    clipped
}

/// Smallest eigenvalue of a symmetric matrix (used by admissibility checks).
pub fn min_eigenvalue(mat: &[f64], n: usize) -> f64 {
    let mut work = SymEigenWork::default();
    sym_eigen(mat, n, &mut work);
    work.lambda.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; standard cosine initial
/// guesses. Accurate to machine precision for the panel sizes used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
