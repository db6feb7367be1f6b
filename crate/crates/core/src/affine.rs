//! Affine model data: generator parameters, market specification, parameter
//! admissibility, and the functions G0/G driving the generalized Riccati
//! system.
//!
//! State space is D = R+^m x R^(n-m). Components 1..m (index set I) stay
//! nonnegative and may carry state-dependent diffusion, jumps, short rate and
//! default intensity; components m+1..n (index set J) are unconstrained.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// One atom of a discrete jump measure: mass `weight` at `point`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpAtom {
    pub weight: f64,
    pub point: DVector<f64>,
}

/// Generator parameters of the affine state process.
///
/// `a` and `alpha[i]` are the constant and state-linear diffusion parts
/// (quadratic-form normalization: the instantaneous covariance of the state
/// is `2(a + sum_i x_i alpha[i])`). `b + beta x` is the drift before jump
/// compensation. `nu` is the constant-intensity jump measure and `mu[i]` the
/// measure scaled by the i-th positive component.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineParams {
    pub m: usize,
    pub a: DMatrix<f64>,
    pub alpha: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
    pub beta: DMatrix<f64>,
    pub nu: Vec<JumpAtom>,
    pub mu: Vec<Vec<JumpAtom>>,
}

/// Market layer on top of the state process: log price s = e + <epsilon, X>,
/// short rate r = d + <delta, X_I>, default intensity lambda = c + <gamma, X_I>.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketSpec {
    pub e: f64,
    pub epsilon: DVector<f64>,
    pub d: f64,
    pub delta: DVector<f64>,
    pub c: f64,
    pub gamma: DVector<f64>,
}

impl AffineParams {
    /// State dimension n.
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Number of nonnegative components m.
    pub fn dim_pos(&self) -> usize {
        self.m
    }

    /// Check that all containers have mutually consistent shapes.
    pub fn check_dims(&self) -> Result<()> {
        let n = self.dim();
        let m = self.m;
        if m > n {
            return Err(Error::Dimension(format!("m = {m} exceeds n = {n}")));
        }
        if self.a.nrows() != n || self.a.ncols() != n {
            return Err(Error::Dimension(format!(
                "a is {}x{}, expected {n}x{n}",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if self.alpha.len() != m {
            return Err(Error::Dimension(format!(
                "alpha has {} entries, expected m = {m}",
                self.alpha.len()
            )));
        }
        for (i, al) in self.alpha.iter().enumerate() {
            if al.nrows() != n || al.ncols() != n {
                return Err(Error::Dimension(format!(
                    "alpha[{i}] is {}x{}, expected {n}x{n}",
                    al.nrows(),
                    al.ncols()
                )));
            }
        }
        if self.beta.nrows() != n || self.beta.ncols() != n {
            return Err(Error::Dimension(format!(
                "beta is {}x{}, expected {n}x{n}",
                self.beta.nrows(),
                self.beta.ncols()
            )));
        }
        for (q, atom) in self.nu.iter().enumerate() {
            if atom.point.len() != n {
                return Err(Error::Dimension(format!(
                    "nu[{q}] point has length {}, expected {n}",
                    atom.point.len()
                )));
            }
        }
        if !self.mu.is_empty() && self.mu.len() != m {
            return Err(Error::Dimension(format!(
                "mu has {} lists, expected m = {m} (or none)",
                self.mu.len()
            )));
        }
        for (i, list) in self.mu.iter().enumerate() {
            for (q, atom) in list.iter().enumerate() {
                if atom.point.len() != n {
                    return Err(Error::Dimension(format!(
                        "mu[{i}][{q}] point has length {}, expected {n}",
                        atom.point.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Jump lists for `mu`, padded to m entries when absent.
    pub fn mu_list(&self, i: usize) -> &[JumpAtom] {
        if i < self.mu.len() {
            &self.mu[i]
        } else {
            &[]
        }
    }
}

impl MarketSpec {
    pub fn check_dims(&self, params: &AffineParams) -> Result<()> {
        let n = params.dim();
        let m = params.m;
        if self.epsilon.len() != n {
            return Err(Error::Dimension(format!(
                "epsilon has length {}, expected n = {n}",
                self.epsilon.len()
            )));
        }
        if self.delta.len() != m {
            return Err(Error::Dimension(format!(
                "delta has length {}, expected m = {m}",
                self.delta.len()
            )));
        }
        if self.gamma.len() != m {
            return Err(Error::Dimension(format!(
                "gamma has length {}, expected m = {m}",
                self.gamma.len()
            )));
        }
        Ok(())
    }

    /// Same market with default switched off (c = 0, gamma = 0); prices
    /// government bonds and other default-free claims.
    pub fn without_default(&self) -> MarketSpec {
        MarketSpec {
            c: 0.0,
            gamma: DVector::zeros(self.gamma.len()),
            ..self.clone()
        }
    }

    /// Log spot: e + <epsilon, x>.
    pub fn log_spot(&self, x: &[f64]) -> f64 {
        self.e + self.epsilon.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

/// One violated admissibility condition.
#[derive(Clone, Debug)]
pub struct Violation {
    /// Condition label, e.g. "(iv)".
    pub condition: &'static str,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "condition {}: {}", self.condition, self.message)
    }
}

/// Outcome of [`validate_params`]: empty iff the model is admissible.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            write!(f, "admissible")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

const ADMISS_TOL: f64 = 1e-12;

fn sym_violation(mat: &DMatrix<f64>, name: &str, out: &mut Vec<Violation>, cond: &'static str) {
    let scale = mat.amax().max(1.0);
    for r in 0..mat.nrows() {
        for c in (r + 1)..mat.ncols() {
            if (mat[(r, c)] - mat[(c, r)]).abs() > ADMISS_TOL * scale {
                out.push(Violation {
                    condition: cond,
                    message: format!(
                        "{name} not symmetric: [{r},{c}] = {} vs [{c},{r}] = {}",
                        mat[(r, c)],
                        mat[(c, r)]
                    ),
                });
                return;
            }
        }
    }
}

fn psd_violation(mat: &DMatrix<f64>, name: &str, out: &mut Vec<Violation>, cond: &'static str) {
    let n = mat.nrows();
    let flat: Vec<f64> = (0..n * n).map(|k| mat[(k / n, k % n)]).collect();
    let min_ev = linalg::min_eigenvalue(&flat, n);
    let scale = mat.amax().max(1.0);
    if min_ev < -ADMISS_TOL * scale {
        out.push(Violation {
            condition: cond,
            message: format!("{name} not positive semi-definite: min eigenvalue {min_ev:e}"),
        });
    }
}

/// Check the generator admissibility conditions and the market-coefficient
/// sign constraints. Dimension mismatches are structural errors, not
/// violations.
pub fn validate_params(params: &AffineParams, market: &MarketSpec) -> Result<ValidationReport> {
    params.check_dims()?;
    market.check_dims(params)?;

    let n = params.dim();
    let m = params.m;
    let mut v = Vec::new();

    // (i) a symmetric PSD with a_II = 0.
    sym_violation(&params.a, "a", &mut v, "(i)");
    psd_violation(&params.a, "a", &mut v, "(i)");
    for r in 0..m {
        for c in 0..m {
            if params.a[(r, c)].abs() > ADMISS_TOL {
                v.push(Violation {
                    condition: "(i)",
                    message: format!("a[{r},{c}] = {} must vanish on the I x I block", params.a[(r, c)]),
                });
            }
        }
    }

    // (ii) alpha_i symmetric PSD; alpha_i restricted to I x I vanishes except (i,i).
    for (i, al) in params.alpha.iter().enumerate() {
        sym_violation(al, &format!("alpha[{i}]"), &mut v, "(ii)");
        psd_violation(al, &format!("alpha[{i}]"), &mut v, "(ii)");
        for r in 0..m {
            for c in 0..m {
                if (r != i || c != i) && al[(r, c)].abs() > ADMISS_TOL {
                    v.push(Violation {
                        condition: "(ii)",
                        message: format!(
                            "alpha[{i}][{r},{c}] = {} must vanish (only the ({i},{i}) entry may be nonzero on I x I)",
                            al[(r, c)]
                        ),
                    });
                }
            }
        }
    }

    // (iii) b in D.
    for i in 0..m {
        if params.b[i] < -ADMISS_TOL {
            v.push(Violation {
                condition: "(iii)",
                message: format!("b[{i}] = {} must be nonnegative", params.b[i]),
            });
        }
    }

    // (iv) beta_IJ = 0 and beta_II off-diagonal nonnegative.
    for r in 0..m {
        for c in m..n {
            if params.beta[(r, c)].abs() > ADMISS_TOL {
                v.push(Violation {
                    condition: "(iv)",
                    message: format!("beta[{r},{c}] = {} must vanish (I x J block)", params.beta[(r, c)]),
                });
            }
        }
        for c in 0..m {
            if r != c && params.beta[(r, c)] < -ADMISS_TOL {
                v.push(Violation {
                    condition: "(iv)",
                    message: format!(
                        "beta[{r},{c}] = {} must be nonnegative off the diagonal of the I x I block",
                        params.beta[(r, c)]
                    ),
                });
            }
        }
    }

    // Jump atoms: weights > 0, points in D \ {0}.
    let check_atoms = |atoms: &[JumpAtom], name: &str, v: &mut Vec<Violation>| {
        for (q, atom) in atoms.iter().enumerate() {
            if !(atom.weight > 0.0) {
                v.push(Violation {
                    condition: "(v)",
                    message: format!("{name}[{q}] weight {} must be strictly positive", atom.weight),
                });
            }
            for i in 0..m {
                if atom.point[i] < 0.0 {
                    v.push(Violation {
                        condition: "(v)",
                        message: format!(
                            "{name}[{q}] point component {i} = {} must be nonnegative",
                            atom.point[i]
                        ),
                    });
                }
            }
            if atom.point.iter().all(|&x| x == 0.0) {
                v.push(Violation {
                    condition: "(v)",
                    message: format!("{name}[{q}] point must be nonzero"),
                });
            }
        }
    };
    check_atoms(&params.nu, "nu", &mut v);
    for i in 0..params.mu.len() {
        check_atoms(&params.mu[i], &format!("mu[{i}]"), &mut v);
    }

    // Market coefficients nonnegative.
    if market.d < 0.0 {
        v.push(Violation {
            condition: "(vi)",
            message: format!("d = {} must be nonnegative", market.d),
        });
    }
    if market.c < 0.0 {
        v.push(Violation {
            condition: "(vi)",
            message: format!("c = {} must be nonnegative", market.c),
        });
    }
    for i in 0..m {
        if market.delta[i] < 0.0 {
            v.push(Violation {
                condition: "(vi)",
                message: format!("delta[{i}] = {} must be nonnegative", market.delta[i]),
            });
        }
        if market.gamma[i] < 0.0 {
            v.push(Violation {
                condition: "(vi)",
                message: format!("gamma[{i}] = {} must be nonnegative", market.gamma[i]),
            });
        }
    }

    Ok(ValidationReport { violations: v })
}

// ---------------------------------------------------------------------------
// G functions
// ---------------------------------------------------------------------------

/// Jump truncation: 0 at 0, otherwise sign(xi) * min(|xi|, 1).
#[inline]
pub fn chi(xi: f64) -> f64 {
    if xi == 0.0 {
        0.0
    } else {
        xi.abs().min(1.0).copysign(xi)
    }
}

#[inline]
fn dot_real_complex(mat: &DMatrix<f64>, u: &[Complex64]) -> Complex64 {
    // <M u, u> with the bilinear (non-Hermitian) product.
    let n = u.len();
    let mut acc = Complex64::ZERO;
    for r in 0..n {
        let mut row = Complex64::ZERO;
        for c in 0..n {
            let m = mat[(r, c)];
            if m != 0.0 {
                row += m * u[c];
            }
        }
        acc += row * u[r];
    }
    acc
}

/// Jump transform of one atom list with compensation over `trunc_set`
/// (component indices whose chi terms are subtracted).
fn jump_sum(atoms: &[JumpAtom], u: &[Complex64], trunc_extra: Option<usize>, m: usize) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for atom in atoms {
        let mut exponent = Complex64::ZERO;
        for (k, uk) in u.iter().enumerate() {
            exponent += uk * atom.point[k];
        }
        let mut comp = Complex64::ZERO;
        // Truncation set is J (all k >= m) plus optionally the driving index i.
        for (k, uk) in u.iter().enumerate() {
            let in_set = k >= m || trunc_extra == Some(k);
            if in_set {
                let c = chi(atom.point[k]);
                if c != 0.0 {
                    comp += uk * c;
                }
            }
        }
        acc += atom.weight * (exponent.exp() - 1.0 - comp);
    }
    acc
}

/// Evaluate G0 and G_i (i in I), writing G_i into `g_out` (length m).
///
/// G0(u,v,w) = <a u, u> + <b, u> + d v + c (w - 1) + nu-sum,
/// G_i(u,v,w) = <alpha_i u, u> + (beta^T u)_i + delta_i v + gamma_i (w - 1) + mu_i-sum.
pub fn eval_g_into(
    params: &AffineParams,
    market: &MarketSpec,
    u: &[Complex64],
    v: Complex64,
    w: Complex64,
    g_out: &mut [Complex64],
) -> Complex64 {
    let n = params.dim();
    let m = params.m;
    debug_assert_eq!(u.len(), n);
    debug_assert_eq!(g_out.len(), m);

    let mut g0 = dot_real_complex(&params.a, u) + market.d * v + market.c * (w - 1.0);
    for k in 0..n {
        g0 += params.b[k] * u[k];
    }
    if !params.nu.is_empty() {
        g0 += jump_sum(&params.nu, u, None, m);
    }

    for i in 0..m {
        let mut gi = dot_real_complex(&params.alpha[i], u)
            + market.delta[i] * v
            + market.gamma[i] * (w - 1.0);
        // i-th component of beta^T u, i.e. column i of beta dotted with u.
        for k in 0..n {
            let bk = params.beta[(k, i)];
            if bk != 0.0 {
                gi += bk * u[k];
            }
        }
        let atoms = params.mu_list(i);
        if !atoms.is_empty() {
            gi += jump_sum(atoms, u, Some(i), m);
        }
        g_out[i] = gi;
    }
    g0
}

/// Allocating wrapper around [`eval_g_into`].
pub fn eval_g(
    params: &AffineParams,
    market: &MarketSpec,
    u: &[Complex64],
    v: Complex64,
    w: Complex64,
) -> (Complex64, Vec<Complex64>) {
    let mut g = vec![Complex64::ZERO; params.m];
    let g0 = eval_g_into(params, market, u, v, w, &mut g);
    (g0, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cir() -> (AffineParams, MarketSpec) {
        // dX = kappa(theta - X) dt + sigma sqrt(X) dW, short rate r = X.
        let kappa = 0.5;
        let theta = 0.2;
        let sigma = 0.3;
        let params = AffineParams {
            m: 1,
            a: DMatrix::zeros(1, 1),
            alpha: vec![DMatrix::from_element(1, 1, 0.5 * sigma * sigma)],
            b: DVector::from_vec(vec![kappa * theta]),
            beta: DMatrix::from_element(1, 1, -kappa),
            nu: vec![],
            mu: vec![],
        };
        let market = MarketSpec {
            e: 0.0,
            epsilon: DVector::zeros(1),
            d: 0.0,
            delta: DVector::from_vec(vec![1.0]),
            c: 0.0,
            gamma: DVector::from_vec(vec![0.0]),
        };
        (params, market)
    }

    #[test]
    fn cir_is_admissible() {
        let (params, market) = cir();
        let report = validate_params(&params, &market).unwrap();
        assert!(report.is_admissible(), "{report}");
    }

    #[test]
    fn nonzero_a_on_positive_block_violates_condition_i() {
        let (mut params, market) = cir();
        params.a[(0, 0)] = 1.0;
        let report = validate_params(&params, &market).unwrap();
        assert!(report.violations.iter().any(|v| v.condition == "(i)"), "{report}");
    }

    #[test]
    fn cross_block_drift_violates_condition_iv() {
        let params = AffineParams {
            m: 1,
            a: DMatrix::zeros(2, 2),
            alpha: vec![DMatrix::zeros(2, 2)],
            b: DVector::zeros(2),
            beta: DMatrix::from_row_slice(2, 2, &[-1.0, 0.7, 0.0, 0.0]),
            nu: vec![],
            mu: vec![],
        };
        let market = MarketSpec {
            e: 0.0,
            epsilon: DVector::zeros(2),
            d: 0.0,
            delta: DVector::zeros(1),
            c: 0.0,
            gamma: DVector::zeros(1),
        };
        let report = validate_params(&params, &market).unwrap();
        assert!(report.violations.iter().any(|v| v.condition == "(iv)"), "{report}");
    }

    #[test]
    fn dimension_mismatch_is_a_structural_error() {
        let (mut params, market) = cir();
        params.alpha.push(DMatrix::zeros(1, 1));
        assert!(matches!(
            validate_params(&params, &market),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn negative_market_coefficients_are_flagged() {
        let (params, mut market) = cir();
        market.c = -0.1;
        let report = validate_params(&params, &market).unwrap();
        assert!(report.violations.iter().any(|v| v.condition == "(vi)"), "{report}");
    }

    #[test]
    fn g_vanishes_at_the_neutral_point() {
        let (params, market) = cir();
        let u = [Complex64::ZERO];
        let (g0, g) = eval_g(&params, &market, &u, Complex64::ZERO, Complex64::ONE);
        assert_eq!(g0, Complex64::ZERO);
        assert_eq!(g[0], Complex64::ZERO);
    }

    #[test]
    fn rate_terms_survive_alone() {
        let (params, mut market) = cir();
        market.d = 0.03;
        let u = [Complex64::ZERO];
        let (g0, g) = eval_g(&params, &market, &u, Complex64::ONE, Complex64::ONE);
        assert_abs_diff_eq!(g0.re, 0.03, epsilon = 1e-15);
        assert_abs_diff_eq!(g[0].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn jump_with_zero_unconstrained_components_has_no_compensator() {
        // Single nu atom whose J components vanish: compensator term drops and
        // G0 picks up exactly weight * (exp(<u,y>) - 1).
        let params = AffineParams {
            m: 1,
            a: DMatrix::zeros(2, 2),
            alpha: vec![DMatrix::zeros(2, 2)],
            b: DVector::zeros(2),
            beta: DMatrix::zeros(2, 2),
            nu: vec![JumpAtom {
                weight: 1.0,
                point: DVector::from_vec(vec![0.4, 0.0]),
            }],
            mu: vec![],
        };
        let market = MarketSpec {
            e: 0.0,
            epsilon: DVector::zeros(2),
            d: 0.0,
            delta: DVector::zeros(1),
            c: 0.0,
            gamma: DVector::zeros(1),
        };
        let u = [Complex64::new(0.7, 0.0), Complex64::new(-0.3, 0.0)];
        let (g0, _) = eval_g(&params, &market, &u, Complex64::ZERO, Complex64::ONE);
        let expected = (0.7_f64 * 0.4).exp() - 1.0;
        assert_abs_diff_eq!(g0.re, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(g0.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn chi_truncates_at_unit_size() {
        assert_eq!(chi(0.0), 0.0);
        assert_eq!(chi(0.3), 0.3);
        assert_eq!(chi(-0.3), -0.3);
        assert_eq!(chi(2.5), 1.0);
        assert_eq!(chi(-2.5), -1.0);
    }
}
