//! Generalized Riccati system for discounted exponential moments.
//!
//! For a claim transform parameter z the exponent pair (A, B) solves
//!   dA/dt = G0(B(t), v, w),        A(0) = 0,
//!   dB_I/dt = G(B(t), v, w),       B_I(0) = u_I,
//!   B_J(t) = exp(beta_JJ^T t) u_J  (closed form),
//! with (u, v, w) = (z epsilon, z - 1, z). The discounted moment
//! E_x[e^{-R_t} S_t^z 1_{t < tau}] is exp(z e + A(t) + <B(t), x>) on the
//! domain where the system stays finite.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::affine::{eval_g, eval_g_into, AffineParams, MarketSpec};
use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions, OdeSolution};

/// Default local error tolerance for the Riccati integration.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Fixed tolerance for the martingale residual check.
const MARTINGALE_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Closed-form flow of the unconstrained block
// ---------------------------------------------------------------------------

/// Evaluator for B_J(t) = exp(beta_JJ^T t) u_J. The common case beta_JJ = 0
/// (forced by the martingale condition) reduces to a constant.
#[derive(Clone, Debug)]
enum UnconstrainedFlow {
    Empty,
    Constant(Vec<Complex64>),
    General {
        beta_jj_t: DMatrix<f64>,
        u_re: DVector<f64>,
        u_im: DVector<f64>,
    },
}

impl UnconstrainedFlow {
    fn new(params: &AffineParams, u_j: &[Complex64]) -> Self {
        let n = params.dim();
        let m = params.m;
        let nj = n - m;
        if nj == 0 {
            return UnconstrainedFlow::Empty;
        }
        let mut all_zero = true;
        let mut beta_jj_t = DMatrix::zeros(nj, nj);
        for r in 0..nj {
            for c in 0..nj {
                let val = params.beta[(m + r, m + c)];
                beta_jj_t[(c, r)] = val;
                if val != 0.0 {
                    all_zero = false;
                }
            }
        }
        if all_zero {
            UnconstrainedFlow::Constant(u_j.to_vec())
        } else {
            UnconstrainedFlow::General {
                beta_jj_t,
                u_re: DVector::from_iterator(nj, u_j.iter().map(|z| z.re)),
                u_im: DVector::from_iterator(nj, u_j.iter().map(|z| z.im)),
            }
        }
    }

    fn eval_into(&self, t: f64, out: &mut [Complex64]) {
        match self {
            UnconstrainedFlow::Empty => {}
            UnconstrainedFlow::Constant(u) => out.copy_from_slice(u),
            UnconstrainedFlow::General { beta_jj_t, u_re, u_im } => {
                let propagator = (beta_jj_t.clone() * t).exp();
                let re = &propagator * u_re;
                let im = &propagator * u_im;
                for (j, o) in out.iter_mut().enumerate() {
                    *o = Complex64::new(re[j], im[j]);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Riccati solution
// ---------------------------------------------------------------------------

/// Solved exponent pair on [0, t_end] with dense-output evaluation.
#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    m: usize,
    n: usize,
    ode: OdeSolution,
    flow: UnconstrainedFlow,
    pub t_end: f64,
    pub exploded: bool,
    pub explosion_time: Option<f64>,
}

impl RiccatiSolution {
    /// A(t) and the full B(t) (length n), or None past the reach of the
    /// integration (explosion or t outside [0, t_end]).
    pub fn eval(&self, t: f64) -> Option<(Complex64, Vec<Complex64>)> {
        let state = self.ode.eval(t)?;
        let mut b = vec![Complex64::ZERO; self.n];
        b[..self.m].copy_from_slice(&state[1..]);
        self.flow.eval_into(t, &mut b[self.m..]);
        Some((state[0], b))
    }

    /// Values at t_end; None when the system exploded earlier.
    pub fn terminal(&self) -> Option<(Complex64, Vec<Complex64>)> {
        self.eval(self.t_end)
    }

    /// Times of the accepted integration grid (including 0 and t_reached).
    pub fn grid_times(&self) -> &[f64] {
        &self.ode.grid
    }

    pub fn t_reached(&self) -> f64 {
        self.ode.t_reached
    }
}

/// Integrate the exponent system for transform argument (u, v, w) up to
/// t_end with local error tolerance `tol`. Explosion before t_end is not an
/// error here; it is reported through the solution flags.
pub fn solve_riccati(
    params: &AffineParams,
    market: &MarketSpec,
    u: &[Complex64],
    v: Complex64,
    w: Complex64,
    t_end: f64,
    tol: f64,
) -> Result<RiccatiSolution> {
    params.check_dims()?;
    market.check_dims(params)?;
    let n = params.dim();
    let m = params.m;
    if u.len() != n {
        return Err(Error::Dimension(format!(
            "transform argument has length {}, expected n = {n}",
            u.len()
        )));
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::InvalidInput(format!("t_end = {t_end} must be finite and nonnegative")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol = {tol} must be positive")));
    }

    let flow = UnconstrainedFlow::new(params, &u[m..]);
    let mut y0 = vec![Complex64::ZERO; m + 1];
    y0[1..].copy_from_slice(&u[..m]);

    let mut b_full = vec![Complex64::ZERO; n];
    let rhs = |t: f64, y: &[Complex64], dydt: &mut [Complex64]| {
        b_full[..m].copy_from_slice(&y[1..]);
        flow.eval_into(t, &mut b_full[m..]);
        let (head, tail) = dydt.split_at_mut(1);
        head[0] = eval_g_into(params, market, &b_full, v, w, tail);
    };

    let opts = OdeOptions { tol, ..OdeOptions::default() };
    let ode = integrate(rhs, &y0, t_end, opts);

    Ok(RiccatiSolution {
        m,
        n,
        exploded: ode.exploded,
        explosion_time: ode.explosion_time,
        ode,
        flow,
        t_end,
    })
}

// ---------------------------------------------------------------------------
// Moments and bonds
// ---------------------------------------------------------------------------

/// Transform argument triple for the power z of the stock.
#[inline]
pub fn moment_argument(market: &MarketSpec, z: Complex64) -> (Vec<Complex64>, Complex64, Complex64) {
    let u = market.epsilon.iter().map(|&e| z * e).collect();
    (u, z - 1.0, z)
}

/// Discounted moment E_x[e^{-R_t} S_t^z 1_{t < tau}] via the exponent
/// system, at the default tolerance.
pub fn discounted_moment(
    params: &AffineParams,
    market: &MarketSpec,
    x: &[f64],
    t: f64,
    z: Complex64,
) -> Result<Complex64> {
    discounted_moment_with_tol(params, market, x, t, z, DEFAULT_TOL)
}

pub fn discounted_moment_with_tol(
    params: &AffineParams,
    market: &MarketSpec,
    x: &[f64],
    t: f64,
    z: Complex64,
    tol: f64,
) -> Result<Complex64> {
    let n = params.dim();
    if x.len() != n {
        return Err(Error::Dimension(format!(
            "state has length {}, expected n = {n}",
            x.len()
        )));
    }
    let (u, v, w) = moment_argument(market, z);
    let sol = solve_riccati(params, market, &u, v, w, t, tol)?;
    let (a, b) = sol.terminal().ok_or(Error::MomentExplosion {
        z,
        t,
        explosion_time: sol.explosion_time.unwrap_or(f64::NAN),
    })?;
    let mut exponent = z * market.e + a;
    for (bk, xk) in b.iter().zip(x) {
        exponent += bk * *xk;
    }
    Ok(exponent.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondKind {
    Government,
    Corporate,
}

/// Zero-coupon bond price. Corporate bonds pay 1 at t only if no default
/// occurred; government bonds ignore the default channel entirely.
pub fn bond_price(
    params: &AffineParams,
    market: &MarketSpec,
    x: &[f64],
    t: f64,
    kind: BondKind,
) -> Result<f64> {
    let h = match kind {
        BondKind::Corporate => discounted_moment(params, market, x, t, Complex64::ZERO)?,
        BondKind::Government => {
            discounted_moment(params, &market.without_default(), x, t, Complex64::ZERO)?
        }
    };
    // Real argument: the whole system stays on the real axis.
    Ok(h.re)
}

// ---------------------------------------------------------------------------
// Martingale check
// ---------------------------------------------------------------------------

/// Result of the sufficient-condition check for the discounted stock price
/// (with default) being a martingale.
#[derive(Clone, Debug)]
pub struct MartingaleCheck {
    pub is_martingale_sufficient: bool,
    /// G0(eps, 0, 1) followed by G_i(eps, 0, 1), i = 1..m.
    pub residuals: Vec<Complex64>,
    pub beta_jj_zero: bool,
}

pub fn check_martingale(params: &AffineParams, market: &MarketSpec) -> Result<MartingaleCheck> {
    params.check_dims()?;
    market.check_dims(params)?;
    let n = params.dim();
    let m = params.m;

    let u: Vec<Complex64> = market.epsilon.iter().map(|&e| Complex64::new(e, 0.0)).collect();
    let (g0, g) = eval_g(params, market, &u, Complex64::ZERO, Complex64::ONE);
    let mut residuals = Vec::with_capacity(m + 1);
    residuals.push(g0);
    residuals.extend(g);

    let mut beta_jj_zero = true;
    for r in m..n {
        for c in m..n {
            if params.beta[(r, c)].abs() > MARTINGALE_TOL {
                beta_jj_zero = false;
            }
        }
    }

    let residuals_ok = residuals.iter().all(|r| r.norm() <= MARTINGALE_TOL);
    Ok(MartingaleCheck {
        is_martingale_sufficient: residuals_ok && beta_jj_zero,
        residuals,
        beta_jj_zero,
    })
}

// ---------------------------------------------------------------------------
// Real-moment domain probe
// ---------------------------------------------------------------------------

/// Finiteness scan of the real moment domain at a fixed horizon.
#[derive(Clone, Debug)]
pub struct DomainProbe {
    pub t: f64,
    pub powers: Vec<f64>,
    pub finite: Vec<bool>,
    /// Maximal contiguous finite probe interval containing 0.
    pub real_interval: (f64, f64),
}

pub fn probe_domain(
    params: &AffineParams,
    market: &MarketSpec,
    t: f64,
    p_min: f64,
    p_max: f64,
    n_probe: usize,
) -> Result<DomainProbe> {
    if !(p_min < 0.0 && 0.0 < p_max) {
        return Err(Error::InvalidInput(format!(
            "probe range [{p_min}, {p_max}] must straddle 0"
        )));
    }
    if n_probe < 2 {
        return Err(Error::InvalidInput("need at least two probe points".into()));
    }

    let powers: Vec<f64> = (0..n_probe)
        .map(|i| p_min + (p_max - p_min) * i as f64 / (n_probe - 1) as f64)
        .collect();
    let mut finite = Vec::with_capacity(n_probe);
    for &p in &powers {
        let z = Complex64::new(p, 0.0);
        let (u, v, w) = moment_argument(market, z);
        let sol = solve_riccati(params, market, &u, v, w, t, DEFAULT_TOL)?;
        finite.push(!sol.exploded && sol.t_reached() >= t);
    }

    // Contiguous finite run around the probes straddling zero.
    let pivot = powers
        .iter()
        .position(|&p| p >= 0.0)
        .unwrap_or(n_probe - 1)
        .min(n_probe - 1);
    let left_seed = pivot.saturating_sub(1);
    let mut lo = pivot;
    let mut hi = left_seed;
    if finite[left_seed] || finite[pivot] {
        let seed = if finite[left_seed] { left_seed } else { pivot };
        lo = seed;
        hi = seed;
        while lo > 0 && finite[lo - 1] {
            lo -= 1;
        }
        while hi + 1 < n_probe && finite[hi + 1] {
            hi += 1;
        }
    }
    let real_interval = if hi < lo {
        (0.0, 0.0)
    } else {
        (powers[lo], powers[hi])
    };

    Ok(DomainProbe {
        t,
        powers,
        finite,
        real_interval,
    })
}

// ---------------------------------------------------------------------------
// Transform abstraction for the Fourier layer
// ---------------------------------------------------------------------------

/// Exponents of a discounted moment: h(z) = exp(a + <b, x>), with a already
/// containing the z * e contribution so only the state is left open.
#[derive(Clone, Debug)]
pub struct Exponents {
    pub a: Complex64,
    pub b: Vec<Complex64>,
}

impl Exponents {
    #[inline]
    pub fn moment(&self, x: &[f64]) -> Complex64 {
        let mut acc = self.a;
        for (bk, xk) in self.b.iter().zip(x) {
            acc += bk * *xk;
        }
        acc.exp()
    }
}

/// Discounted moment transform of a fixed model, abstracted so closed-form
/// models can stand in for the ODE solver.
pub trait MomentOracle: Sync {
    fn log_spot(&self, x: &[f64]) -> f64;
    /// Exponents of h(z) at maturity t, or a moment-explosion error when z
    /// lies outside the finite domain there.
    fn exponents(&self, t: f64, z: Complex64) -> Result<Exponents>;

    fn moment(&self, t: f64, z: Complex64, x: &[f64]) -> Result<Complex64> {
        Ok(self.exponents(t, z)?.moment(x))
    }
}

/// Oracle backed by the adaptive Riccati integration.
#[derive(Clone, Debug)]
pub struct AffineOracle<'a> {
    pub params: &'a AffineParams,
    pub market: &'a MarketSpec,
    pub tol: f64,
}

impl<'a> AffineOracle<'a> {
    pub fn new(params: &'a AffineParams, market: &'a MarketSpec) -> Self {
        AffineOracle {
            params,
            market,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_tol(params: &'a AffineParams, market: &'a MarketSpec, tol: f64) -> Self {
        AffineOracle { params, market, tol }
    }
}

impl MomentOracle for AffineOracle<'_> {
    fn log_spot(&self, x: &[f64]) -> f64 {
        self.market.log_spot(x)
    }

    fn exponents(&self, t: f64, z: Complex64) -> Result<Exponents> {
        let (u, v, w) = moment_argument(self.market, z);
        let sol = solve_riccati(self.params, self.market, &u, v, w, t, self.tol)?;
        let (a, b) = sol.terminal().ok_or(Error::MomentExplosion {
            z,
            t,
            explosion_time: sol.explosion_time.unwrap_or(f64::NAN),
        })?;
        Ok(Exponents {
            a: z * self.market.e + a,
            b,
        })
    }
}
