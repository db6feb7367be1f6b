//! Two-factor stochastic volatility model with default: a Heston-type stock
//! with CIR variance, a second CIR factor, and short rate / default
//! intensity affine in both factors. The exponent system reduces to scalar
//! Riccati equations solved in closed form, which makes this model both a
//! fast pricing path and an analytic oracle for the generic ODE solver.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::affine::{AffineParams, MarketSpec};
use crate::error::{Error, Result};
use crate::fourier::{choose_damping, CallSamples, DampingTarget, QuadratureSpec};
use crate::hedging::{build_and_solve, sensitivities_call_from_samples, SensitivityVector};
use crate::riccati::{Exponents, MomentOracle};

/// Relative determinant floor for the four-instrument hedge matrix.
const HEDGE_DET_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct HestonDefaultParams {
    /// Mean reversion speeds of the two variance-type factors.
    pub kappa1: f64,
    pub kappa2: f64,
    /// Mean reversion levels.
    pub theta1: f64,
    pub theta2: f64,
    /// Volatilities of the factors.
    pub eta1: f64,
    pub eta2: f64,
    /// Correlation between the first factor's Brownian motion and the
    /// stock's. The other pairs must be independent.
    pub rho: f64,
    /// Default intensity: c + gamma1 x1 + gamma2 x2.
    pub c: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Short rate: d + delta1 x1 + delta2 x2.
    pub d: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Initial state (x1, x2, x3) with x3 the initial log stock price.
    pub x0: [f64; 3],
}

impl HestonDefaultParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("c", self.c),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("d", self.d),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("x0[0]", self.x0[0]),
            ("x0[1]", self.x0[1]),
        ];
        for (name, value) in nonneg {
            if !(value >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be nonnegative, got {value}"
                )));
            }
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "rho must lie in [-1, 1], got {}",
                self.rho
            )));
        }
        if !self.x0[2].is_finite() {
            return Err(Error::InvalidInput(format!(
                "x0[2] must be finite, got {}",
                self.x0[2]
            )));
        }
        Ok(())
    }

    /// Same dynamics with the default channel switched off.
    pub fn without_default(&self) -> Self {
        HestonDefaultParams {
            c: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            ..self.clone()
        }
    }

    /// Coefficients (a2, u, v) of the scalar equation B' = a2 B^2 + u B + v
    /// for the first factor's exponent at argument z.
    fn factor1_coeffs(&self, z: Complex64) -> (f64, Complex64, Complex64) {
        let u = self.rho * self.eta1 * z - self.kappa1;
        let v = (0.5 * z + self.gamma1 + self.delta1) * (z - 1.0);
        (0.5 * self.eta1 * self.eta1, u, v)
    }

    fn factor2_coeffs(&self, z: Complex64) -> (f64, Complex64, Complex64) {
        let u = Complex64::new(-self.kappa2, 0.0);
        let v = (self.gamma2 + self.delta2) * (z - 1.0);
        (0.5 * self.eta2 * self.eta2, u, v)
    }
}

/// Embed the model in the general affine class: state (x1, x2, x3) on
/// R+^2 x R with the log price as the third coordinate.
pub fn to_affine(p: &HestonDefaultParams) -> Result<(AffineParams, MarketSpec)> {
    p.validate()?;
    let alpha1 = DMatrix::from_row_slice(
        3,
        3,
        &[
            p.eta1 * p.eta1,
            0.0,
            p.rho * p.eta1,
            0.0,
            0.0,
            0.0,
            p.rho * p.eta1,
            0.0,
            1.0,
        ],
    ) * 0.5;
    let alpha2 = DMatrix::from_row_slice(
        3,
        3,
        &[0.0, 0.0, 0.0, 0.0, p.eta2 * p.eta2, 0.0, 0.0, 0.0, 0.0],
    ) * 0.5;
    let beta = DMatrix::from_row_slice(
        3,
        3,
        &[
            -p.kappa1, 0.0, 0.0, //
            0.0, -p.kappa2, 0.0, //
            -0.5, 0.0, 0.0,
        ],
    );
    let params = AffineParams {
        m: 2,
        a: DMatrix::zeros(3, 3),
        alpha: vec![alpha1, alpha2],
        b: DVector::from_vec(vec![p.kappa1 * p.theta1, p.kappa2 * p.theta2, 0.0]),
        beta,
        nu: vec![],
        mu: vec![vec![], vec![]],
    };
    let market = MarketSpec {
        e: 0.0,
        epsilon: DVector::from_vec(vec![0.0, 0.0, 1.0]),
        d: p.d,
        delta: DVector::from_vec(vec![p.delta1, p.delta2]),
        c: p.c,
        gamma: DVector::from_vec(vec![p.gamma1, p.gamma2]),
    };
    Ok((params, market))
}

// ---------------------------------------------------------------------------
// Scalar Riccati in closed form
// ---------------------------------------------------------------------------

/// Signed count of negative-real-axis crossings of s -> 1 - g e^{-Ds} on
/// (0, t], which is the branch correction for the complex logarithm in the
/// integrated Riccati solution. A crossing happens where g e^{-Ds} is real
/// and > 1; an upward crossing (Im D > 0) sends the continuous log one
/// branch down.
fn log_branch_winding(g: Complex64, d: Complex64, t: f64) -> i64 {
    let di = d.im;
    let g_abs = g.norm();
    if di == 0.0 || g_abs <= 1.0 {
        return 0;
    }
    let dr = d.re;
    let phi = g.arg();
    let step = TAU / di.abs();
    let first = if di > 0.0 {
        phi.rem_euclid(TAU) / di
    } else {
        (-phi).rem_euclid(TAU) / di.abs()
    };
    let mut s = if first > 0.0 { first } else { step };
    let delta = if di > 0.0 { -1 } else { 1 };
    let mut wind = 0;
    while s <= t {
        // The modulus decays monotonically, so the first miss ends it.
        if g_abs * (-dr * s).exp() <= 1.0 {
            break;
        }
        wind += delta;
        s += step;
    }
    wind
}

/// Solution of B' = a2 B^2 + u B + v with B(0) = 0, returning B(t) and
/// int_0^t B ds. Evaluates the meromorphic continuation past any pole;
/// callers gate on the explosion time.
fn scalar_riccati(a2: f64, u: Complex64, v: Complex64, t: f64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    if v == Complex64::ZERO || t == 0.0 {
        return (Complex64::ZERO, Complex64::ZERO);
    }
    if a2 == 0.0 {
        let ut = u * t;
        if ut.norm() < 1e-6 {
            let b = v * t * (one + ut / 2.0 + ut * ut / 6.0 + ut * ut * ut / 24.0);
            let ib =
                v * t * t / 2.0 * (one + ut / 3.0 + ut * ut / 12.0 + ut * ut * ut / 60.0);
            return (b, ib);
        }
        let em1 = ut.exp() - 1.0;
        return (v * em1 / u, v * (em1 / u - t) / u);
    }
    let d = (u * u - 4.0 * a2 * v).sqrt();
    let r_minus = (-u - d) / (2.0 * a2);
    let w = d * t;
    let e = (-w).exp();
    if w.norm() < 1e-3 {
        // Near a double root 1 - e^{-w} cancels; expand (1 - e^{-w})/w.
        let p = one - w / 2.0 + w * w / 6.0 - w * w * w / 24.0 + w * w * w * w / 120.0;
        let b = 2.0 * v * t * p / (one + e - u * t * p);
        // (1 - g e^{-w})/(1 - g) collapses to this pole-free form.
        let ratio = one - (u + d) * t * p / 2.0;
        let ib = r_minus * t - ratio.ln() / a2;
        return (b, ib);
    }
    let one_m_e = one - e;
    let b = 2.0 * v * one_m_e / (d * (one + e) - u * one_m_e);
    let g = (u + d) / (u - d);
    let wind = log_branch_winding(g, d, t);
    let log_term = (one - g * e).ln() - (one - g).ln()
        + Complex64::new(0.0, TAU * wind as f64);
    let ib = r_minus * t - log_term / a2;
    (b, ib)
}

/// First blow-up time of B' = a2 B^2 + u B + v, B(0) = 0, for real
/// coefficients; infinity when the solution is global.
fn scalar_explosion(a2: f64, u: f64, v: f64) -> f64 {
    if v <= 0.0 || a2 == 0.0 {
        // Starting between (or below) real equilibria: monotone and bounded,
        // and the linear equation never blows up.
        return f64::INFINITY;
    }
    let disc = u * u - 4.0 * a2 * v;
    if disc < 0.0 {
        // No equilibria: B climbs through +infinity in finite time.
        let w = (-disc).sqrt();
        return 2.0 / w * (FRAC_PI_2 - (u / w).atan());
    }
    if u <= 0.0 {
        // Two positive equilibria above the start: convergence.
        return f64::INFINITY;
    }
    // Two negative equilibria below the start: escape to +infinity.
    let sq = disc.sqrt();
    if sq == 0.0 {
        2.0 / u
    } else {
        2.0 * (sq / u).atanh() / sq
    }
}

/// Largest t with E[exp(-R_t) S_t^p 1_{t<tau}] finite. The two factor
/// exponents solve decoupled scalar equations, so the moment explodes when
/// the first of them does.
pub fn explosion_time(params: &HestonDefaultParams, p: f64) -> f64 {
    let z = Complex64::new(p, 0.0);
    let (a1, u1, v1) = params.factor1_coeffs(z);
    let (a2, u2, v2) = params.factor2_coeffs(z);
    scalar_explosion(a1, u1.re, v1.re).min(scalar_explosion(a2, u2.re, v2.re))
}

/// Exponents (A, B1, B2) of the discounted moment at argument z and
/// maturity t: h(z) = exp(A + B1 x1 + B2 x2 + z x3). At or past the
/// explosion time all three are returned as infinity markers.
pub fn riccati_closed_form(
    params: &HestonDefaultParams,
    z: Complex64,
    t: f64,
) -> (Complex64, Complex64, Complex64) {
    if t >= explosion_time(params, z.re) {
        let inf = Complex64::new(f64::INFINITY, 0.0);
        return (inf, inf, inf);
    }
    let (a21, u1, v1) = params.factor1_coeffs(z);
    let (a22, u2, v2) = params.factor2_coeffs(z);
    let (b1, ib1) = scalar_riccati(a21, u1, v1, t);
    let (b2, ib2) = scalar_riccati(a22, u2, v2, t);
    let a = params.kappa1 * params.theta1 * ib1
        + params.kappa2 * params.theta2 * ib2
        + (params.c + params.d) * (z - 1.0) * t;
    (a, b1, b2)
}

/// Closed-form moment oracle; drop-in replacement for the ODE-backed one.
#[derive(Clone, Debug)]
pub struct HestonOracle {
    params: HestonDefaultParams,
}

impl HestonOracle {
    pub fn new(params: &HestonDefaultParams) -> Result<Self> {
        params.validate()?;
        Ok(HestonOracle {
            params: params.clone(),
        })
    }
}

impl MomentOracle for HestonOracle {
    fn log_spot(&self, x: &[f64]) -> f64 {
        x[2]
    }

    fn exponents(&self, t: f64, z: Complex64) -> Result<Exponents> {
        let (a, b1, b2) = riccati_closed_form(&self.params, z, t);
        if !(a.is_finite() && b1.is_finite() && b2.is_finite()) {
            return Err(Error::MomentExplosion {
                z,
                t,
                explosion_time: explosion_time(&self.params, z.re),
            });
        }
        Ok(Exponents {
            a,
            b: vec![b1, b2, z],
        })
    }
}

// ---------------------------------------------------------------------------
// Implied volatility surface
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceCell {
    pub strike: f64,
    pub maturity: f64,
    pub price: f64,
    /// Continuously compounded government bond yield used as the rate in
    /// the Black-Scholes inversion.
    pub bond_yield: f64,
    /// None when the price sits outside the no-arbitrage bounds; the
    /// diagnostic then says which bound failed.
    pub implied_vol: Option<f64>,
    pub diagnostic: Option<String>,
}

fn gov_bond_price(params: &HestonDefaultParams, t: f64) -> Result<f64> {
    let riskless = params.without_default();
    let (a, b1, b2) = riccati_closed_form(&riskless, Complex64::ZERO, t);
    let log_p = a.re + b1.re * params.x0[0] + b2.re * params.x0[1];
    if !log_p.is_finite() {
        return Err(Error::InvalidInput(format!(
            "government bond price not finite at t = {t}"
        )));
    }
    Ok(log_p.exp())
}

/// Call prices and Black-Scholes implied volatilities on a strike/maturity
/// grid, using the government bond yield at each maturity as the rate.
/// Cells are emitted maturity-major, strike-minor.
pub fn implied_vol_surface(
    params: &HestonDefaultParams,
    strikes: &[f64],
    maturities: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<SurfaceCell>> {
    params.validate()?;
    if strikes.is_empty() || maturities.is_empty() {
        return Err(Error::InvalidInput("empty strike or maturity grid".into()));
    }
    if let Some(&k) = strikes.iter().find(|&&k| !(k > 0.0)) {
        return Err(Error::InvalidInput(format!("strike {k} must be positive")));
    }
    if let Some(&t) = maturities.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "maturity {t} must be positive"
        )));
    }

    let oracle = HestonOracle::new(params)?;
    let x = params.x0;
    let s0 = params.x0[2];
    let spot = s0.exp();
    let log_strikes: Vec<f64> = strikes.iter().map(|k| k.ln()).collect();
    let mut cells = Vec::with_capacity(strikes.len() * maturities.len());
    for &t in maturities {
        let damping = choose_damping(&oracle, t, &x, DampingTarget::Call)?;
        let k_ref = log_strikes
            .iter()
            .copied()
            .max_by(|a, b| (a - s0).abs().total_cmp(&(b - s0).abs()))
            .unwrap();
        let samples = CallSamples::build(&oracle, t, &x, k_ref, damping, quad)?;
        let prices = samples.price_many(&log_strikes, &x)?;
        let p0 = gov_bond_price(params, t)?;
        let bond_yield = -p0.ln() / t;
        for (&strike, &price) in strikes.iter().zip(&prices) {
            let (implied_vol, diagnostic) =
                match crate::bs::implied_vol(price, spot, strike, bond_yield, t) {
                    Ok(vol) => (Some(vol), None),
                    Err(err) => (None, Some(err.to_string())),
                };
            cells.push(SurfaceCell {
                strike,
                maturity: t,
                price,
                bond_yield,
                implied_vol,
                diagnostic,
            });
        }
    }
    Ok(cells)
}

// ---------------------------------------------------------------------------
// Four-instrument hedge
// ---------------------------------------------------------------------------

/// Replicate a target claim's sensitivities by trading the stock, a
/// government bond, a corporate bond, and a call with log strike k, all
/// maturity t. The sensitivity matrix is 4x4 here: three state directions
/// and the jump to default. Returns the holdings in that instrument order.
pub fn hedge_four_instruments(
    params: &HestonDefaultParams,
    t: f64,
    k: f64,
    x: &[f64],
    target: &SensitivityVector,
    quad: &QuadratureSpec,
) -> Result<[f64; 4]> {
    let (affine, _) = to_affine(params)?;
    if x.len() != 3 {
        return Err(Error::Dimension(format!(
            "state has length {}, expected 3",
            x.len()
        )));
    }
    let stock = SensitivityVector {
        h: vec![0.0, 0.0, x[2].exp()],
        j_nu: vec![],
        j_mu: vec![vec![], vec![]],
        d: -x[2].exp(),
    };

    let riskless = params.without_default();
    let (a0, b01, b02) = riccati_closed_form(&riskless, Complex64::ZERO, t);
    let p0 = (a0.re + b01.re * x[0] + b02.re * x[1]).exp();
    let gov = SensitivityVector {
        h: vec![b01.re * p0, b02.re * p0, 0.0],
        j_nu: vec![],
        j_mu: vec![vec![], vec![]],
        d: 0.0,
    };

    let (a_c, b1, b2) = riccati_closed_form(params, Complex64::ZERO, t);
    let p_corp = (a_c.re + b1.re * x[0] + b2.re * x[1]).exp();
    let corp = SensitivityVector {
        h: vec![b1.re * p_corp, b2.re * p_corp, 0.0],
        j_nu: vec![],
        j_mu: vec![vec![], vec![]],
        d: -p_corp,
    };

    let oracle = HestonOracle::new(params)?;
    let damping = choose_damping(&oracle, t, x, DampingTarget::Call)?;
    let samples = CallSamples::build(&oracle, t, x, k, damping, quad)?;
    let call = sensitivities_call_from_samples(&affine, &samples, x, k)?;

    let instruments = [stock, gov, corp, call];
    let mut matrix = DMatrix::zeros(4, 4);
    let mut scale = 1.0;
    for (j, inst) in instruments.iter().enumerate() {
        let col = DVector::from_vec(inst.flatten());
        scale *= col.norm();
        matrix.column_mut(j).copy_from(&col);
    }
    let det = matrix.determinant();
    if !(det.abs() > HEDGE_DET_TOL * scale) {
        return Err(Error::DegenerateHedge { det });
    }

    let system = build_and_solve(target, &instruments)?;
    Ok([
        system.theta[0],
        system.theta[1],
        system.theta[2],
        system.theta[3],
    ])
}
