//! Approximation of general European payoffs by a static portfolio of a
//! government bond, power payoffs and calls, fitted by weighted least
//! squares on a grid, plus the capped variance-swap approximation built on
//! the truncated log contract.

use num_complex::Complex64;

use crate::affine::{AffineParams, MarketSpec};
use crate::error::{Error, Result};
use crate::fourier::{CallSamples, QuadratureSpec};
use crate::riccati::{bond_price, discounted_moment_with_tol, AffineOracle, BondKind, DEFAULT_TOL};

/// Relative pivot threshold below which a basis column is declared
/// dependent and dropped from the regression.
const DROP_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Payoff functions
// ---------------------------------------------------------------------------

/// European payoff as a function of the terminal stock level. The stock is
/// absorbed at zero on default, so every payoff is evaluated on [0, inf)
/// and its value at zero matters.
#[derive(Clone, Debug, PartialEq)]
pub enum Payoff {
    Call { strike: f64 },
    Put { strike: f64 },
    /// Pays 1 when the stock finishes strictly above the strike.
    Digital { strike: f64 },
    /// s^p for s > 0, zero at s = 0 (also for p = 0).
    Power { power: f64 },
    /// log(s) floored at a finite level, which is what makes it priceable
    /// when the stock can be absorbed at zero.
    TruncatedLog { floor: f64 },
    /// Linear interpolation through (s, value) knots, constant outside.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl Payoff {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Payoff::Call { strike } => (s - strike).max(0.0),
            Payoff::Put { strike } => (strike - s).max(0.0),
            Payoff::Digital { strike } => {
                if s > *strike {
                    1.0
                } else {
                    0.0
                }
            }
            Payoff::Power { power } => {
                if s > 0.0 {
                    s.powf(*power)
                } else {
                    0.0
                }
            }
            Payoff::TruncatedLog { floor } => {
                if s > 0.0 {
                    s.ln().max(*floor)
                } else {
                    *floor
                }
            }
            Payoff::PiecewiseLinear { knots } => {
                match knots.iter().position(|&(x, _)| x >= s) {
                    Some(0) => knots[0].1,
                    Some(i) => {
                        let (x0, y0) = knots[i - 1];
                        let (x1, y1) = knots[i];
                        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
                    }
                    None => knots.last().map(|&(_, y)| y).unwrap_or(0.0),
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Payoff::Call { strike } | Payoff::Put { strike } | Payoff::Digital { strike } => {
                if !(*strike > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "strike {strike} must be positive"
                    )));
                }
            }
            Payoff::Power { power } => {
                if !power.is_finite() {
                    return Err(Error::InvalidInput("power must be finite".into()));
                }
            }
            Payoff::TruncatedLog { floor } => {
                if !floor.is_finite() {
                    return Err(Error::InvalidInput("log floor must be finite".into()));
                }
            }
            Payoff::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return Err(Error::InvalidInput("no knots given".into()));
                }
                if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::InvalidInput(
                        "knot abscissae must be strictly increasing".into(),
                    ));
                }
                if knots.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(Error::InvalidInput("knots must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Weight density
// ---------------------------------------------------------------------------

/// Nonnegative weight density on [0, s*] steering where the regression
/// tries hardest. Ideally a rough stand-in for the law of the terminal
/// stock level.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightDensity {
    /// Piecewise exponential emphasising the absorbing state at zero and
    /// the region around a unit spot; a sensible default when default risk
    /// is present and S0 is near 1.
    DefaultAware,
    Uniform,
    /// Linear interpolation through (x, density) pairs, constant outside.
    Table(Vec<(f64, f64)>),
}

impl WeightDensity {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            WeightDensity::DefaultAware => {
                if x < 0.5 {
                    (-10.0 * x).exp()
                } else if x <= 1.5 {
                    (-10.0 * (x - 1.0).abs()).exp()
                } else {
                    (-5.0_f64).exp()
                }
            }
            WeightDensity::Uniform => 1.0,
            WeightDensity::Table(pairs) => match pairs.iter().position(|&(px, _)| px >= x) {
                Some(0) => pairs[0].1,
                Some(i) => {
                    let (x0, y0) = pairs[i - 1];
                    let (x1, y1) = pairs[i];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
                None => pairs.last().map(|&(_, y)| y).unwrap_or(0.0),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let WeightDensity::Table(pairs) = self {
            if pairs.is_empty() {
                return Err(Error::InvalidInput("empty density table".into()));
            }
            if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::InvalidInput(
                    "density abscissae must be strictly increasing".into(),
                ));
            }
            if pairs.iter().any(|&(x, y)| !x.is_finite() || !(y >= 0.0)) {
                return Err(Error::InvalidInput(
                    "density values must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Basis and fitting
// ---------------------------------------------------------------------------

/// Replicating basis: an optional bond leg pinned at the payoff's value at
/// zero, power payoffs s^{p_i}, and calls struck at K_j, all regressed on
/// the stock range [0, s*].
#[derive(Clone, Debug)]
pub struct PayoffBasis {
    pub include_bond: bool,
    /// Strictly increasing power exponents.
    pub powers: Vec<f64>,
    /// Strictly increasing strikes in (0, s*]. A strike at s* contributes
    /// nothing on the fitting range and will be dropped as dependent.
    pub strikes: Vec<f64>,
    /// Upper end of the fitting range.
    pub s_star: f64,
    /// Number of grid points on [0, s*], endpoints included.
    pub grid: usize,
}

impl PayoffBasis {
    pub fn new(include_bond: bool, powers: Vec<f64>, strikes: Vec<f64>, s_star: f64) -> Self {
        PayoffBasis {
            include_bond,
            powers,
            strikes,
            s_star,
            grid: 2001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s_star > 0.0) {
            return Err(Error::InvalidInput(format!(
                "s* = {} must be positive",
                self.s_star
            )));
        }
        if self.grid < 2 {
            return Err(Error::InvalidInput("grid needs at least 2 points".into()));
        }
        if self.powers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("powers must be strictly increasing".into()));
        }
        if self.strikes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("strikes must be strictly increasing".into()));
        }
        if let Some(&k) = self.strikes.first() {
            if !(k > 0.0) {
                return Err(Error::InvalidInput(format!("strike {k} must be positive")));
            }
        }
        if let Some(&k) = self.strikes.last() {
            if k > self.s_star {
                return Err(Error::InvalidInput(format!(
                    "strike {k} lies beyond s* = {}",
                    self.s_star
                )));
            }
        }
        if self.powers.is_empty() && self.strikes.is_empty() && !self.include_bond {
            return Err(Error::InvalidInput("empty basis".into()));
        }
        Ok(())
    }

    fn column(&self, idx: usize, s: f64) -> f64 {
        if idx < self.powers.len() {
            Payoff::Power { power: self.powers[idx] }.eval(s)
        } else {
            (s - self.strikes[idx - self.powers.len()]).max(0.0)
        }
    }

    fn column_label(&self, idx: usize) -> String {
        if idx < self.powers.len() {
            format!("power {}", self.powers[idx])
        } else {
            format!("strike {}", self.strikes[idx - self.powers.len()])
        }
    }
}

/// Result of the weighted regression: per-leg weights, the pinned bond
/// value, and diagnostics.
#[derive(Clone, Debug)]
pub struct FittedApprox {
    pub basis: PayoffBasis,
    /// Payoff value at zero, priced exactly as that many government bonds
    /// when `include_bond` is set.
    pub phi_zero: f64,
    pub power_weights: Vec<f64>,
    pub call_weights: Vec<f64>,
    /// Weighted RMS fitting error over the grid.
    pub residual: f64,
    /// Labels of columns dropped as linearly dependent.
    pub dropped: Vec<String>,
}

impl FittedApprox {
    /// Value of the fitted portfolio payoff at stock level s.
    pub fn eval(&self, s: f64) -> f64 {
        let mut acc = if self.basis.include_bond { self.phi_zero } else { 0.0 };
        for (v, p) in self.power_weights.iter().zip(&self.basis.powers) {
            acc += v * Payoff::Power { power: *p }.eval(s);
        }
        for (w, k) in self.call_weights.iter().zip(&self.basis.strikes) {
            acc += w * (s - k).max(0.0);
        }
        acc
    }
}

/// Weighted least-squares fit of `payoff` over [0, s*]. The payoff value at
/// zero is split off as a bond leg (when the basis carries one) and the
/// remainder is regressed on the power and call columns, orthonormalised by
/// modified Gram-Schmidt in the density-weighted grid inner product.
pub fn fit_weights(
    payoff: &dyn Fn(f64) -> f64,
    basis: &PayoffBasis,
    rho: &WeightDensity,
) -> Result<FittedApprox> {
    basis.validate()?;
    rho.validate()?;

    let n = basis.grid;
    let h = basis.s_star / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|j| h * j as f64).collect();
    // Trapezoid masses times the density: the discrete inner product.
    let mass: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let trap = if j == 0 || j == n - 1 { 0.5 * h } else { h };
            trap * rho.eval(s)
        })
        .collect();
    let dot = |f: &[f64], g: &[f64]| -> f64 {
        f.iter().zip(g).zip(&mass).map(|((a, b), w)| w * a * b).sum()
    };

    let phi_zero = payoff(0.0);
    let shift = if basis.include_bond { phi_zero } else { 0.0 };
    let target: Vec<f64> = grid.iter().map(|&s| payoff(s) - shift).collect();

    let ncols = basis.powers.len() + basis.strikes.len();
    let cols: Vec<Vec<f64>> = (0..ncols)
        .map(|i| grid.iter().map(|&s| basis.column(i, s)).collect())
        .collect();

    // Modified Gram-Schmidt with one reorthogonalisation pass; adjacent
    // power exponents make the raw columns nearly collinear.
    let mut q_cols: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut r = vec![vec![0.0_f64; ncols]; ncols];
    let mut dropped = Vec::new();
    let mut max_pivot = 0.0_f64;
    for j in 0..ncols {
        let mut v = cols[j].clone();
        for _pass in 0..2 {
            for (qi, q) in q_cols.iter().enumerate() {
                let proj = dot(q, &v);
                r[qi][j] += proj;
                for (vv, qq) in v.iter_mut().zip(q) {
                    *vv -= proj * qq;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        max_pivot = max_pivot.max(norm);
        if norm <= DROP_TOL * max_pivot {
            dropped.push(basis.column_label(j));
            continue;
        }
        r[q_cols.len()][j] = norm;
        for vv in v.iter_mut() {
            *vv /= norm;
        }
        q_cols.push(v);
        kept.push(j);
    }

    // Coefficients in the orthonormal frame, then back-substitution
    // through R restricted to the kept columns.
    let coeffs: Vec<f64> = q_cols.iter().map(|q| dot(q, &target)).collect();
    let mut kept_weights = vec![0.0_f64; kept.len()];
    for i in (0..kept.len()).rev() {
        let mut acc = coeffs[i];
        for l in i + 1..kept.len() {
            acc -= r[i][kept[l]] * kept_weights[l];
        }
        kept_weights[i] = acc / r[i][kept[i]];
    }
    let mut weights = vec![0.0_f64; ncols];
    for (i, &j) in kept.iter().enumerate() {
        weights[j] = kept_weights[i];
    }

    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidInput("non-finite regression weights".into()));
    }

    let fitted: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(j, _)| {
            q_cols.iter().zip(&coeffs).map(|(q, c)| c * q[j]).sum::<f64>()
        })
        .collect();
    let total_mass: f64 = mass.iter().sum();
    let sq_err: f64 = target
        .iter()
        .zip(&fitted)
        .zip(&mass)
        .map(|((t, f), w)| w * (t - f) * (t - f))
        .sum();
    let residual = (sq_err / total_mass).sqrt();

    let (power_weights, call_weights) = weights.split_at(basis.powers.len());
    Ok(FittedApprox {
        basis: basis.clone(),
        phi_zero,
        power_weights: power_weights.to_vec(),
        call_weights: call_weights.to_vec(),
        residual,
        dropped,
    })
}

// ---------------------------------------------------------------------------
// Pricing the fitted portfolio
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ApproxQuote {
    pub price: f64,
    /// Government bond price backing the pinned payoff-at-zero leg.
    pub bond_leg: f64,
    /// Unit prices of the power legs, aligned with the basis powers.
    pub power_legs: Vec<f64>,
    /// Unit prices of the call legs, aligned with the basis strikes.
    pub call_legs: Vec<f64>,
    pub damping: f64,
}

/// Price the fitted portfolio: payoff-at-zero many government bonds, the
/// power legs via the discounted moments, and the call legs from a shared
/// Fourier contour at the given damping.
pub fn approx_price(
    params: &AffineParams,
    market: &MarketSpec,
    x: &[f64],
    t: f64,
    fit: &FittedApprox,
    damping: f64,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<ApproxQuote> {
    let bond_leg = bond_price(params, market, x, t, BondKind::Government)?;

    let mut power_legs = Vec::with_capacity(fit.basis.powers.len());
    for &p in &fit.basis.powers {
        let leg = discounted_moment_with_tol(params, market, x, t, Complex64::new(p, 0.0), tol)
            .map_err(|e| match e {
                Error::MomentExplosion { explosion_time, .. } => Error::InvalidInput(format!(
                    "power leg p = {p} is infeasible at t = {t}: moment explodes at t* = {explosion_time:.6}"
                )),
                other => other,
            })?;
        power_legs.push(leg.re);
    }

    let mut call_legs = vec![0.0; fit.basis.strikes.len()];
    if !fit.basis.strikes.is_empty() {
        let oracle = AffineOracle::with_tol(params, market, tol);
        let s0 = market.log_spot(x);
        let ks: Vec<f64> = fit.basis.strikes.iter().map(|k| k.ln()).collect();
        // Build the contour at the farthest strike so its resolution covers
        // every leg.
        let k_ref = ks
            .iter()
            .copied()
            .max_by(|a, b| (a - s0).abs().total_cmp(&(b - s0).abs()))
            .unwrap();
        let samples = CallSamples::build(&oracle, t, x, k_ref, damping, quad)?;
        call_legs = samples.price_many(&ks, x)?;
    }

    let mut price = if fit.basis.include_bond { fit.phi_zero * bond_leg } else { 0.0 };
    for (w, leg) in fit.power_weights.iter().zip(&power_legs) {
        price += w * leg;
    }
    for (w, leg) in fit.call_weights.iter().zip(&call_legs) {
        price += w * leg;
    }

    Ok(ApproxQuote {
        price,
        bond_leg,
        power_legs,
        call_legs,
        damping,
    })
}

// ---------------------------------------------------------------------------
// Variance swap
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct VarianceSwapQuote {
    /// Approximate fair value of the capped variance swap payoff.
    pub price: f64,
    /// Truncation level applied to the terminal log stock.
    pub k_trunc: f64,
    /// Weighted RMS error of the truncated-log fit backing the quote.
    pub fit_residual: f64,
    /// Forward expectation of the truncated log used in the quote.
    pub expected_trunc_log: f64,
    /// Set when the model violates the constant-intensity assumption the
    /// approximation relies on.
    pub warning: Option<String>,
}

/// Approximate price of a capped variance swap on a futures contract with
/// realized-variance strike `strike_var` and payoff cap `cap` (i.e. the
/// holder receives min(realized variance - strike, cap)).
///
/// The chain of approximations: continuous monitoring of the realized
/// variance, the cap standing in for the default scenario, the log contract
/// replication of integrated variance, and a truncation of the log at
/// k = log F0 - t (cap + strike)/2. The result prices the truncated log
/// with [`fit_weights`] + [`approx_price`] and converts to a forward
/// expectation by dividing out the government bond; it is an approximation,
/// not an exact price, and it assumes a constant default intensity.
#[allow(clippy::too_many_arguments)]
pub fn variance_swap_price(
    params: &AffineParams,
    market: &MarketSpec,
    x: &[f64],
    t: f64,
    f0: f64,
    strike_var: f64,
    cap: f64,
    rho: &WeightDensity,
    basis: Option<PayoffBasis>,
    damping: f64,
    quad: &QuadratureSpec,
) -> Result<VarianceSwapQuote> {
    if !(f0 > 0.0) {
        return Err(Error::InvalidInput(format!("futures level {f0} must be positive")));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("maturity {t} must be positive")));
    }
    if !(strike_var > 0.0 && cap > strike_var) {
        return Err(Error::InvalidInput(format!(
            "need cap > strike > 0, got strike {strike_var} and cap {cap}"
        )));
    }

    let k_trunc = f0.ln() - t * (cap + strike_var) / 2.0;
    let basis = basis.unwrap_or_else(|| default_trunc_log_basis(f0));
    let payoff = Payoff::TruncatedLog { floor: k_trunc };
    let fit = fit_weights(&|s| payoff.eval(s), &basis, rho)?;
    let quote = approx_price(params, market, x, t, &fit, damping, quad, DEFAULT_TOL)?;

    let expected_trunc_log = quote.price / quote.bond_leg;
    let price = 2.0 / t * (f0.ln() - expected_trunc_log) - strike_var;

    let warning = if market.gamma.iter().any(|&g| g != 0.0) {
        Some("approximation bias: stopped-integral term nonzero".into())
    } else {
        None
    };

    Ok(VarianceSwapQuote {
        price,
        k_trunc,
        fit_residual: fit.residual,
        expected_trunc_log,
        warning,
    })
}

/// Bond + 50 powers + 50 calls covering [0, 3 F0], mirroring the mixed
/// basis that fits log-like payoffs well.
fn default_trunc_log_basis(f0: f64) -> PayoffBasis {
    let s_star = 3.0 * f0;
    let powers: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
    let strikes: Vec<f64> = (1..=50).map(|i| s_star * i as f64 / 51.0).collect();
    PayoffBasis::new(true, powers, strikes, s_star)
}
