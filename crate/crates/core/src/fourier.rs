//! Damped Fourier inversion of the discounted-moment transform: call
//! prices, out-of-the-money time values via the sinh transform, and
//! digital (binary / asset-or-nothing) prices with their residue terms.
//!
//! All integrals run over y in [0, inf) against samples of h(z0 + iy) on a
//! fixed contour. Sampling is the expensive part (one exponent solve per
//! node), so the call machinery keeps the sampled contour around for reuse
//! across strikes, states, and gradients.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::gauss_legendre;
use crate::riccati::{Exponents, MomentOracle};

/// Relative size of the last panel at which the adaptive extension stops.
const TAIL_REL_TOL: f64 = 1e-10;

/// Quadrature results in [NEG_PRICE_FLOOR, 0) clamp to zero; anything more
/// negative is treated as a misconfigured integral.
pub const NEG_PRICE_FLOOR: f64 = -1e-8;

/// Candidate dampings probed by [`choose_damping`].
pub const DAMPING_LADDER: [f64; 6] = [0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadRule {
    /// Uniform rule on [0, y_max]; the origin node is nudged off zero where
    /// several integrands have removable 0/0 points.
    Trapezoid,
    /// Gauss-Legendre panels extended adaptively until the last panel is
    /// negligible or y_max is hit.
    GaussLegendrePanels,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    /// Hard truncation of the half-infinite integral.
    pub y_max: f64,
    /// Points per panel (Gauss-Legendre) or total points (trapezoid).
    pub n_points: usize,
    pub rule: QuadRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            y_max: 4096.0,
            n_points: 32,
            rule: QuadRule::GaussLegendrePanels,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_max > 0.0) {
            return Err(Error::InvalidInput(format!("y_max = {} must be positive", self.y_max)));
        }
        if self.n_points < 16 {
            return Err(Error::InvalidInput(format!(
                "n_points = {} must be at least 16",
                self.n_points
            )));
        }
        Ok(())
    }

    /// Panel width shrinks with maturity (the transform decays on the scale
    /// of 1/t, so short maturities need wider coverage per panel count) and
    /// with the oscillation frequency of the integrand: a panel must not
    /// carry more phase than its point count can resolve.
    fn panel_width(t: f64, freq: f64) -> f64 {
        (20.0 / t.max(0.05)).min(32.0 / freq.max(1.0))
    }
}

/// One contour sample: quadrature node, weight, and the exponents of
/// h(z0 + iy) there.
#[derive(Clone, Debug)]
struct ContourNode<S> {
    y: f64,
    w: f64,
    payload: S,
}

struct SampledContour<S> {
    nodes: Vec<ContourNode<S>>,
    y_max_used: f64,
    tail_rel: f64,
    /// Extrapolated magnitude of the truncated tail (same units as the raw
    /// integral); zero when the adaptive extension converged.
    tail_noise: f64,
}

/// Sample a contour adaptively. `solve` produces the per-node payload
/// (exponent solves), `reference` maps payload to the integrand magnitude
/// used for the stopping rule. `freq` is the dominant oscillation frequency
/// of the integrand in y (roughly |k - log spot|), which bounds the panel
/// width.
fn sample_contour<S>(
    spec: &QuadratureSpec,
    t: f64,
    freq: f64,
    mut solve: impl FnMut(f64) -> Result<S>,
    mut reference: impl FnMut(&S, f64) -> f64,
) -> Result<SampledContour<S>> {
    spec.validate()?;
    let mut nodes = Vec::new();
    let mut total_abs = 0.0_f64;
    let mut last_panel_abs;

    let mut last_width;
    match spec.rule {
        QuadRule::Trapezoid => {
            let n = spec.n_points;
            let h = spec.y_max / (n - 1) as f64;
            last_panel_abs = 0.0;
            last_width = h;
            for j in 0..n {
                // Nudge the origin node off zero: several integrands have
                // removable 0/0 points at y = 0.
                let y = if j == 0 { 1e-12 } else { h * j as f64 };
                let w = if j == 0 || j == n - 1 { 0.5 * h } else { h };
                let payload = solve(y)?;
                let mag = w * reference(&payload, y).abs();
                total_abs += mag;
                last_panel_abs = mag;
                nodes.push(ContourNode { y, w, payload });
            }
        }
        QuadRule::GaussLegendrePanels => {
            let (xi, wi) = gauss_legendre(spec.n_points);
            let width = QuadratureSpec::panel_width(t, freq);
            let mut a = 0.0_f64;
            // Geometric startup: transform denominators put poles within
            // O(damping) of the origin, so the first panels must be narrow;
            // panel width doubles until it reaches the cruising width.
            let mut next_edge = width / 16.0;
            last_panel_abs = f64::INFINITY;
            last_width = width;
            while a < spec.y_max {
                let b = next_edge.min(spec.y_max);
                next_edge = if next_edge < width { 2.0 * next_edge } else { next_edge + width };
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let mut panel_abs = 0.0;
                for (s, ws) in xi.iter().zip(&wi) {
                    let y = mid + half * s;
                    let w = half * ws;
                    let payload = solve(y)?;
                    panel_abs += w * reference(&payload, y).abs();
                    nodes.push(ContourNode { y, w, payload });
                }
                total_abs += panel_abs;
                last_panel_abs = panel_abs;
                last_width = b - a;
                a = b;
                if panel_abs <= TAIL_REL_TOL * total_abs.max(f64::MIN_POSITIVE) {
                    break;
                }
            }
        }
    }

    let y_max_used = nodes.last().map(|n| n.y).unwrap_or(0.0);
    let tail_rel = last_panel_abs / total_abs.max(f64::MIN_POSITIVE);
    // When the extension stopped at the cap rather than by convergence,
    // extrapolate the missing tail assuming a 1/y^2 envelope: the remaining
    // mass is about one last-panel contribution per panel width out to
    // infinity, which telescopes to last_panel * y / width.
    let tail_noise = if tail_rel > TAIL_REL_TOL {
        last_panel_abs * y_max_used / last_width.max(f64::MIN_POSITIVE)
    } else {
        0.0
    };
    Ok(SampledContour {
        nodes,
        y_max_used,
        tail_rel,
        tail_noise,
    })
}

/// Clamp negative quadrature output that the truncation-noise estimate can
/// explain, reject anything worse. `noise` is the caller's price-scale
/// bound on the unconverged tail (zero for converged integrals, where the
/// fixed floor applies alone).
fn finalize_price(value: f64, noise: f64) -> Result<(f64, bool)> {
    let floor = NEG_PRICE_FLOOR.min(-noise);
    if value >= 0.0 {
        Ok((value, false))
    } else if value >= floor {
        Ok((0.0, true))
    } else {
        Err(Error::NegativePrice { value, tol: floor })
    }
}

/// Probe a real transform argument, mapping explosion to damping advice.
fn probe_feasible(oracle: &dyn MomentOracle, t: f64, z: f64, p: f64) -> Result<()> {
    match oracle.exponents(t, Complex64::new(z, 0.0)) {
        Ok(_) => Ok(()),
        Err(Error::MomentExplosion { .. }) => Err(Error::DampingInfeasible { p, t }),
        Err(other) => Err(other),
    }
}

// ---------------------------------------------------------------------------
// Calls
// ---------------------------------------------------------------------------

/// Sampled call transform on the contour z = p + 1 + iy. Holds everything
/// y-dependent, so prices, strike sweeps, and state gradients at the same
/// (t, p) cost only a walk over the nodes.
pub struct CallSamples {
    pub t: f64,
    pub p: f64,
    pub y_max_used: f64,
    pub tail_rel: f64,
    /// Raw-integral-scale bound on the truncated tail (zero if converged),
    /// taken at the build reference.
    tail_noise: f64,
    nodes: Vec<CallNode>,
}

struct CallNode {
    y: f64,
    w: f64,
    expo: Exponents,
    /// 1 / ((p + iy)(p + 1 + iy)), the call transform denominator.
    denom_inv: Complex64,
}

impl CallSamples {
    /// Build the contour, using (k_ref, x_ref) to drive the adaptive tail
    /// criterion. The samples remain valid for other strikes and states at
    /// the same maturity; the tail estimate is exact only at the reference.
    pub fn build(
        oracle: &dyn MomentOracle,
        t: f64,
        x_ref: &[f64],
        k_ref: f64,
        p: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::InvalidInput(format!("call damping p = {p} must be positive")));
        }
        probe_feasible(oracle, t, p + 1.0, p)?;

        let freq = 1.0 + (k_ref - oracle.log_spot(x_ref)).abs();
        let contour = sample_contour(
            spec,
            t,
            freq,
            |y| {
                let expo = oracle.exponents(t, Complex64::new(p + 1.0, y))?;
                let denom_inv = (Complex64::new(p, y) * Complex64::new(p + 1.0, y)).inv();
                Ok((expo, denom_inv))
            },
            |(expo, denom_inv), y| {
                (Complex64::new(0.0, -y * k_ref).exp() * expo.moment(x_ref) * denom_inv).re
            },
        )?;

        Ok(CallSamples {
            t,
            p,
            y_max_used: contour.y_max_used,
            tail_rel: contour.tail_rel,
            tail_noise: contour.tail_noise,
            nodes: contour
                .nodes
                .into_iter()
                .map(|n| CallNode {
                    y: n.y,
                    w: n.w,
                    expo: n.payload.0,
                    denom_inv: n.payload.1,
                })
                .collect(),
        })
    }

    fn integral(&self, k: f64, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for node in &self.nodes {
            let hv = node.expo.moment(x) * node.denom_inv;
            acc += node.w * (Complex64::new(0.0, -node.y * k).exp() * hv).re;
        }
        acc
    }

    fn price_noise(&self, k: f64) -> f64 {
        (-self.p * k).exp() / std::f64::consts::PI * self.tail_noise
    }

    /// Call price at log strike k and state x.
    pub fn price(&self, k: f64, x: &[f64]) -> Result<f64> {
        let raw = (-self.p * k).exp() / std::f64::consts::PI * self.integral(k, x);
        Ok(finalize_price(raw, self.price_noise(k))?.0)
    }

    /// Prices across a strike grid, reusing the state-dependent part of
    /// every node (the batch economics of a transform method without a
    /// fixed strike lattice).
    pub fn price_many(&self, ks: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let hv: Vec<(f64, f64, Complex64)> = self
            .nodes
            .iter()
            .map(|n| (n.y, n.w, n.expo.moment(x) * n.denom_inv))
            .collect();
        ks.iter()
            .map(|&k| {
                let mut acc = 0.0;
                for &(y, w, h) in &hv {
                    acc += w * (Complex64::new(0.0, -y * k).exp() * h).re;
                }
                let raw = (-self.p * k).exp() / std::f64::consts::PI * acc;
                Ok(finalize_price(raw, self.price_noise(k))?.0)
            })
            .collect()
    }

    /// Price and its gradient with respect to the state, by differentiating
    /// the integrand: d/dx_q picks up a factor B_q(y) per node.
    pub fn price_and_gradient(&self, k: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let dim = self.nodes.first().map(|n| n.expo.b.len()).unwrap_or(0);
        let mut acc = 0.0;
        let mut grad = vec![0.0; dim];
        for node in &self.nodes {
            let hv = node.expo.moment(x)
                * node.denom_inv
                * Complex64::new(0.0, -node.y * k).exp()
                * node.w;
            acc += hv.re;
            for (g, bq) in grad.iter_mut().zip(&node.expo.b) {
                *g += (hv * bq).re;
            }
        }
        let scale = (-self.p * k).exp() / std::f64::consts::PI;
        let (price, _) = finalize_price(scale * acc, self.price_noise(k))?;
        for g in grad.iter_mut() {
            *g *= scale;
        }
        Ok((price, grad))
    }
}

/// Call price with diagnostics for reporting.
#[derive(Clone, Copy, Debug)]
pub struct CallQuote {
    pub price: f64,
    pub damping: f64,
    pub y_max: f64,
    pub tail_rel: f64,
    pub clamped: bool,
}

pub fn call_price_detailed(
    oracle: &dyn MomentOracle,
    t: f64,
    x: &[f64],
    k: f64,
    p: f64,
    spec: &QuadratureSpec,
) -> Result<CallQuote> {
    let samples = CallSamples::build(oracle, t, x, k, p, spec)?;
    let raw = (-p * k).exp() / std::f64::consts::PI * samples.integral(k, x);
    let (price, clamped) = finalize_price(raw, samples.price_noise(k))?;
    Ok(CallQuote {
        price,
        damping: p,
        y_max: samples.y_max_used,
        tail_rel: samples.tail_rel,
        clamped,
    })
}

/// Damped-transform call price at log strike k.
pub fn call_price(
    oracle: &dyn MomentOracle,
    t: f64,
    x: &[f64],
    k: f64,
    p: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    Ok(call_price_detailed(oracle, t, x, k, p, spec)?.price)
}

// ---------------------------------------------------------------------------
// Out-of-the-money time value via the sinh transform
// ---------------------------------------------------------------------------

/// Time value of the out-of-the-money option at log strike k: put value
/// (with survival indicator) below the spot, call value above. Avoids the
/// oscillation blow-up of the plain damped method at extreme strikes.
///
/// Singular points: k equal to the log spot (the transformed payoff jumps
/// there) and k = 0 (the sinh damping vanishes); both are rejected.
pub fn otm_price_sinh(
    oracle: &dyn MomentOracle,
    t: f64,
    x: &[f64],
    k: f64,
    p: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("sinh damping p = {p} must be positive")));
    }
    let s0 = oracle.log_spot(x);
    if (k - s0).abs() < 1e-10 {
        return Err(Error::InvalidInput(
            "at-the-money singular point; use call_price".into(),
        ));
    }
    if k.abs() < 1e-12 {
        return Err(Error::InvalidInput(
            "log strike 0 is singular for the sinh transform (sinh(pk) = 0); use call_price"
                .into(),
        ));
    }
    probe_feasible(oracle, t, 1.0 + p, p)?;
    probe_feasible(oracle, t, 1.0 - p, p)?;

    let h0 = oracle.moment(t, Complex64::ZERO, x)?;
    let h1 = oracle.moment(t, Complex64::ONE, x)?;

    // f(yhat) evaluated with h(1 + i*yhat) supplied; the three terms have
    // removable singularities at yhat in {0, i} which never lie on the
    // sampled arguments y -/+ ip for y > 0.
    let f_at = |yhat: Complex64, h_there: Complex64| -> Complex64 {
        let iy = Complex64::I * yhat;
        let one_iy = 1.0 + iy;
        (one_iy * s0).exp() / one_iy * h0 - (iy * s0).exp() / iy * h1 + h_there / (iy * one_iy)
    };

    let contour = sample_contour(
        spec,
        t,
        1.0 + (k - s0).abs(),
        |y| {
            let plus = oracle.exponents(t, Complex64::new(1.0 + p, y))?;
            let minus = oracle.exponents(t, Complex64::new(1.0 - p, y))?;
            Ok((plus, minus))
        },
        |(plus, minus), y| {
            let g_d = 0.5
                * (f_at(Complex64::new(y, -p), plus.moment(x))
                    - f_at(Complex64::new(y, p), minus.moment(x)));
            (Complex64::new(0.0, -y * k).exp() * g_d).re
        },
    )?;

    let mut integral = 0.0;
    for node in &contour.nodes {
        let (plus, minus) = &node.payload;
        let g_d = 0.5
            * (f_at(Complex64::new(node.y, -p), plus.moment(x))
                - f_at(Complex64::new(node.y, p), minus.moment(x)));
        integral += node.w * (Complex64::new(0.0, -node.y * k).exp() * g_d).re;
    }
    let scale = 1.0 / (std::f64::consts::PI * (p * k).sinh());
    let raw = integral * scale;
    Ok(finalize_price(raw, contour.tail_noise * scale.abs())?.0)
}

// ---------------------------------------------------------------------------
// Digitals
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct DigitalQuote {
    /// E[e^{-R_t} S_t 1_{log S_t > k}]
    pub asset_or_nothing: f64,
    /// E[e^{-R_t} 1_{log S_t > k}]
    pub binary: f64,
    /// Call recovered from the same samples (asset-or-nothing leg contour).
    pub call: f64,
}

fn residue_a(p: f64, h1: f64) -> f64 {
    if p < 0.0 {
        h1
    } else if p == 0.0 {
        0.5 * h1
    } else {
        0.0
    }
}

fn residue_c(p: f64, k: f64, h0: f64, h1: f64) -> f64 {
    if p < -1.0 {
        h1 - k.exp() * h0
    } else if p == -1.0 {
        h1 - 0.5 * k.exp() * h0
    } else if p < 0.0 {
        h1
    } else if p == 0.0 {
        0.5 * h1
    } else {
        0.0
    }
}

/// Asset-or-nothing, binary, and call prices at log strike k with dampings
/// p (asset leg and call) and q (binary leg). Negative or zero dampings are
/// allowed; the residue terms switch branch exactly at the poles.
pub fn digital_prices(
    oracle: &dyn MomentOracle,
    t: f64,
    x: &[f64],
    k: f64,
    p: f64,
    q: f64,
    spec: &QuadratureSpec,
) -> Result<DigitalQuote> {
    probe_feasible(oracle, t, p + 1.0, p)?;
    probe_feasible(oracle, t, q, q)?;

    let h0 = oracle.moment(t, Complex64::ZERO, x)?.re;
    let h1 = oracle.moment(t, Complex64::ONE, x)?.re;
    let freq = 1.0 + (k - oracle.log_spot(x)).abs();

    // Asset-or-nothing and call share the contour Re z = p + 1; the
    // stopping rule watches the integrand pair jointly.
    let contour_a = sample_contour(
        spec,
        t,
        freq,
        |y| oracle.exponents(t, Complex64::new(p + 1.0, y)),
        |expo, y| {
            let h = expo.moment(x) * Complex64::new(0.0, -y * k).exp();
            let g_a = h / Complex64::new(p, y);
            let g_c = h * (Complex64::new(p, y) * Complex64::new(p + 1.0, y)).inv();
            g_a.re.abs() + g_c.re.abs()
        },
    )?;
    let (mut int_a, mut int_c) = (0.0, 0.0);
    for node in &contour_a.nodes {
        let h = node.payload.moment(x) * Complex64::new(0.0, -node.y * k).exp();
        int_a += node.w * (h / Complex64::new(p, node.y)).re;
        int_c +=
            node.w * (h * (Complex64::new(p, node.y) * Complex64::new(p + 1.0, node.y)).inv()).re;
    }

    let contour_b = sample_contour(
        spec,
        t,
        freq,
        |y| oracle.exponents(t, Complex64::new(q, y)),
        |expo, y| {
            let h = expo.moment(x) * Complex64::new(0.0, -y * k).exp();
            (h / Complex64::new(q, y)).re.abs()
        },
    )?;
    let mut int_b = 0.0;
    for node in &contour_b.nodes {
        let h = node.payload.moment(x) * Complex64::new(0.0, -node.y * k).exp();
        int_b += node.w * (h / Complex64::new(q, node.y)).re;
    }

    let pi = std::f64::consts::PI;
    let a = residue_a(p, h1) + (-p * k).exp() / pi * int_a;
    let b = residue_a(q, h0) + (-q * k).exp() / pi * int_b;
    let c = residue_c(p, k, h0, h1) + (-p * k).exp() / pi * int_c;

    let noise_pc = (-p * k).exp() / pi * contour_a.tail_noise;
    let noise_b = (-q * k).exp() / pi * contour_b.tail_noise;
    Ok(DigitalQuote {
        asset_or_nothing: finalize_price(a, noise_pc)?.0,
        binary: finalize_price(b, noise_b)?.0,
        call: finalize_price(c, noise_pc)?.0,
    })
}

// ---------------------------------------------------------------------------
// Damping selection
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DampingTarget {
    Call,
    Digital,
}

/// Largest feasible damping from the fixed ladder, probing finiteness of
/// the required moments at maturity t. Deterministic by construction.
pub fn choose_damping(
    oracle: &dyn MomentOracle,
    t: f64,
    _x: &[f64],
    target: DampingTarget,
) -> Result<f64> {
    for &p in DAMPING_LADDER.iter().rev() {
        let feasible = |z: f64| -> Result<bool> {
            match oracle.exponents(t, Complex64::new(z, 0.0)) {
                Ok(_) => Ok(true),
                Err(Error::MomentExplosion { .. }) => Ok(false),
                Err(other) => Err(other),
            }
        };
        let ok = match target {
            DampingTarget::Call => feasible(p + 1.0)?,
            DampingTarget::Digital => feasible(p + 1.0)? && feasible(p)?,
        };
        if ok {
            return Ok(p);
        }
    }
    Err(Error::NoFeasibleDamping { t })
}
