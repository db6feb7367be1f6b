//! Black-Scholes call pricing and implied-volatility inversion, used to turn
//! model call prices into implied-vol surfaces.

use crate::error::{Error, Result};

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Call price with continuously compounded rate and no dividends. Degenerate
/// vol or maturity collapses to the discounted intrinsic value.
pub fn bs_call(spot: f64, strike: f64, rate: f64, vol: f64, t: f64) -> f64 {
    let df = (-rate * t).exp();
    if vol <= 0.0 || t <= 0.0 || strike <= 0.0 || spot <= 0.0 {
        return (spot - strike * df).max(0.0);
    }
    let sig_rt = vol * t.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * vol * vol) * t) / sig_rt;
    let d2 = d1 - sig_rt;
    spot * norm_cdf(d1) - strike * df * norm_cdf(d2)
}

pub fn bs_vega(spot: f64, strike: f64, rate: f64, vol: f64, t: f64) -> f64 {
    if vol <= 0.0 || t <= 0.0 {
        return 0.0;
    }
    let sig_rt = vol * t.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * vol * vol) * t) / sig_rt;
    spot * norm_pdf(d1) * t.sqrt()
}

pub const IMPLIED_VOL_MIN: f64 = 1e-6;
pub const IMPLIED_VOL_MAX: f64 = 5.0;
const IMPLIED_VOL_TOL: f64 = 1e-8;

/// Invert the call formula for volatility. Brackets on [1e-6, 5] by
/// bisection, then polishes with Newton steps kept inside the bracket.
pub fn implied_vol(price: f64, spot: f64, strike: f64, rate: f64, t: f64) -> Result<f64> {
    if !(spot > 0.0 && strike > 0.0 && t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "implied vol needs positive spot/strike/maturity, got ({spot}, {strike}, {t})"
        )));
    }
    let intrinsic = (spot - strike * (-rate * t).exp()).max(0.0);
    if price < intrinsic - 1e-12 || price > spot + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "price {price} violates no-arbitrage bounds [{intrinsic}, {spot}]"
        )));
    }

    let mut lo = IMPLIED_VOL_MIN;
    let mut hi = IMPLIED_VOL_MAX;
    let f = |v: f64| bs_call(spot, strike, rate, v, t) - price;
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo > 0.0 {
        // Price below what the vol floor produces: effectively zero vol.
        return Ok(lo);
    }
    if f_hi < 0.0 {
        return Err(Error::InvalidInput(format!(
            "price {price} exceeds the value at the {IMPLIED_VOL_MAX} vol cap"
        )));
    }

    let mut v = 0.5 * (lo + hi);
    for _ in 0..40 {
        let fv = f(v);
        if fv.abs() < 1e-14 {
            break;
        }
        if fv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        // Newton where the step stays bracketed, bisection otherwise.
        let vega = bs_vega(spot, strike, rate, v, t);
        let newton = if vega > 1e-12 { v - fv / vega } else { f64::NAN };
        v = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < IMPLIED_VOL_TOL {
            break;
        }
    }
    Ok(v)
}
