//! Sensitivity vectors of priced instruments (state Greeks, jump
//! sensitivities, jump-to-default sensitivity) and the square linear system
//! matching a target claim's sensitivities with a family of hedging
//! instruments.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::affine::{AffineParams, MarketSpec};
use crate::error::{Error, Result};
use crate::fourier::{CallSamples, QuadratureSpec};
use crate::payoff::FittedApprox;
use crate::riccati::{moment_argument, solve_riccati, AffineOracle, Exponents};

/// Pivot ratio below which the hedge matrix is reported singular.
const PIVOT_TOL: f64 = 1e-13;

/// Accepted solve residual: 1e-8 * (1 + max |rhs|).
const RESIDUAL_SCALE: f64 = 1e-8;

/// Sensitivities of one instrument at a given remaining maturity and state:
/// derivatives in each state coordinate, price changes under each possible
/// jump, and the price change on a jump to default.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityVector {
    /// d price / d x_q, q = 1..n.
    pub h: Vec<f64>,
    /// Price at x + y_q minus price at x, one entry per common jump atom.
    pub j_nu: Vec<f64>,
    /// Same for the state-proportional jump measures, grouped by factor.
    pub j_mu: Vec<Vec<f64>>,
    /// Replacement value minus current value when default strikes.
    pub d: f64,
}

impl SensitivityVector {
    /// Total number of risk directions: n + M + sum M_i + 1.
    pub fn len(&self) -> usize {
        self.h.len() + self.j_nu.len() + self.j_mu.iter().map(Vec::len).sum::<usize>() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stacked layout: H, J (common), J (per factor, in order), D.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.h);
        out.extend_from_slice(&self.j_nu);
        for ji in &self.j_mu {
            out.extend_from_slice(ji);
        }
        out.push(self.d);
        out
    }

    pub fn zeros(params: &AffineParams) -> Self {
        SensitivityVector {
            h: vec![0.0; params.dim()],
            j_nu: vec![0.0; params.nu.len()],
            j_mu: (0..params.dim_pos()).map(|i| vec![0.0; params.mu_list(i).len()]).collect(),
            d: 0.0,
        }
    }

    pub fn add_scaled(&mut self, weight: f64, other: &SensitivityVector) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension("sensitivity vector shapes differ".into()));
        }
        for (a, b) in self.h.iter_mut().zip(&other.h) {
            *a += weight * b;
        }
        for (a, b) in self.j_nu.iter_mut().zip(&other.j_nu) {
            *a += weight * b;
        }
        for (ja, jb) in self.j_mu.iter_mut().zip(&other.j_mu) {
            for (a, b) in ja.iter_mut().zip(jb) {
                *a += weight * b;
            }
        }
        self.d += weight * other.d;
        Ok(())
    }

    fn shape(&self) -> (usize, usize, Vec<usize>) {
        (
            self.h.len(),
            self.j_nu.len(),
            self.j_mu.iter().map(Vec::len).collect(),
        )
    }
}

/// Jump-shifted state: x + y componentwise.
fn shifted(x: &[f64], y: &nalgebra::DVector<f64>) -> Vec<f64> {
    x.iter().zip(y.iter()).map(|(a, b)| a + b).collect()
}

fn power_exponents(
    params: &AffineParams,
    market: &MarketSpec,
    t: f64,
    p: f64,
    tol: f64,
) -> Result<Exponents> {
    let (u, v, w) = moment_argument(market, Complex64::new(p, 0.0));
    let sol = solve_riccati(params, market, &u, v, w, t, tol)?;
    let (a, b) = sol.terminal().ok_or(Error::MomentExplosion {
        z: Complex64::new(p, 0.0),
        t,
        explosion_time: sol.explosion_time.unwrap_or(f64::NAN),
    })?;
    Ok(Exponents {
        a: a + Complex64::new(p, 0.0) * market.e,
        b,
    })
}

/// Sensitivities of the power payoff s^p (zero at s = 0, so this covers the
/// stock p = 1 and the zero-recovery corporate bond p = 0). One Riccati
/// solve serves the Greeks and every jump shift, since the exponents do not
/// depend on the state.
pub fn sensitivities_power(
    params: &AffineParams,
    market: &MarketSpec,
    x: &[f64],
    t: f64,
    p: f64,
    tol: f64,
) -> Result<SensitivityVector> {
    params.check_dims()?;
    market.check_dims(params)?;
    if x.len() != params.dim() {
        return Err(Error::Dimension(format!(
            "state has length {}, expected {}",
            x.len(),
            params.dim()
        )));
    }
    let expo = power_exponents(params, market, t, p, tol)?;
    let price = expo.moment(x).re;
    let h = expo.b.iter().map(|bq| (bq * price).re).collect();
    let j_nu = params
        .nu
        .iter()
        .map(|atom| expo.moment(&shifted(x, &atom.point)).re - price)
        .collect();
    let j_mu = (0..params.dim_pos())
        .map(|i| {
            params
                .mu_list(i)
                .iter()
                .map(|atom| expo.moment(&shifted(x, &atom.point)).re - price)
                .collect()
        })
        .collect();
    Ok(SensitivityVector {
        h,
        j_nu,
        j_mu,
        d: -price,
    })
}

/// Sensitivities of the government bond, which ignores the default channel:
/// its jump-to-default sensitivity is exactly zero and its Greeks come from
/// the no-default transform.
pub fn sensitivities_gov_bond(
    params: &AffineParams,
    market: &MarketSpec,
    x: &[f64],
    t: f64,
    tol: f64,
) -> Result<SensitivityVector> {
    let mut sens = sensitivities_power(params, &market.without_default(), x, t, 0.0, tol)?;
    sens.d = 0.0;
    Ok(sens)
}

/// Sensitivities of a call at log strike k, from prebuilt contour samples:
/// Greeks by differentiating under the integral, jump sensitivities by
/// re-pricing at the shifted states, default sensitivity = minus the price.
pub fn sensitivities_call_from_samples(
    params: &AffineParams,
    samples: &CallSamples,
    x: &[f64],
    k: f64,
) -> Result<SensitivityVector> {
    let (price, h) = samples.price_and_gradient(k, x)?;
    let j_nu = params
        .nu
        .iter()
        .map(|atom| Ok(samples.price(k, &shifted(x, &atom.point))? - price))
        .collect::<Result<_>>()?;
    let j_mu = (0..params.dim_pos())
        .map(|i| {
            params
                .mu_list(i)
                .iter()
                .map(|atom| Ok(samples.price(k, &shifted(x, &atom.point))? - price))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    Ok(SensitivityVector {
        h,
        j_nu,
        j_mu,
        d: -price,
    })
}

pub fn sensitivities_call(
    params: &AffineParams,
    market: &MarketSpec,
    x: &[f64],
    t: f64,
    k: f64,
    damping: f64,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<SensitivityVector> {
    params.check_dims()?;
    market.check_dims(params)?;
    let oracle = AffineOracle::with_tol(params, market, tol);
    let samples = CallSamples::build(&oracle, t, x, k, damping, quad)?;
    sensitivities_call_from_samples(params, &samples, x, k)
}

/// Sensitivities of a fitted payoff approximation: the weighted sum of the
/// bond, power, and call leg sensitivities, weighted like the price legs.
pub fn sensitivities_approx(
    params: &AffineParams,
    market: &MarketSpec,
    x: &[f64],
    t: f64,
    fit: &FittedApprox,
    damping: f64,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<SensitivityVector> {
    let mut total = SensitivityVector::zeros(params);
    if fit.basis.include_bond && fit.phi_zero != 0.0 {
        let bond = sensitivities_gov_bond(params, market, x, t, tol)?;
        total.add_scaled(fit.phi_zero, &bond)?;
    }
    for (&w, &p) in fit.power_weights.iter().zip(&fit.basis.powers) {
        if w == 0.0 {
            continue;
        }
        let leg = sensitivities_power(params, market, x, t, p, tol)?;
        total.add_scaled(w, &leg)?;
    }
    if fit.call_weights.iter().any(|&w| w != 0.0) {
        let oracle = AffineOracle::with_tol(params, market, tol);
        let s0 = market.log_spot(x);
        let k_ref = fit
            .basis
            .strikes
            .iter()
            .map(|k| k.ln())
            .max_by(|a, b| (a - s0).abs().total_cmp(&(b - s0).abs()))
            .unwrap();
        let samples = CallSamples::build(&oracle, t, x, k_ref, damping, quad)?;
        for (&w, &strike) in fit.call_weights.iter().zip(&fit.basis.strikes) {
            if w == 0.0 {
                continue;
            }
            let leg = sensitivities_call_from_samples(params, &samples, x, strike.ln())?;
            total.add_scaled(w, &leg)?;
        }
    }
    Ok(total)
}

/// Assembled and solved replication system: one column per instrument, one
/// row per risk direction.
#[derive(Clone, Debug)]
pub struct HedgeSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Instrument quantities replicating the target's sensitivities.
    pub theta: DVector<f64>,
    /// Infinity-norm condition estimate of the matrix.
    pub condition_estimate: f64,
    /// Infinity norm of rhs - matrix * theta after refinement.
    pub residual: f64,
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Match the target's sensitivities with the given instruments. The system
/// is square: exactly as many instruments as risk directions.
pub fn build_and_solve(
    target: &SensitivityVector,
    instruments: &[SensitivityVector],
) -> Result<HedgeSystem> {
    let dim = target.len();
    if instruments.len() != dim {
        return Err(Error::Dimension(format!(
            "{} instruments for {} risk directions; the system must be square",
            instruments.len(),
            dim
        )));
    }
    let rhs_vec = target.flatten();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (l, inst) in instruments.iter().enumerate() {
        let col = inst.flatten();
        if col.len() != dim {
            return Err(Error::Dimension(format!(
                "instrument {l} has {} risk directions, target has {dim}",
                col.len()
            )));
        }
        matrix.column_mut(l).copy_from_slice(&col);
    }
    let rhs = DVector::from_vec(rhs_vec);

    let lu = matrix.clone().lu();
    let u_diag: Vec<f64> = (0..dim).map(|i| lu.u()[(i, i)].abs()).collect();
    let max_pivot = u_diag.iter().fold(0.0_f64, |a, &b| a.max(b));
    let rank = u_diag.iter().filter(|&&d| d > PIVOT_TOL * max_pivot).count();
    if max_pivot == 0.0 || rank < dim {
        return Err(Error::SingularHedge { rank, dim });
    }

    let mut theta = lu
        .solve(&rhs)
        .ok_or(Error::SingularHedge { rank, dim })?;
    // One step of iterative refinement; the residual bound below is then
    // comfortably met for any system that passed the pivot check.
    let r = &rhs - &matrix * &theta;
    if let Some(correction) = lu.solve(&r) {
        theta += correction;
    }
    let residual = (&rhs - &matrix * &theta).amax();
    let bound = RESIDUAL_SCALE * (1.0 + rhs.amax());
    if !(residual <= bound) {
        return Err(Error::HedgeResidual { residual, bound });
    }

    let condition_estimate = match matrix.clone().try_inverse() {
        Some(inv) => inf_norm(&matrix) * inf_norm(&inv),
        None => f64::INFINITY,
    };

    Ok(HedgeSystem {
        matrix,
        rhs,
        theta,
        condition_estimate,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::JumpAtom;
    use crate::riccati::{discounted_moment, DEFAULT_TOL};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix as M, DVector as V};

    /// Stochastic-vol stock with one common jump (vol up, price down) and
    /// one variance-driven jump, plus affine short rate and intensity off
    /// the variance factor.
    fn jumpy_sv() -> (AffineParams, MarketSpec) {
        let eta = 0.3;
        let rho = -0.5;
        let alpha1 = M::from_row_slice(2, 2, &[eta * eta, rho * eta, rho * eta, 1.0]) * 0.5;
        let params = AffineParams {
            m: 1,
            a: M::zeros(2, 2),
            alpha: vec![alpha1],
            b: V::from_vec(vec![2.0 * 0.09, 0.0]),
            beta: M::from_row_slice(2, 2, &[-2.0, 0.0, -0.5, 0.0]),
            nu: vec![JumpAtom {
                weight: 0.1,
                point: V::from_vec(vec![0.05, -0.1]),
            }],
            mu: vec![vec![JumpAtom {
                weight: 0.3,
                point: V::from_vec(vec![0.02, -0.05]),
            }]],
        };
        let market = MarketSpec {
            e: 0.0,
            epsilon: V::from_vec(vec![0.0, 1.0]),
            d: 0.01,
            delta: V::from_vec(vec![0.1]),
            c: 0.005,
            gamma: V::from_vec(vec![0.05]),
        };
        (params, market)
    }

    #[test]
    fn power_greeks_match_finite_differences() {
        let (params, market) = jumpy_sv();
        let x = [0.09, 0.02];
        let t = 0.8;
        for &p in &[0.0, 0.7, 1.0, 2.0] {
            let sens = sensitivities_power(&params, &market, &x, t, p, DEFAULT_TOL).unwrap();
            let z = Complex64::new(p, 0.0);
            let step = 1e-5;
            for q in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[q] += step;
                xm[q] -= step;
                let fd = (discounted_moment(&params, &market, &xp, t, z).unwrap().re
                    - discounted_moment(&params, &market, &xm, t, z).unwrap().re)
                    / (2.0 * step);
                let scale = fd.abs().max(1e-12);
                assert!(
                    (sens.h[q] - fd).abs() / scale < 1e-5,
                    "p={p} q={q}: {} vs fd {fd}",
                    sens.h[q]
                );
            }
            // Jump entries agree with direct re-pricing.
            let base = discounted_moment(&params, &market, &x, t, z).unwrap().re;
            let shifted_x = [x[0] + 0.05, x[1] - 0.1];
            let re = discounted_moment(&params, &market, &shifted_x, t, z).unwrap().re;
            assert_abs_diff_eq!(sens.j_nu[0], re - base, epsilon = 1e-12);
            assert_abs_diff_eq!(sens.d, -base, epsilon = 1e-14);
        }
    }

    #[test]
    fn government_bond_ignores_default() {
        let (params, market) = jumpy_sv();
        let x = [0.09, 0.02];
        let sens = sensitivities_gov_bond(&params, &market, &x, 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(sens.d, 0.0);
        // Against the no-default transform by finite differences.
        let riskless = market.without_default();
        let step = 1e-5;
        for q in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[q] += step;
            xm[q] -= step;
            let fd = (discounted_moment(&params, &riskless, &xp, 1.0, Complex64::ZERO)
                .unwrap()
                .re
                - discounted_moment(&params, &riskless, &xm, 1.0, Complex64::ZERO)
                    .unwrap()
                    .re)
                / (2.0 * step);
            assert_abs_diff_eq!(sens.h[q], fd, epsilon = 1e-7);
        }
        // The defaultable zero-coupon bond does feel default.
        let corp = sensitivities_power(&params, &market, &x, 1.0, 0.0, DEFAULT_TOL).unwrap();
        assert!(corp.d < 0.0);
    }

    #[test]
    fn call_greeks_match_finite_differences() {
        let (params, market) = jumpy_sv();
        let x = [0.09, 0.02];
        let t = 1.0;
        let k = 0.1;
        let quad = QuadratureSpec::default();
        let sens =
            sensitivities_call(&params, &market, &x, t, k, 1.5, &quad, DEFAULT_TOL).unwrap();
        let oracle = AffineOracle::new(&params, &market);
        let samples = CallSamples::build(&oracle, t, &x, k, 1.5, &quad).unwrap();
        let price = samples.price(k, &x).unwrap();
        assert_abs_diff_eq!(sens.d, -price, epsilon = 1e-15);
        let step = 1e-5;
        for q in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[q] += step;
            xm[q] -= step;
            let fd =
                (samples.price(k, &xp).unwrap() - samples.price(k, &xm).unwrap()) / (2.0 * step);
            let scale = fd.abs().max(1e-10);
            assert!(
                (sens.h[q] - fd).abs() / scale < 1e-4,
                "q={q}: {} vs {fd}",
                sens.h[q]
            );
        }
    }

    #[test]
    fn single_call_approximation_reproduces_call_sensitivities() {
        use crate::payoff::{fit_weights, PayoffBasis};
        let (params, market) = jumpy_sv();
        let x = [0.09, 0.02];
        let quad = QuadratureSpec::default();
        let basis = PayoffBasis::new(true, vec![], vec![1.1], 3.0);
        let fit = fit_weights(
            &|s| (s - 1.1_f64).max(0.0),
            &basis,
            &crate::payoff::WeightDensity::Uniform,
        )
        .unwrap();
        let via_approx =
            sensitivities_approx(&params, &market, &x, 1.0, &fit, 1.5, &quad, DEFAULT_TOL)
                .unwrap();
        let direct = sensitivities_call(
            &params,
            &market,
            &x,
            1.0,
            1.1_f64.ln(),
            1.5,
            &quad,
            DEFAULT_TOL,
        )
        .unwrap();
        for (a, b) in via_approx.flatten().iter().zip(direct.flatten().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn no_jump_model_has_empty_jump_blocks() {
        let eta = 0.3;
        let alpha1 = M::from_row_slice(2, 2, &[eta * eta, 0.0, 0.0, 1.0]) * 0.5;
        let params = AffineParams {
            m: 1,
            a: M::zeros(2, 2),
            alpha: vec![alpha1],
            b: V::from_vec(vec![0.1, 0.0]),
            beta: M::from_row_slice(2, 2, &[-1.0, 0.0, -0.5, 0.0]),
            nu: vec![],
            mu: vec![],
        };
        let market = MarketSpec {
            e: 0.0,
            epsilon: V::from_vec(vec![0.0, 1.0]),
            d: 0.0,
            delta: V::zeros(1),
            c: 0.0,
            gamma: V::zeros(1),
        };
        let sens =
            sensitivities_power(&params, &market, &[0.09, 0.0], 1.0, 1.0, DEFAULT_TOL).unwrap();
        assert!(sens.j_nu.is_empty());
        assert_eq!(sens.j_mu, vec![Vec::<f64>::new()]);
        assert_eq!(sens.len(), 3);
    }

    fn vec_of(h: &[f64], j: &[f64], d: f64) -> SensitivityVector {
        SensitivityVector {
            h: h.to_vec(),
            j_nu: j.to_vec(),
            j_mu: vec![],
            d,
        }
    }

    #[test]
    fn target_equal_to_an_instrument_yields_a_unit_vector() {
        let i1 = vec_of(&[1.0, 0.2], &[0.1], -0.3);
        let i2 = vec_of(&[0.0, 1.5], &[-0.4], 0.0);
        let i3 = vec_of(&[0.3, 0.0], &[1.0], 0.2);
        let i4 = vec_of(&[0.2, 0.1], &[0.0], -1.0);
        let sys =
            build_and_solve(&i2, &[i1.clone(), i2.clone(), i3.clone(), i4.clone()]).unwrap();
        let expected = [0.0, 1.0, 0.0, 0.0];
        for (th, e) in sys.theta.iter().zip(expected) {
            assert_abs_diff_eq!(*th, e, epsilon = 1e-12);
        }
        assert!(sys.residual <= RESIDUAL_SCALE * (1.0 + sys.rhs.amax()));

        // A combination target is recovered with its weights.
        let mut combo = SensitivityVector::zeros(&AffineParams {
            m: 0,
            a: M::zeros(2, 2),
            alpha: vec![],
            b: V::zeros(2),
            beta: M::zeros(2, 2),
            nu: vec![JumpAtom { weight: 1.0, point: V::zeros(2) }],
            mu: vec![],
        });
        combo.h = vec![0.0; 2];
        combo.add_scaled(2.0, &i1).unwrap();
        combo.add_scaled(-0.5, &i3).unwrap();
        let sys = build_and_solve(&combo, &[i1, i2, i3, i4]).unwrap();
        let expected = [2.0, 0.0, -0.5, 0.0];
        for (th, e) in sys.theta.iter().zip(expected) {
            assert_abs_diff_eq!(*th, e, epsilon = 1e-8);
        }
    }

    #[test]
    fn duplicated_instruments_are_reported_singular() {
        let i1 = vec_of(&[1.0], &[], -0.3);
        let i2 = i1.clone();
        let err = build_and_solve(&i1, &[i1.clone(), i2]).unwrap_err();
        match err {
            Error::SingularHedge { rank, dim } => {
                assert_eq!(dim, 2);
                assert_eq!(rank, 1);
            }
            other => panic!("expected singular hedge, got {other}"),
        }
    }

    #[test]
    fn non_square_systems_are_rejected() {
        let i1 = vec_of(&[1.0], &[], -0.3);
        assert!(build_and_solve(&i1, &[i1.clone()]).is_err());
    }
}
