//! Release gate: one test per acceptance criterion. Each prints an
//! `acceptance NN <name>: PASS|FAIL` line with its runtime so the whole
//! checklist can be read off a single `--nocapture` run.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;

use affine_pricer_core::fourier::{
    call_price, choose_damping, digital_prices, CallSamples, DampingTarget, QuadratureSpec,
};
use affine_pricer_core::hedging::{
    build_and_solve, sensitivities_call_from_samples, sensitivities_power, SensitivityVector,
};
use affine_pricer_core::heston::{
    explosion_time, implied_vol_surface, riccati_closed_form, to_affine, HestonOracle,
};
use affine_pricer_core::mc::{mc_price, simulate, simulate_trajectories, SimConfig};
use affine_pricer_core::models::{heston_default_demo, heston_explosion_demo};
use affine_pricer_core::payoff::{fit_weights, Payoff, PayoffBasis, WeightDensity};
use affine_pricer_core::riccati::{
    check_martingale, discounted_moment, solve_riccati, AffineOracle, MomentOracle, DEFAULT_TOL,
};
use affine_pricer_core::Error;

const BIN: &str = env!("CARGO_BIN_EXE_affine-pricer");

fn conclude(idx: usize, name: &str, started: Instant, budget: f64, outcome: Result<(), String>) {
    let elapsed = started.elapsed().as_secs_f64();
    let ok = outcome.is_ok() && elapsed <= budget;
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("acceptance {idx:02} {name}: {verdict} ({elapsed:.2}s)");
    if let Err(msg) = outcome {
        panic!("acceptance {idx:02} {name}: {msg}");
    }
    assert!(
        elapsed <= budget,
        "acceptance {idx:02} {name}: {elapsed:.2}s exceeds the {budget}s budget"
    );
}

fn fail<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn model_path(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn criterion_01_generic_solver_matches_the_closed_form() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let demo = heston_default_demo();
        let (params, market) = to_affine(&demo).map_err(fail)?;
        let oracle = AffineOracle::new(&params, &market);
        let zs = [
            Complex64::new(0.5, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 1.0),
        ];
        for &z in &zs {
            for &t in &[0.5, 1.0, 2.0] {
                let (a, b1, b2) = riccati_closed_form(&demo, z, t);
                let expo = oracle.exponents(t, z).map_err(fail)?;
                let check = |lhs: Complex64, rhs: Complex64, what: &str| -> Result<(), String> {
                    if (lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()) {
                        Ok(())
                    } else {
                        Err(format!("{what} at z = {z}, t = {t}: {lhs} vs {rhs}"))
                    }
                };
                check(a, expo.a, "A")?;
                check(b1, expo.b[0], "B1")?;
                check(b2, expo.b[1], "B2")?;
            }
        }
        Ok(())
    })();
    conclude(1, "riccati-oracle", started, 1.0, outcome);
}

#[test]
fn criterion_02_explosion_times_track_ode_blowup() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let demo = heston_explosion_demo();
        let (params, market) = to_affine(&demo).map_err(fail)?;
        if !explosion_time(&demo, 0.0).is_infinite() || !explosion_time(&demo, 1.0).is_infinite()
        {
            return Err("t*(0) and t*(1) must be infinite".into());
        }
        let grid: Vec<f64> = (0..=40).map(|i| -10.0 + 0.5 * i as f64).collect();
        let mut curve = Vec::with_capacity(grid.len());
        for &pw in &grid {
            let t_star = explosion_time(&demo, pw);
            let z = Complex64::new(pw, 0.0);
            let u = vec![Complex64::ZERO, Complex64::ZERO, z];
            if t_star.is_finite() {
                let sol =
                    solve_riccati(&params, &market, &u, z - 1.0, z, 1.2 * t_star, DEFAULT_TOL)
                        .map_err(fail)?;
                let detected = sol
                    .explosion_time
                    .ok_or_else(|| format!("no ODE blow-up by 1.2 t* at p = {pw}"))?;
                if (detected - t_star).abs() > 0.01 * t_star {
                    return Err(format!("p = {pw}: closed form {t_star} vs ode {detected}"));
                }
            } else {
                let sol = solve_riccati(&params, &market, &u, z - 1.0, z, 50.0, DEFAULT_TOL)
                    .map_err(fail)?;
                if sol.exploded {
                    return Err(format!(
                        "p = {pw}: finite ODE blow-up {:?} against an infinite closed form",
                        sol.explosion_time
                    ));
                }
            }
            curve.push((pw, t_star));
        }
        // Both finite branches fall away monotonically toward zero.
        let right: Vec<f64> = curve
            .iter()
            .filter(|(p, _)| *p >= 1.5)
            .map(|&(_, t)| t)
            .collect();
        let left: Vec<f64> = curve
            .iter()
            .filter(|(p, _)| *p <= -0.5)
            .map(|&(_, t)| t)
            .collect();
        if right.iter().chain(&left).any(|t| !t.is_finite()) {
            return Err("the explosion curve must be finite away from [0, 1]".into());
        }
        if right.windows(2).any(|w| w[1] >= w[0]) {
            return Err("t* must decrease for large positive powers".into());
        }
        if left.windows(2).any(|w| w[1] <= w[0]) {
            return Err("t* must decrease for large negative powers".into());
        }
        let far_right = right.last().copied().unwrap_or(f64::NAN);
        let far_left = left.first().copied().unwrap_or(f64::NAN);
        if far_right > 5.0 || far_left > 5.0 {
            return Err(format!(
                "t*(+-10) should approach zero, got {far_right} and {far_left}"
            ));
        }
        Ok(())
    })();
    conclude(2, "explosion-curve", started, 30.0, outcome);
}

#[test]
fn criterion_03_discounted_stock_prices_at_spot() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let demo = heston_default_demo();
        let (params, market) = to_affine(&demo).map_err(fail)?;
        let check = check_martingale(&params, &market).map_err(fail)?;
        if !check.is_martingale_sufficient {
            return Err("drift condition does not hold on the demo model".into());
        }
        let x0 = demo.x0.to_vec();
        let spot = market.log_spot(&x0).exp();
        for &t in &[0.5, 1.0, 2.0, 5.0, 10.0] {
            let h = discounted_moment(&params, &market, &x0, t, Complex64::new(1.0, 0.0))
                .map_err(fail)?;
            if (h.re - spot).abs() / spot >= 1e-7 || h.im.abs() >= 1e-9 {
                return Err(format!("h(1) = {h} at t = {t} against spot {spot}"));
            }
        }
        Ok(())
    })();
    conclude(3, "martingale", started, 1.0, outcome);
}

#[test]
fn criterion_04_transform_prices_sit_inside_the_mc_band() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let demo = heston_default_demo();
        let (params, market) = to_affine(&demo).map_err(fail)?;
        let x0 = demo.x0.to_vec();
        let oracle = AffineOracle::new(&params, &market);
        let spec = QuadratureSpec::default();
        for (ti, &t) in [0.5, 1.0].iter().enumerate() {
            let config = SimConfig {
                n_paths: 100_000,
                n_steps: 500,
                t_end: t,
                seed: 7_041 + ti as u64,
            };
            let sim = simulate(&params, &market, &x0, &config).map_err(fail)?;
            let p = choose_damping(&oracle, t, &x0, DampingTarget::Digital).map_err(fail)?;
            for &strike in &[0.8_f64, 1.0, 1.2] {
                let quote =
                    digital_prices(&oracle, t, &x0, strike.ln(), p, p, &spec).map_err(fail)?;
                let legs: [(&str, f64, Box<dyn Fn(f64) -> f64>); 3] = [
                    ("call", quote.call, Box::new(move |s| (s - strike).max(0.0))),
                    ("binary", quote.binary, Box::new(move |s| f64::from(s > strike))),
                    (
                        "asset-or-nothing",
                        quote.asset_or_nothing,
                        Box::new(move |s| if s > strike { s } else { 0.0 }),
                    ),
                ];
                for (name, fourier, payoff) in legs {
                    let (mc, se) = mc_price(&sim.samples, payoff).map_err(fail)?;
                    if (fourier - mc).abs() > 3.0 * se {
                        return Err(format!(
                            "{name} at K = {strike}, t = {t}: transform {fourier} vs mc {mc} \
                             (se {se})"
                        ));
                    }
                }
            }
        }
        Ok(())
    })();
    conclude(4, "fourier-vs-mc", started, 120.0, outcome);
}

#[test]
fn criterion_05_digital_legs_obey_parity() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let demo = heston_default_demo();
        let (params, market) = to_affine(&demo).map_err(fail)?;
        let x0 = demo.x0.to_vec();
        let oracle = AffineOracle::new(&params, &market);
        let spec = QuadratureSpec::default();
        for &t in &[0.5, 1.0] {
            let p = choose_damping(&oracle, t, &x0, DampingTarget::Digital).map_err(fail)?;
            for &strike in &[0.8_f64, 1.0, 1.2] {
                let q =
                    digital_prices(&oracle, t, &x0, strike.ln(), p, p, &spec).map_err(fail)?;
                let gap = (q.asset_or_nothing - strike * q.binary - q.call).abs();
                if gap >= 1e-6 {
                    return Err(format!("parity gap {gap} at K = {strike}, t = {t}"));
                }
            }
        }
        Ok(())
    })();
    conclude(5, "digital-parity", started, 5.0, outcome);
}

#[test]
fn criterion_06_price_is_invariant_to_the_damping() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let demo = heston_default_demo();
        let (params, market) = to_affine(&demo).map_err(fail)?;
        let x0 = demo.x0.to_vec();
        let oracle = AffineOracle::new(&params, &market);
        let spec = QuadratureSpec::default();
        for &t in &[0.5, 1.0] {
            for &strike in &[0.8_f64, 1.0, 1.2] {
                let k = strike.ln();
                let lo = call_price(&oracle, t, &x0, k, 1.5, &spec).map_err(fail)?;
                let hi = call_price(&oracle, t, &x0, k, 3.0, &spec).map_err(fail)?;
                if (lo - hi).abs() >= 1e-6 {
                    return Err(format!(
                        "dampings 1.5 and 3 disagree at K = {strike}, t = {t}: {lo} vs {hi}"
                    ));
                }
            }
        }
        Ok(())
    })();
    conclude(6, "damping-invariance", started, 5.0, outcome);
}

#[test]
fn criterion_07_richer_bases_fit_the_truncated_log_better() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let rho = WeightDensity::DefaultAware;
        let target = Payoff::TruncatedLog { floor: -1.0 };
        let payoff = |s: f64| target.eval(s);
        let powers_fine: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64).collect();
        let strikes_fine: Vec<f64> = (1..=100).map(|i| 0.03 * i as f64).collect();
        let powers_half: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
        let strikes_half: Vec<f64> = (1..=50).map(|i| 0.06 * i as f64).collect();
        let bases = [
            PayoffBasis::new(true, powers_fine, vec![], 3.0),
            PayoffBasis::new(true, vec![], strikes_fine, 3.0),
            PayoffBasis::new(true, powers_half, strikes_half, 3.0),
        ];
        let errs: Vec<f64> = bases
            .iter()
            .map(|basis| fit_weights(&payoff, basis, &rho).map(|fit| fit.residual))
            .collect::<Result<_, _>>()
            .map_err(fail)?;
        if !(errs[1] < errs[0]) || !(errs[2] < errs[0]) {
            return Err(format!(
                "residuals {errs:?}: the call and mixed bases must beat powers alone"
            ));
        }

        // Targets already inside the span reproduce to numerical noise.
        let in_span_powers = |s: f64| 2.0 - 3.0 * s.powf(0.5) + 0.7 * s.powf(2.5);
        let fit = fit_weights(&in_span_powers, &bases[0], &rho).map_err(fail)?;
        if fit.residual >= 1e-9 {
            return Err(format!("power span residual {}", fit.residual));
        }
        let in_span_calls =
            |s: f64| 0.4 + 1.2 * (s - 0.6).max(0.0) - 0.3 * (s - 1.5).max(0.0);
        let fit = fit_weights(&in_span_calls, &bases[1], &rho).map_err(fail)?;
        if fit.residual >= 1e-9 {
            return Err(format!("call span residual {}", fit.residual));
        }
        Ok(())
    })();
    conclude(7, "payoff-basis-fit", started, 10.0, outcome);
}

#[test]
fn criterion_08_closed_form_greeks_match_finite_differences() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let demo = heston_default_demo();
        let (params, market) = to_affine(&demo).map_err(fail)?;
        let x0 = demo.x0.to_vec();
        let t = 1.0;

        for &p in &[0.5, 2.0] {
            let sv =
                sensitivities_power(&params, &market, &x0, t, p, DEFAULT_TOL).map_err(fail)?;
            let z = Complex64::new(p, 0.0);
            for q in 0..3 {
                let step = 1e-5 * (1.0 + x0[q].abs());
                let mut up = x0.clone();
                up[q] += step;
                let mut dn = x0.clone();
                dn[q] -= step;
                let plus = discounted_moment(&params, &market, &up, t, z).map_err(fail)?.re;
                let minus = discounted_moment(&params, &market, &dn, t, z).map_err(fail)?.re;
                let fd = (plus - minus) / (2.0 * step);
                let rel = (fd - sv.h[q]).abs() / sv.h[q].abs().max(1e-10);
                if rel >= 1e-4 {
                    return Err(format!(
                        "power {p} d/dx{q}: closed form {} vs fd {fd}",
                        sv.h[q]
                    ));
                }
            }
        }

        let oracle = AffineOracle::new(&params, &market);
        let spec = QuadratureSpec::default();
        for &strike in &[1.0_f64, 1.2] {
            let k = strike.ln();
            let samples = CallSamples::build(&oracle, t, &x0, k, 2.0, &spec).map_err(fail)?;
            let sv = sensitivities_call_from_samples(&params, &samples, &x0, k).map_err(fail)?;
            for q in 0..3 {
                let step = 1e-5 * (1.0 + x0[q].abs());
                let mut up = x0.clone();
                up[q] += step;
                let mut dn = x0.clone();
                dn[q] -= step;
                let plus = samples.price(k, &up).map_err(fail)?;
                let minus = samples.price(k, &dn).map_err(fail)?;
                let fd = (plus - minus) / (2.0 * step);
                let rel = (fd - sv.h[q]).abs() / sv.h[q].abs().max(1e-10);
                if rel >= 1e-4 {
                    return Err(format!(
                        "call K = {strike} d/dx{q}: closed form {} vs fd {fd}",
                        sv.h[q]
                    ));
                }
            }
        }
        Ok(())
    })();
    conclude(8, "greeks", started, 10.0, outcome);
}

fn exact_hedge_cases() -> Result<(), String> {
    let unit = |q: usize| {
        let mut h = vec![0.0; 3];
        let mut d = 0.0;
        if q < 3 {
            h[q] = 1.0;
        } else {
            d = 1.0;
        }
        SensitivityVector {
            h,
            j_nu: vec![],
            j_mu: vec![],
            d,
        }
    };
    let instruments: Vec<SensitivityVector> = (0..4).map(unit).collect();
    let target = SensitivityVector {
        h: vec![0.3, -1.2, 2.0],
        j_nu: vec![],
        j_mu: vec![],
        d: 0.7,
    };
    let sys = build_and_solve(&target, &instruments).map_err(fail)?;
    let want = [0.3, -1.2, 2.0, 0.7];
    for (got, want) in sys.theta.iter().zip(want) {
        if *got != want {
            return Err(format!("unit-vector solve not exact: {got} vs {want}"));
        }
    }
    if sys.residual != 0.0 {
        return Err(format!("unit-vector residual {} should vanish", sys.residual));
    }

    let duplicated = vec![unit(0), unit(0), unit(1), unit(3)];
    match build_and_solve(&target, &duplicated) {
        Err(Error::SingularHedge { .. }) => Ok(()),
        Err(other) => Err(format!("expected a singular-hedge error, got: {other}")),
        Ok(_) => Err("a duplicated instrument must make the system singular".into()),
    }
}

#[test]
fn criterion_09_daily_rebalancing_flattens_the_pnl() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        exact_hedge_cases()?;

        let demo = heston_default_demo();
        let (params, market) = to_affine(&demo).map_err(fail)?;
        let x0 = demo.x0.to_vec();
        let t_end = 1.0;
        let n_steps = 250usize;
        let dt = t_end / n_steps as f64;
        let config = SimConfig {
            n_paths: 1_000,
            n_steps,
            t_end,
            seed: 90_210,
        };
        let paths = simulate_trajectories(&params, &market, &x0, &config)
            .map_err(fail)?
            .paths;

        let oracle = HestonOracle::new(&demo).map_err(fail)?;
        let spec = QuadratureSpec::default();
        let riskless = demo.without_default();
        let strike_target = 1.0_f64;
        let strike_inst = 1.2_f64;

        // Trade at every grid point with at least five steps to expiry, then
        // hold the last book into settlement.
        struct Mark {
            target: CallSamples,
            call: CallSamples,
            gov: (f64, f64, f64),
            corp: (f64, f64, f64),
        }
        let marks: Vec<usize> = (0..=n_steps - 5).collect();
        let mut data = Vec::with_capacity(marks.len());
        for &i in &marks {
            let tau = t_end - i as f64 * dt;
            let p = choose_damping(&oracle, tau, &x0, DampingTarget::Call).map_err(fail)?;
            let target = CallSamples::build(&oracle, tau, &x0, strike_target.ln(), p, &spec)
                .map_err(fail)?;
            let call = CallSamples::build(&oracle, tau, &x0, strike_inst.ln(), p, &spec)
                .map_err(fail)?;
            let (ag, bg1, bg2) = riccati_closed_form(&riskless, Complex64::ZERO, tau);
            let (ac, bc1, bc2) = riccati_closed_form(&demo, Complex64::ZERO, tau);
            data.push(Mark {
                target,
                call,
                gov: (ag.re, bg1.re, bg2.re),
                corp: (ac.re, bc1.re, bc2.re),
            });
        }

        let price0 = data[0].target.price(0.0, &x0).map_err(fail)?;
        let empty_mu = || vec![vec![], vec![]];

        let mut hedged = Vec::with_capacity(paths.len());
        let mut unhedged = Vec::with_capacity(paths.len());
        for path in &paths {
            // All accounting in time-zero money-market units, so holding cash
            // between trades adds no drift.
            let mut value = price0;
            let mut holdings: Option<[f64; 4]> = None;
            let mut held_prices = [0.0_f64; 4];
            for (mark, &i) in data.iter().zip(&marks) {
                let alive = path.default_step.map_or(true, |d| i < d);
                let x = &path.states[i];
                let disc = (-path.r_integral[i]).exp();
                let carry = path.r_integral[i] + path.lambda_integral[i];

                let stock_abs = path.stock(&market, i);
                let gov_abs = (mark.gov.0 + mark.gov.1 * x[0] + mark.gov.2 * x[1]).exp();
                let prices;
                let book;
                if alive {
                    let grow = carry.exp();
                    let corp_abs =
                        (mark.corp.0 + mark.corp.1 * x[0] + mark.corp.2 * x[1]).exp();
                    let (raw_call, call_grad) = mark
                        .call
                        .price_and_gradient(strike_inst.ln() - carry, x)
                        .map_err(fail)?;
                    let call_abs = grow * raw_call;
                    let (raw_tgt, tgt_grad) = mark
                        .target
                        .price_and_gradient(strike_target.ln() - carry, x)
                        .map_err(fail)?;
                    let tgt_abs = grow * raw_tgt;

                    prices = [disc * stock_abs, disc * gov_abs, disc * corp_abs, disc * call_abs];
                    let target_sv = SensitivityVector {
                        h: tgt_grad.iter().map(|g| grow * g).collect(),
                        j_nu: vec![],
                        j_mu: empty_mu(),
                        d: -tgt_abs,
                    };
                    let legs = [
                        SensitivityVector {
                            h: vec![0.0, 0.0, stock_abs],
                            j_nu: vec![],
                            j_mu: empty_mu(),
                            d: -stock_abs,
                        },
                        SensitivityVector {
                            h: vec![mark.gov.1 * gov_abs, mark.gov.2 * gov_abs, 0.0],
                            j_nu: vec![],
                            j_mu: empty_mu(),
                            d: 0.0,
                        },
                        SensitivityVector {
                            h: vec![mark.corp.1 * corp_abs, mark.corp.2 * corp_abs, 0.0],
                            j_nu: vec![],
                            j_mu: empty_mu(),
                            d: -corp_abs,
                        },
                        SensitivityVector {
                            h: call_grad.iter().map(|g| grow * g).collect(),
                            j_nu: vec![],
                            j_mu: empty_mu(),
                            d: -call_abs,
                        },
                    ];
                    book = build_and_solve(&target_sv, &legs)
                        .ok()
                        .map(|sys| [sys.theta[0], sys.theta[1], sys.theta[2], sys.theta[3]]);
                } else {
                    prices = [0.0, disc * gov_abs, 0.0, 0.0];
                    book = None;
                }

                if let Some(theta) = holdings {
                    value += theta
                        .iter()
                        .zip(&prices)
                        .zip(&held_prices)
                        .map(|((th, now), before)| th * (now - before))
                        .sum::<f64>();
                }
                held_prices = prices;
                holdings = book;
            }

            let disc_end = (-path.r_integral[n_steps]).exp();
            let stock_end = path.stock(&market, n_steps);
            let settle = [
                disc_end * stock_end,
                disc_end,
                if path.default_step.is_some() { 0.0 } else { disc_end },
                disc_end * (stock_end - strike_inst).max(0.0),
            ];
            if let Some(theta) = holdings {
                value += theta
                    .iter()
                    .zip(&settle)
                    .zip(&held_prices)
                    .map(|((th, now), before)| th * (now - before))
                    .sum::<f64>();
            }
            let payout = disc_end * (stock_end - strike_target).max(0.0);
            hedged.push(value - payout);
            unhedged.push(price0 - payout);
        }

        let sd = |v: &[f64]| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let sd_hedged = sd(&hedged);
        let sd_unhedged = sd(&unhedged);
        let reduction = 1.0 - sd_hedged / sd_unhedged;
        if reduction < 0.8 {
            return Err(format!(
                "pnl std {sd_unhedged:.5} -> {sd_hedged:.5}: only {:.1}% lower",
                100.0 * reduction
            ));
        }
        Ok(())
    })();
    conclude(9, "hedge-replication", started, 120.0, outcome);
}

#[test]
fn criterion_10_default_risk_dominates_the_surface() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let demo = heston_default_demo();
        let strikes = [0.8, 0.9, 1.0, 1.1, 1.2];
        let maturities = [0.5, 1.0, 1.5, 2.0, 2.5];
        let spec = QuadratureSpec::default();
        let risky = implied_vol_surface(&demo, &strikes, &maturities, &spec).map_err(fail)?;
        let flat = implied_vol_surface(&demo.without_default(), &strikes, &maturities, &spec)
            .map_err(fail)?;
        for (r, f) in risky.iter().zip(&flat) {
            let (rv, fv) = match (r.implied_vol, f.implied_vol) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(format!(
                        "missing vol at K = {}, t = {}: {:?} / {:?}",
                        r.strike, r.maturity, r.diagnostic, f.diagnostic
                    ))
                }
            };
            if rv < fv {
                return Err(format!(
                    "vol {rv} under the default-free {fv} at K = {}, t = {}",
                    r.strike, r.maturity
                ));
            }
        }
        Ok(())
    })();
    conclude(10, "default-dominance", started, 60.0, outcome);
}

#[test]
fn criterion_11_fixed_seed_outputs_are_bit_identical() {
    let started = Instant::now();
    let outcome = (|| -> Result<(), String> {
        let dir = tempfile::tempdir().map_err(fail)?;
        let instruments = dir.path().join("instruments.txt");
        std::fs::write(&instruments, "stock\ngov-bond\ncorp-bond\ncall:1.2\n").map_err(fail)?;
        let heston = model_path("heston-default.toml");
        let explosion = model_path("heston-explosion.toml");
        let inst = instruments.to_str().unwrap();
        let runs: Vec<Vec<&str>> = vec![
            vec!["validate", "--model", &heston],
            vec!["moments", "--model", &heston, "--power", "0:2:3", "--maturities", "1"],
            vec![
                "price", "--model", &heston, "--strikes", "0.8:1.2:5", "--maturities", "0.5,1",
            ],
            vec!["digitals", "--model", &heston, "--strikes", "1", "--maturities", "1"],
            vec![
                "approx", "--model", &heston, "--payoff", "truncated-log:-1", "--s-star", "3",
                "--powers", "0.5:2.5:5", "--call-strikes", "0.5:2.5:5",
            ],
            vec![
                "vswap", "--model", &heston, "--maturity", "1", "--strike-var", "0.09", "--cap",
                "0.4",
            ],
            vec![
                "hedge", "--model", &heston, "--target", "call:1.0", "--instruments", inst,
                "--maturity", "1",
            ],
            vec![
                "surface", "--model", &heston, "--strikes", "0.9,1,1.1", "--maturities", "0.5,1",
            ],
            vec!["explosion", "--model", &explosion, "--power", "-2:2:5"],
            vec![
                "simulate", "--model", &heston, "--paths", "500", "--steps", "50", "--t-end",
                "1", "--seed", "11",
            ],
        ];
        for args in &runs {
            let first = Command::new(BIN).args(args).output().map_err(fail)?;
            if !first.status.success() {
                return Err(format!(
                    "{args:?} failed: {}",
                    String::from_utf8_lossy(&first.stderr)
                ));
            }
            let second = Command::new(BIN).args(args).output().map_err(fail)?;
            if first.stdout != second.stdout {
                return Err(format!("{args:?} output is not reproducible"));
            }
        }
        Ok(())
    })();
    conclude(11, "determinism", started, f64::INFINITY, outcome);
}
