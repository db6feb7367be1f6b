//! Command-line front end: binds model files to the pricing, approximation,
//! hedging, surface, explosion, and simulation operations, emitting CSV.

mod output;
mod tokens;

use std::path::PathBuf;
use std::process::ExitCode;

use affine_pricer_core::riccati::moment_argument;
use affine_pricer_core::{
    bond_price, check_martingale, choose_damping, digital_prices, discounted_moment, fit_weights,
    implied_vol, mc_price, sensitivities_call, sensitivities_gov_bond, sensitivities_power,
    simulate, solve_riccati, validate_params, AffineOracle, BondKind, CallSamples, DampingTarget,
    Error, ModelDocument, PayoffBasis, QuadratureSpec, Result, SensitivityVector,
    SimConfig, WeightDensity,
};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use output::{emit, model_hash, num, Csv};
use tokens::{
    parse_density, parse_grid, parse_instrument, parse_instrument_file, parse_payoff, Instrument,
};

const EXIT_NOTES: &str = "\
Exit codes:
  0  success
  1  I/O failure
  2  argument, model-file, or admissibility problem
  3  moment or damping infeasibility (the requested transform does not exist)
  4  singular or degenerate hedge system
  5  numerical quality failure (negative price, residual bound exceeded)";

#[derive(Parser)]
#[command(name = "affine-pricer", version, about = "Derivative, bond, and hedge calculations for affine models", long_about = None, after_help = EXIT_NOTES)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Model file (TOML)
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Output path; - writes to stdout
    #[arg(long, default_value = "-")]
    out: String,
    /// ODE local error tolerance
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check admissibility and the martingale condition
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Discounted moments h(z) for real exponents over maturities
    Moments {
        #[command(flatten)]
        common: Common,
        /// Exponent grid (a:b:n, comma list, or single value)
        #[arg(long, allow_hyphen_values = true)]
        power: String,
        #[arg(long)]
        maturities: String,
    },
    /// Call prices over a strike and maturity grid
    Price {
        #[command(flatten)]
        common: Common,
        /// Strike grid in price units
        #[arg(long)]
        strikes: String,
        #[arg(long)]
        maturities: String,
        /// Damping override; chosen automatically per maturity when absent
        #[arg(long, allow_hyphen_values = true)]
        damping: Option<f64>,
    },
    /// Asset-or-nothing, binary, and call prices over a grid
    Digitals {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strikes: String,
        #[arg(long)]
        maturities: String,
        #[arg(long, allow_hyphen_values = true)]
        damping: Option<f64>,
        /// Damping for the binary leg; defaults to the main damping
        #[arg(long, allow_hyphen_values = true)]
        binary_damping: Option<f64>,
    },
    /// Fit a payoff on a bond/power/call basis; emit weights and residual
    Approx {
        #[command(flatten)]
        common: Common,
        /// Payoff spec: call:K, put:K, digital:K, power:P,
        /// truncated-log:FLOOR, piecewise:FILE
        #[arg(long)]
        payoff: String,
        /// Right end of the fitting interval
        #[arg(long)]
        s_star: f64,
        /// Power exponents for the basis (grid syntax)
        #[arg(long, allow_hyphen_values = true)]
        powers: Option<String>,
        /// Call strikes for the basis (grid syntax)
        #[arg(long)]
        call_strikes: Option<String>,
        /// Drop the bond column from the basis
        #[arg(long)]
        no_bond: bool,
        /// Weight density: default-aware, uniform, or table:FILE
        #[arg(long, default_value = "default-aware")]
        density: String,
    },
    /// Approximate price of a capped variance swap
    Vswap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        maturity: f64,
        /// Realized-variance strike
        #[arg(long)]
        strike_var: f64,
        /// Cap on the payoff
        #[arg(long)]
        cap: f64,
        /// Futures level; defaults to spot divided by the government bond
        #[arg(long)]
        futures: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        damping: Option<f64>,
    },
    /// Solve hedge weights for a target from an instrument list
    Hedge {
        #[command(flatten)]
        common: Common,
        /// Target spec: stock, gov-bond, corp-bond, call:K, power:P
        #[arg(long)]
        target: String,
        /// File with one instrument spec per line
        #[arg(long)]
        instruments: PathBuf,
        #[arg(long)]
        maturity: f64,
        #[arg(long, allow_hyphen_values = true)]
        damping: Option<f64>,
    },
    /// Implied-volatility surface over a strike and maturity grid
    Surface {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strikes: String,
        #[arg(long)]
        maturities: String,
        #[arg(long, allow_hyphen_values = true)]
        damping: Option<f64>,
    },
    /// Moment explosion times by ODE blow-up detection
    Explosion {
        #[command(flatten)]
        common: Common,
        /// Exponent grid
        #[arg(long, allow_hyphen_values = true)]
        power: String,
        /// Horizon beyond which a moment counts as non-exploding
        #[arg(long, default_value_t = 50.0)]
        t_max: f64,
    },
    /// Simulate terminal path samples
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also report the discounted call price at this strike
        #[arg(long)]
        strike: Option<f64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::ModelShape(_) | Error::InvalidInput(_) | Error::Dimension(_) => 2,
        Error::MomentExplosion { .. }
        | Error::DampingInfeasible { .. }
        | Error::NoFeasibleDamping { .. } => 3,
        Error::SingularHedge { .. } | Error::DegenerateHedge { .. } => 4,
        Error::NegativePrice { .. } | Error::HedgeResidual { .. } => 5,
        Error::Io(_) => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::ModelShape(_) => "model-shape",
        Error::InvalidInput(_) => "invalid-input",
        Error::Dimension(_) => "dimension",
        Error::MomentExplosion { .. } => "moment-explosion",
        Error::DampingInfeasible { .. } => "damping-infeasible",
        Error::NoFeasibleDamping { .. } => "no-feasible-damping",
        Error::SingularHedge { .. } => "singular-hedge",
        Error::DegenerateHedge { .. } => "degenerate-hedge",
        Error::NegativePrice { .. } => "negative-price",
        Error::HedgeResidual { .. } => "hedge-residual",
        Error::Io(_) => "io",
    }
}

struct Loaded {
    doc: ModelDocument,
    hash: String,
}

fn load(common: &Common) -> Result<Loaded> {
    let doc = ModelDocument::load(&common.model)?;
    doc.params.check_dims()?;
    doc.market.check_dims(&doc.params)?;
    let hash = model_hash(&doc.to_toml());
    Ok(Loaded { doc, hash })
}

/// Admissibility gate used by every numeric subcommand.
fn require_admissible(doc: &ModelDocument) -> Result<()> {
    let report = validate_params(&doc.params, &doc.market)?;
    if report.is_admissible() {
        Ok(())
    } else {
        let all = report
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::InvalidInput(format!("model not admissible: {all}")))
    }
}

fn csv_for(loaded: &Loaded, common: &Common, columns: &[&str]) -> Csv {
    let mut csv = Csv::new(columns);
    csv.meta("model_sha256", &loaded.hash);
    csv.meta("tool_version", env!("CARGO_PKG_VERSION"));
    csv.meta("tol", common.tol);
    csv
}

fn instrument_sensitivities(
    inst: &Instrument,
    loaded: &Loaded,
    t: f64,
    damping: Option<f64>,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<SensitivityVector> {
    let (params, market, x) = (&loaded.doc.params, &loaded.doc.market, &loaded.doc.x0);
    match inst {
        Instrument::Stock => sensitivities_power(params, market, x, t, 1.0, tol),
        Instrument::GovBond => sensitivities_gov_bond(params, market, x, t, tol),
        Instrument::CorpBond => sensitivities_power(params, market, x, t, 0.0, tol),
        Instrument::Power { power } => sensitivities_power(params, market, x, t, *power, tol),
        Instrument::Call { strike } => {
            if !(*strike > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "call strike {strike} must be positive"
                )));
            }
            let p = match damping {
                Some(p) => p,
                None => {
                    let oracle = AffineOracle::with_tol(params, market, tol);
                    choose_damping(&oracle, t, x, DampingTarget::Call)?
                }
            };
            sensitivities_call(params, market, x, t, strike.ln(), p, quad, tol)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let quad = QuadratureSpec::default();
    match cli.cmd {
        Cmd::Validate { common } => {
            let loaded = load(&common)?;
            let report = validate_params(&loaded.doc.params, &loaded.doc.market)?;
            if !report.is_admissible() {
                let all = report
                    .violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; ");
                return Err(Error::InvalidInput(format!("model not admissible: {all}")));
            }
            let check = check_martingale(&loaded.doc.params, &loaded.doc.market)?;
            let text = format!(
                "OK\nmodel_sha256={}\nmartingale_sufficient={}\n",
                loaded.hash, check.is_martingale_sufficient
            );
            emit(&common.out, &text)
        }
        Cmd::Moments {
            common,
            power,
            maturities,
        } => {
            let loaded = load(&common)?;
            require_admissible(&loaded.doc)?;
            let powers = parse_grid(&power)?;
            let mats = parse_grid(&maturities)?;
            let mut csv = csv_for(&loaded, &common, &["maturity", "power", "re", "im"]);
            for &t in &mats {
                for &p in &powers {
                    let h = discounted_moment(
                        &loaded.doc.params,
                        &loaded.doc.market,
                        &loaded.doc.x0,
                        t,
                        Complex64::new(p, 0.0),
                    )?;
                    csv.row(&[num(t), num(p), num(h.re), num(h.im)]);
                }
            }
            emit(&common.out, &csv.render())
        }
        Cmd::Price {
            common,
            strikes,
            maturities,
            damping,
        } => {
            let loaded = load(&common)?;
            require_admissible(&loaded.doc)?;
            let ks: Vec<f64> = strikes_to_log(&parse_grid(&strikes)?)?;
            let mats = parse_grid(&maturities)?;
            let oracle =
                AffineOracle::with_tol(&loaded.doc.params, &loaded.doc.market, common.tol);
            let mut csv = csv_for(
                &loaded,
                &common,
                &["maturity", "log_strike", "price", "damping", "y_max", "tail_estimate"],
            );
            for &t in &mats {
                let p = match damping {
                    Some(p) => p,
                    None => choose_damping(&oracle, t, &loaded.doc.x0, DampingTarget::Call)?,
                };
                for &k in &ks {
                    let quote = affine_pricer_core::call_price_detailed(
                        &oracle,
                        t,
                        &loaded.doc.x0,
                        k,
                        p,
                        &quad,
                    )?;
                    csv.row(&[
                        num(t),
                        num(k),
                        num(quote.price),
                        num(quote.damping),
                        num(quote.y_max),
                        num(quote.tail_rel),
                    ]);
                }
            }
            emit(&common.out, &csv.render())
        }
        Cmd::Digitals {
            common,
            strikes,
            maturities,
            damping,
            binary_damping,
        } => {
            let loaded = load(&common)?;
            require_admissible(&loaded.doc)?;
            let ks = strikes_to_log(&parse_grid(&strikes)?)?;
            let mats = parse_grid(&maturities)?;
            let oracle =
                AffineOracle::with_tol(&loaded.doc.params, &loaded.doc.market, common.tol);
            let mut csv = csv_for(
                &loaded,
                &common,
                &["maturity", "log_strike", "asset_or_nothing", "binary", "call"],
            );
            for &t in &mats {
                let p = match damping {
                    Some(p) => p,
                    None => choose_damping(&oracle, t, &loaded.doc.x0, DampingTarget::Digital)?,
                };
                let q = binary_damping.unwrap_or(p);
                for &k in &ks {
                    let quote = digital_prices(&oracle, t, &loaded.doc.x0, k, p, q, &quad)?;
                    csv.row(&[
                        num(t),
                        num(k),
                        num(quote.asset_or_nothing),
                        num(quote.binary),
                        num(quote.call),
                    ]);
                }
            }
            emit(&common.out, &csv.render())
        }
        Cmd::Approx {
            common,
            payoff,
            s_star,
            powers,
            call_strikes,
            no_bond,
            density,
        } => {
            let loaded = load(&common)?;
            let payoff = parse_payoff(&payoff)?;
            let rho = parse_density(&density)?;
            let powers = powers.as_deref().map(parse_grid).transpose()?.unwrap_or_default();
            let strikes = call_strikes
                .as_deref()
                .map(parse_grid)
                .transpose()?
                .unwrap_or_default();
            let basis = PayoffBasis::new(!no_bond, powers, strikes, s_star);
            let fit = fit_weights(&|s| payoff.eval(s), &basis, &rho)?;
            let mut csv = csv_for(&loaded, &common, &["leg", "parameter", "weight"]);
            csv.meta("residual", num(fit.residual));
            csv.meta("dropped_columns", fit.dropped.len());
            if fit.basis.include_bond {
                csv.row(&["bond".into(), String::new(), num(fit.phi_zero)]);
            }
            for (w, p) in fit.power_weights.iter().zip(&fit.basis.powers) {
                csv.row(&["power".into(), num(*p), num(*w)]);
            }
            for (w, k) in fit.call_weights.iter().zip(&fit.basis.strikes) {
                csv.row(&["call".into(), num(*k), num(*w)]);
            }
            emit(&common.out, &csv.render())
        }
        Cmd::Vswap {
            common,
            maturity,
            strike_var,
            cap,
            futures,
            damping,
        } => {
            let loaded = load(&common)?;
            require_admissible(&loaded.doc)?;
            let (params, market, x) = (&loaded.doc.params, &loaded.doc.market, &loaded.doc.x0);
            let f0 = match futures {
                Some(f) => f,
                None => {
                    let gov = bond_price(params, market, x, maturity, BondKind::Government)?;
                    market.log_spot(x).exp() / gov
                }
            };
            let p = match damping {
                Some(p) => p,
                None => {
                    let oracle = AffineOracle::with_tol(params, market, common.tol);
                    choose_damping(&oracle, maturity, x, DampingTarget::Call)?
                }
            };
            let quote = affine_pricer_core::variance_swap_price(
                params,
                market,
                x,
                maturity,
                f0,
                strike_var,
                cap,
                &WeightDensity::DefaultAware,
                None,
                p,
                &quad,
            )?;
            let mut csv = csv_for(
                &loaded,
                &common,
                &["maturity", "futures", "price", "k_trunc", "fit_residual", "expected_trunc_log", "warning"],
            );
            csv.row(&[
                num(maturity),
                num(f0),
                num(quote.price),
                num(quote.k_trunc),
                num(quote.fit_residual),
                num(quote.expected_trunc_log),
                quote.warning.unwrap_or_default().replace(',', ";"),
            ]);
            emit(&common.out, &csv.render())
        }
        Cmd::Hedge {
            common,
            target,
            instruments,
            maturity,
            damping,
        } => {
            let loaded = load(&common)?;
            require_admissible(&loaded.doc)?;
            let target = parse_instrument(&target)?;
            let instruments = parse_instrument_file(&instruments)?;
            let target_sens =
                instrument_sensitivities(&target, &loaded, maturity, damping, &quad, common.tol)?;
            let columns = instruments
                .iter()
                .map(|inst| {
                    instrument_sensitivities(inst, &loaded, maturity, damping, &quad, common.tol)
                })
                .collect::<Result<Vec<_>>>()?;
            let system = affine_pricer_core::build_and_solve(&target_sens, &columns)?;
            let mut csv = csv_for(&loaded, &common, &["instrument", "theta"]);
            csv.meta("condition_estimate", num(system.condition_estimate));
            csv.meta("residual", num(system.residual));
            for (inst, theta) in instruments.iter().zip(system.theta.iter()) {
                csv.row(&[inst.label(), num(*theta)]);
            }
            emit(&common.out, &csv.render())
        }
        Cmd::Surface {
            common,
            strikes,
            maturities,
            damping,
        } => {
            let loaded = load(&common)?;
            require_admissible(&loaded.doc)?;
            let strikes = parse_grid(&strikes)?;
            let ks = strikes_to_log(&strikes)?;
            let mats = parse_grid(&maturities)?;
            let (params, market, x) = (&loaded.doc.params, &loaded.doc.market, &loaded.doc.x0);
            let oracle = AffineOracle::with_tol(params, market, common.tol);
            let s0 = market.log_spot(x);
            let spot = s0.exp();
            let mut csv = csv_for(
                &loaded,
                &common,
                &["maturity", "strike", "price", "implied_vol", "bond_yield", "diagnostic"],
            );
            for &t in &mats {
                let gov = bond_price(params, market, x, t, BondKind::Government)?;
                let yield_ = -gov.ln() / t;
                let p = match damping {
                    Some(p) => p,
                    None => choose_damping(&oracle, t, x, DampingTarget::Call)?,
                };
                let k_ref = ks
                    .iter()
                    .copied()
                    .max_by(|a, b| (a - s0).abs().total_cmp(&(b - s0).abs()))
                    .unwrap();
                let samples = CallSamples::build(&oracle, t, x, k_ref, p, &quad)?;
                let prices = samples.price_many(&ks, x)?;
                for (&strike, &price) in strikes.iter().zip(&prices) {
                    match implied_vol(price, spot, strike, yield_, t) {
                        Ok(vol) => csv.row(&[
                            num(t),
                            num(strike),
                            num(price),
                            num(vol),
                            num(yield_),
                            String::new(),
                        ]),
                        Err(e) => csv.row(&[
                            num(t),
                            num(strike),
                            num(price),
                            String::new(),
                            num(yield_),
                            e.to_string().replace(',', ";"),
                        ]),
                    }
                }
            }
            emit(&common.out, &csv.render())
        }
        Cmd::Explosion {
            common,
            power,
            t_max,
        } => {
            let loaded = load(&common)?;
            require_admissible(&loaded.doc)?;
            if !(t_max > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "t_max {t_max} must be positive"
                )));
            }
            let powers = parse_grid(&power)?;
            let mut csv = csv_for(&loaded, &common, &["power", "t_star"]);
            csv.meta("t_max", num(t_max));
            for &p in &powers {
                let (u, v, w) = moment_argument(&loaded.doc.market, Complex64::new(p, 0.0));
                let sol = solve_riccati(
                    &loaded.doc.params,
                    &loaded.doc.market,
                    &u,
                    v,
                    w,
                    t_max,
                    common.tol,
                )?;
                let t_star = if sol.exploded {
                    num(sol.explosion_time.unwrap_or(sol.t_reached()))
                } else {
                    "inf".into()
                };
                csv.row(&[num(p), t_star]);
            }
            emit(&common.out, &csv.render())
        }
        Cmd::Simulate {
            common,
            paths,
            steps,
            t_end,
            seed,
            strike,
        } => {
            let loaded = load(&common)?;
            let config = SimConfig {
                n_paths: paths,
                n_steps: steps,
                t_end,
                seed,
            };
            let out = simulate(
                &loaded.doc.params,
                &loaded.doc.market,
                &loaded.doc.x0,
                &config,
            )?;
            let n = loaded.doc.params.dim();
            let mut columns = vec![
                "path".to_string(),
                "survived".to_string(),
                "stock".to_string(),
                "r_integral".to_string(),
                "lambda_integral".to_string(),
            ];
            columns.extend((0..n).map(|i| format!("x{i}")));
            let column_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
            let mut csv = csv_for(&loaded, &common, &column_refs);
            csv.meta("seed", seed);
            csv.meta("paths", paths);
            csv.meta("steps", steps);
            csv.meta("t_end", num(t_end));
            csv.meta("clipped_steps", out.clipped_steps);
            if let Some(strike) = strike {
                let (price, se) = mc_price(&out.samples, |s| (s - strike).max(0.0))?;
                csv.meta("call_strike", num(strike));
                csv.meta("call_price", num(price));
                csv.meta("call_se", num(se));
            }
            for (i, sample) in out.samples.iter().enumerate() {
                let mut fields = vec![
                    i.to_string(),
                    (sample.survived as u8).to_string(),
                    num(sample.stock),
                    num(sample.r_integral),
                    num(sample.lambda_integral),
                ];
                fields.extend(sample.x.iter().map(|&v| num(v)));
                csv.row(&fields);
            }
            emit(&common.out, &csv.render())
        }
    }
}

fn strikes_to_log(strikes: &[f64]) -> Result<Vec<f64>> {
    strikes
        .iter()
        .map(|&s| {
            if s > 0.0 {
                Ok(s.ln())
            } else {
                Err(Error::InvalidInput(format!("strike {s} must be positive")))
            }
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} exit={}: {e}", error_kind(&e), exit_code(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
