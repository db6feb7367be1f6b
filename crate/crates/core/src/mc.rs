//! Monte Carlo simulation of the affine jump diffusion together with the
//! rate and intensity integrals and the default time. Not a pricing path:
//! an independent estimator used to validate the transform methods.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::affine::{chi, validate_params, AffineParams, MarketSpec};
use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, SymEigenWork};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub t_end: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(Error::InvalidInput(format!(
                "need at least one path and one step, got {} paths, {} steps",
                self.n_paths, self.n_steps
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidInput(format!(
                "horizon must be positive, got {}",
                self.t_end
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }
}

/// Terminal snapshot of one path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub x: Vec<f64>,
    /// Trapezoidal integral of the short rate up to t_end.
    pub r_integral: f64,
    /// Trapezoidal integral of the default intensity up to t_end.
    pub lambda_integral: f64,
    /// Whether the default time lies beyond t_end.
    pub survived: bool,
    /// Stock price: exp(s + R + Lambda) while alive, 0 after default.
    pub stock: f64,
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub samples: Vec<PathSample>,
    /// Number of steps where the diffusion matrix had eigenvalues below
    /// the clip tolerance and was projected back to PSD.
    pub clipped_steps: u64,
}

/// Full path recording for hedging experiments: states and cumulative
/// integrals at every grid point.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub r_integral: Vec<f64>,
    pub lambda_integral: Vec<f64>,
    /// First grid index at which the default threshold was crossed, if any.
    pub default_step: Option<usize>,
}

impl Trajectory {
    /// Stock price at a grid index (0 once default has happened).
    pub fn stock(&self, market: &MarketSpec, step: usize) -> f64 {
        if self.default_step.is_some_and(|d| step >= d) {
            return 0.0;
        }
        (market.log_spot(&self.states[step]) + self.r_integral[step]
            + self.lambda_integral[step])
            .exp()
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryOutput {
    pub paths: Vec<Trajectory>,
    pub clipped_steps: u64,
}

/// State-independent pieces of the Euler step, precomputed once.
struct StepPlan {
    n: usize,
    m: usize,
    /// Row-major a + placeholders for the alpha part, refreshed per step.
    base_cov: Vec<f64>,
    alpha_flat: Vec<Vec<f64>>,
    /// Drift compensator from the common jump measure.
    comp_nu: Vec<f64>,
    /// Drift compensators from the state-proportional measures.
    comp_mu: Vec<Vec<f64>>,
    nu_total: f64,
    mu_totals: Vec<f64>,
    clip_tol: f64,
}

impl StepPlan {
    fn new(params: &AffineParams) -> Self {
        let n = params.dim();
        let m = params.m;
        let flat = |mat: &nalgebra::DMatrix<f64>| -> Vec<f64> {
            // 2x: the exponent system's quadratic form is half the
            // instantaneous covariance.
            (0..n)
                .flat_map(|r| (0..n).map(move |c| 2.0 * mat[(r, c)]))
                .collect()
        };
        let mut comp_nu = vec![0.0; n];
        for atom in &params.nu {
            for k in m..n {
                comp_nu[k] += atom.weight * chi(atom.point[k]);
            }
        }
        let comp_mu = (0..m)
            .map(|i| {
                let mut comp = vec![0.0; n];
                for atom in params.mu_list(i) {
                    for k in (m..n).chain([i]) {
                        comp[k] += atom.weight * chi(atom.point[k]);
                    }
                }
                comp
            })
            .collect();
        let scale = (0..n)
            .map(|k| 2.0 * params.a[(k, k)].abs())
            .fold(1.0, f64::max);
        StepPlan {
            n,
            m,
            base_cov: flat(&params.a),
            alpha_flat: params.alpha.iter().map(flat).collect(),
            comp_nu,
            comp_mu,
            nu_total: params.nu.iter().map(|a| a.weight).sum(),
            mu_totals: (0..m)
                .map(|i| params.mu_list(i).iter().map(|a| a.weight).sum())
                .collect(),
            clip_tol: 1e-12 * scale,
        }
    }
}

struct PathBufs {
    work: SymEigenWork,
    cov: Vec<f64>,
    sigma: Vec<f64>,
    x: Vec<f64>,
    x_trunc: Vec<f64>,
    drift: Vec<f64>,
    noise: Vec<f64>,
}

impl PathBufs {
    fn new(n: usize) -> Self {
        PathBufs {
            work: SymEigenWork::default(),
            cov: vec![0.0; n * n],
            sigma: vec![0.0; n * n],
            x: vec![0.0; n],
            x_trunc: vec![0.0; n],
            drift: vec![0.0; n],
            noise: vec![0.0; n],
        }
    }
}

fn affine_positive(const_term: f64, loadings: &nalgebra::DVector<f64>, x_trunc: &[f64]) -> f64 {
    const_term
        + loadings
            .iter()
            .zip(x_trunc)
            .map(|(l, x)| l * x)
            .sum::<f64>()
}

/// One full-truncation Euler path. The observer sees every grid point:
/// (index, state, R so far, Lambda so far). Returns the number of clipped
/// diffusion steps and the path's default threshold.
#[allow(clippy::too_many_arguments)]
fn run_path(
    params: &AffineParams,
    market: &MarketSpec,
    plan: &StepPlan,
    x0: &[f64],
    dt: f64,
    n_steps: usize,
    seed: u64,
    path_idx: u64,
    bufs: &mut PathBufs,
    mut observe: impl FnMut(usize, &[f64], f64, f64),
) -> (u64, f64) {
    let (n, m) = (plan.n, plan.m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_idx);
    // Drawn first so the threshold is independent of the path's draw count.
    let default_threshold: f64 = rng.sample(Exp1);

    bufs.x.copy_from_slice(x0);
    let mut r_cum = 0.0;
    let mut l_cum = 0.0;
    let mut clipped = 0u64;
    let sqrt_dt = dt.sqrt();

    let trunc = |x: &[f64], out: &mut [f64]| {
        for i in 0..m {
            out[i] = x[i].max(0.0);
        }
        out[m..n].copy_from_slice(&x[m..n]);
    };
    trunc(&bufs.x, &mut bufs.x_trunc);
    let mut rate_prev = affine_positive(market.d, &market.delta, &bufs.x_trunc[..m]);
    let mut intensity_prev = affine_positive(market.c, &market.gamma, &bufs.x_trunc[..m]);
    observe(0, &bufs.x, r_cum, l_cum);

    for step in 0..n_steps {
        trunc(&bufs.x, &mut bufs.x_trunc);

        bufs.cov.copy_from_slice(&plan.base_cov);
        for (i, alpha) in plan.alpha_flat.iter().enumerate() {
            let xi = bufs.x_trunc[i];
            if xi != 0.0 {
                for (c, a) in bufs.cov.iter_mut().zip(alpha) {
                    *c += xi * a;
                }
            }
        }
        if psd_sqrt(&bufs.cov, n, &mut bufs.work, &mut bufs.sigma, plan.clip_tol) > 0 {
            clipped += 1;
        }

        for k in 0..n {
            let mut d = params.b[k] - plan.comp_nu[k];
            for l in 0..n {
                d += params.beta[(k, l)] * bufs.x_trunc[l];
            }
            for i in 0..m {
                d -= bufs.x_trunc[i] * plan.comp_mu[i][k];
            }
            bufs.drift[k] = d;
        }

        for z in bufs.noise.iter_mut() {
            *z = rng.sample(StandardNormal);
        }

        // Jumps: intensities frozen at the left endpoint, event times drawn
        // exponentially within the step, identity by weight partition.
        let mut total_intensity = plan.nu_total;
        for i in 0..m {
            total_intensity += bufs.x_trunc[i] * plan.mu_totals[i];
        }
        let rate_left = rate_prev;
        let intensity_left = intensity_prev;
        if total_intensity > 0.0 {
            let mut s_local = rng.sample::<f64, _>(Exp1) / total_intensity;
            while s_local <= dt {
                let mut pick = rng.gen::<f64>() * total_intensity;
                let mut applied = false;
                for atom in &params.nu {
                    if pick < atom.weight {
                        for k in 0..n {
                            bufs.x[k] += atom.point[k];
                        }
                        applied = true;
                        break;
                    }
                    pick -= atom.weight;
                }
                if !applied {
                    'outer: for i in 0..m {
                        for atom in params.mu_list(i) {
                            let w = bufs.x_trunc[i] * atom.weight;
                            if pick < w {
                                for k in 0..n {
                                    bufs.x[k] += atom.point[k];
                                }
                                break 'outer;
                            }
                            pick -= w;
                        }
                    }
                    // Rounding can push the pick past the last atom; the
                    // event is then dropped, which matches thinning.
                }
                s_local += rng.sample::<f64, _>(Exp1) / total_intensity;
            }
        }

        for k in 0..n {
            let mut diff = 0.0;
            for l in 0..n {
                diff += bufs.sigma[k * n + l] * bufs.noise[l];
            }
            bufs.x[k] += bufs.drift[k] * dt + sqrt_dt * diff;
        }

        trunc(&bufs.x, &mut bufs.x_trunc);
        let rate_new = affine_positive(market.d, &market.delta, &bufs.x_trunc[..m]);
        let intensity_new = affine_positive(market.c, &market.gamma, &bufs.x_trunc[..m]);
        r_cum += 0.5 * dt * (rate_left + rate_new);
        l_cum += 0.5 * dt * (intensity_left + intensity_new);
        rate_prev = rate_new;
        intensity_prev = intensity_new;
        observe(step + 1, &bufs.x, r_cum, l_cum);
    }
    (clipped, default_threshold)
}

fn check_inputs(
    params: &AffineParams,
    market: &MarketSpec,
    x0: &[f64],
    config: &SimConfig,
) -> Result<()> {
    config.validate()?;
    let report = validate_params(params, market)?;
    if !report.is_admissible() {
        return Err(Error::InvalidInput(format!(
            "parameters not admissible: {:?}",
            report.violations
        )));
    }
    if x0.len() != params.dim() {
        return Err(Error::Dimension(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            params.dim()
        )));
    }
    Ok(())
}

/// Simulate terminal path samples. Each path is a pure function of
/// (seed, path index), so results do not depend on scheduling, and the
/// sample order is by path index.
pub fn simulate(
    params: &AffineParams,
    market: &MarketSpec,
    x0: &[f64],
    config: &SimConfig,
) -> Result<SimOutput> {
    check_inputs(params, market, x0, config)?;
    let plan = StepPlan::new(params);
    let dt = config.dt();

    let results: Vec<(PathSample, u64)> = (0..config.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut bufs = PathBufs::new(plan.n);
            let mut terminal = (vec![0.0; plan.n], 0.0, 0.0);
            let (clipped, threshold) = run_path(
                params,
                market,
                &plan,
                x0,
                dt,
                config.n_steps,
                config.seed,
                p as u64,
                &mut bufs,
                |step, x, r, l| {
                    if step == config.n_steps {
                        terminal = (x.to_vec(), r, l);
                    }
                },
            );
            let (x, r_integral, lambda_integral) = terminal;
            let survived = lambda_integral < threshold;
            let stock = if survived {
                (market.log_spot(&x) + r_integral + lambda_integral).exp()
            } else {
                0.0
            };
            (
                PathSample {
                    x,
                    r_integral,
                    lambda_integral,
                    survived,
                    stock,
                },
                clipped,
            )
        })
        .collect();

    let clipped_steps = results.iter().map(|(_, c)| c).sum();
    Ok(SimOutput {
        samples: results.into_iter().map(|(s, _)| s).collect(),
        clipped_steps,
    })
}

/// Simulate full trajectories (states and integrals at every grid point),
/// for experiments that need to walk along the paths.
pub fn simulate_trajectories(
    params: &AffineParams,
    market: &MarketSpec,
    x0: &[f64],
    config: &SimConfig,
) -> Result<TrajectoryOutput> {
    check_inputs(params, market, x0, config)?;
    let plan = StepPlan::new(params);
    let dt = config.dt();

    let results: Vec<(Trajectory, u64)> = (0..config.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut bufs = PathBufs::new(plan.n);
            let mut traj = Trajectory {
                states: Vec::with_capacity(config.n_steps + 1),
                r_integral: Vec::with_capacity(config.n_steps + 1),
                lambda_integral: Vec::with_capacity(config.n_steps + 1),
                default_step: None,
            };
            let (clipped, threshold) = run_path(
                params,
                market,
                &plan,
                x0,
                dt,
                config.n_steps,
                config.seed,
                p as u64,
                &mut bufs,
                |_, x, r, l| {
                    traj.states.push(x.to_vec());
                    traj.r_integral.push(r);
                    traj.lambda_integral.push(l);
                },
            );
            traj.default_step = traj
                .lambda_integral
                .iter()
                .position(|&l| l >= threshold);
            (traj, clipped)
        })
        .collect();

    let clipped_steps = results.iter().map(|(_, c)| c).sum();
    Ok(TrajectoryOutput {
        paths: results.into_iter().map(|(t, _)| t).collect(),
        clipped_steps,
    })
}

/// Discounted-payoff estimate over the samples: mean and standard error of
/// exp(-R) phi(S), with phi(0) applying on defaulted paths by construction.
pub fn mc_price(samples: &[PathSample], payoff: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to price on".into()));
    }
    let values: Vec<f64> = samples
        .iter()
        .map(|s| (-s.r_integral).exp() * payoff(s.stock))
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}
