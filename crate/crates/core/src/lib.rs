//! Pricing and hedging of equity derivatives, government bonds, and
//! defaultable corporate bonds in affine Markov models.
//!
//! The state process lives on R+^m x R^(n-m); log price, short rate and
//! default intensity are affine in the state. Discounted exponential moments
//! of the log price solve a generalized Riccati system, which feeds Fourier
//! pricing of calls and digitals, quadratic payoff approximation, variance
//! swaps, and sensitivity-based hedging. A Heston-type model with default
//! comes with closed-form solutions used both as a fast path and as a
//! cross-check of the generic solver.

pub mod affine;
pub mod bs;
pub mod error;
pub mod fourier;
pub mod hedging;
pub mod heston;
pub mod linalg;
pub mod mc;
pub mod model_file;
pub mod models;
pub mod ode;
pub mod payoff;
pub mod riccati;

pub use affine::{
    chi, eval_g, eval_g_into, validate_params, AffineParams, JumpAtom, MarketSpec,
    ValidationReport, Violation,
};
pub use bs::{bs_call, implied_vol, norm_cdf};
pub use error::{Error, Result};
pub use fourier::{
    call_price, call_price_detailed, choose_damping, digital_prices, otm_price_sinh, CallQuote,
    CallSamples, DampingTarget, DigitalQuote, QuadRule, QuadratureSpec,
};
pub use hedging::{
    build_and_solve, sensitivities_approx, sensitivities_call, sensitivities_gov_bond,
    sensitivities_power, HedgeSystem, SensitivityVector,
};
pub use heston::{
    explosion_time, hedge_four_instruments, implied_vol_surface, riccati_closed_form, to_affine,
    HestonDefaultParams, HestonOracle, SurfaceCell,
};
pub use mc::{
    mc_price, simulate, simulate_trajectories, PathSample, SimConfig, SimOutput, Trajectory,
    TrajectoryOutput,
};
pub use model_file::ModelDocument;
pub use models::{builtin_models, deterministic, flat_vol, ModelInstance};
pub use payoff::{
    approx_price, fit_weights, variance_swap_price, ApproxQuote, FittedApprox, Payoff,
    PayoffBasis, VarianceSwapQuote, WeightDensity,
};
pub use riccati::{
    bond_price, check_martingale, discounted_moment, probe_domain, solve_riccati, AffineOracle,
    BondKind, DomainProbe, Exponents, MartingaleCheck, MomentOracle, RiccatiSolution,
};
