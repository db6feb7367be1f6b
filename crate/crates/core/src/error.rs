use num_complex::Complex64;

/// Crate-wide error type.
///
/// Variants are grouped by failure class so callers (in particular the CLI)
/// can map them to distinct exit codes without string matching.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Structural problem with model inputs (dimension mismatches, empty grids, ...).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid argument to an operation (out-of-range parameter, bad grid spec, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A discounted moment is infinite: the Riccati solution explodes before
    /// the requested horizon.
    #[error("moment explodes before t = {t}: z = {z}, blow-up near t = {explosion_time}")]
    MomentExplosion {
        z: Complex64,
        t: f64,
        explosion_time: f64,
    },

    /// The requested damping parameter leads to an infinite moment.
    #[error("damping p = {p} infeasible at maturity {t}: required moment is infinite")]
    DampingInfeasible { p: f64, t: f64 },

    /// No damping value on the probe ladder produced finite moments.
    #[error("no feasible damping found at maturity {t}")]
    NoFeasibleDamping { t: f64 },

    /// Quadrature returned a price more negative than the clamp floor.
    #[error("quadrature produced negative price {value:e} (below {tol:e})")]
    NegativePrice { value: f64, tol: f64 },

    /// Hedge system numerically singular.
    #[error("hedge system singular: estimated rank {rank} of {dim}")]
    SingularHedge { rank: usize, dim: usize },

    /// The chosen hedging instruments are degenerate at this state: the
    /// sensitivity matrix determinant is numerically zero.
    #[error("hedging instruments degenerate: determinant {det:e}")]
    DegenerateHedge { det: f64 },

    /// Hedge solve produced a residual above the accepted bound.
    #[error("hedge residual {residual:e} exceeds bound {bound:e}")]
    HedgeResidual { residual: f64, bound: f64 },

    /// A model file or payoff/instrument spec failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// The affine model does not have the structure expected by a
    /// specialized routine (e.g. the two-factor stochastic volatility form).
    #[error("model shape mismatch: {0}")]
    ModelShape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
