//! Ready-made example models. These serve as fixtures for the test suite
//! and as starting points for model files; each constructor documents the
//! behaviour it is meant to exercise.

use nalgebra::{DMatrix, DVector};

use crate::affine::{chi, AffineParams, JumpAtom, MarketSpec};
use crate::heston::HestonDefaultParams;

/// A named model with its initial state.
#[derive(Clone, Debug)]
pub struct ModelInstance {
    pub name: &'static str,
    pub params: AffineParams,
    pub market: MarketSpec,
    pub x0: Vec<f64>,
}

/// Two-factor stochastic volatility with stochastic rates and default
/// intensity; the workhorse demo. Initial stock price 1.
pub fn heston_default_demo() -> HestonDefaultParams {
    HestonDefaultParams {
        kappa1: 0.06,
        kappa2: 0.04,
        theta1: 1.0,
        theta2: 0.3,
        eta1: 0.2,
        eta2: 0.1,
        rho: -0.6,
        c: 0.02,
        gamma1: 0.01,
        gamma2: 0.01,
        d: 0.01,
        delta1: 0.1,
        delta2: 0.1,
        x0: [0.05, 0.03, 0.0],
    }
}

/// Same dynamics with heavier rate/intensity loadings, so positive and
/// negative moments explode at short horizons. Useful for exercising
/// explosion detection and the domain probes.
pub fn heston_explosion_demo() -> HestonDefaultParams {
    HestonDefaultParams {
        c: 0.01,
        gamma1: 0.1,
        gamma2: 0.1,
        d: 0.01,
        delta1: 0.1,
        delta2: 0.1,
        ..heston_default_demo()
    }
}

/// One CIR factor driving both the short rate and the default intensity;
/// no tradable-stock dynamics (the log-price loading is zero). The
/// benchmark for bond prices against their transform values.
pub fn cir_bond() -> ModelInstance {
    let kappa = 0.4;
    let theta = 0.06;
    let sigma = 0.3;
    let params = AffineParams {
        m: 1,
        a: DMatrix::zeros(1, 1),
        alpha: vec![DMatrix::from_element(1, 1, 0.5 * sigma * sigma)],
        b: DVector::from_vec(vec![kappa * theta]),
        beta: DMatrix::from_element(1, 1, -kappa),
        nu: vec![],
        mu: vec![vec![]],
    };
    let market = MarketSpec {
        e: 0.0,
        epsilon: DVector::zeros(1),
        d: 0.0,
        delta: DVector::from_vec(vec![0.6]),
        c: 0.0,
        gamma: DVector::from_vec(vec![0.25]),
    };
    ModelInstance {
        name: "cir-bond",
        params,
        market,
        x0: vec![theta],
    }
}

/// Constant-volatility log price with constant rate and intensity: the
/// Black-Scholes dynamics with a default time bolted on. Everything has a
/// closed form via the standard call formula.
pub fn flat_vol() -> ModelInstance {
    let sigma = 0.25;
    let params = AffineParams {
        m: 0,
        // The quadratic form in the exponent ODE is <au,u>, so the constant
        // block is half the instantaneous variance.
        a: DMatrix::from_element(1, 1, 0.5 * sigma * sigma),
        alpha: vec![],
        b: DVector::from_vec(vec![-0.5 * sigma * sigma]),
        beta: DMatrix::zeros(1, 1),
        nu: vec![],
        mu: vec![],
    };
    let market = MarketSpec {
        e: 0.0,
        epsilon: DVector::from_vec(vec![1.0]),
        d: 0.015,
        delta: DVector::zeros(0),
        c: 0.02,
        gamma: DVector::zeros(0),
    };
    ModelInstance {
        name: "flat-vol",
        params,
        market,
        x0: vec![0.0],
    }
}

/// Pure drift, constant rate and intensity. Everything is available in
/// closed form, which pins down integrators exactly. Not a martingale
/// model: the drift is deliberately left uncompensated. Excluded from the
/// example roster: its stock distribution is a point mass, so quadrature
/// truncation bounds rather than sampling error govern transform prices.
pub fn deterministic() -> ModelInstance {
    let params = AffineParams {
        m: 0,
        a: DMatrix::zeros(1, 1),
        alpha: vec![],
        b: DVector::from_vec(vec![0.02]),
        beta: DMatrix::zeros(1, 1),
        nu: vec![],
        mu: vec![],
    };
    let market = MarketSpec {
        e: 0.0,
        epsilon: DVector::from_vec(vec![1.0]),
        d: 0.01,
        delta: DVector::zeros(0),
        c: 0.03,
        gamma: DVector::zeros(0),
    };
    ModelInstance {
        name: "deterministic",
        params,
        market,
        x0: vec![0.0],
    }
}

/// Log price driven only by compound Poisson jumps, with the constant
/// drift chosen so the discounted price is a martingale.
pub fn pure_jump() -> ModelInstance {
    let nu = vec![
        JumpAtom {
            weight: 0.4,
            point: DVector::from_vec(vec![-0.15]),
        },
        JumpAtom {
            weight: 0.2,
            point: DVector::from_vec(vec![0.1]),
        },
    ];
    // The drift must cancel sum_q w_q (e^y - 1 - chi(y)) for the discounted
    // price to be a martingale.
    let compensated: f64 = nu
        .iter()
        .map(|a| a.weight * (a.point[0].exp() - 1.0 - chi(a.point[0])))
        .sum();
    let params = AffineParams {
        m: 0,
        a: DMatrix::zeros(1, 1),
        alpha: vec![],
        b: DVector::from_vec(vec![-compensated]),
        beta: DMatrix::zeros(1, 1),
        nu,
        mu: vec![],
    };
    let market = MarketSpec {
        e: 0.0,
        epsilon: DVector::from_vec(vec![1.0]),
        d: 0.02,
        delta: DVector::zeros(0),
        c: 0.01,
        gamma: DVector::zeros(0),
    };
    ModelInstance {
        name: "pure-jump",
        params,
        market,
        x0: vec![0.0],
    }
}

/// Stochastic-volatility jump diffusion: a CIR variance factor with
/// variance-proportional co-jumps in (variance, log price) plus an
/// independent jump stream in the log price. Drift terms are compensated
/// so the discounted price is a martingale; exercises every simulation
/// path (state-dependent diffusion, both jump measures).
pub fn jump_diffusion() -> ModelInstance {
    let kappa = 1.2;
    let theta = 0.04;
    let eta = 0.4;
    let rho = -0.5;

    let nu = vec![
        JumpAtom {
            weight: 0.1,
            point: DVector::from_vec(vec![0.0, -0.2]),
        },
        JumpAtom {
            weight: 0.05,
            point: DVector::from_vec(vec![0.0, 0.15]),
        },
    ];
    let mu1 = vec![JumpAtom {
        weight: 0.5,
        point: DVector::from_vec(vec![0.1, -0.1]),
    }];
    let nu_gap: f64 = nu
        .iter()
        .map(|a| a.weight * (a.point[1].exp() - 1.0 - chi(a.point[1])))
        .sum();
    let mu_gap: f64 = mu1
        .iter()
        .map(|a| a.weight * (a.point[1].exp() - 1.0 - chi(a.point[1])))
        .sum();

    let alpha = DMatrix::from_row_slice(
        2,
        2,
        &[
            0.5 * eta * eta,
            0.5 * rho * eta,
            0.5 * rho * eta,
            0.5,
        ],
    );
    let beta = DMatrix::from_row_slice(2, 2, &[-kappa, 0.0, -0.5 - mu_gap, 0.0]);
    let params = AffineParams {
        m: 1,
        a: DMatrix::zeros(2, 2),
        alpha: vec![alpha],
        b: DVector::from_vec(vec![kappa * theta, -nu_gap]),
        beta,
        nu,
        mu: vec![mu1],
    };
    let market = MarketSpec {
        e: 0.0,
        epsilon: DVector::from_vec(vec![0.0, 1.0]),
        d: 0.01,
        delta: DVector::from_vec(vec![0.05]),
        c: 0.005,
        gamma: DVector::from_vec(vec![0.1]),
    };
    ModelInstance {
        name: "jump-diffusion",
        params,
        market,
        x0: vec![theta, 0.0],
    }
}

/// Every example model, including the Heston ones mapped to the generic
/// representation.
pub fn builtin_models() -> Vec<ModelInstance> {
    let heston = heston_default_demo();
    let (h_params, h_market) = crate::heston::to_affine(&heston).expect("demo params are valid");
    let explosion = heston_explosion_demo();
    let (e_params, e_market) =
        crate::heston::to_affine(&explosion).expect("demo params are valid");
    vec![
        flat_vol(),
        pure_jump(),
        cir_bond(),
        jump_diffusion(),
        ModelInstance {
            name: "heston-default",
            params: h_params,
            market: h_market,
            x0: heston.x0.to_vec(),
        },
        ModelInstance {
            name: "heston-explosion",
            params: e_params,
            market: e_market,
            x0: explosion.x0.to_vec(),
        },
    ]
}
