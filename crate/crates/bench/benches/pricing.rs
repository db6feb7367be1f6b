use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use affine_pricer_core::fourier::{call_price, digital_prices, CallSamples, QuadratureSpec};
use affine_pricer_core::heston::{to_affine, HestonOracle};
use affine_pricer_core::mc::{simulate, SimConfig};
use affine_pricer_core::models::heston_default_demo;
use affine_pricer_core::payoff::{fit_weights, Payoff, PayoffBasis, WeightDensity};
use affine_pricer_core::riccati::{AffineOracle, MomentOracle};

fn bench_transforms(c: &mut Criterion) {
    let demo = heston_default_demo();
    let (params, market) = to_affine(&demo).unwrap();
    let generic = AffineOracle::new(&params, &market);
    let closed = HestonOracle::new(&demo).unwrap();
    let z = Complex64::new(2.0, 1.0);
    c.bench_function("exponents_ode", |b| {
        b.iter(|| generic.exponents(black_box(1.0), black_box(z)).unwrap())
    });
    c.bench_function("exponents_closed_form", |b| {
        b.iter(|| closed.exponents(black_box(1.0), black_box(z)).unwrap())
    });
}

fn bench_pricing(c: &mut Criterion) {
    let demo = heston_default_demo();
    let (params, market) = to_affine(&demo).unwrap();
    let x0 = demo.x0.to_vec();
    let generic = AffineOracle::new(&params, &market);
    let closed = HestonOracle::new(&demo).unwrap();
    let spec = QuadratureSpec::default();
    c.bench_function("call_price_ode_oracle", |b| {
        b.iter(|| call_price(&generic, 1.0, &x0, black_box(0.0), 2.0, &spec).unwrap())
    });
    c.bench_function("digitals_closed_oracle", |b| {
        b.iter(|| digital_prices(&closed, 1.0, &x0, black_box(0.0), 2.0, 2.0, &spec).unwrap())
    });
    let strikes: Vec<f64> = (0..21).map(|i| -0.3 + 0.03 * i as f64).collect();
    c.bench_function("call_strip_21_strikes", |b| {
        b.iter(|| {
            let samples = CallSamples::build(&closed, 1.0, &x0, 0.3, 2.0, &spec).unwrap();
            samples.price_many(black_box(&strikes), &x0).unwrap()
        })
    });
}

fn bench_fitting(c: &mut Criterion) {
    let payoff = Payoff::TruncatedLog { floor: -1.0 };
    let powers: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
    let strikes: Vec<f64> = (1..=50).map(|i| 0.06 * i as f64).collect();
    let basis = PayoffBasis::new(true, powers, strikes, 3.0);
    let rho = WeightDensity::DefaultAware;
    c.bench_function("fit_truncated_log_101_legs", |b| {
        b.iter(|| fit_weights(&|s| payoff.eval(s), black_box(&basis), &rho).unwrap())
    });
}

fn bench_simulation(c: &mut Criterion) {
    let demo = heston_default_demo();
    let (params, market) = to_affine(&demo).unwrap();
    let x0 = demo.x0.to_vec();
    let config = SimConfig {
        n_paths: 1_000,
        n_steps: 250,
        t_end: 1.0,
        seed: 7,
    };
    let mut group = c.benchmark_group("mc");
    group.sample_size(10);
    group.bench_function("simulate_1000_paths_250_steps", |b| {
        b.iter(|| simulate(&params, &market, black_box(&x0), &config).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_transforms,
    bench_pricing,
    bench_fitting,
    bench_simulation
);
criterion_main!(benches);
