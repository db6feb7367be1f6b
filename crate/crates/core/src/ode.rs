//! Adaptive Dormand-Prince 5(4) integration for small complex-valued systems.
//!
//! The generalized Riccati equations solved in this crate are stiff only at
//! moment explosions, where the right thing to do is detect the blow-up and
//! stop, not push through it. An explicit embedded pair with PI-free step
//! control is accurate and cheap for everything else. The integrator works on
//! the complex state directly, which is equivalent to running the scheme on
//! the stacked real/imaginary components (all stage updates are real linear
//! combinations).
//!
//! Every accepted step stores the coefficients of the standard quartic
//! interpolant, so a single integration can later be evaluated at any time in
//! `[0, t_reached]` without re-solving.

use num_complex::Complex64;

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Error coefficients: 5th-order weights minus the embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights for the fifth interpolation coefficient.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step together with its quartic interpolant.
#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    cont: [Vec<Complex64>; 5],
}

/// Result of an adaptive integration from `t = 0`.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    dim: usize,
    segments: Vec<Segment>,
    /// Accepted grid times, starting at 0.
    pub grid: Vec<f64>,
    /// State at each grid time.
    pub states: Vec<Vec<Complex64>>,
    /// True if the solution escaped the magnitude limit or the step collapsed.
    pub exploded: bool,
    /// First grid time at which the blow-up was declared.
    pub explosion_time: Option<f64>,
    /// Last time actually reached (equals `t_end` when `exploded` is false).
    pub t_reached: f64,
}

impl OdeSolution {
    /// Dense evaluation; `None` outside `[0, t_reached]` or past a blow-up.
    pub fn eval(&self, t: f64) -> Option<Vec<Complex64>> {
        if !(0.0..=self.t_reached).contains(&t) {
            return None;
        }
        if self.exploded && t >= self.explosion_time.unwrap() {
            return None;
        }
        if self.segments.is_empty() {
            // t_end == 0: state is the initial condition.
            return Some(self.states[0].clone());
        }
        // Find the segment containing t (grid is strictly increasing).
        let idx = match self
            .grid
            .binary_search_by(|g| g.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(self.segments.len()),
            Err(i) => i,
        };
        let seg = if idx == 0 {
            &self.segments[0]
        } else {
            &self.segments[(idx - 1).min(self.segments.len() - 1)]
        };
        let theta = ((t - seg.t0) / seg.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        let mut out = vec![Complex64::ZERO; self.dim];
        for i in 0..self.dim {
            let c = &seg.cont;
            out[i] = c[0][i]
                + theta * (c[1][i] + th1 * (c[2][i] + theta * (c[3][i] + th1 * c[4][i])));
        }
        Some(out)
    }
}

/// Options for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Local error tolerance (used as both absolute and relative weight).
    pub tol: f64,
    /// Declare a blow-up once any component magnitude exceeds this.
    pub magnitude_limit: f64,
    /// Declare a blow-up once the step shrinks below `step_floor_rel * t_end`.
    pub step_floor_rel: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tol: 1e-10,
            magnitude_limit: 1e8,
            step_floor_rel: 1e-12,
        }
    }
}

fn max_abs(y: &[Complex64]) -> f64 {
    y.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn finite(y: &[Complex64]) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Integrate `y' = f(t, y)` from 0 to `t_end` with dense output.
///
/// The right-hand side writes its value into the provided output slice.
/// Blow-ups are reported through the solution flags rather than as errors:
/// a finite-time explosion is an answer, not a failure.
pub fn integrate<F>(mut f: F, y0: &[Complex64], t_end: f64, opts: OdeOptions) -> OdeSolution
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let dim = y0.len();
    let mut sol = OdeSolution {
        dim,
        segments: Vec::new(),
        grid: vec![0.0],
        states: vec![y0.to_vec()],
        exploded: false,
        explosion_time: None,
        t_reached: 0.0,
    };
    if t_end == 0.0 {
        return sol;
    }
    assert!(t_end > 0.0, "integration horizon must be nonnegative");

    let mut y = y0.to_vec();
    let mut t = 0.0_f64;
    let mut k: [Vec<Complex64>; 7] = Default::default();
    for ki in k.iter_mut() {
        ki.resize(dim, Complex64::ZERO);
    }
    let mut ytmp = vec![Complex64::ZERO; dim];
    let mut ynew = vec![Complex64::ZERO; dim];

    let (k1_init, mut h) = {
        let mut k1 = vec![Complex64::ZERO; dim];
        f(0.0, &y, &mut k1);
        // Crude but robust initial step: balance solution and slope scales.
        let d0 = max_abs(&y).max(1e-6);
        let d1 = max_abs(&k1).max(1e-10);
        let h0 = (0.01 * d0 / d1).min(t_end / 10.0).max(t_end * 1e-10);
        (k1, h0)
    };
    k[0].copy_from_slice(&k1_init);
    let mut k1_fresh = true;

    let step_floor = opts.step_floor_rel * t_end;
    let mut rejected = false;

    // Generous cap; a smooth Riccati solve takes a few hundred steps and a
    // blow-up detection a few thousand.
    for _ in 0..2_000_000 {
        if t >= t_end {
            break;
        }
        h = h.min(t_end - t);
        if h < step_floor {
            sol.exploded = true;
            sol.explosion_time = Some(t);
            break;
        }
        if !k1_fresh {
            f(t, &y, &mut k[0]);
            k1_fresh = true;
        }

        // Stages 2..7 (stage 7 is the FSAL evaluation at t + h). Row s of
        // the tableau only references k[0..s], so the split borrow is safe.
        let mut ok = true;
        for s in 1..7 {
            let a: &[f64] = match s {
                1 => &A2,
                2 => &A3,
                3 => &A4,
                4 => &A5,
                5 => &A6,
                _ => &A7,
            };
            for i in 0..dim {
                let mut acc = Complex64::ZERO;
                for (j, &aj) in a.iter().enumerate() {
                    if aj != 0.0 {
                        acc += aj * k[j][i];
                    }
                }
                ytmp[i] = y[i] + h * acc;
            }
            if !finite(&ytmp) {
                ok = false;
                break;
            }
            let (_, tail) = k.split_at_mut(s);
            f(t + C[s] * h, &ytmp, &mut tail[0]);
            if !finite(&tail[0]) {
                ok = false;
                break;
            }
        }
        // ytmp now holds the 5th-order solution (A7 row equals the b weights).
        ynew.copy_from_slice(&ytmp);

        let err = if ok {
            let mut acc = 0.0_f64;
            for i in 0..dim {
                let mut e = Complex64::ZERO;
                for (j, &ej) in E.iter().enumerate() {
                    if ej != 0.0 {
                        e += ej * k[j][i];
                    }
                }
                let sc = opts.tol * (1.0 + y[i].norm().max(ynew[i].norm()));
                let r = h * e.norm() / sc;
                acc += r * r;
            }
            (acc / dim as f64).sqrt()
        } else {
            f64::INFINITY
        };

        if err <= 1.0 && finite(&ynew) {
            // Accept: record the dense interpolant for [t, t + h].
            let mut cont: [Vec<Complex64>; 5] = Default::default();
            for c in cont.iter_mut() {
                c.resize(dim, Complex64::ZERO);
            }
            for i in 0..dim {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut c5 = Complex64::ZERO;
                for (j, &dj) in D.iter().enumerate() {
                    if dj != 0.0 {
                        c5 += dj * k[j][i];
                    }
                }
                cont[4][i] = h * c5;
            }
            sol.segments.push(Segment { t0: t, h, cont });
            t += h;
            y.copy_from_slice(&ynew);
            sol.grid.push(t);
            sol.states.push(y.clone());
            sol.t_reached = t;
            // FSAL: stage 7 of this step is stage 1 of the next.
            let k7 = k[6].clone();
            k[0].copy_from_slice(&k7);
            k1_fresh = true;

            if max_abs(&y) > opts.magnitude_limit {
                sol.exploded = true;
                sol.explosion_time = Some(t);
                break;
            }

            let fac = if err == 0.0 {
                10.0
            } else {
                (0.9 * err.powf(-0.2)).min(if rejected { 1.0 } else { 10.0 })
            };
            h *= fac.max(0.2);
            rejected = false;
        } else {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            h *= fac;
            rejected = true;
        }
    }

    if !sol.exploded && sol.t_reached < t_end {
        // Step budget exhausted without reaching the horizon: treat as a
        // stall at the current time so callers never read a partial answer
        // as a full one.
        sol.exploded = true;
        sol.explosion_time = Some(sol.t_reached);
    }
    sol
}
