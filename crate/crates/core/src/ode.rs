//! Dormand–Prince 5(4) integrator with continuous extension.
//!
//! The system is autonomous, so the stage times never enter.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Options {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, h_init: None, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn y0(&self) -> [f64; N] {
        self.rcont[0]
    }

    pub fn y1(&self) -> [f64; N] {
        std::array::from_fn(|i| self.rcont[0][i] + self.rcont[1][i])
    }

    /// Fourth-order interpolant at `t ∈ [t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        std::array::from_fn(|i| r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i]))))
    }
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Adaptive stepper for the autonomous system `y' = f(y)`.
pub struct Dopri5<const N: usize, F: Fn(&[f64; N]) -> [f64; N]> {
    f: F,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    opts: Options,
    steps: usize,
    pub evaluations: usize,
}

impl<const N: usize, F: Fn(&[f64; N]) -> [f64; N]> Dopri5<N, F> {
    /// `direction` is `+1` for forward and `−1` for backward integration.
    pub fn new(f: F, t0: f64, y0: [f64; N], direction: f64, opts: Options) -> Self {
        let k1 = f(&y0);
        let mut s = Self { f, t: t0, y: y0, k1, h: 0.0, opts, steps: 0, evaluations: 1 };
        let h = opts.h_init.unwrap_or_else(|| s.initial_step());
        s.h = direction.signum() * h.min(opts.h_max);
        s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> [f64; N] {
        self.y
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> f64 {
        let norm = |v: &[f64; N], y: &[f64; N], s: &Self| {
            (v.iter().enumerate().map(|(i, x)| (x / s.scale(y[i], y[i])).powi(2)).sum::<f64>()
                / N as f64)
                .sqrt()
        };
        let d0 = norm(&self.y, &self.y, self);
        let d1 = norm(&self.k1, &self.y, self);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(&self.y, &[(h0, &self.k1)]);
        let f1 = (self.f)(&y1);
        self.evaluations += 1;
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - self.k1[i]);
        let d2 = norm(&diff, &self.y, self) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// Takes one accepted step, retrying with smaller steps as needed.
    pub fn step(&mut self) -> Result<DenseStep<N>> {
        self.step_inner(false)
    }

    fn step_inner(&mut self, last: bool) -> Result<DenseStep<N>> {
        let f = &self.f;
        let y = self.y;
        let k1 = self.k1;
        loop {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::StepFailure { t: self.t });
            }
            let h = self.h;
            if h == 0.0 || (!last && h.abs() <= 1e-14 * self.t.abs().max(1.0)) {
                return Err(Error::StepFailure { t: self.t });
            }
            let k2 = f(&axpy(&y, &[(h * A21, &k1)]));
            let k3 = f(&axpy(&y, &[(h * A31, &k1), (h * A32, &k2)]));
            let k4 = f(&axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]));
            let k5 = f(&axpy(&y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]));
            let k6 = f(&axpy(
                &y,
                &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
            ));
            let y_new = axpy(
                &y,
                &[(h * A71, &k1), (h * A73, &k3), (h * A74, &k4), (h * A75, &k5), (h * A76, &k6)],
            );
            let k7 = f(&y_new);
            self.evaluations += 6;

            let mut err = 0.0;
            let mut finite = true;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.scale(y[i], y_new[i]);
                err += (e / sc).powi(2);
                finite &= y_new[i].is_finite();
            }
            let err = (err / N as f64).sqrt();
            if !finite || !err.is_finite() {
                self.h *= 0.25;
                continue;
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
            if err <= 1.0 {
                let r2: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
                let r3: [f64; N] = std::array::from_fn(|i| h * k1[i] - r2[i]);
                let r4: [f64; N] = std::array::from_fn(|i| r2[i] - h * k7[i] - r3[i]);
                let r5: [f64; N] = std::array::from_fn(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                });
                let dense = DenseStep { t0: self.t, h, rcont: [y, r2, r3, r4, r5] };
                self.t += h;
                self.y = y_new;
                self.k1 = k7;
                let next = (h * fac).abs().min(self.opts.h_max);
                self.h = h.signum() * next;
                return Ok(dense);
            }
            self.h = h * fac.min(1.0);
        }
    }

    /// Advances exactly to `t_end`, shortening the final step.
    pub fn step_to(&mut self, t_end: f64) -> Result<DenseStep<N>> {
        let remaining = t_end - self.t;
        if remaining.abs() <= self.h.abs() {
            self.h = remaining;
            return self.step_inner(true);
        }
        self.step()
    }

    /// One unadaptive step of size `h` from `(t, y)`; returns the new state.
    pub fn single_step(f: &F, y: &[f64; N], h: f64) -> [f64; N] {
        let k1 = f(y);
        let k2 = f(&axpy(y, &[(h * A21, &k1)]));
        let k3 = f(&axpy(y, &[(h * A31, &k1), (h * A32, &k2)]));
        let k4 = f(&axpy(y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]));
        let k5 = f(&axpy(y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]));
        let k6 = f(&axpy(
            y,
            &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
        ));
        axpy(y, &[(h * A71, &k1), (h * A73, &k3), (h * A74, &k4), (h * A75, &k5), (h * A76, &k6)])
    }
}

/// Integrates `y' = f(y)` from `t = 0` to `t_end`, returning every accepted
/// step. `observer` sees each step and may stop integration early by
/// returning `false`.
pub fn integrate<const N: usize, F, O>(
    f: F,
    y0: [f64; N],
    t_end: f64,
    opts: Options,
    mut observer: O,
) -> Result<Vec<DenseStep<N>>>
where
    F: Fn(&[f64; N]) -> [f64; N],
    O: FnMut(&DenseStep<N>) -> Result<bool>,
{
    let mut solver = Dopri5::new(f, 0.0, y0, t_end.signum(), opts);
    let mut steps = Vec::new();
    while (t_end - solver.t()) * t_end.signum() > 0.0 {
        let step = solver.step_to(t_end)?;
        let go_on = observer(&step)?;
        steps.push(step);
        if !go_on {
            break;
        }
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation(y: &[f64; 2]) -> [f64; 2] {
        [-y[1], y[0]]
    }

    #[test]
    fn harmonic_oscillator_closes() {
        let tol = 1e-10;
        let steps = integrate(rotation, [1.0, 0.0], 2.0 * PI, Options::new(tol, tol), |_| Ok(true)).unwrap();
        let end = steps.last().unwrap().y1();
        assert!((end[0] - 1.0).abs() < 10.0 * tol && end[1].abs() < 10.0 * tol);
        assert!((steps.last().unwrap().t1() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn dense_output_is_accurate() {
        let tol = 1e-11;
        let steps = integrate(rotation, [1.0, 0.0], 10.0, Options::new(tol, tol), |_| Ok(true)).unwrap();
        for s in &steps {
            for k in 0..=8 {
                let t = s.t0 + s.h * k as f64 / 8.0;
                let y = s.eval(t);
                assert!((y[0] - t.cos()).abs() < 1e-8 && (y[1] - t.sin()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn exponential_growth_backward() {
        let tol = 1e-12;
        let steps = integrate(|y: &[f64; 1]| [y[0]], [1.0], -2.0, Options::new(tol, tol), |_| Ok(true)).unwrap();
        let y = steps.last().unwrap().y1()[0];
        assert!((y - (-2.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn observer_can_stop() {
        let mut n = 0;
        let steps = integrate(rotation, [1.0, 0.0], 100.0, Options::new(1e-8, 1e-8), |_| {
            n += 1;
            Ok(n < 3)
        })
        .unwrap();
        assert_eq!(steps.len(), 3);
    }

    #[test]
    fn blow_up_is_a_step_failure() {
        // y' = y², y(0) = 1 blows up at t = 1.
        let r = integrate(|y: &[f64; 1]| [y[0] * y[0]], [1.0], 2.0, Options::new(1e-10, 1e-10), |_| Ok(true));
        assert!(matches!(r, Err(Error::StepFailure { .. })));
    }

    #[test]
    fn single_step_agrees_with_adaptive_step() {
        let y0 = [0.3, -0.2];
        let mut solver = Dopri5::new(rotation, 0.0, y0, 1.0, Options::new(1e-9, 1e-9));
        let step = solver.step().unwrap();
        let y = Dopri5::single_step(&rotation, &y0, step.h);
        assert_eq!(y, step.y1());
    }
}
