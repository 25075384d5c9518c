//! Dormand–Prince 5(4) for autonomous systems `y' = f(y)`.

use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub atol: f64,
    pub rtol: f64,
    /// First trial step; chosen from the initial slope when `None`.
    pub initial_step: Option<f64>,
    /// Steps below `min_step · max(1, |t|)` abort the integration.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            atol: 1e-10,
            rtol: 1e-8,
            initial_step: None,
            min_step: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

const A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th minus embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) struct Dopri5<F> {
    rhs: F,
    opts: IntegratorOptions,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    y_new: Vec<f64>,
    /// `k[0]` holds `f(y)` for the current `y`.
    fsal: bool,
    h: Option<f64>,
    steps: usize,
}

impl<F: Fn(&[f64], &mut [f64])> Dopri5<F> {
    pub(crate) fn new(rhs: F, n: usize, opts: IntegratorOptions) -> Self {
        Dopri5 {
            rhs,
            opts,
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            y_new: vec![0.0; n],
            fsal: false,
            h: opts.initial_step,
            steps: 0,
        }
    }

    pub(crate) fn steps(&self) -> usize {
        self.steps
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&self, y: &[f64]) -> f64 {
        let n = y.len().max(1) as f64;
        let (mut d0, mut d1) = (0.0, 0.0);
        for (yi, fi) in y.iter().zip(&self.k[0]) {
            let sc = self.scale(*yi, *yi);
            d0 += (yi / sc).powi(2);
            d1 += (fi / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        }
    }

    /// Advance `y` from `t0` to exactly `t1`.
    pub(crate) fn advance(&mut self, y: &mut [f64], t0: f64, t1: f64) -> Result<(), SolverError> {
        if t1 <= t0 {
            return Ok(());
        }
        if !self.fsal {
            (self.rhs)(y, &mut self.k[0]);
            self.fsal = true;
        }
        let mut h = self.h.unwrap_or_else(|| self.initial_step(y));
        let mut t = t0;
        while t < t1 {
            if self.steps >= self.opts.max_steps {
                return Err(SolverError::StepBudgetExhausted {
                    time: t,
                    steps: self.steps,
                });
            }
            if h < self.opts.min_step * t.abs().max(1.0) || !h.is_finite() {
                return Err(SolverError::StepSizeUnderflow { time: t, step: h });
            }
            let last = t + h >= t1;
            let step = if last { t1 - t } else { h };

            for s in 0..6 {
                for i in 0..y.len() {
                    let acc: f64 = A[s].iter().enumerate().map(|(j, a)| a * self.k[j][i]).sum();
                    self.stage[i] = y[i] + step * acc;
                }
                (self.rhs)(&self.stage, &mut self.k[s + 1]);
            }
            // The last stage is the 5th-order solution itself.
            self.y_new.copy_from_slice(&self.stage);

            let mut err = 0.0;
            for i in 0..y.len() {
                let e: f64 = E.iter().enumerate().map(|(j, c)| c * self.k[j][i]).sum();
                let sc = self.scale(y[i], self.y_new[i]);
                err += (step * e / sc).powi(2);
            }
            let err = (err / y.len().max(1) as f64).sqrt();
            self.steps += 1;

            if !err.is_finite() {
                h *= 0.2;
                continue;
            }
            let factor = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            if err <= 1.0 {
                t = if last { t1 } else { t + step };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                if !last || step >= h {
                    h = step * factor;
                }
            } else {
                h = step * factor.min(1.0);
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_accurate() {
        let rhs = |y: &[f64], dy: &mut [f64]| {
            dy[0] = -0.5 * y[0];
            dy[1] = -2.0 * y[1] + 0.5 * y[0];
        };
        let mut ode = Dopri5::new(rhs, 2, IntegratorOptions::default());
        let mut y = [1.0, 0.0];
        ode.advance(&mut y, 0.0, 3.0).unwrap();
        let exact0 = (-1.5f64).exp();
        let exact1 = (0.5 / 1.5) * ((-1.5f64).exp() - (-6.0f64).exp());
        assert!((y[0] - exact0).abs() < 1e-9);
        assert!((y[1] - exact1).abs() < 1e-9);
    }

    #[test]
    fn split_intervals_agree() {
        let rhs = |y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let mut ode = Dopri5::new(rhs, 2, IntegratorOptions::default());
        let mut y = [1.0, 0.0];
        let mut t = 0.0;
        for k in 1..=10 {
            let t1 = k as f64 * 0.7;
            ode.advance(&mut y, t, t1).unwrap();
            t = t1;
        }
        assert!((y[0] - 7.0f64.cos()).abs() < 1e-7);
        assert!((y[1] + 7.0f64.sin()).abs() < 1e-7);
        assert!(ode.steps() > 0);
    }

    #[test]
    fn step_budget_is_enforced() {
        let opts = IntegratorOptions {
            max_steps: 3,
            ..Default::default()
        };
        let mut ode = Dopri5::new(|y: &[f64], dy: &mut [f64]| dy[0] = -y[0], 1, opts);
        let mut y = [1.0];
        assert!(ode.advance(&mut y, 0.0, 1e6).is_err());
    }
}
