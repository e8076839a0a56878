//! Adaptive Dormand–Prince 5(4) integrator with PI step control and
//! continuous (dense) output.
//!
//! The step-size controller follows the classical DOPRI5 scheme. The dense
//! output is the fourth-order continuous extension, which is what the
//! event bracketing in [`crate::gaussian`] bisects on.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Continuous extension over the last accepted step.
#[derive(Debug, Clone)]
pub struct DenseOutput {
    t_old: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseOutput {
    fn new(dim: usize) -> Self {
        DenseOutput {
            t_old: 0.0,
            h: 0.0,
            rcont: std::array::from_fn(|_| vec![0.0; dim]),
        }
    }

    /// Component `i` of the interpolant at time `t` inside the last step.
    pub fn eval(&self, t: f64, i: usize) -> f64 {
        let s = (t - self.t_old) / self.h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])))
    }

    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        (0..self.rcont[0].len()).map(|i| self.eval(t, i)).collect()
    }
}

/// View handed to the step observer after every accepted step.
pub struct AcceptedStep<'a> {
    pub t_old: f64,
    pub t: f64,
    pub y_old: &'a [f64],
    pub y: &'a [f64],
    pub dense: &'a DenseOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    /// The step size fell below the resolvable minimum.
    StepUnderflow { t: f64, y: Vec<f64>, h: f64 },
    /// An accepted state is not finite.
    NonFinite { t: f64, y: Vec<f64> },
    TooManySteps { t: f64, y: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub stopped: bool,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_max: f64,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Dopri5 {
            rtol: tol,
            atol: tol,
            max_steps: 5_000_000,
            h_max: f64::INFINITY,
        }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `observer`
    /// after each accepted step. A `Control::Stop` from the observer ends
    /// the integration at that step.
    ///
    /// Stages producing non-finite values are treated as rejected steps, so
    /// right-hand sides may return NaN outside their domain of definition.
    pub fn solve<F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        mut observer: O,
    ) -> Result<OdeOutcome, OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        O: FnMut(&AcceptedStep<'_>) -> Control,
    {
        let n = y0.len();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        let mut ytmp = vec![0.0; n];
        let mut y1 = vec![0.0; n];
        let mut dense = DenseOutput::new(n);
        let span = t_end - t0;
        if span <= 0.0 {
            return Ok(OdeOutcome {
                t,
                y,
                stopped: false,
                accepted: 0,
                rejected: 0,
            });
        }

        f(t, &y, &mut k[0]);
        let mut h = self.initial_step(&mut f, t, &y, &k[0], span);
        let mut fac_old: f64 = 1e-4;
        let mut last_rejected = false;
        let mut accepted = 0usize;
        let mut rejected = 0usize;

        loop {
            if accepted + rejected > self.max_steps {
                return Err(OdeError::TooManySteps { t, y });
            }
            let h_min = 16.0 * f64::EPSILON * t.abs().max(span.abs() * 1e-3);
            if h < h_min {
                return Err(OdeError::StepUnderflow { t, y, h });
            }
            let mut last = false;
            if t + 1.01 * h >= t_end {
                h = t_end - t;
                last = true;
            }

            for i in 0..n {
                ytmp[i] = y[i] + h * A21 * k[0][i];
            }
            f(t + C2 * h, &ytmp, &mut k[1]);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
            }
            f(t + C3 * h, &ytmp, &mut k[2]);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
            }
            f(t + C4 * h, &ytmp, &mut k[3]);
            for i in 0..n {
                ytmp[i] = y[i]
                    + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
            }
            f(t + C5 * h, &ytmp, &mut k[4]);
            for i in 0..n {
                ytmp[i] = y[i]
                    + h * (A61 * k[0][i]
                        + A62 * k[1][i]
                        + A63 * k[2][i]
                        + A64 * k[3][i]
                        + A65 * k[4][i]);
            }
            f(t + h, &ytmp, &mut k[5]);
            for i in 0..n {
                y1[i] = y[i]
                    + h * (A71 * k[0][i]
                        + A73 * k[2][i]
                        + A74 * k[3][i]
                        + A75 * k[4][i]
                        + A76 * k[5][i]);
            }
            f(t + h, &y1, &mut k[6]);

            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let sk = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                err += (e / sk) * (e / sk);
            }
            err = (err / n as f64).sqrt();

            let finite = err.is_finite()
                && y1.iter().all(|v| v.is_finite())
                && k[6].iter().all(|v| v.is_finite());
            if !finite {
                rejected += 1;
                last_rejected = true;
                h *= 0.25;
                continue;
            }

            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = (h / fac).min(self.h_max);
                if last_rejected {
                    h_new = h_new.min(h);
                }
                fac_old = err.max(1e-4);

                dense.t_old = t;
                dense.h = h;
                for i in 0..n {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    dense.rcont[0][i] = y[i];
                    dense.rcont[1][i] = ydiff;
                    dense.rcont[2][i] = bspl;
                    dense.rcont[3][i] = ydiff - h * k[6][i] - bspl;
                    dense.rcont[4][i] = h
                        * (D1 * k[0][i]
                            + D3 * k[2][i]
                            + D4 * k[3][i]
                            + D5 * k[4][i]
                            + D6 * k[5][i]
                            + D7 * k[6][i]);
                }

                let t_old = t;
                t = if last { t_end } else { t + h };
                accepted += 1;
                let ctrl = observer(&AcceptedStep {
                    t_old,
                    t,
                    y_old: &y,
                    y: &y1,
                    dense: &dense,
                });
                std::mem::swap(&mut y, &mut y1);
                k.swap(0, 6);
                last_rejected = false;
                if ctrl == Control::Stop {
                    return Ok(OdeOutcome {
                        t,
                        y,
                        stopped: true,
                        accepted,
                        rejected,
                    });
                }
                if last {
                    return Ok(OdeOutcome {
                        t,
                        y,
                        stopped: false,
                        accepted,
                        rejected,
                    });
                }
                h = h_new;
            } else {
                rejected += 1;
                last_rejected = true;
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            }
        }
    }

    fn initial_step<F>(&self, f: &mut F, t: f64, y: &[f64], f0: &[f64], span: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let sk: Vec<f64> = y.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
        let dnf = (0..n).map(|i| (f0[i] / sk[i]).powi(2)).sum::<f64>() / n as f64;
        let dny = (0..n).map(|i| (y[i] / sk[i]).powi(2)).sum::<f64>() / n as f64;
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.h_max).min(span);
        let y1: Vec<f64> = (0..n).map(|i| y[i] + h * f0[i]).collect();
        let mut f1 = vec![0.0; n];
        f(t + h, &y1, &mut f1);
        let der2 = ((0..n)
            .map(|i| ((f1[i] - f0[i]) / sk[i]).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt()
            / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if !der12.is_finite() {
            h * 1e-3
        } else if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        h = (100.0 * h).min(h1).min(self.h_max).min(span);
        if !h.is_finite() || h <= 0.0 {
            1e-6 * span
        } else {
            h
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let solver = Dopri5::new(1e-10);
        let out = solver
            .solve(
                |_, y, dy| dy[0] = -y[0],
                0.0,
                &[1.0],
                3.0,
                |_| Control::Continue,
            )
            .unwrap();
        assert_eq!(out.t, 3.0);
        assert!((out.y[0] - (-3.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let solver = Dopri5::new(1e-11);
        let mut worst: f64 = 0.0;
        solver
            .solve(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &[1.0, 0.0],
                10.0,
                |step| {
                    let tm = 0.5 * (step.t_old + step.t);
                    worst = worst.max((step.dense.eval(tm, 0) - tm.cos()).abs());
                    Control::Continue
                },
            )
            .unwrap();
        assert!(worst < 1e-8, "dense output error {worst}");
    }

    #[test]
    fn observer_can_stop() {
        let solver = Dopri5::new(1e-8);
        let out = solver
            .solve(
                |_, _, dy| dy[0] = 1.0,
                0.0,
                &[0.0],
                10.0,
                |step| {
                    if step.y[0] > 1.0 {
                        Control::Stop
                    } else {
                        Control::Continue
                    }
                },
            )
            .unwrap();
        assert!(out.stopped);
        assert!(out.t < 10.0);
    }

    #[test]
    fn singular_rhs_underflows() {
        // y' = -1/(2y), y(0)=1 reaches zero at t = 1 with infinite slope
        let solver = Dopri5::new(1e-10);
        let res = solver.solve(
            |_, y, dy| dy[0] = if y[0] > 0.0 { -0.5 / y[0] } else { f64::NAN },
            0.0,
            &[1.0],
            2.0,
            |_| Control::Continue,
        );
        match res {
            Err(OdeError::StepUnderflow { t, .. }) => assert!((t - 1.0).abs() < 1e-6),
            other => panic!("expected underflow, got {other:?}"),
        }
    }
}
