//! Gaussian-beam dynamics: the classical trajectory, the linearized flow
//! `(M, N)` and the symmetrized action, integrated for one lattice atom.
//!
//! The state obeys
//!
//! ```text
//! x' = p,  p' = -V'(x),  M' = N,  N' = -V''(x) M,  delta' = p^2/2 - V(x)
//! ```
//!
//! with `Gamma = N / M` the complex width parameter. Position is kept on the
//! real line (not wrapped) so the vector field stays smooth.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gabor::GaborLattice;
use crate::hamiltonian::Potential;
use crate::ode::{step_factor, DormandPrince};

/// Default absolute and relative ODE tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default reinitialization threshold on `Im Gamma`.
pub const DEFAULT_WIDTH_THRESHOLD: f64 = 0.2;

const FOCAL_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamState {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub m: Complex64,
    pub n: Complex64,
    /// Symmetrized action.
    pub delta: f64,
    /// Winding count of `M` around the origin; `arg M + 2 pi branch` is continuous in time.
    pub branch: i64,
}

impl BeamState {
    /// Coherent state at phase-space point `(x, p)`: `M = 1`, `N = i`, action `x p / 2`.
    pub fn coherent(x: f64, p: f64) -> Self {
        Self {
            t: 0.0,
            x,
            p,
            m: Complex64::new(1.0, 0.0),
            n: Complex64::new(0.0, 1.0),
            delta: 0.5 * x * p,
            branch: 0,
        }
    }

    /// `Gamma = N / M`.
    pub fn gamma(&self) -> Result<Complex64> {
        self.check_focal()?;
        Ok(self.n / self.m)
    }

    /// `Im Gamma`, the inverse squared width of the beam (in units of `hbar`).
    pub fn width_parameter(&self) -> Result<f64> {
        Ok(self.gamma()?.im)
    }

    /// `conj(M) N - M conj(N)`, conserved and equal to `2i`.
    pub fn wronskian(&self) -> Complex64 {
        self.m.conj() * self.n - self.m * self.n.conj()
    }

    /// Continuous argument of `M`.
    pub fn continuous_arg(&self) -> f64 {
        self.m.arg() + 2.0 * PI * self.branch as f64
    }

    pub fn check_focal(&self) -> Result<()> {
        let modulus = self.m.norm();
        if !(modulus > FOCAL_GUARD) {
            return Err(Error::FocalPoint { t: self.t, modulus });
        }
        Ok(())
    }

    fn to_array(self) -> [f64; 7] {
        [
            self.x, self.p, self.m.re, self.m.im, self.n.re, self.n.im, self.delta,
        ]
    }

    fn from_array(t: f64, y: &[f64; 7], branch: i64) -> Self {
        Self {
            t,
            x: y[0],
            p: y[1],
            m: Complex64::new(y[2], y[3]),
            n: Complex64::new(y[4], y[5]),
            delta: y[6],
            branch,
        }
    }
}

/// Symmetric lattice index: `n` in `(-L/(2a), L/(2a)]`, `m` in `(-M/2, M/2]`.
pub fn symmetric_index(m: usize, n: usize, lattice: &GaborLattice) -> (i64, i64) {
    let (channels, shifts) = (lattice.channels() as i64, lattice.shifts() as i64);
    let (m, n) = (m as i64, n as i64);
    let m = if m > channels / 2 { m - channels } else { m };
    let n = if n > shifts / 2 { n - shifts } else { n };
    (m, n)
}

/// Initial beam for the lattice atom with symmetric indices `(n, m)`:
/// `x0 = a n / L`, `p0 = 2 pi hbar m L / M`, `delta0 = pi hbar a n m / M`.
pub fn initial_state(n: i64, m: i64, lattice: &GaborLattice) -> Result<BeamState> {
    let half_shifts = (lattice.shifts() / 2) as i64;
    let half_channels = (lattice.channels() / 2) as i64;
    if n <= -half_shifts || n > half_shifts {
        return Err(Error::IndexOutOfRange(format!(
            "n = {n} outside ({}, {half_shifts}]",
            -half_shifts
        )));
    }
    if m <= -half_channels || m > half_channels {
        return Err(Error::IndexOutOfRange(format!(
            "m = {m} outside ({}, {half_channels}]",
            -half_channels
        )));
    }
    let (a, len, channels) = (
        lattice.a() as f64,
        lattice.len() as f64,
        lattice.channels() as f64,
    );
    let hbar = lattice.hbar();
    let (n, m) = (n as f64, m as f64);
    let mut state = BeamState::coherent(a * n / len, 2.0 * PI * hbar * m * len / channels);
    state.delta = a * n * PI * hbar * m / channels;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventReason {
    /// `Im Gamma` fell below the configured threshold.
    WidthBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamEvent {
    pub time: f64,
    pub reason: EventReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamTrajectory {
    pub samples: Vec<BeamState>,
    pub event: Option<BeamEvent>,
}

impl BeamTrajectory {
    pub fn last(&self) -> &BeamState {
        self.samples
            .last()
            .expect("trajectory has at least the initial sample")
    }

    /// CSV with columns `t,x,p,ReM,ImM,ReN,ImN,delta,branch`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,x,p,ReM,ImM,ReN,ImN,delta,branch")?;
        for s in &self.samples {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                s.t, s.x, s.p, s.m.re, s.m.im, s.n.re, s.n.im, s.delta, s.branch
            )?;
        }
        Ok(())
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol:e} outside [1e-13, 1e-6]"
        )));
    }
    Ok(())
}

/// Integrates from `s0` to `t_end`, recording every accepted step. With
/// `width_event` set, stops at the first time `Im Gamma` drops below it.
pub fn propagate(
    s0: &BeamState,
    potential: &dyn Potential,
    t_end: f64,
    tol: f64,
    width_event: Option<f64>,
) -> Result<BeamTrajectory> {
    check_tol(tol)?;
    if !(t_end > s0.t) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} not after t = {}",
            s0.t
        )));
    }
    let driver = Driver::new(potential, tol, 1.0);
    let mut samples = vec![*s0];
    let event = driver.run(s0, &[t_end], width_event, |s| samples.push(*s), |_| {})?;
    Ok(BeamTrajectory { samples, event })
}

/// States at exactly the requested times (ascending, none before `s0.t`).
pub fn propagate_to_times(
    s0: &BeamState,
    potential: &dyn Potential,
    times: &[f64],
    tol: f64,
) -> Result<Vec<BeamState>> {
    check_tol(tol)?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < s0.t) {
        return Err(Error::InvalidArgument(
            "times must be ascending and not before the start".into(),
        ));
    }
    let driver = Driver::new(potential, tol, 1.0);
    let mut out = Vec::with_capacity(times.len());
    driver.run(s0, times, None, |_| {}, |s| out.push(*s))?;
    Ok(out)
}

/// Runs the time-reversed vector field for `duration`, landing at `s.t - duration`.
pub fn propagate_backward(
    s: &BeamState,
    potential: &dyn Potential,
    duration: f64,
    tol: f64,
) -> Result<BeamState> {
    check_tol(tol)?;
    if !(duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "duration {duration} must be positive"
        )));
    }
    let driver = Driver::new(potential, tol, -1.0);
    let mut end = *s;
    let mut local = *s;
    local.t = 0.0;
    driver.run(&local, &[duration], None, |_| {}, |r| end = *r)?;
    end.t = s.t - duration;
    Ok(end)
}

struct Driver<'a> {
    potential: &'a dyn Potential,
    tol: f64,
    direction: f64,
}

impl<'a> Driver<'a> {
    fn new(potential: &'a dyn Potential, tol: f64, direction: f64) -> Self {
        Self {
            potential,
            tol,
            direction,
        }
    }

    /// Integrates through every stop time; `on_step` sees each accepted state,
    /// `on_stop` each state at a stop. Returns early on a width event.
    fn run(
        &self,
        s0: &BeamState,
        stops: &[f64],
        width_event: Option<f64>,
        mut on_step: impl FnMut(&BeamState),
        mut on_stop: impl FnMut(&BeamState),
    ) -> Result<Option<BeamEvent>> {
        s0.check_focal()?;
        let v = self.potential;
        let sign = self.direction;
        let rhs = move |y: &[f64; 7]| {
            let (x, p) = (y[0], y[1]);
            let d2v = v.hessian(x);
            [
                sign * p,
                -sign * v.gradient(x),
                sign * y[4],
                sign * y[5],
                -sign * d2v * y[2],
                -sign * d2v * y[3],
                sign * (0.5 * p * p - v.value(x)),
            ]
        };
        let stepper = DormandPrince::new(rhs, self.tol, self.tol);

        let mut t = s0.t;
        let mut y = s0.to_array();
        let mut branch = s0.branch;
        let mut dy = stepper.derivative(&y);
        let span = stops.last().map_or(0.0, |end| end - t);
        let mut h = stepper.initial_step(&y, &dy, span.max(1e-3));

        for &stop in stops {
            while t < stop {
                let min_step = 1e-13 * t.abs().max(1.0);
                if h < min_step {
                    return Err(Error::StiffOrSingular { t });
                }
                let remaining = stop - t;
                let (step, lands) = if h >= remaining * (1.0 - 1e-12) {
                    (remaining, true)
                } else {
                    (h, false)
                };
                let trial = stepper.step(&y, &dy, step);
                let accepted = trial.error <= 1.0 && trial.y.iter().all(|v| v.is_finite());
                if !accepted {
                    h = step * step_factor(trial.error).min(1.0);
                    continue;
                }
                let m_old = Complex64::new(y[2], y[3]);
                let m_new = Complex64::new(trial.y[2], trial.y[3]);
                let turn = m_new.arg() - m_old.arg();
                let wrapped = turn - 2.0 * PI * (turn / (2.0 * PI)).round();
                if wrapped.abs() > 0.5 * PI {
                    // M turned too far to resolve the branch unambiguously.
                    h = 0.5 * step;
                    continue;
                }
                let new_branch = branch + winding(turn);
                let t_new = if lands { stop } else { t + step };
                let state = BeamState::from_array(t_new, &trial.y, new_branch);
                state.check_focal()?;

                if let Some(threshold) = width_event {
                    let before = BeamState::from_array(t, &y, branch).width_parameter()?;
                    let after = state.width_parameter()?;
                    if after < threshold && before >= threshold {
                        let event_state =
                            self.locate_event(&stepper, t, &y, &dy, branch, step, threshold)?;
                        on_step(&event_state);
                        return Ok(Some(BeamEvent {
                            time: event_state.t,
                            reason: EventReason::WidthBelow(threshold),
                        }));
                    }
                }

                t = t_new;
                y = trial.y;
                dy = trial.dy;
                branch = new_branch;
                on_step(&state);
                h = if lands && step < h {
                    h
                } else {
                    step * step_factor(trial.error)
                };
            }
            on_stop(&BeamState::from_array(t, &y, branch));
        }
        Ok(None)
    }

    /// Bisects the step length for the crossing of `Im Gamma = threshold`.
    #[allow(clippy::too_many_arguments)]
    fn locate_event<F>(
        &self,
        stepper: &DormandPrince<F>,
        t: f64,
        y: &[f64; 7],
        dy: &[f64; 7],
        branch: i64,
        step: f64,
        threshold: f64,
    ) -> Result<BeamState>
    where
        F: Fn(&[f64; 7]) -> [f64; 7],
    {
        let m_old = Complex64::new(y[2], y[3]);
        let at = |h: f64| -> Result<BeamState> {
            let trial = stepper.step(y, dy, h);
            let m_new = Complex64::new(trial.y[2], trial.y[3]);
            let b = branch + winding(m_new.arg() - m_old.arg());
            Ok(BeamState::from_array(t + h, &trial.y, b))
        };
        let (mut lo, mut hi) = (0.0, step);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if at(mid)?.width_parameter()? < threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        at(hi)
    }
}

/// Branch increment when `arg M` jumps across the negative real axis.
fn winding(turn: f64) -> i64 {
    if turn > PI {
        -1
    } else if turn < -PI {
        1
    } else {
        0
    }
}
