//! Strang-split pseudo-spectral solver for
//! `i hbar u_t = -(hbar^2 / 2) u_xx + V u` on the periodic unit interval.
//!
//! One step is a half potential kick, an exact kinetic drift in Fourier
//! space, and another half kick.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, Signal};
use crate::hamiltonian::Potential;

/// Step parameters; `steps * dt` equals the requested horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrangConfig {
    pub dt: f64,
    pub steps: usize,
    pub hbar: f64,
}

impl StrangConfig {
    /// Picks the smallest step count with `dt <= max_dt` and shrinks `dt` so the
    /// steps land exactly on `horizon`.
    pub fn for_horizon(horizon: f64, max_dt: f64, hbar: f64) -> Result<Self> {
        if !(horizon > 0.0) || !(max_dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} and dt {max_dt} must be positive"
            )));
        }
        if max_dt > horizon * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "dt {max_dt} exceeds horizon {horizon}"
            )));
        }
        let steps = ((horizon / max_dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(Self {
            dt: horizon / steps as f64,
            steps,
            hbar,
        })
    }
}

pub struct StrangSolver {
    grid: Grid,
    dt: f64,
    half_kick: Vec<Complex64>,
    drift: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl StrangSolver {
    pub fn new(grid: Grid, potential: &dyn Potential, hbar: f64, dt: f64) -> Self {
        let half_kick = grid
            .points()
            .map(|x| Complex64::from_polar(1.0, -potential.value(x) * dt / (2.0 * hbar)))
            .collect();
        let drift = grid
            .frequencies()
            .map(|k| {
                let wave = 2.0 * PI * k as f64;
                Complex64::from_polar(1.0, -hbar * wave * wave * dt / 2.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            grid,
            dt,
            half_kick,
            drift,
            forward: planner.plan_fft_forward(grid.len()),
            inverse: planner.plan_fft_inverse(grid.len()),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `values` in place by one step.
    pub fn step_in_place(&self, values: &mut [Complex64]) {
        let scale = 1.0 / self.grid.len() as f64;
        values
            .iter_mut()
            .zip(&self.half_kick)
            .for_each(|(u, k)| *u *= k);
        self.forward.process(values);
        values
            .iter_mut()
            .zip(&self.drift)
            .for_each(|(u, d)| *u *= d * scale);
        self.inverse.process(values);
        values
            .iter_mut()
            .zip(&self.half_kick)
            .for_each(|(u, k)| *u *= k);
    }

    pub fn step(&self, u: &Signal) -> Result<Signal> {
        u.ensure_grid(self.grid)?;
        let mut values = u.values().to_vec();
        self.step_in_place(&mut values);
        Signal::new(self.grid, values)
    }

    pub fn advance(&self, u: &Signal, steps: usize) -> Result<Signal> {
        u.ensure_grid(self.grid)?;
        let mut values = u.values().to_vec();
        for _ in 0..steps {
            self.step_in_place(&mut values);
        }
        Signal::new(self.grid, values)
    }
}

/// One step with explicit configuration.
pub fn step(u: &Signal, potential: &dyn Potential, cfg: &StrangConfig) -> Result<Signal> {
    StrangSolver::new(u.grid(), potential, cfg.hbar, cfg.dt).step(u)
}

/// Solution at time `horizon` using steps no longer than `dt`.
pub fn solve(
    u0: &Signal,
    potential: &dyn Potential,
    horizon: f64,
    dt: f64,
    hbar: f64,
) -> Result<Signal> {
    let cfg = StrangConfig::for_horizon(horizon, dt, hbar)?;
    StrangSolver::new(u0.grid(), potential, hbar, cfg.dt).advance(u0, cfg.steps)
}

/// Solutions at each of `times` (ascending, positive), sharing one step size
/// no longer than `dt`; each time is reached exactly by choosing the step
/// count per interval.
pub fn solve_at_times(
    u0: &Signal,
    potential: &dyn Potential,
    times: &[f64],
    dt: f64,
    hbar: f64,
) -> Result<Vec<Signal>> {
    let mut out = Vec::with_capacity(times.len());
    let mut current = u0.clone();
    let mut t = 0.0;
    for &target in times {
        if target < t {
            return Err(Error::InvalidArgument("times must be ascending".into()));
        }
        if target > t {
            let span = target - t;
            current = solve(&current, potential, span, dt.min(span), hbar)?;
            t = target;
        }
        out.push(current.clone());
    }
    Ok(out)
}

/// Reference at `horizon` with an a-posteriori error estimate from a run at
/// twice the step size: `|u_dt - u_{2dt}| / 3` relative to `|u_dt|`, the
/// Richardson estimate for a second-order scheme.
pub fn solve_with_estimate(
    u0: &Signal,
    potential: &dyn Potential,
    horizon: f64,
    dt: f64,
    hbar: f64,
) -> Result<(Signal, f64)> {
    let fine = solve(u0, potential, horizon, dt, hbar)?;
    let coarse = solve(u0, potential, horizon, (2.0 * dt).min(horizon), hbar)?;
    let estimate = crate::grid::rel_error(&coarse, &fine)? / 3.0;
    Ok((fine, estimate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l2_norm, rel_error};
    use crate::hamiltonian::Builtin;

    const HBAR: f64 = 1.0 / (256.0 * PI);

    #[test]
    fn plane_wave_picks_up_kinetic_phase() {
        let grid = Grid::new(64).unwrap();
        let dt = 0.01;
        for k in [-32i64, -3, 0, 5, 31] {
            let u = Signal::from_fn(grid, |x| {
                Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x)
            });
            let cfg = StrangConfig {
                dt,
                steps: 1,
                hbar: HBAR,
            };
            let next = step(&u, &Builtin::Free, &cfg).unwrap();
            let wave = 2.0 * PI * k as f64;
            let expected = u.scale(Complex64::from_polar(1.0, -HBAR * wave * wave * dt / 2.0));
            assert!(rel_error(&next, &expected).unwrap() < 1e-12);
        }
    }

    #[test]
    fn constant_potential_is_a_global_phase() {
        let grid = Grid::new(64).unwrap();
        let (dt, c, k) = (0.02, 3.5, 4.0);
        let u = Signal::from_fn(grid, |x| Complex64::from_polar(1.0, 2.0 * PI * k * x));
        let cfg = StrangConfig {
            dt,
            steps: 1,
            hbar: HBAR,
        };
        let next = step(&u, &Builtin::Constant(c), &cfg).unwrap();
        let wave = 2.0 * PI * k;
        let phase = -c * dt / HBAR - HBAR * wave * wave * dt / 2.0;
        let expected = u.scale(Complex64::from_polar(1.0, phase));
        assert!(rel_error(&next, &expected).unwrap() < 1e-12);
    }

    #[test]
    fn config_divides_horizon() {
        let cfg = StrangConfig::for_horizon(1.0, 0.3, HBAR).unwrap();
        assert_eq!(cfg.steps, 4);
        assert!((cfg.dt * cfg.steps as f64 - 1.0).abs() < 1e-15);
        let cfg = StrangConfig::for_horizon(1.0, 1e-4, HBAR).unwrap();
        assert_eq!(cfg.steps, 10_000);
        assert!(StrangConfig::for_horizon(0.1, 0.2, HBAR).is_err());
    }

    #[test]
    fn forward_then_backward_is_identity() {
        let grid = Grid::new(256).unwrap();
        let u0 = Signal::from_fn(grid, |x| {
            Complex64::from_polar((-40.0 * (x - 0.4f64).powi(2)).exp(), 30.0 * x)
        });
        let forward = solve(&u0, &Builtin::Well, 0.5, 1e-3, HBAR).unwrap();
        let back = StrangSolver::new(grid, &Builtin::Well, HBAR, -1e-3)
            .advance(&forward, 500)
            .unwrap();
        assert!(rel_error(&back, &u0).unwrap() < 1e-8);
        assert!((l2_norm(&forward) - l2_norm(&u0)).abs() < 1e-12);
    }
}
