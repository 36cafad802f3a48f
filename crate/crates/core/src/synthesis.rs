//! Evaluation of a propagated Gaussian beam on the grid:
//!
//! ```text
//! phi(x) = e^{i delta / hbar} e^{i p (x - x_t) / hbar} a(t) e^{i Gamma (x - x_t)^2 / (2 hbar)}
//! a(t)   = (pi hbar)^{-1/4} M^{-1/2}
//! ```
//!
//! with the square root continued along the trajectory through the branch
//! counter carried by [`BeamState`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::beam::BeamState;
use crate::error::Result;
use crate::grid::{wrapped_displacement, Grid, Signal};

/// Beams are truncated this many widths away from their centre.
pub const TRUNCATION_WIDTHS: f64 = 8.0;

/// `(pi hbar)^{-1/4} |M|^{-1/2} e^{-i (arg M + 2 pi branch) / 2}`.
pub fn amplitude(s: &BeamState, hbar: f64) -> Result<Complex64> {
    s.check_focal()?;
    let modulus = (PI * hbar).powf(-0.25) * s.m.norm().powf(-0.5);
    Ok(Complex64::from_polar(modulus, -0.5 * s.continuous_arg()))
}

/// Half-width of the evaluation window: `min(1/2, 8 sqrt(hbar / Im Gamma))`.
pub fn support_half_width(s: &BeamState, hbar: f64) -> Result<f64> {
    let width = s.width_parameter()?;
    Ok((TRUNCATION_WIDTHS * (hbar / width).sqrt()).min(0.5))
}

/// `c * phi` sampled on `grid`.
pub fn evaluate_beam(s: &BeamState, c: Complex64, hbar: f64, grid: Grid) -> Result<Signal> {
    let mut out = Signal::zeros(grid);
    accumulate_beam(s, c, hbar, out.values_mut())?;
    Ok(out)
}

/// Adds `c * phi` into `out`, which holds one period of samples at `l / out.len()`.
pub fn accumulate_beam(
    s: &BeamState,
    c: Complex64,
    hbar: f64,
    out: &mut [Complex64],
) -> Result<()> {
    let gamma = s.gamma()?;
    let prefactor = c * amplitude(s, hbar)?;
    let half_width = support_half_width(s, hbar)?;
    let len = out.len();
    let centre = s.x.rem_euclid(1.0);
    let mut add = |l: usize| {
        let d = wrapped_displacement(l as f64 / len as f64, centre);
        if d.abs() > half_width {
            return;
        }
        let decay = -gamma.im * d * d / (2.0 * hbar);
        let phase = (s.delta + s.p * d + 0.5 * gamma.re * d * d) / hbar;
        out[l] += prefactor * Complex64::from_polar(decay.exp(), phase);
    };
    let reach = (half_width * len as f64).ceil() as usize + 1;
    if 2 * reach + 1 >= len {
        (0..len).for_each(&mut add);
    } else {
        let first = (centre * len as f64).round() as usize + len - reach;
        (0..=2 * reach).for_each(|j| add((first + j) % len));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{propagate, propagate_to_times, BeamState};
    use crate::grid::l2_norm;
    use crate::hamiltonian::Builtin;

    const HBAR: f64 = 1.0 / (256.0 * PI);

    #[test]
    fn initial_amplitude() {
        let s = BeamState::coherent(0.3, 0.1);
        let a = amplitude(&s, HBAR).unwrap();
        assert!((a - Complex64::new((PI * HBAR).powf(-0.25), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn free_particle_amplitude_at_unit_time() {
        let s0 = BeamState::coherent(0.5, 0.0);
        let s = *propagate(&s0, &Builtin::Free, 1.0, 1e-11, None)
            .unwrap()
            .last();
        let a = amplitude(&s, HBAR).unwrap();
        let expected = (PI * HBAR).powf(-0.25) * 2f64.powf(-0.25);
        assert!((a.norm() - expected).abs() < 1e-9 * expected);
        assert!((a.arg() + PI / 8.0).abs() < 1e-9);
        assert!(
            (a.norm_sqr() * s.m.norm() - (PI * HBAR).powf(-0.5)).abs()
                < 1e-8 * (PI * HBAR).powf(-0.5)
        );
    }

    #[test]
    fn oscillator_full_period_flips_sign() {
        let v = Builtin::HarmonicLocal { omega: 1.0 };
        let s0 = BeamState::coherent(0.5, 0.0);
        let s = propagate_to_times(&s0, &v, &[2.0 * PI], 1e-12).unwrap()[0];
        assert_eq!(s.branch, 1);
        let a = amplitude(&s, HBAR).unwrap();
        assert!((a + Complex64::new((PI * HBAR).powf(-0.25), 0.0)).norm() < 1e-8);
    }

    #[test]
    fn initial_beam_is_the_normalized_gaussian() {
        let grid = Grid::new(1024).unwrap();
        let s = BeamState::coherent(0.0, 0.0);
        let beam = evaluate_beam(&s, Complex64::new(1.0, 0.0), HBAR, grid).unwrap();
        let norm = (PI * HBAR).powf(-0.25);
        for (l, v) in beam.values().iter().enumerate() {
            let d = wrapped_displacement(grid.point(l), 0.0);
            let expected = norm * (-d * d / (2.0 * HBAR)).exp();
            assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-12 * norm);
        }
        assert!((l2_norm(&beam) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn free_spreading_width_ratio() {
        let grid = Grid::new(1024).unwrap();
        let s0 = BeamState::coherent(0.5, 0.0);
        let s1 = *propagate(&s0, &Builtin::Free, 1.0, 1e-11, None)
            .unwrap()
            .last();
        let moments = |s: &BeamState| {
            let beam = evaluate_beam(s, Complex64::new(1.0, 0.0), HBAR, grid).unwrap();
            let w: Vec<f64> = beam.values().iter().map(|v| v.norm_sqr()).collect();
            let total: f64 = w.iter().sum();
            let mean: f64 = w
                .iter()
                .enumerate()
                .map(|(l, p)| grid.point(l) * p)
                .sum::<f64>()
                / total;
            let var: f64 = w
                .iter()
                .enumerate()
                .map(|(l, p)| (grid.point(l) - mean).powi(2) * p)
                .sum::<f64>()
                / total;
            (mean, var.sqrt())
        };
        let (m0, w0) = moments(&s0);
        let (m1, w1) = moments(&s1);
        assert!((m0 - 0.5).abs() < 1e-12 && (m1 - 0.5).abs() < 1e-12);
        // Im Gamma = 1 / (1 + t^2): the density spreads by (1 + t^2)^{1/2},
        // the peak amplitude drops by (1 + t^2)^{-1/4}.
        assert!((w1 / w0 - 2f64.sqrt()).abs() < 1e-6);
        let peak = |s: &BeamState| {
            evaluate_beam(s, Complex64::new(1.0, 0.0), HBAR, grid)
                .unwrap()
                .values()[512]
                .norm()
        };
        assert!((peak(&s1) / peak(&s0) - 2f64.powf(-0.25)).abs() < 1e-9);
    }

    #[test]
    fn wraps_across_the_seam() {
        let grid = Grid::new(256).unwrap();
        let hbar = 1e-3;
        let at = |x: f64| {
            let mut s = BeamState::coherent(x, 0.3);
            s.delta = 0.0;
            evaluate_beam(&s, Complex64::new(1.0, 0.0), hbar, grid).unwrap()
        };
        let (left, right) = (at(0.999), at(-0.001));
        assert!(crate::grid::rel_error(&left, &right).unwrap() < 1e-10);
    }
}
