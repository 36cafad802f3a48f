//! Initial data used by the experiments.

use num_complex::Complex64;

use crate::grid::{Grid, Signal};

/// `tau0(x) = -(1/5) log(e^{5(x - 1/2)} + e^{-5(x - 1/2)})`, evaluated without overflow.
pub fn tau0(x: f64) -> f64 {
    let s = (5.0 * (x - 0.5)).abs();
    -(s + (-2.0 * s).exp().ln_1p()) / 5.0
}

/// `u0(x) = e^{-25 (x - 1/2)^2} e^{i tau0(x) / hbar}`, unnormalized.
pub fn focusing_datum(grid: Grid, hbar: f64) -> Signal {
    Signal::from_fn(grid, |x| {
        Complex64::from_polar((-25.0 * (x - 0.5) * (x - 0.5)).exp(), tau0(x) / hbar)
    })
}

/// `focusing_datum` multiplied by `e^{-sigma (x - centre)^2}`.
pub fn windowed_datum(grid: Grid, hbar: f64, sigma: f64, centre: f64) -> Signal {
    let base = focusing_datum(grid, hbar);
    let values = base
        .values()
        .iter()
        .zip(grid.points())
        .map(|(v, x)| v * (-sigma * (x - centre) * (x - centre)).exp())
        .collect();
    Signal::new(grid, values).expect("same grid")
}

/// `focusing_datum` circularly shifted by half a period.
pub fn shifted_datum(grid: Grid, hbar: f64) -> Signal {
    focusing_datum(grid, hbar).circular_shift(grid.len() / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const HBAR: f64 = 1.0 / (256.0 * PI);

    fn grid() -> Grid {
        Grid::new(1024).unwrap()
    }

    #[test]
    fn centre_value() {
        let u = focusing_datum(grid(), HBAR);
        let v = u.values()[512];
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!((tau0(0.5) + 2f64.ln() / 5.0).abs() < 1e-15);
        let expected = Complex64::from_polar(1.0, -2f64.ln() / (5.0 * HBAR));
        assert!((v - expected).norm() < 1e-12);
    }

    #[test]
    fn phase_is_even_and_has_tanh_slope() {
        for x in [0.01, 0.2, 0.37, 0.5] {
            assert!((tau0(0.5 + x) - tau0(0.5 - x)).abs() < 1e-15);
        }
        let h = 1e-6;
        let slope = (tau0(0.7 + h) - tau0(0.7 - h)) / (2.0 * h);
        assert!((slope + 1f64.tanh()).abs() < 1e-9);
        // No overflow far from the centre.
        assert!((tau0(1e3) + (1e3 - 0.5)).abs() < 1e-9);
    }

    #[test]
    fn shifted_datum_peaks_at_origin() {
        let u = shifted_datum(grid(), HBAR);
        let peak =
            (0..u.len()).max_by(|&i, &j| u.values()[i].norm().total_cmp(&u.values()[j].norm()));
        assert_eq!(peak, Some(0));
    }

    #[test]
    fn windowed_datum_is_localized() {
        let u = windowed_datum(grid(), HBAR, 200.0, 0.5);
        let (mut inside, mut outside) = (0.0, 0.0);
        for (x, v) in grid().points().zip(u.values()) {
            if (0.25..=0.75).contains(&x) {
                inside += v.norm_sqr();
            } else {
                outside += v.norm_sqr();
            }
        }
        assert!(outside / (inside + outside) < 1e-6);
    }
}
