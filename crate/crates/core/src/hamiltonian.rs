//! Potentials for Hamiltonians `H(x, p) = V(x) + p^2 / 2`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// A potential with closed-form first and second derivatives.
pub trait Potential: Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, x: f64) -> f64;
    fn gradient(&self, x: f64) -> f64;
    fn hessian(&self, x: f64) -> f64;

    /// True when `V` is at most quadratic, so that Gaussian beams are exact.
    fn is_quadratic(&self) -> bool {
        false
    }

    fn energy(&self, x: f64, p: f64) -> f64 {
        0.5 * p * p + self.value(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// `V = 0`.
    Free,
    /// `V = c`.
    Constant(f64),
    /// `V = omega^2 (x - 1/2)^2 / 2`; not periodic, only meaningful near `x = 1/2`.
    HarmonicLocal { omega: f64 },
    /// `V = cos 2 pi x`.
    Well,
    /// `V = cos 2 pi (x + 1/2)`.
    Hill,
    /// `V = 10 + sin 2 pi (x + 1/2)`.
    HillWell,
}

impl Builtin {
    pub const NAMES: [&'static str; 6] = [
        "free",
        "constant",
        "harmonic_local",
        "well",
        "hill",
        "hill_well",
    ];

    /// Looks up a builtin by name. `constant` reads its value from `param`
    /// (default 0); `harmonic_local` reads `omega` (default `2 pi`, i.e.
    /// `V = 2 pi^2 (x - 1/2)^2`).
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        Ok(match name {
            "free" => Builtin::Free,
            "constant" => Builtin::Constant(param.unwrap_or(0.0)),
            "harmonic_local" => Builtin::HarmonicLocal {
                omega: param.unwrap_or(2.0 * PI),
            },
            "well" => Builtin::Well,
            "hill" => Builtin::Hill,
            "hill_well" => Builtin::HillWell,
            other => return Err(Error::UnknownPotential(other.to_string())),
        })
    }

    pub fn param(&self) -> Option<f64> {
        match self {
            Builtin::Constant(c) => Some(*c),
            Builtin::HarmonicLocal { omega } => Some(*omega),
            _ => None,
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const TWO_PI: f64 = 2.0 * PI;
const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

impl Potential for Builtin {
    fn name(&self) -> &str {
        match self {
            Builtin::Free => "free",
            Builtin::Constant(_) => "constant",
            Builtin::HarmonicLocal { .. } => "harmonic_local",
            Builtin::Well => "well",
            Builtin::Hill => "hill",
            Builtin::HillWell => "hill_well",
        }
    }

    fn value(&self, x: f64) -> f64 {
        match *self {
            Builtin::Free => 0.0,
            Builtin::Constant(c) => c,
            Builtin::HarmonicLocal { omega } => 0.5 * omega * omega * (x - 0.5).powi(2),
            Builtin::Well => (TWO_PI * x).cos(),
            Builtin::Hill => (TWO_PI * (x + 0.5)).cos(),
            Builtin::HillWell => 10.0 + (TWO_PI * (x + 0.5)).sin(),
        }
    }

    fn gradient(&self, x: f64) -> f64 {
        match *self {
            Builtin::Free | Builtin::Constant(_) => 0.0,
            Builtin::HarmonicLocal { omega } => omega * omega * (x - 0.5),
            Builtin::Well => -TWO_PI * (TWO_PI * x).sin(),
            Builtin::Hill => -TWO_PI * (TWO_PI * (x + 0.5)).sin(),
            Builtin::HillWell => TWO_PI * (TWO_PI * (x + 0.5)).cos(),
        }
    }

    fn hessian(&self, x: f64) -> f64 {
        match *self {
            Builtin::Free | Builtin::Constant(_) => 0.0,
            Builtin::HarmonicLocal { omega } => omega * omega,
            Builtin::Well => -FOUR_PI_SQ * (TWO_PI * x).cos(),
            Builtin::Hill => -FOUR_PI_SQ * (TWO_PI * (x + 0.5)).cos(),
            Builtin::HillWell => -FOUR_PI_SQ * (TWO_PI * (x + 0.5)).sin(),
        }
    }

    fn is_quadratic(&self) -> bool {
        matches!(
            self,
            Builtin::Free | Builtin::Constant(_) | Builtin::HarmonicLocal { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// A maximal run of sample points sharing the sign of `V''`; `start` and `end`
/// are the first and last sample positions of the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignRegion {
    pub start: f64,
    pub end: f64,
    pub sign: Sign,
}

/// Samples `V''` at `x_j = j / resolution`, `j = 0..=resolution`, and groups
/// contiguous samples of equal sign. Values within `1e-9` of zero relative to
/// the largest sampled magnitude count as zero.
pub fn hessian_sign_regions(
    potential: &dyn Potential,
    resolution: usize,
) -> Result<Vec<SignRegion>> {
    if resolution < 16 {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} below 16"
        )));
    }
    let xs: Vec<f64> = (0..=resolution)
        .map(|j| j as f64 / resolution as f64)
        .collect();
    let values: Vec<f64> = xs.iter().map(|&x| potential.hessian(x)).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sign_of = |v: f64| {
        if v.abs() <= 1e-9 * scale {
            Sign::Zero
        } else if v > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    };
    let mut regions: Vec<SignRegion> = Vec::new();
    for (&x, &v) in xs.iter().zip(&values) {
        let sign = sign_of(v);
        match regions.last_mut() {
            Some(last) if last.sign == sign => last.end = x,
            _ => regions.push(SignRegion {
                start: x,
                end: x,
                sign,
            }),
        }
    }
    Ok(regions)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Builtin; 6] = [
        Builtin::Free,
        Builtin::Constant(3.0),
        Builtin::HarmonicLocal { omega: 2.0 * PI },
        Builtin::Well,
        Builtin::Hill,
        Builtin::HillWell,
    ];

    #[test]
    fn lookup_by_name() {
        for name in Builtin::NAMES {
            assert_eq!(Builtin::from_name(name, None).unwrap().name(), name);
        }
        assert!(matches!(
            Builtin::from_name("valley", None),
            Err(Error::UnknownPotential(_))
        ));
        assert_eq!(
            Builtin::from_name("harmonic_local", None)
                .unwrap()
                .value(0.0),
            2.0 * PI * PI * 0.25
        );
    }

    #[test]
    fn point_values() {
        let w = Builtin::Well;
        assert!((w.value(0.5) + 1.0).abs() < 1e-15);
        assert!(w.gradient(0.5).abs() < 1e-14);
        assert!((w.hessian(0.5) - FOUR_PI_SQ).abs() < 1e-12);
        let h = Builtin::Hill;
        assert!((h.value(0.5) - 1.0).abs() < 1e-15);
        assert!((h.hessian(0.5) + FOUR_PI_SQ).abs() < 1e-12);
        for x in [0.0, 0.3, 0.77] {
            let f = Builtin::Free;
            assert_eq!((f.value(x), f.gradient(x), f.hessian(x)), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let step = 1e-5;
        for p in ALL {
            for j in 0..=100 {
                let x = j as f64 / 100.0;
                let d1 = (p.value(x + step) - p.value(x - step)) / (2.0 * step);
                let wide = 1e-3;
                let d2 = (p.value(x + wide) - 2.0 * p.value(x) + p.value(x - wide)) / (wide * wide);
                let g1 = (p.gradient(x + step) - p.gradient(x - step)) / (2.0 * step);
                assert!((d1 - p.gradient(x)).abs() < 1e-6, "{} dv at {x}", p.name());
                assert!((g1 - p.hessian(x)).abs() < 1e-6, "{} d2v at {x}", p.name());
                assert!(
                    (d2 - p.hessian(x)).abs() < 1e-3,
                    "{} d2v (second difference) at {x}",
                    p.name()
                );
            }
        }
    }

    #[test]
    fn periodic_builtins() {
        for p in [
            Builtin::Free,
            Builtin::Well,
            Builtin::Hill,
            Builtin::HillWell,
        ] {
            for j in 0..50 {
                let x = j as f64 / 50.0 - 0.3;
                assert!((p.value(x + 1.0) - p.value(x)).abs() < 1e-12);
            }
        }
    }

    fn regions_with(regions: &[SignRegion], sign: Sign) -> Vec<(f64, f64)> {
        regions
            .iter()
            .filter(|r| r.sign == sign)
            .map(|r| (r.start, r.end))
            .collect()
    }

    #[test]
    fn hessian_signs() {
        let res = 64;
        let step = 1.0 / res as f64;
        let well = hessian_sign_regions(&Builtin::Well, res).unwrap();
        assert_eq!(
            regions_with(&well, Sign::Positive),
            vec![(0.25 + step, 0.75 - step)]
        );
        assert_eq!(
            regions_with(&well, Sign::Zero),
            vec![(0.25, 0.25), (0.75, 0.75)]
        );

        let hill = hessian_sign_regions(&Builtin::Hill, res).unwrap();
        assert_eq!(
            regions_with(&hill, Sign::Negative),
            vec![(0.25 + step, 0.75 - step)]
        );

        // V'' = 4 pi^2 sin 2 pi x: non-negative on [0, 1/2], non-positive on [1/2, 1].
        let hill_well = hessian_sign_regions(&Builtin::HillWell, res).unwrap();
        assert_eq!(
            regions_with(&hill_well, Sign::Positive),
            vec![(step, 0.5 - step)]
        );
        assert_eq!(
            regions_with(&hill_well, Sign::Negative),
            vec![(0.5 + step, 1.0 - step)]
        );

        assert!(hessian_sign_regions(&Builtin::Well, 8).is_err());
    }
}
