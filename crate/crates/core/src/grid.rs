//! Periodic sample grids on the unit interval and complex signals living on them.
//!
//! Sample `l` sits at `x_l = l / L`. Frequencies are integer cycles per unit
//! interval; transforms return bins in FFT order, so bin `j` carries frequency
//! [`Grid::frequency`]`(j)`, which covers `-L/2 ..= L/2 - 1`.

use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    len: usize,
}

impl Grid {
    pub fn new(len: usize) -> Result<Self> {
        if len < 8 || !len.is_multiple_of(2) {
            return Err(Error::InvalidGrid(len));
        }
        Ok(Self { len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.len as f64
    }

    pub fn point(&self, l: usize) -> f64 {
        l as f64 / self.len as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |l| self.point(l))
    }

    /// Frequency (cycles per unit interval) of FFT bin `j`.
    pub fn frequency(&self, j: usize) -> i64 {
        let half = self.len / 2;
        if j < half {
            j as i64
        } else {
            j as i64 - self.len as i64
        }
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len).map(move |j| self.frequency(j))
    }
}

/// Displacement `x - y` wrapped into `[-1/2, 1/2)`.
pub fn wrapped_displacement(x: f64, y: f64) -> f64 {
    let d = x - y;
    d - (d + 0.5).floor()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Signal {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&self, factor: Complex64) -> Signal {
        Signal {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Circular shift: `out[l] = self[l - shift]`.
    pub fn circular_shift(&self, shift: usize) -> Signal {
        let len = self.len();
        let mut values = vec![Complex64::new(0.0, 0.0); len];
        for (l, v) in self.values.iter().enumerate() {
            values[(l + shift) % len] = *v;
        }
        Signal {
            grid: self.grid,
            values,
        }
    }

    pub fn ensure_grid(&self, grid: Grid) -> Result<()> {
        if self.grid != grid {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                actual: self.grid.len(),
            });
        }
        Ok(())
    }

    /// Writes `index,real,imag` rows after a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,real,imag")?;
        for (l, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{:e},{:e}", l, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Signal> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Csv("empty input".into()))??;
        if header.trim() != "index,real,imag" {
            return Err(Error::Csv(format!("unexpected header '{header}'")));
        }
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Csv(format!("row {row}: expected 3 fields")));
            }
            let index: usize = parse_field(fields[0], row)?;
            if index != values.len() {
                return Err(Error::Csv(format!("row {row}: index {index} out of order")));
            }
            let re: f64 = parse_field(fields[1], row)?;
            let im: f64 = parse_field(fields[2], row)?;
            values.push(Complex64::new(re, im));
        }
        let grid = Grid::new(values.len())?;
        Signal::new(grid, values)
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, row: usize) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("row {row}: cannot parse '{field}'")))
}

impl Add for &Signal {
    type Output = Signal;

    fn add(self, rhs: &Signal) -> Signal {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        Signal {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Signal {
    type Output = Signal;

    fn sub(self, rhs: &Signal) -> Signal {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        Signal {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<&Signal> for Complex64 {
    type Output = Signal;

    fn mul(self, rhs: &Signal) -> Signal {
        rhs.scale(self)
    }
}

/// Unitary DFT, `out_k = L^{-1/2} sum_l s_l e^{-2 pi i k l / L}`, bins in FFT order.
pub fn dft(s: &Signal) -> Signal {
    transform(s, false)
}

/// Inverse of [`dft`].
pub fn idft(s: &Signal) -> Signal {
    transform(s, true)
}

fn transform(s: &Signal, inverse: bool) -> Signal {
    let len = s.len();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    let mut values = s.values.clone();
    fft.process(&mut values);
    let norm = 1.0 / (len as f64).sqrt();
    values.iter_mut().for_each(|v| *v *= norm);
    Signal {
        grid: s.grid,
        values,
    }
}

/// Quadrature norm `(L^{-1} sum |s_l|^2)^{1/2}`, consistent with the continuum L² norm.
pub fn l2_norm(s: &Signal) -> f64 {
    let sum: f64 = s.values.iter().map(|v| v.norm_sqr()).sum();
    (sum / s.len() as f64).sqrt()
}

/// `l2_norm(u - v) / l2_norm(v)`.
pub fn rel_error(u: &Signal, v: &Signal) -> Result<f64> {
    u.ensure_grid(v.grid)?;
    let reference = l2_norm(v);
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(l2_norm(&(u - v)) / reference)
}
