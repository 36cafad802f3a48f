//! Discrete Gabor analysis and synthesis on the periodic grid.
//!
//! Coefficients use the phase-locked convention
//!
//! ```text
//! c(m, n) = sum_l f(l) conj(w(l - a n)) exp(-2 pi i (l - a n) m / M)
//! ```
//!
//! so the modulation is referenced to the centre of each atom. Sums are
//! unnormalized; only the signal grid uses unitary conventions.

use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, Signal};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest tolerated ratio between the window value at the antipode and its peak.
pub const PERIODIZATION_TOLERANCE: f64 = 1e-12;

/// Time shift `a` (samples) and channel count `M` on a grid of `L` samples,
/// tied to the semiclassical parameter `hbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborLattice {
    a: usize,
    channels: usize,
    len: usize,
    hbar: f64,
}

impl GaborLattice {
    /// An oversampled lattice (`M > a`), the only kind that can carry a frame.
    pub fn new(len: usize, a: usize, channels: usize, hbar: f64) -> Result<Self> {
        let lattice = Self::with_any_density(len, a, channels, hbar)?;
        if channels <= a {
            return Err(Error::InvalidLattice(format!(
                "density a/M = {a}/{channels} is not below 1"
            )));
        }
        Ok(lattice)
    }

    /// Same as [`GaborLattice::new`] without the oversampling requirement; used
    /// to study undersampled systems.
    pub fn with_any_density(len: usize, a: usize, channels: usize, hbar: f64) -> Result<Self> {
        Grid::new(len)?;
        if a == 0 || !len.is_multiple_of(a) {
            return Err(Error::InvalidLattice(format!(
                "a = {a} does not divide L = {len}"
            )));
        }
        if channels == 0 || !len.is_multiple_of(channels) {
            return Err(Error::InvalidLattice(format!(
                "M = {channels} does not divide L = {len}"
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidLattice(format!(
                "hbar = {hbar} must be positive"
            )));
        }
        Ok(Self {
            a,
            channels,
            len,
            hbar,
        })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `h = 2 pi hbar`.
    pub fn h(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.hbar
    }

    /// Number of time shifts, `L / a`.
    pub fn shifts(&self) -> usize {
        self.len / self.a
    }

    /// Phase-space density `a / M`; a frame requires it below 1.
    pub fn density(&self) -> f64 {
        self.a as f64 / self.channels as f64
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.len).expect("validated at construction")
    }
}

/// Sampled, periodized Gaussian `exp(-x^2 / (2 hbar))` normalized to unit discrete l2 norm.
pub fn gaussian_window(lattice: &GaborLattice) -> Result<Signal> {
    let hbar = lattice.hbar();
    let tail = (-0.125 / hbar).exp();
    if tail >= PERIODIZATION_TOLERANCE {
        return Err(Error::WindowNotPeriodizable(tail));
    }
    let len = lattice.len();
    let mut values: Vec<Complex64> = (0..len)
        .map(|l| {
            let k = l.min(len - l) as f64 / len as f64;
            let g = |d: f64| (-d * d / (2.0 * hbar)).exp();
            Complex64::new(g(k) + g(1.0 - k) + g(1.0 + k), 0.0)
        })
        .collect();
    let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
    Signal::new(lattice.grid(), values)
}

/// Gabor coefficients indexed by channel `m` and time shift `n`, `m` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientGrid {
    channels: usize,
    shifts: usize,
    values: Vec<Complex64>,
}

impl CoefficientGrid {
    pub fn zeros(channels: usize, shifts: usize) -> Self {
        Self {
            channels,
            shifts,
            values: vec![ZERO; channels * shifts],
        }
    }

    pub fn from_values(channels: usize, shifts: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != channels * shifts {
            return Err(Error::DimensionMismatch {
                expected: (channels, shifts),
                actual: (values.len(), 1),
            });
        }
        Ok(Self {
            channels,
            shifts,
            values,
        })
    }

    pub fn for_lattice(lattice: &GaborLattice) -> Self {
        Self::zeros(lattice.channels(), lattice.shifts())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shifts(&self) -> usize {
        self.shifts
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.channels, self.shifts)
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.values[m + n * self.channels]
    }

    pub fn set(&mut self, m: usize, n: usize, value: Complex64) {
        self.values[m + n * self.channels] = value;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Entries as `(m, n, value)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (i % self.channels, i / self.channels, *v))
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn ensure_lattice(&self, lattice: &GaborLattice) -> Result<()> {
        let expected = (lattice.channels(), lattice.shifts());
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dims(),
            });
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m,n,real,imag")?;
        for (m, n, v) in self.iter() {
            writeln!(out, "{},{},{:e},{:e}", m, n, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, channels: usize, shifts: usize) -> Result<Self> {
        let mut grid = Self::zeros(channels, shifts);
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Csv("empty input".into()))??;
        if header.trim() != "m,n,real,imag" {
            return Err(Error::Csv(format!("unexpected header '{header}'")));
        }
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Csv(format!("row {row}: malformed '{line}'"));
            if f.len() != 4 {
                return Err(bad());
            }
            let m: usize = f[0].parse().map_err(|_| bad())?;
            let n: usize = f[1].parse().map_err(|_| bad())?;
            let re: f64 = f[2].parse().map_err(|_| bad())?;
            let im: f64 = f[3].parse().map_err(|_| bad())?;
            if m >= channels || n >= shifts {
                return Err(bad());
            }
            grid.set(m, n, Complex64::new(re, im));
        }
        Ok(grid)
    }
}

fn check_window(window: &Signal, lattice: &GaborLattice) -> Result<()> {
    window.ensure_grid(lattice.grid())
}

/// Phase-locked DGT of `f` against `window`.
pub fn dgt(f: &Signal, window: &Signal, lattice: &GaborLattice) -> Result<CoefficientGrid> {
    f.ensure_grid(lattice.grid())?;
    check_window(window, lattice)?;
    let (len, a, channels) = (lattice.len(), lattice.a(), lattice.channels());
    let fft = plan(channels, false);
    let mut out = CoefficientGrid::for_lattice(lattice);
    let mut buf = vec![ZERO; channels];
    let (fv, wv) = (f.values(), window.values());
    for n in 0..lattice.shifts() {
        buf.iter_mut().for_each(|b| *b = ZERO);
        let offset = a * n;
        for (j, w) in wv.iter().enumerate() {
            buf[j % channels] += fv[(offset + j) % len] * w.conj();
        }
        fft.process(&mut buf);
        out.values[n * channels..(n + 1) * channels].copy_from_slice(&buf);
    }
    Ok(out)
}

/// Synthesis `f(l) = sum_{m,n} c(m,n) w(l - a n) exp(2 pi i (l - a n) m / M)`.
pub fn idgt(c: &CoefficientGrid, window: &Signal, lattice: &GaborLattice) -> Result<Signal> {
    c.ensure_lattice(lattice)?;
    check_window(window, lattice)?;
    let (len, a, channels) = (lattice.len(), lattice.a(), lattice.channels());
    let ifft = plan(channels, true);
    let mut out = vec![ZERO; len];
    let mut buf = vec![ZERO; channels];
    let wv = window.values();
    for n in 0..lattice.shifts() {
        let column = &c.values[n * channels..(n + 1) * channels];
        if column.iter().all(|v| *v == ZERO) {
            continue;
        }
        buf.copy_from_slice(column);
        ifft.process(&mut buf);
        let offset = a * n;
        for (j, w) in wv.iter().enumerate() {
            out[(offset + j) % len] += w * buf[j % channels];
        }
    }
    Signal::new(lattice.grid(), out)
}

fn plan(size: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(size)
    } else {
        planner.plan_fft_forward(size)
    }
}

/// The frame operator `S f = sum_{m,n} <f, g_{mn}> g_{mn}` in its Walnut form:
/// `(S f)(l) = M sum_q f(l + qM) G(l, q)` with
/// `G(l, q) = sum_n g(l - a n) conj(g(l + qM - a n))`.
#[derive(Debug, Clone)]
pub struct FrameOperator {
    len: usize,
    channels: usize,
    blocks: usize,
    table: Vec<Complex64>,
}

impl FrameOperator {
    pub fn new(window: &Signal, lattice: &GaborLattice) -> Result<Self> {
        check_window(window, lattice)?;
        let (len, a, channels) = (lattice.len(), lattice.a(), lattice.channels());
        let blocks = len / channels;
        let g = window.values();
        let mut table = vec![ZERO; len * blocks];
        for l in 0..len {
            for q in 0..blocks {
                let mut acc = ZERO;
                for n in 0..lattice.shifts() {
                    let shift = a * n;
                    acc += g[(l + len - shift) % len]
                        * g[(l + q * channels + len - shift) % len].conj();
                }
                table[l * blocks + q] = acc * channels as f64;
            }
        }
        Ok(Self {
            len,
            channels,
            blocks,
            table,
        })
    }

    pub fn apply(&self, f: &[Complex64], out: &mut [Complex64]) {
        for (l, o) in out.iter_mut().enumerate() {
            let row = &self.table[l * self.blocks..(l + 1) * self.blocks];
            *o = row
                .iter()
                .enumerate()
                .map(|(q, t)| f[(l + q * self.channels) % self.len] * t)
                .sum();
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Optimal frame constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    pub fn ratio(&self) -> f64 {
        self.lower / self.upper
    }
}

/// Optimal frame constants from the spectrum of the frame operator. `S` only
/// couples samples congruent mod `M`, so it splits into `M` Hermitian blocks of
/// size `L / M`, each diagonalized separately.
pub fn frame_bounds(window: &Signal, lattice: &GaborLattice) -> Result<FrameBounds> {
    let op = FrameOperator::new(window, lattice)?;
    let k = op.blocks;
    let mut lower = f64::INFINITY;
    let mut upper = 0.0f64;
    for r in 0..op.channels {
        let block = DMatrix::from_fn(k, k, |i, j| {
            op.table[(r + i * op.channels) * k + (j + k - i) % k]
        });
        for &e in block.symmetric_eigenvalues().iter() {
            lower = lower.min(e);
            upper = upper.max(e);
        }
    }
    Ok(FrameBounds {
        lower: lower.max(0.0),
        upper,
    })
}

const BOUND_TOL: f64 = 1e-10;
const MAX_POWER_ITERATIONS: usize = 200_000;

/// Matrix-free estimate of the same constants: power iteration for the upper
/// bound, then power iteration on `upper * I - S` for the lower one. Slow to
/// converge on nearly tight frames.
pub fn frame_bounds_iterative(window: &Signal, lattice: &GaborLattice) -> Result<FrameBounds> {
    let op = FrameOperator::new(window, lattice)?;
    let upper = power_iteration(op.len(), |v, out| op.apply(v, out), None);
    if upper <= 0.0 {
        return Ok(FrameBounds {
            lower: 0.0,
            upper: 0.0,
        });
    }
    let shifted = power_iteration(
        op.len(),
        |v, out| {
            op.apply(v, out);
            for (o, x) in out.iter_mut().zip(v) {
                *o = x * upper - *o;
            }
        },
        Some(upper),
    );
    let lower = (upper - shifted).max(0.0);
    Ok(FrameBounds { lower, upper })
}

/// Largest eigenvalue of a positive semidefinite Hermitian operator. Stops when
/// the residual `|Av - lambda v|` drops below `BOUND_TOL * scale` or the Rayleigh
/// quotient stagnates.
fn power_iteration(
    len: usize,
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    scale: Option<f64>,
) -> f64 {
    let mut v: Vec<Complex64> = (0..len)
        .map(|l| {
            let t = l as f64;
            Complex64::new(
                1.0 + 0.5 * (1.3 * t * t + 0.7 * t).cos(),
                0.5 * (0.9 * t * t + 0.1 * t).sin(),
            )
        })
        .collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut av = vec![ZERO; len];
    let mut lambda = 0.0;
    let mut stagnant = 0;
    for _ in 0..MAX_POWER_ITERATIONS {
        apply(&v, &mut av);
        let next: f64 = v.iter().zip(&av).map(|(x, y)| (x.conj() * y).re).sum();
        let reference = scale.unwrap_or(next.abs()).max(f64::MIN_POSITIVE);
        let residual = av
            .iter()
            .zip(&v)
            .map(|(y, x)| (y - x * next).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= BOUND_TOL * reference {
            return next;
        }
        if (next - lambda).abs() <= 1e-15 * reference {
            stagnant += 1;
            if stagnant >= 20 {
                return next;
            }
        } else {
            stagnant = 0;
        }
        lambda = next;
        let norm = av.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().zip(&av).for_each(|(x, y)| *x = y / norm);
    }
    lambda
}

/// Ratio `lower / upper` below which the system is not treated as a frame.
pub const FRAME_RATIO_FLOOR: f64 = 1e-10;

/// Canonical dual window `S^{-1} g`, solved by conjugate gradients.
pub fn dual_window(window: &Signal, lattice: &GaborLattice) -> Result<Signal> {
    let bounds = frame_bounds(window, lattice)?;
    if !(bounds.lower > FRAME_RATIO_FLOOR * bounds.upper) {
        return Err(Error::NotAFrame {
            lower: bounds.lower,
            upper: bounds.upper,
        });
    }
    let op = FrameOperator::new(window, lattice)?;
    let gamma = conjugate_gradient(&op, window.values(), 1e-15);
    Signal::new(lattice.grid(), gamma)
}

fn conjugate_gradient(op: &FrameOperator, rhs: &[Complex64], rel_tol: f64) -> Vec<Complex64> {
    let len = rhs.len();
    let dot = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
        x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
    };
    let rhs_norm = dot(rhs, rhs).re.sqrt();
    let mut x = vec![ZERO; len];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![ZERO; len];
    let mut rr = dot(&r, &r).re;
    for _ in 0..(10 * len).max(100) {
        if rr.sqrt() <= rel_tol * rhs_norm {
            break;
        }
        op.apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap).re;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += pi * alpha);
        r.iter_mut()
            .zip(&ap)
            .for_each(|(ri, api)| *ri -= api * alpha);
        let rr_next = dot(&r, &r).re;
        let beta = rr_next / rr;
        p.iter_mut()
            .zip(&r)
            .for_each(|(pi, ri)| *pi = ri + *pi * beta);
        rr = rr_next;
    }
    x
}

/// A Gaussian window, its canonical dual and the lattice they live on.
#[derive(Debug, Clone)]
pub struct GaborSystem {
    lattice: GaborLattice,
    window: Signal,
    dual: Signal,
}

impl GaborSystem {
    pub fn new(lattice: GaborLattice) -> Result<Self> {
        let window = gaussian_window(&lattice)?;
        Self::with_window(lattice, window)
    }

    pub fn with_window(lattice: GaborLattice, window: Signal) -> Result<Self> {
        let dual = dual_window(&window, &lattice)?;
        Ok(Self {
            lattice,
            window,
            dual,
        })
    }

    pub fn lattice(&self) -> &GaborLattice {
        &self.lattice
    }

    pub fn window(&self) -> &Signal {
        &self.window
    }

    pub fn dual(&self) -> &Signal {
        &self.dual
    }

    pub fn grid(&self) -> Grid {
        self.lattice.grid()
    }

    /// Coefficients against the dual window.
    pub fn analyze(&self, f: &Signal) -> Result<CoefficientGrid> {
        dgt(f, &self.dual, &self.lattice)
    }

    /// Superposition of primary-window atoms.
    pub fn synth(&self, c: &CoefficientGrid) -> Result<Signal> {
        idgt(c, &self.window, &self.lattice)
    }

    /// Coefficients against the primary window, for frame inequalities.
    pub fn analyze_primary(&self, f: &Signal) -> Result<CoefficientGrid> {
        dgt(f, &self.window, &self.lattice)
    }

    pub fn synth_dual(&self, c: &CoefficientGrid) -> Result<Signal> {
        idgt(c, &self.dual, &self.lattice)
    }
}

/// Zeroes every entry with `|c| <= eta`; returns the surviving `(m, n)` indices.
pub fn threshold(c: &CoefficientGrid, eta: f64) -> (CoefficientGrid, Vec<(usize, usize)>) {
    assert!(eta >= 0.0, "threshold must be non-negative");
    let mut out = c.clone();
    let mut kept = Vec::new();
    for (i, v) in out.values.iter_mut().enumerate() {
        if v.norm() > eta {
            kept.push((i % c.channels, i / c.channels));
        } else {
            *v = ZERO;
        }
    }
    (out, kept)
}
