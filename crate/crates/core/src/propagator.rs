//! Order-zero Gaussian-beam parametrix: expand the datum in the Gabor frame,
//! move every retained atom along its beam, and superpose the beams.
//! Optionally the expansion is refreshed at reinitialization times.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{self, symmetric_index, BeamState, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::gabor::{threshold, CoefficientGrid, GaborSystem};
use crate::grid::{rel_error, Grid, Signal};
use crate::hamiltonian::Potential;
use crate::reference;
use crate::synthesis::accumulate_beam;

/// Atoms per work unit. Fixed so the summation order never depends on the
/// thread count.
const CHUNK: usize = 64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ReinitPolicy {
    None,
    /// Re-expand whenever any retained beam's `Im Gamma` drops below the value.
    Event(f64),
    /// Re-expand at `k` uniformly spaced times.
    Uniform(usize),
}

impl fmt::Display for ReinitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReinitPolicy::None => write!(f, "none"),
            ReinitPolicy::Event(r) => write!(f, "event:{r}"),
            ReinitPolicy::Uniform(k) => write!(f, "uniform:{k}"),
        }
    }
}

impl FromStr for ReinitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("reinit policy '{s}'"));
        match s.split_once(':') {
            None if s == "none" => Ok(ReinitPolicy::None),
            Some(("uniform", k)) => {
                let k: usize = k.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(bad());
                }
                Ok(ReinitPolicy::Uniform(k))
            }
            Some(("event", r)) => {
                let r: f64 = r.parse().map_err(|_| bad())?;
                if !(r > 0.0 && r < 1.0) {
                    return Err(bad());
                }
                Ok(ReinitPolicy::Event(r))
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for ReinitPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ReinitPolicy> for String {
    fn from(p: ReinitPolicy) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub horizon: f64,
    pub eta: f64,
    pub reinit: ReinitPolicy,
    /// Times in `[0, horizon]` at which to report the parametrix; the horizon
    /// is always included.
    pub output_times: Vec<f64>,
    pub tol: f64,
}

impl EvolveConfig {
    pub fn new(horizon: f64, eta: f64) -> Self {
        Self {
            horizon,
            eta,
            reinit: ReinitPolicy::None,
            output_times: vec![horizon],
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_reinit(mut self, reinit: ReinitPolicy) -> Self {
        self.reinit = reinit;
        self
    }

    pub fn with_output_times(mut self, times: Vec<f64>) -> Self {
        self.output_times = times;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn normalized_times(&self) -> Result<Vec<f64>> {
        let mut times = self.output_times.clone();
        times.push(self.horizon);
        if times.iter().any(|&t| !(0.0..=self.horizon).contains(&t)) {
            return Err(Error::InvalidArgument(format!(
                "output times must lie in [0, {}]",
                self.horizon
            )));
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        Ok(times)
    }
}

/// One expansion/propagation cycle.
#[derive(Debug, Clone)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    /// Thresholded coefficients of the state at `start`.
    pub coefficients: CoefficientGrid,
    pub retained: usize,
}

#[derive(Debug, Clone)]
pub struct ParametrixRun {
    pub segments: Vec<Segment>,
    pub outputs: Vec<(f64, Signal)>,
    pub warnings: Vec<String>,
}

impl ParametrixRun {
    pub fn output_at(&self, t: f64) -> Option<&Signal> {
        self.outputs.iter().find(|(s, _)| *s == t).map(|(_, u)| u)
    }

    pub fn final_output(&self) -> &Signal {
        &self.outputs.last().expect("horizon is always an output").1
    }

    pub fn boundaries(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.segments.iter().map(|s| s.start).collect();
        if let Some(last) = self.segments.last() {
            b.push(last.end);
        }
        b
    }
}

/// A retained lattice atom turned into a beam.
#[derive(Debug, Clone, Copy)]
struct Atom {
    m: usize,
    n: usize,
    state: BeamState,
    weight: Complex64,
}

/// Beams for the nonzero entries of a phase-locked coefficient grid.
///
/// A phase-locked atom equals `kappa e^{-i delta0 / hbar}` times the
/// continuum-normalized coherent state, where `kappa = g(0) (pi hbar)^{1/4}`
/// matches the discrete window normalization.
fn atoms(c: &CoefficientGrid, sys: &GaborSystem) -> Result<Vec<Atom>> {
    let lattice = sys.lattice();
    let hbar = lattice.hbar();
    let kappa = sys.window().values()[0].re * (std::f64::consts::PI * hbar).powf(0.25);
    c.iter()
        .filter(|(_, _, v)| *v != ZERO)
        .map(|(m, n, v)| {
            let (ms, ns) = symmetric_index(m, n, lattice);
            let state = beam::initial_state(ns, ms, lattice)?;
            let weight = v * kappa * Complex64::from_polar(1.0, -state.delta / hbar);
            Ok(Atom {
                m,
                n,
                state,
                weight,
            })
        })
        .collect()
}

fn beam_error(atom: &Atom, source: Error) -> Error {
    Error::Beam {
        m: atom.m,
        n: atom.n,
        source: Box::new(source),
    }
}

/// Superposition of all beams at each of `local_times` (relative to the
/// segment start).
fn superpose(
    atoms: &[Atom],
    potential: &dyn Potential,
    local_times: &[f64],
    hbar: f64,
    grid: Grid,
    tol: f64,
) -> Result<Vec<Signal>> {
    let len = grid.len();
    let partials: Vec<Vec<Vec<Complex64>>> = atoms
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![vec![ZERO; len]; local_times.len()];
            for atom in chunk {
                let states = beam::propagate_to_times(&atom.state, potential, local_times, tol)
                    .map_err(|e| beam_error(atom, e))?;
                for (buf, s) in acc.iter_mut().zip(&states) {
                    accumulate_beam(s, atom.weight, hbar, buf).map_err(|e| beam_error(atom, e))?;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut totals = vec![vec![ZERO; len]; local_times.len()];
    for partial in partials {
        for (total, part) in totals.iter_mut().zip(partial) {
            total.iter_mut().zip(part).for_each(|(t, p)| *t += p);
        }
    }
    totals.into_iter().map(|v| Signal::new(grid, v)).collect()
}

/// Earliest width event among the atoms within `span`, if any.
fn first_event(
    atoms: &[Atom],
    potential: &dyn Potential,
    span: f64,
    threshold: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let times: Vec<Option<f64>> = atoms
        .par_iter()
        .map(|atom| {
            beam::propagate(&atom.state, potential, span, tol, Some(threshold))
                .map(|traj| traj.event.map(|e| e.time))
                .map_err(|e| beam_error(atom, e))
        })
        .collect::<Result<_>>()?;
    Ok(times.into_iter().flatten().min_by(f64::total_cmp))
}

/// The thresholded parametrix `U_eta(t) f0`, with reinitialization per `config.reinit`.
pub fn evolve(
    f0: &Signal,
    sys: &GaborSystem,
    potential: &dyn Potential,
    config: &EvolveConfig,
) -> Result<ParametrixRun> {
    let horizon = config.horizon;
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must be positive"
        )));
    }
    if !(config.eta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eta {} must be non-negative",
            config.eta
        )));
    }
    f0.ensure_grid(sys.grid())?;
    let times = config.normalized_times()?;
    let grid = sys.grid();
    let hbar = sys.lattice().hbar();
    let min_segment = 1e-6 * horizon;

    let mut run = ParametrixRun {
        segments: Vec::new(),
        outputs: Vec::with_capacity(times.len()),
        warnings: Vec::new(),
    };
    let mut state = f0.clone();
    let mut start = 0.0;
    let mut pending = times.as_slice();

    loop {
        let (coefficients, kept) = threshold(&sys.analyze(&state)?, config.eta);
        let atoms = atoms(&coefficients, sys)?;
        let end = match config.reinit {
            ReinitPolicy::None => horizon,
            ReinitPolicy::Uniform(k) => {
                let index = run.segments.len() + 1;
                if index >= k {
                    horizon
                } else {
                    horizon * index as f64 / k as f64
                }
            }
            ReinitPolicy::Event(threshold) => {
                match first_event(&atoms, potential, horizon - start, threshold, config.tol)? {
                    Some(dt) if start + dt < horizon => {
                        if dt < min_segment {
                            return Err(Error::InvalidArgument(format!(
                                "reinitialization stalled at t = {start}: beams spread within {dt:e}"
                            )));
                        }
                        start + dt
                    }
                    _ => horizon,
                }
            }
        };
        run.segments.push(Segment {
            start,
            end,
            coefficients,
            retained: kept.len(),
        });

        if atoms.is_empty() {
            run.warnings.push(format!(
                "no coefficient above eta = {} at t = {start}; output is zero",
                config.eta
            ));
            for &t in pending {
                run.outputs.push((t, Signal::zeros(grid)));
            }
            if let Some(last) = run.segments.last_mut() {
                last.end = horizon;
            }
            return Ok(run);
        }

        let split = pending
            .iter()
            .position(|&t| t > end)
            .unwrap_or(pending.len());
        let (here, rest) = pending.split_at(split);
        let mut local: Vec<f64> = here.iter().map(|t| (t - start).max(0.0)).collect();
        let continues = end < horizon;
        if continues && here.last() != Some(&end) {
            local.push(end - start);
        }
        let mut signals = superpose(&atoms, potential, &local, hbar, grid, config.tol)?;
        for (&t, u) in here.iter().zip(&signals) {
            run.outputs.push((t, u.clone()));
        }
        pending = rest;
        if !continues {
            return Ok(run);
        }
        state = signals.pop().expect("segment end is always evaluated");
        start = end;
    }
}

/// Parametrix at `t = 0`: `synth(threshold(analyze(f0), eta))`.
pub fn reconstruct(f0: &Signal, sys: &GaborSystem, eta: f64) -> Result<Signal> {
    let (c, _) = threshold(&sys.analyze(f0)?, eta);
    sys.synth(&c)
}

/// One resolution level of an order probe.
#[derive(Debug, Clone)]
pub struct ProbeCase {
    pub system: GaborSystem,
    pub datum: Signal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub hbars: Vec<f64>,
    pub errors: Vec<f64>,
    pub reference_errors: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln hbar`.
    pub slope: f64,
}

/// Relative parametrix error at `horizon` for each case, and the fitted
/// power of `hbar`.
pub fn duhamel_order_probe(
    potential: &dyn Potential,
    cases: &[ProbeCase],
    horizon: f64,
    eta: f64,
    reference_dt: f64,
    tol: f64,
) -> Result<OrderFit> {
    if cases.len() < 3 {
        return Err(Error::InvalidArgument(
            "order probe needs at least 3 hbar values".into(),
        ));
    }
    let hbars: Vec<f64> = cases.iter().map(|c| c.system.lattice().hbar()).collect();
    let ratio = hbars[1] / hbars[0];
    if !(ratio > 0.0 && ratio != 1.0)
        || hbars
            .windows(2)
            .any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9)
    {
        return Err(Error::InvalidArgument(format!(
            "hbar values {hbars:?} are not a geometric progression"
        )));
    }
    if potential.is_quadratic() {
        return Err(Error::DegenerateFit(format!(
            "potential '{}' is quadratic: the beam remainder vanishes",
            potential.name()
        )));
    }
    let config = EvolveConfig::new(horizon, eta).with_tol(tol);
    let mut errors = Vec::with_capacity(cases.len());
    let mut reference_errors = Vec::with_capacity(cases.len());
    for case in cases {
        let hbar = case.system.lattice().hbar();
        let run = evolve(&case.datum, &case.system, potential, &config)?;
        let (exact, estimate) =
            reference::solve_with_estimate(&case.datum, potential, horizon, reference_dt, hbar)?;
        errors.push(rel_error(run.final_output(), &exact)?);
        reference_errors.push(estimate);
    }
    if let Some(i) = (0..errors.len()).find(|&i| errors[i] <= 10.0 * reference_errors[i]) {
        return Err(Error::DegenerateFit(format!(
            "error {:e} at hbar = {:e} is within 10x of the reference accuracy {:e}",
            errors[i], hbars[i], reference_errors[i]
        )));
    }
    let xs: Vec<f64> = hbars.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(OrderFit {
        hbars,
        errors,
        reference_errors,
        slope,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
