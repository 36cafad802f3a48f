//! Experiment definitions, the shipped presets, and the runner that writes
//! state, reference and coefficient CSVs plus a `summary.txt`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::beam::DEFAULT_TOL;
use crate::datum;
use crate::error::{Error, Result};
use crate::gabor::{gaussian_window, GaborLattice, GaborSystem};
use crate::grid::{rel_error, Signal};
use crate::hamiltonian::Builtin;
use crate::propagator::{
    duhamel_order_probe, evolve, EvolveConfig, OrderFit, ParametrixRun, ProbeCase, ReinitPolicy,
};
use crate::reference;

pub const PRESETS: [(&str, &str); 5] = [
    ("well", include_str!("../presets/well.toml")),
    ("hill", include_str!("../presets/hill.toml")),
    ("hill_well", include_str!("../presets/hill_well.toml")),
    ("free", include_str!("../presets/free.toml")),
    ("order_probe", include_str!("../presets/order_probe.toml")),
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    /// `e^{-25 (x - 1/2)^2} e^{i tau0(x) / hbar}`.
    #[default]
    Focusing,
    /// Focusing datum times `e^{-sigma (x - centre)^2}`.
    Windowed {
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_centre")]
        centre: f64,
    },
    /// Focusing datum shifted by half a period.
    Shifted,
}

fn default_sigma() -> f64 {
    200.0
}

fn default_centre() -> f64 {
    0.5
}

impl DatumSpec {
    pub fn windowed() -> Self {
        DatumSpec::Windowed {
            sigma: default_sigma(),
            centre: default_centre(),
        }
    }

    pub fn sample(&self, lattice: &GaborLattice) -> Signal {
        let (grid, hbar) = (lattice.grid(), lattice.hbar());
        match *self {
            DatumSpec::Focusing => datum::focusing_datum(grid, hbar),
            DatumSpec::Windowed { sigma, centre } => {
                datum::windowed_datum(grid, hbar, sigma, centre)
            }
            DatumSpec::Shifted => datum::shifted_datum(grid, hbar),
        }
    }

    fn label(&self) -> String {
        match self {
            DatumSpec::Focusing => "focusing".into(),
            DatumSpec::Windowed { sigma, centre } => {
                format!("windowed(sigma={sigma}, centre={centre})")
            }
            DatumSpec::Shifted => "shifted".into(),
        }
    }
}

/// One resolution of an order probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeLevel {
    pub hbar: f64,
    #[serde(rename = "L")]
    pub len: usize,
    pub a: usize,
    #[serde(rename = "M")]
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(rename = "L")]
    pub len: usize,
    pub hbar: f64,
    pub a: usize,
    #[serde(rename = "M")]
    pub channels: usize,
    pub potential: String,
    #[serde(default)]
    pub potential_param: Option<f64>,
    #[serde(default)]
    pub datum: DatumSpec,
    pub eta: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "no_reinit")]
    pub reinit: ReinitPolicy,
    #[serde(default)]
    pub output_times: Vec<f64>,
    pub reference_dt: f64,
    #[serde(default = "yes")]
    pub reference: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// When present the scenario runs an order probe over these levels
    /// instead of a single evolution.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probe: Vec<ProbeLevel>,
}

fn no_reinit() -> ReinitPolicy {
    ReinitPolicy::None
}

fn yes() -> bool {
    true
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl Scenario {
    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Config(format!("unknown preset '{name}'")))?;
        Self::from_toml(text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            let presets: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::Config(format!(
                "'{}' is neither a preset ({}) nor a readable file: {e}",
                path.display(),
                presets.join(", ")
            ))
        })?;
        Self::from_toml(&text)
    }

    /// A preset name or a path to a config file.
    pub fn resolve(source: &str) -> Result<Self> {
        if PRESETS.iter().any(|(n, _)| *n == source) {
            Self::preset(source)
        } else {
            Self::load(Path::new(source))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn is_probe(&self) -> bool {
        !self.probe.is_empty()
    }

    pub fn lattice(&self) -> Result<GaborLattice> {
        GaborLattice::new(self.len, self.a, self.channels, self.hbar)
    }

    pub fn potential(&self) -> Result<Builtin> {
        Builtin::from_name(&self.potential, self.potential_param)
    }

    pub fn datum(&self) -> Result<Signal> {
        Ok(self.datum.sample(&self.lattice()?))
    }

    pub fn evolve_config(&self) -> EvolveConfig {
        EvolveConfig::new(self.horizon, self.eta)
            .with_reinit(self.reinit)
            .with_output_times(self.output_times.clone())
            .with_tol(self.tol)
    }

    /// Checks every component precondition without running anything.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|e| self.context(e))
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        gaussian_window(&self.lattice()?)?;
        self.potential()?;
        if !(self.eta >= 0.0) {
            return bad(format!("eta {} must be non-negative", self.eta));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("T {} must be positive", self.horizon));
        }
        if let Some(t) = self
            .output_times
            .iter()
            .find(|t| !(0.0..=self.horizon).contains(*t))
        {
            return bad(format!("output time {t} outside [0, {}]", self.horizon));
        }
        if !(self.reference_dt > 0.0 && self.reference_dt <= self.horizon) {
            return bad(format!(
                "reference_dt {} must lie in (0, T]",
                self.reference_dt
            ));
        }
        if !(1e-13..=1e-6).contains(&self.tol) {
            return bad(format!("tol {} outside [1e-13, 1e-6]", self.tol));
        }
        if let DatumSpec::Windowed { sigma, centre } = self.datum {
            if !(sigma > 0.0) || !(0.0..1.0).contains(&centre) {
                return bad(format!(
                    "windowed datum needs sigma > 0 and centre in [0, 1), got {sigma}, {centre}"
                ));
            }
        }
        if self.is_probe() {
            if self.probe.len() < 3 {
                return bad("an order probe needs at least 3 levels".into());
            }
            if self.reinit != ReinitPolicy::None {
                return bad("order probes run without reinitialization".into());
            }
            for level in &self.probe {
                let lattice = GaborLattice::new(level.len, level.a, level.channels, level.hbar)?;
                gaussian_window(&lattice)?;
            }
        }
        Ok(())
    }

    fn context(&self, source: Error) -> Error {
        Error::Scenario {
            name: self.name.clone(),
            source: Box::new(source),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Evolution {
        run: ParametrixRun,
        /// Reference solutions at the output times, when requested.
        references: Vec<(f64, Signal)>,
        /// `(t, rel_error)` at every output time with a reference.
        errors: Vec<(f64, f64)>,
    },
    Probe(OrderFit),
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: Scenario,
    pub outcome: Outcome,
    pub parametrix_time: Duration,
    pub reference_time: Duration,
}

impl Report {
    pub fn error_at(&self, t: f64) -> Option<f64> {
        match &self.outcome {
            Outcome::Evolution { errors, .. } => {
                errors.iter().find(|(s, _)| *s == t).map(|(_, e)| *e)
            }
            Outcome::Probe(_) => None,
        }
    }

    pub fn final_error(&self) -> Option<f64> {
        self.error_at(self.scenario.horizon)
    }

    pub fn parametrix(&self) -> Option<&ParametrixRun> {
        match &self.outcome {
            Outcome::Evolution { run, .. } => Some(run),
            Outcome::Probe(_) => None,
        }
    }

    pub fn summary(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let mut line = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("string write");
        line("preset", s.name.clone());
        line("L", s.len.to_string());
        line("hbar", format!("{:e}", s.hbar));
        line("h", format!("{:e}", 2.0 * std::f64::consts::PI * s.hbar));
        line("a", s.a.to_string());
        line("M", s.channels.to_string());
        line("potential", s.potential.clone());
        line("datum", s.datum.label());
        line("eta", format!("{:e}", s.eta));
        line("T", s.horizon.to_string());
        line("reinit", s.reinit.to_string());
        match &self.outcome {
            Outcome::Evolution { run, errors, .. } => {
                let retained: Vec<String> = run
                    .segments
                    .iter()
                    .map(|g| g.retained.to_string())
                    .collect();
                line("atoms_retained", retained.join(" "));
                line("segments", run.segments.len().to_string());
                let bounds: Vec<String> = run.boundaries().iter().map(|b| b.to_string()).collect();
                line("segment_boundaries", bounds.join(" "));
                for (t, e) in errors {
                    line(&format!("rel_error@t={t}"), format!("{e:e}"));
                }
                for w in &run.warnings {
                    line("warning", w.clone());
                }
            }
            Outcome::Probe(fit) => {
                for (k, level) in s.probe.iter().enumerate() {
                    line(&format!("level{k}.hbar"), format!("{:e}", level.hbar));
                    line(&format!("level{k}.L"), level.len.to_string());
                    line(
                        &format!("level{k}.rel_error"),
                        format!("{:e}", fit.errors[k]),
                    );
                    line(
                        &format!("level{k}.reference_error"),
                        format!("{:e}", fit.reference_errors[k]),
                    );
                }
                line("slope", format!("{}", fit.slope));
            }
        }
        line(
            "parametrix_seconds",
            format!("{:.3}", self.parametrix_time.as_secs_f64()),
        );
        line(
            "reference_seconds",
            format!("{:.3}", self.reference_time.as_secs_f64()),
        );
        out
    }

    /// Writes `state_t<T>.csv`, `reference_t<T>.csv`, `coeffs_seg<k>.csv` and
    /// `summary.txt` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        if let Outcome::Evolution {
            run, references, ..
        } = &self.outcome
        {
            for (t, u) in &run.outputs {
                u.write_csv(BufWriter::new(File::create(
                    dir.join(format!("state_t{t}.csv")),
                )?))?;
            }
            for (t, u) in references {
                u.write_csv(BufWriter::new(File::create(
                    dir.join(format!("reference_t{t}.csv")),
                )?))?;
            }
            for (k, seg) in run.segments.iter().enumerate() {
                seg.coefficients.write_csv(BufWriter::new(File::create(
                    dir.join(format!("coeffs_seg{k}.csv")),
                )?))?;
            }
        }
        fs::write(dir.join("summary.txt"), self.summary())?;
        Ok(())
    }
}

/// Runs the parametrix (or the order probe) and, if enabled, the reference.
pub fn run(scenario: &Scenario) -> Result<Report> {
    scenario.validate()?;
    execute(scenario).map_err(|e| scenario.context(e))
}

fn execute(s: &Scenario) -> Result<Report> {
    let potential = s.potential()?;
    if s.is_probe() {
        let clock = Instant::now();
        let cases = s
            .probe
            .iter()
            .map(|level| {
                let lattice = GaborLattice::new(level.len, level.a, level.channels, level.hbar)?;
                Ok(ProbeCase {
                    datum: s.datum.sample(&lattice),
                    system: GaborSystem::new(lattice)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let fit = duhamel_order_probe(&potential, &cases, s.horizon, s.eta, s.reference_dt, s.tol)?;
        return Ok(Report {
            scenario: s.clone(),
            outcome: Outcome::Probe(fit),
            parametrix_time: clock.elapsed(),
            reference_time: Duration::ZERO,
        });
    }

    let lattice = s.lattice()?;
    let f0 = s.datum.sample(&lattice);
    let clock = Instant::now();
    let system = GaborSystem::new(lattice)?;
    let run = evolve(&f0, &system, &potential, &s.evolve_config())?;
    let parametrix_time = clock.elapsed();

    let clock = Instant::now();
    let mut references = Vec::new();
    let mut errors = Vec::new();
    if s.reference {
        let times: Vec<f64> = run.outputs.iter().map(|(t, _)| *t).collect();
        let exact = reference::solve_at_times(&f0, &potential, &times, s.reference_dt, s.hbar)?;
        for ((t, u), v) in run.outputs.iter().zip(exact) {
            errors.push((*t, rel_error(u, &v)?));
            references.push((*t, v));
        }
    }
    Ok(Report {
        scenario: s.clone(),
        outcome: Outcome::Evolution {
            run,
            references,
            errors,
        },
        parametrix_time,
        reference_time: clock.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_and_validate() {
        for (name, _) in PRESETS {
            let s = Scenario::preset(name).unwrap();
            assert_eq!(s.name, name);
            assert_eq!(s.is_probe(), name == "order_probe");
        }
        let hill = Scenario::preset("hill").unwrap();
        assert_eq!(hill.reinit, ReinitPolicy::Uniform(8));
        assert_eq!(hill.horizon, 2.0);
        assert!(matches!(Scenario::preset("valley"), Err(Error::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let mut s = Scenario::preset("well").unwrap();
        s.datum = DatumSpec::windowed();
        s.reinit = ReinitPolicy::Event(0.3);
        assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn invalid_configs_fail_eagerly() {
        let base = Scenario::preset("free").unwrap();
        type Edit = Box<dyn Fn(&mut Scenario)>;
        let cases: Vec<Edit> = vec![
            Box::new(|s| s.eta = -1.0),
            Box::new(|s| s.horizon = 0.0),
            Box::new(|s| s.output_times = vec![2.0]),
            Box::new(|s| s.reference_dt = 1.0),
            Box::new(|s| s.tol = 1e-3),
            Box::new(|s| s.a = 300),
            Box::new(|s| s.potential = "valley".into()),
            Box::new(|s| s.hbar = 10.0),
        ];
        for mutate in cases {
            let mut s = base.clone();
            mutate(&mut s);
            assert!(matches!(s.validate(), Err(Error::Scenario { .. })), "{s:?}");
        }
        let unknown_key = format!("bogus = 1\n{}", base.to_toml());
        assert!(matches!(
            Scenario::from_toml(&unknown_key),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn small_run_writes_outputs() {
        let mut s = Scenario::preset("free").unwrap();
        s.len = 256;
        s.a = 8;
        s.channels = 64;
        s.hbar = 1.0 / (128.0 * std::f64::consts::PI);
        s.horizon = 0.1;
        s.output_times = vec![0.0, 0.1];
        s.reference_dt = 1e-3;
        let report = run(&s).unwrap();
        assert!(report.final_error().unwrap() < 0.05);
        let dir = tempfile::tempdir().unwrap();
        report.write(dir.path()).unwrap();
        for f in [
            "state_t0.csv",
            "state_t0.1.csv",
            "reference_t0.1.csv",
            "coeffs_seg0.csv",
            "summary.txt",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        for key in [
            "preset = free",
            "L = 256",
            "eta = ",
            "atoms_retained = ",
            "segments = 1",
            "rel_error@t=0.1 = ",
        ] {
            assert!(summary.contains(key), "{key} missing from\n{summary}");
        }
    }
}
