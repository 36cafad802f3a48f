//! Beam trajectories: conserved quantities, reversibility, closed forms and
//! exactness for quadratic potentials.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use gabor_beam::beam::{
    initial_state, propagate, propagate_backward, propagate_to_times, symmetric_index, BeamState,
};
use gabor_beam::gabor::GaborLattice;
use gabor_beam::grid::{rel_error, Grid};
use gabor_beam::hamiltonian::{Builtin, Potential};
use gabor_beam::reference;
use gabor_beam::synthesis::{amplitude, evaluate_beam};

const HBAR: f64 = 1.0 / (256.0 * PI);
const TOL: f64 = gabor_beam::beam::DEFAULT_TOL;

const BUILTINS: [Builtin; 5] = [
    Builtin::Free,
    Builtin::Well,
    Builtin::Hill,
    Builtin::HillWell,
    Builtin::HarmonicLocal { omega: 2.0 * PI },
];

fn lattice() -> GaborLattice {
    GaborLattice::new(1024, 32, 256, HBAR).unwrap()
}

fn atom(m: usize, n: usize) -> BeamState {
    let lattice = lattice();
    let (ms, ns) = symmetric_index(m, n, &lattice);
    initial_state(ns, ms, &lattice).unwrap()
}

#[test]
fn free_particle_closed_form() {
    let s0 = BeamState {
        t: 0.0,
        x: 0.2,
        p: 0.5,
        m: Complex64::new(1.0, 0.0),
        n: Complex64::new(0.0, 1.0),
        delta: 0.05,
        branch: 0,
    };
    let s = *propagate(&s0, &Builtin::Free, 1.0, TOL, None)
        .unwrap()
        .last();
    assert!((s.x - 0.7).abs() < 1e-12 && (s.p - 0.5).abs() < 1e-12);
    assert!((s.m - Complex64::new(1.0, 1.0)).norm() < 1e-12);
    assert!((s.n - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    assert!((s.delta - 0.175).abs() < 1e-12);
    assert!((s.gamma().unwrap() - Complex64::new(0.5, 0.5)).norm() < 1e-12);
}

#[test]
fn lattice_atom_initial_values() {
    let lattice = GaborLattice::new(1024, 8, 256, HBAR).unwrap();
    let s = initial_state(64, 1, &lattice).unwrap();
    assert!((s.x - 0.5).abs() < 1e-15);
    assert!((s.p - 1.0 / 32.0).abs() < 1e-15);
    assert!((s.delta - s.x * s.p / 2.0).abs() < 1e-15);
}

/// `V = omega^2 (x - 1/2)^2 / 2` from `(x0, p0)`.
fn oscillator(x0: f64, p0: f64, omega: f64, t: f64) -> (f64, f64, Complex64, Complex64) {
    let (c, s) = ((omega * t).cos(), (omega * t).sin());
    let x = 0.5 + (x0 - 0.5) * c + p0 / omega * s;
    let p = -(x0 - 0.5) * omega * s + p0 * c;
    let m = Complex64::new(c, s / omega);
    let n = Complex64::new(-omega * s, c);
    (x, p, m, n)
}

#[test]
fn error_shrinks_with_tolerance() {
    let omega = 2.0 * PI;
    let v = Builtin::HarmonicLocal { omega };
    let s0 = BeamState::coherent(0.45, 0.3);
    let (x, p, m, n) = oscillator(0.45, 0.3, omega, 1.3);
    let errors: Vec<f64> = [1e-6, 1e-8, 1e-10, 1e-12]
        .iter()
        .map(|&tol| {
            let s = propagate_to_times(&s0, &v, &[1.3], tol).unwrap()[0];
            (s.x - x)
                .abs()
                .max((s.p - p).abs())
                .max((s.m - m).norm())
                .max((s.n - n).norm())
        })
        .collect();
    for (w, tol) in errors.windows(2).zip([1e-6, 1e-8, 1e-10]) {
        assert!(w[1] < w[0], "{errors:?}");
        assert!(w[0] < 1e3 * tol, "{errors:?}");
    }
}

#[test]
fn step_count_scales_like_fifth_order() {
    let v = Builtin::Well;
    let s0 = atom(7, 3);
    let steps = |tol: f64| propagate(&s0, &v, 2.0, tol, None).unwrap().samples.len() as f64;
    // Steps grow like tol^{-1/5}: a factor 2^5 in tol doubles them.
    let ratio = steps(1e-8 / 32.0) / steps(1e-8);
    assert!((1.6..2.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn hill_top_beam_triggers_width_event() {
    let s0 = BeamState::coherent(0.5, 0.0);
    let traj = propagate(&s0, &Builtin::Hill, 4.0, TOL, Some(0.05)).unwrap();
    let event = traj.event.expect("beam spreads on the hill");
    let last = traj.last();
    assert!((last.t - event.time).abs() < 1e-12);
    assert!((last.width_parameter().unwrap() - 0.05).abs() < 1e-6);
    // Near the top Im Gamma ~ e^{-4 pi t} / const.
    assert!(event.time > 0.1 && event.time < 0.5, "{}", event.time);
}

#[test]
fn quadratic_beams_solve_the_equation() {
    let grid = Grid::new(1024).unwrap();
    let one = Complex64::new(1.0, 0.0);
    let cases = [
        (Builtin::Free, BeamState::coherent(0.3, 0.8), 1.0),
        (
            Builtin::HarmonicLocal { omega: 2.0 * PI },
            BeamState::coherent(0.5, 0.2),
            0.7,
        ),
    ];
    for (v, s0, t) in cases {
        let u0 = evaluate_beam(&s0, one, HBAR, grid).unwrap();
        let s = propagate_to_times(&s0, &v, &[t], 1e-12).unwrap()[0];
        let beam = evaluate_beam(&s, one, HBAR, grid).unwrap();
        let exact = reference::solve(&u0, &v, t, 2e-5, HBAR).unwrap();
        let err = rel_error(&beam, &exact).unwrap();
        assert!(err < 1e-5, "{}: {err:e}", v.name());
    }
}

#[test]
fn amplitude_modulus_law() {
    for v in BUILTINS {
        let traj = propagate(&atom(3, 17), &v, 2.0, TOL, None).unwrap();
        for s in &traj.samples {
            let a = amplitude(s, HBAR).unwrap();
            assert!((a.norm_sqr() * s.m.norm() * (PI * HBAR).sqrt() - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn trajectory_csv_has_header_and_rows() {
    let traj = propagate(&atom(1, 2), &Builtin::Well, 0.5, TOL, None).unwrap();
    let mut out = Vec::new();
    traj.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,p,ReM,ImM,ReN,ImN,delta,branch"));
    assert_eq!(lines.count(), traj.samples.len());
}

fn any_builtin() -> impl Strategy<Value = Builtin> {
    (0..BUILTINS.len()).prop_map(|k| BUILTINS[k])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conserved_quantities_along_trajectories(
        v in any_builtin(),
        m in 0usize..256,
        n in 0usize..32,
        t_end in 0.05f64..4.0,
    ) {
        let s0 = atom(m, n);
        let e0 = v.energy(s0.x, s0.p);
        let traj = propagate(&s0, &v, t_end, TOL, None).unwrap();
        let two_i = Complex64::new(0.0, 2.0);
        for s in &traj.samples {
            prop_assert!((s.wronskian() - two_i).norm() <= 1e-8, "W at t = {}: {}", s.t, s.wronskian());
            prop_assert!((s.gamma().unwrap().im * s.m.norm_sqr() - 1.0).abs() <= 1e-8);
            prop_assert!((v.energy(s.x, s.p) - e0).abs() <= 1e-7);
        }
        prop_assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn forward_then_backward_returns(v in any_builtin(), m in 0usize..256, n in 0usize..32, t in 0.1f64..2.0) {
        // The round-trip error is about 1e4 tol on the hill top, where M grows exponentially.
        let tol = 1e-12;
        let s0 = atom(m, n);
        let s = propagate_to_times(&s0, &v, &[t], tol).unwrap()[0];
        let back = propagate_backward(&s, &v, t, tol).unwrap();
        prop_assert!(back.t.abs() < 1e-12);
        for (a, b) in [(back.x, s0.x), (back.p, s0.p), (back.delta, s0.delta)] {
            prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        prop_assert!((back.m - s0.m).norm() < 1e-6 && (back.n - s0.n).norm() < 1e-6);
        prop_assert_eq!(back.branch, s0.branch);
    }

    #[test]
    fn amplitude_phase_is_continuous(v in any_builtin(), m in 0usize..256, n in 0usize..32) {
        let s0 = atom(m, n);
        let times: Vec<f64> = (1..=400).map(|k| k as f64 * 0.005).collect();
        let states = propagate_to_times(&s0, &v, &times, TOL).unwrap();
        let mut prev = amplitude(&s0, HBAR).unwrap();
        for s in &states {
            let a = amplitude(s, HBAR).unwrap();
            let jump = (a / prev).arg().abs();
            prop_assert!(jump < PI / 2.0, "phase jump {jump} at t = {}", s.t);
            prev = a;
        }
    }
}
