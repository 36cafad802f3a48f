//! Dormand–Prince 5(4) embedded Runge–Kutta stepper.
//!
//! Only the single-step machinery lives here; acceptance, event handling and
//! stop times are driven by the caller.

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Fifth-order weights minus the embedded fourth-order ones.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Result of one trial step.
#[derive(Debug, Clone, Copy)]
pub struct Trial<const N: usize> {
    pub y: [f64; N],
    /// Derivative at the new point (first stage of the next step).
    pub dy: [f64; N],
    /// Scaled RMS error estimate; the step is acceptable when `<= 1`.
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DormandPrince<F> {
    rhs: F,
    pub atol: f64,
    pub rtol: f64,
}

impl<F> DormandPrince<F> {
    pub fn new(rhs: F, atol: f64, rtol: f64) -> Self {
        Self { rhs, atol, rtol }
    }
}

impl<F> DormandPrince<F> {
    pub fn derivative<const N: usize>(&self, y: &[f64; N]) -> [f64; N]
    where
        F: Fn(&[f64; N]) -> [f64; N],
    {
        (self.rhs)(y)
    }

    /// Advances the autonomous system `y' = f(y)` by `h` from `y` with `dy = f(y)`.
    pub fn step<const N: usize>(&self, y: &[f64; N], dy: &[f64; N], h: f64) -> Trial<N>
    where
        F: Fn(&[f64; N]) -> [f64; N],
    {
        let f = &self.rhs;
        let k1 = *dy;
        let k2 = f(&combine(y, h, &[(A21, &k1)]));
        let k3 = f(&combine(y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&combine(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&combine(
            y,
            h,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        ));
        let k6 = f(&combine(
            y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y_new = combine(
            y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(&y_new);

        let mut sum = 0.0;
        for i in 0..N {
            let err =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            sum += (err / scale).powi(2);
        }
        Trial {
            y: y_new,
            dy: k7,
            error: (sum / N as f64).sqrt(),
        }
    }

    /// Starting step size from the usual two-derivative estimate.
    pub fn initial_step<const N: usize>(&self, y: &[f64; N], dy: &[f64; N], span: f64) -> f64
    where
        F: Fn(&[f64; N]) -> [f64; N],
    {
        let scale: Vec<f64> = y.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
        let rms = |v: &[f64; N]| {
            (v.iter()
                .zip(&scale)
                .map(|(a, s)| (a / s).powi(2))
                .sum::<f64>()
                / N as f64)
                .sqrt()
        };
        let d0 = rms(y);
        let d1 = rms(dy);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1 = combine(y, h0, &[(1.0, dy)]);
        let dy1 = (self.rhs)(&y1);
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = dy1[i] - dy[i];
        }
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span.abs())
    }
}

/// Proposed step-size factor from an error estimate.
pub fn step_factor(error: f64) -> f64 {
    if error == 0.0 {
        5.0
    } else {
        (0.9 * error.powf(-0.2)).clamp(0.2, 5.0)
    }
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..N {
            out[i] += h * coef * k[i];
        }
    }
    out
}
