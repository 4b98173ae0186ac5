//! Single-step engine: stage evaluations, embedded error estimate with
//! step-size control, and the dense-output polynomial of one accepted step.

use super::tableau::*;
use super::IntegrateError;

const SAFE: f64 = 0.9;
/// Smallest allowed ratio `h_new / h` after a step.
const FAC_SHRINK: f64 = 0.33;
/// Largest allowed ratio `h_new / h` after a step.
const FAC_GROW: f64 = 6.0;
/// Error exponent `1/8` for the order-8 pair (no stabilization smoothing).
const EXPO1: f64 = 0.125;
/// Bisection iterations cap for event refinement (callers' loop bound).
pub(super) const MAX_EVENT_ITER: usize = 200;

/// Adaptive stepper. `k1` always holds the derivative at `(t, y)`; the final
/// derivative of an accepted step is reused as the first stage of the next.
pub(super) struct Stepper<'a> {
    f: &'a (dyn Fn(f64, &[f64], &mut [f64]) + 'a),
    dim: usize,
    rtol: f64,
    atol: f64,
    h_max: f64,
    max_steps: u64,
    pub t: f64,
    pub y: Vec<f64>,
    pub h: f64,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    k5: Vec<f64>,
    k6: Vec<f64>,
    k7: Vec<f64>,
    k8: Vec<f64>,
    k9: Vec<f64>,
    k10: Vec<f64>,
    /// Assembly buffer for stage states.
    stage: Vec<f64>,
    pub t_old: f64,
    pub h_old: f64,
    pub y_old: Vec<f64>,
    k_old: Vec<f64>,
    /// Dense coefficients of the last accepted step, 8 rows of `dim`.
    cont: Vec<f64>,
    dense_ready: bool,
    facold: f64,
    rejected: bool,
    attempts: u64,
}

impl<'a> Stepper<'a> {
    pub fn new(
        f: &'a (dyn Fn(f64, &[f64], &mut [f64]) + 'a),
        t0: f64,
        y0: &[f64],
        rtol: f64,
        atol: f64,
        h_max: f64,
        max_steps: u64,
    ) -> Stepper<'a> {
        let dim = y0.len();
        let mut k1 = vec![0.0; dim];
        f(t0, y0, &mut k1);
        Stepper {
            f,
            dim,
            rtol,
            atol,
            h_max,
            max_steps,
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            k1: k1.clone(),
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            k5: vec![0.0; dim],
            k6: vec![0.0; dim],
            k7: vec![0.0; dim],
            k8: vec![0.0; dim],
            k9: vec![0.0; dim],
            k10: vec![0.0; dim],
            stage: vec![0.0; dim],
            t_old: t0,
            h_old: 0.0,
            y_old: y0.to_vec(),
            k_old: k1,
            cont: vec![0.0; 8 * dim],
            dense_ready: false,
            facold: 1.0e-4,
            rejected: false,
            attempts: 0,
        }
    }

    /// Automatic initial step: a first guess from the derivative norm refined
    /// by an explicit Euler probe of the second derivative, aiming at
    /// `h^8 * max(|f0|, |f''|) = 0.01`.
    pub fn init_step(&mut self) {
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..self.dim {
            let sk = self.atol + self.rtol * self.y[i].abs();
            dnf += (self.k1[i] / sk) * (self.k1[i] / sk);
            dny += (self.y[i] / sk) * (self.y[i] / sk);
        }
        let mut h = if dnf <= 1.0e-10 || dny <= 1.0e-10 {
            1.0e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.h_max);

        for i in 0..self.dim {
            self.stage[i] = self.y[i] + h * self.k1[i];
        }
        (self.f)(self.t + h, &self.stage, &mut self.k2);

        let mut der2 = 0.0;
        for i in 0..self.dim {
            let sk = self.atol + self.rtol * self.y[i].abs();
            let d = (self.k2[i] - self.k1[i]) / sk;
            der2 += d * d;
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= 1.0e-15 {
            (h.abs() * 1.0e-3).max(1.0e-6)
        } else {
            (0.01 / der12).powf(EXPO1)
        };
        self.h = (100.0 * h).min(h1.min(self.h_max));
    }

    /// Advances by exactly one *accepted* step (retrying rejected attempts
    /// internally). On return the previous state is in `(t_old, y_old)` with
    /// step `h_old = t - t_old`, and `h` holds the proposal for the next step.
    pub fn advance(&mut self) -> Result<(), IntegrateError> {
        loop {
            if self.attempts >= self.max_steps {
                return Err(IntegrateError::BudgetExceeded {
                    t: self.t,
                    max_steps: self.max_steps,
                });
            }
            if self.h.abs() < 4.0 * f64::EPSILON * self.t.abs().max(1.0) {
                return Err(IntegrateError::StepSizeUnderflow { t: self.t });
            }
            self.attempts += 1;

            let err = self.attempt_stages();
            if !err.is_finite() {
                return Err(IntegrateError::FieldBlowup { t: self.t });
            }

            let fac11 = err.powf(EXPO1);
            let fac = (1.0 / FAC_GROW).max((1.0 / FAC_SHRINK).min(fac11 / SAFE));
            let mut h_new = self.h / fac;

            if err <= 1.0 {
                self.facold = err.max(1.0e-4);
                let t_new = self.t + self.h;
                (self.f)(t_new, &self.k5, &mut self.k4);

                self.y_old.copy_from_slice(&self.y);
                self.k_old.copy_from_slice(&self.k1);
                self.t_old = self.t;
                self.h_old = self.h;

                self.k1.copy_from_slice(&self.k4);
                self.y.copy_from_slice(&self.k5);
                self.t = t_new;

                if self.rejected {
                    h_new = self.h.min(h_new);
                    self.rejected = false;
                }
                self.h = h_new.min(self.h_max);
                self.dense_ready = false;
                return Ok(());
            }
            h_new = self.h / (1.0 / FAC_SHRINK).min(fac11 / SAFE);
            self.rejected = true;
            self.h = h_new.min(self.h_max);
        }
    }

    /// Runs the twelve stages from `(t, y, h)` into the k-registers, leaving
    /// the candidate state in `k5` and the eighth-order combination in `k4`.
    /// Returns the scaled error norm of the embedded 5th/3rd-order pair.
    fn attempt_stages(&mut self) -> f64 {
        let Stepper { f, dim, t, y, h, k1, k2, k3, k4, k5, k6, k7, k8, k9, k10, stage, .. } = self;
        let (t, h) = (*t, *h);
        let dim = *dim;

        for i in 0..dim {
            stage[i] = y[i] + h * (A21 * k1[i]);
        }
        f(t + C2 * h, stage, k2);
        for i in 0..dim {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, stage, k3);
        for i in 0..dim {
            stage[i] = y[i] + h * (A41 * k1[i] + A43 * k3[i]);
        }
        f(t + C4 * h, stage, k4);
        for i in 0..dim {
            stage[i] = y[i] + h * (A51 * k1[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, stage, k5);
        for i in 0..dim {
            stage[i] = y[i] + h * (A61 * k1[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + C6 * h, stage, k6);
        for i in 0..dim {
            stage[i] = y[i] + h * (A71 * k1[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + C7 * h, stage, k7);
        for i in 0..dim {
            stage[i] =
                y[i] + h * (A81 * k1[i] + A84 * k4[i] + A85 * k5[i] + A86 * k6[i] + A87 * k7[i]);
        }
        f(t + C8 * h, stage, k8);
        for i in 0..dim {
            stage[i] = y[i]
                + h * (A91 * k1[i]
                    + A94 * k4[i]
                    + A95 * k5[i]
                    + A96 * k6[i]
                    + A97 * k7[i]
                    + A98 * k8[i]);
        }
        f(t + C9 * h, stage, k9);
        for i in 0..dim {
            stage[i] = y[i]
                + h * (A101 * k1[i]
                    + A104 * k4[i]
                    + A105 * k5[i]
                    + A106 * k6[i]
                    + A107 * k7[i]
                    + A108 * k8[i]
                    + A109 * k9[i]);
        }
        f(t + C10 * h, stage, k10);
        for i in 0..dim {
            stage[i] = y[i]
                + h * (A111 * k1[i]
                    + A114 * k4[i]
                    + A115 * k5[i]
                    + A116 * k6[i]
                    + A117 * k7[i]
                    + A118 * k8[i]
                    + A119 * k9[i]
                    + A1110 * k10[i]);
        }
        f(t + C11 * h, stage, k2);
        for i in 0..dim {
            stage[i] = y[i]
                + h * (A121 * k1[i]
                    + A124 * k4[i]
                    + A125 * k5[i]
                    + A126 * k6[i]
                    + A127 * k7[i]
                    + A128 * k8[i]
                    + A129 * k9[i]
                    + A1210 * k10[i]
                    + A1211 * k2[i]);
        }
        f(t + h, stage, k3);
        for i in 0..dim {
            k4[i] = B1 * k1[i]
                + B6 * k6[i]
                + B7 * k7[i]
                + B8 * k8[i]
                + B9 * k9[i]
                + B10 * k10[i]
                + B11 * k2[i]
                + B12 * k3[i];
            k5[i] = y[i] + h * k4[i];
        }

        let (rtol, atol) = (self.rtol, self.atol);
        let (mut err5, mut err3) = (0.0, 0.0);
        for i in 0..dim {
            let sk = atol + rtol * self.y[i].abs().max(self.k5[i].abs());
            let e3 = self.k4[i]
                - BHH1 * self.k1[i]
                - BHH2 * self.k9[i]
                - BHH3 * self.k3[i];
            err3 += (e3 / sk) * (e3 / sk);
            let e5 = ER1 * self.k1[i]
                + ER6 * self.k6[i]
                + ER7 * self.k7[i]
                + ER8 * self.k8[i]
                + ER9 * self.k9[i]
                + ER10 * self.k10[i]
                + ER11 * self.k2[i]
                + ER12 * self.k3[i];
            err5 += (e5 / sk) * (e5 / sk);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        h.abs() * err5 * (1.0 / (dim as f64 * deno)).sqrt()
    }

    /// Builds the degree-7 interpolant of the last accepted step (three extra
    /// stage evaluations). Idempotent until the next `advance`.
    pub fn prepare_dense(&mut self) {
        if self.dense_ready {
            return;
        }
        let h = self.h_old;
        let dim = self.dim;
        {
            let Stepper { k_old, y_old, k2, k3, k4, k5, k6, k7, k8, k9, k10, cont, .. } = self;
            for i in 0..dim {
                let ydiff = k5[i] - y_old[i];
                let bspl = k_old[i] * h - ydiff;
                cont[i] = y_old[i];
                cont[dim + i] = ydiff;
                cont[2 * dim + i] = bspl;
                cont[3 * dim + i] = ydiff - k4[i] * h - bspl;
                cont[4 * dim + i] = D41 * k_old[i]
                    + D46 * k6[i]
                    + D47 * k7[i]
                    + D48 * k8[i]
                    + D49 * k9[i]
                    + D410 * k10[i]
                    + D411 * k2[i]
                    + D412 * k3[i];
                cont[5 * dim + i] = D51 * k_old[i]
                    + D56 * k6[i]
                    + D57 * k7[i]
                    + D58 * k8[i]
                    + D59 * k9[i]
                    + D510 * k10[i]
                    + D511 * k2[i]
                    + D512 * k3[i];
                cont[6 * dim + i] = D61 * k_old[i]
                    + D66 * k6[i]
                    + D67 * k7[i]
                    + D68 * k8[i]
                    + D69 * k9[i]
                    + D610 * k10[i]
                    + D611 * k2[i]
                    + D612 * k3[i];
                cont[7 * dim + i] = D71 * k_old[i]
                    + D76 * k6[i]
                    + D77 * k7[i]
                    + D78 * k8[i]
                    + D79 * k9[i]
                    + D710 * k10[i]
                    + D711 * k2[i]
                    + D712 * k3[i];
            }
        }

        // Extra stages at c = 0.1, 0.2, 7/9 of the completed step, reusing
        // registers in an order that never reads a value already overwritten.
        {
            let Stepper { f, k_old, y_old, t_old, k2, k3, k4, k7, k8, k9, k10, stage, .. } = self;
            for i in 0..dim {
                stage[i] = y_old[i]
                    + h * (A141 * k_old[i]
                        + A147 * k7[i]
                        + A148 * k8[i]
                        + A149 * k9[i]
                        + A1410 * k10[i]
                        + A1411 * k2[i]
                        + A1412 * k3[i]
                        + A1413 * k4[i]);
            }
            f(*t_old + C14 * h, stage, k10);
        }
        {
            let Stepper { f, k_old, y_old, t_old, k2, k3, k4, k6, k7, k8, k10, stage, .. } = self;
            for i in 0..dim {
                stage[i] = y_old[i]
                    + h * (A151 * k_old[i]
                        + A156 * k6[i]
                        + A157 * k7[i]
                        + A158 * k8[i]
                        + A1511 * k2[i]
                        + A1512 * k3[i]
                        + A1513 * k4[i]
                        + A1514 * k10[i]);
            }
            f(*t_old + C15 * h, stage, k2);
        }
        {
            let Stepper { f, k_old, y_old, t_old, k2, k3, k4, k6, k7, k8, k9, k10, stage, .. } =
                self;
            for i in 0..dim {
                stage[i] = y_old[i]
                    + h * (A161 * k_old[i]
                        + A166 * k6[i]
                        + A167 * k7[i]
                        + A168 * k8[i]
                        + A169 * k9[i]
                        + A1613 * k4[i]
                        + A1614 * k10[i]
                        + A1615 * k2[i]);
            }
            f(*t_old + C16 * h, stage, k3);
        }

        for i in 0..dim {
            self.cont[4 * dim + i] = (self.cont[4 * dim + i]
                + D413 * self.k4[i]
                + D414 * self.k10[i]
                + D415 * self.k2[i]
                + D416 * self.k3[i])
                * h;
            self.cont[5 * dim + i] = (self.cont[5 * dim + i]
                + D513 * self.k4[i]
                + D514 * self.k10[i]
                + D515 * self.k2[i]
                + D516 * self.k3[i])
                * h;
            self.cont[6 * dim + i] = (self.cont[6 * dim + i]
                + D613 * self.k4[i]
                + D614 * self.k10[i]
                + D615 * self.k2[i]
                + D616 * self.k3[i])
                * h;
            self.cont[7 * dim + i] = (self.cont[7 * dim + i]
                + D713 * self.k4[i]
                + D714 * self.k10[i]
                + D715 * self.k2[i]
                + D716 * self.k3[i])
                * h;
        }
        self.dense_ready = true;
    }

    /// Copies the dense coefficients of the last accepted step.
    pub fn dense_coefficients(&self) -> Vec<f64> {
        assert!(self.dense_ready, "dense output not prepared for this step");
        self.cont.clone()
    }

    /// Evaluates the interpolant of the last accepted step at `t`.
    pub fn dense_eval(&self, t: f64, out: &mut [f64]) {
        assert!(self.dense_ready, "dense output not prepared for this step");
        eval_dense(&self.cont, self.dim, self.t_old, self.h_old, t, out);
    }
}

/// Evaluates an 8-row dense coefficient block at `t` within the step
/// `[t_old, t_old + h]`.
pub(super) fn eval_dense(cont: &[f64], dim: usize, t_old: f64, h: f64, t: f64, out: &mut [f64]) {
    let s = (t - t_old) / h;
    let s1 = 1.0 - s;
    for i in 0..dim {
        let conpar = cont[4 * dim + i]
            + (cont[5 * dim + i] + (cont[6 * dim + i] + cont[7 * dim + i] * s) * s1) * s;
        out[i] = cont[i]
            + (cont[dim + i]
                + (cont[2 * dim + i] + (cont[3 * dim + i] + conpar * s1) * s) * s1)
                * s;
    }
}
