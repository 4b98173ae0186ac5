//! Finite Fourier series in the fast phase with analytically differentiable
//! coefficient functions.
//!
//! The perturbation `H1(I, phi, y, x, eps)` is a trigonometric polynomial
//!
//! ```text
//! H1 = c_0(I, y, x, eps) + sum_{k=1}^{M} [ c_k cos(k phi) + s_k sin(k phi) ]
//! ```
//!
//! whose coefficients are user-supplied functions with analytic first partial
//! derivatives. Keeping the series finite makes the phase average, the
//! zero-mean antiderivative, and every partial derivative exact — no quadrature
//! or symbolic differentiation anywhere.

/// Scalar coefficient `c(I, y, x, eps)` with analytic first partial derivatives.
///
/// `y` and `x` are the slow variables (length `n` each); `d_y`/`d_x` take the
/// component index. Implementations must be pure functions.
pub trait CoefficientFn: Send + Sync {
    fn eval(&self, action: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64;
    fn d_action(&self, action: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64;
    fn d_y(&self, j: usize, action: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64;
    fn d_x(&self, j: usize, action: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64;
    fn d_epsilon(&self, action: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64;
}

/// Coefficient that does not depend on any variable.
#[derive(Debug, Clone, Copy)]
pub struct ConstCoeff(pub f64);

impl CoefficientFn for ConstCoeff {
    fn eval(&self, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        self.0
    }
    fn d_action(&self, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        0.0
    }
    fn d_y(&self, _: usize, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        0.0
    }
    fn d_x(&self, _: usize, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        0.0
    }
    fn d_epsilon(&self, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        0.0
    }
}

/// Coefficient affine in the action: `offset + slope * I`.
#[derive(Debug, Clone, Copy)]
pub struct AffineActionCoeff {
    pub offset: f64,
    pub slope: f64,
}

impl CoefficientFn for AffineActionCoeff {
    fn eval(&self, action: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        self.offset + self.slope * action
    }
    fn d_action(&self, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        self.slope
    }
    fn d_y(&self, _: usize, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        0.0
    }
    fn d_x(&self, _: usize, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        0.0
    }
    fn d_epsilon(&self, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
        0.0
    }
}

/// Trigonometric polynomial in the fast phase with coefficient functions of
/// the remaining variables.
pub struct FourierSeries {
    /// Cosine coefficients for harmonics `0..=M`; index 0 is the phase mean.
    cos: Vec<Box<dyn CoefficientFn>>,
    /// Sine coefficients for harmonics `1..=M`.
    sin: Vec<Box<dyn CoefficientFn>>,
}

impl FourierSeries {
    /// Builds a series with `cos.len() == M + 1` and `sin.len() == M`.
    ///
    /// Panics if the lengths are inconsistent or the cosine list is empty.
    pub fn new(cos: Vec<Box<dyn CoefficientFn>>, sin: Vec<Box<dyn CoefficientFn>>) -> Self {
        assert!(!cos.is_empty(), "a Fourier series needs at least the harmonic-0 coefficient");
        assert_eq!(
            cos.len(),
            sin.len() + 1,
            "cosine coefficients must cover harmonics 0..=M and sine coefficients 1..=M"
        );
        FourierSeries { cos, sin }
    }

    /// Highest harmonic `M`.
    pub fn max_harmonic(&self) -> usize {
        self.sin.len()
    }

    /// Series value at `(I, phi, y, x, eps)`.
    pub fn eval(&self, action: f64, phi: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        let mut total = self.cos[0].eval(action, y, x, epsilon);
        for k in 1..=self.max_harmonic() {
            let (s, c) = (k as f64 * phi).sin_cos();
            total += self.cos[k].eval(action, y, x, epsilon) * c
                + self.sin[k - 1].eval(action, y, x, epsilon) * s;
        }
        total
    }

    /// First derivative in the phase.
    pub fn d_phi(&self, action: f64, phi: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        let mut total = 0.0;
        for k in 1..=self.max_harmonic() {
            let kf = k as f64;
            let (s, c) = (kf * phi).sin_cos();
            total += kf
                * (self.sin[k - 1].eval(action, y, x, epsilon) * c
                    - self.cos[k].eval(action, y, x, epsilon) * s);
        }
        total
    }

    /// Second derivative in the phase.
    pub fn d2_phi(&self, action: f64, phi: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        let mut total = 0.0;
        for k in 1..=self.max_harmonic() {
            let kf = k as f64;
            let (s, c) = (kf * phi).sin_cos();
            total -= kf
                * kf
                * (self.cos[k].eval(action, y, x, epsilon) * c
                    + self.sin[k - 1].eval(action, y, x, epsilon) * s);
        }
        total
    }

    /// Partial derivative in the action.
    pub fn d_action(&self, action: f64, phi: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        let mut total = self.cos[0].d_action(action, y, x, epsilon);
        for k in 1..=self.max_harmonic() {
            let (s, c) = (k as f64 * phi).sin_cos();
            total += self.cos[k].d_action(action, y, x, epsilon) * c
                + self.sin[k - 1].d_action(action, y, x, epsilon) * s;
        }
        total
    }

    /// Partial derivative in the slow variable `y[j]`.
    pub fn d_y(&self, j: usize, action: f64, phi: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        let mut total = self.cos[0].d_y(j, action, y, x, epsilon);
        for k in 1..=self.max_harmonic() {
            let (s, c) = (k as f64 * phi).sin_cos();
            total += self.cos[k].d_y(j, action, y, x, epsilon) * c
                + self.sin[k - 1].d_y(j, action, y, x, epsilon) * s;
        }
        total
    }

    /// Partial derivative in the slow variable `x[j]`.
    pub fn d_x(&self, j: usize, action: f64, phi: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        let mut total = self.cos[0].d_x(j, action, y, x, epsilon);
        for k in 1..=self.max_harmonic() {
            let (s, c) = (k as f64 * phi).sin_cos();
            total += self.cos[k].d_x(j, action, y, x, epsilon) * c
                + self.sin[k - 1].d_x(j, action, y, x, epsilon) * s;
        }
        total
    }

    /// Partial derivative in the perturbation parameter.
    pub fn d_epsilon(&self, action: f64, phi: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        let mut total = self.cos[0].d_epsilon(action, y, x, epsilon);
        for k in 1..=self.max_harmonic() {
            let (s, c) = (k as f64 * phi).sin_cos();
            total += self.cos[k].d_epsilon(action, y, x, epsilon) * c
                + self.sin[k - 1].d_epsilon(action, y, x, epsilon) * s;
        }
        total
    }

    /// Phase average over one period — the harmonic-0 coefficient.
    pub fn mean(&self, action: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        self.cos[0].eval(action, y, x, epsilon)
    }

    /// Action derivative of the phase average.
    pub fn mean_d_action(&self, action: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        self.cos[0].d_action(action, y, x, epsilon)
    }

    /// `y[j]` derivative of the phase average.
    pub fn mean_d_y(&self, j: usize, action: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        self.cos[0].d_y(j, action, y, x, epsilon)
    }

    /// `x[j]` derivative of the phase average.
    pub fn mean_d_x(&self, j: usize, action: f64, y: &[f64], x: &[f64], epsilon: f64) -> f64 {
        self.cos[0].d_x(j, action, y, x, epsilon)
    }

    /// Antiderivative in the phase of the zero-mean part, itself with zero
    /// phase average:
    ///
    /// ```text
    /// A(phi) = sum_{k>=1} [ c_k sin(k phi) - s_k cos(k phi) ] / k
    /// ```
    ///
    /// so that `dA/dphi = series - mean` exactly.
    pub fn antiderivative_zero_mean(
        &self,
        action: f64,
        phi: f64,
        y: &[f64],
        x: &[f64],
        epsilon: f64,
    ) -> f64 {
        let mut total = 0.0;
        for k in 1..=self.max_harmonic() {
            let kf = k as f64;
            let (s, c) = (kf * phi).sin_cos();
            total += (self.cos[k].eval(action, y, x, epsilon) * s
                - self.sin[k - 1].eval(action, y, x, epsilon) * c)
                / kf;
        }
        total
    }

    /// Action derivative of [`FourierSeries::antiderivative_zero_mean`].
    pub fn antiderivative_d_action(
        &self,
        action: f64,
        phi: f64,
        y: &[f64],
        x: &[f64],
        epsilon: f64,
    ) -> f64 {
        let mut total = 0.0;
        for k in 1..=self.max_harmonic() {
            let kf = k as f64;
            let (s, c) = (kf * phi).sin_cos();
            total += (self.cos[k].d_action(action, y, x, epsilon) * s
                - self.sin[k - 1].d_action(action, y, x, epsilon) * c)
                / kf;
        }
        total
    }

    /// `y[j]` derivative of [`FourierSeries::antiderivative_zero_mean`].
    pub fn antiderivative_d_y(
        &self,
        j: usize,
        action: f64,
        phi: f64,
        y: &[f64],
        x: &[f64],
        epsilon: f64,
    ) -> f64 {
        let mut total = 0.0;
        for k in 1..=self.max_harmonic() {
            let kf = k as f64;
            let (s, c) = (kf * phi).sin_cos();
            total += (self.cos[k].d_y(j, action, y, x, epsilon) * s
                - self.sin[k - 1].d_y(j, action, y, x, epsilon) * c)
                / kf;
        }
        total
    }

    /// `x[j]` derivative of [`FourierSeries::antiderivative_zero_mean`].
    pub fn antiderivative_d_x(
        &self,
        j: usize,
        action: f64,
        phi: f64,
        y: &[f64],
        x: &[f64],
        epsilon: f64,
    ) -> f64 {
        let mut total = 0.0;
        for k in 1..=self.max_harmonic() {
            let kf = k as f64;
            let (s, c) = (kf * phi).sin_cos();
            total += (self.cos[k].d_x(j, action, y, x, epsilon) * s
                - self.sin[k - 1].d_x(j, action, y, x, epsilon) * c)
                / kf;
        }
        total
    }
}
