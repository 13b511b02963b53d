//! Material parameters, temperature-dependent coefficient functions, and
//! initial data.
//!
//! A standard-linear-solid (Zener) material with relaxation time `tau_rel`,
//! retardation time `tau_ret`, temperature-dependent stiffness `c(T)`,
//! density `rho` and thermal diffusivity `D` maps onto the system
//! coefficients as
//!
//! ```text
//! alpha = 1/tau_rel,   gamma(T) = c(T)/rho,   ghat(T) = c(T)/(rho tau_rel),
//! Gamma(T) = (tau_ret - tau_rel) c(T),        D unchanged,
//! ```
//!
//! obtained by dividing the third-order displacement equation by `tau_rel`
//! and inserting the harmonic-average mechanical loss density into the heat
//! equation. Coefficient evaluators are extended below `T = 0` by constant
//! continuation (value at zero), which is only exercised by tiny negative
//! undershoots of the discrete temperature.

use serde::{Deserialize, Serialize};

use crate::grid::{first_difference, mean, Grid, GridFunction};
use crate::{Error, Result, Scalar};

/// Serializable description of a scalar coefficient function of temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub enum CoefficientSpec<S> {
    /// `value`
    Constant { value: S },
    /// `coeffs[0] + coeffs[1] T + coeffs[2] T^2 + ...`
    Polynomial { coeffs: Vec<S> },
    /// `a exp(b T) + c`
    Exponential { a: S, b: S, c: S },
    /// Natural cubic spline through `(x[i], y[i])`, strictly increasing `x`.
    Tabulated { x: Vec<S>, y: Vec<S> },
}

impl<S: Scalar> CoefficientSpec<S> {
    pub fn constant(value: S) -> Self {
        Self::Constant { value }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CubicSpline<S> {
    x: Vec<S>,
    y: Vec<S>,
    /// Second derivatives at the knots (natural: zero at both ends).
    m: Vec<S>,
}

impl<S: Scalar> CubicSpline<S> {
    fn new(x: &[S], y: &[S]) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() {
            return Err(Error::InvalidSpec(
                "tabulated coefficient needs at least two (x, y) pairs of equal length".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSpec(
                "tabulated abscissae must be strictly increasing".into(),
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("tabulated values must be finite".into()));
        }
        let n = x.len();
        let mut m = vec![S::zero(); n];
        if n > 2 {
            // Thomas solve for the interior second derivatives.
            let k = n - 2;
            let mut diag = vec![S::zero(); k];
            let mut upper = vec![S::zero(); k];
            let mut rhs = vec![S::zero(); k];
            let six = S::lit(6.0);
            let two = S::lit(2.0);
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = two * (h0 + h1);
                upper[i] = h1;
                rhs[i] = six * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let h0 = x[i + 1] - x[i];
                let w = h0 / diag[i - 1];
                diag[i] = diag[i] - w * upper[i - 1];
                rhs[i] = rhs[i] - w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (1..k).rev() {
                m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
            }
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    fn segment(&self, t: S) -> usize {
        let n = self.x.len();
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.x[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn eval(&self, t: S, derivative: usize) -> S {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let six = S::lit(6.0);
        let d = (self.m[i + 1] - self.m[i]) / (six * h);
        let b = (self.y[i + 1] - self.y[i]) / h - h * (S::lit(2.0) * self.m[i] + self.m[i + 1]) / six;
        let s = t - self.x[i];
        let half = S::lit(0.5);
        let three = S::lit(3.0);
        match derivative {
            0 => self.y[i] + s * (b + s * (half * self.m[i] + s * d)),
            1 => b + s * (self.m[i] + three * s * d),
            _ => self.m[i] + six * s * d,
        }
    }
}

/// Compiled coefficient evaluator: a spec, an overall scale factor, and
/// constant continuation of the argument below zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient<S> {
    spec: CoefficientSpec<S>,
    scale: S,
    spline: Option<CubicSpline<S>>,
}

impl<S: Scalar> Coefficient<S> {
    pub fn compile(spec: CoefficientSpec<S>) -> Result<Self> {
        Self::compile_scaled(spec, S::one())
    }

    pub fn compile_scaled(spec: CoefficientSpec<S>, scale: S) -> Result<Self> {
        if !scale.is_finite() {
            return Err(Error::InvalidSpec("coefficient scale must be finite".into()));
        }
        let spline = match &spec {
            CoefficientSpec::Tabulated { x, y } => Some(CubicSpline::new(x, y)?),
            CoefficientSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidSpec("constant coefficient must be finite".into()));
                }
                None
            }
            CoefficientSpec::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidSpec(
                        "polynomial coefficient needs finite, nonempty coefficients".into(),
                    ));
                }
                None
            }
            CoefficientSpec::Exponential { a, b, c } => {
                if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                    return Err(Error::InvalidSpec(
                        "exponential coefficient parameters must be finite".into(),
                    ));
                }
                None
            }
        };
        Ok(Self { spec, scale, spline })
    }

    pub fn spec(&self) -> &CoefficientSpec<S> {
        &self.spec
    }

    fn raw(&self, theta: S, derivative: usize) -> S {
        let t = theta.max(S::zero());
        match &self.spec {
            CoefficientSpec::Constant { value } => {
                if derivative == 0 {
                    *value
                } else {
                    S::zero()
                }
            }
            CoefficientSpec::Polynomial { coeffs } => {
                // Horner on the (analytically differentiated) coefficients.
                let mut acc = S::zero();
                for (i, &c) in coeffs.iter().enumerate().rev() {
                    if i < derivative {
                        break;
                    }
                    let mut factor = S::one();
                    for j in 0..derivative {
                        factor = factor * S::of_usize(i - j);
                    }
                    acc = acc * t + factor * c;
                }
                acc
            }
            CoefficientSpec::Exponential { a, b, c } => {
                let mut amp = *a;
                for _ in 0..derivative {
                    amp = amp * *b;
                }
                let e = amp * (*b * t).exp();
                if derivative == 0 {
                    e + *c
                } else {
                    e
                }
            }
            CoefficientSpec::Tabulated { .. } => {
                self.spline.as_ref().expect("compiled").eval(t, derivative)
            }
        }
    }

    /// Coefficient value at `theta` (argument clamped at zero from below).
    pub fn value(&self, theta: S) -> S {
        self.scale * self.raw(theta, 0)
    }

    /// First derivative with respect to temperature.
    pub fn deriv1(&self, theta: S) -> S {
        self.scale * self.raw(theta, 1)
    }

    /// Second derivative with respect to temperature.
    pub fn deriv2(&self, theta: S) -> S {
        self.scale * self.raw(theta, 2)
    }

    /// Node-wise evaluation over a temperature field.
    pub fn eval_field(&self, theta: &GridFunction<S>) -> GridFunction<S> {
        theta.map(|t| self.value(t))
    }

    /// Node-wise first derivative over a temperature field.
    pub fn deriv1_field(&self, theta: &GridFunction<S>) -> GridFunction<S> {
        theta.map(|t| self.deriv1(t))
    }

    /// Node-wise second derivative over a temperature field.
    pub fn deriv2_field(&self, theta: &GridFunction<S>) -> GridFunction<S> {
        theta.map(|t| self.deriv2(t))
    }

    /// Worst disagreement between the analytic derivatives and centered
    /// differences of the evaluators over `[0, theta_max]`, relative to the
    /// derivative's scale on the range.
    pub fn derivative_consistency_error(&self, theta_max: S, samples: usize) -> S {
        let step = S::lit(1e-5) * theta_max.max(S::one());
        let two = S::lit(2.0);
        let count = samples.max(2);
        let mut rows = Vec::with_capacity(count);
        let mut scale1 = S::zero();
        let mut scale2 = S::zero();
        for i in 0..count {
            let t = step + (theta_max - two * step) * S::of_usize(i) / S::of_usize(count - 1);
            let fd1 = (self.value(t + step) - self.value(t - step)) / (two * step);
            let fd2 = (self.deriv1(t + step) - self.deriv1(t - step)) / (two * step);
            let (an1, an2) = (self.deriv1(t), self.deriv2(t));
            scale1 = scale1.max(an1.abs()).max(fd1.abs());
            scale2 = scale2.max(an2.abs()).max(fd2.abs());
            rows.push((fd1, an1, fd2, an2));
        }
        let floor = S::lit(1e-8);
        let mut worst = S::zero();
        for (fd1, an1, fd2, an2) in rows {
            worst = worst
                .max((fd1 - an1).abs() / scale1.max(floor))
                .max((fd2 - an2).abs() / scale2.max(floor));
        }
        worst
    }
}

/// System coefficients: damping rate, thermal diffusivity, and the three
/// temperature-dependent functions with their derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet<S> {
    pub alpha: S,
    pub d: S,
    pub gamma: Coefficient<S>,
    pub ghat: Coefficient<S>,
    pub gamma_src: Coefficient<S>,
}

impl<S: Scalar> CoefficientSet<S> {
    pub fn from_specs(
        alpha: S,
        d: S,
        gamma: CoefficientSpec<S>,
        ghat: CoefficientSpec<S>,
        gamma_src: CoefficientSpec<S>,
    ) -> Result<Self> {
        if !(alpha >= S::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidSpec(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(d > S::zero()) || !d.is_finite() {
            return Err(Error::InvalidSpec(format!("diffusivity must be > 0, got {d}")));
        }
        Ok(Self {
            alpha,
            d,
            gamma: Coefficient::compile(gamma)?,
            ghat: Coefficient::compile(ghat)?,
            gamma_src: Coefficient::compile(gamma_src)?,
        })
    }

    /// Constant-coefficient system, the small-data reference configuration.
    pub fn constant(alpha: S, d: S, gamma: S, ghat: S, gamma_src: S) -> Self {
        Self::from_specs(
            alpha,
            d,
            CoefficientSpec::constant(gamma),
            CoefficientSpec::constant(ghat),
            CoefficientSpec::constant(gamma_src),
        )
        .expect("constant coefficients are always valid")
    }
}

/// Standard-linear-solid material parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct ZenerMaterial<S> {
    /// Relaxation time (s), > 0.
    pub tau_rel: S,
    /// Retardation time (s), >= tau_rel.
    pub tau_ret: S,
    /// Stiffness c(T) (Pa), positive on the working temperature range.
    pub stiffness: CoefficientSpec<S>,
    /// Mass density (kg/m^3), > 0.
    pub density: S,
    /// Thermal diffusivity (m^2/s), > 0.
    pub diffusivity: S,
}

impl<S: Scalar> ZenerMaterial<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_rel > S::zero()) {
            return Err(Error::InvalidMaterial(format!(
                "tau_rel must be > 0, got {}",
                self.tau_rel
            )));
        }
        if !(self.tau_ret > S::zero()) {
            return Err(Error::InvalidMaterial(format!(
                "tau_ret must be > 0, got {}",
                self.tau_ret
            )));
        }
        if self.tau_rel > self.tau_ret {
            return Err(Error::InvalidMaterial(format!(
                "tau_rel < tau_ret required, got tau_rel = {} > tau_ret = {}",
                self.tau_rel, self.tau_ret
            )));
        }
        if !(self.density > S::zero()) {
            return Err(Error::InvalidMaterial(format!(
                "density must be > 0, got {}",
                self.density
            )));
        }
        if !(self.diffusivity > S::zero()) {
            return Err(Error::InvalidMaterial(format!(
                "diffusivity must be > 0, got {}",
                self.diffusivity
            )));
        }
        let c0 = Coefficient::compile(self.stiffness.clone())?.value(S::zero());
        if !(c0 > S::zero()) {
            return Err(Error::InvalidMaterial(format!(
                "stiffness must be positive, got c(0) = {c0}"
            )));
        }
        Ok(())
    }
}

/// Maps Zener material parameters onto the system coefficients; derivative
/// evaluators inherit the stiffness derivatives through the scale factors.
pub fn zener_to_coefficients<S: Scalar>(m: &ZenerMaterial<S>) -> Result<CoefficientSet<S>> {
    m.validate()?;
    let rho_inv = S::one() / m.density;
    Ok(CoefficientSet {
        alpha: S::one() / m.tau_rel,
        d: m.diffusivity,
        gamma: Coefficient::compile_scaled(m.stiffness.clone(), rho_inv)?,
        ghat: Coefficient::compile_scaled(m.stiffness.clone(), rho_inv / m.tau_rel)?,
        gamma_src: Coefficient::compile_scaled(m.stiffness.clone(), m.tau_ret - m.tau_rel)?,
    })
}

/// Outcome of sampling the coefficient functions on `[0, theta_max]`.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "S: Serialize")]
pub struct ValidationReport<S> {
    pub theta_max: S,
    pub samples: usize,
    pub min_gamma: S,
    pub min_ghat: S,
    pub min_gamma_src: S,
    pub max_derivative_error: S,
    pub passed: bool,
}

/// Samples `[0, theta_max]` densely and reports coefficient extrema plus the
/// worst analytic-vs-finite-difference derivative disagreement. Passes iff
/// `min gamma > 0`, `min ghat > 0`, `min Gamma >= 0`.
pub fn validate_coefficients<S: Scalar>(
    c: &CoefficientSet<S>,
    theta_max: S,
) -> ValidationReport<S> {
    let samples = 1001usize;
    let mut min_gamma = S::infinity();
    let mut min_ghat = S::infinity();
    let mut min_gamma_src = S::infinity();
    for i in 0..samples {
        let t = theta_max * S::of_usize(i) / S::of_usize(samples - 1);
        min_gamma = min_gamma.min(c.gamma.value(t));
        min_ghat = min_ghat.min(c.ghat.value(t));
        min_gamma_src = min_gamma_src.min(c.gamma_src.value(t));
    }
    let max_derivative_error = c
        .gamma
        .derivative_consistency_error(theta_max, 101)
        .max(c.ghat.derivative_consistency_error(theta_max, 101))
        .max(c.gamma_src.derivative_consistency_error(theta_max, 101));
    ValidationReport {
        theta_max,
        samples,
        min_gamma,
        min_ghat,
        min_gamma_src,
        max_derivative_error,
        passed: min_gamma > S::zero() && min_ghat > S::zero() && min_gamma_src >= S::zero(),
    }
}

/// Closed-form or tabulated description of one initial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub enum ProfileSpec<S> {
    Zero,
    Constant { value: S },
    /// `amplitude * cos(mode * pi * x / L)`; exactly Neumann-compatible.
    Cosine { mode: usize, amplitude: S },
    CosineSum { terms: Vec<CosineTerm<S>> },
    /// Raw node values; must satisfy the discrete zero-slope check.
    Tabulated { values: Vec<S> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct CosineTerm<S> {
    pub mode: usize,
    pub amplitude: S,
}

impl<S: Scalar> ProfileSpec<S> {
    pub fn cosine(mode: usize, amplitude: S) -> Self {
        Self::Cosine { mode, amplitude }
    }

    pub fn evaluate(&self, grid: Grid<S>) -> Result<GridFunction<S>> {
        let length = grid.length();
        match self {
            ProfileSpec::Zero => Ok(GridFunction::zeros(grid)),
            ProfileSpec::Constant { value } => {
                let v = *value;
                Ok(GridFunction::from_fn(grid, |_| v))
            }
            ProfileSpec::Cosine { mode, amplitude } => {
                let k = S::PI() * S::of_usize(*mode) / length;
                let a = *amplitude;
                Ok(GridFunction::from_fn(grid, |x| a * (k * x).cos()))
            }
            ProfileSpec::CosineSum { terms } => {
                let mut out = GridFunction::zeros(grid);
                for term in terms {
                    let k = S::PI() * S::of_usize(term.mode) / length;
                    let mode = GridFunction::from_fn(grid, |x| term.amplitude * (k * x).cos());
                    out.axpy(S::one(), &mode);
                }
                Ok(out)
            }
            ProfileSpec::Tabulated { values } => GridFunction::from_values(grid, values.clone()),
        }
    }

    /// Closed-form profiles built from cosines and constants have exact zero
    /// endpoint slope; only tabulated data needs the discrete check.
    fn needs_discrete_boundary_check(&self) -> bool {
        matches!(self, ProfileSpec::Tabulated { .. })
    }
}

/// Grid samples of the four initial profiles.
#[derive(Debug, Clone)]
pub struct InitialData<S> {
    pub u0: GridFunction<S>,
    pub u0t: GridFunction<S>,
    pub u0tt: GridFunction<S>,
    pub theta0: GridFunction<S>,
    pub means_removed: bool,
}

fn one_sided_slopes<S: Scalar>(p: &GridFunction<S>) -> (S, S) {
    let v = p.as_slice();
    let n = v.len();
    let h = p.grid().spacing();
    let half = S::lit(0.5);
    let (c3, c4) = (S::lit(3.0), S::lit(4.0));
    let left = (-c3 * v[0] + c4 * v[1] - v[2]) * half / h;
    let right = (c3 * v[n - 1] - c4 * v[n - 2] + v[n - 3]) * half / h;
    (left, right)
}

fn check_boundary<S: Scalar>(p: &GridFunction<S>, field: &'static str) -> Result<()> {
    let tol = S::lit(1e-10) * p.max_norm().max(S::one());
    let (left, right) = one_sided_slopes(p);
    for (endpoint, slope) in [("left", left), ("right", right)] {
        if slope.abs() > tol {
            return Err(Error::IncompatibleBoundary {
                field,
                endpoint,
                slope: slope.as_f64(),
                tol: tol.as_f64(),
            });
        }
    }
    Ok(())
}

/// Evaluates the four profile specs at the nodes; optionally removes the
/// spatial means of the mechanical fields; validates `Theta0 >= 0` and the
/// zero-flux compatibility of `u0`, `u0t`, `Theta0`.
pub fn make_initial_data<S: Scalar>(
    grid: Grid<S>,
    u0: &ProfileSpec<S>,
    u0t: &ProfileSpec<S>,
    u0tt: &ProfileSpec<S>,
    theta0: &ProfileSpec<S>,
    remove_means: bool,
) -> Result<InitialData<S>> {
    let mut u0_f = u0.evaluate(grid)?;
    let mut u0t_f = u0t.evaluate(grid)?;
    let mut u0tt_f = u0tt.evaluate(grid)?;
    let theta0_f = theta0.evaluate(grid)?;

    if remove_means {
        for f in [&mut u0_f, &mut u0t_f, &mut u0tt_f] {
            let m = mean(f);
            *f = f.map(|v| v - m);
        }
    }

    let (min, node) = theta0_f
        .as_slice()
        .iter()
        .enumerate()
        .fold((S::infinity(), 0usize), |acc, (i, &v)| {
            if v < acc.0 {
                (v, i)
            } else {
                acc
            }
        });
    if min < S::zero() {
        return Err(Error::NegativeTemperature {
            min: min.as_f64(),
            node,
        });
    }

    for (spec, field, name) in [
        (u0, &u0_f, "u0"),
        (u0t, &u0t_f, "u0t"),
        (theta0, &theta0_f, "theta0"),
    ] {
        if spec.needs_discrete_boundary_check() {
            check_boundary(field, name)?;
        }
    }

    Ok(InitialData {
        u0: u0_f,
        u0t: u0t_f,
        u0tt: u0tt_f,
        theta0: theta0_f,
        means_removed: remove_means,
    })
}

/// Discrete endpoint slope checked against the first difference; exposed for
/// tests of tabulated data.
pub fn boundary_slopes<S: Scalar>(p: &GridFunction<S>) -> (S, S) {
    let d = first_difference(p);
    let v = d.as_slice();
    (v[0], v[v.len() - 1])
}

/// Grid-independent bundle of the four initial profiles, reusable across
/// refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct InitialSpecs<S> {
    pub u0: ProfileSpec<S>,
    pub u0t: ProfileSpec<S>,
    pub u0tt: ProfileSpec<S>,
    pub theta0: ProfileSpec<S>,
    #[serde(default)]
    pub remove_means: bool,
}

impl<S: Scalar> InitialSpecs<S> {
    pub fn build(&self, grid: Grid<S>) -> Result<InitialData<S>> {
        make_initial_data(grid, &self.u0, &self.u0t, &self.u0tt, &self.theta0, self.remove_means)
    }

    /// All-zero data.
    pub fn zero() -> Self {
        Self {
            u0: ProfileSpec::Zero,
            u0t: ProfileSpec::Zero,
            u0tt: ProfileSpec::Zero,
            theta0: ProfileSpec::Zero,
            remove_means: false,
        }
    }
}
