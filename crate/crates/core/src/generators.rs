//! Infinitesimal generators h(z, t): holomorphic in z with h(0, t) = 0,
//! Dh(0, t) = A and Re<h(z, t), z> > 0 on the ball.

use crate::polyspace::{HomPolyMap, MultiIndex, TruncatedMap};
use crate::spectral::OperatorA;
use crate::univar::OneVarMap;
use crate::{inner, vec_norm, C64};
use ndarray_linalg::Solve;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error(
        "generator violates Re<h(z,t), z> > 0 at t = {t}: value {value:.3e} at witness point"
    )]
    GeneratorInvalid {
        witness: Vec<C64>,
        t: f64,
        value: f64,
    },
    #[error("singular Jacobian of the pushforward map at an evaluation point")]
    SingularJacobian,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Poly(#[from] crate::polyspace::PolyError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
}

/// Named time-coefficient functions; the CLI accepts exactly these, the
/// library additionally accepts arbitrary closures through
/// [`ClosureGenerator`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFunction {
    Constant { re: f64, im: f64 },
    /// e^{-rate t}.
    ExpDecay { rate: f64 },
    /// Indicator of [0, t_end].
    Window { t_end: f64 },
    /// e^{i freq t}.
    Oscillation { freq: f64 },
    /// Piecewise-linear interpolation of (ts, re + i im); constant outside.
    PiecewiseLinear { ts: Vec<f64>, re: Vec<f64>, im: Vec<f64> },
}

impl TimeFunction {
    pub fn constant(c: C64) -> TimeFunction {
        TimeFunction::Constant { re: c.re, im: c.im }
    }

    pub fn eval(&self, t: f64) -> C64 {
        match self {
            TimeFunction::Constant { re, im } => C64::new(*re, *im),
            TimeFunction::ExpDecay { rate } => C64::new((-rate * t).exp(), 0.0),
            TimeFunction::Window { t_end } => {
                if t <= *t_end {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            TimeFunction::Oscillation { freq } => C64::new(0.0, freq * t).exp(),
            TimeFunction::PiecewiseLinear { ts, re, im } => {
                if ts.is_empty() {
                    return C64::new(0.0, 0.0);
                }
                if t <= ts[0] {
                    return C64::new(re[0], im[0]);
                }
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return C64::new(re[last], im[last]);
                }
                let idx = ts.partition_point(|&x| x <= t) - 1;
                let w = (t - ts[idx]) / (ts[idx + 1] - ts[idx]);
                C64::new(
                    re[idx] + w * (re[idx + 1] - re[idx]),
                    im[idx] + w * (im[idx + 1] - im[idx]),
                )
            }
        }
    }

    /// sup_t |a(t)| over [0, inf), exact per variant.
    pub fn sup_norm(&self) -> f64 {
        match self {
            TimeFunction::Constant { re, im } => C64::new(*re, *im).norm(),
            TimeFunction::ExpDecay { rate } => {
                if *rate >= 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            TimeFunction::Window { .. } => 1.0,
            TimeFunction::Oscillation { .. } => 1.0,
            TimeFunction::PiecewiseLinear { re, im, .. } => re
                .iter()
                .zip(im)
                .map(|(r, i)| C64::new(*r, *i).norm())
                .fold(0.0, f64::max),
        }
    }

    /// Points of non-smoothness inside (t0, t1); the integrator splits there.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        match self {
            TimeFunction::Window { t_end } => {
                if *t_end > t0 && *t_end < t1 {
                    vec![*t_end]
                } else {
                    vec![]
                }
            }
            TimeFunction::PiecewiseLinear { ts, .. } => ts
                .iter()
                .copied()
                .filter(|&x| x > t0 && x < t1)
                .collect(),
            _ => vec![],
        }
    }
}

/// One time-dependent homogeneous term a(t) Q(z^k).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeTerm {
    pub time: TimeFunction,
    pub poly: HomPolyMap,
}

/// Pushforward generators h(z, t) = [Df(z)]^{-1} Q(f(z), t).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PushforwardSpec {
    /// The Roper-Suffridge type extension generator over A = diag(1, lambda),
    /// evaluated through the closed form
    /// h(z) = (z1 p(z1), z2 (lambda - alpha - beta + (alpha+beta) p(z1) + beta z1 p'(z1))).
    RoperSuffridge {
        f1: OneVarMap,
        alpha: f64,
        beta: f64,
        lambda_re: f64,
        lambda_im: f64,
        /// min of q(x) = (Re lambda - alpha - beta) x^2 - 2 beta x + alpha + beta on [0,1].
        q_min: f64,
        admissible: bool,
    },
    /// Generic pushforward along a truncated polynomial map with a polynomial
    /// field; Df(z) is inverted by dense solve at each point.
    Polynomial {
        map: TruncatedMap,
        field: Box<GeneratorSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeneratorForm {
    /// h(z) = Az + sum_k H_k(z^k).
    Autonomous { terms: Vec<HomPolyMap> },
    /// h(z, t) = Az + sum_i a_i(t) Q_i(z).
    TimeDependent { terms: Vec<TimeTerm> },
    Pushforward(PushforwardSpec),
}

/// A concrete infinitesimal generator specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub a: OperatorA,
    pub form: GeneratorForm,
}

/// Evaluation interface shared by [`GeneratorSpec`] and library-side closure
/// generators. Implementations must be pure in (z, t).
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    fn linear_part(&self) -> &OperatorA;
    fn eval_into(&self, z: &[C64], t: f64, out: &mut [C64]) -> Result<(), GeneratorError>;
    /// Points of non-smoothness in t inside (t0, t1).
    fn time_breakpoints(&self, _t0: f64, _t1: f64) -> Vec<f64> {
        vec![]
    }
    fn eval(&self, z: &[C64], t: f64) -> Result<Vec<C64>, GeneratorError> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.eval_into(z, t, &mut out)?;
        Ok(out)
    }
}

impl GeneratorSpec {
    /// Degree-k homogeneous part H_k(., t) for polynomial forms; None for
    /// pushforward forms (their coefficients are not stored symbolically).
    pub fn hk_at(&self, k: usize, t: f64) -> Option<HomPolyMap> {
        match &self.form {
            GeneratorForm::Autonomous { terms } => {
                let mut acc: Option<HomPolyMap> = None;
                for q in terms.iter().filter(|q| q.k() == k) {
                    acc = Some(match acc {
                        None => q.clone(),
                        Some(a) => a.add(q).expect("degree checked"),
                    });
                }
                acc
            }
            GeneratorForm::TimeDependent { terms } => {
                let mut acc: Option<HomPolyMap> = None;
                for term in terms.iter().filter(|term| term.poly.k() == k) {
                    let scaled = term.poly.scale(term.time.eval(t));
                    acc = Some(match acc {
                        None => scaled,
                        Some(a) => a.add(&scaled).expect("degree checked"),
                    });
                }
                acc
            }
            GeneratorForm::Pushforward(_) => None,
        }
    }

    /// Largest polynomial degree present (1 for purely linear generators).
    pub fn max_degree(&self) -> usize {
        match &self.form {
            GeneratorForm::Autonomous { terms } => {
                terms.iter().map(|q| q.k()).max().unwrap_or(1)
            }
            GeneratorForm::TimeDependent { terms } => {
                terms.iter().map(|t| t.poly.k()).max().unwrap_or(1)
            }
            GeneratorForm::Pushforward(_) => usize::MAX,
        }
    }

    pub fn is_polynomial(&self) -> bool {
        !matches!(self.form, GeneratorForm::Pushforward(_))
    }

    pub fn linear(a: OperatorA) -> GeneratorSpec {
        GeneratorSpec {
            a,
            form: GeneratorForm::Autonomous { terms: vec![] },
        }
    }

    pub fn autonomous(a: OperatorA, terms: Vec<HomPolyMap>) -> Result<GeneratorSpec, GeneratorError> {
        for q in &terms {
            if q.n() != a.dim() {
                return Err(GeneratorError::InvalidInput(format!(
                    "term dimension {} does not match operator dimension {}",
                    q.n(),
                    a.dim()
                )));
            }
            if q.k() < 2 {
                return Err(GeneratorError::InvalidInput(
                    "homogeneous terms must have degree >= 2".into(),
                ));
            }
        }
        Ok(GeneratorSpec {
            a,
            form: GeneratorForm::Autonomous { terms },
        })
    }

    pub fn time_dependent(
        a: OperatorA,
        terms: Vec<TimeTerm>,
    ) -> Result<GeneratorSpec, GeneratorError> {
        for term in &terms {
            if term.poly.n() != a.dim() {
                return Err(GeneratorError::InvalidInput(format!(
                    "term dimension {} does not match operator dimension {}",
                    term.poly.n(),
                    a.dim()
                )));
            }
            if term.poly.k() < 2 {
                return Err(GeneratorError::InvalidInput(
                    "homogeneous terms must have degree >= 2".into(),
                ));
            }
        }
        Ok(GeneratorSpec {
            a,
            form: GeneratorForm::TimeDependent { terms },
        })
    }
}

impl Generator for GeneratorSpec {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn linear_part(&self) -> &OperatorA {
        &self.a
    }

    fn eval_into(&self, z: &[C64], t: f64, out: &mut [C64]) -> Result<(), GeneratorError> {
        match &self.form {
            GeneratorForm::Autonomous { terms } => {
                self.a.apply(z, out);
                for q in terms {
                    q.eval_acc(z, out);
                }
                Ok(())
            }
            GeneratorForm::TimeDependent { terms } => {
                self.a.apply(z, out);
                let mut tmp = vec![C64::new(0.0, 0.0); z.len()];
                for term in terms {
                    let a_t = term.time.eval(t);
                    if a_t == C64::new(0.0, 0.0) {
                        continue;
                    }
                    term.poly.eval_into(z, &mut tmp);
                    for (o, v) in out.iter_mut().zip(&tmp) {
                        *o += a_t * v;
                    }
                }
                Ok(())
            }
            GeneratorForm::Pushforward(PushforwardSpec::RoperSuffridge {
                f1,
                alpha,
                beta,
                lambda_re,
                lambda_im,
                ..
            }) => {
                let lambda = C64::new(*lambda_re, *lambda_im);
                let z1 = z[0];
                let p = f1.p(z1);
                let dp = f1.p_deriv(z1);
                out[0] = z1 * p;
                out[1] = z[1]
                    * (lambda - alpha - beta + (alpha + beta) * p + C64::from(*beta) * z1 * dp);
                Ok(())
            }
            GeneratorForm::Pushforward(PushforwardSpec::Polynomial { map, field }) => {
                let fz = map.eval(z);
                let q = field.eval(&fz, t)?;
                let jac = map.jacobian(z);
                let rhs = crate::CVec::from_vec(q);
                let sol = jac
                    .solve(&rhs)
                    .map_err(|_| GeneratorError::SingularJacobian)?;
                for (o, v) in out.iter_mut().zip(sol.iter()) {
                    *o = *v;
                }
                Ok(())
            }
        }
    }

    fn time_breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut pts = match &self.form {
            GeneratorForm::TimeDependent { terms } => {
                let mut v: Vec<f64> = terms
                    .iter()
                    .flat_map(|term| term.time.breakpoints(t0, t1))
                    .collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v.dedup();
                v
            }
            GeneratorForm::Pushforward(PushforwardSpec::Polynomial { field, .. }) => {
                field.time_breakpoints(t0, t1)
            }
            _ => vec![],
        };
        pts.retain(|&x| x > t0 && x < t1);
        pts
    }
}

/// A generator given by an arbitrary closure; library-only (not expressible
/// in the CLI JSON formats).
pub struct ClosureGenerator<F: Fn(&[C64], f64, &mut [C64]) + Sync> {
    pub a: OperatorA,
    pub f: F,
}

impl<F: Fn(&[C64], f64, &mut [C64]) + Sync> Generator for ClosureGenerator<F> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn linear_part(&self) -> &OperatorA {
        &self.a
    }
    fn eval_into(&self, z: &[C64], t: f64, out: &mut [C64]) -> Result<(), GeneratorError> {
        (self.f)(z, t, out);
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub radii: Vec<f64>,
    pub samples_per_sphere: usize,
    pub t_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            radii: vec![0.3, 0.6, 0.9],
            samples_per_sphere: 200,
            t_grid: vec![0.0, 0.5, 1.0, 2.0],
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    /// min over all samples and times of Re<h(z,t), z>.
    pub min_re_inner: f64,
    pub min_radius: f64,
    pub min_t: f64,
    /// per radius: minimum of Re<h(z,t), z> over samples and times.
    pub per_radius: Vec<(f64, f64)>,
    pub origin_fixed: bool,
    pub linear_part_matches: bool,
    pub max_linear_part_error: f64,
    pub pass: bool,
}

/// Sample-check the defining inequality Re<h(z,t), z> > 0 and the
/// normalization h(0,t) = 0, Dh(0,t) = A.
///
/// Positivity is sampled, not proved: quasi-random points on each sphere with
/// a documented seed. A strict violation below -1e-12 is an error carrying
/// the witness point.
pub fn validate(
    h: &dyn Generator,
    opts: &ValidationOptions,
) -> Result<ValidationReport, GeneratorError> {
    if opts.radii.iter().any(|&r| r <= 0.0 || r >= 1.0) {
        return Err(GeneratorError::InvalidInput(
            "radii must lie in (0, 1)".into(),
        ));
    }
    if opts.samples_per_sphere == 0 || opts.t_grid.is_empty() {
        return Err(GeneratorError::InvalidInput(
            "need at least one sample and one time".into(),
        ));
    }
    let n = h.dim();
    let a = h.linear_part();

    let zero = vec![C64::new(0.0, 0.0); n];
    let mut origin_fixed = true;
    let mut linear_ok = true;
    let mut max_lin_err = 0.0f64;
    let eps = 1e-5;
    for &t in &opts.t_grid {
        let h0 = h.eval(&zero, t)?;
        if vec_norm(&h0) > 1e-6 {
            origin_fixed = false;
        }
        // Dh(0, t) by central differences against A
        for j in 0..n {
            let mut zp = zero.clone();
            let mut zm = zero.clone();
            zp[j] = C64::new(eps, 0.0);
            zm[j] = C64::new(-eps, 0.0);
            let hp = h.eval(&zp, t)?;
            let hm = h.eval(&zm, t)?;
            for i in 0..n {
                let fd = (hp[i] - hm[i]) / C64::new(2.0 * eps, 0.0);
                let err = (fd - a.entries()[[i, j]]).norm();
                max_lin_err = max_lin_err.max(err);
                if err > 1e-6 {
                    linear_ok = false;
                }
            }
        }
    }

    let mut min_val = f64::INFINITY;
    let mut min_witness = zero.clone();
    let mut min_radius = 0.0;
    let mut min_t = 0.0;
    let mut per_radius = Vec::with_capacity(opts.radii.len());
    let mut hz = vec![C64::new(0.0, 0.0); n];
    for &r in &opts.radii {
        let pts = crate::sampling::sphere_points(n, r, opts.samples_per_sphere, opts.seed);
        let mut r_min = f64::INFINITY;
        for z in &pts {
            for &t in &opts.t_grid {
                h.eval_into(z, t, &mut hz)?;
                let v = inner(&hz, z).re;
                if v < r_min {
                    r_min = v;
                }
                if v < min_val {
                    min_val = v;
                    min_witness = z.clone();
                    min_radius = r;
                    min_t = t;
                }
            }
        }
        per_radius.push((r, r_min));
    }

    if min_val < -1e-12 {
        return Err(GeneratorError::GeneratorInvalid {
            witness: min_witness,
            t: min_t,
            value: min_val,
        });
    }

    Ok(ValidationReport {
        min_re_inner: min_val,
        min_radius,
        min_t,
        per_radius,
        origin_fixed,
        linear_part_matches: linear_ok,
        max_linear_part_error: max_lin_err,
        pass: origin_fixed && linear_ok && min_val > -1e-12,
    })
}

/// The generator h(z, t) = (lambda z1 + a(t) z2^2, z2) over A = diag(lambda, 1).
///
/// Requires Re lambda >= 2 (so that n0 >= 2) and sup |a| <= 1, which together
/// put h(., t) in the admissible class for every t.
pub fn example_generator(
    lambda: C64,
    a_of_t: TimeFunction,
) -> Result<GeneratorSpec, GeneratorError> {
    if lambda.re < 2.0 {
        return Err(GeneratorError::ParameterOutOfRange(format!(
            "Re lambda = {} < 2",
            lambda.re
        )));
    }
    let sup = a_of_t.sup_norm();
    if sup > 1.0 + 1e-12 {
        return Err(GeneratorError::ParameterOutOfRange(format!(
            "sup |a(t)| = {sup} > 1"
        )));
    }
    let a = OperatorA::diagonal(&[lambda, C64::new(1.0, 0.0)])?;
    let poly = HomPolyMap::monomial(2, MultiIndex(vec![0, 2]), 0, C64::new(1.0, 0.0))?;
    GeneratorSpec::time_dependent(
        a,
        vec![TimeTerm {
            time: a_of_t,
            poly,
        }],
    )
}

/// Exact minimum of q(x) = c2 x^2 + c1 x + c0 on [0, 1].
fn quadratic_min_on_unit_interval(c2: f64, c1: f64, c0: f64) -> f64 {
    let q = |x: f64| c2 * x * x + c1 * x + c0;
    let mut m = q(0.0).min(q(1.0));
    if c2 > 0.0 {
        let vertex = -c1 / (2.0 * c2);
        if vertex > 0.0 && vertex < 1.0 {
            m = m.min(q(vertex));
        }
    }
    m
}

/// The generator induced by the Roper-Suffridge type extension
/// Phi_{alpha,beta}(f) over A = diag(1, lambda).
///
/// The admissibility flag records whether
/// q(x) = (Re lambda - alpha - beta) x^2 - 2 beta x + alpha + beta
/// is non-negative on [0, 1], decided by exact quadratic minimization.
/// Inadmissible parameters still produce a generator; validation may then
/// fail on samples.
pub fn roper_suffridge_generator(
    f1: OneVarMap,
    alpha: f64,
    beta: f64,
    lambda: C64,
) -> Result<GeneratorSpec, GeneratorError> {
    let a = OperatorA::diagonal(&[C64::new(1.0, 0.0), lambda])?;
    let q_min = quadratic_min_on_unit_interval(
        lambda.re - alpha - beta,
        -2.0 * beta,
        alpha + beta,
    );
    Ok(GeneratorSpec {
        a,
        form: GeneratorForm::Pushforward(PushforwardSpec::RoperSuffridge {
            f1,
            alpha,
            beta,
            lambda_re: lambda.re,
            lambda_im: lambda.im,
            q_min,
            admissible: q_min >= 0.0,
        }),
    })
}

/// The monomial-perturbation generator h(z) = Az + a (lambda_s - <m, lambda>) z^m e_s
/// for diagonal A, which solves the autonomous equation with f = z + a z^m e_s
/// whenever m_s = 0.
pub fn monomial_remark_generator(
    a: &OperatorA,
    m: MultiIndex,
    s: usize,
    amplitude: C64,
) -> Result<GeneratorSpec, GeneratorError> {
    if !a.is_exactly_diagonal() {
        return Err(GeneratorError::InvalidInput(
            "monomial remark generator requires diagonal A".into(),
        ));
    }
    let n = a.dim();
    if m.len() != n || s >= n {
        return Err(GeneratorError::InvalidInput(
            "multi-index / component do not match dimension".into(),
        ));
    }
    let lambda = a.eigenvalues();
    let dot: C64 = m
        .0
        .iter()
        .zip(lambda)
        .map(|(&e, l)| C64::new(e as f64, 0.0) * l)
        .sum();
    let coeff = amplitude * (lambda[s] - dot);
    let poly = HomPolyMap::monomial(n, m, s, coeff)?;
    GeneratorSpec::autonomous(a.clone(), vec![poly])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::analyze;
    use crate::CMat;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn linear_generator_validates() {
        let a = OperatorA::diagonal(&[c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        let g = GeneratorSpec::linear(a);
        let rep = validate(&g, &ValidationOptions::default()).unwrap();
        assert!(rep.pass);
        // min of Re<Az, z> at radius r is about m(A) r^2
        for (r, v) in rep.per_radius {
            assert!(v >= 0.9 * r * r, "radius {r}: {v}");
        }
    }

    #[test]
    fn example_generator_validates() {
        let g = example_generator(c(2.0, 0.0), TimeFunction::Constant { re: 1.0, im: 0.0 })
            .unwrap();
        let rep = validate(&g, &ValidationOptions::default()).unwrap();
        assert!(rep.pass);
        assert!(rep.origin_fixed && rep.linear_part_matches);

        let g = example_generator(c(2.5, 0.0), TimeFunction::ExpDecay { rate: 1.0 }).unwrap();
        assert!(validate(&g, &ValidationOptions::default()).unwrap().pass);

        match example_generator(c(1.5, 0.0), TimeFunction::Constant { re: 1.0, im: 0.0 }) {
            Err(GeneratorError::ParameterOutOfRange(_)) => {}
            other => panic!("expected ParameterOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn invalid_generator_reports_witness() {
        // h(z) = Az - 3 z1^2 e1 with A = I violates positivity near z=(0.9, 0).
        let a = analyze(&CMat::eye(2)).unwrap();
        let h2 = HomPolyMap::monomial(2, MultiIndex(vec![2, 0]), 0, c(-3.0, 0.0)).unwrap();
        let g = GeneratorSpec::autonomous(a, vec![h2]).unwrap();
        let opts = ValidationOptions {
            radii: vec![0.9],
            samples_per_sphere: 400,
            t_grid: vec![0.0],
            seed: 2,
        };
        match validate(&g, &opts) {
            Err(GeneratorError::GeneratorInvalid { value, .. }) => assert!(value < 0.0),
            other => panic!("expected GeneratorInvalid, got {other:?}"),
        }
        // direct hand check at z = (0.9, 0)
        let g2 = {
            let a = analyze(&CMat::eye(2)).unwrap();
            let h2 = HomPolyMap::monomial(2, MultiIndex(vec![2, 0]), 0, c(-3.0, 0.0)).unwrap();
            GeneratorSpec::autonomous(a, vec![h2]).unwrap()
        };
        let z = [c(0.9, 0.0), c(0.0, 0.0)];
        let hz = g2.eval(&z, 0.0).unwrap();
        let v = inner(&hz, &z).re;
        assert!((v - (0.81 - 3.0 * 0.729)).abs() < 1e-12);
    }

    #[test]
    fn time_function_window_and_breakpoints() {
        let w = TimeFunction::Window { t_end: 3.0 };
        assert_eq!(w.eval(2.9), c(1.0, 0.0));
        assert_eq!(w.eval(3.1), c(0.0, 0.0));
        assert_eq!(w.breakpoints(0.0, 10.0), vec![3.0]);
        assert!(w.breakpoints(4.0, 10.0).is_empty());

        let p = TimeFunction::PiecewiseLinear {
            ts: vec![0.0, 1.0, 2.0],
            re: vec![0.0, 1.0, 0.5],
            im: vec![0.0, 0.0, 0.0],
        };
        assert!((p.eval(0.5) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((p.eval(1.5) - c(0.75, 0.0)).norm() < 1e-15);
        assert!((p.eval(5.0) - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(p.sup_norm(), 1.0);
    }

    #[test]
    fn roper_suffridge_admissibility() {
        // inside the admissible box
        let g = roper_suffridge_generator(OneVarMap::Koebe, 1.5, 0.5, c(2.0, 0.0)).unwrap();
        match &g.form {
            GeneratorForm::Pushforward(PushforwardSpec::RoperSuffridge {
                admissible,
                q_min,
                ..
            }) => {
                assert!(*admissible, "q_min = {q_min}");
            }
            _ => unreachable!(),
        }
        // alpha = 0, beta = 1, lambda = 2: q = (x-1)^2 touches zero at x = 1
        let g = roper_suffridge_generator(OneVarMap::Koebe, 0.0, 1.0, c(2.0, 0.0)).unwrap();
        match &g.form {
            GeneratorForm::Pushforward(PushforwardSpec::RoperSuffridge {
                admissible,
                q_min,
                ..
            }) => {
                assert!(*admissible);
                assert!(q_min.abs() < 1e-14);
            }
            _ => unreachable!(),
        }
        // far outside: beta large makes the interior minimum negative
        let g = roper_suffridge_generator(OneVarMap::Koebe, 0.0, 1.9, c(2.0, 0.0)).unwrap();
        match &g.form {
            GeneratorForm::Pushforward(PushforwardSpec::RoperSuffridge { admissible, .. }) => {
                assert!(!*admissible);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn roper_suffridge_identity_base_is_linear() {
        // alpha = beta = 0, f = identity: h(z) = (z1, lambda z2) = Az
        let g = roper_suffridge_generator(OneVarMap::Identity, 0.0, 0.0, c(2.0, 0.0)).unwrap();
        let z = [c(0.3, 0.1), c(-0.2, 0.4)];
        let hz = g.eval(&z, 0.0).unwrap();
        assert!((hz[0] - z[0]).norm() < 1e-15);
        assert!((hz[1] - z[1] * c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn admissible_rs_generator_validates_on_koebe() {
        let g = roper_suffridge_generator(OneVarMap::Koebe, 1.5, 0.5, c(2.0, 0.0)).unwrap();
        let opts = ValidationOptions {
            radii: vec![0.3, 0.6, 0.9],
            samples_per_sphere: 1000,
            t_grid: vec![0.0],
            seed: 4,
        };
        let rep = validate(&g, &opts).unwrap();
        assert!(rep.pass, "min = {}", rep.min_re_inner);
    }

    #[test]
    fn remark_generator_validates_at_threshold_amplitude() {
        // |a| <= m(A)/|lambda_s - <m,lambda>| keeps h in the class
        let a = OperatorA::diagonal(&[c(1.7, 0.0), c(1.0, 0.0)]).unwrap();
        let lambda_s = c(1.7, 0.0);
        let dot = c(2.0, 0.0); // m = (0,2): 2 * 1.0
        let denom = (lambda_s - dot).norm();
        let amp = c(1.0 / denom, 0.0);
        let g = monomial_remark_generator(&a, MultiIndex(vec![0, 2]), 0, amp).unwrap();
        let rep = validate(&g, &ValidationOptions::default()).unwrap();
        assert!(rep.pass, "min = {}", rep.min_re_inner);
    }

    #[test]
    fn polynomial_pushforward_matches_closed_form() {
        // f(z) = (z1 + w z2^2, z2) with A = diag(2,1) and field Q = A w:
        // h = [Df]^{-1} A f(z) = Az exactly (resonant direction).
        let a = OperatorA::diagonal(&[c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        let f2 = HomPolyMap::monomial(2, MultiIndex(vec![0, 2]), 0, c(5.0, 0.0)).unwrap();
        let mut maps = std::collections::BTreeMap::new();
        maps.insert(2, f2);
        let map = TruncatedMap::with_maps(2, 2, maps, crate::polyspace::Provenance::Manual)
            .unwrap();
        let field = GeneratorSpec::linear(a.clone());
        let g = GeneratorSpec {
            a: a.clone(),
            form: GeneratorForm::Pushforward(PushforwardSpec::Polynomial {
                map,
                field: Box::new(field),
            }),
        };
        let z = [c(0.2, 0.1), c(0.3, -0.2)];
        let hz = g.eval(&z, 0.0).unwrap();
        let mut az = vec![c(0.0, 0.0); 2];
        a.apply(&z, &mut az);
        assert!((hz[0] - az[0]).norm() < 1e-12);
        assert!((hz[1] - az[1]).norm() < 1e-12);
    }

    #[test]
    fn generator_json_round_trip() {
        let g = example_generator(c(2.0, 0.0), TimeFunction::Window { t_end: 3.0 }).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: GeneratorSpec = serde_json::from_str(&text).unwrap();
        let z = [c(0.2, 0.1), c(0.3, -0.1)];
        for t in [0.0, 2.9, 3.1] {
            let v1 = g.eval(&z, t).unwrap();
            let v2 = back.eval(&z, t).unwrap();
            assert!((v1[0] - v2[0]).norm() < 1e-15);
            assert!((v1[1] - v2[1]).norm() < 1e-15);
        }
    }
}
