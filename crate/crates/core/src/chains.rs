//! Construction of the chain g(z, s) = lim_{t -> inf} e^{tA} (v(z,s,t) +
//! sum_{k=2}^{n0} F_k(v(z,s,t)^k, t)) and the chain-level checks:
//! subordination, growth bound, univalence spot checks, Taylor-coefficient
//! recovery by torus quadrature, and the necessary condition for membership
//! in the asymptotically spirallike class.

use crate::coefficients::{CoeffError, CoefficientSolution};
use crate::generators::{Generator, GeneratorError, GeneratorSpec};
use crate::polyspace::{HomPolyMap, MultiIndex, PolyError};
use crate::spectral::OperatorA;
use crate::transition::{integrate, least_squares_slope, TransitionError};
use crate::{inner, vec_dist, vec_norm, C64, CMat, CVec};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("evaluation point has norm {norm} > 0.95")]
    PointOutsideDomain { norm: f64 },
    #[error("coefficient solutions must cover degrees 2..={expected}, got {got:?}")]
    CoeffsCoverage { expected: usize, got: Vec<usize> },
    #[error("chain increments stalled above tolerance by t = {t_max}")]
    NoConvergence { t_max: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainOptions {
    /// Convergence tolerance on successive increments of u(z, s, t).
    pub tol: f64,
    /// Integrator tolerance for the transition flow.
    pub ode_tol: f64,
    /// Grid step Delta as a multiple of 1/m(A).
    pub step_factor: f64,
    /// Horizon cap T_max = s + horizon_factor / m(A).
    pub horizon_factor: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            tol: 1e-8,
            ode_tol: 1e-9,
            step_factor: 0.5,
            horizon_factor: 40.0,
        }
    }
}

/// One chain evaluation g(z, s).
#[derive(Debug, Clone, Serialize)]
pub struct ChainEvaluation {
    pub z: Vec<C64>,
    pub s: f64,
    pub value: Vec<C64>,
    pub t_used: f64,
    pub tail_estimate: f64,
    pub converged: bool,
    /// (t_j, |u_j - u_{j-1}|) for diagnostics.
    pub increments: Vec<(f64, f64)>,
    /// Fitted exponential decay rate of the increments (None when they start
    /// below tolerance).
    pub fitted_decay: Option<f64>,
    /// (n0 + 1) m(A) - k+(A), the epsilon -> 0 theoretical decay rate.
    pub theoretical_decay: f64,
}

/// Shared per-grid data: e^{t_j A} and F_k(t_j).
struct ChainGrid {
    times: Vec<f64>,
    exps: Vec<CMat>,
    coeff_maps: Vec<Vec<HomPolyMap>>,
}

fn build_grid(
    a: &OperatorA,
    coeffs: &[Arc<CoefficientSolution>],
    s: f64,
    opts: &ChainOptions,
) -> Result<ChainGrid, ChainError> {
    let m = a.accretivity();
    let step = opts.step_factor / m;
    let t_max = s + opts.horizon_factor / m;
    let count = ((t_max - s) / step).ceil() as usize + 1;
    let times: Vec<f64> = (0..count).map(|j| s + step * j as f64).collect();
    let exps: Vec<CMat> = times.iter().map(|&t| a.exp(t)).collect();
    let mut coeff_maps = Vec::with_capacity(times.len());
    for &t in &times {
        let mut maps = Vec::with_capacity(coeffs.len());
        for sol in coeffs {
            maps.push(sol.eval_poly(t)?);
        }
        coeff_maps.push(maps);
    }
    Ok(ChainGrid {
        times,
        exps,
        coeff_maps,
    })
}

fn check_coverage(a: &OperatorA, coeffs: &[Arc<CoefficientSolution>]) -> Result<(), ChainError> {
    let n0 = a.n0();
    let got: Vec<usize> = coeffs.iter().filter_map(|c| c.degree()).collect();
    let expected: Vec<usize> = (2..=n0).collect();
    if got != expected {
        return Err(ChainError::CoeffsCoverage { expected: n0, got });
    }
    Ok(())
}

fn eval_u(exp_ta: &CMat, coeff_maps: &[HomPolyMap], v: &[C64]) -> Vec<C64> {
    let n = v.len();
    let mut inner_sum = v.to_vec();
    for q in coeff_maps {
        q.eval_acc(v, &mut inner_sum);
    }
    let mut out = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            acc += exp_ta[[i, j]] * inner_sum[j];
        }
        out[i] = acc;
    }
    out
}

fn chain_limit_on_grid(
    h: &dyn Generator,
    grid: &ChainGrid,
    z: &[C64],
    s: f64,
    opts: &ChainOptions,
) -> Result<ChainEvaluation, ChainError> {
    let norm = vec_norm(z);
    if norm > 0.95 + 1e-12 {
        return Err(ChainError::PointOutsideDomain { norm });
    }
    let a = h.linear_part();
    let mut v = z.to_vec();
    let mut u_prev = eval_u(&grid.exps[0], &grid.coeff_maps[0], &v);
    let mut increments: Vec<(f64, f64)> = Vec::new();
    let mut consecutive = 0usize;
    let mut converged = false;
    let mut t_used = s;
    let mut tail = f64::INFINITY;
    for j in 1..grid.times.len() {
        let (t0, t1) = (grid.times[j - 1], grid.times[j]);
        let seg = integrate(h, &v, t0, t1, opts.ode_tol)?;
        v = seg.end_value().to_vec();
        let u = eval_u(&grid.exps[j], &grid.coeff_maps[j], &v);
        let inc = vec_dist(&u, &u_prev);
        increments.push((t1, inc));
        u_prev = u;
        t_used = t1;
        tail = inc;
        if inc < opts.tol {
            consecutive += 1;
            if consecutive >= 3 {
                converged = true;
                break;
            }
        } else {
            consecutive = 0;
        }
    }
    if !converged {
        return Err(ChainError::NoConvergence {
            t_max: *grid.times.last().unwrap(),
        });
    }
    let pts: Vec<(f64, f64)> = increments
        .iter()
        .filter(|(_, inc)| *inc > 1e-14)
        .map(|&(t, inc)| (t, inc.ln()))
        .collect();
    let fitted_decay = (pts.len() >= 4).then(|| -least_squares_slope(&pts));
    Ok(ChainEvaluation {
        z: z.to_vec(),
        s,
        value: u_prev,
        t_used,
        tail_estimate: tail,
        converged,
        increments,
        fitted_decay,
        theoretical_decay: (a.n0() as f64 + 1.0) * a.accretivity() - a.k_plus(),
    })
}

/// Evaluate the chain limit at a single point.
pub fn chain_limit(
    h: &dyn Generator,
    coeffs: &[Arc<CoefficientSolution>],
    z: &[C64],
    s: f64,
    opts: &ChainOptions,
) -> Result<ChainEvaluation, ChainError> {
    check_coverage(h.linear_part(), coeffs)?;
    let grid = build_grid(h.linear_part(), coeffs, s, opts)?;
    chain_limit_on_grid(h, &grid, z, s, opts)
}

/// Evaluate the chain limit on a batch of points. The grid data (matrix
/// exponentials, coefficient maps) is shared and precomputed; points are
/// processed in parallel with a deterministic output order.
pub fn chain_limit_batch(
    h: &dyn Generator,
    coeffs: &[Arc<CoefficientSolution>],
    points: &[Vec<C64>],
    s: f64,
    opts: &ChainOptions,
) -> Result<Vec<ChainEvaluation>, ChainError> {
    check_coverage(h.linear_part(), coeffs)?;
    let grid = build_grid(h.linear_part(), coeffs, s, opts)?;
    points
        .par_iter()
        .map(|z| chain_limit_on_grid(h, &grid, z, s, opts))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SubordinationReport {
    pub difference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Verify g(v(z, s, t), t) = g(z, s).
pub fn check_subordination(
    h: &dyn Generator,
    coeffs: &[Arc<CoefficientSolution>],
    z: &[C64],
    s: f64,
    t: f64,
    opts: &ChainOptions,
) -> Result<SubordinationReport, ChainError> {
    if t < s {
        return Err(ChainError::PreconditionViolated(format!(
            "need s <= t, got s = {s}, t = {t}"
        )));
    }
    let rhs = chain_limit(h, coeffs, z, s, opts)?;
    let traj = integrate(h, z, s, t, opts.ode_tol)?;
    let lhs = chain_limit(h, coeffs, traj.end_value(), t, opts)?;
    let difference = vec_dist(&lhs.value, &rhs.value);
    let tolerance = 100.0 * opts.tol;
    Ok(SubordinationReport {
        difference,
        tolerance,
        pass: difference <= tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    /// (radius, sup |e^{-sA} g|) pairs used for the fit.
    pub sups: Vec<(f64, f64)>,
    pub fitted_exponent: f64,
    /// 2 k+(A)/m(A) + epsilon + 0.1.
    pub exponent_bound: f64,
    pub pass: bool,
}

/// Log-log fit of sup_{|z|=r} |e^{-sA} g(z, s)| against 1/(1 - r); the fitted
/// exponent must stay below 2 k+/m + epsilon + 0.1.
pub fn check_growth_bound(sups: &[(f64, f64)], k_plus: f64, m: f64, epsilon: f64) -> GrowthReport {
    let pts: Vec<(f64, f64)> = sups
        .iter()
        .map(|&(r, s)| ((1.0 / (1.0 - r)).ln(), s.max(1e-300).ln()))
        .collect();
    let fitted = least_squares_slope(&pts);
    let bound = 2.0 * k_plus / m + epsilon + 0.1;
    GrowthReport {
        sups: sups.to_vec(),
        fitted_exponent: fitted,
        exponent_bound: bound,
        pass: fitted <= bound,
    }
}

/// sup over sampled spheres of |e^{-sA} g(z, s)| per radius, computed through
/// batch chain evaluations.
pub fn chain_sup_on_spheres(
    h: &dyn Generator,
    coeffs: &[Arc<CoefficientSolution>],
    s: f64,
    radii: &[f64],
    samples: usize,
    seed: u64,
    opts: &ChainOptions,
) -> Result<Vec<(f64, f64)>, ChainError> {
    let a = h.linear_part();
    let exp_neg = a.exp(-s);
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let pts = crate::sampling::sphere_points(a.dim(), r, samples, seed);
        let evals = chain_limit_batch(h, coeffs, &pts, s, opts)?;
        let mut sup: f64 = 0.0;
        for e in &evals {
            let gv = CVec::from_vec(e.value.clone());
            let back = exp_neg.dot(&gv);
            sup = sup.max(back.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
        }
        out.push((r, sup));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct UnivalenceReport {
    /// min over pairs of |g(z_i) - g(z_j)| / |z_i - z_j|.
    pub min_pair_ratio: f64,
    /// min over Jacobian sample points of |det Dg|.
    pub min_jacobian_det: f64,
    pub pass: bool,
}

/// Pairwise-distinctness and Jacobian spot check for a computed map.
/// A failure indicates tolerance issues rather than mathematical falsity.
pub fn univalence_spot_check(
    map: &(dyn Fn(&[C64]) -> Vec<C64> + Sync),
    points: &[Vec<C64>],
    jacobian_samples: usize,
) -> UnivalenceReport {
    let values: Vec<Vec<C64>> = points.iter().map(|z| map(z)).collect();
    let mut min_ratio = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dz = vec_dist(&points[i], &points[j]);
            if dz < 1e-12 {
                continue;
            }
            let dg = vec_dist(&values[i], &values[j]);
            min_ratio = min_ratio.min(dg / dz);
        }
    }
    let n = points.first().map(|p| p.len()).unwrap_or(0);
    let eps = 1e-6;
    let mut min_det = f64::INFINITY;
    let step = (points.len() / jacobian_samples.max(1)).max(1);
    for z in points.iter().step_by(step).take(jacobian_samples) {
        let mut jac = CMat::zeros((n, n));
        for col in 0..n {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[col] += C64::new(eps, 0.0);
            zm[col] -= C64::new(eps, 0.0);
            let fp = map(&zp);
            let fm = map(&zm);
            for row in 0..n {
                jac[[row, col]] = (fp[row] - fm[row]) / C64::new(2.0 * eps, 0.0);
            }
        }
        min_det = min_det.min(det(&jac).norm());
    }
    UnivalenceReport {
        min_pair_ratio: min_ratio,
        min_jacobian_det: min_det,
        pass: min_ratio > 1e-4 && min_det > 1e-10,
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(m: &CMat) -> C64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut sign = C64::new(1.0, 0.0);
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if a[[r, col]].norm() > a[[pivot, col]].norm() {
                pivot = r;
            }
        }
        if a[[pivot, col]].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if pivot != col {
            for c in 0..n {
                let tmp = a[[col, c]];
                a[[col, c]] = a[[pivot, c]];
                a[[pivot, c]] = tmp;
            }
            sign = -sign;
        }
        for r in (col + 1)..n {
            let f = a[[r, col]] / a[[col, col]];
            for c in col..n {
                let v = a[[col, c]];
                a[[r, c]] -= f * v;
            }
        }
    }
    let mut d = sign;
    for i in 0..n {
        d *= a[[i, i]];
    }
    d
}

/// Finite-difference Dg(0, s) compared against e^{sA}; returns the max
/// entrywise error.
pub fn chain_origin_derivative_check(
    h: &dyn Generator,
    coeffs: &[Arc<CoefficientSolution>],
    s: f64,
    opts: &ChainOptions,
) -> Result<f64, ChainError> {
    let a = h.linear_part();
    let n = a.dim();
    let expected = a.exp(s);
    let eps = 1e-5;
    let mut max_err: f64 = 0.0;
    for col in 0..n {
        let mut zp = vec![C64::new(0.0, 0.0); n];
        let mut zm = vec![C64::new(0.0, 0.0); n];
        zp[col] = C64::new(eps, 0.0);
        zm[col] = C64::new(-eps, 0.0);
        let gp = chain_limit(h, coeffs, &zp, s, opts)?;
        let gm = chain_limit(h, coeffs, &zm, s, opts)?;
        for row in 0..n {
            let fd = (gp.value[row] - gm.value[row]) / C64::new(2.0 * eps, 0.0);
            max_err = max_err.max((fd - expected[[row, col]]).norm());
        }
    }
    Ok(max_err)
}

// ---------------------------------------------------------------------------
// Taylor-coefficient extraction by torus quadrature.
// ---------------------------------------------------------------------------

/// Fixed torus radius for coefficient extraction.
pub const TORUS_RHO: f64 = 0.4;
/// Fixed trapezoid points per dimension.
pub const TORUS_POINTS: usize = 64;

/// The full product-torus grid |z_j| = rho with `ppd` points per dimension,
/// in row-major digit order.
pub fn torus_grid(n: usize, rho: f64, ppd: usize) -> Vec<Vec<C64>> {
    let total = ppd.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut digits = idx;
        let mut z = Vec::with_capacity(n);
        for _ in 0..n {
            let d = digits % ppd;
            digits /= ppd;
            let theta = 2.0 * std::f64::consts::PI * d as f64 / ppd as f64;
            z.push(C64::new(0.0, theta).exp() * rho);
        }
        out.push(z);
    }
    out
}

/// Degree-k Taylor coefficients of an analytic map from its values on the
/// torus grid: c[m, s] = mean over grid of f_s(z) e^{-i <m, theta>} / rho^k.
/// Exponentially accurate for maps analytic past the torus radius.
pub fn torus_taylor_from_values(
    n: usize,
    rho: f64,
    ppd: usize,
    values: &[Vec<C64>],
    k: usize,
) -> Result<HomPolyMap, PolyError> {
    let total = ppd.pow(n as u32);
    assert_eq!(values.len(), total, "grid/value mismatch");
    let b = crate::polyspace::basis(n, k);
    let mut q = HomPolyMap::zero(n, k);
    let scale = 1.0 / (total as f64 * rho.powi(k as i32));
    for m in &b.list {
        for s in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (idx, val) in values.iter().enumerate() {
                let mut digits = idx;
                let mut phase = 0.0;
                for mi in &m.0 {
                    let d = digits % ppd;
                    digits /= ppd;
                    phase -= 2.0 * std::f64::consts::PI * d as f64 / ppd as f64 * *mi as f64;
                }
                acc += val[s] * C64::new(0.0, phase).exp();
            }
            q.set_coeff(m, s, acc * scale);
        }
    }
    Ok(q)
}

// ---------------------------------------------------------------------------
// Necessary condition for A-asymptotically spirallike membership.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NecessaryVerdict {
    /// Partial integrals Cauchy and vanishing: consistent with membership.
    ConsistentDecay,
    /// Partial integrals stay bounded away from zero.
    NonVanishing,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct NecessaryConditionReport {
    pub exponent_re: f64,
    pub exponent_im: f64,
    /// |psi(T)| on the supplied grid.
    pub partial_integrals: Vec<(f64, f64)>,
    pub tail_increment_max: f64,
    pub tail_abs_max: f64,
    pub verdict: NecessaryVerdict,
}

/// Evaluate the partial integrals
/// psi(T) = int_0^T e^{-s mu} (h_ij^k(s) + mu f_ij^k) ds with
/// mu = lambda_i + lambda_j - lambda_k on T_grid and classify their behavior.
///
/// Indices are 0-based; requires diagonal A, Re(mu) <= 0 and mu != 0.
pub fn asymptotic_necessary_condition(
    generator: &GeneratorSpec,
    f_coeff_2: &HomPolyMap,
    i: usize,
    j: usize,
    k_out: usize,
    t_grid: &[f64],
) -> Result<NecessaryConditionReport, ChainError> {
    let a = &generator.a;
    if !a.is_exactly_diagonal() {
        return Err(ChainError::PreconditionViolated(
            "necessary condition requires diagonal A".into(),
        ));
    }
    let n = a.dim();
    if i >= n || j >= n || k_out >= n {
        return Err(ChainError::PreconditionViolated(
            "component indices out of range".into(),
        ));
    }
    let lambda = a.eigenvalues();
    let mu = lambda[i] + lambda[j] - lambda[k_out];
    if mu.re > 1e-12 {
        return Err(ChainError::PreconditionViolated(format!(
            "Re(lambda_i + lambda_j - lambda_k) = {} > 0",
            mu.re
        )));
    }
    if mu.norm() < 1e-12 {
        return Err(ChainError::PreconditionViolated(
            "lambda_i + lambda_j - lambda_k = 0 (exact resonance)".into(),
        ));
    }
    let mut m = vec![0u32; n];
    m[i] += 1;
    m[j] += 1;
    let m = MultiIndex(m);
    let f_c = f_coeff_2.coeff(&m, k_out);

    let mut grid: Vec<f64> = t_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let integrand = |s: f64| -> C64 {
        let h_c = generator
            .hk_at(2, s)
            .map(|h| h.coeff(&m, k_out))
            .unwrap_or(C64::new(0.0, 0.0));
        (-mu * s).exp() * (h_c + mu * f_c)
    };
    let mut partials = Vec::with_capacity(grid.len());
    let mut acc = C64::new(0.0, 0.0);
    let mut prev = 0.0;
    for &t in &grid {
        acc += crate::quad::integrate(integrand, prev, t, 1e-12, 1e-12).value;
        prev = t;
        partials.push((t, acc.norm()));
    }
    let half = partials.len() / 2;
    let tail_abs_max = partials[half..].iter().map(|p| p.1).fold(0.0, f64::max);
    let mut tail_inc: f64 = 0.0;
    for w in partials[half.saturating_sub(1)..].windows(2) {
        tail_inc = tail_inc.max((w[1].1 - w[0].1).abs());
    }
    let scale = 1.0 + f_c.norm() * mu.norm();
    let verdict = if tail_inc <= 1e-6 && tail_abs_max <= 1e-5 {
        NecessaryVerdict::ConsistentDecay
    } else if tail_abs_max > 1e-3 * scale {
        NecessaryVerdict::NonVanishing
    } else {
        NecessaryVerdict::Inconclusive
    };
    Ok(NecessaryConditionReport {
        exponent_re: mu.re,
        exponent_im: mu.im,
        partial_integrals: partials,
        tail_increment_max: tail_inc,
        tail_abs_max,
        verdict,
    })
}

/// min over a batch of Re<g(z), z>; diagnostic helper.
pub fn chain_min_re_inner(evals: &[ChainEvaluation]) -> f64 {
    evals
        .iter()
        .map(|e| inner(&e.value, &e.z).re)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{solve_chain_coefficients, SolveOptions};
    use crate::generators::{example_generator, TimeFunction};
    use crate::polyspace::Provenance;
    use crate::spectral::OperatorA;
    use std::collections::BTreeMap;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn example_chain(
        lambda: f64,
        a_t: TimeFunction,
        f0_coeff: C64,
    ) -> (Arc<GeneratorSpec>, Vec<Arc<CoefficientSolution>>) {
        let gen = Arc::new(example_generator(c(lambda, 0.0), a_t).unwrap());
        let mut f0 = BTreeMap::new();
        if f0_coeff != c(0.0, 0.0) {
            f0.insert(
                2,
                HomPolyMap::monomial(2, MultiIndex(vec![0, 2]), 0, f0_coeff).unwrap(),
            );
        }
        let coeffs =
            solve_chain_coefficients(gen.clone(), &f0, gen.a.n0(), SolveOptions::default())
                .unwrap();
        (gen, coeffs)
    }

    #[test]
    fn linear_chain_is_exponential() {
        let a = OperatorA::diagonal(&[c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        let gen = Arc::new(GeneratorSpec::linear(a.clone()));
        let coeffs = solve_chain_coefficients(
            gen.clone(),
            &BTreeMap::new(),
            a.n0(),
            SolveOptions::default(),
        )
        .unwrap();
        let opts = ChainOptions::default();
        let s = 0.7;
        let z = vec![c(0.3, 0.1), c(-0.2, 0.4)];
        let eval = chain_limit(gen.as_ref(), &coeffs, &z, s, &opts).unwrap();
        assert!(eval.converged);
        let e = a.exp(s);
        for i in 0..2 {
            let expect = e[[i, 0]] * z[0] + e[[i, 1]] * z[1];
            assert!((eval.value[i] - expect).norm() < 1e-7);
        }
        // u is constant in t for the linear chain, so convergence is immediate
        assert!(eval.t_used <= s + 2.0);
        // z = 0 maps to 0
        let zero = vec![c(0.0, 0.0); 2];
        let eval = chain_limit(gen.as_ref(), &coeffs, &zero, s, &opts).unwrap();
        assert!(vec_norm(&eval.value) < 1e-12);
    }

    #[test]
    fn example_chain_with_zero_datum_is_identity() {
        // F0_le = 0: F2(t) exactly cancels the z2^2 content accumulated by v,
        // so g(., 0) is the identity.
        let (gen, coeffs) =
            example_chain(2.5, TimeFunction::ExpDecay { rate: 1.0 }, c(0.0, 0.0));
        let opts = ChainOptions::default();
        let z = vec![c(0.3, 0.0), c(0.4, 0.0)];
        let eval = chain_limit(gen.as_ref(), &coeffs, &z, 0.0, &opts).unwrap();
        assert!(eval.converged);
        assert!(vec_dist(&eval.value, &z) < 1e-6, "{:?}", eval.value);
    }

    #[test]
    fn example_chain_matches_parametric_map() {
        // F0_le = -2 z2^2 e1 reproduces the parametric-representation map
        // (z1 - 2 z2^2, z2), with 2 = int_0^inf e^{-u} e^{0.5 u} du.
        let (gen, coeffs) =
            example_chain(2.5, TimeFunction::ExpDecay { rate: 1.0 }, c(-2.0, 0.0));
        let opts = ChainOptions::default();
        for z in [
            vec![c(0.3, 0.0), c(0.4, 0.0)],
            vec![c(-0.2, 0.3), c(0.1, -0.5)],
        ] {
            let eval = chain_limit(gen.as_ref(), &coeffs, &z, 0.0, &opts).unwrap();
            assert!(eval.converged);
            let expect = vec![z[0] - c(2.0, 0.0) * z[1] * z[1], z[1]];
            assert!(
                vec_dist(&eval.value, &expect) < 1e-6,
                "{:?} vs {expect:?}",
                eval.value
            );
        }
    }

    #[test]
    fn chain_decay_rate_matches_theory() {
        let (gen, coeffs) =
            example_chain(2.5, TimeFunction::ExpDecay { rate: 1.0 }, c(-2.0, 0.0));
        let opts = ChainOptions::default();
        let z = vec![c(0.4, 0.1), c(0.5, -0.2)];
        let eval = chain_limit(gen.as_ref(), &coeffs, &z, 0.0, &opts).unwrap();
        // theoretical rate (n0+1) m - k+ = 3 - 2.5 = 0.5
        assert!((eval.theoretical_decay - 0.5).abs() < 1e-12);
        if let Some(rate) = eval.fitted_decay {
            assert!(rate >= eval.theoretical_decay - 0.1, "fitted {rate}");
        }
    }

    #[test]
    fn subordination_on_example_chain() {
        let (gen, coeffs) =
            example_chain(2.0, TimeFunction::Window { t_end: 3.0 }, c(0.7, 0.2));
        let opts = ChainOptions::default();
        let z = vec![c(0.3, 0.0), c(0.4, 0.0)];
        let rep = check_subordination(gen.as_ref(), &coeffs, &z, 0.0, 2.0, &opts).unwrap();
        assert!(rep.pass, "difference {}", rep.difference);
        // t = s degenerate case
        let rep = check_subordination(gen.as_ref(), &coeffs, &z, 1.0, 1.0, &opts).unwrap();
        assert!(rep.difference < 1e-9);
    }

    #[test]
    fn origin_derivative_matches_exponential() {
        let (gen, coeffs) =
            example_chain(2.5, TimeFunction::ExpDecay { rate: 1.0 }, c(-2.0, 0.0));
        let opts = ChainOptions::default();
        for s in [0.0, 1.0, 2.0] {
            let err = chain_origin_derivative_check(gen.as_ref(), &coeffs, s, &opts).unwrap();
            assert!(err < 1e-5, "s = {s}: {err}");
        }
    }

    #[test]
    fn taylor_recovery_from_torus() {
        let (gen, coeffs) =
            example_chain(2.5, TimeFunction::ExpDecay { rate: 1.0 }, c(-2.0, 0.0));
        let opts = ChainOptions::default();
        let ppd = 32; // cheaper than the CLI default, ample for degree 2
        let grid = torus_grid(2, TORUS_RHO, ppd);
        let evals = chain_limit_batch(gen.as_ref(), &coeffs, &grid, 0.0, &opts).unwrap();
        let values: Vec<Vec<C64>> = evals.into_iter().map(|e| e.value).collect();
        let q2 = torus_taylor_from_values(2, TORUS_RHO, ppd, &values, 2).unwrap();
        let expect_f2 = coeffs[0].eval_poly(0.0).unwrap();
        let diff = q2.add(&expect_f2.scale(c(-1.0, 0.0))).unwrap();
        assert!(diff.poly_norm() < 1e-6, "diff {}", diff.poly_norm());
        // degree-1 part is the identity
        let q1 = torus_taylor_from_values(2, TORUS_RHO, ppd, &values, 1).unwrap();
        assert!((q1.coeff(&MultiIndex(vec![1, 0]), 0) - c(1.0, 0.0)).norm() < 1e-7);
        assert!((q1.coeff(&MultiIndex(vec![0, 1]), 1) - c(1.0, 0.0)).norm() < 1e-7);
        assert!(q1.coeff(&MultiIndex(vec![1, 0]), 1).norm() < 1e-7);
    }

    #[test]
    fn torus_extraction_exact_on_polynomials() {
        // f(z) = z + 3 z1 z2 e2 recovered exactly
        let f2 = HomPolyMap::monomial(2, MultiIndex(vec![1, 1]), 1, c(3.0, -1.0)).unwrap();
        let mut maps = BTreeMap::new();
        maps.insert(2, f2.clone());
        let f =
            crate::polyspace::TruncatedMap::with_maps(2, 2, maps, Provenance::Manual).unwrap();
        let grid = torus_grid(2, TORUS_RHO, 16);
        let values: Vec<Vec<C64>> = grid.iter().map(|z| f.eval(z)).collect();
        let q = torus_taylor_from_values(2, TORUS_RHO, 16, &values, 2).unwrap();
        let diff = q.add(&f2.scale(c(-1.0, 0.0))).unwrap();
        assert!(diff.poly_norm() < 1e-12);
    }

    #[test]
    fn univalence_spot_checks() {
        // identity map: ratio exactly 1
        let pts = crate::sampling::ball_points(2, 0.9, 200, 3);
        let rep = univalence_spot_check(&|z: &[C64]| z.to_vec(), &pts, 20);
        assert!(rep.pass);
        assert!((rep.min_pair_ratio - 1.0).abs() < 1e-9);
        assert!((rep.min_jacobian_det - 1.0).abs() < 1e-6);

        // triangular map (z1 - 2 z2^2, z2): globally injective
        let rep = univalence_spot_check(
            &|z: &[C64]| vec![z[0] - c(2.0, 0.0) * z[1] * z[1], z[1]],
            &pts,
            20,
        );
        assert!(rep.pass);
    }

    #[test]
    fn growth_bound_linear_map() {
        // g = z: sup = r, trivially within any positive bound
        let sups: Vec<(f64, f64)> = [0.5, 0.7, 0.8, 0.9, 0.95]
            .iter()
            .map(|&r| (r, r))
            .collect();
        let rep = check_growth_bound(&sups, 2.5, 1.0, 0.1);
        assert!(rep.pass);
        assert!(rep.fitted_exponent < 1.0);
    }

    #[test]
    fn necessary_condition_examples() {
        let grid: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        // exponent with positive real part: precondition violated
        let a = OperatorA::diagonal(&[c(1.0, 2.0), c(1.0, -2.0)]).unwrap();
        let gen = GeneratorSpec::linear(a);
        match asymptotic_necessary_condition(&gen, &HomPolyMap::zero(2, 2), 0, 1, 0, &grid) {
            Err(ChainError::PreconditionViolated(_)) => {}
            other => panic!("expected precondition violation, got {other:?}"),
        }

        // purely imaginary exponent: lambda = (1 + 2i, 2), m = (2, 0),
        // component 2: mu = 2 + 4i - 2 = 4i.
        let a = OperatorA::diagonal(&[c(1.0, 2.0), c(2.0, 0.0)]).unwrap();
        // zero data: integrals identically zero
        let gen = GeneratorSpec::linear(a.clone());
        let rep =
            asymptotic_necessary_condition(&gen, &HomPolyMap::zero(2, 2), 0, 0, 1, &grid)
                .unwrap();
        assert_eq!(rep.verdict, NecessaryVerdict::ConsistentDecay);

        // constant h with |mu f| > |h|: oscillatory non-decaying partials
        let h2 = HomPolyMap::monomial(2, MultiIndex(vec![2, 0]), 1, c(0.3, 0.0)).unwrap();
        let gen2 = GeneratorSpec::autonomous(a.clone(), vec![h2]).unwrap();
        let f2 = HomPolyMap::monomial(2, MultiIndex(vec![2, 0]), 1, c(0.5, 0.0)).unwrap();
        let rep = asymptotic_necessary_condition(&gen2, &f2, 0, 0, 1, &grid).unwrap();
        assert_eq!(rep.verdict, NecessaryVerdict::NonVanishing);

        // algebraic cancellation: f = -h/mu makes the integrand vanish
        let mu = c(0.0, 4.0);
        let h2 = HomPolyMap::monomial(2, MultiIndex(vec![2, 0]), 1, c(0.3, 0.0)).unwrap();
        let f2 =
            HomPolyMap::monomial(2, MultiIndex(vec![2, 0]), 1, c(0.3, 0.0) / (-mu)).unwrap();
        let gen3 = GeneratorSpec::autonomous(a, vec![h2]).unwrap();
        let rep = asymptotic_necessary_condition(&gen3, &f2, 0, 0, 1, &grid).unwrap();
        assert_eq!(rep.verdict, NecessaryVerdict::ConsistentDecay);
    }
}
