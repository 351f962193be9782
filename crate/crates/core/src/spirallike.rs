//! The autonomous theory: solutions of Df(z) h(z) = A f(z), spirallikeness
//! tests by flow membership, Roper-Suffridge type extensions, and the
//! non-compactness witnesses for resonant A.

use crate::coefficients::{CoeffError, SplitOperator, EXACT_RESONANCE_TOL};
use crate::generators::{Generator, GeneratorError, GeneratorSpec};
use crate::polyspace::{nk_assemble, HomPolyMap, MultiIndex, PolyError, Provenance, TruncatedMap};
use crate::spectral::{OperatorA, SpectralClass, SpectralError};
use crate::univar::OneVarMap;
use crate::{vec_norm, C64, CMat, CVec};
use ndarray_linalg::Solve;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpirallikeError {
    #[error("the spirallike solver requires an autonomous polynomial generator")]
    NotAutonomous,
    #[error(
        "no holomorphic solution at degree {degree}: N_{degree} has components along the \
         kernel directions {directions:?}"
    )]
    NoHolomorphicSolution {
        degree: usize,
        directions: Vec<(Vec<u32>, usize)>,
    },
    #[error("operator A is nonresonant; no witness exists")]
    NotResonant,
    #[error("branch failure: f(z1)/z1 or f'(z1) vanished on the sample domain")]
    BranchFailure,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Solution set of the truncated spirallike equation.
#[derive(Debug)]
pub enum SpirallikeSolution {
    /// A is nonresonant up to the truncation order: the solution is unique.
    Unique(TruncatedMap),
    /// Resonant degrees were solvable: the solutions form an affine set,
    /// described by the minimum-norm base point and kernel bases per
    /// resonant degree.
    Affine {
        base: TruncatedMap,
        kernels: Vec<(usize, Vec<HomPolyMap>)>,
    },
}

impl SpirallikeSolution {
    pub fn base(&self) -> &TruncatedMap {
        match self {
            SpirallikeSolution::Unique(f) => f,
            SpirallikeSolution::Affine { base, .. } => base,
        }
    }
}

/// Solve Df(z) h(z) = A f(z) for autonomous polynomial h by the coefficient
/// recursion 0 = B_k F_k + N_k, i.e. F_k = -B_k^{-1} N_k when B_k is
/// invertible.
///
/// At a resonant degree the equation is solvable iff N_k has no component in
/// the kernel directions; the minimum-norm particular solution (zero kernel
/// component) is then used and the kernel basis reported.
pub fn solve_spirallike(
    generator: &GeneratorSpec,
    order: usize,
) -> Result<SpirallikeSolution, SpirallikeError> {
    if !generator.is_polynomial() {
        return Err(SpirallikeError::NotAutonomous);
    }
    if !matches!(
        generator.form,
        crate::generators::GeneratorForm::Autonomous { .. }
    ) {
        return Err(SpirallikeError::NotAutonomous);
    }
    let a = &generator.a;
    let n = a.dim();
    let mut maps: BTreeMap<usize, HomPolyMap> = BTreeMap::new();
    let mut kernels: Vec<(usize, Vec<HomPolyMap>)> = Vec::new();
    for k in 2..=order {
        let op = SplitOperator::from_bk(a, k)?;
        let h_fn = |l: usize| generator.hk_at(l, 0.0);
        let nk = nk_assemble(n, k, &maps, &h_fn)?;
        let n_eig = op.to_eigen(nk.coeffs());
        let zero_slots: Vec<usize> = (0..op.dim)
            .filter(|&i| op.eigenvalues[i].norm() <= EXACT_RESONANCE_TOL)
            .collect();
        if !zero_slots.is_empty() {
            let scale = 1.0 + nk.poly_norm();
            let bad: Vec<usize> = zero_slots
                .iter()
                .copied()
                .filter(|&i| n_eig[i].norm() > 1e-12 * scale)
                .collect();
            if !bad.is_empty() {
                let info = op.basis_info.as_ref().expect("bk carries basis");
                return Err(SpirallikeError::NoHolomorphicSolution {
                    degree: k,
                    directions: bad
                        .iter()
                        .map(|&i| (info.slots[i].0 .0.clone(), info.slots[i].1 + 1))
                        .collect(),
                });
            }
            // kernel basis as polynomial maps
            let mut basis_maps = Vec::new();
            for &i in &zero_slots {
                let mut e = CVec::zeros(op.dim);
                e[i] = C64::new(1.0, 0.0);
                let v = op.from_eigen(&e);
                basis_maps.push(op.vec_to_poly(&v)?);
            }
            kernels.push((k, basis_maps));
        }
        let mut y = CVec::zeros(op.dim);
        for i in 0..op.dim {
            if op.eigenvalues[i].norm() <= EXACT_RESONANCE_TOL {
                y[i] = C64::new(0.0, 0.0); // minimum-norm particular choice
            } else {
                y[i] = -n_eig[i] / op.eigenvalues[i];
            }
        }
        let fk = op.vec_to_poly(&op.from_eigen(&y))?;
        maps.insert(k, fk);
    }
    let base = TruncatedMap::with_maps(n, order, maps, Provenance::Solver)?;
    if kernels.is_empty() {
        Ok(SpirallikeSolution::Unique(base))
    } else {
        Ok(SpirallikeSolution::Affine { base, kernels })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpirallikeResidualReport {
    /// (radius, max |Df(z) h(z) - A f(z)| over samples).
    pub per_radius: Vec<(f64, f64)>,
    /// ((r_small, r_large), residual(r_small)/residual(r_large)) for pairs
    /// with r_small = r_large / 2.
    pub decay_ratios: Vec<((f64, f64), f64)>,
    /// 2^{-K} * 4 with K the truncation order.
    pub ratio_bound: f64,
    /// true when every ratio is at most the bound (exact solutions with
    /// residual at rounding level skip the ratio check).
    pub pass: bool,
}

/// Sample max |Df(z) h(z) - A f(z)| per radius and verify the order-(K+1)
/// decay of the truncation residual.
pub fn spirallike_residual(
    f: &TruncatedMap,
    generator: &dyn Generator,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<SpirallikeResidualReport, SpirallikeError> {
    let a = generator.linear_part();
    let n = a.dim();
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        let pts = crate::sampling::sphere_points(n, r, samples, seed);
        let mut max_res: f64 = 0.0;
        let mut hz = vec![C64::new(0.0, 0.0); n];
        let mut az_f = vec![C64::new(0.0, 0.0); n];
        for z in &pts {
            generator.eval_into(z, 0.0, &mut hz)?;
            let jac = f.jacobian(z);
            let fz = f.eval(z);
            a.apply(&fz, &mut az_f);
            let mut res = 0.0f64;
            for i in 0..n {
                let mut dfh = C64::new(0.0, 0.0);
                for j in 0..n {
                    dfh += jac[[i, j]] * hz[j];
                }
                res += (dfh - az_f[i]).norm_sqr();
            }
            max_res = max_res.max(res.sqrt());
        }
        per_radius.push((r, max_res));
    }
    let k = f.order;
    let bound = 4.0 * 2f64.powi(-(k as i32));
    let mut ratios = Vec::new();
    let mut pass = true;
    for &(r_small, res_small) in &per_radius {
        if let Some(&(_, res_large)) = per_radius
            .iter()
            .find(|(r, _)| (r - 2.0 * r_small).abs() < 1e-12)
        {
            if res_large < 1e-14 {
                continue; // exact finite solution, nothing to fit
            }
            let ratio = res_small / res_large;
            pass &= ratio <= bound;
            ratios.push(((r_small, 2.0 * r_small), ratio));
        }
    }
    Ok(SpirallikeResidualReport {
        per_radius,
        decay_ratios: ratios,
        ratio_bound: bound,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub total: usize,
    pub converged: usize,
    /// Points where the damped Newton iteration failed to converge; reported,
    /// never silently dropped. They count as inconclusive, not as failures.
    pub inconclusive: usize,
    pub max_w_norm: f64,
    pub max_residual: f64,
    /// All converged points landed strictly inside the ball with residual
    /// at most 1e-9.
    pub pass: bool,
}

/// Test e^{-tA} f(B^n) subset f(B^n) on samples: solve f(w) = e^{-tA} f(z)
/// by damped Newton from w0 = e^{-tA} z and check |w| < 1.
pub fn spirallike_membership(
    eval: &dyn Fn(&[C64]) -> Vec<C64>,
    jacobian: &dyn Fn(&[C64]) -> CMat,
    a: &OperatorA,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> MembershipReport {
    let n = a.dim();
    let pts = crate::sampling::ball_points(n, 0.8, samples, seed);
    let mut report = MembershipReport {
        total: 0,
        converged: 0,
        inconclusive: 0,
        max_w_norm: 0.0,
        max_residual: 0.0,
        pass: true,
    };
    for &t in t_grid {
        let exp_neg = a.exp(-t);
        for z in &pts {
            report.total += 1;
            let fz = CVec::from_vec(eval(z));
            let target = exp_neg.dot(&fz);
            let zv = CVec::from_vec(z.clone());
            let mut w = exp_neg.dot(&zv);
            let mut res_norm = {
                let fw = eval(w.as_slice().unwrap());
                (0..n)
                    .map(|i| (fw[i] - target[i]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            };
            let mut ok = false;
            for _ in 0..50 {
                if res_norm <= 1e-9 {
                    ok = true;
                    break;
                }
                let jac = jacobian(w.as_slice().unwrap());
                let fw = CVec::from_vec(eval(w.as_slice().unwrap()));
                let rhs = &fw - &target;
                let step = match jac.solve(&rhs) {
                    Ok(s) => s,
                    Err(_) => break,
                };
                // damping: halve until the residual decreases
                let mut lambda = 1.0f64;
                let mut improved = false;
                for _ in 0..20 {
                    let cand = &w - &(&step * C64::from(lambda));
                    let fc = eval(cand.as_slice().unwrap());
                    let cand_res = (0..n)
                        .map(|i| (fc[i] - target[i]).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    if cand_res < res_norm {
                        w = cand;
                        res_norm = cand_res;
                        improved = true;
                        break;
                    }
                    lambda *= 0.5;
                }
                if !improved {
                    break;
                }
            }
            if !ok {
                report.inconclusive += 1;
                continue;
            }
            report.converged += 1;
            let wn = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            report.max_w_norm = report.max_w_norm.max(wn);
            report.max_residual = report.max_residual.max(res_norm);
            if wn >= 1.0 {
                report.pass = false;
            }
        }
    }
    report
}

/// Membership check specialized to a truncated polynomial map (analytic
/// Jacobian).
pub fn truncated_membership(
    f: &TruncatedMap,
    a: &OperatorA,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> MembershipReport {
    spirallike_membership(
        &|z| f.eval(z),
        &|z| f.jacobian(z),
        a,
        t_grid,
        samples,
        seed,
    )
}

/// The Roper-Suffridge type extension
/// Phi_{alpha,beta}(f)(z) = (f(z1), (f(z1)/z1)^alpha (f'(z1))^beta z2)
/// over A = diag(1, lambda).
#[derive(Debug, Clone, Serialize)]
pub struct RsExtension {
    pub f1: OneVarMap,
    pub alpha: f64,
    pub beta: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub q_min: f64,
    pub admissible: bool,
    pub truncated: TruncatedMap,
}

impl RsExtension {
    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        let w = self.f1.rs_weight(z[0], self.alpha, self.beta);
        vec![self.f1.eval(z[0]), w * z[1]]
    }

    pub fn jacobian(&self, z: &[C64]) -> CMat {
        let w = self.f1.rs_weight(z[0], self.alpha, self.beta);
        let wlog = self.f1.rs_weight_log_deriv(z[0], self.alpha, self.beta);
        let mut jac = CMat::zeros((2, 2));
        jac[[0, 0]] = self.f1.deriv(z[0]);
        jac[[1, 0]] = w * wlog * z[1];
        jac[[1, 1]] = w;
        jac
    }

    /// Exact supremum of |Phi(f)(z)| over the sphere |z| = r for the
    /// built-in maps with alpha, beta >= 0: both |f| and the weight are
    /// maximized at real positive z1, so the search reduces to one variable.
    pub fn sphere_sup(&self, r: f64, grid: usize) -> f64 {
        let mut sup: f64 = 0.0;
        for i in 0..=grid {
            let x = r * i as f64 / grid as f64;
            let zx = C64::new(x, 0.0);
            let fx = self.f1.eval(zx).norm();
            let wx = self.f1.rs_weight(zx, self.alpha, self.beta).norm();
            let val = (fx * fx + wx * wx * (r * r - x * x)).sqrt();
            sup = sup.max(val);
        }
        sup
    }
}

/// Build the extension with Taylor coefficients to the requested order taken
/// from the exact one-variable series.
pub fn roper_suffridge_extend(
    f1: OneVarMap,
    alpha: f64,
    beta: f64,
    lambda: C64,
    order: usize,
) -> Result<RsExtension, SpirallikeError> {
    if order < 2 {
        return Err(SpirallikeError::InvalidInput(
            "truncation order must be at least 2".into(),
        ));
    }
    let f_series = f1.series(order);
    let w_series = f1.rs_weight_series(alpha, beta, order.saturating_sub(1));
    let mut maps = BTreeMap::new();
    for k in 2..=order {
        let mut q = HomPolyMap::zero(2, k);
        // first component: c_k z1^k
        let ck = f_series[k - 1];
        if ck != 0.0 {
            q.set_coeff(&MultiIndex(vec![k as u32, 0]), 0, C64::new(ck, 0.0));
        }
        // second component: g_{k-1} z1^{k-1} z2
        let gk = w_series[k - 1];
        if gk != 0.0 {
            q.set_coeff(&MultiIndex(vec![(k - 1) as u32, 1]), 1, C64::new(gk, 0.0));
        }
        if q.poly_norm() > 0.0 {
            maps.insert(k, q);
        }
    }
    let truncated = TruncatedMap::with_maps(2, order, maps, Provenance::Extension)?;
    // admissibility from the exact quadratic minimum
    let gen = crate::generators::roper_suffridge_generator(f1, alpha, beta, lambda)?;
    let (q_min, admissible) = match &gen.form {
        crate::generators::GeneratorForm::Pushforward(
            crate::generators::PushforwardSpec::RoperSuffridge { q_min, admissible, .. },
        ) => (*q_min, *admissible),
        _ => unreachable!(),
    };
    Ok(RsExtension {
        f1,
        alpha,
        beta,
        lambda_re: lambda.re,
        lambda_im: lambda.im,
        q_min,
        admissible,
        truncated,
    })
}

/// Certificate of non-compactness for resonant A.
#[derive(Debug)]
pub struct WitnessResult {
    /// f(z) = z + M K(z^k0) with K a unit kernel element of B_{k0}.
    pub map: TruncatedMap,
    /// The generator h(z) = Az solving Df h = Af for this map.
    pub generator: GeneratorSpec,
    pub kernel_degree: usize,
    /// Graded-lex-first kernel direction (m, s) with s 1-based, for
    /// diagonal A.
    pub kernel_direction: Option<(Vec<u32>, usize)>,
    /// Coefficient norm of F_{k0}; at least the requested M.
    pub coefficient_norm: f64,
    /// Coefficient norm of sum_k B_k F_k, the exact residual of the
    /// spirallike equation; zero because F_{k0} spans the kernel.
    pub residual_coeff_norm: f64,
}

/// Construct spirallike maps of arbitrarily large norm for resonant A:
/// f(z) = z + M K(z^{k0}) with K a unit kernel element of the largest
/// singular B_{k0} and h(z) = Az. Errors with NotResonant when every B_k is
/// invertible.
pub fn noncompactness_witness(
    a: &OperatorA,
    m_target: f64,
) -> Result<WitnessResult, SpirallikeError> {
    if !a.is_diagonalizable() {
        return Err(SpirallikeError::InvalidInput(
            "witness construction requires diagonalizable A".into(),
        ));
    }
    let n0 = a.n0();
    let mut k0 = None;
    for k in (2..=n0.max(2)).rev() {
        let table = crate::polyspace::bk_eigenvalue_table(a, k);
        if table.iter().any(|(_, _, v)| v.norm() <= EXACT_RESONANCE_TOL) {
            k0 = Some(k);
            break;
        }
    }
    let k0 = k0.ok_or(SpirallikeError::NotResonant)?;
    let op = SplitOperator::from_bk(a, k0)?;
    // graded-lex-first kernel slot
    let slot = (0..op.dim)
        .find(|&i| op.eigenvalues[i].norm() <= EXACT_RESONANCE_TOL)
        .expect("resonant degree has a kernel slot");
    let mut e = CVec::zeros(op.dim);
    e[slot] = C64::new(1.0, 0.0);
    let kernel_vec = op.from_eigen(&e);
    let kernel_poly = op.vec_to_poly(&kernel_vec)?;
    let unit = kernel_poly.scale(C64::from(1.0 / kernel_poly.poly_norm()));
    let f_k0 = unit.scale(C64::from(m_target));
    let residual = op.matrix.dot(f_k0.coeffs());
    let residual_norm: f64 = residual.iter().map(|c| c.norm()).sum();
    let mut maps = BTreeMap::new();
    let coefficient_norm = f_k0.poly_norm();
    maps.insert(k0, f_k0);
    let map = TruncatedMap::with_maps(a.dim(), n0.max(2), maps, Provenance::Witness)?;
    let info = op.basis_info.as_ref().expect("bk carries basis");
    let kernel_direction = a
        .is_exactly_diagonal()
        .then(|| (info.slots[slot].0 .0.clone(), info.slots[slot].1 + 1));
    Ok(WitnessResult {
        map,
        generator: GeneratorSpec::linear(a.clone()),
        kernel_degree: k0,
        kernel_direction,
        coefficient_norm,
        residual_coeff_norm: residual_norm,
    })
}

/// Exact residual coefficients of Df h - Af for a truncated map with
/// h(z) = Az: the degree-k part is B_k F_k.
pub fn linear_generator_residual(a: &OperatorA, f: &TruncatedMap) -> f64 {
    let mut total = 0.0;
    for (k, q) in &f.maps {
        let bk = crate::polyspace::build_bk(a, *k);
        let r = bk.dot(q.coeffs());
        total += r.iter().map(|c| c.norm()).sum::<f64>();
    }
    total
}
