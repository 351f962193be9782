//! The coefficient ODEs dF_k/dt = B_k F_k + N_k and their polynomially
//! bounded solutions.
//!
//! Solutions are represented through the variation-of-constants formula with
//! the Green's function G_L(t) = e^{tL} P<= for t >= 0 and -e^{tL} P+ for
//! t < 0: the part of the initial value in the range of P<= can be prescribed
//! freely, the P+ part is forced by the improper integral over the future of
//! the inhomogeneity. Everything is computed in the eigenbasis of B_k, which
//! for diagonalizable A is known exactly from the eigenvalue formula
//! <m, lambda> - lambda_s.

use crate::generators::GeneratorSpec;
use crate::polyspace::{
    basis, bk_eigenvalue_table, build_bk, nk_assemble, HomPolyMap, MultiIndex,
};
use crate::quad;
use crate::spectral::{
    classify_re, split_from_eigendata, OperatorA, SpectralClass, SpectralError, SpectralSplit,
};
use crate::{C64, CMat, CVec};
use ndarray_linalg::{Inverse, Solve};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use thiserror::Error;

/// |<m, lambda> - lambda_s| below this is an exact resonance.
pub const EXACT_RESONANCE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CoeffError {
    #[error("lower-order coefficient solutions missing degree {0}")]
    MissingLowerOrder(usize),
    #[error("operator A must be diagonalizable for the coefficient pipeline")]
    NotDiagonalizable,
    #[error("coefficient pipeline requires a polynomial generator form")]
    NotPolynomial,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no monomial basis attached to this operator")]
    NoBasis,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Poly(#[from] crate::polyspace::PolyError),
}

/// Basis bookkeeping for B_k acting on P^k(C^n).
#[derive(Debug, Clone)]
pub struct BkBasis {
    pub n: usize,
    pub k: usize,
    /// slot i corresponds to the monomial (m, e_{s+1}).
    pub slots: Vec<(MultiIndex, usize)>,
}

/// A diagonalizable operator together with its eigenvalues classified by the
/// sign of the real part, ready for the Green's-function formula.
#[derive(Debug)]
pub struct SplitOperator {
    pub dim: usize,
    pub matrix: CMat,
    pub eigenvalues: Vec<C64>,
    pub classes: Vec<SpectralClass>,
    /// Eigenvector matrix; None means the standard basis already
    /// diagonalizes (diagonal A).
    w: Option<CMat>,
    w_inv: Option<CMat>,
    pub basis_info: Option<BkBasis>,
}

impl SplitOperator {
    /// B_k over a diagonalizable A, with exact eigenvalues and resonance
    /// classification from the multi-index formula. The eigenvectors are the
    /// pushforwards of the monomials z^m e_s through the eigenbasis of A.
    pub fn from_bk(a: &OperatorA, k: usize) -> Result<SplitOperator, CoeffError> {
        if !a.is_diagonalizable() {
            return Err(CoeffError::NotDiagonalizable);
        }
        let n = a.dim();
        let matrix = build_bk(a, k);
        let table = bk_eigenvalue_table(a, k);
        let mut eigenvalues = Vec::with_capacity(table.len());
        let mut classes = Vec::with_capacity(table.len());
        let mut slots = Vec::with_capacity(table.len());
        for (m, s, mu) in table {
            let class = if mu.norm() <= EXACT_RESONANCE_TOL {
                SpectralClass::Zero
            } else {
                classify_re(mu)?
            };
            eigenvalues.push(mu);
            classes.push(class);
            slots.push((m, s));
        }
        let (w, w_inv) = if a.is_exactly_diagonal() {
            (None, None)
        } else {
            // column for slot (m, s): coefficients of S ((S^{-1} z)^m e_{s+1})
            let s_mat = a.eigenvectors();
            let s_inv = s_mat
                .inv()
                .map_err(|e| SpectralError::Backend(e.to_string()))?;
            let dim = slots.len();
            let mut w = CMat::zeros((dim, dim));
            for (col, (m, s)) in slots.iter().enumerate() {
                let mono = HomPolyMap::monomial(n, m.clone(), *s, C64::new(1.0, 0.0))?;
                let pushed = mono.compose_linear(&s_inv, s_mat);
                for (row, c) in pushed.coeffs().iter().enumerate() {
                    w[[row, col]] = *c;
                }
            }
            let w_inv = w.inv().map_err(|e| SpectralError::Backend(e.to_string()))?;
            (Some(w), Some(w_inv))
        };
        Ok(SplitOperator {
            dim: slots.len(),
            matrix,
            eigenvalues,
            classes,
            w,
            w_inv,
            basis_info: Some(BkBasis { n, k, slots }),
        })
    }

    /// Generic diagonalizable operator with numeric classification; used for
    /// scalar/linear-ODE models and tests.
    pub fn from_matrix(l: &CMat) -> Result<SplitOperator, CoeffError> {
        let (vals, vecs, cond) = crate::spectral::eigendecompose(l)?;
        if cond > crate::spectral::EIG_CONDITION_LIMIT {
            return Err(CoeffError::NotDiagonalizable);
        }
        let classes = vals
            .iter()
            .map(|&v| classify_re(v))
            .collect::<Result<Vec<_>, _>>()?;
        let n = l.nrows();
        let exactly_diag = (0..n).all(|r| {
            (0..n).all(|c| {
                let v = vecs[[r, c]];
                if r == c {
                    v == C64::new(1.0, 0.0)
                } else {
                    v == C64::new(0.0, 0.0)
                }
            })
        });
        let (w, w_inv) = if exactly_diag {
            (None, None)
        } else {
            let w_inv = vecs
                .inv()
                .map_err(|e| SpectralError::Backend(e.to_string()))?;
            (Some(vecs), Some(w_inv))
        };
        Ok(SplitOperator {
            dim: n,
            matrix: l.clone(),
            eigenvalues: vals,
            classes,
            w,
            w_inv,
            basis_info: None,
        })
    }

    pub fn degree(&self) -> Option<usize> {
        self.basis_info.as_ref().map(|b| b.k)
    }

    pub fn has_zero_class(&self) -> bool {
        self.classes.contains(&SpectralClass::Zero)
    }

    /// min Re over the plus class; None when the plus class is empty.
    pub fn plus_decay_rate(&self) -> Option<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.classes)
            .filter(|(_, c)| **c == SpectralClass::Plus)
            .map(|(l, _)| l.re)
            .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.min(x))))
    }

    pub fn to_eigen(&self, v: &CVec) -> CVec {
        match &self.w_inv {
            None => v.clone(),
            Some(wi) => wi.dot(v),
        }
    }

    pub fn from_eigen(&self, y: &CVec) -> CVec {
        match &self.w {
            None => y.clone(),
            Some(w) => w.dot(y),
        }
    }

    /// The spectral split of the operator, with projections built from the
    /// exact classification.
    pub fn split(&self) -> Result<SpectralSplit, CoeffError> {
        let w = match &self.w {
            Some(w) => w.clone(),
            None => CMat::eye(self.dim),
        };
        Ok(split_from_eigendata(
            &self.matrix,
            &self.eigenvalues,
            &w,
            &self.classes,
        )?)
    }

    /// Coefficient vector of a polynomial map in this operator's basis.
    pub fn poly_to_vec(&self, q: &HomPolyMap) -> Result<CVec, CoeffError> {
        let info = self.basis_info.as_ref().ok_or(CoeffError::NoBasis)?;
        if q.n() != info.n || q.k() != info.k {
            return Err(CoeffError::DimensionMismatch {
                expected: self.dim,
                got: q.coeff_dim(),
            });
        }
        Ok(q.coeffs().clone())
    }

    pub fn vec_to_poly(&self, v: &CVec) -> Result<HomPolyMap, CoeffError> {
        let info = self.basis_info.as_ref().ok_or(CoeffError::NoBasis)?;
        Ok(HomPolyMap::from_coeffs(info.n, info.k, v.clone())?)
    }
}

/// The inhomogeneity N_k as a function of time, in ambient coefficient
/// coordinates.
pub enum NSource {
    Zero,
    Constant(CVec),
    Function(Arc<dyn Fn(f64) -> CVec + Send + Sync>),
    /// N_k assembled from the generator's H_l(., t) and the lower-order
    /// coefficient solutions.
    Assembled {
        generator: Arc<GeneratorSpec>,
        lower: Vec<Arc<CoefficientSolution>>,
    },
}

impl std::fmt::Debug for NSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NSource::Zero => write!(f, "NSource::Zero"),
            NSource::Constant(_) => write!(f, "NSource::Constant"),
            NSource::Function(_) => write!(f, "NSource::Function"),
            NSource::Assembled { .. } => write!(f, "NSource::Assembled"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveOptions {
    /// Probe horizon for the boundedness fit and resonance diagnostics.
    pub probe_t_max: f64,
    /// Target absolute error of the truncated improper integral.
    pub tail_tol: f64,
    /// Absolute/relative quadrature tolerance.
    pub quad_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            probe_t_max: 20.0,
            tail_tol: 1e-10,
            quad_tol: 1e-12,
        }
    }
}

/// Fitted polynomial envelope c (1 + t)^degree for |F_k(t)|.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundPoly {
    pub degree: usize,
    pub scale: f64,
}

impl BoundPoly {
    pub fn eval(&self, t: f64) -> f64 {
        self.scale * (1.0 + t).powi(self.degree as i32)
    }
}

struct MemoEntry {
    ambient: Arc<CVec>,
    eigen: Arc<CVec>,
}

/// A polynomially bounded solution F_k of dF/dt = B_k F + N_k with
/// P<= F(0) prescribed.
pub struct CoefficientSolution {
    op: Arc<SplitOperator>,
    n_source: NSource,
    /// Prescribed datum in ambient coordinates (already projected onto
    /// range(P<=)).
    pub f0_le: CVec,
    /// Eigen-coordinates of the datum (plus-class slots are zero).
    y0: CVec,
    opts: SolveOptions,
    pub projected_warning: bool,
    pub resonant: bool,
    pub resonant_unbounded: bool,
    pub bound_poly: BoundPoly,
    /// Truncation horizon used for the improper integral at probe time 0.
    pub tail_horizon: f64,
    /// Set for constant-in-time solutions (autonomous chains); evaluation
    /// then bypasses the quadrature entirely.
    constant_value: Option<CVec>,
    memo: Mutex<HashMap<u64, Arc<MemoEntry>>>,
}

impl std::fmt::Debug for CoefficientSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientSolution")
            .field("degree", &self.op.degree())
            .field("resonant", &self.resonant)
            .field("resonant_unbounded", &self.resonant_unbounded)
            .field("bound_poly", &self.bound_poly)
            .finish()
    }
}

impl CoefficientSolution {
    pub fn operator(&self) -> &SplitOperator {
        &self.op
    }

    pub fn operator_arc(&self) -> Arc<SplitOperator> {
        self.op.clone()
    }

    pub fn degree(&self) -> Option<usize> {
        self.op.degree()
    }

    /// N_k(t) in ambient coefficient coordinates.
    pub fn n_ambient(&self, t: f64) -> CVec {
        self.memoized(t).ambient.as_ref().clone()
    }

    fn memoized(&self, t: f64) -> Arc<MemoEntry> {
        let key = t.to_bits();
        if let Some(hit) = self.memo.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let ambient = match &self.n_source {
            NSource::Zero => CVec::zeros(self.op.dim),
            NSource::Constant(v) => v.clone(),
            NSource::Function(f) => f(t),
            NSource::Assembled { generator, lower } => {
                let info = self
                    .op
                    .basis_info
                    .as_ref()
                    .expect("assembled sources require a basis");
                let mut f_lower = BTreeMap::new();
                for sol in lower {
                    let k = sol.degree().expect("lower orders carry bases");
                    f_lower.insert(k, sol.eval_poly(t).expect("lower orders carry bases"));
                }
                let h_fn = |l: usize| generator.hk_at(l, t);
                let nk = nk_assemble(info.n, info.k, &f_lower, &h_fn)
                    .expect("assembly dimensions are consistent");
                nk.coeffs().clone()
            }
        };
        let eigen = self.op.to_eigen(&ambient);
        let entry = Arc::new(MemoEntry {
            ambient: Arc::new(ambient),
            eigen: Arc::new(eigen),
        });
        self.memo.lock().unwrap().insert(key, entry.clone());
        entry
    }

    fn n_eigen_at(&self, t: f64, idx: usize) -> C64 {
        self.memoized(t).eigen[idx]
    }

    /// Truncation horizon for the improper integral at evaluation time t:
    /// blocks of length 5 / delta+ are appended until the geometric tail
    /// bound drops below tail_tol.
    fn plus_horizon(&self, t: f64) -> f64 {
        let delta = match self.op.plus_decay_rate() {
            Some(d) => d,
            None => return t,
        };
        let block = 5.0 / delta;
        let plus_idx: Vec<usize> = (0..self.op.dim)
            .filter(|&i| self.op.classes[i] == SpectralClass::Plus)
            .collect();
        let mut t_hi = t;
        for _ in 0..200 {
            let next = t_hi + block;
            // probe the block for the size of the plus components of N
            let mut sup: f64 = 0.0;
            for j in 0..=4 {
                let s = t_hi + block * j as f64 / 4.0;
                let entry = self.memoized(s);
                for &i in &plus_idx {
                    sup = sup.max(entry.eigen[i].norm());
                }
            }
            t_hi = next;
            // sup |n| e^{(t - T) delta} / delta with slack 4 for the slow
            // variation of |n| past the probe window
            let bound = 4.0 * sup * ((t - t_hi) * delta).exp() / delta;
            if bound < self.opts.tail_tol && t_hi > t + block {
                break;
            }
        }
        t_hi
    }

    /// F_k(t) in ambient coefficient coordinates.
    pub fn eval_vec(&self, t: f64) -> CVec {
        if let Some(v) = &self.constant_value {
            return v.clone();
        }
        let dim = self.op.dim;
        let mut y = CVec::zeros(dim);
        let qt = self.opts.quad_tol;
        let mut plus_horizon: Option<f64> = None;
        for i in 0..dim {
            let mu = self.op.eigenvalues[i];
            match self.op.classes[i] {
                SpectralClass::Le | SpectralClass::Zero => {
                    // e^{t mu} y0 + int_0^t e^{(t-s) mu} n(s) ds
                    let homo = (mu * t).exp() * self.y0[i];
                    let integral = quad::integrate(
                        |s| ((t - s) * mu).exp() * self.n_eigen_at(s, i),
                        0.0,
                        t,
                        qt,
                        qt,
                    )
                    .value;
                    y[i] = homo + integral;
                }
                SpectralClass::Plus => {
                    let t_hi = *plus_horizon.get_or_insert_with(|| self.plus_horizon(t));
                    let integral = quad::integrate(
                        |s| ((t - s) * mu).exp() * self.n_eigen_at(s, i),
                        t,
                        t_hi,
                        qt,
                        qt,
                    )
                    .value;
                    y[i] = -integral;
                }
            }
        }
        self.op.from_eigen(&y)
    }

    /// F_k(t) as a homogeneous polynomial map (requires a B_k basis).
    pub fn eval_poly(&self, t: f64) -> Result<HomPolyMap, CoeffError> {
        let v = self.eval_vec(t);
        self.op.vec_to_poly(&v)
    }

    /// A constant-in-time solution (autonomous chains f(z,t) = e^{tA} f(z)):
    /// N is defined as -B F so the ODE holds with dF/dt = 0.
    pub fn constant(op: Arc<SplitOperator>, f: &CVec) -> Result<CoefficientSolution, CoeffError> {
        if f.len() != op.dim {
            return Err(CoeffError::DimensionMismatch {
                expected: op.dim,
                got: f.len(),
            });
        }
        let n_vec = -op.matrix.dot(f);
        let y_full = op.to_eigen(f);
        let mut y0 = y_full.clone();
        for i in 0..op.dim {
            if op.classes[i] == SpectralClass::Plus {
                y0[i] = C64::new(0.0, 0.0);
            }
        }
        let f0_le = op.from_eigen(&y0);
        let norm: f64 = f.iter().map(|c| c.norm()).sum();
        let resonant = op.has_zero_class();
        Ok(CoefficientSolution {
            op,
            n_source: NSource::Constant(n_vec),
            f0_le,
            y0,
            opts: SolveOptions::default(),
            projected_warning: false,
            resonant,
            resonant_unbounded: false,
            bound_poly: BoundPoly {
                degree: 0,
                scale: norm.max(1e-300),
            },
            tail_horizon: 0.0,
            constant_value: Some(f.clone()),
            memo: Mutex::new(HashMap::new()),
        })
    }
}

/// Solve for the polynomially bounded solution with P<= F(0) = f0_le.
///
/// When f0_le has a component in range(P+) it is projected away and the
/// `projected_warning` flag is set. When sigma_0(B_k) is nonempty the
/// solution is still returned; unbounded growth of the resonant part is
/// reported through `resonant_unbounded` and a bound_poly of positive degree.
pub fn solve_polybounded(
    op: Arc<SplitOperator>,
    n_source: NSource,
    f0_le: &CVec,
    opts: SolveOptions,
) -> Result<CoefficientSolution, CoeffError> {
    if f0_le.len() != op.dim {
        return Err(CoeffError::DimensionMismatch {
            expected: op.dim,
            got: f0_le.len(),
        });
    }
    let y_full = op.to_eigen(f0_le);
    let mut y0 = y_full.clone();
    let mut plus_mass = 0.0f64;
    let mut total_mass = 0.0f64;
    for i in 0..op.dim {
        total_mass += y_full[i].norm_sqr();
        if op.classes[i] == SpectralClass::Plus {
            plus_mass += y_full[i].norm_sqr();
            y0[i] = C64::new(0.0, 0.0);
        }
    }
    let projected_warning = plus_mass.sqrt() > 1e-12 * (1.0 + total_mass.sqrt());
    let f0_le_clean = op.from_eigen(&y0);
    let resonant = op.has_zero_class();

    let mut sol = CoefficientSolution {
        op,
        n_source,
        f0_le: f0_le_clean,
        y0,
        opts,
        projected_warning,
        resonant,
        resonant_unbounded: false,
        bound_poly: BoundPoly {
            degree: 0,
            scale: 0.0,
        },
        tail_horizon: 0.0,
        constant_value: None,
        memo: Mutex::new(HashMap::new()),
    };
    sol.tail_horizon = sol.plus_horizon(0.0);

    // probe grid: boundedness fit and the resonant Cauchy diagnostic
    let probes = 61usize;
    let mut norms = Vec::with_capacity(probes);
    let mut zero_norms = Vec::with_capacity(probes);
    let zero_idx: Vec<usize> = (0..sol.op.dim)
        .filter(|&i| sol.op.classes[i] == SpectralClass::Zero)
        .collect();
    for j in 0..probes {
        let t = opts.probe_t_max * j as f64 / (probes - 1) as f64;
        let v = sol.eval_vec(t);
        norms.push((t, v.iter().map(|c| c.norm()).sum::<f64>()));
        if !zero_idx.is_empty() {
            let y = sol.op.to_eigen(&v);
            zero_norms.push(zero_idx.iter().map(|&i| y[i].norm()).sum::<f64>());
        }
    }
    // envelope degree: smallest d whose normalized profile stops growing
    let mut degree = 0usize;
    for d in 0..=3 {
        degree = d;
        let ratio = |(t, n): &(f64, f64)| -> f64 { n / (1.0 + t).powi(d as i32) };
        let head_max = norms[..probes * 3 / 4].iter().map(ratio).fold(0.0, f64::max);
        let tail_max = norms[probes * 3 / 4..].iter().map(ratio).fold(0.0, f64::max);
        if tail_max <= head_max.max(1e-15) * 1.05 {
            break;
        }
    }
    let scale = norms
        .iter()
        .map(|(t, n)| n / (1.0 + t).powi(degree as i32))
        .fold(0.0, f64::max);
    sol.bound_poly = BoundPoly {
        degree,
        scale: scale.max(1e-300),
    };
    if !zero_idx.is_empty() {
        // Cauchy test on the running resonant integral
        let head = zero_norms[..probes / 2].iter().cloned().fold(0.0, f64::max);
        let tail = zero_norms[probes * 3 / 4..]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        sol.resonant_unbounded = tail > head + 1e-8 * (1.0 + head);
    }
    Ok(sol)
}

/// N_k(., t) for the generator and already-computed lower orders.
pub fn compute_nk(
    generator: &GeneratorSpec,
    lower: &[Arc<CoefficientSolution>],
    k: usize,
    t: f64,
) -> Result<HomPolyMap, CoeffError> {
    if !generator.is_polynomial() {
        return Err(CoeffError::NotPolynomial);
    }
    let n = generator.a.dim();
    let mut f_lower = BTreeMap::new();
    for sol in lower {
        let kk = sol.degree().ok_or(CoeffError::NoBasis)?;
        f_lower.insert(kk, sol.eval_poly(t)?);
    }
    for j in 2..k {
        if !f_lower.contains_key(&j) {
            return Err(CoeffError::MissingLowerOrder(j));
        }
    }
    let h_fn = |l: usize| generator.hk_at(l, t);
    Ok(nk_assemble(n, k, &f_lower, &h_fn)?)
}

/// Solve the chain coefficient system for k = 2..=k_max sequentially.
///
/// `f0_le` supplies the prescribed P<= F_k(0) by degree; missing degrees
/// default to zero (the documented CLI convention).
pub fn solve_chain_coefficients(
    generator: Arc<GeneratorSpec>,
    f0_le: &BTreeMap<usize, HomPolyMap>,
    k_max: usize,
    opts: SolveOptions,
) -> Result<Vec<Arc<CoefficientSolution>>, CoeffError> {
    if !generator.is_polynomial() {
        return Err(CoeffError::NotPolynomial);
    }
    let a = &generator.a;
    let mut out: Vec<Arc<CoefficientSolution>> = Vec::new();
    for k in 2..=k_max {
        let op = Arc::new(SplitOperator::from_bk(a, k)?);
        let datum = match f0_le.get(&k) {
            Some(q) => op.poly_to_vec(q)?,
            None => CVec::zeros(op.dim),
        };
        let source = NSource::Assembled {
            generator: generator.clone(),
            lower: out.clone(),
        };
        let sol = solve_polybounded(op, source, &datum, opts)?;
        out.push(Arc::new(sol));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// max over the grid of |dF/dt - (B F + N)| / (1 + |F|).
    pub max_relative_residual: f64,
    pub pass: bool,
}

/// Finite-difference check that the solution satisfies its ODE on a grid.
/// Grid points must stay clear of time-discontinuities of N.
pub fn residual_check(sol: &CoefficientSolution, t_grid: &[f64]) -> ResidualReport {
    let dt = 1e-5;
    let mut max_rel: f64 = 0.0;
    for &t in t_grid {
        let tm = (t - dt).max(0.0);
        let tp = t + dt;
        let fp = sol.eval_vec(tp);
        let fm = sol.eval_vec(tm);
        let f = sol.eval_vec(t);
        let n = sol.n_ambient(t);
        let rhs = sol.op.matrix.dot(&f) + &n;
        let scale = 1.0 + f.iter().map(|c| c.norm()).sum::<f64>();
        let mut err: f64 = 0.0;
        for i in 0..f.len() {
            let deriv = (fp[i] - fm[i]) / C64::from(tp - tm);
            err = err.max((deriv - rhs[i]).norm());
        }
        max_rel = max_rel.max(err / scale);
    }
    ResidualReport {
        max_relative_residual: max_rel,
        pass: max_rel <= 1e-6,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonancePair {
    pub m: Vec<u32>,
    /// 1-based output component.
    pub s: usize,
    pub value_re: f64,
    pub value_im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KResonanceReport {
    pub k: usize,
    pub exact: Vec<ResonancePair>,
    pub real_part: Vec<ResonancePair>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceReport {
    pub n0: usize,
    pub k_scanned: usize,
    pub per_k: Vec<KResonanceReport>,
    /// 0 not in sigma(B_k) for every k (scanned range; none exist beyond n0).
    pub a_nonresonant: bool,
    /// sigma_0(B_k) empty for every k, i.e. A + conj(A) nonresonant.
    pub a_plus_conjugate_nonresonant: bool,
    /// Confirms the theory: no exact resonance at any scanned k > n0.
    pub no_resonance_beyond_n0: bool,
}

/// Scan all (m, s) with |m| = k <= max(k_max, n0) for exact resonances
/// <m, lambda> = lambda_s and real-part resonances Re <m, lambda> = Re lambda_s.
pub fn resonance_report(a: &OperatorA, k_max: usize) -> ResonanceReport {
    let n0 = a.n0();
    let k_top = k_max.max(n0).max(2);
    let mut per_k = Vec::new();
    let mut any_exact = false;
    let mut any_real = false;
    let mut beyond = false;
    for k in 2..=k_top {
        let table = bk_eigenvalue_table(a, k);
        let mut exact = Vec::new();
        let mut real_part = Vec::new();
        for (m, s, v) in table {
            let pair = ResonancePair {
                m: m.0.clone(),
                s: s + 1,
                value_re: v.re,
                value_im: v.im,
            };
            if v.norm() < EXACT_RESONANCE_TOL {
                if k > n0 {
                    beyond = true;
                }
                any_exact = true;
                exact.push(pair.clone());
            }
            if v.re.abs() < EXACT_RESONANCE_TOL {
                any_real = true;
                real_part.push(pair);
            }
        }
        per_k.push(KResonanceReport {
            k,
            exact,
            real_part,
        });
    }
    ResonanceReport {
        n0,
        k_scanned: k_top,
        per_k,
        a_nonresonant: !any_exact,
        a_plus_conjugate_nonresonant: !any_real,
        no_resonance_beyond_n0: !beyond,
    }
}

/// For autonomous N with empty zero class, the solution is constant plus
/// decaying with steady state -B^{-1} N.
#[derive(Debug, Clone, Serialize)]
pub struct SteadyStateReport {
    pub deviation: f64,
    pub pass: bool,
}

pub fn steady_state_check(
    sol: &CoefficientSolution,
    n_constant: &CVec,
    t_large: f64,
) -> Result<SteadyStateReport, CoeffError> {
    let steady = sol
        .op
        .matrix
        .solve(&(-n_constant))
        .map_err(|e| SpectralError::Backend(e.to_string()))?;
    let val = sol.eval_vec(t_large);
    let deviation = val
        .iter()
        .zip(steady.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(SteadyStateReport {
        deviation,
        pass: deviation <= 1e-7 * (1.0 + steady.iter().map(|c| c.norm()).sum::<f64>()),
    })
}

/// Convenience: coefficient vector with a single (m, s) entry.
pub fn unit_coeff_vec(n: usize, k: usize, m: &MultiIndex, s: usize, c: C64) -> CVec {
    let b = basis(n, k);
    let mut v = CVec::zeros(b.len() * n);
    let r = b.rank(m).expect("multi-index of the right degree");
    v[r * n + s] = c;
    v
}
