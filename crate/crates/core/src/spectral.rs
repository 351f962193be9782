//! Spectral analysis of the linear part `A` and of derived operators.
//!
//! Houses the indices m(A), k-(A), k+(A), n0 of the operator, dense matrix
//! exponentials, spectral splits by sign of the real part, and the
//! exponential-norm certificates `|e^{tA}| vs e^{t k+(A)}`.

use crate::{C64, CMat, CVec};
use ndarray::Array1;
use ndarray_linalg::{Eig, Eigh, Inverse, Solve, UPLO};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Threshold on |Re lambda| below which a numerically computed eigenvalue is
/// too close to the imaginary axis to classify by sign.
pub const ZERO_RE_TOL: f64 = 1e-9;
/// Eigenvector-matrix condition number beyond which a matrix is treated as
/// non-diagonalizable.
pub const EIG_CONDITION_LIMIT: f64 = 1e8;
/// Frobenius-norm tolerance on the commutator `A A* - A* A` for normality.
pub const NORMALITY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not accretive: m(A) = {m} <= 0")]
    NotAccretive { m: f64 },
    #[error("matrix not diagonalizable within tolerance (eigenvector condition {condition:.3e})")]
    NotDiagonalizable { condition: f64 },
    #[error(
        "eigenvalue {value} has |Re| < {ZERO_RE_TOL} but is not exactly resonant; \
         supply exact resonance information to classify it"
    )]
    ZeroBoundaryAmbiguous { value: C64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("linear algebra backend failure: {0}")]
    Backend(String),
}

/// The operator `A` together with its spectral data and indices.
///
/// Invariants established by [`analyze`]: `accretivity > 0`,
/// `accretivity <= re_spec_min <= re_spec_max` and
/// `recovery_order = floor(re_spec_max / accretivity) >= 1`.
#[derive(Debug, Clone)]
pub struct OperatorA {
    entries: CMat,
    dim: usize,
    eigenvalues: Vec<C64>,
    eigenvectors: CMat,
    eig_condition: f64,
    diagonalizable: bool,
    normal: bool,
    exactly_diagonal: bool,
    /// m(A): smallest eigenvalue of the Hermitian part (A + A*)/2.
    accretivity: f64,
    /// k-(A): min Re of the spectrum.
    re_spec_min: f64,
    /// k+(A): max Re of the spectrum (spectral abscissa).
    re_spec_max: f64,
    /// n0 = floor(k+(A)/m(A)): number of coefficient equations needed to
    /// recover a polynomially bounded chain.
    recovery_order: usize,
}

impl OperatorA {
    pub fn entries(&self) -> &CMat {
        &self.entries
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Eigenvalues sorted by descending real part (ties by descending
    /// imaginary part), aligned with the columns of [`Self::eigenvectors`].
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }
    pub fn eig_condition(&self) -> f64 {
        self.eig_condition
    }
    pub fn is_diagonalizable(&self) -> bool {
        self.diagonalizable
    }
    pub fn is_normal(&self) -> bool {
        self.normal
    }
    pub fn is_exactly_diagonal(&self) -> bool {
        self.exactly_diagonal
    }
    /// m(A), the minimum of Re<Az, z> over the unit sphere.
    pub fn accretivity(&self) -> f64 {
        self.accretivity
    }
    /// k-(A) = min Re sigma(A).
    pub fn k_minus(&self) -> f64 {
        self.re_spec_min
    }
    /// k+(A) = max Re sigma(A).
    pub fn k_plus(&self) -> f64 {
        self.re_spec_max
    }
    /// n0 = floor(k+(A)/m(A)).
    pub fn n0(&self) -> usize {
        self.recovery_order
    }
    /// True when the eigenvector matrix condition number exceeds the
    /// diagonalizability limit; spectral splits refuse such operators.
    pub fn ill_conditioned(&self) -> bool {
        self.eig_condition > EIG_CONDITION_LIMIT
    }

    /// Apply A to a point.
    pub fn apply(&self, z: &[C64], out: &mut [C64]) {
        debug_assert_eq!(z.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.dim {
                acc += self.entries[[i, j]] * z[j];
            }
            out[i] = acc;
        }
    }

    /// `e^{tA}` as a dense matrix.
    pub fn exp(&self, t: f64) -> CMat {
        if self.exactly_diagonal {
            let mut out = CMat::zeros((self.dim, self.dim));
            for i in 0..self.dim {
                out[[i, i]] = (self.entries[[i, i]] * t).exp();
            }
            out
        } else {
            matrix_exp(&self.entries, t)
        }
    }

    /// Convenience constructor for a diagonal operator.
    pub fn diagonal(diag: &[C64]) -> Result<OperatorA, SpectralError> {
        let n = diag.len();
        let mut m = CMat::zeros((n, n));
        for (i, d) in diag.iter().enumerate() {
            m[[i, i]] = *d;
        }
        analyze(&m)
    }
}

fn adjoint(a: &CMat) -> CMat {
    let (r, c) = (a.nrows(), a.ncols());
    CMat::from_shape_fn((c, r), |(i, j)| a[[j, i]].conj())
}

fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[[i, j]].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Singular values of a dense complex matrix, descending.
fn singular_values(a: &CMat) -> Result<Vec<f64>, SpectralError> {
    // sqrt of the eigenvalues of A* A; adequate at the condition numbers in
    // scope and keeps us on the Hermitian (deterministic) code path.
    let gram = adjoint(a).dot(a);
    let (vals, _) = gram
        .eigh(UPLO::Lower)
        .map_err(|e| SpectralError::Backend(e.to_string()))?;
    let mut sv: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(sv)
}

/// Euclidean operator norm (largest singular value).
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).map(|sv| sv[0]).unwrap_or(f64::NAN)
}

/// Hermitian part (A + A*)/2.
pub fn hermitian_part(a: &CMat) -> CMat {
    let at = adjoint(a);
    (a + &at) * C64::new(0.5, 0.0)
}

fn is_exactly_diagonal(a: &CMat) -> bool {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j && a[[i, j]] != C64::new(0.0, 0.0) {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues and right eigenvectors, sorted by descending (Re, Im).
/// Exactly diagonal matrices short-circuit to the trivial decomposition so
/// that resonant integer arithmetic stays exact.
pub fn eigendecompose(a: &CMat) -> Result<(Vec<C64>, CMat, f64), SpectralError> {
    let n = a.nrows();
    if is_exactly_diagonal(a) {
        let vals: Vec<C64> = (0..n).map(|i| a[[i, i]]).collect();
        return Ok((vals, CMat::eye(n), 1.0));
    }
    let (vals, vecs) = a
        .eig()
        .map_err(|e| SpectralError::Backend(e.to_string()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (vals[i], vals[j]);
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    let sorted_vals: Vec<C64> = order.iter().map(|&i| vals[i]).collect();
    let mut v = CMat::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            v[[r, col]] = vecs[[r, i]];
        }
    }
    let sv = singular_values(&v)?;
    let cond = if sv[n - 1] > 0.0 {
        sv[0] / sv[n - 1]
    } else {
        f64::INFINITY
    };
    Ok((sorted_vals, v, cond))
}

/// Analyze a square complex matrix as the linear part of a generator.
///
/// Fails with [`SpectralError::NotAccretive`] when m(A) <= 0, the standing
/// hypothesis of the whole theory. m(A) is computed exactly as the minimum
/// eigenvalue of the Hermitian part, never by sphere sampling.
pub fn analyze(matrix: &CMat) -> Result<OperatorA, SpectralError> {
    let (rows, cols) = (matrix.nrows(), matrix.ncols());
    if rows != cols || rows == 0 {
        return Err(SpectralError::NotSquare { rows, cols });
    }
    let n = rows;
    let herm = hermitian_part(matrix);
    let (hvals, _) = herm
        .eigh(UPLO::Lower)
        .map_err(|e| SpectralError::Backend(e.to_string()))?;
    let m = hvals.iter().cloned().fold(f64::INFINITY, f64::min);
    if m <= 0.0 {
        return Err(SpectralError::NotAccretive { m });
    }

    let (eigenvalues, eigenvectors, eig_condition) = eigendecompose(matrix)?;
    let k_minus = eigenvalues.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    let k_plus = eigenvalues
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);

    let at = adjoint(matrix);
    let comm = matrix.dot(&at) - at.dot(matrix);
    let normal = fro_norm(&comm) < NORMALITY_TOL;

    // floor with a tiny relative guard so exact integer ratios land on the
    // integer, e.g. k+/m = 2 must give n0 = 2.
    let ratio = k_plus / m;
    let n0 = ((ratio + 1e-12).floor() as usize).max(1);

    Ok(OperatorA {
        entries: matrix.clone(),
        dim: n,
        eigenvalues,
        eigenvectors,
        eig_condition,
        diagonalizable: eig_condition <= EIG_CONDITION_LIMIT,
        normal,
        exactly_diagonal: is_exactly_diagonal(matrix),
        accretivity: m,
        re_spec_min: k_minus,
        re_spec_max: k_plus,
        recovery_order: n0,
    })
}

/// Dense matrix exponential `e^{tL}`.
///
/// Diagonalizable matrices (eigenvector condition below the limit) go through
/// the eigendecomposition; everything else through scaling-and-squaring with
/// a [13/13] Pade approximant.
pub fn matrix_exp(l: &CMat, t: f64) -> CMat {
    let n = l.nrows();
    if t == 0.0 {
        return CMat::eye(n);
    }
    if is_exactly_diagonal(l) {
        let mut out = CMat::zeros((n, n));
        for i in 0..n {
            out[[i, i]] = (l[[i, i]] * t).exp();
        }
        return out;
    }
    if let Ok((vals, v, cond)) = eigendecompose(l) {
        if cond <= EIG_CONDITION_LIMIT {
            if let Ok(vinv) = v.inv() {
                let mut w = v.clone();
                for (col, lam) in vals.iter().enumerate() {
                    let e = (lam * t).exp();
                    for r in 0..n {
                        w[[r, col]] *= e;
                    }
                }
                return w.dot(&vinv);
            }
        }
    }
    pade_exp(&(l * C64::new(t, 0.0)))
}

/// Scaling-and-squaring [13/13] Pade approximant of `e^M`.
fn pade_exp(m: &CMat) -> CMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371920351148152;
    let n = m.nrows();
    let norm = one_norm(m);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a = m / C64::new(2f64.powi(s as i32), 0.0);
    let id = CMat::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let u_inner = &a6 * C64::from(B[13]) + &a4 * C64::from(B[11]) + &a2 * C64::from(B[9]);
    let u = a.dot(
        &(a6.dot(&u_inner)
            + &a6 * C64::from(B[7])
            + &a4 * C64::from(B[5])
            + &a2 * C64::from(B[3])
            + &id * C64::from(B[1])),
    );
    let v_inner = &a6 * C64::from(B[12]) + &a4 * C64::from(B[10]) + &a2 * C64::from(B[8]);
    let v = a6.dot(&v_inner)
        + &a6 * C64::from(B[6])
        + &a4 * C64::from(B[4])
        + &a2 * C64::from(B[2])
        + &id * C64::from(B[0]);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = solve_matrix(&lhs, &rhs);
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// Solve `A X = B` column by column via the LAPACK LU path.
fn solve_matrix(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    let cols = b.ncols();
    let mut x = CMat::zeros((n, cols));
    for j in 0..cols {
        let rhs: CVec = Array1::from_iter((0..n).map(|i| b[[i, j]]));
        let col = a.solve(&rhs).expect("singular Pade denominator");
        for i in 0..n {
            x[[i, j]] = col[i];
        }
    }
    x
}

/// A square operator split along the imaginary axis: eigenvalues with
/// positive real part, non-positive real part and zero real part, together
/// with the corresponding spectral projections.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub operator: CMat,
    pub sigma_plus: Vec<C64>,
    pub sigma_le: Vec<C64>,
    pub sigma_zero: Vec<C64>,
    pub p_plus: CMat,
    pub p_le: CMat,
    pub p_zero: CMat,
}

/// Sign class of an eigenvalue under the split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralClass {
    /// Re > 0.
    Plus,
    /// Re < 0.
    Le,
    /// Re = 0 (exact resonance of the real part).
    Zero,
}

/// Build the projections `P = V 1_class V^{-1}` for a classified
/// eigendecomposition.
pub fn split_from_eigendata(
    operator: &CMat,
    eigenvalues: &[C64],
    eigenvectors: &CMat,
    classes: &[SpectralClass],
) -> Result<SpectralSplit, SpectralError> {
    let n = operator.nrows();
    let vinv = eigenvectors
        .inv()
        .map_err(|e| SpectralError::Backend(e.to_string()))?;
    let projector = |keep: &dyn Fn(SpectralClass) -> bool| -> CMat {
        let mut w = eigenvectors.clone();
        for col in 0..n {
            if !keep(classes[col]) {
                for r in 0..n {
                    w[[r, col]] = C64::new(0.0, 0.0);
                }
            }
        }
        w.dot(&vinv)
    };
    let p_plus = projector(&|c| c == SpectralClass::Plus);
    let p_le = projector(&|c| c != SpectralClass::Plus);
    let p_zero = projector(&|c| c == SpectralClass::Zero);
    let pick = |keep: &dyn Fn(SpectralClass) -> bool| -> Vec<C64> {
        eigenvalues
            .iter()
            .zip(classes)
            .filter(|(_, c)| keep(**c))
            .map(|(l, _)| *l)
            .collect()
    };
    Ok(SpectralSplit {
        operator: operator.clone(),
        sigma_plus: pick(&|c| c == SpectralClass::Plus),
        sigma_le: pick(&|c| c != SpectralClass::Plus),
        sigma_zero: pick(&|c| c == SpectralClass::Zero),
        p_plus,
        p_le,
        p_zero,
    })
}

/// Classify an eigenvalue by the sign of its real part with the numeric
/// threshold. Exact zeros (constructed diagonal operators, exact resonances)
/// are accepted; anything else inside the ambiguity band is refused.
pub fn classify_re(value: C64) -> Result<SpectralClass, SpectralError> {
    if value.re == 0.0 {
        Ok(SpectralClass::Zero)
    } else if value.re.abs() < ZERO_RE_TOL {
        Err(SpectralError::ZeroBoundaryAmbiguous { value })
    } else if value.re > 0.0 {
        Ok(SpectralClass::Plus)
    } else {
        Ok(SpectralClass::Le)
    }
}

/// Spectral split of a diagonalizable matrix using the numeric zero
/// threshold. Callers that know the exact resonance structure (the `B_k`
/// pipeline) build their split from the eigenvalue formula instead.
pub fn spectral_split(l: &CMat) -> Result<SpectralSplit, SpectralError> {
    if l.nrows() != l.ncols() {
        return Err(SpectralError::NotSquare {
            rows: l.nrows(),
            cols: l.ncols(),
        });
    }
    let (vals, vecs, cond) = eigendecompose(l)?;
    if cond > EIG_CONDITION_LIMIT {
        return Err(SpectralError::NotDiagonalizable { condition: cond });
    }
    let classes = vals
        .iter()
        .map(|&v| classify_re(v))
        .collect::<Result<Vec<_>, _>>()?;
    split_from_eigendata(l, &vals, &vecs, &classes)
}

/// One row of an exponential-norm certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpNormEntry {
    pub t: f64,
    /// Euclidean operator norm of e^{tA}.
    pub norm: f64,
    /// e^{t k+(A)}.
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpNormReport {
    pub entries: Vec<ExpNormEntry>,
    pub normal: bool,
    pub max_ratio: f64,
    /// Set when A is normal but some ratio differs from 1 by more than 1e-9.
    pub normal_equality_violated: bool,
}

/// Measure `|e^{tA}|` against `e^{t k+(A)}` on a time grid.
///
/// For normal A the two agree exactly; the report flags any numerical
/// violation beyond 1e-9 relative.
pub fn exp_norm_certificates(
    a: &OperatorA,
    t_grid: &[f64],
) -> Result<ExpNormReport, SpectralError> {
    if t_grid.is_empty() {
        return Err(SpectralError::InvalidInput("empty t grid".into()));
    }
    if t_grid.iter().any(|&t| t < 0.0) {
        return Err(SpectralError::InvalidInput(
            "t grid entries must be >= 0".into(),
        ));
    }
    let mut entries = Vec::with_capacity(t_grid.len());
    let mut max_ratio: f64 = 0.0;
    let mut violated = false;
    for &t in t_grid {
        let e = a.exp(t);
        let norm = op_norm(&e);
        let bound = (t * a.k_plus()).exp();
        let ratio = norm / bound;
        max_ratio = max_ratio.max(ratio);
        if a.is_normal() && (ratio - 1.0).abs() > 1e-9 {
            violated = true;
        }
        entries.push(ExpNormEntry {
            t,
            norm,
            bound,
            ratio,
        });
    }
    Ok(ExpNormReport {
        entries,
        normal: a.is_normal(),
        max_ratio,
        normal_equality_violated: violated,
    })
}

/// JSON wire form of a dense complex matrix:
/// `{"n": 2, "re": [[...], [...]], "im": [[...], [...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> MatrixJson {
        let n = m.nrows();
        MatrixJson {
            n,
            re: (0..n)
                .map(|i| (0..m.ncols()).map(|j| m[[i, j]].re).collect())
                .collect(),
            im: (0..n)
                .map(|i| (0..m.ncols()).map(|j| m[[i, j]].im).collect())
                .collect(),
        }
    }
}

impl TryFrom<&MatrixJson> for CMat {
    type Error = SpectralError;
    fn try_from(j: &MatrixJson) -> Result<CMat, SpectralError> {
        let n = j.n;
        if j.re.len() != n
            || j.im.len() != n
            || j.re.iter().any(|r| r.len() != n)
            || j.im.iter().any(|r| r.len() != n)
        {
            return Err(SpectralError::InvalidInput(format!(
                "matrix rows/cols do not match n = {n}"
            )));
        }
        Ok(CMat::from_shape_fn((n, n), |(i, jj)| {
            C64::new(j.re[i][jj], j.im[i][jj])
        }))
    }
}

impl Serialize for OperatorA {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(&self.entries).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for OperatorA {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = MatrixJson::deserialize(de)?;
        let m = CMat::try_from(&j).map_err(D::Error::custom)?;
        analyze(&m).map_err(D::Error::custom)
    }
}
