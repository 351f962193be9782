//! Numerical machinery for Loewner chains in the unit ball of C^n.
//!
//! The library is organised around a linear operator `A` with positive
//! accretivity bound m(A) = min Re<Az, z> on the unit sphere:
//!
//! - [`spectral`]: spectral indices of `A`, matrix exponentials, spectral
//!   projections and exponential-norm certificates.
//! - [`polyspace`]: homogeneous polynomial mappings of C^n and the operators
//!   `B_k` acting on them.
//! - [`generators`]: infinitesimal generators `h(z, t)` with `Dh(0, t) = A`
//!   and positive real inner product against `z`.
//! - [`transition`]: the transition flow `dv/dt = -h(v, t)` with an embedded
//!   Runge-Kutta integrator and the associated inequalities.
//! - [`coefficients`]: the coefficient ODEs `dF_k/dt = B_k F_k + N_k`, their
//!   polynomially bounded solutions via the Green's-function formula, and
//!   resonance analysis.
//! - [`chains`]: construction of the chain `g(z, s)` as the limit of
//!   `e^{tA}(v + sum_k F_k(v^k, t))` and chain-level verification.
//! - [`spirallike`]: the autonomous equation `Df(z) h(z) = A f(z)`,
//!   Roper-Suffridge type extensions and non-compactness witnesses.
//! - [`verify`]: named property suites used by the CLI and the acceptance
//!   tests.

pub mod chains;
pub mod coefficients;
pub mod generators;
pub mod polyspace;
pub mod quad;
pub mod sampling;
pub mod spectral;
pub mod spirallike;
pub mod transition;
pub mod univar;
pub mod verify;

pub use num_complex::Complex64 as C64;

/// Complex dense matrix used throughout.
pub type CMat = ndarray::Array2<C64>;
/// Complex dense vector used throughout.
pub type CVec = ndarray::Array1<C64>;

/// Euclidean norm of a point in C^n.
pub fn vec_norm(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Euclidean distance between two points in C^n.
pub fn vec_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Hermitian inner product <a, b> = sum a_i conj(b_i).
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}
