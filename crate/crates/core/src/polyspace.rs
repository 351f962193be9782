//! Homogeneous polynomial mappings of C^n and the operators `B_k`.
//!
//! A mapping Q in P^k(C^n) is stored as a dense coefficient tensor over
//! (multi-index, output component) pairs. The basis is ordered graded
//! lexicographically on the multi-index (descending lex within fixed degree,
//! so z1^k comes first) with the output component varying fastest; the order
//! is fixed so that operator matrices are reproducible bit for bit.

use crate::{C64, CMat, CVec};
use crate::spectral::OperatorA;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("multi-index {0:?} has degree {1}, expected {2}")]
    BadMultiIndex(Vec<u32>, usize, usize),
    #[error("output component {0} out of range 1..={1}")]
    BadComponent(usize, usize),
}

/// Binomial coefficient as usize (small arguments only).
pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exponent vector m = (m_1, ..., m_n) with |m| = sum m_i.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    /// m - e_i; None when m_i = 0.
    pub fn lower(&self, i: usize) -> Option<MultiIndex> {
        if self.0[i] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[i] -= 1;
        Some(MultiIndex(v))
    }
    /// m + e_j.
    pub fn raise(&self, j: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[j] += 1;
        MultiIndex(v)
    }
    /// z^m.
    pub fn eval(&self, z: &[C64]) -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for (zi, &e) in z.iter().zip(&self.0) {
            if e > 0 {
                acc *= zi.powu(e);
            }
        }
        acc
    }
}

/// All degree-k monomials in n variables, descending lexicographic order.
#[derive(Debug)]
pub struct MonomialBasis {
    pub n: usize,
    pub k: usize,
    pub list: Vec<MultiIndex>,
    rank: HashMap<Vec<u32>, usize>,
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.list.len()
    }
    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }
    pub fn rank(&self, m: &MultiIndex) -> Option<usize> {
        self.rank.get(&m.0).copied()
    }
}

fn enumerate_monomials(n: usize, k: usize) -> Vec<MultiIndex> {
    fn rec(out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>, slots: usize, rem: u32) {
        if slots == 1 {
            prefix.push(rem);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=rem).rev() {
            prefix.push(e);
            rec(out, prefix, slots - 1, rem - e);
            prefix.pop();
        }
    }
    let mut raw = Vec::with_capacity(binom(n + k - 1, k));
    rec(&mut raw, &mut Vec::new(), n, k as u32);
    raw.into_iter().map(MultiIndex).collect()
}

/// Shared monomial basis for (n, k); cached process-wide.
pub fn basis(n: usize, k: usize) -> Arc<MonomialBasis> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((n, k))
        .or_insert_with(|| {
            let list = enumerate_monomials(n, k);
            let rank = list
                .iter()
                .enumerate()
                .map(|(i, m)| (m.0.clone(), i))
                .collect();
            Arc::new(MonomialBasis { n, k, list, rank })
        })
        .clone()
}

/// A homogeneous polynomial mapping Q in P^k(C^n).
///
/// Coefficient layout: `coeffs[rank(m) * n + s]` is the coefficient of the
/// monomial `z^m e_{s+1}` (s is 0-based internally, 1-based in JSON).
#[derive(Debug, Clone)]
pub struct HomPolyMap {
    n: usize,
    k: usize,
    basis: Arc<MonomialBasis>,
    coeffs: CVec,
}

impl HomPolyMap {
    pub fn zero(n: usize, k: usize) -> HomPolyMap {
        let b = basis(n, k);
        let dim = b.len() * n;
        HomPolyMap {
            n,
            k,
            basis: b,
            coeffs: CVec::zeros(dim),
        }
    }

    /// Single term c * z^m e_{s+1} (s 0-based).
    pub fn monomial(n: usize, m: MultiIndex, s: usize, c: C64) -> Result<HomPolyMap, PolyError> {
        let k = m.degree();
        if m.len() != n {
            return Err(PolyError::DimensionMismatch {
                expected: n,
                got: m.len(),
            });
        }
        if s >= n {
            return Err(PolyError::BadComponent(s + 1, n));
        }
        let mut q = HomPolyMap::zero(n, k);
        let r = q.basis.rank(&m).expect("monomial in own basis");
        q.coeffs[r * n + s] = c;
        Ok(q)
    }

    pub fn from_coeffs(n: usize, k: usize, coeffs: CVec) -> Result<HomPolyMap, PolyError> {
        let b = basis(n, k);
        let expected = b.len() * n;
        if coeffs.len() != expected {
            return Err(PolyError::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(HomPolyMap {
            n,
            k,
            basis: b,
            coeffs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn coeffs(&self) -> &CVec {
        &self.coeffs
    }
    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }
    /// Dimension of the coefficient space, n * C(n+k-1, k).
    pub fn coeff_dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of z^m e_{s+1}.
    pub fn coeff(&self, m: &MultiIndex, s: usize) -> C64 {
        match self.basis.rank(m) {
            Some(r) => self.coeffs[r * self.n + s],
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn set_coeff(&mut self, m: &MultiIndex, s: usize, c: C64) {
        let r = self.basis.rank(m).expect("multi-index of the right degree");
        self.coeffs[r * self.n + s] = c;
    }

    /// Iterate (multi-index, component, coefficient) over nonzero terms in
    /// basis order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, usize, C64)> + '_ {
        self.basis.list.iter().enumerate().flat_map(move |(r, m)| {
            (0..self.n).filter_map(move |s| {
                let c = self.coeffs[r * self.n + s];
                (c != C64::new(0.0, 0.0)).then_some((m, s, c))
            })
        })
    }

    /// Q(z^k), checked.
    pub fn evaluate(&self, z: &[C64]) -> Result<Vec<C64>, PolyError> {
        if z.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        self.eval_into(z, &mut out);
        Ok(out)
    }

    /// Q(z^k) accumulated into `out` (which must be zeroed by the caller if a
    /// plain evaluation is wanted).
    pub fn eval_acc(&self, z: &[C64], out: &mut [C64]) {
        debug_assert_eq!(z.len(), self.n);
        for (r, m) in self.basis.list.iter().enumerate() {
            let zm = m.eval(z);
            if zm == C64::new(0.0, 0.0) {
                continue;
            }
            for s in 0..self.n {
                let c = self.coeffs[r * self.n + s];
                if c != C64::new(0.0, 0.0) {
                    out[s] += c * zm;
                }
            }
        }
    }

    pub fn eval_into(&self, z: &[C64], out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
        self.eval_acc(z, out);
    }

    /// DQ(z) w, the derivative at z applied to w; equals k Q(w, z^{k-1}) for
    /// the symmetric multilinear polarization.
    pub fn jacobian_apply(&self, z: &[C64], w: &[C64]) -> Result<Vec<C64>, PolyError> {
        if z.len() != self.n || w.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: z.len().max(w.len()),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        self.jacobian_apply_into(z, w, &mut out);
        Ok(out)
    }

    pub fn jacobian_apply_into(&self, z: &[C64], w: &[C64], out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
        for (r, m) in self.basis.list.iter().enumerate() {
            // d(z^m)/dz_i w_i summed over i
            let mut dzm = C64::new(0.0, 0.0);
            for i in 0..self.n {
                let e = m.0[i];
                if e == 0 {
                    continue;
                }
                let mut part = C64::new(e as f64, 0.0) * w[i];
                for (j, zj) in z.iter().enumerate() {
                    let ej = if j == i { e - 1 } else { m.0[j] };
                    if ej > 0 {
                        part *= zj.powu(ej);
                    }
                }
                dzm += part;
            }
            if dzm == C64::new(0.0, 0.0) {
                continue;
            }
            for s in 0..self.n {
                let c = self.coeffs[r * self.n + s];
                if c != C64::new(0.0, 0.0) {
                    out[s] += c * dzm;
                }
            }
        }
    }

    pub fn scale(&self, c: C64) -> HomPolyMap {
        HomPolyMap {
            n: self.n,
            k: self.k,
            basis: self.basis.clone(),
            coeffs: &self.coeffs * c,
        }
    }

    pub fn add(&self, other: &HomPolyMap) -> Result<HomPolyMap, PolyError> {
        if self.n != other.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        if self.k != other.k {
            return Err(PolyError::DegreeMismatch {
                expected: self.k,
                got: other.k,
            });
        }
        Ok(HomPolyMap {
            n: self.n,
            k: self.k,
            basis: self.basis.clone(),
            coeffs: &self.coeffs + &other.coeffs,
        })
    }

    /// Coefficient-sum norm, sum |c[m, s]|.
    ///
    /// An upper bound for the symmetric multilinear sup norm
    /// sup { |Q(w_1, ..., w_k)| : |w_i| <= 1 }, not the exact norm: the
    /// polarization of each monomial has multilinear sup at most 1.
    pub fn poly_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Q'(z) = M_out Q((M_in z)^k), exact coefficient expansion.
    pub fn compose_linear(&self, m_in: &CMat, m_out: &CMat) -> HomPolyMap {
        let n = self.n;
        let mut out = HomPolyMap::zero(n, self.k);
        for (r, m) in self.basis.list.iter().enumerate() {
            // expand (M_in z)^m as a dense scalar polynomial of degree k
            let mut poly: Vec<C64> = vec![C64::new(1.0, 0.0)]; // degree-0 basis
            let mut deg = 0usize;
            for i in 0..n {
                for _ in 0..m.0[i] {
                    let row: Vec<C64> = (0..n).map(|j| m_in[[i, j]]).collect();
                    poly = scalar_mul_linear(&poly, n, deg, &row);
                    deg += 1;
                }
            }
            debug_assert_eq!(deg, self.k);
            let target = basis(n, self.k);
            for s in 0..n {
                let c = self.coeffs[r * n + s];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                // output direction M_out e_s
                for rr in 0..n {
                    let w = m_out[[rr, s]] * c;
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (idx, &pc) in poly.iter().enumerate() {
                        if pc != C64::new(0.0, 0.0) {
                            out.coeffs[idx * n + rr] += w * pc;
                        }
                    }
                }
                let _ = &target;
            }
        }
        out
    }
}

/// Multiply a dense scalar polynomial of degree `deg` (coefficients over the
/// degree-`deg` monomial basis) by a linear form sum_j row[j] z_j.
fn scalar_mul_linear(poly: &[C64], n: usize, deg: usize, row: &[C64]) -> Vec<C64> {
    let from = basis(n, deg);
    let to = basis(n, deg + 1);
    let mut out = vec![C64::new(0.0, 0.0); to.len()];
    for (r, m) in from.list.iter().enumerate() {
        let c = poly[r];
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        for (j, &w) in row.iter().enumerate() {
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            let up = m.raise(j);
            let rr = to.rank(&up).expect("raised index in next basis");
            out[rr] += c * w;
        }
    }
    out
}

/// DF(z) H(z^l) as an exact degree-(j-1+l) coefficient tensor, where F has
/// degree j and H degree l. This realizes the polarization term
/// j F(H(z^l), z^{j-1}).
pub fn jacobian_compose(f: &HomPolyMap, h: &HomPolyMap) -> Result<HomPolyMap, PolyError> {
    if f.n != h.n {
        return Err(PolyError::DimensionMismatch {
            expected: f.n,
            got: h.n,
        });
    }
    let n = f.n;
    let out_deg = f.k - 1 + h.k;
    let mut out = HomPolyMap::zero(n, out_deg);
    let out_basis = out.basis.clone();
    for (rf, mf) in f.basis.list.iter().enumerate() {
        for i in 0..n {
            let e = mf.0[i];
            if e == 0 {
                continue;
            }
            let lowered = mf.lower(i).unwrap();
            let factor = C64::new(e as f64, 0.0);
            for (rh, mh) in h.basis.list.iter().enumerate() {
                // substitute w_i = (H)_i, i.e. component i of H
                let ch = h.coeffs[rh * n + i];
                if ch == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut prod = lowered.0.clone();
                for (t, &mhv) in mh.0.iter().enumerate() {
                    prod[t] += mhv;
                }
                let rank = out_basis
                    .rank(&MultiIndex(prod))
                    .expect("product index in target basis");
                for s in 0..n {
                    let cf = f.coeffs[rf * n + s];
                    if cf != C64::new(0.0, 0.0) {
                        out.coeffs[rank * n + s] += cf * ch * factor;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// N_k = H_k + sum_{j=2}^{k-1} j F_j(H_{k-j+1}, z^{j-1}), assembled exactly
/// from coefficient tensors. `h_of_degree` returns the degree-l part of the
/// generator (None = zero).
pub fn nk_assemble(
    n: usize,
    k: usize,
    f_lower: &BTreeMap<usize, HomPolyMap>,
    h_of_degree: &dyn Fn(usize) -> Option<HomPolyMap>,
    ) -> Result<HomPolyMap, PolyError> {
    let mut nk = match h_of_degree(k) {
        Some(h) => {
            if h.k() != k || h.n() != n {
                return Err(PolyError::DegreeMismatch {
                    expected: k,
                    got: h.k(),
                });
            }
            h
        }
        None => HomPolyMap::zero(n, k),
    };
    for j in 2..k {
        let l = k - j + 1;
        if l < 2 {
            continue;
        }
        let fj = match f_lower.get(&j) {
            Some(f) => f,
            None => continue,
        };
        if let Some(hl) = h_of_degree(l) {
            let term = jacobian_compose(fj, &hl)?;
            nk = nk.add(&term)?;
        }
    }
    Ok(nk)
}

/// Matrix of B_k : Q -> DQ(z)(Az) - A Q(z^k) in the monomial basis.
///
/// For diagonal A the matrix is diagonal with entries <m, lambda> - lambda_s.
pub fn build_bk(a: &OperatorA, k: usize) -> CMat {
    let n = a.dim();
    let b = basis(n, k);
    let dim = b.len() * n;
    let mut out = CMat::zeros((dim, dim));
    let e = a.entries();
    for (col_r, m) in b.list.iter().enumerate() {
        for s in 0..n {
            let col = col_r * n + s;
            // DQ(z)(Az): monomial z^m gains sum_{i,j} m_i a_{ij} z^{m-e_i+e_j}
            for i in 0..n {
                let mi = m.0[i];
                if mi == 0 {
                    continue;
                }
                let lowered = m.lower(i).unwrap();
                for j in 0..n {
                    let w = e[[i, j]];
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let target = lowered.raise(j);
                    let row_r = b.rank(&target).expect("shifted index in basis");
                    out[[row_r * n + s, col]] += C64::new(mi as f64, 0.0) * w;
                }
            }
            // -A Q: output component rotates through column s of A
            for r in 0..n {
                let w = e[[r, s]];
                if w != C64::new(0.0, 0.0) {
                    out[[col_r * n + r, col]] -= w;
                }
            }
        }
    }
    out
}

/// Formula eigenvalues of B_k in basis-slot order:
/// slot (m, s) carries <m, lambda> - lambda_s.
pub fn bk_eigenvalue_table(a: &OperatorA, k: usize) -> Vec<(MultiIndex, usize, C64)> {
    let n = a.dim();
    let lambda = a.eigenvalues();
    let b = basis(n, k);
    let mut out = Vec::with_capacity(b.len() * n);
    for m in &b.list {
        let dot: C64 = m
            .0
            .iter()
            .zip(lambda)
            .map(|(&e, l)| C64::new(e as f64, 0.0) * l)
            .sum();
        for s in 0..n {
            out.push((m.clone(), s, dot - lambda[s]));
        }
    }
    out
}

/// Truncated normalized map f(z) = z + sum_{k=2..=K} F_k(z^k).
#[derive(Debug, Clone)]
pub struct TruncatedMap {
    pub n: usize,
    pub order: usize,
    /// F_k by degree, 2..=order. Missing degrees are zero.
    pub maps: BTreeMap<usize, HomPolyMap>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Solver,
    Extension,
    Witness,
    Manual,
}

#[derive(Serialize, Deserialize)]
struct TruncatedMapJson {
    n: usize,
    order: usize,
    maps: Vec<HomPolyMap>,
    provenance: Provenance,
}

impl Serialize for TruncatedMap {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        TruncatedMapJson {
            n: self.n,
            order: self.order,
            maps: self.maps.values().cloned().collect(),
            provenance: self.provenance,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for TruncatedMap {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = TruncatedMapJson::deserialize(de)?;
        let mut maps = BTreeMap::new();
        for q in raw.maps {
            if maps.insert(q.k(), q).is_some() {
                return Err(D::Error::custom("duplicate degree in truncated map"));
            }
        }
        TruncatedMap::with_maps(raw.n, raw.order, maps, raw.provenance)
            .map_err(D::Error::custom)
    }
}

impl TruncatedMap {
    pub fn identity(n: usize, order: usize) -> TruncatedMap {
        TruncatedMap {
            n,
            order,
            maps: BTreeMap::new(),
            provenance: Provenance::Manual,
        }
    }

    pub fn with_maps(
        n: usize,
        order: usize,
        maps: BTreeMap<usize, HomPolyMap>,
        provenance: Provenance,
    ) -> Result<TruncatedMap, PolyError> {
        for (k, q) in &maps {
            if q.n() != n {
                return Err(PolyError::DimensionMismatch {
                    expected: n,
                    got: q.n(),
                });
            }
            if q.k() != *k {
                return Err(PolyError::DegreeMismatch {
                    expected: *k,
                    got: q.k(),
                });
            }
        }
        Ok(TruncatedMap {
            n,
            order,
            maps,
            provenance,
        })
    }

    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        let mut out = z.to_vec();
        for q in self.maps.values() {
            q.eval_acc(z, &mut out);
        }
        out
    }

    /// Complex Jacobian Df(z).
    pub fn jacobian(&self, z: &[C64]) -> CMat {
        let n = self.n;
        let mut jac = CMat::eye(n);
        let mut col = vec![C64::new(0.0, 0.0); n];
        let mut e = vec![C64::new(0.0, 0.0); n];
        for q in self.maps.values() {
            for j in 0..n {
                e.fill(C64::new(0.0, 0.0));
                e[j] = C64::new(1.0, 0.0);
                q.jacobian_apply_into(z, &e, &mut col);
                for i in 0..n {
                    jac[[i, j]] += col[i];
                }
            }
        }
        jac
    }
}

// ---------------------------------------------------------------------------
// JSON form: {"n":2,"k":2,"terms":[{"m":[0,2],"s":1,"re":1.0,"im":0.0}]}
// with s 1-based; zero terms omitted.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermJson {
    m: Vec<u32>,
    s: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct HomPolyJson {
    n: usize,
    k: usize,
    terms: Vec<TermJson>,
}

impl Serialize for HomPolyMap {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let terms = self
            .terms()
            .map(|(m, s, c)| TermJson {
                m: m.0.clone(),
                s: s + 1,
                re: c.re,
                im: c.im,
            })
            .collect();
        HomPolyJson {
            n: self.n,
            k: self.k,
            terms,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for HomPolyMap {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = HomPolyJson::deserialize(de)?;
        let mut q = HomPolyMap::zero(raw.n, raw.k);
        for t in raw.terms {
            let m = MultiIndex(t.m);
            if m.len() != raw.n {
                return Err(D::Error::custom(format!(
                    "multi-index length {} does not match n = {}",
                    m.len(),
                    raw.n
                )));
            }
            if m.degree() != raw.k {
                return Err(D::Error::custom(format!(
                    "multi-index {:?} has degree {}, expected {}",
                    m.0,
                    m.degree(),
                    raw.k
                )));
            }
            if t.s == 0 || t.s > raw.n {
                return Err(D::Error::custom(format!(
                    "component s = {} out of range 1..={}",
                    t.s, raw.n
                )));
            }
            let prev = q.coeff(&m, t.s - 1);
            q.set_coeff(&m, t.s - 1, prev + C64::new(t.re, t.im));
        }
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn basis_order_graded_lex() {
        let b = basis(2, 2);
        let exps: Vec<Vec<u32>> = b.list.iter().map(|m| m.0.clone()).collect();
        assert_eq!(exps, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(basis(3, 2).len(), 6);
        assert_eq!(basis(4, 4).len(), binom(7, 4));
    }

    #[test]
    fn evaluate_monomial() {
        // z1 z2 e1 at (2, 3) -> (6, 0)
        let q = HomPolyMap::monomial(2, MultiIndex(vec![1, 1]), 0, c(1.0, 0.0)).unwrap();
        let v = q.evaluate(&[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(v[0].re, 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1].norm(), 0.0, epsilon = 1e-15);

        let zero = q.evaluate(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(zero.iter().all(|x| x.norm() == 0.0));

        assert!(q.evaluate(&[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn jacobian_examples() {
        // Q = z1^2 e1, DQ(z) w = (2 z1 w1, 0)
        let q = HomPolyMap::monomial(2, MultiIndex(vec![2, 0]), 0, c(1.0, 0.0)).unwrap();
        let z = [c(0.3, 0.1), c(-0.2, 0.4)];
        let w = [c(1.0, 0.0), c(0.0, 0.0)];
        let d = q.jacobian_apply(&z, &w).unwrap();
        assert!((d[0] - c(2.0, 0.0) * z[0]).norm() < 1e-15);
        assert!(d[1].norm() == 0.0);
    }

    #[test]
    fn euler_identity() {
        // DQ(z) z = k Q(z)
        let mut q = HomPolyMap::zero(3, 3);
        let b = q.basis.clone();
        for (r, _) in b.list.iter().enumerate() {
            for s in 0..3 {
                q.coeffs[r * 3 + s] = c(
                    ((r * 3 + s) as f64 * 0.37).sin(),
                    ((r * 3 + s) as f64 * 0.61).cos(),
                );
            }
        }
        let z = [c(0.2, 0.1), c(-0.3, 0.2), c(0.1, -0.4)];
        let dq = q.jacobian_apply(&z, &z).unwrap();
        let qv = q.evaluate(&z).unwrap();
        for i in 0..3 {
            assert!((dq[i] - qv[i] * c(3.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut q = HomPolyMap::zero(2, 3);
        let dim = q.coeffs.len();
        for i in 0..dim {
            q.coeffs[i] = c((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos());
        }
        let z = [c(0.31, -0.12), c(0.05, 0.22)];
        let w = [c(0.4, 0.1), c(-0.3, 0.6)];
        let eps = 1e-5;
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        for i in 0..2 {
            zp[i] = z[i] + w[i] * eps;
            zm[i] = z[i] - w[i] * eps;
        }
        let fp = q.evaluate(&zp).unwrap();
        let fm = q.evaluate(&zm).unwrap();
        let exact = q.jacobian_apply(&z, &w).unwrap();
        for i in 0..2 {
            let fd = (fp[i] - fm[i]) / c(2.0 * eps, 0.0);
            assert!((fd - exact[i]).norm() < 1e-8, "component {i}");
        }
    }

    #[test]
    fn homogeneity_scaling() {
        let mut q = HomPolyMap::zero(2, 4);
        for i in 0..q.coeffs.len() {
            q.coeffs[i] = c((i as f64).cos(), (i as f64 * 0.5).sin());
        }
        let z = [c(0.2, 0.3), c(-0.1, 0.15)];
        let lam = c(0.7, -0.4);
        let scaled: Vec<C64> = z.iter().map(|x| x * lam).collect();
        let qs = q.evaluate(&scaled).unwrap();
        let qz = q.evaluate(&z).unwrap();
        let factor = lam.powu(4);
        for i in 0..2 {
            assert!((qs[i] - qz[i] * factor).norm() < 1e-13);
        }
    }

    #[test]
    fn bk_diagonal_eigenvalues() {
        // A = diag(l1, l2), k = 2: diagonal matrix with <m,l> - l_s entries.
        let a = OperatorA::diagonal(&[c(2.0, 0.3), c(1.0, -0.1)]).unwrap();
        let bk = build_bk(&a, 2);
        let table = bk_eigenvalue_table(&a, 2);
        for (slot, (_, _, expected)) in table.iter().enumerate() {
            assert!((bk[[slot, slot]] - expected).norm() < 1e-14);
            for other in 0..bk.nrows() {
                if other != slot {
                    assert_eq!(bk[[other, slot]], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn bk_identity_operator() {
        let a = crate::spectral::analyze(&CMat::eye(3)).unwrap();
        for k in 2..=4 {
            let bk = build_bk(&a, k);
            let dim = bk.nrows();
            for i in 0..dim {
                for j in 0..dim {
                    let expect = if i == j {
                        c((k as f64) - 1.0, 0.0)
                    } else {
                        c(0.0, 0.0)
                    };
                    assert!((bk[[i, j]] - expect).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn bk_resonance_diag_2_1() {
        let a = OperatorA::diagonal(&[c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        let table = bk_eigenvalue_table(&a, 2);
        let zero: Vec<_> = table
            .iter()
            .filter(|(_, _, v)| v.norm() < 1e-14)
            .collect();
        assert_eq!(zero.len(), 1);
        let (m, s, _) = zero[0];
        assert_eq!(m.0, vec![0, 2]);
        assert_eq!(*s, 0);
    }

    #[test]
    fn poly_norm_upper_bounds_sampled_sup() {
        let mut q = HomPolyMap::zero(2, 3);
        for i in 0..q.coeffs.len() {
            q.coeffs[i] = c((i as f64 * 2.1).sin() * 0.8, (i as f64 * 0.9).cos() * 0.5);
        }
        let bound = q.poly_norm();
        let pts = crate::sampling::sphere_points(2, 1.0, 1000, 7);
        let mut max = 0.0f64;
        for p in &pts {
            let v = q.evaluate(p).unwrap();
            max = max.max(crate::vec_norm(&v));
        }
        assert!(bound >= max, "bound {bound} < sampled sup {max}");
        assert_eq!(HomPolyMap::zero(2, 3).poly_norm(), 0.0);
        let unit = HomPolyMap::monomial(2, MultiIndex(vec![3, 0]), 0, c(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(unit.poly_norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn difference_bound() {
        let mut q = HomPolyMap::zero(2, 4);
        for i in 0..q.coeffs.len() {
            q.coeffs[i] = c((i as f64 * 1.7).sin(), (i as f64 * 0.3).cos() * 0.6);
        }
        let norm = q.poly_norm();
        let pairs = [
            ([c(0.3, 0.2), c(-0.4, 0.1)], [c(0.1, -0.2), c(0.2, 0.5)]),
            ([c(0.9, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.9, 0.0)]),
        ];
        for (z, w) in pairs {
            let qz = q.evaluate(&z).unwrap();
            let qw = q.evaluate(&w).unwrap();
            let lhs = crate::vec_dist(&qz, &qw);
            let nz = crate::vec_norm(&z);
            let nw = crate::vec_norm(&w);
            let geom: f64 = (0..4).map(|j| nz.powi(j) * nw.powi(3 - j)).sum();
            let rhs = norm * crate::vec_dist(&z, &w) * geom;
            assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn jacobian_compose_hand_example() {
        // F2 = z2^2 e1, H2 = z1 z2 e2: DF2(z) H2 = 2 z1 z2^2 e1
        let f2 = HomPolyMap::monomial(2, MultiIndex(vec![0, 2]), 0, c(1.0, 0.0)).unwrap();
        let h2 = HomPolyMap::monomial(2, MultiIndex(vec![1, 1]), 1, c(1.0, 0.0)).unwrap();
        let term = jacobian_compose(&f2, &h2).unwrap();
        assert_eq!(term.k(), 3);
        let expect = HomPolyMap::monomial(2, MultiIndex(vec![1, 2]), 0, c(2.0, 0.0)).unwrap();
        let diff = term.add(&expect.scale(c(-1.0, 0.0))).unwrap();
        assert!(diff.poly_norm() < 1e-14);

        // compare against finite differences of z -> DF2(z) H2(z^2)
        let z = [c(0.21, 0.05), c(-0.13, 0.32)];
        let h_at = h2.evaluate(&z).unwrap();
        let direct = f2.jacobian_apply(&z, &h_at).unwrap();
        let composed = term.evaluate(&z).unwrap();
        for i in 0..2 {
            assert!((direct[i] - composed[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn nk_assemble_low_orders() {
        let h2 = HomPolyMap::monomial(2, MultiIndex(vec![1, 1]), 1, c(0.5, 0.1)).unwrap();
        let h_fn = |l: usize| -> Option<HomPolyMap> {
            (l == 2).then(|| h2.clone())
        };
        // k = 2: empty sum, N2 = H2
        let n2 = nk_assemble(2, 2, &BTreeMap::new(), &h_fn).unwrap();
        let diff = n2.add(&h2.scale(c(-1.0, 0.0))).unwrap();
        assert!(diff.poly_norm() < 1e-15);

        // k = 3 with H2 = 0: N3 = H3 (here zero)
        let n3 = nk_assemble(2, 3, &BTreeMap::new(), &|_| None).unwrap();
        assert!(n3.poly_norm() == 0.0);
    }

    #[test]
    fn compose_linear_diagonal_scaling() {
        // Q(z) = z1 z2 e1 under M_in = diag(2, 3), M_out = I: 6 z1 z2 e1
        let q = HomPolyMap::monomial(2, MultiIndex(vec![1, 1]), 0, c(1.0, 0.0)).unwrap();
        let mut m_in = CMat::eye(2);
        m_in[[0, 0]] = c(2.0, 0.0);
        m_in[[1, 1]] = c(3.0, 0.0);
        let composed = q.compose_linear(&m_in, &CMat::eye(2));
        assert!((composed.coeff(&MultiIndex(vec![1, 1]), 0) - c(6.0, 0.0)).norm() < 1e-14);
        // pointwise agreement
        let z = [c(0.3, 0.1), c(0.2, -0.2)];
        let mz: Vec<C64> = vec![z[0] * c(2.0, 0.0), z[1] * c(3.0, 0.0)];
        let lhs = composed.evaluate(&z).unwrap();
        let rhs = q.evaluate(&mz).unwrap();
        for i in 0..2 {
            assert!((lhs[i] - rhs[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let mut q = HomPolyMap::zero(2, 2);
        q.set_coeff(&MultiIndex(vec![0, 2]), 0, c(1.5, -0.5));
        q.set_coeff(&MultiIndex(vec![1, 1]), 1, c(0.0, 2.0));
        let text = serde_json::to_string(&q).unwrap();
        assert!(text.contains("\"terms\""));
        let back: HomPolyMap = serde_json::from_str(&text).unwrap();
        let diff = q.add(&back.scale(c(-1.0, 0.0))).unwrap();
        assert!(diff.poly_norm() < 1e-15);
    }

    #[test]
    fn truncated_map_eval_and_jacobian() {
        // f(z) = (z1 - 2 z2^2, z2), explicit inverse (w1 + 2 w2^2, w2)
        let f2 = HomPolyMap::monomial(2, MultiIndex(vec![0, 2]), 0, c(-2.0, 0.0)).unwrap();
        let mut maps = BTreeMap::new();
        maps.insert(2, f2);
        let f = TruncatedMap::with_maps(2, 2, maps, Provenance::Manual).unwrap();
        let z = [c(0.3, 0.1), c(0.2, -0.4)];
        let w = f.eval(&z);
        let back = [w[0] + c(2.0, 0.0) * w[1] * w[1], w[1]];
        for i in 0..2 {
            assert!((back[i] - z[i]).norm() < 1e-15);
        }
        let jac = f.jacobian(&z);
        assert!((jac[[0, 0]] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((jac[[0, 1]] - c(-4.0, 0.0) * z[1]).norm() < 1e-15);
        assert!((jac[[1, 1]] - c(1.0, 0.0)).norm() < 1e-15);
    }
}
