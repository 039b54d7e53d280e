//! Dense complex linear algebra for channel matrices.
//!
//! Contains the Householder QR decomposition with real positive diagonal,
//! the punctured "WR" decomposition `W*H = R̊`, cyclic column orderings used
//! by the layered detectors, and Cholesky factors for correlation matrices.
//!
//! Matrices are small (N ≤ 128) and row-major; nothing here tries to be a
//! general BLAS.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MimoError, Result};

pub type ComplexVector = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative threshold on `r_nn / ‖H‖_F` below which a channel is treated as
/// rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(MimoError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, re: &[f64]) -> Result<Self> {
        Self::from_row_major(rows, cols, re.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> ComplexVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[Complex64]) {
        assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> ComplexVector {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A* x` without forming the adjoint.
    pub fn adjoint_mul_vec(&self, x: &[Complex64]) -> ComplexVector {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![ZERO; self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self[(i, j)].conj() * xi;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Column `j` of the result is column `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, perm[j])])
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..self.cols.min(i)).all(|j| self[(i, j)].norm() <= tol))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// On-disk layout used by the `decomp` command.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixFile {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = MatrixFile::deserialize(d)?;
        if f.re.len() != f.im.len() {
            return Err(serde::de::Error::custom("re and im arrays differ in length"));
        }
        let data = f.re.iter().zip(&f.im).map(|(&re, &im)| Complex64::new(re, im)).collect();
        let m = ComplexMatrix::from_row_major(f.rows, f.cols, data).map_err(serde::de::Error::custom)?;
        if !m.is_finite() {
            return Err(serde::de::Error::custom("matrix entries must be finite"));
        }
        Ok(m)
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|z| format!("{:+.4}{:+.4}j", z.re, z.im)).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Thin QR factors: `Q` is M×N with orthonormal columns, `R` is N×N upper
/// triangular with a real positive diagonal.
#[derive(Clone, Debug)]
pub struct QrFactors {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
}

/// Householder QR decomposition `H = QR`.
///
/// After the reflections each column of `Q` is rotated so that `r_nn` is
/// real and positive. Fails with [`MimoError::RankDeficient`] when a
/// diagonal entry falls below `1e-12 · ‖H‖_F`.
pub fn qrd(h: &ComplexMatrix) -> Result<QrFactors> {
    let (m, n) = (h.rows(), h.cols());
    if m < n {
        return Err(MimoError::DimensionMismatch(format!("QRD needs rows >= cols, got {m}x{n}")));
    }
    let threshold = RANK_TOLERANCE * h.frobenius_norm();
    let mut a = h.clone();
    let mut reflectors: Vec<Option<ComplexVector>> = Vec::with_capacity(n);

    for k in 0..n {
        let x: ComplexVector = (k..m).map(|i| a[(i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            // already triangular in this column
            reflectors.push(None);
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail).sqrt();
        let phase = if x[0] == ZERO { ONE } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        for j in k..n {
            let s: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * a[(k + i, j)]).sum();
            let scale = s * (2.0 / vnorm2);
            for (i, vi) in v.iter().enumerate() {
                a[(k + i, j)] -= scale * vi;
            }
        }
        for i in (k + 1)..m {
            a[(i, k)] = ZERO;
        }
        reflectors.push(Some(v));
    }

    let mut r = ComplexMatrix::from_fn(n, n, |i, j| if j >= i { a[(i, j)] } else { ZERO });
    let mut q = ComplexMatrix::from_fn(m, n, |i, j| if i == j { ONE } else { ZERO });
    for (k, v) in reflectors.iter().enumerate().rev() {
        let Some(v) = v else { continue };
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        for j in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * q[(k + i, j)]).sum();
            let scale = s * (2.0 / vnorm2);
            for (i, vi) in v.iter().enumerate() {
                q[(k + i, j)] -= scale * vi;
            }
        }
    }

    for k in 0..n {
        let d = r[(k, k)];
        let mag = d.norm();
        if !(mag > threshold) || !mag.is_finite() {
            return Err(MimoError::RankDeficient { index: k, value: mag, threshold });
        }
        let phase = d / mag;
        for j in (k + 1)..n {
            r[(k, j)] *= phase.conj();
        }
        r[(k, k)] = Complex64::new(mag, 0.0);
        for i in 0..m {
            q[(i, k)] *= phase;
        }
    }
    Ok(QrFactors { q, r })
}

/// Set of strictly-upper entries (row, col) of `R` to puncture, 0-based.
///
/// Only entries with `row < col < N - 1` are admissible; the last column is
/// never punctured.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PuncturePattern {
    n: usize,
    zeroed: BTreeSet<(usize, usize)>,
}

impl PuncturePattern {
    /// Every entry between the diagonal and the last column.
    pub fn full(n: usize) -> Self {
        let zeroed = (0..n.saturating_sub(2))
            .flat_map(|m| ((m + 1)..(n - 1)).map(move |c| (m, c)))
            .collect();
        Self { n, zeroed }
    }

    pub fn empty(n: usize) -> Self {
        Self { n, zeroed: BTreeSet::new() }
    }

    /// Full puncturing except the listed columns (0-based), whose entries
    /// above the diagonal are kept.
    pub fn retaining_columns(n: usize, cols: &[usize]) -> Result<Self> {
        if let Some(&c) = cols.iter().find(|&&c| c >= n) {
            return Err(MimoError::InvalidPattern(format!("column {c} out of range for N={n}")));
        }
        let mut p = Self::full(n);
        p.zeroed.retain(|(_, c)| !cols.contains(c));
        Ok(p)
    }

    /// Arbitrary pattern. The pattern must be closed under the puncturing
    /// recursion: if `(m, c)` and `(m, j)` are punctured with `c < j`, then
    /// `(c, j)` must be punctured too, otherwise zeroing `(m, c)` would
    /// refill `(m, j)`.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let zeroed: BTreeSet<_> = entries.into_iter().collect();
        for &(m, c) in &zeroed {
            if !(m < c && c + 1 < n) {
                return Err(MimoError::InvalidPattern(format!(
                    "entry ({m},{c}) is not strictly upper or lies in the last column"
                )));
            }
        }
        for &(m, c) in &zeroed {
            for &(m2, j) in zeroed.range((m, c + 1)..(m + 1, 0)) {
                debug_assert_eq!(m2, m);
                if !zeroed.contains(&(c, j)) {
                    return Err(MimoError::InvalidPattern(format!(
                        "puncturing ({m},{c}) would refill ({m},{j}) because ({c},{j}) is kept"
                    )));
                }
            }
        }
        Ok(Self { n, zeroed })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.zeroed.contains(&(row, col))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.zeroed.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.zeroed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeroed.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.zeroed.len() == self.n.saturating_sub(2) * self.n.saturating_sub(1) / 2
    }

    /// Whether `(row, col)` is structurally nonzero in `R̊` (upper triangle
    /// and not punctured).
    pub fn keeps(&self, row: usize, col: usize) -> bool {
        col > row && !self.contains(row, col)
    }
}

/// Punctured factors `W*H = R̊`.
#[derive(Clone, Debug)]
pub struct WrFactors {
    /// Unit-norm, mutually non-orthogonal columns; the last equals `q_N`.
    pub w: ComplexMatrix,
    pub r_punc: ComplexMatrix,
    pub pattern: PuncturePattern,
}

/// Punctured QR decomposition.
///
/// Starting from `qrd(h)`, entries in `pattern` are zeroed row by row from
/// `m = N-2` up to `1`, and within a row from the column nearest the last
/// one down to the diagonal, by subtracting multiples of `q_n` from `q_m`.
/// Each touched column of `Q` is then renormalised. Punctured entries are
/// stored as exact zeros.
pub fn wrd(h: &ComplexMatrix, pattern: &PuncturePattern) -> Result<WrFactors> {
    let n = h.cols();
    if h.rows() != n {
        return Err(MimoError::DimensionMismatch(format!(
            "WRD needs a square channel, got {}x{n}",
            h.rows()
        )));
    }
    if pattern.dim() != n {
        return Err(MimoError::InvalidPattern(format!(
            "pattern built for N={} applied to N={n}",
            pattern.dim()
        )));
    }
    let QrFactors { mut q, mut r } = qrd(h)?;
    let rows = q.rows();

    for m in (0..n.saturating_sub(2)).rev() {
        let mut touched = false;
        for c in ((m + 1)..(n - 1)).rev() {
            if !pattern.contains(m, c) {
                continue;
            }
            let rcc = r[(c, c)].re;
            if !(rcc > 0.0) || !rcc.is_finite() {
                return Err(MimoError::DivideByZero(format!("r[{c},{c}] = {rcc:e} during puncturing")));
            }
            let rho = r[(m, c)] / rcc;
            for i in 0..rows {
                let qc = q[(i, c)];
                q[(i, m)] -= qc * rho.conj();
            }
            // Row c is already in its final punctured form, so only its kept
            // entries propagate into row m.
            for j in c..n {
                let rcj = r[(c, j)];
                if rcj != ZERO {
                    r[(m, j)] -= rcj * rho;
                }
            }
            r[(m, c)] = ZERO;
            touched = true;
        }
        if touched {
            let norm = (0..rows).map(|i| q[(i, m)].norm_sqr()).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(MimoError::DivideByZero(format!("column {m} of W vanished")));
            }
            for j in m..n {
                r[(m, j)] /= norm;
            }
            r[(m, m)] = Complex64::new(r[(m, m)].re, 0.0);
            for i in 0..rows {
                q[(i, m)] /= norm;
            }
        }
    }
    Ok(WrFactors { w: q, r_punc: r, pattern: pattern.clone() })
}

/// Column order for cyclic step `root`: column `j` of the permuted channel
/// is original column `(root + 1 + j) mod N`, so `root` lands last.
pub fn cyclic_permutation(n: usize, root: usize) -> Vec<usize> {
    assert!(root < n);
    (0..n).map(|j| (root + 1 + j) % n).collect()
}

/// One ordering of a layered detector, with original layer `root` in the
/// last (root) position.
#[derive(Clone, Debug)]
pub struct CyclicStep<F> {
    pub root: usize,
    /// `permutation[j]` is the original layer sitting at position `j`.
    pub permutation: Vec<usize>,
    pub factors: F,
}

impl<F> CyclicStep<F> {
    /// Maps symbols in permuted order back to original layer order.
    pub fn to_original<T: Copy + Default>(&self, permuted: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); permuted.len()];
        for (j, &orig) in self.permutation.iter().enumerate() {
            out[orig] = permuted[j];
        }
        out
    }

    /// Maps original-order values into this step's permuted order.
    pub fn to_permuted<T: Copy>(&self, original: &[T]) -> Vec<T> {
        self.permutation.iter().map(|&orig| original[orig]).collect()
    }
}

pub fn cyclic_qr(h: &ComplexMatrix) -> Result<Vec<CyclicStep<QrFactors>>> {
    let n = h.cols();
    (0..n)
        .map(|root| {
            let permutation = cyclic_permutation(n, root);
            let factors = qrd(&h.permute_columns(&permutation))?;
            Ok(CyclicStep { root, permutation, factors })
        })
        .collect()
}

pub fn cyclic_wr(h: &ComplexMatrix, pattern: &PuncturePattern) -> Result<Vec<CyclicStep<WrFactors>>> {
    let n = h.cols();
    (0..n)
        .map(|root| {
            let permutation = cyclic_permutation(n, root);
            let factors = wrd(&h.permute_columns(&permutation), pattern)?;
            Ok(CyclicStep { root, permutation, factors })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorMode {
    Qr,
    Wr,
}

#[derive(Clone, Debug)]
pub enum Factors {
    Qr(QrFactors),
    Wr(WrFactors),
}

/// All `N` cyclic decompositions of `h` in either mode. `pattern` is
/// ignored in QR mode.
pub fn cyclic_decompositions(
    h: &ComplexMatrix,
    mode: FactorMode,
    pattern: &PuncturePattern,
) -> Result<Vec<CyclicStep<Factors>>> {
    if h.rows() != h.cols() {
        return Err(MimoError::DimensionMismatch("cyclic decompositions need a square channel".into()));
    }
    Ok(match mode {
        FactorMode::Qr => cyclic_qr(h)?
            .into_iter()
            .map(|s| CyclicStep { root: s.root, permutation: s.permutation, factors: Factors::Qr(s.factors) })
            .collect(),
        FactorMode::Wr => cyclic_wr(h, pattern)?
            .into_iter()
            .map(|s| CyclicStep { root: s.root, permutation: s.permutation, factors: Factors::Wr(s.factors) })
            .collect(),
    })
}

/// Lower-triangular Cholesky factor `C` with `C C* = r`.
pub fn corr_sqrt(r: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = r.rows();
    if r.cols() != n {
        return Err(MimoError::DimensionMismatch("correlation matrix must be square".into()));
    }
    let scale = r.frobenius_norm().max(f64::MIN_POSITIVE);
    if r.max_abs_diff(&r.adjoint()) > 1e-12 * scale {
        return Err(MimoError::NotPositiveDefinite(0));
    }
    let mut c = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = r[(j, j)].re;
        for k in 0..j {
            d -= c[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(MimoError::NotPositiveDefinite(j));
        }
        let djj = d.sqrt();
        c[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = r[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * c[(j, k)].conj();
            }
            c[(i, j)] = s / djj;
        }
    }
    Ok(c)
}

/// Solves `C C* x = b` given the lower Cholesky factor `C`.
pub fn cholesky_solve(c: &ComplexMatrix, b: &[Complex64]) -> ComplexVector {
    let n = c.rows();
    assert_eq!(b.len(), n);
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = c[(i, k)] * z[k];
            z[i] -= t;
        }
        z[i] /= c[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = c[(k, i)].conj() * z[k];
            z[i] -= t;
        }
        z[i] /= c[(i, i)].conj();
    }
    z
}

/// Exponential correlation matrix with entries `a^{|i-j|}`.
pub fn exponential_correlation(n: usize, a: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(a.powi((i as i32 - j as i32).abs()), 0.0))
}

/// `‖y - H x‖²`.
pub fn residual_norm_sqr(y: &[Complex64], h: &ComplexMatrix, x: &[Complex64]) -> f64 {
    h.mul_vec(x).iter().zip(y).map(|(hx, yi)| (yi - hx).norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RngStream;

    fn random_matrix(seed: u64, rows: usize, cols: usize) -> ComplexMatrix {
        let mut rng = RngStream::new(seed, 0, 0);
        ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_gaussian(1.0))
    }

    fn eye_diff(m: &ComplexMatrix) -> f64 {
        m.max_abs_diff(&ComplexMatrix::identity(m.rows()))
    }

    // Modified Gram-Schmidt, kept independent of the Householder path.
    fn mgs(h: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
        let (m, n) = (h.rows(), h.cols());
        let mut v: Vec<ComplexVector> = (0..n).map(|j| h.col(j)).collect();
        let mut q = ComplexMatrix::zeros(m, n);
        let mut r = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            let nrm = v[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            r[(k, k)] = Complex64::new(nrm, 0.0);
            let qk: ComplexVector = v[k].iter().map(|z| z / nrm).collect();
            for j in (k + 1)..n {
                let s: Complex64 = qk.iter().zip(&v[j]).map(|(a, b)| a.conj() * b).sum();
                r[(k, j)] = s;
                for (vj, qi) in v[j].iter_mut().zip(&qk) {
                    *vj -= s * qi;
                }
            }
            q.set_col(k, &qk);
        }
        (q, r)
    }

    #[test]
    fn qrd_identity() {
        let f = qrd(&ComplexMatrix::identity(4)).unwrap();
        assert!(eye_diff(&f.q) < 1e-15);
        assert!(eye_diff(&f.r) < 1e-15);
    }

    #[test]
    fn qrd_positive_diagonal_input() {
        let h = ComplexMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 3.0]).unwrap();
        let f = qrd(&h).unwrap();
        assert!(eye_diff(&f.q) < 1e-15);
        assert!(f.r.max_abs_diff(&h) < 1e-15);
    }

    #[test]
    fn qrd_matches_gram_schmidt() {
        let h = random_matrix(0, 4, 4);
        let f = qrd(&h).unwrap();
        let (q_ref, r_ref) = mgs(&h);
        assert!(eye_diff(&f.q.adjoint().matmul(&f.q)) < 1e-9);
        assert!(f.q.matmul(&f.r).max_abs_diff(&h) < 1e-8);
        assert!(f.r.is_upper_triangular(0.0));
        for k in 0..4 {
            assert!(f.r[(k, k)].im == 0.0 && f.r[(k, k)].re > 0.0);
        }
        // QR with positive real diagonal is unique
        assert!(f.q.max_abs_diff(&q_ref) < 1e-9);
        assert!(f.r.max_abs_diff(&r_ref) < 1e-9);
    }

    #[test]
    fn qrd_tall_matrix() {
        let h = random_matrix(3, 6, 4);
        let f = qrd(&h).unwrap();
        assert_eq!((f.q.rows(), f.q.cols()), (6, 4));
        assert!(eye_diff(&f.q.adjoint().matmul(&f.q)) < 1e-9);
        assert!(f.q.matmul(&f.r).max_abs_diff(&h) < 1e-8);
    }

    #[test]
    fn qrd_errors() {
        let wide = random_matrix(1, 2, 3);
        assert!(matches!(qrd(&wide), Err(MimoError::DimensionMismatch(_))));
        let mut h = random_matrix(1, 3, 3);
        let c0 = h.col(0);
        h.set_col(2, &c0);
        assert!(matches!(qrd(&h), Err(MimoError::RankDeficient { index: 2, .. })));
    }

    #[test]
    fn full_pattern_shape() {
        let p = PuncturePattern::full(4);
        let e: Vec<_> = p.entries().collect();
        assert_eq!(e, vec![(0, 1), (0, 2), (1, 2)]);
        assert!(PuncturePattern::full(2).is_empty());
        assert_eq!(PuncturePattern::full(64).len(), 62 * 63 / 2);
        assert!(p.is_full());
    }

    #[test]
    fn pattern_validation() {
        assert!(PuncturePattern::from_entries(4, [(0, 3)]).is_err());
        assert!(PuncturePattern::from_entries(4, [(2, 1)]).is_err());
        // (0,1) and (0,2) punctured while (1,2) kept: refill
        assert!(PuncturePattern::from_entries(4, [(0, 1), (0, 2)]).is_err());
        assert!(PuncturePattern::from_entries(4, [(0, 1), (0, 2), (1, 2)]).is_ok());
        let p = PuncturePattern::retaining_columns(5, &[2]).unwrap();
        assert!(!p.contains(0, 2) && !p.contains(1, 2));
        assert!(p.contains(0, 1) && p.contains(0, 3) && p.contains(2, 3));
        assert!(PuncturePattern::from_entries(5, p.entries()).is_ok());
    }

    #[test]
    fn wrd_equals_qrd_for_two_layers() {
        let h = random_matrix(7, 2, 2);
        let q = qrd(&h).unwrap();
        let w = wrd(&h, &PuncturePattern::full(2)).unwrap();
        assert_eq!(w.w, q.q);
        assert_eq!(w.r_punc, q.r);
    }

    #[test]
    fn wrd_full_pattern_structure() {
        let h = random_matrix(0, 4, 4);
        let f = wrd(&h, &PuncturePattern::full(4)).unwrap();
        for (m, c) in [(0, 1), (0, 2), (1, 2)] {
            assert!(f.r_punc[(m, c)].norm() <= 1e-9);
        }
        assert!(f.w.adjoint().matmul(&h).max_abs_diff(&f.r_punc) < 1e-8);
        let gram = f.w.adjoint().matmul(&f.w);
        for i in 0..4 {
            assert!((gram[(i, i)] - ONE).norm() < 1e-9);
            if i != 3 {
                assert!(gram[(i, 3)].norm() < 1e-9 && gram[(3, i)].norm() < 1e-9);
            }
        }
        // upper block is genuinely coloured
        assert!(gram[(0, 1)].norm() > 1e-6);
        let q = qrd(&h).unwrap();
        assert!(ComplexMatrix::from_fn(4, 1, |i, _| f.w[(i, 3)])
            .max_abs_diff(&ComplexMatrix::from_fn(4, 1, |i, _| q.q[(i, 3)]))
            < 1e-9);
        for j in 0..4 {
            assert!((f.r_punc[(2, j)] - q.r[(2, j)]).norm() < 1e-8);
            assert!((f.r_punc[(3, j)] - q.r[(3, j)]).norm() < 1e-8);
        }
    }

    #[test]
    fn wrd_partial_pattern() {
        let h = random_matrix(11, 5, 5);
        let p = PuncturePattern::retaining_columns(5, &[2]).unwrap();
        let f = wrd(&h, &p).unwrap();
        assert!(f.w.adjoint().matmul(&h).max_abs_diff(&f.r_punc) < 1e-8);
        for (m, c) in p.entries() {
            assert_eq!(f.r_punc[(m, c)], ZERO);
        }
        assert!(f.r_punc[(0, 2)].norm() > 1e-6);
    }

    #[test]
    fn wrd_rejects_rectangular() {
        let h = random_matrix(2, 5, 4);
        assert!(matches!(wrd(&h, &PuncturePattern::full(4)), Err(MimoError::DimensionMismatch(_))));
    }

    #[test]
    fn cyclic_roots_cover_all_layers() {
        let h = random_matrix(0, 4, 4);
        let steps = cyclic_qr(&h).unwrap();
        let roots: BTreeSet<usize> = steps.iter().map(|s| *s.permutation.last().unwrap()).collect();
        assert_eq!(roots, (0..4).collect());
        let last = steps.last().unwrap();
        assert_eq!(last.permutation, vec![0, 1, 2, 3]);
        let plain = qrd(&h).unwrap();
        assert_eq!(last.factors.r, plain.r);
        let wsteps = cyclic_wr(&h, &PuncturePattern::full(4)).unwrap();
        assert_eq!(wsteps[3].factors.r_punc, wrd(&h, &PuncturePattern::full(4)).unwrap().r_punc);
    }

    #[test]
    fn cyclic_frames_preserve_distance() {
        let h = random_matrix(0, 4, 4);
        let mut rng = RngStream::new(0, 1, 0);
        let steps = cyclic_qr(&h).unwrap();
        for _ in 0..20 {
            let x: ComplexVector = (0..4).map(|_| rng.complex_gaussian(1.0)).collect();
            let y: ComplexVector = (0..4).map(|_| rng.complex_gaussian(1.0)).collect();
            let direct = residual_norm_sqr(&y, &h, &x);
            for s in &steps {
                let yt = s.factors.q.adjoint_mul_vec(&y);
                let xp = s.to_permuted(&x);
                let d = residual_norm_sqr(&yt, &s.factors.r, &xp);
                assert!((d - direct).abs() < 1e-9 * direct.max(1.0));
            }
        }
    }

    #[test]
    fn permutation_round_trip() {
        let step = CyclicStep { root: 1, permutation: cyclic_permutation(4, 1), factors: () };
        assert_eq!(step.permutation, vec![2, 3, 0, 1]);
        let orig = [10, 11, 12, 13];
        assert_eq!(step.to_original(&step.to_permuted(&orig)), orig.to_vec());
    }

    #[test]
    fn corr_sqrt_cases() {
        let i4 = ComplexMatrix::identity(4);
        assert!(corr_sqrt(&i4).unwrap().max_abs_diff(&i4) < 1e-15);
        let r = ComplexMatrix::from_real(2, 2, &[1.0, 0.9, 0.9, 1.0]).unwrap();
        let c = corr_sqrt(&r).unwrap();
        assert!(c.matmul(&c.adjoint()).max_abs_diff(&r) < 1e-10);
        let e = exponential_correlation(4, 0.9);
        let row0: Vec<f64> = e.row(0).iter().map(|z| z.re).collect();
        assert_eq!(row0, vec![1.0, 0.9, 0.9f64.powi(2), 0.9f64.powi(3)]);
        let c = corr_sqrt(&e).unwrap();
        assert!(c.matmul(&c.adjoint()).max_abs_diff(&e) < 1e-8);
        let bad = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(corr_sqrt(&bad).unwrap_err(), MimoError::NotPositiveDefinite(1));
    }

    #[test]
    fn cholesky_solve_inverts() {
        let h = random_matrix(5, 4, 4);
        let g = h.adjoint().matmul(&h);
        let c = corr_sqrt(&g).unwrap();
        let b: ComplexVector = (0..4).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let x = cholesky_solve(&c, &b);
        let back = g.mul_vec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).norm() < 1e-9);
        }
    }

    #[test]
    fn json_round_trip() {
        let h = random_matrix(9, 3, 2);
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.starts_with("{\"rows\":3,\"cols\":2,\"re\":["));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<ComplexMatrix>("{\"rows\":2,\"cols\":2,\"re\":[1],\"im\":[0]}").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn wrd_invariants(seed in any::<u64>(), n in 2usize..9) {
                let h = random_matrix(seed, n, n);
                let q = qrd(&h).unwrap();
                let f = wrd(&h, &PuncturePattern::full(n)).unwrap();
                prop_assert!(f.w.adjoint().matmul(&h).max_abs_diff(&f.r_punc) < 1e-8);
                let gram = f.w.adjoint().matmul(&f.w);
                for i in 0..n {
                    prop_assert!((gram[(i, i)].re - 1.0).abs() < 1e-9);
                    prop_assert!(f.r_punc[(i, i)].re > 0.0 && f.r_punc[(i, i)].im == 0.0);
                    if i + 1 < n {
                        prop_assert!(gram[(i, n - 1)].norm() < 1e-9);
                    }
                }
                for r in n.saturating_sub(2)..n {
                    for j in 0..n {
                        prop_assert!((f.r_punc[(r, j)] - q.r[(r, j)]).norm() < 1e-8);
                    }
                }
            }
        }
    }
}
