//! Detection in a triangular frame `ȳ = R x + noise`.
//!
//! The same frame serves QR (`R` dense upper) and WR (`R̊` with punctured
//! entries dropped). All distances are accumulated in one fixed order, root
//! layer first, so SIC candidates and the exact tree search produce
//! bit-identical metrics for the same vector.

use num_complex::Complex64;

use super::flops::FlopCount;
use crate::error::{MimoError, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, QrFactors, WrFactors};
use crate::modem::Constellation;

#[derive(Clone, Debug)]
pub(crate) struct Frame {
    ybar: ComplexVector,
    diag: Vec<f64>,
    /// Kept off-diagonal entries of each row, highest column first.
    upper: Vec<Vec<(usize, Complex64)>>,
}

/// A candidate vector with its metric, symbols in the caller's layer order.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub symbols: Vec<usize>,
    pub distance: f64,
}

impl Frame {
    pub fn new(ybar: ComplexVector, r: &ComplexMatrix, keeps: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let n = r.rows();
        if r.cols() != n || ybar.len() != n {
            return Err(MimoError::DimensionMismatch(format!(
                "frame needs square R and matching observation, got {}x{} and {}",
                r.rows(),
                r.cols(),
                ybar.len()
            )));
        }
        let mut diag = Vec::with_capacity(n);
        for k in 0..n {
            let d = r[(k, k)].re;
            if !(d > 0.0) {
                return Err(MimoError::DivideByZero(format!("diagonal entry {k} = {d:e}")));
            }
            diag.push(d);
        }
        let upper = (0..n)
            .map(|row| ((row + 1)..n).rev().filter(|&j| keeps(row, j)).map(|j| (j, r[(row, j)])).collect())
            .collect();
        Ok(Self { ybar, diag, upper })
    }

    /// Dense upper-triangular `R`.
    pub fn triangular(ybar: ComplexVector, r: &ComplexMatrix) -> Result<Self> {
        Self::new(ybar, r, |_, _| true)
    }

    pub fn punctured(ybar: ComplexVector, wr: &WrFactors) -> Result<Self> {
        Self::new(ybar, &wr.r_punc, |i, j| wr.pattern.keeps(i, j))
    }

    pub fn from_qr(y: &[Complex64], qr: &QrFactors) -> Result<Self> {
        Self::triangular(rotate(&qr.q, y)?, &qr.r)
    }

    pub fn from_wr(y: &[Complex64], wr: &WrFactors) -> Result<Self> {
        Self::punctured(rotate(&wr.w, y)?, wr)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `ȳ_n − Σ_j r_nj x_j` over the kept entries of row `n`.
    #[inline]
    fn offset(&self, n: usize, x: &[usize], c: &Constellation, flops: &mut FlopCount) -> Complex64 {
        let mut o = self.ybar[n];
        for &(j, r) in &self.upper[n] {
            o -= r * c.point(x[j]);
        }
        flops.complex_mul(self.upper[n].len() as u64);
        o
    }

    #[inline]
    fn term(offset: Complex64, d: f64, p: Complex64) -> f64 {
        (offset - p * d).norm_sqr()
    }

    /// Back-substitution with slicing from the root layer upwards. A fixed
    /// `root` symbol replaces the root decision. When `charge_distance` is
    /// false the returned metric is computed but not counted.
    pub fn sic(
        &self,
        root: Option<usize>,
        c: &Constellation,
        flops: &mut FlopCount,
        charge_distance: bool,
    ) -> (Vec<usize>, f64) {
        let n = self.dim();
        let mut x = vec![0usize; n];
        let mut dist = 0.0;
        for k in (0..n).rev() {
            let off = self.offset(k, &x, c, flops);
            x[k] = match root {
                Some(s) if k == n - 1 => s,
                _ => c.slice(off / self.diag[k]),
            };
            dist += Self::term(off, self.diag[k], c.point(x[k]));
        }
        if charge_distance {
            let n = n as u64;
            flops.complex_mul(n);
            flops.complex_add(n);
            flops.norm_sqr(n);
            flops.real_add(n - 1);
        }
        (x, dist)
    }

    /// One SIC continuation per root symbol, in root-symbol order.
    pub fn chase_list(&self, c: &Constellation, flops: &mut FlopCount) -> Vec<Candidate> {
        (0..c.order())
            .map(|s| {
                let (symbols, distance) = self.sic(Some(s), c, flops, true);
                Candidate { symbols, distance }
            })
            .collect()
    }

    /// Exact minimiser of the frame metric by depth-first search with
    /// children visited in increasing metric order and pruning against the
    /// best leaf so far.
    pub fn search(&self, c: &Constellation, flops: &mut FlopCount) -> (Vec<usize>, f64) {
        let n = self.dim();
        let mut x = vec![0usize; n];
        let mut best = (vec![0usize; n], f64::INFINITY);
        self.descend(n - 1, 0.0, &mut x, &mut best, c, flops);
        best
    }

    fn descend(
        &self,
        level: usize,
        partial: f64,
        x: &mut [usize],
        best: &mut (Vec<usize>, f64),
        c: &Constellation,
        flops: &mut FlopCount,
    ) {
        let off = self.offset(level, x, c, flops);
        let d = self.diag[level];
        let l = c.order() as u64;
        flops.complex_mul(l);
        flops.complex_add(l);
        flops.norm_sqr(l);
        let mut kids: Vec<(f64, usize)> = (0..c.order()).map(|s| (Self::term(off, d, c.point(s)), s)).collect();
        kids.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (t, s) in kids {
            let p = partial + t;
            if p >= best.1 {
                break;
            }
            x[level] = s;
            if level == 0 {
                best.0.copy_from_slice(x);
                best.1 = p;
            } else {
                self.descend(level - 1, p, x, best, c, flops);
            }
        }
    }
}

/// `A* y` with a length check.
pub(crate) fn rotate(a: &ComplexMatrix, y: &[Complex64]) -> Result<ComplexVector> {
    if a.rows() != y.len() {
        return Err(MimoError::DimensionMismatch(format!(
            "observation of length {} for {} receive antennas",
            y.len(),
            a.rows()
        )));
    }
    Ok(a.adjoint_mul_vec(y))
}

/// Index of the smallest distance; the first one wins ties.
pub(crate) fn argmin(distances: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, d) in distances.into_iter().enumerate() {
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}
