//! Square QAM constellations with per-axis Gray labels.
//!
//! A point's index in [`Constellation::points`] is its bit label. For square
//! QAM with `q` bits per symbol the upper `q/2` bits are the Gray code of the
//! real-axis level and the lower `q/2` bits that of the imaginary-axis level,
//! so label `0` is the corner `(-(m-1) - j(m-1))·scale` with `m = √L`.
//! Bit `k` of a symbol (`k = 0` first) is bit `q-1-k` of its label.

use std::fmt;

use num_complex::Complex64;

use crate::error::{MimoError, Result};

pub const SUPPORTED_ORDERS: [usize; 6] = [2, 4, 16, 64, 256, 1024];

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    order: usize,
    bits: usize,
    /// Amplitude levels per axis (1 for BPSK's imaginary axis).
    side: usize,
    scale: f64,
    points: Vec<Complex64>,
    /// `axis_label[level]`: Gray code of an axis level.
    axis_label: Vec<usize>,
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Bits per symbol.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    #[inline]
    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    pub fn is_bpsk(&self) -> bool {
        self.order == 2
    }

    /// Bit `k` of the label (`k = 0` is the most significant).
    #[inline]
    pub fn bit(&self, label: usize, k: usize) -> u8 {
        ((label >> (self.bits - 1 - k)) & 1) as u8
    }

    /// Nearest axis level for a coordinate already divided by `scale`.
    #[inline]
    fn level(&self, u: f64) -> usize {
        let top = (self.side - 1) as f64;
        let l = ((u + top) * 0.5).round();
        if l.is_nan() || l <= 0.0 {
            0
        } else if l >= top {
            self.side - 1
        } else {
            l as usize
        }
    }

    /// Nearest constellation point (index = label).
    #[inline]
    pub fn slice(&self, a: Complex64) -> usize {
        if self.is_bpsk() {
            return usize::from(a.re > 0.0);
        }
        let half = self.bits / 2;
        let inv = 1.0 / self.scale;
        let re = self.axis_label[self.level(a.re * inv)];
        let im = self.axis_label[self.level(a.im * inv)];
        (re << half) | im
    }

    /// CLI-facing name.
    pub fn name(&self) -> String {
        match self.order {
            2 => "bpsk".into(),
            4 => "qpsk".into(),
            l => format!("{l}qam"),
        }
    }

    /// Parses `bpsk`, `qpsk`, `4qam`, `16qam`, ... or a bare order.
    pub fn from_name(name: &str) -> Result<Self> {
        let s = name.trim().to_ascii_lowercase();
        let order = match s.as_str() {
            "bpsk" => 2,
            "qpsk" => 4,
            other => other
                .strip_suffix("qam")
                .unwrap_or(other)
                .trim_end_matches('-')
                .parse::<usize>()
                .map_err(|_| MimoError::Config(format!("unknown modulation '{name}'")))?,
        };
        build_qam(order)
    }

    /// Average energy over the alphabet.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order as f64
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Unit-energy BPSK (`L = 2`) or square L-QAM.
pub fn build_qam(order: usize) -> Result<Constellation> {
    if !SUPPORTED_ORDERS.contains(&order) {
        return Err(MimoError::UnsupportedOrder(order));
    }
    if order == 2 {
        return Ok(Constellation {
            order,
            bits: 1,
            side: 2,
            scale: 1.0,
            points: vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
            axis_label: vec![0, 1],
        });
    }
    let bits = order.trailing_zeros() as usize;
    let half = bits / 2;
    let side = 1usize << half;
    let scale = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
    let axis_label: Vec<usize> = (0..side).map(gray).collect();
    let amp = |lvl: usize| (2.0 * lvl as f64 - (side as f64 - 1.0)) * scale;
    let mut points = vec![Complex64::new(0.0, 0.0); order];
    for re in 0..side {
        for im in 0..side {
            points[(axis_label[re] << half) | axis_label[im]] = Complex64::new(amp(re), amp(im));
        }
    }
    Ok(Constellation { order, bits, side, scale, points, axis_label })
}

/// Componentwise `slice((v_n - offset_n) / diag_n)`.
pub fn slice_vector(v: &[Complex64], diag: &[f64], offset: &[Complex64], c: &Constellation) -> Result<Vec<usize>> {
    if v.len() != diag.len() || v.len() != offset.len() {
        return Err(MimoError::DimensionMismatch("slice_vector inputs differ in length".into()));
    }
    if let Some(i) = diag.iter().position(|&d| d == 0.0) {
        return Err(MimoError::DivideByZero(format!("diagonal entry {i} is zero")));
    }
    Ok(v.iter()
        .zip(diag)
        .zip(offset)
        .map(|((vi, di), oi)| c.slice((vi - oi) / *di))
        .collect())
}

/// Packs `q` bits per layer (MSB first) into point indices.
pub fn bits_to_vector(bits: &[u8], c: &Constellation) -> Result<Vec<usize>> {
    let q = c.bits_per_symbol();
    if !bits.len().is_multiple_of(q) {
        return Err(MimoError::DimensionMismatch(format!("{} bits is not a multiple of {q}", bits.len())));
    }
    Ok(bits
        .chunks(q)
        .map(|chunk| chunk.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1)))
        .collect())
}

/// Inverse of [`bits_to_vector`].
pub fn vector_to_bits(symbols: &[usize], c: &Constellation) -> Vec<u8> {
    let q = c.bits_per_symbol();
    symbols.iter().flat_map(|&s| (0..q).map(move |k| c.bit(s, k))).collect()
}

/// Number of differing label bits between two symbol vectors.
pub fn bit_errors(a: &[usize], b: &[usize]) -> u64 {
    a.iter().zip(b).map(|(x, y)| u64::from((x ^ y).count_ones())).sum()
}
