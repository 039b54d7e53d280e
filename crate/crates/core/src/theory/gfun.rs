//! Average error probabilities over `d`-branch Rayleigh fading.

use std::f64::consts::PI;

use crate::error::{MimoError, Result};

/// `[(1−μ)/2]^d Σ_k C(d−1+k, k) [(1+μ)/2]^k`.
fn mrc_sum(d: usize, mu: f64) -> f64 {
    let lo = 0.5 * (1.0 - mu);
    let hi = 0.5 * (1.0 + mu);
    let mut binom = 1.0;
    let mut pow = 1.0;
    let mut sum = 0.0;
    for k in 0..d {
        if k > 0 {
            binom *= (d - 1 + k) as f64 / k as f64;
            pow *= hi;
        }
        sum += binom * pow;
    }
    lo.powi(d as i32) * sum
}

/// BPSK bit error rate with `d`-fold maximal-ratio diversity at mean branch
/// SNR `gamma`, with `μ = √(γ/(1+γ))`.
pub fn g_rayleigh(d: usize, gamma: f64) -> f64 {
    assert!(d >= 1, "diversity order must be at least 1");
    if gamma <= 0.0 {
        return 0.5;
    }
    if gamma.is_infinite() {
        return 0.0;
    }
    mrc_sum(d, (gamma / (1.0 + gamma)).sqrt())
}

/// Square L-QAM counterpart of [`g_rayleigh`].
///
/// The closed form evaluates to the average symbol error probability of
/// L-QAM over `d`-branch fading at per-bit SNR `gamma`, i.e. the average of
/// `4(1−1/√L) Q(√(2βγg)) − 4(1−1/√L)² Q²(√(2βγg))` over the Gamma(d, 1)
/// fade `g`, with `β = 3 log₂L / (2(L−1))`.
pub fn g_qam(d: usize, gamma: f64, l: usize) -> Result<f64> {
    let side = (l as f64).sqrt().round() as usize;
    if l < 4 || side * side != l || !l.is_power_of_two() {
        return Err(MimoError::UnsupportedOrder(l));
    }
    if d == 0 {
        return Err(MimoError::Config("diversity order must be at least 1".into()));
    }
    let s = side as f64 - 1.0;
    if gamma.is_infinite() {
        return Ok(0.0);
    }
    let beta = 3.0 * (l as f64).log2() / (2.0 * (l as f64 - 1.0));
    let bg = beta * gamma.max(0.0);
    let mu = (bg / (1.0 + bg)).sqrt();
    let i1 = mrc_sum(d, mu);
    let mu_atan = mu * mu.atan();
    let a = 1.0 / (1.0 + bg);
    let b = 1.0 / (1.0 + 2.0 * bg);
    let i2 = if d == 1 {
        4.0 / PI * mu_atan
    } else {
        // central[k] = (2k)! / (2^{2k} (k!)²)
        let mut central = vec![1.0f64; d];
        for k in 1..d {
            central[k] = central[k - 1] * (2 * k - 1) as f64 / (2 * k) as f64;
        }
        let first: f64 = (0..d).map(|k| central[k] * a.powi(k as i32) * mu_atan).sum();
        let second: f64 = (1..d)
            .map(|k| {
                let inner: f64 = (1..=k)
                    .map(|v| {
                        // 2^{2v} v! (v−1)! / (2v)! = 1 / (central[v] · v)
                        a.powi((k - v + 1) as i32) * (bg * b) * b.powi(v as i32 - 1) / (central[v] * v as f64)
                    })
                    .sum();
                central[k] * inner
            })
            .sum();
        4.0 / PI * first + 2.0 / PI * second
    };
    Ok(s / l as f64 * (s + 4.0 * i1 - s * i2))
}

/// [`g_rayleigh`] for BPSK, [`g_qam`] otherwise.
pub fn g_any(d: usize, gamma: f64, l: usize) -> Result<f64> {
    if l == 2 {
        Ok(g_rayleigh(d, gamma))
    } else {
        g_qam(d, gamma, l)
    }
}
