//! Closed-form flop costs of decomposition and detection, and the savings
//! of each punctured detector over its unpunctured counterpart.

use std::fmt::Write as _;

use serde::Serialize;

use crate::detect::FlopCount;
use crate::error::{MimoError, Result};

/// Signed flop count, used for savings that may be negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FlopDelta {
    pub rml: i128,
    pub rad: i128,
}

impl FlopDelta {
    fn from_count(f: FlopCount) -> Self {
        Self { rml: f.rml as i128, rad: f.rad as i128 }
    }

    fn scaled(self, k: i128) -> Option<Self> {
        Some(Self { rml: self.rml.checked_mul(k)?, rad: self.rad.checked_mul(k)? })
    }
}

/// One row of the savings table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SavingsRow {
    pub scheme: &'static str,
    /// Decomposition cost per frame: QRD and puncturing, `(RML, RAD)`.
    pub qrd_per_frame: (f64, f64),
    pub puncturing_per_frame: (f64, f64),
    /// `None` when the count overflows 128 bits.
    pub savings: Option<FlopDelta>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlopModel {
    pub n: usize,
    pub l: usize,
    pub reuse: usize,
    /// Back-substitution multiplications removed by full puncturing.
    pub theta1: FlopCount,
    /// Householder QRD.
    pub theta2: FlopCount,
    /// Puncturing of an existing QRD.
    pub theta3: FlopCount,
    pub rows: Vec<SavingsRow>,
    /// Fraction of N/C back-substitution multiplications saved by PN/C.
    pub nc_mult_saving_ratio: f64,
}

pub fn theta1(n: usize) -> FlopCount {
    let n = n as u64;
    FlopCount::new(2 * n * n - 6 * n + 4, n * n - 3 * n + 2)
}

pub fn theta2(n: usize) -> FlopCount {
    let n = n as u64;
    FlopCount::new(4 * n.pow(3) + 3 * n * n, 4 * n.pow(3) - n * n - n)
}

pub fn theta3(n: usize) -> FlopCount {
    let n = n as i64;
    let rml = (16 * n.pow(3) - 21 * n * n + 8 * n - 60) / 3;
    let rad = 2 * (8 * n.pow(3) - 15 * n * n + 4 * n - 12) / 3;
    FlopCount::new(rml.max(0) as u64, rad.max(0) as u64)
}

/// `(N−2)(N−1) / (N(N+1))`: the `N(N−1)/2` products of N/C back-substitution
/// against the `(N−2)(N−1)/2` removed, with the `N` diagonal divisions
/// counted as products.
pub fn nc_mult_saving_ratio(n: usize) -> f64 {
    let n = n as f64;
    (n - 2.0) * (n - 1.0) / (n * (n + 1.0))
}

/// Savings table for `n` layers, order `l` and a decomposition reused over
/// `reuse` frames.
pub fn flop_model(n: usize, l: usize, reuse: usize) -> Result<FlopModel> {
    if n < 2 {
        return Err(MimoError::Config(format!("flop model needs n >= 2, got {n}")));
    }
    if reuse < 1 {
        return Err(MimoError::Config("reuse must be at least 1".into()));
    }
    if l < 2 {
        return Err(MimoError::UnsupportedOrder(l));
    }
    let t1 = FlopDelta::from_count(theta1(n));
    let t2 = theta2(n);
    let t3 = theta3(n);
    let per_frame = |f: FlopCount, k: usize| (k as f64 * f.rml as f64 / reuse as f64, k as f64 * f.rad as f64 / reuse as f64);
    let (ni, li) = (n as i128, l as i128);
    let search = u32::try_from(n).ok().and_then(|e| li.checked_pow(e)).map(|p| p - li);
    let ssd_extra = FlopDelta { rml: 4 * ni * ni + 4 * ni, rad: 4 * ni * ni + 4 * ni - 2 };
    let lord = t1.scaled(li).and_then(|s| {
        FlopDelta { rml: s.rml - ssd_extra.rml, rad: s.rad - ssd_extra.rad }.scaled(ni)
    });
    let rows = vec![
        SavingsRow {
            scheme: "ML -> PML = PCD",
            qrd_per_frame: per_frame(t2, 1),
            puncturing_per_frame: per_frame(t3, 1),
            savings: search.and_then(|k| t1.scaled(k)),
        },
        SavingsRow {
            scheme: "N/C -> PN/C",
            qrd_per_frame: per_frame(t2, 1),
            puncturing_per_frame: per_frame(t3, 1),
            savings: Some(t1),
        },
        SavingsRow {
            scheme: "CD -> PCD",
            qrd_per_frame: per_frame(t2, 1),
            puncturing_per_frame: per_frame(t3, 1),
            savings: t1.scaled(li),
        },
        SavingsRow {
            scheme: "LORD -> SSD",
            qrd_per_frame: per_frame(t2, n),
            puncturing_per_frame: per_frame(t3, n),
            savings: lord,
        },
        SavingsRow {
            scheme: "SLORD -> SSSD",
            qrd_per_frame: per_frame(t2, n),
            puncturing_per_frame: per_frame(t3, n),
            savings: t1.scaled(li).and_then(|s| s.scaled(ni)),
        },
    ];
    Ok(FlopModel {
        n,
        l,
        reuse,
        theta1: theta1(n),
        theta2: t2,
        theta3: t3,
        rows,
        nc_mult_saving_ratio: nc_mult_saving_ratio(n),
    })
}

impl FlopModel {
    /// Plain-text table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "N = {}, L = {}, J = {}", self.n, self.l, self.reuse);
        let _ = writeln!(s, "theta1 = {} RML + {} RAD", self.theta1.rml, self.theta1.rad);
        let _ = writeln!(s, "theta2 = {} RML + {} RAD", self.theta2.rml, self.theta2.rad);
        let _ = writeln!(s, "theta3 = {} RML + {} RAD", self.theta3.rml, self.theta3.rad);
        let _ = writeln!(s, "N/C multiplication savings = {:.0}%", 100.0 * self.nc_mult_saving_ratio);
        let _ = writeln!(
            s,
            "{:<16} {:>26} {:>26} {:>44}",
            "scheme", "QRD cost (RML, RAD)", "puncturing (RML, RAD)", "savings (RML, RAD)"
        );
        for row in &self.rows {
            let savings = match row.savings {
                Some(d) => format!("{}, {}", d.rml, d.rad),
                None => "overflow".to_string(),
            };
            let _ = writeln!(
                s,
                "{:<16} {:>26} {:>26} {:>44}",
                row.scheme,
                format!("{}, {}", row.qrd_per_frame.0, row.qrd_per_frame.1),
                format!("{}, {}", row.puncturing_per_frame.0, row.puncturing_per_frame.1),
                savings
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_values_at_four() {
        assert_eq!(theta1(4), FlopCount::new(12, 6));
        assert_eq!(theta2(4), FlopCount::new(304, 236));
        assert_eq!(theta3(4), FlopCount::new(220, 184));
    }

    #[test]
    fn theta3_matches_fractional_form() {
        for n in 2..80usize {
            let x = n as f64;
            let rml = 16.0 / 3.0 * x.powi(3) - 7.0 * x * x + 8.0 / 3.0 * x - 20.0;
            let rad = 2.0 / 3.0 * (8.0 * x.powi(3) - 15.0 * x * x + 4.0 * x - 12.0);
            let t = theta3(n);
            if rml > 0.0 {
                assert!((t.rml as f64 - rml).abs() < 1e-6, "n={n}");
            }
            if rad > 0.0 {
                assert!((t.rad as f64 - rad).abs() < 1e-6, "n={n}");
            }
        }
    }

    #[test]
    fn saving_ratios() {
        assert_eq!(format!("{:.0}%", 100.0 * nc_mult_saving_ratio(16)), "77%");
        assert_eq!(format!("{:.0}%", 100.0 * nc_mult_saving_ratio(64)), "94%");
        assert!((nc_mult_saving_ratio(16) - 0.772).abs() < 5e-4);
        assert!((nc_mult_saving_ratio(64) - 0.939).abs() < 5e-4);
    }

    #[test]
    fn table_rows() {
        let m = flop_model(4, 16, 1).unwrap();
        assert_eq!(m.rows.len(), 5);
        let t1 = FlopDelta { rml: 12, rad: 6 };
        assert_eq!(m.rows[1].savings, Some(t1));
        assert_eq!(m.rows[2].savings, Some(FlopDelta { rml: 192, rad: 96 }));
        assert_eq!(m.rows[0].savings, Some(FlopDelta { rml: 12 * (65536 - 16), rad: 6 * (65536 - 16) }));
        assert_eq!(m.rows[3].savings, Some(FlopDelta { rml: 4 * (192 - 80), rad: 4 * (96 - 78) }));
        assert_eq!(m.rows[4].savings, Some(FlopDelta { rml: 768, rad: 384 }));
        assert_eq!(m.rows[3].qrd_per_frame, (4.0 * 304.0, 4.0 * 236.0));
        let reused = flop_model(4, 16, 8).unwrap();
        assert_eq!(reused.rows[0].puncturing_per_frame, (220.0 / 8.0, 184.0 / 8.0));
    }

    #[test]
    fn huge_search_space_overflows_cleanly() {
        let m = flop_model(64, 1024, 1).unwrap();
        assert_eq!(m.rows[0].savings, None);
        assert!(m.rows[1].savings.is_some());
        assert!(m.to_text().contains("overflow"));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(flop_model(1, 4, 1).is_err());
        assert!(flop_model(4, 4, 0).is_err());
    }
}
