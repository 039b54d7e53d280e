//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Every check runs to completion and is reported; the process exits
//! non-zero on a FAIL only when `ACCEPTANCE_STRICT=1` is set, so the
//! report can run as part of the ordinary test suite.

use std::time::Instant;

use num_complex::Complex64;
use wrd_mimo::channel::{draw_channel, draw_noise, draw_trial, sigma2_from_snr, ChannelConfig, ChannelModel, RngStream};
use wrd_mimo::detect::{chase, nc, pchase, pml_exhaustive, pnc, Detector, DetectorId};
use wrd_mimo::linalg::{cyclic_qr, cyclic_wr, qrd, wrd, ComplexMatrix, PuncturePattern};
use wrd_mimo::modem::{build_qam, Constellation};
use wrd_mimo::sim::{result_to_json, run_dist_study, run_ho, run_so, DistConfig, SimConfig, SimMode, SimResult};
use wrd_mimo::softout::{llr_slord, llr_sssd, soft_output, DEFAULT_CLIP};
use wrd_mimo::theory::{
    diversity_slope, empirical_probs, flop_model, theta1, CurveKind, EmpiricalConfig, TheoryCurve,
};

type Outcome = Result<(bool, String), String>;
type Check = (&'static str, fn() -> Outcome);

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// SNR at which a decreasing curve crosses `target`, by linear
/// interpolation of `log10(value)` between the bracketing grid points.
fn crossing(snr: &[f64], values: &[f64], target: f64) -> Option<f64> {
    snr.windows(2).zip(values.windows(2)).find_map(|(s, v)| {
        if v[0] >= target && v[1] <= target && v[1] > 0.0 && v[0] > v[1] {
            let (a, b) = (v[0].log10(), v[1].log10());
            Some(s[0] + (s[1] - s[0]) * (a - target.log10()) / (a - b))
        } else {
            None
        }
    })
}

fn campaign(det: DetectorId, grid: Vec<f64>, max_trials: u64, target: u64, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(det, grid);
    cfg.max_trials = max_trials;
    cfg.target_errors = target;
    cfg.seed = seed;
    cfg.workers = workers();
    cfg
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}

fn pcd_matches_pml() -> Outcome {
    let c = build_qam(4).map_err(err)?;
    let model = ChannelModel::new(&ChannelConfig::square(4)).map_err(err)?;
    let det = Detector::new(DetectorId::Pcd, c.clone());
    let full = PuncturePattern::full(4);
    let (mut instances, mut mismatches, mut max_gap) = (0, 0, 0f64);
    for (si, sigma2) in [0.1, 1.0].into_iter().enumerate() {
        for t in 0..500 {
            let trial = draw_trial(&model, &c, sigma2, &mut RngStream::new(11, si as u64, t));
            let a = det.detect(&trial.y, &trial.h, sigma2).map_err(err)?;
            let b = pml_exhaustive(&trial.y, &trial.h, &c, &full).map_err(err)?;
            instances += 1;
            max_gap = max_gap.max((a.distance - b.distance).abs());
            if a.symbols != b.symbols || a.distance != b.distance {
                mismatches += 1;
            }
        }
    }
    Ok((mismatches == 0, format!("{instances} instances, {mismatches} mismatches, max distance gap {max_gap:e}")))
}

fn flop_ledger() -> Outcome {
    let c = build_qam(4).map_err(err)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [4usize, 8, 16, 64] {
        let cfg = ChannelConfig::square(n);
        let mut rng = RngStream::new(2, 0, n as u64);
        let h = draw_channel(&cfg, &mut rng);
        let y = draw_noise(n, 0.1, &mut rng);
        let qr = qrd(&h).map_err(err)?;
        let wr = wrd(&h, &PuncturePattern::full(n)).map_err(err)?;
        let a = nc(&qr.q.adjoint_mul_vec(&y), &qr.r, &c).map_err(err)?;
        let b = pnc(&wr.w.adjoint_mul_vec(&y), &wr, &c).map_err(err)?;
        let t = theta1(n);
        let d = a.flops.delta(&b.flops);
        let exact = d == (t.rml as i64, t.rad as i64);
        ok &= exact;
        notes.push(format!("N={n} delta=({}, {}){}", d.0, d.1, if exact { "" } else { " != theta1" }));
    }
    for (n, want) in [(16usize, "77%"), (64, "94%")] {
        let text = flop_model(n, 16, 1).map_err(err)?.to_text();
        let shown = text.contains(&format!("N/C multiplication savings = {want}"));
        ok &= shown;
        notes.push(format!("N={n} prints {}{want}", if shown { "" } else { "not " }));
    }
    Ok((ok, notes.join("; ")))
}

fn distribution_study() -> Outcome {
    let mut cfg = DistConfig::new(4, 10_000);
    cfg.workers = workers();
    let rep = run_dist_study(&cfg).map_err(err)?;
    let qr: Vec<usize> = rep.layers.iter().map(|l| l.qr.dof).collect();
    let wr: Vec<usize> = rep.layers.iter().map(|l| l.wr.dof).collect();
    let min_p = rep.layers.iter().flat_map(|l| [l.qr.p_value, l.wr.p_value]).fold(1.0, f64::min);
    let ok = rep.passed() && qr == [8, 6, 4, 2] && wr == [4, 4, 4, 2];
    Ok((ok, format!("QR dof {qr:?}, WR dof {wr:?}, smallest KS p-value {min_p:.4}")))
}

fn noise_coloring() -> Outcome {
    let n = 4;
    let sigma2 = 0.5;
    let draws = 100_000u64;
    let h = draw_channel(&ChannelConfig::square(n), &mut RngStream::new(4, 0, 0));
    let wr = wrd(&h, &PuncturePattern::full(n)).map_err(err)?;
    let expected = wr.w.adjoint().matmul(&wr.w);
    let mut sum = vec![Complex64::new(0.0, 0.0); n * n];
    let mut sum_sq = vec![0f64; n * n];
    for t in 0..draws {
        let noise = draw_noise(n, sigma2, &mut RngStream::new(4, 1, t));
        let v = wr.w.adjoint_mul_vec(&noise);
        for i in 0..n {
            for j in 0..n {
                let p = v[i] * v[j].conj();
                sum[i * n + j] += p;
                sum_sq[i * n + j] += p.norm_sqr();
            }
        }
    }
    let m = draws as f64;
    let (mut worst_z, mut worst_last) = (0f64, 0f64);
    for i in 0..n {
        for j in 0..n {
            let mean = sum[i * n + j] / m;
            let se = ((sum_sq[i * n + j] / m - mean.norm_sqr()) / m).sqrt();
            let z = (mean - expected[(i, j)] * sigma2).norm() / se;
            worst_z = worst_z.max(z);
            if i != j && (i == n - 1 || j == n - 1) {
                worst_last = worst_last.max(mean.norm() / se);
            }
        }
    }
    let ok = worst_z < 4.0 && worst_last < 3.0;
    Ok((
        ok,
        format!("largest deviation from sigma2 W*W {worst_z:.2} SE; last row/column off-diagonals at most {worst_last:.2} SE"),
    ))
}

fn slopes() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let cases = [
        (DetectorId::Nc, grid(30.0, 40.0, 2.5), -1.0),
        (DetectorId::Pnc, grid(30.0, 40.0, 2.5), -1.0),
        (DetectorId::Cd, grid(20.0, 30.0, 2.5), -2.0),
        (DetectorId::Pcd, grid(20.0, 30.0, 2.5), -2.0),
    ];
    for (det, g, want) in cases {
        let r = run_ho(&campaign(det, g, 2_000_000, 200, 21)).map_err(err)?;
        let fewest = r.points.iter().map(|p| p.bit_errors).min().unwrap_or(0);
        let slope = diversity_slope(&r.slope_points()).map_err(err)?;
        let pass = (slope - want).abs() <= 0.5 && fewest >= 200;
        ok &= pass;
        notes.push(format!("{det} {slope:.2} (min {fewest} events)"));
    }
    Ok((ok, notes.join("; ")))
}

fn theory_vs_simulation() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (det, kind, g) in [
        (DetectorId::Pnc, CurveKind::Pnc, grid(25.0, 45.0, 5.0)),
        (DetectorId::Pcd, CurveKind::Pcd, grid(15.0, 35.0, 5.0)),
    ] {
        let r = run_ho(&campaign(det, g.clone(), 1_000_000, 400, 31)).map_err(err)?;
        let th = TheoryCurve::evaluate(kind, 4, 16, &g).map_err(err)?;
        let mut compared = 0;
        for (p, &t) in r.points.iter().zip(&th.values) {
            let ber = p.ber();
            if !(1e-4..=1e-2).contains(&ber) {
                continue;
            }
            compared += 1;
            let rel = (ber - t) / t;
            ok &= rel.abs() <= 0.25;
            notes.push(format!("{det}@{} sim {ber:.3e} theory {t:.3e} ({:+.0}%)", p.snr_db, 100.0 * rel));
        }
        if compared == 0 {
            ok = false;
            notes.push(format!("{det}: no point in range"));
        }
    }
    Ok((ok, notes.join("; ")))
}

fn fers(r: &SimResult) -> (Vec<f64>, Vec<f64>) {
    (r.points.iter().map(|p| p.snr_db).collect(), r.points.iter().map(|p| p.fer()).collect())
}

fn lord_vs_ml_and_pcd_loss() -> Outcome {
    let pilot = run_ho(&campaign(DetectorId::Ml, grid(16.0, 26.0, 1.0), 20_000, 0, 41)).map_err(err)?;
    let (s, f) = fers(&pilot);
    let snr = crossing(&s, &f, 1e-2).ok_or("ML pilot never crosses FER 1e-2")?;
    let trials = 100_000;
    let ml = run_ho(&campaign(DetectorId::Ml, vec![snr], trials, 0, 42)).map_err(err)?.points[0].fer();
    let lord = run_ho(&campaign(DetectorId::Lord, vec![snr], trials, 0, 43)).map_err(err)?.points[0].fer();
    let sd = (ml * (1.0 - ml) / trials as f64 + lord * (1.0 - lord) / trials as f64).sqrt();
    let z = (lord - ml) / sd;
    let lord_ok = z.abs() <= 3.0;

    let fine = grid(16.0, 32.0, 1.0);
    let cd = run_ho(&campaign(DetectorId::Cd, fine.clone(), 100_000, 400, 44)).map_err(err)?;
    let pcd = run_ho(&campaign(DetectorId::Pcd, fine, 100_000, 400, 45)).map_err(err)?;
    let (s_cd, f_cd) = fers(&cd);
    let (s_pcd, f_pcd) = fers(&pcd);
    let shift = match (crossing(&s_cd, &f_cd, 1e-2), crossing(&s_pcd, &f_pcd, 1e-2)) {
        (Some(a), Some(b)) => b - a,
        _ => return Ok((false, "CD or PCD never crosses FER 1e-2".into())),
    };
    let shift_ok = (shift - 2.0).abs() <= 1.0;
    Ok((
        lord_ok && shift_ok,
        format!(
            "at {snr:.2} dB ML FER {ml:.3e}, LORD FER {lord:.3e} ({z:+.2} sigma); PCD-CD shift at FER 1e-2 {shift:.2} dB"
        ),
    ))
}

/// Root-layer max-log LLRs of one ordering's candidate list, computed here
/// from the per-candidate distances.
fn root_llrs(list: &[(usize, f64)], c: &Constellation, sigma2: f64) -> Vec<f64> {
    (0..c.bits_per_symbol())
        .map(|k| {
            let mut mins = [f64::INFINITY; 2];
            for &(s, d) in list {
                let b = c.bit(s, k) as usize;
                mins[b] = mins[b].min(d);
            }
            ((mins[0] - mins[1]) / sigma2).clamp(-DEFAULT_CLIP, DEFAULT_CLIP)
        })
        .collect()
}

/// LLRs assembled from the `N` cyclic punctured (or plain) chase detectors,
/// layer `t` taken from the ordering with `t` at the root.
fn list_detector_llrs(y: &[Complex64], h: &ComplexMatrix, c: &Constellation, sigma2: f64, punctured: bool) -> Result<Vec<f64>, String> {
    let n = h.cols();
    let q = c.bits_per_symbol();
    let mut out = vec![0.0; n * q];
    let lists: Vec<(usize, Vec<(usize, f64)>)> = if punctured {
        cyclic_wr(h, &PuncturePattern::full(n))
            .map_err(err)?
            .into_iter()
            .map(|step| {
                let r = pchase(&step.factors.w.adjoint_mul_vec(y), &step.factors, c).map_err(err)?;
                let cands = r.per_candidate.unwrap_or_default();
                Ok((step.root, cands.iter().map(|k| (k.symbols[n - 1], k.distance)).collect()))
            })
            .collect::<Result<_, String>>()?
    } else {
        cyclic_qr(h)
            .map_err(err)?
            .into_iter()
            .map(|step| {
                let r = chase(&step.factors.q.adjoint_mul_vec(y), &step.factors.r, c).map_err(err)?;
                let cands = r.per_candidate.unwrap_or_default();
                Ok((step.root, cands.iter().map(|k| (k.symbols[n - 1], k.distance)).collect()))
            })
            .collect::<Result<_, String>>()?
    };
    for (root, list) in lists {
        out[root * q..(root + 1) * q].copy_from_slice(&root_llrs(&list, c, sigma2));
    }
    Ok(out)
}

fn llr_identities() -> Outcome {
    let c = build_qam(16).map_err(err)?;
    let model = ChannelModel::new(&ChannelConfig::square(4)).map_err(err)?;
    let mut differing = 0;
    let instances = 1000;
    for t in 0..instances {
        let sigma2 = sigma2_from_snr(10.0 + (t % 4) as f64 * 5.0, 4);
        let trial = draw_trial(&model, &c, sigma2, &mut RngStream::new(8, 0, t));
        let pcd = list_detector_llrs(&trial.y, &trial.h, &c, sigma2, true)?;
        let cd = list_detector_llrs(&trial.y, &trial.h, &c, sigma2, false)?;
        let sssd = llr_sssd(&trial.y, &trial.h, &c, sigma2).map_err(err)?;
        let slord = llr_slord(&trial.y, &trial.h, &c, sigma2).map_err(err)?;
        let via_pcd = soft_output(DetectorId::Pcd, &trial.y, &trial.h, &c, sigma2).map_err(err)?;
        let via_cd = soft_output(DetectorId::Cd, &trial.y, &trial.h, &c, sigma2).map_err(err)?;
        let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        if !(same(&pcd, sssd.values()) && same(&cd, slord.values()) && same(via_pcd.values(), sssd.values())
            && same(via_cd.values(), slord.values()))
        {
            differing += 1;
        }
    }
    Ok((differing == 0, format!("{instances} instances, {differing} with any differing bit")))
}

fn correlated(det: DetectorId, g: Vec<f64>, trials: u64, seed: u64) -> SimConfig {
    let mut cfg = campaign(det, g, trials, 0, seed);
    cfg.channel = ChannelConfig::correlated(4, 0.9, 0.9);
    cfg.mode = SimMode::So;
    cfg
}

fn correlated_ordering() -> Outcome {
    let pilot = run_so(&correlated(DetectorId::Slord, grid(30.0, 40.0, 1.0), 20_000, 51), None).map_err(err)?;
    let s: Vec<f64> = pilot.points.iter().map(|p| p.snr_db).collect();
    let b: Vec<f64> = pilot.points.iter().map(|p| p.ber()).collect();
    let snr = crossing(&s, &b, 1e-2).ok_or("SLORD pilot never crosses BER 1e-2")?;
    let slord = run_so(&correlated(DetectorId::Slord, vec![snr], 100_000, 52), None).map_err(err)?.points[0].clone();
    let sssd = run_so(&correlated(DetectorId::Sssd, vec![snr], 100_000, 53), None).map_err(err)?.points[0].clone();
    let (p1, p2) = (sssd.ber(), slord.ber());
    let pooled = (sssd.bit_errors + slord.bit_errors) as f64 / (sssd.bits + slord.bits) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / sssd.bits as f64 + 1.0 / slord.bits as f64)).sqrt();
    let z = (p1 - p2) / se;
    Ok((z <= 1.645, format!("at {snr:.2} dB SSSD BER {p1:.3e}, SLORD BER {p2:.3e}, z = {z:+.2} (reject above 1.645)")))
}

fn substitute_study() -> Outcome {
    let cfg = EmpiricalConfig {
        channel: ChannelConfig::square(4),
        snr_db: vec![25.0, 30.0],
        trials: 100_000,
        seed: 61,
        workers: workers(),
    };
    let points = empirical_probs(&cfg, &build_qam(16).map_err(err)?).map_err(err)?;
    let mut ok = true;
    let mut notes = vec!["coded turbo curves not reproducible, substituted by checks 8, 9 and the empirical study:".to_string()];
    for p in &points {
        let dominant = p.p_d_punctured > p.p_c_times_b_punctured;
        ok &= dominant;
        notes.push(format!(
            "@{} dB punctured D {:.3e} vs C*B {:.3e}",
            p.snr_db, p.p_d_punctured, p.p_c_times_b_punctured
        ));
    }
    Ok((ok, notes.join(" ")))
}

fn reproducibility() -> Outcome {
    let mut ho = campaign(DetectorId::Pcd, grid(14.0, 22.0, 4.0), 6_000, 150, 71);
    ho.instrument = true;
    let so = correlated(DetectorId::Sssd, vec![30.0, 34.0], 3_000, 72);
    let mut identical = true;
    for cfg in [ho, so] {
        let mut a = cfg.clone();
        a.workers = 1;
        let mut b = cfg;
        b.workers = 3;
        let run = |c: &SimConfig| match c.mode {
            SimMode::Ho => run_ho(c),
            SimMode::So => run_so(c, None),
        };
        let ja = result_to_json(&run(&a).map_err(err)?).map_err(err)?;
        let jb = result_to_json(&run(&b).map_err(err)?).map_err(err)?;
        identical &= ja == jb;
    }
    Ok((identical, "hard and soft result files with 1 and 3 workers".into()))
}

fn main() {
    let checks: [Check; 11] = [
        ("PCD equals punctured ML", pcd_matches_pml),
        ("flop ledger", flop_ledger),
        ("diagonal distributions", distribution_study),
        ("punctured noise covariance", noise_coloring),
        ("diversity slopes", slopes),
        ("theory vs simulation", theory_vs_simulation),
        ("LORD vs ML, PCD loss", lord_vs_ml_and_pcd_loss),
        ("LLR identities", llr_identities),
        ("correlated SSSD vs SLORD", correlated_ordering),
        ("substituted study", substitute_study),
        ("worker-count reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let clock = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            clock.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
