//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::f64::consts::{LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use arfault::classify::{wald_interval, Z_95};
use arfault::detector::{dd_series, gwo_minimize, DetectorConfig, GwoConfig};
use arfault::features::{ar_fit, extract, FeatureId, FeatureKind, FftPart, QUANTILES, WAVELET_WIDTHS};
use arfault::fuzzy::{ga_tune, FuzzySystem, FuzzyTemplate, GaConfig, LabeledInputs, Rule, Term, Trapezoid, Variable};
use arfault::mrmr::{rank, ColumnId, FeatureMatrix};
use arfault::relay::{
    impedance_trajectory, loop_impedances, max_relative_deviation, track_frequency, FaultScenario, FrequencyMode,
    LineParams, LoopId, ZoneQuad,
};
use arfault::waveform::{window_at_index, Phase, Record3Ph};
use arfault_cli::corpus::{self, process_manifest, Source};
use arfault_cli::experiment::{run_experiment, split_cases, PipelineReport};
use arfault_cli::grid::GridSpec;
use arfault_cli::manifest::{Manifest, ManifestRow};
use arfault_cli::{EndMode, PipelineConfig};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("AR recovery", ar_recovery),
        ("detector closed form", detector_closed_form),
        ("GWO benchmarks", gwo_benchmarks),
        ("mRMR redundancy penalty", mrmr_redundancy),
        ("confidence interval", confidence_interval),
        ("feature oracle equivalence", feature_oracles),
        ("fuzzy engine", fuzzy_engine),
        ("end-to-end desk scale", desk_scale),
        ("noise robustness trend", noise_trend),
        ("relay baseline", relay_baseline),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS  {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// 1 ------------------------------------------------------------------------

/// Coefficients `A_k` of the AR recurrence whose poles are the given
/// conjugate pairs `(radius, angle)`.
fn ar_from_poles(pairs: &[(f64, f64)]) -> Vec<f64> {
    let mut poly = vec![1.0];
    for &(r, th) in pairs {
        let f = [1.0, -2.0 * r * th.cos(), r * r];
        let mut next = vec![0.0; poly.len() + 2];
        for (i, a) in poly.iter().enumerate() {
            for (j, b) in f.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        poly = next;
    }
    poly[1..].iter().map(|c| -c).collect()
}

fn simulate_ar(a: &[f64], n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut x: Vec<f64> = (0..a.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    while x.len() < n {
        let t = x.len();
        let v: f64 = a.iter().enumerate().map(|(k, c)| c * x[t - 1 - k]).sum();
        x.push(v + noise.sample(&mut rng));
    }
    x
}

fn ar_recovery() -> Outcome {
    let t = Instant::now();
    let cases = [
        vec![0.9],
        ar_from_poles(&[(0.97, 0.4)]),
        ar_from_poles(&[(0.99, 0.3), (0.985, 0.8), (0.98, 1.3), (0.99, 1.9), (0.985, 2.6)]),
    ];
    let mut worst: f64 = 0.0;
    for (seed, a) in cases.iter().enumerate() {
        let x = simulate_ar(a, 300, 1e-6, seed as u64 + 1);
        let m = ar_fit(&x, a.len()).map_err(|e| e.to_string())?;
        let err = a.iter().zip(&m.coeffs).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        ensure(err < 1e-3, format!("AR({}) max coefficient error {err:.2e}", a.len()))?;
        worst = worst.max(err);
    }
    let w = 2.0 * PI * 60.0 / 7680.0;
    let x: Vec<f64> = (0..128).map(|i| (w * i as f64 + 0.4).cos()).collect();
    let m = ar_fit(&x, 2).map_err(|e| e.to_string())?;
    let (e1, e2) = ((m.coeff(1) - 2.0 * w.cos()).abs(), (m.coeff(2) + 1.0).abs());
    ensure(e1 < 1e-6 && e2 < 1e-6, format!("sinusoid errors {e1:.2e}, {e2:.2e}"))?;
    let el = t.elapsed();
    ensure(el < Duration::from_secs(1), format!("runtime {el:?}"))?;
    Ok(format!("max AR error {worst:.2e}, sinusoid errors {e1:.1e}/{e2:.1e}, {el:?}"))
}

// 2 ------------------------------------------------------------------------

fn detector_closed_form() -> Outcome {
    let fs = 7680.0;
    let sine = |k: usize, i: usize| (2.0 * PI * 60.0 * i as f64 / fs - k as f64 * 2.0 * PI / 3.0 + 0.3).sin();
    let rec = |f: &dyn Fn(usize, usize) -> f64| {
        let p = |k| (0..2000).map(|i| f(k, i)).collect::<Vec<_>>();
        Record3Ph::new(p(0), p(1), p(2), fs, 60.0, 0.0).unwrap()
    };
    let step = 640;
    let stepped = rec(&|k, i| if i >= step { 2.0 } else { 1.0 } * sine(k, i));
    let cfg = DetectorConfig::for_record(&stepped, 0.05).map_err(|e| e.to_string())?;
    let h = cfg.half_cycle_samples;
    let dd = dd_series(&stepped, &cfg).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for p in Phase::ALL {
        worst = worst.max((dd.phase(p)[step + h - 1] - 0.5).abs());
    }
    ensure(worst < 1e-6, format!("DD after doubling deviates from 0.5 by {worst:.2e}"))?;
    let steady = dd_series(&rec(&sine), &cfg).map_err(|e| e.to_string())?.max_abs();
    ensure(steady < 1e-6, format!("steady max |DD| {steady:.2e}"))?;
    Ok(format!("|DD - 0.5| = {worst:.1e} at half-cycle {h}, steady max |DD| = {steady:.1e}"))
}

// 3 ------------------------------------------------------------------------

fn gwo_benchmarks() -> Outcome {
    // Budget and search box of the threshold tuner: 30 wolves, 100 iterations.
    let base = GwoConfig { population: 30, max_iter: 100, dim: 1, lower: 0.0, upper: 1.0, seed: 1 };
    let sphere = GwoConfig { dim: 2, lower: -1.0, upper: 1.0, ..base.clone() };
    let mut out = Vec::new();
    for (name, res) in [
        ("sphere 2-d", gwo_minimize(|x: &[f64]| x[0] * x[0] + x[1] * x[1], &sphere)),
        ("shifted quadratic", gwo_minimize(|x: &[f64]| (x[0] - 0.3).powi(2), &base)),
    ] {
        let res = res.map_err(|e| e.to_string())?;
        ensure(res.best_f < 1e-4, format!("{name}: best_f {:.2e}", res.best_f))?;
        ensure(res.trace.windows(2).all(|w| w[1] <= w[0]), format!("{name}: best-so-far trace not monotone"))?;
        ensure(res.trace.len() == base.max_iter + 1, format!("{name}: trace length {}", res.trace.len()))?;
        out.push(format!("{name} {:.1e}", res.best_f));
    }
    // Reported only: GWO drifts toward the origin, so an off-centre optimum
    // in more dimensions converges more slowly.
    let shift = [0.3, -0.6, 1.2, -2.0, 0.05];
    let wide = GwoConfig { dim: 5, lower: -5.0, upper: 5.0, ..base };
    let f5 = gwo_minimize(|x: &[f64]| x.iter().zip(shift).map(|(v, s)| (v - s).powi(2)).sum::<f64>(), &wide)
        .map_err(|e| e.to_string())?
        .best_f;
    Ok(format!("{}; 5-d shifted (informational) {f5:.1e}", out.join(", ")))
}

// 4 ------------------------------------------------------------------------

fn mrmr_redundancy() -> Outcome {
    // 16 rows, 4 equal-frequency bins. f1 copies the target at finer
    // resolution, f2 duplicates f1, f3 cycles through its bins independently
    // of both. By hand:
    //   I(f1;y) = I(f2;y) = ln 2, I(f3;y) = 0, I(f1;f2) = ln 4, I(f3;f1) = 0.
    //   step 1: f1 (ties f2 on ln 2, lower id wins)
    //   step 2: f3 scores 0 - 0 = 0, f2 scores ln 2 - ln 4 = -ln 2
    //   step 3: f2 scores ln 2 - (ln 4 + 0) / 2 = 0
    let y: Vec<usize> = (0..16).map(|i| i / 8).collect();
    let f1: Vec<f64> = (0..16).map(|i| i as f64).collect();
    let f2 = f1.clone();
    let f3: Vec<f64> = (0..16).map(|i| ((i % 4) * 4 + i / 4) as f64).collect();
    let col = |i| ColumnId::new(FeatureId::new(i).unwrap(), None);
    let m = FeatureMatrix::new(vec![col(1), col(2), col(3)], vec![f1, f2, f3], y).map_err(|e| e.to_string())?;
    let r = rank(&m, 3, 4).map_err(|e| e.to_string())?;
    ensure(r.order() == vec![col(1), col(3), col(2)], format!("order {:?}", r.order()))?;
    let want = [(LN_2, 0.0, LN_2), (0.0, 0.0, 0.0), (LN_2, LN_2, 0.0)];
    for (s, (rel, red, score)) in r.steps.iter().zip(want) {
        let err = (s.relevance - rel).abs().max((s.redundancy - red).abs()).max((s.score - score).abs());
        ensure(err < 1e-12, format!("{}: got ({}, {}, {})", s.column, s.relevance, s.redundancy, s.score))?;
    }
    Ok("order (f1, f3, f2); scores ln2, 0, 0 as computed by hand".into())
}

// 5 ------------------------------------------------------------------------

fn confidence_interval() -> Outcome {
    let (lo, hi) = wald_interval(0.9, 100, Z_95);
    ensure((hi - 0.9 - 0.0588).abs() < 1e-12 && (0.9 - lo - 0.0588).abs() < 1e-12, format!("got ({lo}, {hi})"))?;
    // Back-solve the test-set size from the printed half-width of 0.3 points.
    let eta = 0.996;
    let nt = (Z_95 / 0.003).powi(2) * eta * (1.0 - eta);
    ensure((1650.0..1750.0).contains(&nt), format!("back-solved N_t {nt:.0}"))?;
    let (lo, hi) = wald_interval(eta, 1700, Z_95);
    let r1 = |v: f64| (v * 1000.0).round() / 10.0;
    ensure(r1(hi) == 99.9 && r1(lo) == 99.3, format!("interval at N_t=1700 prints as {} - {}", r1(hi), r1(lo)))?;
    Ok(format!("0.9 ± 0.0588; N_t ≈ {nt:.0}, η = 99.6 → {:.3} - {:.3} %", hi * 100.0, lo * 100.0))
}

// 6 ------------------------------------------------------------------------

/// Least squares by modified Gram-Schmidt; minimum-norm when the system is
/// underdetermined. `rows` are the equations.
fn mgs_lstsq(rows: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let (m, n) = (rows.len(), rows[0].len());
    let transpose = m < n;
    // Factor the tall matrix: A (m×n) when overdetermined, Aᵀ otherwise.
    let (tall, k): (Vec<Vec<f64>>, usize) = if transpose {
        ((0..m).map(|i| rows[i].clone()).collect(), m)
    } else {
        ((0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect(), n)
    };
    let mut q = tall;
    let mut r = vec![vec![0.0; k]; k];
    for j in 0..k {
        for i in 0..j {
            let d: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            r[i][j] = d;
            let qi = q[i].clone();
            q[j].iter_mut().zip(&qi).for_each(|(v, u)| *v -= d * u);
        }
        let nrm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        r[j][j] = nrm;
        q[j].iter_mut().for_each(|v| *v /= nrm);
    }
    if !transpose {
        // R x = Qᵀ b
        let qtb: Vec<f64> = (0..k).map(|i| q[i].iter().zip(b).map(|(a, c)| a * c).sum()).collect();
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| r[i][j] * x[j]).sum();
            x[i] = (qtb[i] - s) / r[i][i];
        }
        x
    } else {
        // Aᵀ = Q R, so A = Rᵀ Qᵀ; solve Rᵀ z = b, then x = Q z.
        let mut z = vec![0.0; k];
        for i in 0..k {
            let s: f64 = (0..i).map(|j| r[j][i] * z[j]).sum();
            z[i] = (b[i] - s) / r[i][i];
        }
        (0..n).map(|c| (0..k).map(|i| q[i][c] * z[i]).sum()).collect()
    }
}

fn naive_dft(x: &[f64], k: usize) -> (f64, f64) {
    let n = x.len() as f64;
    x.iter().enumerate().fold((0.0, 0.0), |(re, im), (m, v)| {
        let th = -2.0 * PI * (m * k) as f64 / n;
        (re + v * th.cos(), im + v * th.sin())
    })
}

fn oracle(x: &[f64], phases: &[Vec<f64>; 3], id: FeatureId) -> Option<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let diffs = || x.windows(2).map(|w| w[1] - w[0]);
    Some(match id.kind() {
        FeatureKind::AbsEnergy => x.iter().map(|v| v * v).sum(),
        FeatureKind::AbsSumChanges => diffs().map(f64::abs).sum(),
        FeatureKind::MeanAbsChanges => diffs().map(f64::abs).sum::<f64>() / (n - 1.0),
        FeatureKind::Complexity => diffs().map(|d| d * d).sum::<f64>().sqrt(),
        FeatureKind::Ar(k) => {
            let p = 10;
            let eqs: Vec<Vec<f64>> = (p..x.len()).map(|t| (1..=p).map(|j| x[t - j]).collect()).collect();
            mgs_lstsq(&eqs, &x[p..])[k - 1]
        }
        FeatureKind::StdDev => sd,
        FeatureKind::Autocorr(l) => {
            let s: f64 = (0..x.len() - l).map(|i| (x[i] - mean) * (x[i + l] - mean)).sum();
            s / ((n - 1.0) * var)
        }
        FeatureKind::Kurtosis => x.iter().map(|v| ((v - mean) / sd).powi(4)).sum::<f64>() / n,
        FeatureKind::Skewness => x.iter().map(|v| ((v - mean) / sd).powi(3)).sum::<f64>() / n,
        FeatureKind::VariationCoeff => sd / mean,
        FeatureKind::Fft(k, part) => {
            let (re, im) = naive_dft(x, k);
            match part {
                FftPart::Real => re,
                FftPart::Imag => im,
                FftPart::Abs => re.hypot(im),
                FftPart::Angle => im.atan2(re),
            }
        }
        FeatureKind::Wavelet(w, p) => {
            let a = WAVELET_WIDTHS[w];
            let c = p as f64 * (n - 1.0) / 9.0;
            let amp = 2.0 / ((3.0 * a).sqrt() * PI.powf(0.25));
            x.iter()
                .enumerate()
                .map(|(i, v)| {
                    let t = i as f64 - c;
                    v * amp * (1.0 - t * t / (a * a)) * (-t * t / (2.0 * a * a)).exp()
                })
                .sum()
        }
        FeatureKind::SampleEntropy => {
            let r = 0.2 * sd;
            let templates = x.len() - 2;
            let count = |len: usize| {
                let mut c = 0.0f64;
                for i in 0..templates {
                    for j in 0..templates {
                        if i != j && (0..len).all(|k| (x[i + k] - x[j + k]).abs() <= r) {
                            c += 1.0;
                        }
                    }
                }
                c
            };
            let (b, a) = (count(2), count(3));
            if a == 0.0 {
                return None;
            }
            -(a / b).ln()
        }
        FeatureKind::FirstMax | FeatureKind::LastMax => {
            let mx = x.iter().cloned().fold(f64::MIN, f64::max);
            let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] == mx).collect();
            let i = if id.kind() == FeatureKind::FirstMax { idx[0] } else { *idx.last().unwrap() };
            i as f64 / (n - 1.0)
        }
        FeatureKind::Quantile(q) => {
            let mut s = x.to_vec();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let h = (n - 1.0) * QUANTILES[q];
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            s[lo] + (h - lo as f64) * (s[hi] - s[lo])
        }
        FeatureKind::Sequence(s) => {
            // One-cycle phasors at 60 Hz, 1920 Hz sampling: 32 samples.
            if x.len() < 32 {
                return None;
            }
            let ph: Vec<Complex<f64>> = phases
                .iter()
                .map(|p| {
                    let (re, im) = naive_dft(&p[..32], 1);
                    Complex::new(re, im) * (2.0 / 32.0)
                })
                .collect();
            let a = Complex::from_polar(1.0, 2.0 * PI / 3.0);
            let comp = match s {
                0 => ph[0] + ph[1] + ph[2],
                1 => ph[0] + a * ph[1] + a * a * ph[2],
                _ => ph[0] + a * a * ph[1] + a * ph[2],
            };
            comp.norm() / 3.0
        }
    })
}

fn feature_oracles() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ids: Vec<FeatureId> = FeatureId::all().collect();
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for w in 0..1000 {
        let len = rng.random_range(12..=64usize);
        let phases: [Vec<f64>; 3] = std::array::from_fn(|_| {
            let off = rng.random_range(-2.0..2.0);
            let amp = rng.random_range(0.1..3.0);
            let ph = rng.random_range(0.0..2.0 * PI);
            (0..len)
                .map(|i| off + amp * (2.0 * PI * i as f64 / 32.0 + ph).sin() + rng.random_range(-0.5..0.5))
                .collect()
        });
        let rec = Record3Ph::new(phases[0].clone(), phases[1].clone(), phases[2].clone(), 1920.0, 60.0, 0.0)
            .map_err(|e| e.to_string())?;
        let win = window_at_index(&rec, 0, len as f64 / 32.0).map_err(|e| e.to_string())?;
        ensure(win.len() == len, format!("window length {} for {len}", win.len()))?;
        let got = extract(&win, &ids).map_err(|e| e.to_string())?;
        for p in Phase::ALL {
            let x = &phases[p.index()];
            for &id in &ids {
                let g = got[p.index()].get(id);
                let want = oracle(x, &phases, id);
                let (g, want) = match (g, want) {
                    (Some(g), Some(want)) => (g, want),
                    (None, None) => continue,
                    (g, want) => return Err(format!("window {w} {id}_{}: library {g:?}, oracle {want:?}", p.letter())),
                };
                let rtol = match id.kind() {
                    FeatureKind::SampleEntropy | FeatureKind::Wavelet(..) => 1e-6,
                    _ => 1e-9,
                };
                let err = if let FeatureKind::Fft(_, FftPart::Angle) = id.kind() {
                    let d = (g - want).rem_euclid(2.0 * PI);
                    d.min(2.0 * PI - d)
                } else {
                    (g - want).abs() / want.abs().max(1.0)
                };
                ensure(err <= rtol, format!("window {w} (len {len}) {id}_{}: {g} vs {want}", p.letter()))?;
                worst = worst.max(err / rtol);
                checked += 1;
            }
        }
    }
    let el = t.elapsed();
    ensure(el < Duration::from_secs(30), format!("runtime {el:?}"))?;
    Ok(format!("{checked} values on 1000 windows, worst error {worst:.2} of tolerance, {el:.1?}"))
}

// 7 ------------------------------------------------------------------------

fn trap(a: f64, b: f64, c: f64, d: f64) -> Trapezoid<f64> {
    Trapezoid::new(a, b, c, d).unwrap()
}

fn var(name: &str, lo: f64, hi: f64, terms: &[(&str, Trapezoid<f64>)]) -> Variable<f64> {
    Variable {
        name: name.into(),
        lo,
        hi,
        terms: terms.iter().map(|(l, s)| Term { label: l.to_string(), set: *s }).collect(),
    }
}

/// Centroid of trapezoid (a, b, c, d) clipped at height h, by integrating
/// the rising ramp, plateau and falling ramp separately.
fn clipped_centroid(a: f64, b: f64, c: f64, d: f64, h: f64) -> f64 {
    let x1 = a + h * (b - a);
    let x2 = d - h * (d - c);
    let pieces = [
        (0.5 * (x1 - a) * h, a + 2.0 * (x1 - a) / 3.0),
        ((x2 - x1) * h, 0.5 * (x1 + x2)),
        (0.5 * (d - x2) * h, x2 + (d - x2) / 3.0),
    ];
    let area: f64 = pieces.iter().map(|p| p.0).sum();
    pieces.iter().map(|p| p.0 * p.1).sum::<f64>() / area
}

fn fuzzy_engine() -> Outcome {
    let input = var("x", 0.0, 10.0, &[("LOW", trap(0.0, 0.0, 3.0, 5.0)), ("HIGH", trap(3.0, 5.0, 10.0, 10.0))]);
    let out = var("score", 0.0, 1.0, &[("NO", trap(0.0, 0.0, 0.3, 0.7)), ("FAULT", trap(0.3, 0.7, 1.0, 1.0))]);
    let rules = vec![
        Rule { antecedent: vec![Some(0)], consequent: 0 },
        Rule { antecedent: vec![Some(1)], consequent: 1 },
    ];
    let sys = FuzzySystem::new(vec![input.clone()], out, rules).map_err(|e| e.to_string())?;
    let sym = sys.infer(&[4.0]).map_err(|e| e.to_string())?.score;
    ensure((sym - 0.5).abs() < 1e-3, format!("symmetric rules give {sym}"))?;

    // x = 4 is LOW to degree 0.5, which clips the asymmetric MID term.
    let (a, b, c, d) = (0.2, 0.3, 0.5, 0.9);
    let out = var("score", 0.0, 1.0, &[("LOWS", trap(0.0, 0.0, 0.2, 0.3)), ("MID", trap(a, b, c, d)), ("TOP", trap(0.5, 0.9, 1.0, 1.0))]);
    let sys = FuzzySystem::new(vec![input], out, vec![Rule { antecedent: vec![Some(0)], consequent: 1 }])
        .map_err(|e| e.to_string())?;
    let got = sys.infer(&[4.0]).map_err(|e| e.to_string())?.score;
    let want = clipped_centroid(a, b, c, d, 0.5);
    ensure((got - want).abs() < 1e-3, format!("single-rule centroid {got} vs analytic {want}"))?;

    let mut toy = LabeledInputs::default();
    for i in 0..60 {
        let x = i as f64 / 10.0;
        toy.push(vec![x], x >= 3.3);
    }
    let cfg = GaConfig { generations: 50, seed: 5, ..GaConfig::default() };
    let tuned = ga_tune(&toy, &FuzzyTemplate::joint(&["x"]), &cfg).map_err(|e| e.to_string())?;
    ensure(tuned.fitness == 1.0, format!("GA fitness {} after 50 generations", tuned.fitness))?;
    let gens = tuned.trace.iter().position(|&f| f == 1.0).unwrap_or(tuned.trace.len());
    Ok(format!("symmetric {sym:.4}, centroid {got:.4} vs {want:.4}, GA 100% at generation {gens}"))
}

// 8, 9 ---------------------------------------------------------------------

fn desk_manifest(snr: Option<f64>, cfg: &PipelineConfig) -> Result<Manifest, String> {
    let cells = GridSpec::desk().with_snr(snr).cells(cfg.seed).map_err(|e| e.to_string())?;
    let rows = cells
        .iter()
        .map(|c| ManifestRow::from_cell(c, format!("c{:05}", c.index), String::new(), None))
        .collect();
    Manifest::new(rows, Default::default()).map_err(|e| e.to_string())
}

fn run_mode(m: &Manifest, cases: &[corpus::CaseFeatures], beta: f64, cfg: &PipelineConfig, mode: EndMode) -> Result<PipelineReport, String> {
    let mut cfg = cfg.clone();
    cfg.features.end_mode = mode;
    run_experiment(&m.rows, cases, beta, &cfg).map(|(_, r)| r).map_err(|e| e.to_string())
}

fn desk_scale() -> Outcome {
    let t = Instant::now();
    let cfg = PipelineConfig::default();
    let m = desk_manifest(None, &cfg)?;
    let faults = m.rows.iter().filter(|r| r.y_detection == 1).count();
    ensure(faults == 1080 && m.rows.len() - faults == 600, format!("corpus {faults} faults of {}", m.rows.len()))?;
    let beta = cfg.detector.beta;
    let cases = process_manifest(&m, Source::Synthesize, beta, &cfg).map_err(|e| e.to_string())?;
    let r = run_mode(&m, &cases, beta, &cfg, EndMode::Single)?;
    let el = t.elapsed();
    let summary = format!(
        "detection {:.2}%, region {:.2}%, phase {:.2}% (fault type {:.2}%, location {:.2}%) on {} test cases, {el:.0?}",
        r.detection.accuracy * 100.0,
        r.region.accuracy * 100.0,
        r.phase.accuracy * 100.0,
        r.fault_type.accuracy * 100.0,
        r.location.accuracy * 100.0,
        r.n_test
    );
    ensure(r.detection.accuracy >= 0.95, format!("detection below 95%: {summary}"))?;
    ensure(r.region.accuracy >= 0.90, format!("region below 90%: {summary}"))?;
    ensure(r.phase.accuracy >= 0.90, format!("phase below 90%: {summary}"))?;
    ensure(el < Duration::from_secs(300), format!("runtime over 5 min: {summary}"))?;
    Ok(summary)
}

fn noise_trend() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut acc = Vec::new();
    for snr in [40.0, 20.0] {
        let m = desk_manifest(Some(snr), &cfg)?;
        // The threshold is tuned on the training split only, as the
        // deployed detector would be.
        let (train, _) = split_cases(&m.rows, cfg.classify.test_fraction, cfg.seed).map_err(|e| e.to_string())?;
        let beta = corpus::tune_beta_on(&m, &train, Source::Synthesize, &cfg).map_err(|e| e.to_string())?.beta;
        let cases = process_manifest(&m, Source::Synthesize, beta, &cfg).map_err(|e| e.to_string())?;
        let single = run_mode(&m, &cases, beta, &cfg, EndMode::Single)?.detection.accuracy;
        let double = run_mode(&m, &cases, beta, &cfg, EndMode::Double)?.detection.accuracy;
        acc.push((snr, beta, single, double));
    }
    let [(_, b40, s40, d40), (_, b20, s20, d20)] = [acc[0], acc[1]];
    let summary = format!(
        "40 dB (beta {b40:.3}): single {:.2}%, double {:.2}%; 20 dB (beta {b20:.3}): single {:.2}%, double {:.2}%",
        s40 * 100.0,
        d40 * 100.0,
        s20 * 100.0,
        d20 * 100.0
    );
    ensure(s40 >= s20 && d40 >= d20, format!("accuracy rises with noise: {summary}"))?;
    ensure(d20 >= s20, format!("double-end below single-end at 20 dB: {summary}"))?;
    Ok(summary)
}

// 10 -----------------------------------------------------------------------

fn relay_baseline() -> Outcome {
    let line = LineParams::default();
    let d = 0.5;
    let want = line.z1 * d;
    let shifts = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0];
    let load = shifts.map(|s| Complex::from_polar(300.0, s - 0.4));

    // Ground fault on a: V_a = d (Z1 (I_a - I_0) + Z0 I_0), positive and
    // negative sequence seeing Z1 and zero sequence Z0.
    let i = [Complex::from_polar(2500.0, -1.3), load[1], load[2]];
    let i0 = (i[0] + i[1] + i[2]) / 3.0;
    let vs = shifts.map(|s| Complex::from_polar(187e3, s));
    let v = [(line.z1 * (i[0] - i0) + line.z0 * i0) * d, vs[1], vs[2]];
    let ag = loop_impedances(v, i, line.k0()).map_err(|e| e.to_string())?[0].z.ok_or("AG loop indeterminate")?;
    let e_ag = (ag - want).norm() / want.norm();

    // Phase-phase fault b-c: V_b - V_c = d Z1 (I_b - I_c).
    let fault = Complex::from_polar(2000.0, -1.5);
    let i = [load[0], fault, -fault];
    let vb = Complex::from_polar(60e3, -2.0);
    let v = [vs[0], vb, vb - line.z1 * d * (i[1] - i[2])];
    let bc = loop_impedances(v, i, line.k0()).map_err(|e| e.to_string())?[4].z.ok_or("BC loop indeterminate")?;
    let e_bc = (bc - want).norm() / want.norm();
    ensure(e_ag < 1e-3 && e_bc < 1e-3, format!("loop errors AG {e_ag:.2e}, BC {e_bc:.2e}"))?;

    let fs = 1920.0;
    let mut worst: f64 = 0.0;
    for k in 0..=144 {
        let f = 42.0 + 0.25 * k as f64;
        let x: Vec<f64> = (0..200).map(|n| (2.0 * PI * f * n as f64 / fs + 0.3).cos()).collect();
        let est = track_frequency(&x, fs).map_err(|e| e.to_string())?.freq;
        worst = worst.max((est - f).abs());
    }
    ensure(worst < 0.1, format!("tracker error {worst:.3} Hz"))?;

    let zone = ZoneQuad::for_line(&line, 0.8).map_err(|e| e.to_string())?;
    let sc = FaultScenario::slip_72hz();
    let (v, i) = sc.build(&line).map_err(|e| e.to_string())?;
    let fixed = impedance_trajectory(&v, &i, &line, &zone, FrequencyMode::Fixed(60.0), 4).map_err(|e| e.to_string())?;
    let tracked = impedance_trajectory(&v, &i, &line, &zone, FrequencyMode::Tracked, 4).map_err(|e| e.to_string())?;
    let dev = max_relative_deviation(&fixed, &tracked, LoopId::AG).ok_or("no comparable trajectory points")?;
    ensure(dev > 0.05, format!("fixed vs tracked |Z| deviation {dev:.4}"))?;
    Ok(format!("loop errors AG {e_ag:.1e}, BC {e_bc:.1e}; tracker max error {worst:.3} Hz; slip deviation {:.1}%", dev * 100.0))
}

// 11 -----------------------------------------------------------------------

const SMALL_GRID: &str = r#"
[[block]]
kind = ["fault"]
fault_type = ["ag", "bc", "abg", "abcg"]
resistance = ["low", "high"]
inception_angle = [0.0, 90.0]
location = [2, 5, 7]

[[block]]
kind = ["steady", "load_switch", "capacitor_switch", "power_swing"]
inception_angle = [0.0, 45.0, 90.0, 135.0, 180.0, 225.0]
"#;

fn run_pipeline(dir: &Path) -> Result<(), String> {
    let grid = dir.join("grid.toml");
    std::fs::write(&grid, SMALL_GRID).map_err(|e| e.to_string())?;
    let out = dir.join("out");
    let steps: [&[&str]; 9] = [
        &["generate", "--grid", grid.to_str().unwrap(), "--snr", "40"],
        &["detect", "--tune-beta"],
        &["extract"],
        &["select", "--task", "phase", "--k", "6"],
        &["tune-fuzzy"],
        &["train"],
        &["evaluate"],
        &["relay"],
        &["report"],
    ];
    for args in steps {
        let o = Command::new(env!("CARGO_BIN_EXE_arfault"))
            .args(args)
            .args(["--out", out.to_str().unwrap(), "--seed", "7"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)))?;
    }
    Ok(())
}

fn files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    run_pipeline(a.path())?;
    run_pipeline(b.path())?;
    let (ra, rb) = (a.path().join("out"), b.path().join("out"));
    let (fa, fb) = (files(&ra), files(&rb));
    ensure(fa == fb, "runs produced different file sets")?;
    for f in &fa {
        let (x, y) = (std::fs::read(ra.join(f)).unwrap(), std::fs::read(rb.join(f)).unwrap());
        ensure(x == y, format!("{} differs between runs", f.display()))?;
    }
    Ok(format!("{} artifacts byte-identical across two runs", fa.len()))
}
