//! Conventional distance relay used as a baseline: one-cycle DFT phasors,
//! zero-crossing frequency tracking, loop impedances and a quadrilateral
//! zone-1 characteristic.

use std::fmt;
use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{Phase, Record3Ph};
use crate::Scalar;

/// Lower and upper bounds of the tracked frequency in Hz.
pub const TRACK_MIN_HZ: f64 = 42.0;
pub const TRACK_MAX_HZ: f64 = 78.0;
/// DFT window bounds at the reference rate; scaled proportionally elsewhere.
pub const WINDOW_MIN_REF: f64 = 22.0;
pub const WINDOW_MAX_REF: f64 = 38.0;
pub const REFERENCE_FS: f64 = 1920.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasorEstimate<T> {
    /// Peak-amplitude phasor of `A cos(2πft + φ)`, i.e. `A∠φ`.
    pub phasor: Complex<T>,
    pub freq: T,
    pub window_len: usize,
}

impl<T: Scalar> PhasorEstimate<T> {
    pub fn magnitude(&self) -> T {
        self.phasor.norm()
    }

    pub fn angle(&self) -> T {
        self.phasor.arg()
    }
}

/// One-cycle DFT at `f` over the first `round(fs / f)` samples of `x`.
pub fn dft_phasor<T: Scalar>(x: &[T], fs: T, f: T) -> Result<PhasorEstimate<T>> {
    if !(f > T::zero()) || !(fs > T::zero()) {
        return Err(Error::InvalidParameter(format!("dft frequency {f} at fs {fs}")));
    }
    let n = (fs / f).round().to_usize().unwrap_or(0);
    if n < 2 || x.len() < n {
        return Err(Error::TooShort { what: "DFT window", needed: n.max(2), got: x.len() });
    }
    Ok(PhasorEstimate { phasor: correlate(&x[..n], fs, f), freq: f, window_len: n })
}

fn correlate<T: Scalar>(x: &[T], fs: T, f: T) -> Complex<T> {
    let w = T::lit(2.0) * T::PI() * f / fs;
    let acc = x.iter().enumerate().fold(Complex::new(T::zero(), T::zero()), |acc, (i, &v)| {
        let th = w * T::from_usize_lossy(i);
        acc + Complex::new(v * th.cos(), -v * th.sin())
    });
    acc.scale(T::lit(2.0) / T::from_usize_lossy(x.len()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyTrack<T> {
    pub freq: T,
    pub window_len: usize,
}

/// DFT window bounds for a sampling rate.
pub fn window_bounds<T: Scalar>(fs: T) -> (usize, usize) {
    let scale = fs.to_f64_lossy() / REFERENCE_FS;
    let lo = (WINDOW_MIN_REF * scale).round().max(2.0) as usize;
    let hi = (WINDOW_MAX_REF * scale).round().max(lo as f64) as usize;
    (lo, hi)
}

/// Zero-crossing frequency estimate, averaged over all crossings found.
pub fn track_frequency<T: Scalar>(x: &[T], fs: T) -> Result<FrequencyTrack<T>> {
    let mut first = None;
    let mut last = T::zero();
    let mut count = 0usize;
    for (i, w) in x.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if (a < T::zero() && b >= T::zero()) || (a > T::zero() && b <= T::zero()) {
            let t = T::from_usize_lossy(i) + a / (a - b);
            first.get_or_insert(t);
            last = t;
            count += 1;
        }
    }
    let first = match first {
        Some(t) if count >= 2 && last > t => t,
        _ => return Err(Error::Degenerate(format!("{count} zero crossings; need at least 2"))),
    };
    let span = (last - first) / fs;
    let raw = T::from_usize_lossy(count - 1) / (T::lit(2.0) * span);
    let freq = raw.max(T::lit(TRACK_MIN_HZ)).min(T::lit(TRACK_MAX_HZ));
    let (lo, hi) = window_bounds(fs);
    let window_len = (fs / freq).round().to_usize().unwrap_or(lo).clamp(lo, hi);
    Ok(FrequencyTrack { freq, window_len })
}

/// Series line constants in ohms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub z1: Complex<f64>,
    pub z0: Complex<f64>,
    pub length_km: f64,
    pub voltage_kv: f64,
}

impl Default for LineParams {
    fn default() -> Self {
        Self {
            z1: Complex::new(0.96, 31.18),
            z0: Complex::new(33.6, 112.9),
            length_km: 100.0,
            voltage_kv: 230.0,
        }
    }
}

impl LineParams {
    /// Zero-sequence compensation factor `(Z0 - Z1) / (3 Z1)`.
    pub fn k0(&self) -> Complex<f64> {
        (self.z0 - self.z1) / (self.z1 * 3.0)
    }

    /// Positive-sequence impedance at frequency `f`, reactance scaled from `f0`.
    pub fn z1_at(&self, f: f64, f0: f64) -> Complex<f64> {
        Complex::new(self.z1.re, self.z1.im * f / f0)
    }

    pub fn z0_at(&self, f: f64, f0: f64) -> Complex<f64> {
        Complex::new(self.z0.re, self.z0.im * f / f0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneQuad {
    pub x1: f64,
    pub r1: f64,
    /// Directional bounds on `arg(Z)` in degrees.
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
}

impl ZoneQuad {
    /// Zone reaching `fraction` of the line; resistive reach is a placeholder
    /// of four times the resistive part of the reach impedance.
    pub fn for_line(line: &LineParams, fraction: f64) -> Result<Self> {
        let reach = line.z1 * fraction;
        Self::new(reach.im, 4.0 * reach.re, -30.0, 120.0)
    }

    pub fn new(x1: f64, r1: f64, angle_min_deg: f64, angle_max_deg: f64) -> Result<Self> {
        if !(x1 > 0.0 && r1 > 0.0 && angle_min_deg < angle_max_deg) {
            return Err(Error::InvalidParameter(format!(
                "zone needs X1 > 0, R1 > 0 and ordered angle bounds (got {x1}, {r1}, {angle_min_deg}..{angle_max_deg})"
            )));
        }
        Ok(Self { x1, r1, angle_min_deg, angle_max_deg })
    }
}

impl Default for ZoneQuad {
    fn default() -> Self {
        Self::for_line(&LineParams::default(), 0.8).expect("default line constants are valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LoopId {
    AG,
    BG,
    CG,
    AB,
    BC,
    CA,
}

impl LoopId {
    pub const ALL: [LoopId; 6] = [LoopId::AG, LoopId::BG, LoopId::CG, LoopId::AB, LoopId::BC, LoopId::CA];

    fn phases(self) -> (Phase, Option<Phase>) {
        match self {
            LoopId::AG => (Phase::A, None),
            LoopId::BG => (Phase::B, None),
            LoopId::CG => (Phase::C, None),
            LoopId::AB => (Phase::A, Some(Phase::B)),
            LoopId::BC => (Phase::B, Some(Phase::C)),
            LoopId::CA => (Phase::C, Some(Phase::A)),
        }
    }
}

impl fmt::Display for LoopId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LoopId::AG => "AG",
            LoopId::BG => "BG",
            LoopId::CG => "CG",
            LoopId::AB => "AB",
            LoopId::BC => "BC",
            LoopId::CA => "CA",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopImpedance {
    pub loop_id: LoopId,
    /// `None` when the loop current is too small to divide by.
    pub z: Option<Complex<f64>>,
    pub k0: Complex<f64>,
}

/// Relative size of the smallest loop current accepted, against the largest
/// phase current.
pub const INDETERMINATE_REL: f64 = 1e-6;

pub fn loop_impedances(v: [Complex<f64>; 3], i: [Complex<f64>; 3], k0: Complex<f64>) -> Result<[LoopImpedance; 6]> {
    if v.iter().chain(i.iter()).any(|c| !c.re.is_finite() || !c.im.is_finite()) || !k0.norm().is_finite() {
        return Err(Error::NonFinite("loop impedance phasors".into()));
    }
    let i0 = (i[0] + i[1] + i[2]) / 3.0;
    let floor = INDETERMINATE_REL * i.iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(LoopId::ALL.map(|id| {
        let (x, y) = id.phases();
        let (num, den) = match y {
            None => (v[x.index()], i[x.index()] + k0 * i0 * 3.0),
            Some(y) => (v[x.index()] - v[y.index()], i[x.index()] - i[y.index()]),
        };
        let z = (floor > 0.0 && den.norm() >= floor).then(|| num / den);
        LoopImpedance { loop_id: id, z, k0 }
    }))
}

/// Point-in-quadrilateral test, inclusive on the reach boundaries.
pub fn zone1_check(z: Complex<f64>, q: &ZoneQuad) -> bool {
    let ang = z.im.atan2(z.re).to_degrees();
    z.im > 0.0 && z.im <= q.x1 && z.re.abs() <= q.r1 && ang >= q.angle_min_deg && ang <= q.angle_max_deg
}

/// How the DFT frequency is chosen along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    Fixed(f64),
    Tracked,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub loop_id: LoopId,
    pub z: Option<Complex<f64>>,
    pub in_zone: bool,
}

/// Loop impedances along a record, one evaluation per `step` samples.
/// Each evaluation uses the DFT window ending at the current sample; tracked
/// mode estimates the frequency from the preceding three nominal cycles of
/// the phase-a current.
pub fn impedance_trajectory<T: Scalar>(
    v: &Record3Ph<T>,
    i: &Record3Ph<T>,
    line: &LineParams,
    zone: &ZoneQuad,
    mode: FrequencyMode,
    step: usize,
) -> Result<Vec<TrajectoryPoint>> {
    if v.len() != i.len() || v.fs() != i.fs() {
        return Err(Error::InvalidParameter("voltage and current records differ in length or rate".into()));
    }
    if step == 0 {
        return Err(Error::InvalidParameter("trajectory step must be positive".into()));
    }
    let fs = i.fs();
    let track_len = 3 * i.samples_per_cycle();
    let (_, max_win) = window_bounds(fs);
    let fixed_len = match mode {
        FrequencyMode::Fixed(f) => (fs.to_f64_lossy() / f).round() as usize,
        FrequencyMode::Tracked => 0,
    };
    let start = track_len.max(max_win).max(fixed_len);
    if i.len() <= start {
        return Err(Error::TooShort { what: "trajectory record", needed: start + 1, got: i.len() });
    }
    let k0 = line.k0();
    let mut out = Vec::new();
    let mut end = start;
    while end <= i.len() {
        let (f, n) = match mode {
            FrequencyMode::Fixed(f) => (T::lit(f), fixed_len),
            FrequencyMode::Tracked => match track_frequency(&i.phase(Phase::A)[end - track_len..end], fs) {
                Ok(tr) => (tr.freq, tr.window_len),
                Err(_) => (i.f0(), (fs / i.f0()).round().to_usize().unwrap_or(max_win)),
            },
        };
        let ph = |rec: &Record3Ph<T>, p: Phase| {
            let c = correlate(&rec.phase(p)[end - n..end], fs, f);
            Complex::new(c.re.to_f64_lossy(), c.im.to_f64_lossy())
        };
        let vp = Phase::ALL.map(|p| ph(v, p));
        let ip = Phase::ALL.map(|p| ph(i, p));
        let t = i.time_of(end - 1).to_f64_lossy();
        for lz in loop_impedances(vp, ip, k0)? {
            let in_zone = lz.z.is_some_and(|z| zone1_check(z, zone));
            out.push(TrajectoryPoint { t, loop_id: lz.loop_id, z: lz.z, in_zone });
        }
        end += step;
    }
    Ok(out)
}

/// Write a trajectory as CSV `t,loop,re_z,im_z,in_zone`; indeterminate
/// points have empty impedance fields.
pub fn write_trajectory_csv<W: Write>(writer: W, points: &[TrajectoryPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "loop", "re_z", "im_z", "in_zone"])?;
    for p in points {
        let (re, im) = p.z.map(|z| (z.re.to_string(), z.im.to_string())).unwrap_or_default();
        w.write_record([p.t.to_string(), p.loop_id.to_string(), re, im, p.in_zone.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Analytic voltage/current scenario for a metallic fault at fraction `d` of
/// the line, with the current made of several frequency components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultScenario {
    pub loop_id: LoopId,
    pub distance: f64,
    /// `(frequency Hz, peak amplitude A, angle rad)` of the faulted-phase current.
    pub components: Vec<(f64, f64, f64)>,
    /// Sound-phase load current peak.
    pub load_current: f64,
    pub f0: f64,
    pub fs: f64,
    pub duration: f64,
}

impl FaultScenario {
    /// Wind-end ground fault at location 5 with a 72 Hz slip component.
    pub fn slip_72hz() -> Self {
        Self {
            loop_id: LoopId::AG,
            distance: 0.5,
            components: vec![(72.0, 1000.0, 0.3), (60.0, 250.0, -0.5)],
            load_current: 50.0,
            f0: 60.0,
            fs: REFERENCE_FS,
            duration: 0.2,
        }
    }

    /// Build `(v, i)` records. Voltages follow `V_f = d · Z_loop(f) · I_f` per
    /// frequency component so that the loop equation holds exactly at every
    /// component frequency; sound phases carry a balanced 60 Hz load current
    /// and nominal voltage.
    pub fn build(&self, line: &LineParams) -> Result<(Record3Ph<f64>, Record3Ph<f64>)> {
        if !(self.distance > 0.0) || self.components.is_empty() {
            return Err(Error::InvalidParameter("scenario needs distance > 0 and components".into()));
        }
        let n = (self.duration * self.fs).round() as usize;
        let vpk = line.voltage_kv * 1e3 * (2.0f64 / 3.0).sqrt();
        let shifts = [0.0, -2.0 * std::f64::consts::PI / 3.0, 2.0 * std::f64::consts::PI / 3.0];
        let mut v = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut i = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let (fx, fy) = self.loop_id.phases();
        for k in 0..n {
            let t = k as f64 / self.fs;
            let w0 = 2.0 * std::f64::consts::PI * self.f0 * t;
            for p in Phase::ALL {
                i[p.index()][k] = self.load_current * (w0 + shifts[p.index()]).cos();
                v[p.index()][k] = vpk * (w0 + shifts[p.index()]).cos();
            }
            let mut fi = 0.0;
            let mut fv = 0.0;
            for &(f, amp, ang) in &self.components {
                let ph = 2.0 * std::f64::consts::PI * f * t + ang;
                let z = match fy {
                    None => {
                        // Ground loop: only the faulted phase carries fault current,
                        // so I + k0·3I0 = (1 + k0)·I.
                        let k0 = (line.z0_at(f, self.f0) - line.z1_at(f, self.f0)) / (line.z1_at(f, self.f0) * 3.0);
                        line.z1_at(f, self.f0) * self.distance * (Complex::new(1.0, 0.0) + k0)
                    }
                    Some(_) => line.z1_at(f, self.f0) * self.distance * 2.0,
                };
                fi += amp * ph.cos();
                fv += (z * Complex::from_polar(amp, ph)).re;
            }
            match fy {
                None => {
                    i[fx.index()][k] = fi;
                    v[fx.index()][k] = fv;
                }
                Some(fy) => {
                    // Phase-phase: equal and opposite currents, voltage split symmetrically.
                    i[fx.index()][k] = fi;
                    i[fy.index()][k] = -fi;
                    v[fx.index()][k] = fv / 2.0;
                    v[fy.index()][k] = -fv / 2.0;
                }
            }
        }
        let [va, vb, vc] = v;
        let [ia, ib, ic] = i;
        Ok((
            Record3Ph::new(va, vb, vc, self.fs, self.f0, 0.0)?,
            Record3Ph::new(ia, ib, ic, self.fs, self.f0, 0.0)?,
        ))
    }
}

/// Largest relative `|Z|` deviation of `a` from `b` over matching determinate
/// points of one loop.
pub fn max_relative_deviation(a: &[TrajectoryPoint], b: &[TrajectoryPoint], loop_id: LoopId) -> Option<f64> {
    a.iter()
        .zip(b)
        .filter(|(p, q)| p.loop_id == loop_id && q.loop_id == loop_id)
        .filter_map(|(p, q)| Some((p.z?, q.z?)))
        .map(|(za, zb)| (za.norm() - zb.norm()).abs() / zb.norm())
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |m| m.max(d))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn tone(f: f64, fs: f64, n: usize, amp: f64, phi: f64) -> Vec<f64> {
        (0..n).map(|k| amp * (2.0 * PI * f * k as f64 / fs + phi).cos()).collect()
    }

    #[test]
    fn pure_tone_phasor() {
        let x = tone(60.0, 1920.0, 64, 1.0, 0.7);
        let p = dft_phasor(&x, 1920.0, 60.0).unwrap();
        assert_eq!(p.window_len, 32);
        assert!((p.magnitude() - 1.0).abs() < 1e-6);
        assert!((p.angle() - 0.7).abs() < 1e-6);
    }

    #[test]
    fn off_nominal_leakage() {
        // The error oscillates as the window slides; its worst case over one
        // beat period is what a fixed-window relay sees.
        let x = tone(72.0, 1920.0, 200, 1.0, 0.0);
        let worst = (0..160)
            .map(|s| (dft_phasor(&x[s..], 1920.0, 60.0).unwrap().magnitude() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst > 0.05, "worst error {worst}");
    }

    #[test]
    fn zero_and_short_input() {
        assert_eq!(dft_phasor(&[0.0; 40], 1920.0, 60.0).unwrap().magnitude(), 0.0);
        assert!(dft_phasor(&[0.0; 10], 1920.0, 60.0).is_err());
    }

    #[test]
    fn linear_in_amplitude() {
        let x = tone(55.0, 1920.0, 40, 3.0, 0.2);
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = dft_phasor(&x, 1920.0, 55.0).unwrap().magnitude();
        let b = dft_phasor(&x2, 1920.0, 55.0).unwrap().magnitude();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn tracks_50_and_72() {
        let t = track_frequency(&tone(50.0, 1920.0, 200, 1.0, 0.3), 1920.0).unwrap();
        assert!((t.freq - 50.0).abs() < 0.05);
        assert_eq!(t.window_len, 38);
        let t = track_frequency(&tone(72.0, 1920.0, 200, 1.0, 0.3), 1920.0).unwrap();
        assert!((t.freq - 72.0).abs() < 0.1);
        assert_eq!(t.window_len, 27);
        assert!(track_frequency(&[5.0; 100], 1920.0).is_err());
    }

    #[test]
    fn window_bounds_scale() {
        assert_eq!(window_bounds(1920.0), (22, 38));
        assert_eq!(window_bounds(3840.0), (44, 76));
    }

    fn bolted_ag(d: f64) -> ([Complex<f64>; 3], [Complex<f64>; 3]) {
        let line = LineParams::default();
        let i = [Complex::from_polar(2000.0, -1.2), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)];
        let i0 = (i[0] + i[1] + i[2]) / 3.0;
        let va = line.z1 * d * (i[0] + line.k0() * i0 * 3.0);
        let v = [va, Complex::from_polar(187e3, -2.0 * PI / 3.0), Complex::from_polar(187e3, 2.0 * PI / 3.0)];
        (v, i)
    }

    #[test]
    fn ag_loop_recovers_distance() {
        let line = LineParams::default();
        let (v, i) = bolted_ag(0.5);
        let loops = loop_impedances(v, i, line.k0()).unwrap();
        let z = loops[0].z.unwrap();
        assert!((z - line.z1 * 0.5).norm() / (line.z1 * 0.5).norm() < 1e-3);
        // b and c carry no current, so the BC loop is indeterminate.
        assert!(loops[4].z.is_none());
    }

    #[test]
    fn load_is_outside_zone() {
        let line = LineParams::default();
        let zone = ZoneQuad::default();
        let shifts = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0];
        let v = shifts.map(|s| Complex::from_polar(187e3, s));
        let i = shifts.map(|s| Complex::from_polar(400.0, s - 0.3));
        for l in loop_impedances(v, i, line.k0()).unwrap() {
            let z = l.z.unwrap();
            assert!(z.norm() >= 187e3 / 400.0 * 0.99);
            assert!(!zone1_check(z, &zone));
        }
    }

    #[test]
    fn zone_checks() {
        let line = LineParams::default();
        let q = ZoneQuad::default();
        assert!(zone1_check(line.z1 * 0.4, &q));
        assert!(!zone1_check(line.z1 * 1.2, &q));
        assert!(zone1_check(Complex::new(0.5, q.x1), &q));
        assert!(!zone1_check(Complex::new(0.5, -1.0), &q));
    }

    #[test]
    fn sweep_transitions_at_reach() {
        let line = LineParams::default();
        let q = ZoneQuad::for_line(&line, 0.8).unwrap();
        let mut prev = true;
        for k in 1..200 {
            let d = k as f64 / 200.0 * 1.2;
            let (v, i) = bolted_ag(d);
            let z = loop_impedances(v, i, line.k0()).unwrap()[0].z.unwrap();
            assert_relative_eq!(z.norm(), (line.z1 * d).norm(), max_relative = 1e-3);
            let inside = zone1_check(z, &q);
            assert!(prev || !inside, "zone membership must be monotone");
            assert_eq!(inside, d <= 0.8 + 1e-9, "d = {d}");
            prev = inside;
        }
    }

    #[test]
    fn slip_component_distorts_fixed_window() {
        let line = LineParams::default();
        let zone = ZoneQuad::default();
        let (v, i) = FaultScenario::slip_72hz().build(&line).unwrap();
        let fixed = impedance_trajectory(&v, &i, &line, &zone, FrequencyMode::Fixed(60.0), 4).unwrap();
        let tracked = impedance_trajectory(&v, &i, &line, &zone, FrequencyMode::Tracked, 4).unwrap();
        let dev = max_relative_deviation(&fixed, &tracked, LoopId::AG).unwrap();
        assert!(dev > 0.05, "deviation {dev}");
    }

    #[test]
    fn trajectory_csv() {
        let line = LineParams::default();
        let (v, i) = FaultScenario::slip_72hz().build(&line).unwrap();
        let pts = impedance_trajectory(&v, &i, &line, &ZoneQuad::default(), FrequencyMode::Fixed(60.0), 32).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,loop,re_z,im_z,in_zone\n"));
        assert_eq!(text.lines().count(), pts.len() + 1);
    }
}
