//! Phenomenological event generator.
//!
//! The model reproduces the waveform attributes a current-based relay keys
//! on: fault-current steps whose size and polarity depend on where the fault
//! sits relative to the measuring end, slip-frequency content fed by the
//! wind farm, a decaying DC offset that keeps the current continuous at
//! inception, and low-order harmonics. Non-fault events (capacitor and load
//! switching, power swings) and high-impedance faults have their own
//! signatures. It is not an electromagnetic-transient solve.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{add_noise, apply_ct_saturation, apply_sync_delay, Record3Ph};
use crate::error::{Error, Result};
use crate::Scalar;

/// Whole cycles of steady operation before the event angle is reached.
pub const PRE_EVENT_CYCLES: f64 = 4.0;
/// Cycles of post-event data a record must contain.
pub const POST_EVENT_CYCLES: f64 = 4.0;

const HIF_STEP_S: f64 = 0.002;
const PHASE_SHIFT: f64 = TAU / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Fault,
    CapacitorSwitch,
    LoadSwitch,
    HighImpedanceFault,
    PowerSwing,
    Steady,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::Fault,
        EventKind::CapacitorSwitch,
        EventKind::LoadSwitch,
        EventKind::HighImpedanceFault,
        EventKind::PowerSwing,
        EventKind::Steady,
    ];

    pub fn is_fault(self) -> bool {
        matches!(self, EventKind::Fault | EventKind::HighImpedanceFault)
    }

    pub fn name(self) -> &'static str {
        match self {
            EventKind::Fault => "fault",
            EventKind::CapacitorSwitch => "capacitor_switch",
            EventKind::LoadSwitch => "load_switch",
            EventKind::HighImpedanceFault => "high_impedance_fault",
            EventKind::PowerSwing => "power_swing",
            EventKind::Steady => "steady",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown event kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultType {
    Ag,
    Bg,
    Cg,
    Ab,
    Bc,
    Ca,
    Abg,
    Bcg,
    Cag,
    Abcg,
}

impl FaultType {
    pub const ALL: [FaultType; 10] = [
        FaultType::Ag,
        FaultType::Bg,
        FaultType::Cg,
        FaultType::Ab,
        FaultType::Bc,
        FaultType::Ca,
        FaultType::Abg,
        FaultType::Bcg,
        FaultType::Cag,
        FaultType::Abcg,
    ];

    /// Names of the seven faulted-phase sets, indexed by [`FaultType::phase_set`].
    pub const PHASE_SETS: [&'static str; 7] = ["a", "b", "c", "ab", "bc", "ca", "abc"];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FaultType::Ag => "ag",
            FaultType::Bg => "bg",
            FaultType::Cg => "cg",
            FaultType::Ab => "ab",
            FaultType::Bc => "bc",
            FaultType::Ca => "ca",
            FaultType::Abg => "abg",
            FaultType::Bcg => "bcg",
            FaultType::Cag => "cag",
            FaultType::Abcg => "abcg",
        }
    }

    /// Which phases carry fault current.
    pub fn phases(self) -> [bool; 3] {
        match self {
            FaultType::Ag => [true, false, false],
            FaultType::Bg => [false, true, false],
            FaultType::Cg => [false, false, true],
            FaultType::Ab | FaultType::Abg => [true, true, false],
            FaultType::Bc | FaultType::Bcg => [false, true, true],
            FaultType::Ca | FaultType::Cag => [true, false, true],
            FaultType::Abcg => [true, true, true],
        }
    }

    pub fn grounded(self) -> bool {
        !matches!(self, FaultType::Ab | FaultType::Bc | FaultType::Ca)
    }

    /// Index into [`FaultType::PHASE_SETS`].
    pub fn phase_set(self) -> usize {
        match self {
            FaultType::Ag => 0,
            FaultType::Bg => 1,
            FaultType::Cg => 2,
            FaultType::Ab | FaultType::Abg => 3,
            FaultType::Bc | FaultType::Bcg => 4,
            FaultType::Ca | FaultType::Cag => 5,
            FaultType::Abcg => 6,
        }
    }
}

impl fmt::Display for FaultType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaultType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        let s = if s == "acg" { "cag".to_string() } else { s };
        FaultType::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fault type {s:?}")))
    }
}

/// Coarse fault-resistance class; scales the fault-current step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResistanceClass {
    Low,
    Mid,
    High,
}

impl ResistanceClass {
    pub const ALL: [ResistanceClass; 3] = [ResistanceClass::Low, ResistanceClass::Mid, ResistanceClass::High];

    pub fn scale(self) -> f64 {
        match self {
            ResistanceClass::Low => 1.0,
            ResistanceClass::Mid => 0.6,
            ResistanceClass::High => 0.3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ResistanceClass::Low => "low",
            ResistanceClass::Mid => "mid",
            ResistanceClass::High => "high",
        }
    }
}

impl FromStr for ResistanceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ResistanceClass::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown resistance class {s:?}")))
    }
}

/// Wind-farm transformer connection. A delta winding blocks zero-sequence
/// fault current at the wind-farm end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transformer {
    Yy,
    Yd,
}

impl FromStr for Transformer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "yy" => Ok(Transformer::Yy),
            "yd" => Ok(Transformer::Yd),
            _ => Err(Error::InvalidParameter(format!("unknown transformer connection {s:?}"))),
        }
    }
}

/// Measuring end of the protected line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    /// Wind-farm end (CT_w).
    Wind,
    /// Grid end (CT_g).
    Grid,
}

/// Per-location fault-current shape seen from one end of the line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocationProfile {
    /// Fault-current step relative to nominal load current.
    pub magnitude: f64,
    /// +1 when fault current flows into the line at this end, -1 otherwise.
    pub direction: f64,
    /// Slip-frequency component relative to the fundamental fault step.
    pub off_nominal_share: f64,
    pub tau_scale: f64,
    pub harmonic_scale: f64,
    /// Lag of the fault current behind the driving voltage.
    pub angle_deg: f64,
    /// Distance from the measuring end to the fault, km.
    pub distance_km: f64,
    /// Natural frequency of the travelling-wave ringing, `v / 4d`.
    pub ringing_hz: f64,
    /// Ringing amplitude relative to the fault-current step.
    pub ringing_gain: f64,
    pub ringing_tau: f64,
}

/// Protected line length and wave speed used for the ringing model.
pub const LINE_KM: f64 = 100.0;
const WAVE_KM_S: f64 = 2.9e5;
const RINGING_MIN_HZ: f64 = 300.0;
const RINGING_MAX_HZ: f64 = 3000.0;

// Fault position along the wind-end-to-grid-end axis, km.
const POSITIONS_KM: [f64; 8] = [-60.0, -40.0, -20.0, 25.0, 75.0, 120.0, 140.0, 160.0];

// Locations 1-3 are behind the wind-farm end, 4-5 on the line, 6-8 beyond the grid end.
const WIND_PROFILES: [[f64; 6]; 8] = [
    [1.2, -1.0, 0.05, 1.6, 0.6, 84.0],
    [1.6, -1.0, 0.08, 1.4, 0.7, 84.0],
    [2.2, -1.0, 0.10, 1.2, 0.8, 83.0],
    [3.0, 1.0, 0.30, 1.0, 1.0, 82.0],
    [2.6, 1.0, 0.35, 0.9, 1.1, 81.0],
    [2.0, 1.0, 0.45, 0.8, 1.3, 80.0],
    [1.6, 1.0, 0.55, 0.7, 1.5, 78.0],
    [1.3, 1.0, 0.60, 0.6, 1.7, 76.0],
];

const GRID_PROFILES: [[f64; 6]; 8] = [
    [1.4, 1.0, 0.02, 0.70, 0.8, 86.0],
    [1.8, 1.0, 0.02, 0.75, 0.8, 86.0],
    [2.3, 1.0, 0.03, 0.80, 0.9, 85.0],
    [2.8, 1.0, 0.05, 0.90, 0.9, 85.0],
    [3.4, 1.0, 0.06, 1.00, 1.0, 84.0],
    [2.5, -1.0, 0.08, 1.30, 1.2, 83.0],
    [2.0, -1.0, 0.09, 1.50, 1.3, 82.0],
    [1.6, -1.0, 0.10, 1.70, 1.4, 81.0],
];

impl LocationProfile {
    pub fn for_location(location: u8, end: End) -> Result<Self> {
        if !(1..=8).contains(&location) {
            return Err(Error::InvalidParameter(format!("fault location {location} not in 1..=8")));
        }
        let row = match end {
            End::Wind => WIND_PROFILES[location as usize - 1],
            End::Grid => GRID_PROFILES[location as usize - 1],
        };
        let x = POSITIONS_KM[location as usize - 1];
        let (d, behind) = match end {
            End::Wind => (x.abs(), x < 0.0),
            End::Grid => ((x - LINE_KM).abs(), x > LINE_KM),
        };
        Ok(Self {
            magnitude: row[0],
            direction: row[1],
            off_nominal_share: row[2],
            tau_scale: row[3],
            harmonic_scale: row[4],
            angle_deg: row[5],
            distance_km: d,
            ringing_hz: (WAVE_KM_S / (4.0 * d)).clamp(RINGING_MIN_HZ, RINGING_MAX_HZ),
            // Waves arriving through the terminal bus or transformer behind the
            // measuring point are strongly attenuated.
            ringing_gain: if behind { 0.05 } else { 0.3 },
            ringing_tau: if behind { 0.5e-3 } else { 2e-3 },
        })
    }
}

/// Slip-frequency current component for a wind speed, `(1 - s)·f0`.
///
/// Slip is interpolated through 0.2 at 8 m/s, 0 at 9 m/s and -0.2 at 11 m/s
/// and held constant outside that range.
pub fn slip_frequency(wind_mps: f64, f0: f64) -> f64 {
    const KNOTS: [(f64, f64); 3] = [(8.0, 0.2), (9.0, 0.0), (11.0, -0.2)];
    let slip = if wind_mps <= KNOTS[0].0 {
        KNOTS[0].1
    } else if wind_mps >= KNOTS[2].0 {
        KNOTS[2].1
    } else {
        let k = if wind_mps <= KNOTS[1].0 { 0 } else { 1 };
        let (x0, y0) = KNOTS[k];
        let (x1, y1) = KNOTS[k + 1];
        y0 + (y1 - y0) * (wind_mps - x0) / (x1 - x0)
    };
    (1.0 - slip) * f0
}

/// Description of one simulated event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub kind: EventKind,
    pub fault_type: FaultType,
    /// Event angle on the phase-a reference, degrees in [0, 360).
    pub inception_angle: f64,
    pub resistance: ResistanceClass,
    /// Slip-frequency component, Hz in [42, 78].
    pub off_nominal_hz: f64,
    /// Base DC time constant, seconds; scaled per location.
    pub dc_decay_tau: f64,
    pub snr_db: Option<f64>,
    /// CT saturation knee in multiples of nominal peak current.
    pub ct_sat_level: Option<f64>,
    /// Delay applied to the grid-end record.
    pub sync_delay_ms: Option<f64>,
    /// Fault location 1..=8 (bus id for non-fault events).
    pub location: u8,
    pub transformer: Transformer,
    /// Switching magnitude multiplier for capacitor/load events.
    pub rating: f64,
    pub f0: f64,
    /// Nominal peak load current, amperes.
    pub amplitude: f64,
}

impl Default for EventSpec {
    fn default() -> Self {
        Self {
            kind: EventKind::Steady,
            fault_type: FaultType::Ag,
            inception_angle: 0.0,
            resistance: ResistanceClass::Low,
            off_nominal_hz: 60.0,
            dc_decay_tau: 0.04,
            snr_db: None,
            ct_sat_level: None,
            sync_delay_ms: None,
            location: 5,
            transformer: Transformer::Yy,
            rating: 1.0,
            f0: 60.0,
            amplitude: 1000.0,
        }
    }
}

impl EventSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0..360.0).contains(&self.inception_angle) {
            return bad(format!("inception angle {} not in [0, 360)", self.inception_angle));
        }
        if !(42.0..=78.0).contains(&self.off_nominal_hz) {
            return bad(format!("off-nominal frequency {} Hz not in [42, 78]", self.off_nominal_hz));
        }
        if !(self.dc_decay_tau > 0.0) {
            return bad(format!("dc decay tau must be positive, got {}", self.dc_decay_tau));
        }
        if !(self.f0 > 0.0) || !(self.amplitude > 0.0) || !(self.rating > 0.0) {
            return bad("f0, amplitude and rating must be positive".into());
        }
        if let Some(l) = self.ct_sat_level {
            if !(l > 0.0) {
                return bad(format!("CT saturation level must be positive, got {l}"));
            }
        }
        if let Some(d) = self.sync_delay_ms {
            if !(d >= 0.0) {
                return bad(format!("sync delay must be non-negative, got {d}"));
            }
        }
        if self.kind == EventKind::Fault {
            LocationProfile::for_location(self.location, End::Wind)?;
        }
        Ok(())
    }

    /// Absolute time of the event.
    pub fn onset_time(&self) -> f64 {
        (PRE_EVENT_CYCLES + self.inception_angle / 360.0) / self.f0
    }

    pub fn min_duration(&self) -> f64 {
        self.onset_time() + POST_EVENT_CYCLES / self.f0
    }
}

/// Event-level random parameters; drawn in a fixed order so that phases an
/// event leaves untouched are identical to the steady synthesis.
struct Draws {
    load_angle: f64,
    amp_jitter: f64,
    h3: f64,
    h5: f64,
    angle_jitter: f64,
    mag_jitter: f64,
    share_jitter: f64,
    osc_freq: f64,
    osc_tau: f64,
    osc_amp: f64,
    osc_phase: f64,
    ramp_time: f64,
    ramp_depth: f64,
    swing_freq: f64,
    swing_depth: f64,
    swing_dev: f64,
    hif_seed: u64,
    noise_seed: u64,
}

impl Draws {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            load_angle: rng.random_range(0.0..TAU),
            amp_jitter: rng.random_range(0.9..1.1),
            h3: rng.random_range(0.04..0.12),
            h5: rng.random_range(0.02..0.06),
            angle_jitter: rng.random_range(-10f64..10.0).to_radians(),
            mag_jitter: rng.random_range(0.85..1.15),
            share_jitter: rng.random_range(0.8..1.2),
            osc_freq: rng.random_range(600.0..1200.0),
            osc_tau: rng.random_range(0.002..0.006),
            osc_amp: rng.random_range(0.3..0.8),
            osc_phase: rng.random_range(0.0..TAU),
            ramp_time: rng.random_range(0.010..0.040),
            ramp_depth: rng.random_range(0.1..0.3),
            swing_freq: rng.random_range(1.0..5.0),
            swing_depth: rng.random_range(0.2..0.5),
            swing_dev: rng.random_range(0.2..0.6),
            hif_seed: rng.random(),
            noise_seed: rng.random(),
        }
    }
}

/// Synthesizes the wind-farm-end (CT_w) record of an event.
///
/// Deterministic in `(spec, fs, duration, seed)`. Noise and CT saturation
/// are applied when the spec requests them; the sync delay only affects the
/// grid-end record of [`synthesize_pair`].
pub fn synthesize<T: Scalar>(spec: &EventSpec, fs: f64, duration: f64, seed: u64) -> Result<Record3Ph<T>> {
    synthesize_end(spec, End::Wind, fs, duration, seed)
}

/// Synthesizes both line-end records `(CT_w, CT_g)` of an event.
pub fn synthesize_pair<T: Scalar>(
    spec: &EventSpec,
    fs: f64,
    duration: f64,
    seed: u64,
) -> Result<(Record3Ph<T>, Record3Ph<T>)> {
    let wind = synthesize_end(spec, End::Wind, fs, duration, seed)?;
    let mut grid = synthesize_end(spec, End::Grid, fs, duration, seed)?;
    if let Some(ms) = spec.sync_delay_ms {
        grid = apply_sync_delay(&grid, T::lit(ms))?;
    }
    Ok((wind, grid))
}

fn synthesize_end<T: Scalar>(
    spec: &EventSpec,
    end: End,
    fs: f64,
    duration: f64,
    seed: u64,
) -> Result<Record3Ph<T>> {
    spec.validate()?;
    if !(fs > 2.0 * spec.f0) {
        return Err(Error::InvalidParameter(format!("fs = {fs} Hz too low for f0 = {} Hz", spec.f0)));
    }
    if duration + 1e-12 < spec.min_duration() {
        return Err(Error::InvalidParameter(format!(
            "duration {duration} s too short: need {} s ({PRE_EVENT_CYCLES} cycles before and {POST_EVENT_CYCLES} after the event)",
            spec.min_duration()
        )));
    }
    let n = (duration * fs).round() as usize;
    let d = Draws::new(seed);
    let w0 = TAU * spec.f0;
    let amp = spec.amplitude * d.amp_jitter;
    let t_on = spec.onset_time();

    let mut phases: [Vec<f64>; 3] = std::array::from_fn(|k| {
        (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                amp * (w0 * t + d.load_angle - k as f64 * PHASE_SHIFT).sin()
            })
            .collect()
    });

    let onset_idx = (t_on * fs).ceil() as usize;
    match spec.kind {
        EventKind::Steady => {}
        EventKind::Fault => add_fault(&mut phases, spec, end, &d, amp, fs, onset_idx)?,
        EventKind::CapacitorSwitch => {
            for (k, ph) in phases.iter_mut().enumerate() {
                for (i, v) in ph.iter_mut().enumerate().skip(onset_idx) {
                    let tau = i as f64 / fs - t_on;
                    let b = amp * spec.rating * d.osc_amp;
                    *v += b
                        * (-tau / d.osc_tau).exp()
                        * (TAU * d.osc_freq * tau + d.osc_phase - k as f64 * PHASE_SHIFT).sin();
                }
            }
        }
        EventKind::LoadSwitch => {
            let depth = d.ramp_depth * spec.rating;
            for ph in phases.iter_mut() {
                for (i, v) in ph.iter_mut().enumerate().skip(onset_idx) {
                    let x = ((i as f64 / fs - t_on) / d.ramp_time).min(1.0);
                    let smooth = x * x * (3.0 - 2.0 * x);
                    *v *= 1.0 + depth * smooth;
                }
            }
        }
        EventKind::HighImpedanceFault => {
            let k = spec.fault_type.phases().iter().position(|&f| f).unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(d.hif_seed);
            let mut segment = usize::MAX;
            let mut level = 0.0;
            for (i, v) in phases[k].iter_mut().enumerate().skip(onset_idx) {
                let t = i as f64 / fs;
                let seg = ((t - t_on) / HIF_STEP_S) as usize;
                if seg != segment {
                    segment = seg;
                    level = rng.random_range(0.05..0.15);
                }
                *v += amp * level * (w0 * t - k as f64 * PHASE_SHIFT).sin();
            }
        }
        EventKind::PowerSwing => {
            for (k, ph) in phases.iter_mut().enumerate() {
                for (i, v) in ph.iter_mut().enumerate().skip(onset_idx) {
                    let t = i as f64 / fs;
                    let m = (TAU * d.swing_freq * (t - t_on)).sin();
                    *v = amp
                        * (1.0 + d.swing_depth * m)
                        * (w0 * t + d.load_angle - k as f64 * PHASE_SHIFT + d.swing_dev * m).sin();
                }
            }
        }
    }

    let [a, b, c] = phases.map(|p| p.into_iter().map(T::lit).collect::<Vec<T>>());
    let mut rec = Record3Ph::new(a, b, c, T::lit(fs), T::lit(spec.f0), T::zero())?;
    if let Some(level) = spec.ct_sat_level {
        rec = apply_ct_saturation(&rec, T::lit(level * spec.amplitude));
    }
    if let Some(snr) = spec.snr_db {
        let noise_seed = match end {
            End::Wind => d.noise_seed,
            End::Grid => d.noise_seed ^ 0x9e37_79b9_7f4a_7c15,
        };
        rec = add_noise(&rec, T::lit(snr), noise_seed)?;
    }
    Ok(rec)
}

fn add_fault(
    phases: &mut [Vec<f64>; 3],
    spec: &EventSpec,
    end: End,
    d: &Draws,
    amp: f64,
    fs: f64,
    onset_idx: usize,
) -> Result<()> {
    let prof = LocationProfile::for_location(spec.location, end)?;
    let w0 = TAU * spec.f0;
    let wo = TAU * spec.off_nominal_hz;
    let t_on = spec.onset_time();
    let gain = amp * prof.magnitude * spec.resistance.scale() * d.mag_jitter * prof.direction;
    let gamma = prof.angle_deg.to_radians() + d.angle_jitter;
    let share = prof.off_nominal_share * d.share_jitter;
    let (h3, h5) = (d.h3 * prof.harmonic_scale, d.h5 * prof.harmonic_scale);
    let tau_dc = spec.dc_decay_tau * prof.tau_scale;

    // (phase index, driving angle, sign) of each fault-current path.
    let faulted = spec.fault_type.phases();
    let paths: Vec<(usize, f64, f64)> = if spec.fault_type.grounded() {
        (0..3)
            .filter(|&k| faulted[k])
            .map(|k| (k, -(k as f64) * PHASE_SHIFT, 1.0))
            .collect()
    } else {
        let (x, y) = match spec.fault_type {
            FaultType::Ab => (0, 1),
            FaultType::Bc => (1, 2),
            _ => (2, 0),
        };
        let phi = -(x as f64) * PHASE_SHIFT + PI / 6.0;
        let s = 3f64.sqrt() / 2.0;
        vec![(x, phi, s), (y, phi, -s)]
    };

    let ac = |t: f64, phi: f64| -> f64 {
        let tau = t - t_on;
        (w0 * t + phi - gamma).sin()
            + share * (wo * tau + phi - gamma).sin()
            + h3 * (3.0 * (w0 * t + phi)).sin()
            + h5 * (5.0 * (w0 * t + phi)).sin()
    };

    // Ringing scales with the pre-fault voltage at inception; a floor keeps
    // some excitation for faults near a voltage zero.
    let ring_hz = prof.ringing_hz.min(0.4 * fs);
    let ring = |tau: f64, phi: f64| -> f64 {
        let v = (w0 * t_on + phi).sin().abs();
        prof.ringing_gain * (0.25 + 0.75 * v) * (-tau / prof.ringing_tau).exp() * (TAU * ring_hz * tau).sin()
    };

    let n = phases[0].len();
    let mut comps = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for &(k, phi, sign) in &paths {
        let at_onset = ac(t_on, phi);
        for (i, c) in comps[k].iter_mut().enumerate().skip(onset_idx) {
            let t = i as f64 / fs;
            let dc = -at_onset * (-(t - t_on) / tau_dc).exp();
            *c += sign * gain * (ac(t, phi) + dc + ring(t - t_on, phi));
        }
    }
    if end == End::Wind && spec.transformer == Transformer::Yd && spec.fault_type.grounded() {
        for i in onset_idx..n {
            let zero = (comps[0][i] + comps[1][i] + comps[2][i]) / 3.0;
            for c in comps.iter_mut() {
                c[i] -= zero;
            }
        }
    }
    for (ph, c) in phases.iter_mut().zip(comps.iter()) {
        for (v, x) in ph.iter_mut().zip(c) {
            *v += x;
        }
    }
    Ok(())
}
