//! Threshold compact model of the heater cryotron (hTron).
//!
//! The channel critical current is a measured, monotonically suppressed
//! function of the heater (gate) current. It is stored as a
//! [`CalibrationTable`] of knots and interpolated linearly between them. A
//! [`DeviceInstance`] compares the applied channel bias against the
//! interpolated critical current every timestep and walks the
//! superconducting / resistive state machine with a fixed turn-on delay and
//! thermal reset time.
//!
//! All currents are in microamps, all times in seconds and all resistances
//! in ohms.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Relative tolerance used when comparing accumulated elapsed time against
/// the turn-on delay and reset time.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("calibration table is empty")]
    EmptyTable,
    #[error("calibration knot {index}: {reason}")]
    InvalidKnot { index: usize, reason: String },
    #[error(
        "critical current is not monotone: {crit_lo} uA at i_gate = {gate_lo} uA rises to \
         {crit_hi} uA at i_gate = {gate_hi} uA"
    )]
    NonMonotone {
        gate_lo: f64,
        gate_hi: f64,
        crit_lo: f64,
        crit_hi: f64,
    },
    #[error("no switching samples recorded at i_gate = {0} uA")]
    EmptySamples(f64),
    #[error("invalid switching sample {sample} uA at i_gate = {i_gate} uA")]
    InvalidSample { i_gate: f64, sample: f64 },
    #[error("gate current {i_gate} uA lies outside the sampled range [{min}, {max}] uA")]
    OutOfRange { i_gate: f64, min: f64, max: f64 },
    #[error("negative channel bias {0} uA is not a supported operating point")]
    NegativeChannelBias(f64),
    #[error("timestep {dt} s must be positive and no larger than the turn-on delay {turn_on_delay} s")]
    InvalidTimestep { dt: f64, turn_on_delay: f64 },
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),
    #[error("invalid spread: {0}")]
    InvalidSpread(String),
    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },
}

fn csv_error(err: csv::Error) -> DeviceError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    DeviceError::Csv {
        line,
        message: err.to_string(),
    }
}

/// One calibration point: channel critical current at a given gate current.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Knot {
    #[serde(rename = "i_gate_uA")]
    pub i_gate: f64,
    #[serde(rename = "i_ch_crit_uA")]
    pub i_ch_crit: f64,
}

impl Knot {
    pub fn new(i_gate: f64, i_ch_crit: f64) -> Self {
        Self { i_gate, i_ch_crit }
    }
}

/// Monotone map from gate current to channel critical current.
///
/// Knots are strictly increasing in gate current, the critical current is
/// non-increasing and strictly positive. Queries interpolate linearly
/// between knots and clamp to the nearest knot outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    knots: Vec<Knot>,
}

impl CalibrationTable {
    pub fn new(knots: Vec<Knot>) -> Result<Self, DeviceError> {
        if knots.is_empty() {
            return Err(DeviceError::EmptyTable);
        }
        for (index, k) in knots.iter().enumerate() {
            if !k.i_gate.is_finite() || k.i_gate < 0.0 {
                return Err(DeviceError::InvalidKnot {
                    index,
                    reason: format!("gate current {} uA must be finite and >= 0", k.i_gate),
                });
            }
            if !k.i_ch_crit.is_finite() || k.i_ch_crit <= 0.0 {
                return Err(DeviceError::InvalidKnot {
                    index,
                    reason: format!("critical current {} uA must be finite and > 0", k.i_ch_crit),
                });
            }
        }
        for (index, pair) in knots.windows(2).enumerate() {
            if pair[1].i_gate <= pair[0].i_gate {
                return Err(DeviceError::InvalidKnot {
                    index: index + 1,
                    reason: format!(
                        "gate current {} uA does not increase past {} uA",
                        pair[1].i_gate, pair[0].i_gate
                    ),
                });
            }
            if pair[1].i_ch_crit > pair[0].i_ch_crit {
                return Err(DeviceError::NonMonotone {
                    gate_lo: pair[0].i_gate,
                    gate_hi: pair[1].i_gate,
                    crit_lo: pair[0].i_ch_crit,
                    crit_hi: pair[1].i_ch_crit,
                });
            }
        }
        Ok(Self { knots })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, DeviceError> {
        Self::new(pairs.iter().map(|&(g, c)| Knot::new(g, c)).collect())
    }

    /// Two-knot synthetic table passing through an anchor point.
    ///
    /// The line runs from `(0, 2·anchor_channel)` to
    /// `(1.5·anchor_gate, 0.5·anchor_channel)`, so with a channel bias equal
    /// to `anchor_channel` the device switches iff `|I_G| > anchor_gate`.
    /// This is a declared stand-in, not measured data.
    pub fn two_knot_anchor(anchor_gate: f64, anchor_channel: f64) -> Result<Self, DeviceError> {
        if !(anchor_gate > 0.0 && anchor_channel > 0.0) {
            return Err(DeviceError::InvalidKnot {
                index: 0,
                reason: format!(
                    "anchor ({anchor_gate} uA -> {anchor_channel} uA) must be strictly positive"
                ),
            });
        }
        Self::from_pairs(&[
            (0.0, 2.0 * anchor_channel),
            (1.5 * anchor_gate, 0.5 * anchor_channel),
        ])
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// Channel critical current at gate-current magnitude `i_gate`.
    pub fn critical_current(&self, i_gate: f64) -> f64 {
        interpolate(&self.knots, i_gate)
    }

    /// Smallest gate-current magnitude above which a channel biased at
    /// `i_channel` switches, i.e. `inf { g : I_ch^C(g) < i_channel }`.
    ///
    /// Returns `+inf` when the bias never exceeds the critical current and
    /// `-inf` when it always does.
    pub fn switching_gate_current(&self, i_channel: f64) -> f64 {
        let points: Vec<(f64, f64)> = self.knots.iter().map(|k| (k.i_gate, k.i_ch_crit)).collect();
        first_below(&points, i_channel)
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self, DeviceError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        check_headers(&mut rdr, &["i_gate_uA", "i_ch_crit_uA"])?;
        let mut knots = Vec::new();
        for row in rdr.deserialize::<Knot>() {
            knots.push(row.map_err(csv_error)?);
        }
        Self::new(knots)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DeviceError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["i_gate_uA", "i_ch_crit_uA"]).map_err(csv_error)?;
        for k in &self.knots {
            wtr.write_record([k.i_gate.to_string(), k.i_ch_crit.to_string()])
                .map_err(csv_error)?;
        }
        wtr.flush().map_err(|e| DeviceError::Csv {
            line: 0,
            message: e.to_string(),
        })
    }
}

fn check_headers<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), DeviceError> {
    let headers = rdr.headers().map_err(csv_error)?;
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(DeviceError::Csv {
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), found.join(",")),
        });
    }
    Ok(())
}

fn interpolate(knots: &[Knot], x: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x <= first.i_gate {
        return first.i_ch_crit;
    }
    if x >= last.i_gate {
        return last.i_ch_crit;
    }
    // first index with i_gate > x; guaranteed in 1..len
    let hi = knots.partition_point(|k| k.i_gate <= x);
    let (a, b) = (knots[hi - 1], knots[hi]);
    if a.i_gate == x {
        return a.i_ch_crit;
    }
    a.i_ch_crit + (x - a.i_gate) * (b.i_ch_crit - a.i_ch_crit) / (b.i_gate - a.i_gate)
}

/// `inf { x : f(x) < level }` for the clamped piecewise-linear function
/// through `points` (sorted by x). Works for non-monotone data.
pub(crate) fn first_below(points: &[(f64, f64)], level: f64) -> f64 {
    let Some(j) = points.iter().position(|&(_, y)| y < level) else {
        return f64::INFINITY;
    };
    if j == 0 {
        return f64::NEG_INFINITY;
    }
    let (x0, y0) = points[j - 1];
    let (x1, y1) = points[j];
    x0 + (y0 - level) * (x1 - x0) / (y0 - y1)
}

/// `sup { x : f(x) >= level }` for the clamped piecewise-linear function
/// through `points` (sorted by x). Works for non-monotone data.
pub(crate) fn last_at_or_above(points: &[(f64, f64)], level: f64) -> f64 {
    let Some(j) = points.iter().rposition(|&(_, y)| y >= level) else {
        return f64::NEG_INFINITY;
    };
    if j == points.len() - 1 {
        return f64::INFINITY;
    }
    let (x0, y0) = points[j];
    let (x1, y1) = points[j + 1];
    x0 + (y0 - level) * (x1 - x0) / (y0 - y1)
}

/// Median with the even-count rule: mean of the two central values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Raw switching currents recorded at one gate current.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub i_gate: f64,
    pub samples: Vec<f64>,
}

/// Repeated channel-switching measurements, grouped by gate current.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSampleSet {
    points: Vec<SamplePoint>,
}

#[derive(serde::Deserialize)]
struct SampleRow {
    #[serde(rename = "i_gate_uA")]
    i_gate: f64,
    #[serde(rename = "sample_uA")]
    sample: f64,
}

impl SwitchingSampleSet {
    /// Groups are sorted by gate current and samples within a group
    /// ascending.
    pub fn new(mut points: Vec<SamplePoint>) -> Result<Self, DeviceError> {
        points.sort_by(|a, b| a.i_gate.total_cmp(&b.i_gate));
        for p in &mut points {
            p.samples.sort_by(f64::total_cmp);
        }
        for p in &points {
            if !p.i_gate.is_finite() || p.i_gate < 0.0 {
                return Err(DeviceError::InvalidKnot {
                    index: 0,
                    reason: format!("gate current {} uA must be finite and >= 0", p.i_gate),
                });
            }
            if p.samples.is_empty() {
                return Err(DeviceError::EmptySamples(p.i_gate));
            }
            if let Some(&bad) = p.samples.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
                return Err(DeviceError::InvalidSample {
                    i_gate: p.i_gate,
                    sample: bad,
                });
            }
        }
        if let Some(pair) = points.windows(2).find(|w| w[0].i_gate == w[1].i_gate) {
            return Err(DeviceError::InvalidKnot {
                index: 0,
                reason: format!("duplicate sample group at {} uA", pair[0].i_gate),
            });
        }
        if points.is_empty() {
            return Err(DeviceError::EmptyTable);
        }
        Ok(Self { points })
    }

    /// Groups `(i_gate, sample)` rows by exact gate current.
    pub fn from_rows<I: IntoIterator<Item = (f64, f64)>>(rows: I) -> Result<Self, DeviceError> {
        let mut points: Vec<SamplePoint> = Vec::new();
        for (i_gate, sample) in rows {
            match points.iter_mut().find(|p| p.i_gate == i_gate) {
                Some(p) => p.samples.push(sample),
                None => points.push(SamplePoint {
                    i_gate,
                    samples: vec![sample],
                }),
            }
        }
        Self::new(points)
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self, DeviceError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        check_headers(&mut rdr, &["i_gate_uA", "sample_uA"])?;
        let mut rows = Vec::new();
        for row in rdr.deserialize::<SampleRow>() {
            let row = row.map_err(csv_error)?;
            rows.push((row.i_gate, row.sample));
        }
        Self::from_rows(rows)
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn gate_range(&self) -> (f64, f64) {
        (self.points[0].i_gate, self.points[self.points.len() - 1].i_gate)
    }

    /// Per-point medians as a calibration table.
    pub fn calibrate(&self) -> Result<CalibrationTable, DeviceError> {
        let knots = self
            .points
            .iter()
            .map(|p| Knot::new(p.i_gate, median(&p.samples).expect("validated non-empty")))
            .collect();
        CalibrationTable::new(knots)
    }

    /// Empirical quantile `u` in `[0, 1]` of the samples at `i_gate`,
    /// interpolating between order statistics and then linearly between the
    /// two bracketing gate currents. Quantile 0.5 reproduces the median
    /// table and quantiles 0 and 1 the min/max envelopes. Errors outside the
    /// sampled gate range.
    pub fn quantile(&self, i_gate: f64, u: f64) -> Result<f64, DeviceError> {
        let (min, max) = self.gate_range();
        if !(i_gate >= min && i_gate <= max) {
            return Err(DeviceError::OutOfRange { i_gate, min, max });
        }
        let hi = self.points.partition_point(|p| p.i_gate < i_gate).min(self.points.len() - 1);
        let b = &self.points[hi];
        if hi == 0 || b.i_gate == i_gate {
            return Ok(sorted_quantile(&b.samples, u));
        }
        let a = &self.points[hi - 1];
        let (qa, qb) = (sorted_quantile(&a.samples, u), sorted_quantile(&b.samples, u));
        Ok(qa + (qb - qa) * (i_gate - a.i_gate) / (b.i_gate - a.i_gate))
    }

    /// Draw at a uniformly random quantile, shared by both bracketing
    /// sample groups.
    pub fn draw<R: Rng + ?Sized>(&self, i_gate: f64, rng: &mut R) -> Result<f64, DeviceError> {
        let u: f64 = rng.random();
        self.quantile(i_gate, u)
    }
}

fn sorted_quantile(sorted: &[f64], u: f64) -> f64 {
    let pos = u.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let k = (pos.floor() as usize).min(sorted.len() - 1);
    match sorted.get(k + 1) {
        Some(&next) => sorted[k] + (next - sorted[k]) * (pos - k as f64),
        None => sorted[k],
    }
}

/// Calibrate a table from raw measurements (per-point median).
pub fn calibrate_from_measurements(samples: &SwitchingSampleSet) -> Result<CalibrationTable, DeviceError> {
    samples.calibrate()
}

/// One reproducible draw of the channel critical current at `i_gate`.
pub fn sample_critical_current(
    samples: &SwitchingSampleSet,
    i_gate: f64,
    seed: u64,
) -> Result<f64, DeviceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples.draw(i_gate, &mut rng)
}

type Point = (f64, f64);

/// Parametric spread of the critical current around the calibrated median.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spread {
    None,
    /// Uniform on `[median - half_width, median + half_width]`.
    Uniform { half_width: f64 },
    /// Gaussian with standard deviation `sigma`. Its worst-case band is
    /// taken as `±3σ`.
    Normal { sigma: f64 },
}

impl Spread {
    pub const NORMAL_BAND_SIGMAS: f64 = 3.0;

    fn validate(self) -> Result<Self, DeviceError> {
        match self {
            Spread::Uniform { half_width: w } if !(w.is_finite() && w >= 0.0) => {
                Err(DeviceError::InvalidSpread(format!("half width {w} uA")))
            }
            Spread::Normal { sigma } if !(sigma.is_finite() && sigma >= 0.0) => {
                Err(DeviceError::InvalidSpread(format!("sigma {sigma} uA")))
            }
            s => Ok(s),
        }
    }

    fn half_band(self) -> f64 {
        match self {
            Spread::None => 0.0,
            Spread::Uniform { half_width } => half_width,
            Spread::Normal { sigma } => Self::NORMAL_BAND_SIGMAS * sigma,
        }
    }
}

/// Source of random critical-current realizations, either the raw measured
/// distribution or a parametric spread around a calibration table.
#[derive(Debug, Clone)]
pub enum CriticalCurrentModel {
    Empirical {
        samples: SwitchingSampleSet,
        nominal: CalibrationTable,
    },
    Parametric {
        table: CalibrationTable,
        spread: Spread,
    },
}

impl CriticalCurrentModel {
    pub fn empirical(samples: SwitchingSampleSet) -> Result<Self, DeviceError> {
        let nominal = samples.calibrate()?;
        Ok(Self::Empirical { samples, nominal })
    }

    pub fn parametric(table: CalibrationTable, spread: Spread) -> Result<Self, DeviceError> {
        Ok(Self::Parametric {
            table,
            spread: spread.validate()?,
        })
    }

    /// Median (nominal) calibration table.
    pub fn nominal(&self) -> &CalibrationTable {
        match self {
            Self::Empirical { nominal, .. } => nominal,
            Self::Parametric { table, .. } => table,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, i_gate: f64, rng: &mut R) -> Result<f64, DeviceError> {
        match self {
            Self::Empirical { samples, .. } => samples.draw(i_gate, rng),
            Self::Parametric { table, spread } => {
                let median = table.critical_current(i_gate);
                Ok(match *spread {
                    Spread::None => median,
                    Spread::Uniform { half_width } => {
                        let u: f64 = rng.random();
                        median + half_width * (2.0 * u - 1.0)
                    }
                    Spread::Normal { sigma } => {
                        let z: f64 = StandardNormal.sample(rng);
                        median + sigma * z
                    }
                })
            }
        }
    }

    /// Lower and upper envelopes of the critical current as knot lists.
    fn envelopes(&self) -> (Vec<Point>, Vec<Point>) {
        match self {
            Self::Empirical { samples, .. } => samples
                .points()
                .iter()
                .map(|p| {
                    let lo = p.samples.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = p.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    ((p.i_gate, lo), (p.i_gate, hi))
                })
                .unzip(),
            Self::Parametric { table, spread } => {
                let w = spread.half_band();
                table
                    .knots()
                    .iter()
                    .map(|k| ((k.i_gate, k.i_ch_crit - w), (k.i_gate, k.i_ch_crit + w)))
                    .unzip()
            }
        }
    }

    /// Gate-current band `(g_lo, g_hi)` for a channel bias `i_channel`:
    /// below or at `g_lo` no realization switches, above `g_hi` every
    /// realization switches.
    pub fn switching_band(&self, i_channel: f64) -> (f64, f64) {
        let (lower, upper) = self.envelopes();
        (first_below(&lower, i_channel), last_at_or_above(&upper, i_channel))
    }
}

/// Static device parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Seconds from trigger to fully resistive channel.
    pub turn_on_delay: f64,
    /// Seconds of thermal recovery after the trigger is removed.
    pub reset_time: f64,
    /// Channel normal-state resistance, ohms.
    pub r_normal: f64,
    /// Heater input impedance, ohms.
    pub r_gate: f64,
    /// Kelvin; informational.
    pub critical_temperature: f64,
    /// Kelvin; informational.
    pub operating_temperature: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            turn_on_delay: 300e-12,
            reset_time: 15e-9,
            r_normal: 100e3,
            r_gate: 1e3,
            critical_temperature: 3.5,
            operating_temperature: 0.9,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let fields = [
            ("turn_on_delay", self.turn_on_delay),
            ("reset_time", self.reset_time),
            ("r_normal", self.r_normal),
            ("r_gate", self.r_gate),
            ("critical_temperature", self.critical_temperature),
            ("operating_temperature", self.operating_temperature),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(DeviceError::InvalidParams(format!("{name} = {v} must be positive")));
        }
        if self.turn_on_delay >= self.reset_time {
            return Err(DeviceError::InvalidParams(format!(
                "turn_on_delay {} s must be shorter than reset_time {} s",
                self.turn_on_delay, self.reset_time
            )));
        }
        if self.r_normal < 10.0 * self.r_gate {
            return Err(DeviceError::InvalidParams(format!(
                "r_normal {} ohm must be at least 10x r_gate {} ohm",
                self.r_normal, self.r_gate
            )));
        }
        Ok(())
    }

    pub fn check_timestep(&self, dt: f64) -> Result<(), DeviceError> {
        if !(dt.is_finite() && dt > 0.0 && dt <= self.turn_on_delay * (1.0 + TIME_EPS)) {
            return Err(DeviceError::InvalidTimestep {
                dt,
                turn_on_delay: self.turn_on_delay,
            });
        }
        Ok(())
    }

    /// Number of timesteps a transition of length `duration` takes.
    pub fn steps_for(duration: f64, dt: f64) -> usize {
        (duration / dt - TIME_EPS).ceil().max(1.0) as usize
    }
}

/// Channel phase, with elapsed time for the two transitional phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceState {
    Superconducting,
    SwitchingOn { elapsed: f64 },
    Resistive,
    Resetting { elapsed: f64 },
}

impl DeviceState {
    /// Whether the channel steers its bias into the load. The transitional
    /// phases keep the electrical behavior of the phase they started from.
    pub fn steers_to_load(self) -> bool {
        matches!(self, DeviceState::Resistive | DeviceState::Resetting { .. })
    }

    pub fn label(self) -> &'static str {
        match self {
            DeviceState::Superconducting => "SC",
            DeviceState::SwitchingOn { .. } => "ON",
            DeviceState::Resistive => "R",
            DeviceState::Resetting { .. } => "RST",
        }
    }
}

/// Outcome of one timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub state: DeviceState,
    pub i_channel: f64,
    pub i_load: f64,
    /// The trigger reasserted while the channel was still resetting.
    pub reset_violation: bool,
}

/// One hTron with its load, calibration and dynamic state.
#[derive(Debug, Clone)]
pub struct DeviceInstance {
    params: DeviceParams,
    table: Arc<CalibrationTable>,
    r_load: f64,
    state: DeviceState,
}

impl DeviceInstance {
    pub fn new(
        params: DeviceParams,
        table: Arc<CalibrationTable>,
        r_load: f64,
    ) -> Result<Self, DeviceError> {
        params.validate()?;
        if !(r_load.is_finite() && r_load > 0.0) {
            return Err(DeviceError::InvalidParams(format!("r_load = {r_load} must be positive")));
        }
        Ok(Self {
            params,
            table,
            r_load,
            state: DeviceState::Superconducting,
        })
    }

    pub fn state(&self) -> DeviceState {
        self.state
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn r_load(&self) -> f64 {
        self.r_load
    }

    /// Steady-state switching condition: strict `i_channel_bias > I_ch^C(|I_G|)`.
    pub fn triggered(&self, i_gate_total: f64, i_channel_bias: f64) -> bool {
        i_channel_bias > self.table.critical_current(i_gate_total.abs())
    }

    /// `(i_channel, i_load)` for the current phase.
    pub fn steering(&self, i_channel_bias: f64) -> (f64, f64) {
        if self.state.steers_to_load() {
            let i_load = i_channel_bias * self.params.r_normal / (self.params.r_normal + self.r_load);
            (i_channel_bias - i_load, i_load)
        } else {
            (i_channel_bias, 0.0)
        }
    }

    /// Advance the device by `dt` with the given gate and channel currents
    /// held constant over the step.
    pub fn step(
        &mut self,
        i_gate_total: f64,
        i_channel_bias: f64,
        dt: f64,
    ) -> Result<StepOutput, DeviceError> {
        if i_channel_bias < 0.0 || !i_channel_bias.is_finite() {
            return Err(DeviceError::NegativeChannelBias(i_channel_bias));
        }
        self.params.check_timestep(dt)?;
        let on = self.triggered(i_gate_total, i_channel_bias);
        let done = |elapsed: f64, limit: f64| elapsed >= limit * (1.0 - TIME_EPS);
        let mut reset_violation = false;
        self.state = match (self.state, on) {
            (DeviceState::Superconducting, false) => DeviceState::Superconducting,
            (DeviceState::Superconducting, true) => {
                if done(dt, self.params.turn_on_delay) {
                    DeviceState::Resistive
                } else {
                    DeviceState::SwitchingOn { elapsed: dt }
                }
            }
            (DeviceState::SwitchingOn { elapsed }, true) => {
                let elapsed = elapsed + dt;
                if done(elapsed, self.params.turn_on_delay) {
                    DeviceState::Resistive
                } else {
                    DeviceState::SwitchingOn { elapsed }
                }
            }
            (DeviceState::SwitchingOn { .. }, false) => DeviceState::Superconducting,
            (DeviceState::Resistive, true) => DeviceState::Resistive,
            (DeviceState::Resistive, false) => {
                if done(dt, self.params.reset_time) {
                    DeviceState::Superconducting
                } else {
                    DeviceState::Resetting { elapsed: dt }
                }
            }
            (DeviceState::Resetting { elapsed }, false) => {
                let elapsed = elapsed + dt;
                if done(elapsed, self.params.reset_time) {
                    DeviceState::Superconducting
                } else {
                    DeviceState::Resetting { elapsed }
                }
            }
            (DeviceState::Resetting { .. }, true) => {
                reset_violation = true;
                DeviceState::Resistive
            }
        };
        let (i_channel, i_load) = self.steering(i_channel_bias);
        Ok(StepOutput {
            state: self.state,
            i_channel,
            i_load,
            reset_violation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchored() -> CalibrationTable {
        CalibrationTable::from_pairs(&[(0.0, 110.0), (90.0, 60.0), (110.0, 55.0), (135.0, 30.0)]).unwrap()
    }

    fn device() -> DeviceInstance {
        DeviceInstance::new(DeviceParams::default(), Arc::new(anchored()), 1e3).unwrap()
    }

    #[test]
    fn anchor_point_is_exact() {
        assert_eq!(anchored().critical_current(110.0), 55.0);
        let synth = CalibrationTable::two_knot_anchor(110.0, 55.0).unwrap();
        assert_eq!(synth.critical_current(110.0), 55.0);
        assert_eq!(synth.switching_gate_current(55.0), 110.0);
    }

    #[test]
    fn interpolation_and_clamping() {
        let t = CalibrationTable::from_pairs(&[(90.0, 60.0), (110.0, 55.0)]).unwrap();
        assert_eq!(t.critical_current(100.0), 57.5);
        assert_eq!(t.critical_current(90.0), 60.0);
        assert_eq!(t.critical_current(0.0), 60.0);
        assert_eq!(t.critical_current(500.0), 55.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert_eq!(CalibrationTable::new(vec![]), Err(DeviceError::EmptyTable));
        assert!(matches!(
            CalibrationTable::from_pairs(&[(10.0, 50.0), (20.0, 60.0)]),
            Err(DeviceError::NonMonotone { .. })
        ));
        assert!(CalibrationTable::from_pairs(&[(10.0, 50.0), (10.0, 40.0)]).is_err());
        assert!(CalibrationTable::from_pairs(&[(10.0, 0.0)]).is_err());
        assert!(CalibrationTable::from_pairs(&[(-1.0, 5.0)]).is_err());
    }

    #[test]
    fn switching_gate_current_edges() {
        let t = anchored();
        assert_eq!(t.switching_gate_current(55.0), 110.0);
        assert_eq!(t.switching_gate_current(57.5), 100.0);
        assert_eq!(t.switching_gate_current(10.0), f64::INFINITY);
        assert_eq!(t.switching_gate_current(200.0), f64::NEG_INFINITY);
    }

    #[test]
    fn median_rules() {
        assert_eq!(median(&[54.0, 56.0]), Some(55.0));
        assert_eq!(median(&[3.0]), Some(3.0));
        assert_eq!(median(&[5.0, 1.0, 3.0]), Some(3.0));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn calibration_from_samples() {
        let set = SwitchingSampleSet::from_rows([(110.0, 54.0), (110.0, 56.0), (60.0, 80.0)]).unwrap();
        let t = calibrate_from_measurements(&set).unwrap();
        assert_eq!(t.knots(), &[Knot::new(60.0, 80.0), Knot::new(110.0, 55.0)]);
    }

    #[test]
    fn calibration_names_non_monotone_pair() {
        let set = SwitchingSampleSet::from_rows([(50.0, 40.0), (70.0, 45.0)]).unwrap();
        match set.calibrate() {
            Err(DeviceError::NonMonotone { gate_lo, gate_hi, .. }) => {
                assert_eq!((gate_lo, gate_hi), (50.0, 70.0));
            }
            other => panic!("expected non-monotone error, got {other:?}"),
        }
    }

    #[test]
    fn sample_draws() {
        let set = SwitchingSampleSet::from_rows((0..20).map(|_| (100.0, 42.0))).unwrap();
        for seed in 0..10 {
            assert_eq!(sample_critical_current(&set, 100.0, seed).unwrap(), 42.0);
        }
        let set = SwitchingSampleSet::from_rows((0..20).map(|i| (100.0, 40.0 + i as f64))).unwrap();
        assert_eq!(
            sample_critical_current(&set, 100.0, 9).unwrap(),
            sample_critical_current(&set, 100.0, 9).unwrap()
        );
        assert!(matches!(
            sample_critical_current(&set, 120.0, 0),
            Err(DeviceError::OutOfRange { .. })
        ));
    }

    #[test]
    fn quantiles_interpolate_between_groups() {
        let rows = [(10.0, 88.0), (10.0, 92.0), (10.0, 90.0), (20.0, 80.0), (40.0, 60.0), (40.0, 64.0)];
        let set = SwitchingSampleSet::from_rows(rows).unwrap();
        assert_eq!(set.quantile(10.0, 0.0).unwrap(), 88.0);
        assert_eq!(set.quantile(10.0, 0.5).unwrap(), 90.0);
        assert_eq!(set.quantile(10.0, 0.75).unwrap(), 91.0);
        assert_eq!(set.quantile(15.0, 0.5).unwrap(), 85.0);
        assert_eq!(set.quantile(30.0, 1.0).unwrap(), 72.0);
        assert_eq!(set.quantile(40.0, 0.5).unwrap(), 62.0);
        let table = set.calibrate().unwrap();
        for g in [10.0, 12.5, 20.0, 33.0, 40.0] {
            assert!((set.quantile(g, 0.5).unwrap() - table.critical_current(g)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_and_header_check() {
        let text = "i_gate_uA,i_ch_crit_uA\n0,110\n110,55\n165,27.5\n";
        let t = CalibrationTable::from_csv(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
        let err = CalibrationTable::from_csv("gate,crit\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, DeviceError::Csv { line: 1, .. }));
        let err = CalibrationTable::from_csv("i_gate_uA,i_ch_crit_uA\n1,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, DeviceError::Csv { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn paper_operating_points() {
        // 65 uA on the gate leaves the channel superconducting.
        let mut d = device();
        for _ in 0..400 {
            let out = d.step(65.0, 55.0, 50e-12).unwrap();
            assert_eq!(out.state, DeviceState::Superconducting);
            assert_eq!(out.i_load, 0.0);
        }
        // 120 uA switches after 300 ps.
        let mut d = device();
        for k in 1..=6 {
            let out = d.step(120.0, 55.0, 50e-12).unwrap();
            if k < 6 {
                assert!(matches!(out.state, DeviceState::SwitchingOn { .. }));
                assert_eq!(out.i_load, 0.0);
            } else {
                assert_eq!(out.state, DeviceState::Resistive);
                assert!((out.i_load - 55.0).abs() < 1.0);
            }
        }
        // Removing the gate current resets only after 15 ns.
        for k in 1..=300 {
            let out = d.step(0.0, 55.0, 50e-12).unwrap();
            if k < 300 {
                assert!(matches!(out.state, DeviceState::Resetting { .. }), "step {k}");
                assert!(out.i_load > 50.0);
            } else {
                assert_eq!(out.state, DeviceState::Superconducting);
            }
        }
    }

    #[test]
    fn step_errors() {
        let mut d = device();
        assert!(matches!(d.step(0.0, -1.0, 50e-12), Err(DeviceError::NegativeChannelBias(_))));
        assert!(matches!(d.step(0.0, 55.0, 301e-12), Err(DeviceError::InvalidTimestep { .. })));
        assert!(matches!(d.step(0.0, 55.0, 0.0), Err(DeviceError::InvalidTimestep { .. })));
        assert!(d.step(0.0, 55.0, 300e-12).is_ok());
    }

    #[test]
    fn reset_violation_aborts_back() {
        let mut d = device();
        for _ in 0..6 {
            d.step(120.0, 55.0, 50e-12).unwrap();
        }
        d.step(0.0, 55.0, 50e-12).unwrap();
        let out = d.step(120.0, 55.0, 50e-12).unwrap();
        assert!(out.reset_violation);
        assert_eq!(out.state, DeviceState::Resistive);
    }

    #[test]
    fn params_validation() {
        assert!(DeviceParams::default().validate().is_ok());
        let p = DeviceParams {
            turn_on_delay: 20e-9,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = DeviceParams {
            r_normal: 2e3,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn switching_band_collapses_without_spread() {
        let m = CriticalCurrentModel::parametric(anchored(), Spread::None).unwrap();
        assert_eq!(m.switching_band(55.0), (110.0, 110.0));
        let m = CriticalCurrentModel::parametric(anchored(), Spread::Uniform { half_width: 5.0 }).unwrap();
        let (lo, hi) = m.switching_band(55.0);
        assert!(lo < 110.0 && hi > 110.0);
    }
}
