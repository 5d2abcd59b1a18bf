//! Bias-configured logic on a single hTron cell.
//!
//! Every gate is the same three-input cell: the input currents and the gate
//! bias `i_b1` add up on the heater, and the channel (biased at `i_b2`)
//! switches iff its critical current at that total drops below `i_b2`.
//! Choosing `i_b1` selects the logic function.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::device::CalibrationTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("unknown gate kind `{0}` (expected COPY, NOT, AND2, OR2 or MAJ3)")]
    UnknownKind(String),
    #[error("invalid logic encoding: {0}")]
    InvalidEncoding(String),
    #[error("invalid bias: {0}")]
    InvalidBias(String),
    #[error("empty sweep: lo = {lo}, hi = {hi}, step = {step}")]
    EmptySweep { lo: f64, hi: f64, step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Copy,
    Not,
    And2,
    Or2,
    Maj3,
}

impl GateKind {
    pub const ALL: [GateKind; 5] = [
        GateKind::Copy,
        GateKind::Not,
        GateKind::And2,
        GateKind::Or2,
        GateKind::Maj3,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Copy | GateKind::Not => 1,
            GateKind::And2 | GateKind::Or2 => 2,
            GateKind::Maj3 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Copy => "COPY",
            GateKind::Not => "NOT",
            GateKind::And2 => "AND2",
            GateKind::Or2 => "OR2",
            GateKind::Maj3 => "MAJ3",
        }
    }

    /// The ideal Boolean function.
    pub fn eval(self, inputs: &[bool]) -> bool {
        debug_assert_eq!(inputs.len(), self.arity());
        let ones = inputs.iter().filter(|&&b| b).count();
        match self {
            GateKind::Copy => inputs[0],
            GateKind::Not => !inputs[0],
            GateKind::And2 => ones == 2,
            GateKind::Or2 => ones >= 1,
            GateKind::Maj3 => ones >= 2,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "COPY" => Ok(GateKind::Copy),
            "NOT" => Ok(GateKind::Not),
            "AND2" | "AND" => Ok(GateKind::And2),
            "OR2" | "OR" => Ok(GateKind::Or2),
            "MAJ3" | "MAJ" => Ok(GateKind::Maj3),
            _ => Err(GateError::UnknownKind(s.to_string())),
        }
    }
}

/// Current levels used for the two logic values on signal nets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicEncoding {
    pub i_zero: f64,
    pub i_one: f64,
    /// A net carrying at least this current reads as '1'.
    pub detect_threshold: f64,
}

impl Default for LogicEncoding {
    fn default() -> Self {
        Self {
            i_zero: 0.0,
            i_one: 55.0,
            detect_threshold: 27.5,
        }
    }
}

impl LogicEncoding {
    /// Encoding with the detect threshold at the midpoint of the two levels.
    pub fn new(i_zero: f64, i_one: f64) -> Result<Self, GateError> {
        Self::with_threshold(i_zero, i_one, 0.5 * (i_zero + i_one))
    }

    pub fn with_threshold(i_zero: f64, i_one: f64, detect_threshold: f64) -> Result<Self, GateError> {
        if !(i_zero < detect_threshold && detect_threshold < i_one) {
            return Err(GateError::InvalidEncoding(format!(
                "need i_zero < detect_threshold < i_one, got {i_zero} / {detect_threshold} / {i_one}"
            )));
        }
        Ok(Self {
            i_zero,
            i_one,
            detect_threshold,
        })
    }

    pub fn current(&self, bit: bool) -> f64 {
        if bit {
            self.i_one
        } else {
            self.i_zero
        }
    }

    pub fn read(&self, current: f64) -> bool {
        current >= self.detect_threshold
    }
}

/// Bias point of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasConfig {
    pub kind: GateKind,
    /// Heater bias added to the input currents (signed), uA.
    pub i_b1: f64,
    /// Channel bias, uA.
    pub i_b2: f64,
    /// Load resistor, ohms.
    pub r_load: f64,
}

pub const DEFAULT_CHANNEL_BIAS: f64 = 55.0;
pub const DEFAULT_LOAD: f64 = 1e3;

impl BiasConfig {
    pub fn new(kind: GateKind, i_b1: f64, i_b2: f64, r_load: f64) -> Result<Self, GateError> {
        let bias = Self {
            kind,
            i_b1,
            i_b2,
            r_load,
        };
        bias.validate()?;
        Ok(bias)
    }

    pub fn validate(&self) -> Result<(), GateError> {
        if !self.i_b1.is_finite() {
            return Err(GateError::InvalidBias(format!("i_b1 = {}", self.i_b1)));
        }
        if !(self.i_b2.is_finite() && self.i_b2 > 0.0) {
            return Err(GateError::InvalidBias(format!("i_b2 = {} must be > 0", self.i_b2)));
        }
        if !(self.r_load.is_finite() && self.r_load > 0.0) {
            return Err(GateError::InvalidBias(format!("r_load = {} must be > 0", self.r_load)));
        }
        Ok(())
    }

    pub fn with_i_b1(self, i_b1: f64) -> Self {
        Self { i_b1, ..self }
    }

    /// Heater current for the given input bits.
    pub fn gate_current(&self, inputs: &[bool], enc: &LogicEncoding) -> f64 {
        self.i_b1 + inputs.iter().map(|&b| enc.current(b)).sum::<f64>()
    }

    /// Steady-state output for a total heater current.
    pub fn switches(&self, i_gate_total: f64, table: &CalibrationTable) -> bool {
        self.i_b2 > table.critical_current(i_gate_total.abs())
    }
}

/// Nominal bias point for each kind.
///
/// NOT uses `i_b1 = -120 uA`: a '1' input then leaves `-65 uA` on the heater,
/// below the switching magnitude, while a '0' input leaves `|-120| > 110`.
pub fn bias_for(kind: GateKind) -> BiasConfig {
    let i_b1 = match kind {
        GateKind::Copy => 65.0,
        GateKind::Not => -120.0,
        GateKind::And2 => 10.0,
        GateKind::Or2 => 65.0,
        GateKind::Maj3 => 10.0,
    };
    BiasConfig {
        kind,
        i_b1,
        i_b2: DEFAULT_CHANNEL_BIAS,
        r_load: DEFAULT_LOAD,
    }
}

/// All input combinations for `arity` inputs in canonical order: row `k`
/// has input `j` equal to bit `arity - 1 - j` of `k` (first input is the
/// most significant).
pub fn input_rows(arity: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1usize << arity).map(move |k| (0..arity).map(|j| (k >> (arity - 1 - j)) & 1 == 1).collect())
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthRow {
    pub inputs: Vec<bool>,
    pub output: bool,
}

/// Steady-state truth table of a biased cell (timing ignored).
pub fn truth_table(bias: &BiasConfig, table: &CalibrationTable, enc: &LogicEncoding) -> Vec<TruthRow> {
    input_rows(bias.kind.arity())
        .map(|inputs| {
            let output = bias.switches(bias.gate_current(&inputs, enc), table);
            TruthRow { inputs, output }
        })
        .collect()
}

/// Whether the biased cell realizes its kind's ideal function on every row.
pub fn realizes(bias: &BiasConfig, table: &CalibrationTable, enc: &LogicEncoding) -> bool {
    input_rows(bias.kind.arity()).all(|inputs| {
        bias.switches(bias.gate_current(&inputs, enc), table) == bias.kind.eval(&inputs)
    })
}

pub fn truth_table_csv(rows: &[TruthRow]) -> String {
    let mut out = String::from("inputs,output\n");
    for r in rows {
        out.push_str(&format!("{},{}\n", bits_to_string(&r.inputs), u8::from(r.output)));
    }
    out
}

/// Grid of `i_b1` values: `lo, lo + step, ...` up to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            lo: -200.0,
            hi: 200.0,
            step: 1.0,
        }
    }
}

impl Sweep {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, GateError> {
        let sweep = Self { lo, hi, step };
        sweep.points()?;
        Ok(sweep)
    }

    pub fn points(&self) -> Result<Vec<f64>, GateError> {
        let ok = self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite();
        if !ok || self.step <= 0.0 || self.hi < self.lo {
            return Err(GateError::EmptySweep {
                lo: self.lo,
                hi: self.hi,
                step: self.step,
            });
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| self.lo + k as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn contains_strictly(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Set of `i_b1` values for which a cell realizes its function.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasWindow {
    pub kind: GateKind,
    pub intervals: Vec<Interval>,
}

impl BiasWindow {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, i_b1: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(i_b1))
    }

    pub fn contains_strictly(&self, i_b1: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains_strictly(i_b1))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,lo,hi,lo_closed,hi_closed\n");
        for iv in &self.intervals {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.kind, iv.lo, iv.hi, iv.lo_closed, iv.hi_closed
            ));
        }
        out
    }
}

/// Sweeps `i_b1` over the grid and merges in-window grid points into
/// intervals. Interior interval edges are then snapped to the exact bias at
/// which some input row crosses the switching threshold, so endpoints and
/// their open/closed flags are exact rather than grid-quantized.
pub fn bias_window(
    kind: GateKind,
    table: &CalibrationTable,
    enc: &LogicEncoding,
    sweep: &Sweep,
) -> Result<BiasWindow, GateError> {
    let nominal = bias_for(kind);
    let grid = sweep.points()?;
    let ok = |x: f64| realizes(&nominal.with_i_b1(x), table, enc);
    let flags: Vec<bool> = grid.iter().map(|&x| ok(x)).collect();

    let g_switch = table.switching_gate_current(nominal.i_b2);
    let arity = kind.arity();
    let mut breakpoints: Vec<f64> = Vec::new();
    if g_switch.is_finite() {
        for ones in 0..=arity {
            let s = ones as f64 * enc.i_one + (arity - ones) as f64 * enc.i_zero;
            breakpoints.push(g_switch - s);
            breakpoints.push(-g_switch - s);
        }
    }
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let mut intervals = Vec::new();
    let mut k = 0;
    while k < grid.len() {
        if !flags[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < grid.len() && flags[k + 1] {
            k += 1;
        }
        let end = k;
        let (lo, lo_closed) = if start == 0 {
            (grid[0], true)
        } else {
            refine_edge(grid[start - 1], grid[start], &breakpoints, &ok, false)
        };
        let (hi, hi_closed) = if end == grid.len() - 1 {
            (grid[end], true)
        } else {
            refine_edge(grid[end], grid[end + 1], &breakpoints, &ok, true)
        };
        intervals.push(Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        });
        k += 1;
    }
    Ok(BiasWindow { kind, intervals })
}

/// Locates the window edge between two adjacent grid points, one in-window
/// and one not. For an upper edge `inside = a` and `outside = b`; for a lower
/// edge `outside = a` and `inside = b`. Walks from the inside point through
/// the breakpoints toward the outside point.
fn refine_edge(
    a: f64,
    b: f64,
    breakpoints: &[f64],
    ok: &dyn Fn(f64) -> bool,
    upper: bool,
) -> (f64, bool) {
    let inside = if upper { a } else { b };
    let mut cands: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&c| c >= a.min(b) && c <= a.max(b) && c != inside)
        .collect();
    if upper {
        cands.sort_by(f64::total_cmp);
    } else {
        cands.sort_by(|x, y| y.total_cmp(x));
    }
    let mut edge = inside;
    for c in cands {
        if !ok(0.5 * (edge + c)) {
            return (edge, true);
        }
        if !ok(c) {
            return (c, false);
        }
        edge = c;
    }
    // no breakpoint explains the transition; keep the last in-window point
    (edge, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold_table() -> CalibrationTable {
        CalibrationTable::two_knot_anchor(110.0, 55.0).unwrap()
    }

    #[test]
    fn kinds_parse_and_print() {
        for kind in GateKind::ALL {
            assert_eq!(kind.name().parse::<GateKind>().unwrap(), kind);
        }
        assert!(matches!("XOR".parse::<GateKind>(), Err(GateError::UnknownKind(_))));
    }

    #[test]
    fn nominal_biases() {
        assert_eq!(bias_for(GateKind::And2).i_b1, 10.0);
        assert_eq!(bias_for(GateKind::Not).i_b1, -120.0);
        assert_eq!(bias_for(GateKind::Or2).i_b1, 65.0);
        assert_eq!(bias_for(GateKind::Copy).i_b1, 65.0);
        assert_eq!(bias_for(GateKind::Maj3).i_b1, 10.0);
        for kind in GateKind::ALL {
            assert_eq!(bias_for(kind).i_b2, 55.0);
            assert_eq!(bias_for(kind).r_load, 1e3);
        }
    }

    #[test]
    fn canonical_row_order() {
        let rows: Vec<String> = input_rows(2).map(|r| bits_to_string(&r)).collect();
        assert_eq!(rows, ["00", "01", "10", "11"]);
    }

    #[test]
    fn and_not_maj_tables() {
        let t = threshold_table();
        let enc = LogicEncoding::default();
        let outs = |kind| -> Vec<bool> {
            truth_table(&bias_for(kind), &t, &enc).iter().map(|r| r.output).collect()
        };
        assert_eq!(outs(GateKind::And2), [false, false, false, true]);
        assert_eq!(outs(GateKind::Not), [true, false]);
        assert_eq!(
            outs(GateKind::Maj3),
            [false, false, false, true, false, true, true, true]
        );
    }

    #[test]
    fn encoding_validation() {
        assert!(LogicEncoding::new(0.0, 55.0).is_ok());
        assert_eq!(LogicEncoding::new(0.0, 55.0).unwrap().detect_threshold, 27.5);
        assert!(LogicEncoding::with_threshold(0.0, 55.0, 60.0).is_err());
        assert!(LogicEncoding::new(10.0, 5.0).is_err());
    }

    #[test]
    fn bias_validation() {
        assert!(BiasConfig::new(GateKind::And2, 10.0, 0.0, 1e3).is_err());
        assert!(BiasConfig::new(GateKind::And2, 10.0, 55.0, -1.0).is_err());
        assert!(BiasConfig::new(GateKind::And2, f64::NAN, 55.0, 1e3).is_err());
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let t = threshold_table();
        let enc = LogicEncoding::default();
        for sweep in [
            Sweep { lo: 1.0, hi: 0.0, step: 1.0 },
            Sweep { lo: 0.0, hi: 1.0, step: 0.0 },
        ] {
            assert!(matches!(
                bias_window(GateKind::And2, &t, &enc, &sweep),
                Err(GateError::EmptySweep { .. })
            ));
        }
    }

    #[test]
    fn windows_on_threshold_device() {
        let t = threshold_table();
        let enc = LogicEncoding::default();
        let w = bias_window(GateKind::And2, &t, &enc, &Sweep::default()).unwrap();
        assert_eq!(
            w.intervals,
            [Interval { lo: 0.0, hi: 55.0, lo_closed: false, hi_closed: true }]
        );
        let w = bias_window(GateKind::Not, &t, &enc, &Sweep::default()).unwrap();
        assert_eq!(
            w.intervals,
            [Interval { lo: -165.0, hi: -110.0, lo_closed: true, hi_closed: false }]
        );
        assert_eq!(w.to_csv(), "kind,lo,hi,lo_closed,hi_closed\nNOT,-165,-110,true,false\n");
    }

    #[test]
    fn off_grid_edges_are_snapped() {
        let t = threshold_table();
        let enc = LogicEncoding::default();
        let sweep = Sweep { lo: -200.0, hi: 200.0, step: 7.0 };
        let w = bias_window(GateKind::Or2, &t, &enc, &sweep).unwrap();
        assert_eq!(
            w.intervals,
            [Interval { lo: 55.0, hi: 110.0, lo_closed: false, hi_closed: true }]
        );
    }

    #[test]
    fn window_clipped_at_sweep_edge() {
        let t = threshold_table();
        let enc = LogicEncoding::default();
        let sweep = Sweep { lo: 20.0, hi: 40.0, step: 1.0 };
        let w = bias_window(GateKind::And2, &t, &enc, &sweep).unwrap();
        assert_eq!(
            w.intervals,
            [Interval { lo: 20.0, hi: 40.0, lo_closed: true, hi_closed: true }]
        );
    }
}
