//! Fixed-timestep transient simulation of hTron netlists.
//!
//! Every gate owns a [`DeviceInstance`]. At sample `k` (time `k·dt`) each
//! gate's output current follows from its current phase alone, so all net
//! currents at `k` are known; each gate then sees `i_b1` plus the sum of its
//! input-net currents on its heater and is stepped over `[k·dt, (k+1)·dt)`.
//! A gate therefore responds exactly one turn-on delay after its input
//! crosses threshold.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::device::{CalibrationTable, DeviceError, DeviceInstance, DeviceParams, DeviceState};
use crate::gate::LogicEncoding;
use crate::netlist::{is_tie, Netlist, NetlistError, TIE_HIGH, TIE_LOW};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("invalid stimulus: {0}")]
    Stimulus(String),
    #[error("stimulus line {line}: {message}")]
    StimulusCsv { line: usize, message: String },
    #[error("no stimulus for primary input `{0}`")]
    MissingStimulus(String),
    #[error("t_end = {t_end} s ends before the last breakpoint at {last} s")]
    ShortRun { t_end: f64, last: f64 },
    #[error("gate `{gate}` retriggered while resetting at t = {time} s")]
    ResetViolation { gate: String, time: f64 },
    #[error("expected {expected} input bits, got {found}")]
    InputCount { expected: usize, found: usize },
    #[error("netlist depth is 0 (no gate between inputs and outputs)")]
    ZeroDepth,
}

/// Piecewise-constant current waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    points: Vec<(f64, f64)>,
}

impl Waveform {
    /// Breakpoints `(t seconds, i uA)`: first at `t = 0`, strictly increasing.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, SimError> {
        match points.first() {
            Some(&(0.0, _)) => {}
            _ => return Err(SimError::Stimulus("first breakpoint must be at t = 0".into())),
        }
        if points.iter().any(|&(t, i)| !(t.is_finite() && i.is_finite())) {
            return Err(SimError::Stimulus("non-finite breakpoint".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(SimError::Stimulus("breakpoint times must strictly increase".into()));
        }
        Ok(Self { points })
    }

    pub fn constant(i: f64) -> Self {
        Self {
            points: vec![(0.0, i)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.points.partition_point(|&(tk, _)| tk <= t * (1.0 + 1e-12) + 1e-21);
        self.points[k.max(1) - 1].1
    }

    pub fn last_time(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }
}

/// Waveforms for primary inputs, keyed by net name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stimulus {
    waveforms: HashMap<String, Waveform>,
}

impl Stimulus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, net: impl Into<String>, waveform: Waveform) -> Self {
        self.waveforms.insert(net.into(), waveform);
        self
    }

    pub fn insert(&mut self, net: impl Into<String>, waveform: Waveform) {
        self.waveforms.insert(net.into(), waveform);
    }

    pub fn get(&self, net: &str) -> Option<&Waveform> {
        self.waveforms.get(net)
    }

    /// Constant logic levels on every primary input.
    pub fn constant(netlist: &Netlist, bits: &[bool], enc: &LogicEncoding) -> Result<Self, SimError> {
        if bits.len() != netlist.inputs().len() {
            return Err(SimError::InputCount {
                expected: netlist.inputs().len(),
                found: bits.len(),
            });
        }
        Ok(Self {
            waveforms: netlist
                .inputs()
                .iter()
                .zip(bits)
                .map(|(n, &b)| (n.clone(), Waveform::constant(enc.current(b))))
                .collect(),
        })
    }

    /// Parses breakpoint rows `t_ns,net=i_uA,...`. A leading row starting
    /// with `t_ns` is a header and skipped. Blank lines and `#` comments are
    /// ignored. Each net's first breakpoint must be at `t = 0`.
    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let mut points: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let row = raw.split('#').next().unwrap_or("").trim();
            if row.is_empty() || (row.starts_with("t_ns") && points.is_empty()) {
                continue;
            }
            let bad = |message: String| SimError::StimulusCsv { line, message };
            let mut fields = row.split(',').map(str::trim);
            let t_ns: f64 = fields
                .next()
                .and_then(|f| f.parse().ok())
                .filter(|t: &f64| t.is_finite() && *t >= 0.0)
                .ok_or_else(|| bad("expected a non-negative time in ns".into()))?;
            for field in fields {
                let (net, value) = field
                    .split_once('=')
                    .ok_or_else(|| bad(format!("expected `net=i_uA`, found `{field}`")))?;
                let i: f64 = value
                    .trim()
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| bad(format!("invalid current `{value}`")))?;
                let net = net.trim().to_string();
                let entry = match points.iter_mut().position(|(n, _)| *n == net) {
                    Some(p) => &mut points[p].1,
                    None => {
                        points.push((net, Vec::new()));
                        &mut points.last_mut().expect("just pushed").1
                    }
                };
                entry.push((t_ns / 1e9, i));
            }
        }
        let mut stimulus = Self::new();
        for (net, pts) in points {
            let wf = Waveform::new(pts).map_err(|e| SimError::Stimulus(format!("net `{net}`: {e}")))?;
            stimulus.insert(net, wf);
        }
        Ok(stimulus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub params: DeviceParams,
    pub enc: LogicEncoding,
    /// Escalate reset violations to errors.
    pub strict: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 50e-12,
            t_end: 40e-9,
            params: DeviceParams::default(),
            enc: LogicEncoding::default(),
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetTrace {
    pub net: String,
    pub current: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateTrace {
    pub gate: String,
    pub states: Vec<DeviceState>,
    /// Load voltage `i_load · r_load`, millivolts.
    pub v_load: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResetViolation {
    pub gate: String,
    pub time: f64,
}

/// Sampled waveforms; sample `k` is at `k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub dt: f64,
    pub nets: Vec<NetTrace>,
    pub gates: Vec<GateTrace>,
    pub violations: Vec<ResetViolation>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.nets.first().map(|n| n.current.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn net(&self, name: &str) -> Option<&[f64]> {
        self.nets.iter().find(|n| n.net == name).map(|n| n.current.as_slice())
    }

    pub fn gate(&self, id: &str) -> Option<&GateTrace> {
        self.gates.iter().find(|g| g.gate == id)
    }

    /// Logic values of the given nets at the last sample.
    pub fn final_bits(&self, nets: &[String], enc: &LogicEncoding) -> Vec<bool> {
        nets.iter()
            .map(|n| match n.as_str() {
                TIE_LOW => false,
                TIE_HIGH => true,
                n => enc.read(*self.net(n).and_then(|c| c.last()).unwrap_or(&0.0)),
            })
            .collect()
    }

    /// CSV with columns `t_ns`, `<net>.i_uA` per net, then `<gate>.state`
    /// and `<gate>.v_mV` per gate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ns");
        for n in &self.nets {
            let _ = write!(out, ",{}.i_uA", n.net);
        }
        for g in &self.gates {
            let _ = write!(out, ",{0}.state,{0}.v_mV", g.gate);
        }
        out.push('\n');
        for k in 0..self.len() {
            let _ = write!(out, "{}", fmt_num(self.time(k) * 1e9));
            for n in &self.nets {
                let _ = write!(out, ",{}", fmt_num(n.current[k]));
            }
            for g in &self.gates {
                let _ = write!(out, ",{},{}", g.states[k].label(), fmt_num(g.v_load[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// Fixed six-decimal formatting with trailing zeros trimmed.
fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn simulate(
    netlist: &Netlist,
    stimulus: &Stimulus,
    table: &CalibrationTable,
    config: &SimConfig,
) -> Result<Trace, SimError> {
    netlist.check_fanout()?;
    config.params.validate()?;
    config.params.check_timestep(config.dt)?;
    if !(config.t_end.is_finite() && config.t_end >= 0.0) {
        return Err(SimError::Stimulus(format!("t_end = {} s", config.t_end)));
    }

    let mut waves = Vec::with_capacity(netlist.inputs().len());
    for pi in netlist.inputs() {
        let wf = stimulus.get(pi).ok_or_else(|| SimError::MissingStimulus(pi.clone()))?;
        if wf.last_time() > config.t_end * (1.0 + 1e-12) {
            return Err(SimError::ShortRun {
                t_end: config.t_end,
                last: wf.last_time(),
            });
        }
        waves.push(wf);
    }

    let table = Arc::new(table.clone());
    let mut devices = netlist
        .gates()
        .iter()
        .map(|g| DeviceInstance::new(config.params, Arc::clone(&table), g.bias.r_load))
        .collect::<Result<Vec<_>, _>>()?;

    // net index: primary inputs first, then gate outputs in gate order
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in netlist.inputs().iter().enumerate() {
        index.insert(n, i);
    }
    let n_pi = netlist.inputs().len();
    for (gi, g) in netlist.gates().iter().enumerate() {
        index.insert(&g.output, n_pi + gi);
    }
    let tie_current = |net: &str| if net == TIE_HIGH { config.enc.i_one } else { config.enc.i_zero };
    let fanin: Vec<Vec<Option<usize>>> = netlist
        .gates()
        .iter()
        .map(|g| g.inputs.iter().map(|n| (!is_tie(n)).then(|| index[n.as_str()])).collect())
        .collect();
    let fanin_ties: Vec<f64> = netlist
        .gates()
        .iter()
        .map(|g| g.inputs.iter().filter(|n| is_tie(n)).map(|n| tie_current(n)).sum())
        .collect();

    let samples = (config.t_end / config.dt + 1e-9).floor() as usize + 1;
    let n_nets = n_pi + netlist.gate_count();
    let mut net_traces: Vec<Vec<f64>> = vec![Vec::with_capacity(samples); n_nets];
    let mut state_traces: Vec<Vec<DeviceState>> = vec![Vec::with_capacity(samples); netlist.gate_count()];
    let mut volt_traces: Vec<Vec<f64>> = vec![Vec::with_capacity(samples); netlist.gate_count()];
    let mut violations = Vec::new();
    let mut current = vec![0.0; n_nets];

    for k in 0..samples {
        let t = k as f64 * config.dt;
        for (i, wf) in waves.iter().enumerate() {
            current[i] = wf.value_at(t);
        }
        for (gi, (g, dev)) in netlist.gates().iter().zip(&devices).enumerate() {
            let (_, i_load) = dev.steering(g.bias.i_b2);
            current[n_pi + gi] = i_load;
            state_traces[gi].push(dev.state());
            volt_traces[gi].push(i_load * g.bias.r_load * 1e-3);
        }
        for (trace, &c) in net_traces.iter_mut().zip(&current) {
            trace.push(c);
        }
        if k + 1 == samples {
            break;
        }
        for (gi, (g, dev)) in netlist.gates().iter().zip(devices.iter_mut()).enumerate() {
            let heater = g.bias.i_b1
                + fanin_ties[gi]
                + fanin[gi].iter().flatten().map(|&ni| current[ni]).sum::<f64>();
            let out = dev.step(heater, g.bias.i_b2, config.dt)?;
            if out.reset_violation {
                if config.strict {
                    return Err(SimError::ResetViolation {
                        gate: g.id.clone(),
                        time: t,
                    });
                }
                violations.push(ResetViolation {
                    gate: g.id.clone(),
                    time: t,
                });
            }
        }
    }

    let mut names: Vec<&String> = netlist.inputs().iter().collect();
    names.extend(netlist.gates().iter().map(|g| &g.output));
    Ok(Trace {
        dt: config.dt,
        nets: names
            .into_iter()
            .zip(net_traces)
            .map(|(n, current)| NetTrace { net: n.clone(), current })
            .collect(),
        gates: netlist
            .gates()
            .iter()
            .zip(state_traces.into_iter().zip(volt_traces))
            .map(|(g, (states, v_load))| GateTrace {
                gate: g.id.clone(),
                states,
                v_load,
            })
            .collect(),
        violations,
    })
}

/// Timing-free evaluation: each gate switches iff its channel bias exceeds
/// the critical current at `i_b1 + Σ` encoded input currents.
pub fn steady_state(
    netlist: &Netlist,
    input_bits: &[bool],
    table: &CalibrationTable,
    enc: &LogicEncoding,
) -> Result<Vec<bool>, SimError> {
    if input_bits.len() != netlist.inputs().len() {
        return Err(SimError::InputCount {
            expected: netlist.inputs().len(),
            found: input_bits.len(),
        });
    }
    let mut value: HashMap<&str, bool> = HashMap::new();
    value.insert(TIE_LOW, false);
    value.insert(TIE_HIGH, true);
    for (n, &b) in netlist.inputs().iter().zip(input_bits) {
        value.insert(n, b);
    }
    for g in netlist.gates() {
        let bits: Vec<bool> = g.inputs.iter().map(|n| value[n.as_str()]).collect();
        let out = g.bias.switches(g.bias.gate_current(&bits, enc), table);
        value.insert(&g.output, out);
    }
    Ok(netlist.outputs().iter().map(|n| value[n.as_str()]).collect())
}

/// `1 / (depth · turn_on_delay + reset_time)`: an estimate of the highest
/// rate at which fresh inputs can be applied.
pub fn max_clock_estimate(netlist: &Netlist, params: &DeviceParams) -> Result<f64, SimError> {
    let depth = netlist.depth();
    if depth == 0 {
        return Err(SimError::ZeroDepth);
    }
    Ok(1.0 / (depth as f64 * params.turn_on_delay + params.reset_time))
}

/// Upper bound on the time for a netlist to settle under a constant
/// stimulus applied at `t = 0`, starting from all-superconducting.
///
/// First-level gates settle within one turn-on delay. A gate's output can
/// change at most `max(turn_on_delay, reset_time)` after its inputs last
/// change, so every further level adds at most one reset time.
pub fn settle_time(netlist: &Netlist, params: &DeviceParams) -> f64 {
    let depth = netlist.depth().max(1) as f64;
    params.turn_on_delay + (depth - 1.0) * params.reset_time.max(params.turn_on_delay)
}
