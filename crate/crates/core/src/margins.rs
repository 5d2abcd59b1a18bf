//! Monte Carlo robustness of a gate's bias point against spread in the
//! channel critical current.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::device::{CriticalCurrentModel, DeviceError};
use crate::gate::{bias_window, bits_to_string, input_rows, BiasConfig, GateError, GateKind, LogicEncoding, Sweep};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarginError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error("bias kind {bias} does not match gate kind {kind}")]
    KindMismatch { kind: GateKind, bias: GateKind },
    #[error("no feasible {0} bias on the sweep grid")]
    NoFeasibleBias(GateKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComboMargin {
    pub inputs: Vec<bool>,
    /// Fraction of trials whose output bit differs from the ideal one.
    pub error_rate: f64,
    pub errors: u64,
    /// Signed distance, in uA, from the total gate current to the nearest
    /// edge of the switching band on the wrong side; negative means some
    /// realization within the spread flips the bit.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub kind: GateKind,
    pub i_b1: f64,
    pub i_b2: f64,
    pub trials: u64,
    pub seed: u64,
    pub combos: Vec<ComboMargin>,
    /// Minimum of the per-combination margins.
    pub worst_case_margin: f64,
}

impl MarginReport {
    /// One row per input combination, header
    /// `kind,i_b1_uA,combo,error_rate,worst_margin_uA,trials,seed`. The
    /// margin column holds that combination's margin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,i_b1_uA,combo,error_rate,worst_margin_uA,trials,seed\n");
        out.push_str(&self.csv_rows());
        out
    }

    /// Rows without the header, for concatenating reports.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for c in &self.combos {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.kind,
                self.i_b1,
                bits_to_string(&c.inputs),
                c.error_rate,
                c.margin,
                self.trials,
                self.seed
            ));
        }
        out
    }
}

/// Per-combination margins of `bias` against the switching band of `model`.
/// With zero spread the band collapses to the nominal switching gate current
/// and each margin is the distance to it.
pub fn combo_margins(bias: &BiasConfig, model: &CriticalCurrentModel, enc: &LogicEncoding) -> Vec<(Vec<bool>, f64)> {
    let (g_lo, g_hi) = model.switching_band(bias.i_b2);
    input_rows(bias.kind.arity())
        .map(|bits| {
            let total = bias.gate_current(&bits, enc).abs();
            let m = if bias.kind.eval(&bits) { total - g_hi } else { g_lo - total };
            (bits, m)
        })
        .collect()
}

pub fn worst_case_margin(bias: &BiasConfig, model: &CriticalCurrentModel, enc: &LogicEncoding) -> f64 {
    combo_margins(bias, model, enc)
        .into_iter()
        .map(|(_, m)| m)
        .fold(f64::INFINITY, f64::min)
}

/// Errors per combination for one trial. Each trial uses its own ChaCha8
/// stream of the master seed, and every input evaluation draws an
/// independent critical current.
fn run_trial(
    bias: &BiasConfig,
    model: &CriticalCurrentModel,
    enc: &LogicEncoding,
    rows: &[Vec<bool>],
    seed: u64,
    trial: u64,
) -> Result<Vec<u64>, DeviceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rows.iter()
        .map(|bits| {
            let total = bias.gate_current(bits, enc);
            let i_c = model.draw(total.abs(), &mut rng)?;
            let out = bias.i_b2 > i_c;
            Ok(u64::from(out != bias.kind.eval(bits)))
        })
        .collect()
}

fn check(kind: GateKind, bias: &BiasConfig, trials: u64) -> Result<(), MarginError> {
    if trials == 0 {
        return Err(MarginError::NoTrials);
    }
    if bias.kind != kind {
        return Err(MarginError::KindMismatch { kind, bias: bias.kind });
    }
    bias.validate()?;
    Ok(())
}

fn assemble(
    kind: GateKind,
    bias: &BiasConfig,
    model: &CriticalCurrentModel,
    enc: &LogicEncoding,
    trials: u64,
    seed: u64,
    errors: Vec<u64>,
) -> MarginReport {
    let margins = combo_margins(bias, model, enc);
    let combos: Vec<ComboMargin> = margins
        .into_iter()
        .zip(errors)
        .map(|((inputs, margin), errors)| ComboMargin {
            inputs,
            error_rate: errors as f64 / trials as f64,
            errors,
            margin,
        })
        .collect();
    let worst = combos.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    MarginReport {
        kind,
        i_b1: bias.i_b1,
        i_b2: bias.i_b2,
        trials,
        seed,
        combos,
        worst_case_margin: worst,
    }
}

/// Trials run in parallel; the result equals
/// [`monte_carlo_margin_sequential`] for the same seed.
pub fn monte_carlo_margin(
    kind: GateKind,
    bias: &BiasConfig,
    model: &CriticalCurrentModel,
    enc: &LogicEncoding,
    trials: u64,
    seed: u64,
) -> Result<MarginReport, MarginError> {
    check(kind, bias, trials)?;
    let rows: Vec<Vec<bool>> = input_rows(kind.arity()).collect();
    let zero = || vec![0u64; rows.len()];
    let add = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    };
    let errors = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(bias, model, enc, &rows, seed, t))
        .try_reduce(zero, |a, b| Ok(add(a, b)))?;
    Ok(assemble(kind, bias, model, enc, trials, seed, errors))
}

pub fn monte_carlo_margin_sequential(
    kind: GateKind,
    bias: &BiasConfig,
    model: &CriticalCurrentModel,
    enc: &LogicEncoding,
    trials: u64,
    seed: u64,
) -> Result<MarginReport, MarginError> {
    check(kind, bias, trials)?;
    let rows: Vec<Vec<bool>> = input_rows(kind.arity()).collect();
    let mut errors = vec![0u64; rows.len()];
    for t in 0..trials {
        for (e, x) in errors.iter_mut().zip(run_trial(bias, model, enc, &rows, seed, t)?) {
            *e += x;
        }
    }
    Ok(assemble(kind, bias, model, enc, trials, seed, errors))
}

/// Grid point inside the nominal bias window that maximizes the worst-case
/// margin, ties going to the smaller `|i_b1|`. The nominal `i_b2` and load
/// for `kind` are kept.
pub fn robust_bias(
    kind: GateKind,
    model: &CriticalCurrentModel,
    enc: &LogicEncoding,
    sweep: &Sweep,
) -> Result<f64, MarginError> {
    let window = bias_window(kind, model.nominal(), enc, sweep)?;
    let nominal = crate::gate::bias_for(kind);
    let mut best: Option<(f64, f64)> = None;
    for x in sweep.points()? {
        if !window.contains(x) {
            continue;
        }
        let m = worst_case_margin(&nominal.with_i_b1(x), model, enc);
        let better = match best {
            None => true,
            Some((bx, bm)) => m > bm || (m == bm && x.abs() < bx.abs()),
        };
        if better {
            best = Some((x, m));
        }
    }
    best.map(|(x, _)| x).ok_or(MarginError::NoFeasibleBias(kind))
}
