use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use htron_core::device::{
    calibrate_from_measurements, CalibrationTable, CriticalCurrentModel, DeviceError, DeviceParams, Spread,
    SwitchingSampleSet,
};
use htron_core::gate::{bias_for, bias_window, truth_table, truth_table_csv, GateKind, LogicEncoding, Sweep};
use htron_core::margins::{monte_carlo_margin, robust_bias};
use htron_core::netlist::{camouflage_view, insert_splitters, parse_with, serialize, views_identical, Netlist, ParseOptions};
use htron_core::sim::{simulate, SimConfig, SimError, Stimulus};
use htron_core::synth::{
    adder_report_csv, full_adder, level_reduction, map_expression, parse_expr, verify_equivalence, Basis, BoolExpr,
};

/// Modelling, simulation and synthesis tools for hTron threshold-logic gates.
#[derive(Parser)]
#[command(name = "htron", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transient simulation of a netlist; writes a trace CSV.
    Sim(SimArgs),
    /// Truth table of one configured gate.
    Truth(TruthArgs),
    /// Bias window of one gate kind.
    Window(WindowArgs),
    /// Map a prefix Boolean expression onto a gate basis.
    Synth(SynthArgs),
    /// Full-adder level comparison across bases.
    FaBench(FaBenchArgs),
    /// Monte Carlo bias-margin analysis.
    Margins(MarginArgs),
    /// Camouflage view of netlists and pairwise comparison.
    Camo(CamoArgs),
    /// Median calibration table from raw switching samples.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Clone)]
struct DeviceArgs {
    /// Calibration CSV (`i_gate_uA,i_ch_crit_uA`).
    #[arg(long, value_name = "CSV", conflicts_with = "anchor")]
    calib: Option<PathBuf>,
    /// Two-knot threshold device through GATE_uA:CHANNEL_uA, e.g. 110:55.
    #[arg(long, value_name = "G:C")]
    anchor: Option<String>,
}

#[derive(Args)]
struct OutArg {
    /// Output file (stdout when absent). Written atomically.
    #[arg(long, short, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    /// Netlist file (.hnl).
    netlist: PathBuf,
    /// Stimulus CSV with rows `t_ns,net=i_uA,...`.
    #[arg(long, value_name = "CSV")]
    stimulus: PathBuf,
    /// Timestep, with unit.
    #[arg(long, default_value = "50ps", value_parser = parse_time)]
    dt: f64,
    /// Simulated duration, with unit.
    #[arg(long, default_value = "40ns", value_parser = parse_time)]
    t_end: f64,
    /// Treat reset violations as errors.
    #[arg(long)]
    strict: bool,
    /// Insert COPY splitters for multi-reader nets before simulating.
    #[arg(long)]
    legalize: bool,
    #[command(flatten)]
    device: DeviceArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct TruthArgs {
    /// COPY, NOT, AND2, OR2 or MAJ3.
    #[arg(long)]
    gate: String,
    /// Heater bias in uA (nominal for the kind when absent).
    #[arg(long, allow_hyphen_values = true)]
    i_b1: Option<f64>,
    /// Print how the NOT bias is interpreted.
    #[arg(long)]
    explain: bool,
    #[command(flatten)]
    device: DeviceArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep start, uA.
    #[arg(long, default_value_t = -200.0, allow_hyphen_values = true)]
    lo: f64,
    /// Sweep end, uA.
    #[arg(long, default_value_t = 200.0, allow_hyphen_values = true)]
    hi: f64,
    /// Sweep step, uA.
    #[arg(long, default_value_t = 1.0)]
    step: f64,
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long)]
    gate: String,
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long)]
    explain: bool,
    #[command(flatten)]
    device: DeviceArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SynthArgs {
    /// Expression such as `maj(a, not(b), c)`.
    expr: String,
    /// HTRON, MAJ_NOT, NAND2 or NOR2.
    #[arg(long, default_value = "HTRON")]
    basis: String,
    /// Also verify the steady-state response on this device.
    #[command(flatten)]
    device: DeviceArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct FaBenchArgs {
    /// Directory to write the adder netlists into.
    #[arg(long, value_name = "DIR")]
    netlist_dir: Option<PathBuf>,
    /// Verify steady-state responses on this device.
    #[command(flatten)]
    device: DeviceArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct MarginArgs {
    /// Gate kind; repeat for several, all five when absent.
    #[arg(long)]
    gate: Vec<String>,
    /// Heater bias in uA (nominal for the kind when absent).
    #[arg(long, allow_hyphen_values = true)]
    i_b1: Option<f64>,
    /// Raw switching-sample CSV (`i_gate_uA,sample_uA`).
    #[arg(long, value_name = "CSV", conflicts_with = "spread")]
    samples: Option<PathBuf>,
    /// Parametric spread around the device table: none, uniform:HALF_WIDTH_uA or normal:SIGMA_uA.
    #[arg(long)]
    spread: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also report the margin-maximizing bias over the sweep.
    #[arg(long)]
    robust: bool,
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    device: DeviceArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct CamoArgs {
    /// Netlists; with two or more, each is compared with the first.
    #[arg(required = true)]
    netlists: Vec<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Raw switching-sample CSV (`i_gate_uA,sample_uA`).
    #[arg(long, value_name = "CSV")]
    samples: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug)]
enum CliError {
    /// Bad arguments, unreadable or malformed input files.
    Usage(String),
    /// The computation ran and the answer is negative.
    Domain(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses a duration with unit: `s`, `ms`, `us`, `ns` or `ps`.
fn parse_time(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let split = s.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E').unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let scale = match unit {
        "s" => 1.0,
        "ms" => 1e-3,
        "us" => 1e-6,
        "ns" => 1e-9,
        "ps" => 1e-12,
        "" => return Err(format!("`{s}` needs a unit (s, ms, us, ns, ps)")),
        other => return Err(format!("unknown time unit `{other}`")),
    };
    let v: f64 = num.trim().parse().map_err(|_| format!("invalid number `{num}`"))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("`{s}` must be positive"));
    }
    Ok(v * scale)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Temp file in the destination directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| CliError::Usage(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(out: &OutArg, contents: &str) -> Result<()> {
    match &out.out {
        Some(path) => write_atomic(path, contents),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Usage(format!("stdout: {e}")))
        }
    }
}

fn device_error(e: DeviceError) -> CliError {
    match e {
        DeviceError::NonMonotone { .. } => CliError::Domain(e.to_string()),
        other => usage(other),
    }
}

impl DeviceArgs {
    fn table_opt(&self) -> Result<Option<CalibrationTable>> {
        if let Some(path) = &self.calib {
            let text = read(path)?;
            return CalibrationTable::from_csv(text.as_bytes())
                .map(Some)
                .map_err(|e| match device_error(e) {
                    CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
                    CliError::Domain(m) => CliError::Domain(format!("{}: {m}", path.display())),
                });
        }
        if let Some(anchor) = &self.anchor {
            let (g, c) = anchor
                .split_once(':')
                .ok_or_else(|| usage(format!("--anchor expects GATE:CHANNEL, found `{anchor}`")))?;
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("invalid --anchor value `{s}`")));
            return CalibrationTable::two_knot_anchor(num(g)?, num(c)?).map(Some).map_err(usage);
        }
        Ok(None)
    }

    fn table(&self) -> Result<CalibrationTable> {
        self.table_opt()?
            .ok_or_else(|| usage("a device is required: pass --calib FILE or --anchor GATE:CHANNEL"))
    }
}

fn gate_kind(s: &str) -> Result<GateKind> {
    s.parse::<GateKind>().map_err(usage)
}

fn load_netlist(path: &Path, allow_fanout: bool) -> Result<Netlist> {
    let text = read(path)?;
    parse_with(&text, ParseOptions { allow_fanout }).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

const NOT_EXPLANATION: &str = "\
NOT bias: the -120 uA value is applied as i_b1 (heater), with i_b2 = 55 uA on the channel like every other gate.
  input 0: heater total -120 uA, |-120| > 110 uA, channel switches, output 1
  input 1: heater total -120 + 55 = -65 uA, |-65| < 110 uA, channel stays superconducting, output 0
";

fn run_sim(a: &SimArgs) -> Result<()> {
    let table = a.device.table()?;
    let mut netlist = load_netlist(&a.netlist, a.legalize)?;
    if a.legalize {
        netlist = insert_splitters(&netlist);
    }
    let stimulus = Stimulus::from_csv(&read(&a.stimulus)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.stimulus.display())))?;
    let config = SimConfig {
        dt: a.dt,
        t_end: a.t_end,
        strict: a.strict,
        params: DeviceParams::default(),
        enc: LogicEncoding::default(),
    };
    let trace = simulate(&netlist, &stimulus, &table, &config).map_err(|e| match e {
        SimError::ResetViolation { .. } => CliError::Domain(e.to_string()),
        other => usage(other),
    })?;
    for v in &trace.violations {
        eprintln!("warning: gate `{}` retriggered while resetting at {:.3} ns", v.gate, v.time * 1e9);
    }
    emit(&a.out, &trace.to_csv())
}

fn run_truth(a: &TruthArgs) -> Result<()> {
    let table = a.device.table()?;
    let kind = gate_kind(&a.gate)?;
    let mut bias = bias_for(kind);
    if let Some(x) = a.i_b1 {
        bias = bias.with_i_b1(x);
    }
    if a.explain && kind == GateKind::Not {
        eprint!("{NOT_EXPLANATION}");
    }
    emit(&a.out, &truth_table_csv(&truth_table(&bias, &table, &LogicEncoding::default())))
}

fn run_window(a: &WindowArgs) -> Result<()> {
    let table = a.device.table()?;
    let kind = gate_kind(&a.gate)?;
    let sweep = Sweep::new(a.sweep.lo, a.sweep.hi, a.sweep.step).map_err(usage)?;
    if a.explain && kind == GateKind::Not {
        eprint!("{NOT_EXPLANATION}");
    }
    let window = bias_window(kind, &table, &LogicEncoding::default(), &sweep).map_err(usage)?;
    emit(&a.out, &window.to_csv())?;
    if window.is_empty() {
        return Err(CliError::Domain(format!("{kind} has no working bias on the sweep grid")));
    }
    Ok(())
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    let basis: Basis = a.basis.parse().map_err(usage)?;
    let expr: BoolExpr = parse_expr(&a.expr).map_err(|e| usage(format!("expression: {e}")))?;
    let netlist = map_expression(&expr, basis).map_err(|e| match e {
        htron_core::synth::SynthError::Uncertified(_) => CliError::Domain(e.to_string()),
        other => usage(other),
    })?;
    if let Some(table) = a.device.table_opt()? {
        if let Some(cex) = verify_equivalence(&netlist, &expr, &table, &LogicEncoding::default()).map_err(usage)? {
            return Err(CliError::Domain(format!("not equivalent on the device: {cex}")));
        }
    }
    eprintln!(
        "{basis}: depth {}, {} gates",
        htron_core::synth::depth(&netlist),
        htron_core::synth::gate_count(&netlist)
    );
    emit(&a.out, &serialize(&netlist))
}

fn run_fa_bench(a: &FaBenchArgs) -> Result<()> {
    let table = a.device.table_opt()?;
    let enc = LogicEncoding::default();
    let sum_ref = parse_expr("xor(a, b, c)").expect("valid");
    let carry_ref = parse_expr("maj(a, b, c)").expect("valid");
    let mut reports = Vec::new();
    for basis in [Basis::MajNot, Basis::Nand2, Basis::Nor2] {
        let fa = full_adder(basis);
        if let Some(table) = &table {
            for (n, r) in [(&fa.sum, &sum_ref), (&fa.carry, &carry_ref)] {
                if let Some(cex) = verify_equivalence(n, r, table, &enc).map_err(usage)? {
                    return Err(CliError::Domain(format!("{basis} {}: {cex}", n.name())));
                }
            }
        }
        if let Some(dir) = &a.netlist_dir {
            fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
            write_atomic(&dir.join(format!("{}.hnl", fa.combined.name())), &serialize(&fa.combined))?;
        }
        eprintln!(
            "{basis}: {} levels, {} gates; hTron realization {} levels, {} cells; verified over 8 combos",
            fa.report.levels, fa.report.gate_count, fa.report.htron_levels, fa.report.htron_gates
        );
        reports.push(fa.report);
    }
    eprintln!(
        "level reduction vs NAND2 {:.2}%, vs NOR2 {:.2}%",
        100.0 * level_reduction(&reports[0], &reports[1]),
        100.0 * level_reduction(&reports[0], &reports[2])
    );
    emit(&a.out, &adder_report_csv(&reports))
}

fn parse_spread(s: &str) -> Result<Spread> {
    let (kind, value) = s.split_once(':').unwrap_or((s, ""));
    let num = || {
        value
            .trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("--spread `{s}`: expected a width in uA")))
    };
    match kind.trim().to_ascii_lowercase().as_str() {
        "none" => Ok(Spread::None),
        "uniform" => Ok(Spread::Uniform { half_width: num()? }),
        "normal" => Ok(Spread::Normal { sigma: num()? }),
        _ => Err(usage(format!("--spread `{s}`: expected none, uniform:W or normal:SIGMA"))),
    }
}

fn run_margins(a: &MarginArgs) -> Result<()> {
    let model = match (&a.samples, &a.spread) {
        (Some(path), _) => {
            let text = read(path)?;
            let samples = SwitchingSampleSet::from_csv(text.as_bytes())
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            CriticalCurrentModel::empirical(samples).map_err(device_error)?
        }
        (None, spread) => {
            let spread = match spread {
                Some(s) => parse_spread(s)?,
                None => Spread::None,
            };
            CriticalCurrentModel::parametric(a.device.table()?, spread).map_err(usage)?
        }
    };
    let kinds: Vec<GateKind> = if a.gate.is_empty() {
        GateKind::ALL.to_vec()
    } else {
        a.gate.iter().map(|g| gate_kind(g)).collect::<Result<_>>()?
    };
    let enc = LogicEncoding::default();
    let mut csv = String::from("kind,i_b1_uA,combo,error_rate,worst_margin_uA,trials,seed\n");
    for kind in kinds {
        let mut bias = bias_for(kind);
        if let Some(x) = a.i_b1 {
            bias = bias.with_i_b1(x);
        }
        let report = monte_carlo_margin(kind, &bias, &model, &enc, a.trials, a.seed).map_err(usage)?;
        csv.push_str(&report.csv_rows());
        eprintln!("{kind} at {} uA: worst-case margin {} uA", bias.i_b1, report.worst_case_margin);
        if a.robust {
            let sweep = Sweep::new(a.sweep.lo, a.sweep.hi, a.sweep.step).map_err(usage)?;
            let x = robust_bias(kind, &model, &enc, &sweep).map_err(|e| CliError::Domain(e.to_string()))?;
            eprintln!("{kind}: robust i_b1 {x} uA");
        }
    }
    emit(&a.out, &csv)
}

fn run_camo(a: &CamoArgs) -> Result<()> {
    let views = a
        .netlists
        .iter()
        .map(|p| load_netlist(p, true).map(|n| camouflage_view(&n)))
        .collect::<Result<Vec<_>>>()?;
    emit(&a.out, &views[0].to_json())?;
    let mut differ = Vec::new();
    for (path, view) in a.netlists.iter().zip(&views).skip(1) {
        if views_identical(&views[0], view) {
            eprintln!("{}: identical", path.display());
        } else {
            eprintln!("{}: differs", path.display());
            differ.push(path.display().to_string());
        }
    }
    if differ.is_empty() {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "camouflage views differ from {}: {}",
            a.netlists[0].display(),
            differ.join(", ")
        )))
    }
}

fn run_calibrate(a: &CalibrateArgs) -> Result<()> {
    let text = read(&a.samples)?;
    let samples = SwitchingSampleSet::from_csv(text.as_bytes())
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.samples.display())))?;
    let table = calibrate_from_measurements(&samples).map_err(device_error)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf).map_err(usage)?;
    emit(&a.out, &String::from_utf8(buf).expect("csv is utf-8"))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sim(a) => run_sim(a),
        Command::Truth(a) => run_truth(a),
        Command::Window(a) => run_window(a),
        Command::Synth(a) => run_synth(a),
        Command::FaBench(a) => run_fa_bench(a),
        Command::Margins(a) => run_margins(a),
        Command::Camo(a) => run_camo(a),
        Command::Calibrate(a) => run_calibrate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
