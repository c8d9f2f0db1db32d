//! Command-line front end: `relax`, `export-milp`, `validate`, `info`.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 LP or numerical failure,
//! 3 relaxation proven infeasible, 4 validation found a violation above
//! tolerance.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cuts::{self, AngleInterval, CutConfig, Family};
use crate::engine::{run_detailed, Backend, EngineError, RunStatus, SolveConfig, SolveReport};
use crate::glover::{build_milp, export_milp, DEFAULT_BITS};
use crate::model::{build_base_model, ModelOptions, Provenance};
use crate::netcase::{parse_case, Network};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_LP: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

pub const REPORT_SCHEMA: &str = "report_v1";
/// Random box points used by `validate` to grow its cut suite.
pub const VALIDATE_POINTS: usize = 20;
pub const VALIDATE_TOL: f64 = 1e-7;

#[derive(Debug, Parser)]
#[command(name = "opf-lift", version, about = "Lower bounds for AC optimal power flow from lifted LP relaxations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the cutting-plane loop and report the lower bound.
    Relax(RelaxArgs),
    /// Write the binary-expansion MILP in LP format.
    ExportMilp(ExportArgs),
    /// Embed a voltage profile and check it against the model and a cut suite.
    Validate(ValidateArgs),
    /// Print network statistics.
    Info(InfoArgs),
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct RelaxArgs {
    pub case: PathBuf,
    /// Comma-separated families (delta, loss, circle, sdp, rating, cost), `all` or `none`.
    #[arg(long, default_value = "all")]
    pub cuts: String,
    #[arg(long, default_value_t = 200)]
    pub max_rounds: usize,
    /// Relative bound improvement that counts as progress.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Angle interval in radians as BUS:LO:HI; repeatable.
    #[arg(long = "angle-interval", value_name = "BUS:LO:HI")]
    pub angle_intervals: Vec<String>,
    #[arg(long)]
    pub sdp_with_one: bool,
    /// Known feasible objective, used for the gap.
    #[arg(long)]
    pub reference_obj: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// LP backend: highs, sparse or dense.
    #[arg(long, default_value = "highs")]
    pub backend: String,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON-lines log of every appended cut.
    #[arg(long)]
    pub cut_log: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct ExportArgs {
    pub case: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BITS)]
    pub bits: u32,
    #[arg(short = 'o', long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct ValidateArgs {
    pub case: PathBuf,
    /// JSON with `voltages: [{bus, e, f}]` and optional `dispatch: [{bus, p, q}]`.
    pub profile: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct InfoArgs {
    pub case: PathBuf,
}

/// Error carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Model(_) | EngineError::Config(_) => EXIT_INPUT,
            _ => EXIT_LP,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub input: String,
    pub command: String,
    pub config: serde_json::Value,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    fn new(input: &Path, command: &str, config: &impl Serialize) -> Self {
        RunManifest {
            input: input.display().to_string(),
            command: command.into(),
            config: serde_json::to_value(config).expect("config serializes"),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RelaxReport {
    pub schema: String,
    pub manifest: RunManifest,
    pub network: String,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ValidateReport {
    pub schema: String,
    pub manifest: RunManifest,
    pub max_violation: f64,
    pub worst: String,
    pub operating_violation: f64,
    pub worst_operating: String,
    pub cuts_checked: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BusVoltage {
    pub bus: usize,
    pub e: f64,
    pub f: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GenDispatch {
    pub bus: usize,
    pub p: f64,
    pub q: f64,
}

/// Rectangular voltages per bus id and optional per-unit dispatch in
/// in-service generator order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VoltageProfile {
    pub voltages: Vec<BusVoltage>,
    #[serde(default)]
    pub dispatch: Option<Vec<GenDispatch>>,
}

impl VoltageProfile {
    pub fn flat(net: &Network) -> Self {
        VoltageProfile {
            voltages: net.buses.iter().map(|b| BusVoltage { bus: b.id, e: 1.0, f: 0.0 }).collect(),
            dispatch: None,
        }
    }

    /// Voltages in bus order.
    pub fn voltages(&self, net: &Network) -> Result<Vec<Complex64>, String> {
        let mut out = vec![None; net.buses.len()];
        for v in &self.voltages {
            let i = net.bus_index(v.bus).ok_or_else(|| format!("profile names unknown bus {}", v.bus))?;
            out[i] = Some(Complex64::new(v.e, v.f));
        }
        out.into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| format!("profile has no voltage for bus {}", net.buses[i].id)))
            .collect()
    }
}

pub fn parse_interval(s: &str) -> Result<AngleInterval, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [bus, lo, hi] = parts[..] else {
        return Err(format!("angle interval {s:?} is not BUS:LO:HI"));
    };
    let bus = bus.parse().map_err(|_| format!("bad bus in {s:?}"))?;
    let lo: f64 = lo.parse().map_err(|_| format!("bad lower angle in {s:?}"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad upper angle in {s:?}"))?;
    if !(lo <= hi) {
        return Err(format!("empty angle interval {s:?}"));
    }
    Ok(AngleInterval { bus, lo, hi })
}

pub fn parse_families(s: &str) -> Result<Vec<Family>, String> {
    match s.trim() {
        "all" => Ok(Family::ALL.to_vec()),
        "none" | "" => Ok(Vec::new()),
        list => list
            .split(',')
            .map(|t| Family::parse(t.trim()).ok_or_else(|| format!("unknown cut family {t:?}")))
            .collect(),
    }
}

pub fn load_case(path: &Path) -> Result<Network, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    parse_case(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

impl RelaxArgs {
    pub fn config(&self) -> Result<SolveConfig, CliError> {
        let families = parse_families(&self.cuts).map_err(CliError::input)?;
        let intervals = self
            .angle_intervals
            .iter()
            .map(|s| parse_interval(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::input)?;
        let backend = match self.backend.as_str() {
            "highs" => Backend::Highs,
            "sparse" => Backend::Sparse,
            "dense" => Backend::Dense,
            other => return Err(CliError::input(format!("unknown backend {other:?}"))),
        };
        Ok(SolveConfig {
            cuts: CutConfig { families, sdp_with_one: self.sdp_with_one, ..CutConfig::default() },
            tol_improve: self.tol,
            max_rounds: self.max_rounds,
            intervals,
            seed: self.seed,
            backend,
            ..SolveConfig::default()
        })
    }
}

fn summary_table(net: &Network, report: &SolveReport) -> String {
    let mut s = format!("{}\n", net.summary());
    s += &format!("status      {:?}\n", report.status);
    match report.bound {
        Some(b) => s += &format!("bound       {b:.6}\n"),
        None => s += "bound       none\n",
    }
    s += &format!("rounds      {}\n", report.rounds);
    for (f, n) in &report.cuts_per_family {
        s += &format!("cuts {:<7}{n}\n", f.name());
    }
    s += &format!("time        {:.2}s\n", report.wall_seconds);
    if let Some(g) = report.gap {
        s += &format!("gap         {:.4}%\n", 100.0 * g);
    }
    s
}

pub fn cmd_relax(args: &RelaxArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let net = load_case(&args.case)?;
    let cfg = args.config()?;
    let outcome = run_detailed(&net, &cfg, args.reference_obj)?;
    let report = outcome.report;
    let _ = write!(out, "{}", summary_table(&net, &report));
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    if let Some(path) = &args.cut_log {
        let names = &outcome.model.catalog.names;
        let mut log = String::new();
        for (round, cut) in &outcome.appended {
            let terms: Vec<(&str, f64)> = cut.constraint.coefs.iter().map(|&(j, a)| (names[j].as_str(), a)).collect();
            let line = serde_json::json!({
                "round": round,
                "name": cut.constraint.name,
                "family": cut.family,
                "source": cut.source,
                "violation": cut.violation,
                "sense": cut.constraint.sense,
                "rhs": cut.constraint.rhs,
                "terms": terms,
            });
            log += &line.to_string();
            log.push('\n');
        }
        write_file(path, &log)?;
    }
    if let Some(path) = &args.out {
        let full = RelaxReport {
            schema: REPORT_SCHEMA.into(),
            manifest: RunManifest::new(&args.case, "relax", args),
            network: net.summary(),
            report: report.clone(),
        };
        write_file(path, &serde_json::to_string_pretty(&full).expect("report serializes"))?;
    }
    Ok(if report.status == RunStatus::Infeasible { EXIT_INFEASIBLE } else { EXIT_OK })
}

pub fn cmd_export_milp(args: &ExportArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let net = load_case(&args.case)?;
    let milp = build_milp(&net, args.bits).map_err(|e| CliError::input(e.to_string()))?;
    let header = vec![
        format!("{} with {}-bit factor expansions", args.case.display(), args.bits),
        net.summary(),
    ];
    let manifest = export_milp(&milp, &args.out, &header).map_err(|e| CliError::input(e.to_string()))?;
    let _ = writeln!(
        out,
        "{}: {} variables, {} rows, {} binaries over {} expanded coordinates; manifest {}",
        args.out.display(),
        milp.lp.num_vars(),
        milp.lp.rows.len(),
        milp.binary_count(),
        milp.manifest.expansions.len(),
        manifest.display()
    );
    Ok(EXIT_OK)
}

/// Embeds a profile and measures it against the base rows and a random cut suite.
pub fn validate_profile(net: &Network, profile: &VoltageProfile, seed: u64) -> Result<(f64, String, f64, String, usize), CliError> {
    let model = build_base_model(net, &ModelOptions::default()).map_err(|e| CliError::input(e.to_string()))?;
    let voltages = profile.voltages(net).map_err(CliError::input)?;
    let dispatch: Option<Vec<(f64, f64)>> = profile.dispatch.as_ref().map(|d| d.iter().map(|g| (g.p, g.q)).collect());
    let point = model.embed(net, &voltages, dispatch.as_deref()).map_err(|e| CliError::input(e.to_string()))?;
    let (mut worst, mut name) = model.max_violation(&point.0, |p| p != Provenance::Operating, false);
    let (op, op_name) = model.max_violation(&point.0, |p| p == Provenance::Operating, true);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let suite = cuts::random_cut_suite(&model, net, VALIDATE_POINTS, &mut rng).map_err(|e| CliError { code: EXIT_LP, message: e.to_string() })?;
    for cut in &suite {
        let v = cut.constraint.violation(&point.0);
        if v > worst {
            worst = v;
            name = cut.constraint.name.clone();
        }
    }
    Ok((worst, name, op, op_name, suite.len()))
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let net = load_case(&args.case)?;
    let text = std::fs::read_to_string(&args.profile).map_err(|e| CliError::input(format!("{}: {e}", args.profile.display())))?;
    let profile: VoltageProfile = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", args.profile.display())))?;
    let (worst, name, op, op_name, count) = validate_profile(&net, &profile, args.seed)?;
    let _ = writeln!(out, "{count} cuts checked");
    let _ = writeln!(out, "max violation {worst:.3e} ({name})");
    let _ = writeln!(out, "operating violation {op:.3e} ({op_name})");
    if let Some(path) = &args.out {
        let report = ValidateReport {
            schema: REPORT_SCHEMA.into(),
            manifest: RunManifest::new(&args.case, "validate", args),
            max_violation: worst,
            worst: name,
            operating_violation: op,
            worst_operating: op_name,
            cuts_checked: count,
        };
        write_file(path, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    Ok(if worst <= VALIDATE_TOL { EXIT_OK } else { EXIT_INVALID })
}

pub fn cmd_info(args: &InfoArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let net = load_case(&args.case)?;
    let _ = writeln!(out, "{}", net.summary());
    Ok(EXIT_OK)
}

pub fn dispatch(cli: &Cli, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Relax(a) => cmd_relax(a, out),
        Command::ExportMilp(a) => cmd_export_milp(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Info(a) => cmd_info(a, out),
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    match dispatch(&cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
