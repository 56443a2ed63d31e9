use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use seqlof::design::{
    dominance_compare, minimize_q_log_q, q_design_curve, verify_e_inverse_law, Design, Placement,
    DEFAULT_EPSILON,
};
use seqlof::experiment::{
    mc_drift, mc_limit_distribution, mc_power, mc_size, DesignChoice, Functional, McConfig,
    McReport, Scenario,
};
use seqlof::regression::Polynomial;
use seqlof::sequential::{LackOfFitMonitor, MonitorEvent, TestConfig};
use seqlof::trends::{ErrorLaw, Noise};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] seqlof::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("manifest: {0}")]
    Manifest(#[from] toml::ser::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(seqlof::Error::Config(_))
            | CliError::Lib(seqlof::Error::InfeasiblePlacement(_))
            | CliError::Lib(seqlof::Error::Domain(_))
            | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Sequential lack-of-fit test for constant regression and q-design analysis.
#[derive(Debug, Parser)]
#[command(name = "seqlof", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Empirical size of the test under the null model.
    Size(SizeArgs),
    /// Mean residual path under a local jump alternative vs the limiting drift.
    Drift(DriftArgs),
    /// Empirical power under a jump or falling-line alternative.
    Power(PowerArgs),
    /// Compare two asymptotic q-designs for the jump alternative.
    Dominance(DominanceArgs),
    /// Check that smaller q dominates on [1/e, 1) for every pair in a grid.
    Elaw(ElawArgs),
    /// Distribution of the terminal value or minimum of the null residual path.
    Limit(LimitArgs),
    /// Read "t y" pairs from stdin and print the running test decision.
    Monitor(MonitorArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write CSV here, with a run manifest beside it, instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Errors {
    Normal,
    Uniform,
}

impl From<Errors> for ErrorLaw {
    fn from(e: Errors) -> Self {
        match e {
            Errors::Normal => ErrorLaw::Normal,
            Errors::Uniform => ErrorLaw::Uniform,
        }
    }
}

#[derive(Debug, Args)]
struct SizeArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// uniform | zero | split:Q | clustered:Q[:EPS] | file:PATH
    #[arg(long, default_value = "uniform")]
    design: String,
    /// Reference point for q-designs.
    #[arg(long, default_value_t = 0.5)]
    t0: f64,
    /// Polynomial basis dimension (1 = constant model).
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, value_enum, default_value = "normal")]
    errors: Errors,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct DriftArgs {
    #[arg(long)]
    q: f64,
    #[arg(long)]
    c0: f64,
    #[arg(long)]
    c1: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    /// Number of grid intervals; the curve is reported at z = k / G.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "uniform")]
    design: String,
    #[arg(long, value_enum, default_value = "normal")]
    errors: Errors,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioKind {
    Step,
    Line,
}

#[derive(Debug, Args)]
struct PowerArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioKind,
    #[arg(long)]
    t0: f64,
    #[arg(long)]
    c0: f64,
    #[arg(long)]
    c1: f64,
    #[arg(long, default_value = "uniform")]
    design: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Use the alternative as given instead of shrinking it by 1/sqrt(n - d).
    #[arg(long)]
    fixed: bool,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, value_enum, default_value = "normal")]
    errors: Errors,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct DominanceArgs {
    #[arg(long)]
    q1: f64,
    #[arg(long)]
    q2: f64,
    /// Compare on z = k / G, k = 1..G, instead of the default log grid.
    #[arg(long)]
    grid: Option<usize>,
    /// Print both curves on the grid instead of the one-line verdict.
    #[arg(long)]
    curves: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ElawArgs {
    /// Comma-separated q values.
    #[arg(long, value_delimiter = ',', required = true)]
    qgrid: Vec<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FunctionalKind {
    Terminal,
    Minimum,
}

#[derive(Debug, Args)]
struct LimitArgs {
    #[arg(long, value_enum, default_value = "terminal")]
    functional: FunctionalKind,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "normal")]
    errors: Errors,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct MonitorArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Planned number of observations.
    #[arg(long)]
    n: usize,
    /// Polynomial basis dimension (1 = constant model).
    #[arg(long, default_value_t = 1)]
    d: usize,
}

fn parse_design(spec: &str) -> CliResult<DesignChoice> {
    let usage = || CliError::Usage(format!("bad design spec {spec:?}"));
    let mut parts = spec.splitn(2, ':');
    let kind = parts.next().unwrap_or_default();
    let rest = parts.next();
    let number = |s: &str| s.parse::<f64>().map_err(|_| usage());
    Ok(match (kind, rest) {
        ("uniform", None) => DesignChoice::Uniform,
        ("zero", None) => DesignChoice::Zero,
        ("split", Some(q)) => DesignChoice::q_design(number(q)?, Placement::UniformSplit),
        ("clustered", Some(args)) => {
            let mut it = args.split(':');
            let q = number(it.next().ok_or_else(usage)?)?;
            let epsilon = match it.next() {
                Some(e) => number(e)?,
                None => DEFAULT_EPSILON,
            };
            if it.next().is_some() {
                return Err(usage());
            }
            DesignChoice::QDesign {
                q,
                placement: Placement::ClusteredDStar,
                epsilon,
            }
        }
        ("file", Some(path)) => {
            let text = fs::read_to_string(path)?;
            let points = text
                .split_whitespace()
                .map(|tok| tok.parse::<f64>().map_err(|_| usage()))
                .collect::<CliResult<Vec<f64>>>()?;
            DesignChoice::Explicit {
                design: Design::new(points)?,
            }
        }
        _ => return Err(usage()),
    })
}

fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.toml")
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize, S: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    csv: String,
    config: C,
    summary: S,
}

/// Writes CSV rows to `--out` (plus a manifest) or to stdout.
fn emit<C: Serialize, S: Serialize>(
    output: &Output,
    subcommand: &str,
    header: &[&str],
    rows: Vec<Vec<String>>,
    config: C,
    summary: S,
) -> CliResult<()> {
    let sink: Box<dyn Write> = match &output.out {
        Some(path) => Box::new(fs::File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    if let Some(path) = &output.out {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            csv: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            config,
            summary,
        };
        fs::write(manifest_path(path), toml::to_string_pretty(&manifest)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportSummary {
    estimate: f64,
    std_error: f64,
    replications: usize,
    rejections: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    effective_q: Option<f64>,
}

impl From<&McReport> for ReportSummary {
    fn from(r: &McReport) -> Self {
        Self {
            estimate: r.estimate,
            std_error: r.std_error,
            replications: r.replications,
            rejections: r.rejections,
            effective_q: r.effective_q,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn noise(errors: Errors) -> Noise {
    Noise {
        law: errors.into(),
        scale: 1.0,
    }
}

fn size(args: SizeArgs) -> CliResult<()> {
    let design = parse_design(&args.design)?;
    // q-designs need a reference point even under the null
    let design = match design {
        DesignChoice::QDesign { .. } | DesignChoice::Zero => DesignChoice::Explicit {
            design: design.build(args.n, Some(args.t0))?,
        },
        other => other,
    };
    let config = McConfig::new(args.n, args.reps, args.seed)
        .with_alpha(args.alpha)
        .with_dimension(args.d)
        .with_design(design)
        .with_noise(noise(args.errors));
    let report = mc_size(&config)?;
    let rows = vec![vec![
        args.alpha.to_string(),
        args.n.to_string(),
        report.replications.to_string(),
        report.rejections.to_string(),
        report.estimate.to_string(),
        report.std_error.to_string(),
    ]];
    emit(
        &args.output,
        "size",
        &[
            "alpha",
            "n",
            "replications",
            "rejections",
            "estimate",
            "stderr",
        ],
        rows,
        &config,
        ReportSummary::from(&report),
    )
}

fn drift(args: DriftArgs) -> CliResult<()> {
    if args.grid == 0 {
        return Err(CliError::Usage("--grid must be positive".into()));
    }
    let config = McConfig::new(args.n, args.reps, args.seed)
        .with_alpha(args.alpha)
        .with_scenario(Scenario::Step {
            t0: args.q,
            c0: args.c0,
            c1: args.c1,
        })
        .with_design(parse_design(&args.design)?)
        .with_noise(noise(args.errors));
    let z: Vec<f64> = (0..=args.grid)
        .map(|k| k as f64 / args.grid as f64)
        .collect();
    let report = mc_drift(&config, &z)?;
    let rows = report
        .curve
        .iter()
        .map(|p| {
            vec![
                p.z.to_string(),
                p.mean.to_string(),
                p.stderr.to_string(),
                fmt_opt(p.h_closed_form),
            ]
        })
        .collect();
    emit(
        &args.output,
        "drift",
        &["z", "mean", "stderr", "h_closed_form"],
        rows,
        &config,
        ReportSummary::from(&report),
    )
}

fn power(args: PowerArgs) -> CliResult<()> {
    let scenario = match args.scenario {
        ScenarioKind::Step => Scenario::Step {
            t0: args.t0,
            c0: args.c0,
            c1: args.c1,
        },
        ScenarioKind::Line => Scenario::Line {
            t0: args.t0,
            c0: args.c0,
            c1: args.c1,
        },
    };
    if matches!(args.scenario, ScenarioKind::Step) && args.c0 <= args.c1 {
        eprintln!("warning: c0 <= c1 gives no downward drift; the one-sided test has little power");
    }
    let mut config = McConfig::new(args.n, args.reps, args.seed)
        .with_alpha(args.alpha)
        .with_dimension(args.d)
        .with_scenario(scenario)
        .with_design(parse_design(&args.design)?)
        .with_noise(noise(args.errors));
    if args.fixed {
        config = config.fixed_alternative();
    }
    let report = mc_power(&config)?;
    let kind = match args.scenario {
        ScenarioKind::Step => "step",
        ScenarioKind::Line => "line",
    };
    let rows = vec![vec![
        kind.to_string(),
        args.t0.to_string(),
        args.c0.to_string(),
        args.c1.to_string(),
        fmt_opt(report.effective_q),
        args.alpha.to_string(),
        args.n.to_string(),
        report.replications.to_string(),
        report.rejections.to_string(),
        report.estimate.to_string(),
        report.std_error.to_string(),
    ]];
    emit(
        &args.output,
        "power",
        &[
            "scenario",
            "t0",
            "c0",
            "c1",
            "effective_q",
            "alpha",
            "n",
            "replications",
            "rejections",
            "estimate",
            "stderr",
        ],
        rows,
        &config,
        ReportSummary::from(&report),
    )
}

#[derive(Serialize)]
struct DominanceConfig {
    q1: f64,
    q2: f64,
    grid: Option<usize>,
}

#[derive(Serialize)]
struct DominanceSummary {
    verdict: String,
}

fn dominance(args: DominanceArgs) -> CliResult<()> {
    let grid: Option<Vec<f64>> = args
        .grid
        .map(|g| (1..=g).map(|k| k as f64 / g as f64).collect());
    let verdict = dominance_compare(args.q1, args.q2, grid.as_deref())?;
    let config = DominanceConfig {
        q1: args.q1,
        q2: args.q2,
        grid: args.grid,
    };
    let summary = DominanceSummary {
        verdict: verdict.to_string(),
    };
    if args.curves {
        let z = grid.unwrap_or_else(|| seqlof::design::dominance_grid(args.q1, args.q2));
        let rows = z
            .iter()
            .map(|&z| {
                let (a, b) = (q_design_curve(args.q1, z), q_design_curve(args.q2, z));
                vec![
                    z.to_string(),
                    a.to_string(),
                    b.to_string(),
                    (a - b).to_string(),
                ]
            })
            .collect();
        emit(
            &args.output,
            "dominance",
            &["z", "curve_q1", "curve_q2", "diff"],
            rows,
            config,
            summary,
        )
    } else {
        let points = grid.as_ref().map_or_else(
            || seqlof::design::dominance_grid(args.q1, args.q2).len(),
            Vec::len,
        );
        let rows = vec![vec![
            args.q1.to_string(),
            args.q2.to_string(),
            points.to_string(),
            verdict.to_string(),
        ]];
        emit(
            &args.output,
            "dominance",
            &["q1", "q2", "grid_points", "verdict"],
            rows,
            config,
            summary,
        )
    }
}

#[derive(Serialize)]
struct ElawSummary {
    passed: bool,
    pairs: usize,
    out_of_range: Vec<f64>,
    q_star: f64,
    q_log_q_min: f64,
}

fn elaw(args: ElawArgs) -> CliResult<()> {
    let report = verify_e_inverse_law(&args.qgrid);
    for q in &report.out_of_range {
        eprintln!("warning: q = {q} lies outside [1/e, 1) and was skipped");
    }
    let rows = report
        .pairs
        .iter()
        .map(|p| {
            vec![
                p.q_smaller.to_string(),
                p.q_larger.to_string(),
                p.verdict.to_string(),
                (p.q_smaller * p.q_smaller.ln()).to_string(),
                (p.q_larger * p.q_larger.ln()).to_string(),
            ]
        })
        .collect();
    let (q_star, q_log_q_min) = minimize_q_log_q();
    let summary = ElawSummary {
        passed: report.passed(),
        pairs: report.pairs.len(),
        out_of_range: report.out_of_range.clone(),
        q_star,
        q_log_q_min,
    };
    #[derive(Serialize)]
    struct ElawConfig<'a> {
        qgrid: &'a [f64],
    }
    emit(
        &args.output,
        "elaw",
        &[
            "q_smaller",
            "q_larger",
            "verdict",
            "qlogq_smaller",
            "qlogq_larger",
        ],
        rows,
        ElawConfig { qgrid: &args.qgrid },
        summary,
    )
}

fn limit(args: LimitArgs) -> CliResult<()> {
    let functional = match args.functional {
        FunctionalKind::Terminal => Functional::Terminal,
        FunctionalKind::Minimum => Functional::Minimum,
    };
    let config = McConfig::new(args.n, args.reps, args.seed)
        .with_alpha(args.alpha)
        .with_noise(noise(args.errors));
    let report = mc_limit_distribution(&config, functional)?;
    let dist = report
        .distribution
        .as_ref()
        .expect("limit runs carry a summary");
    let name = match functional {
        Functional::Terminal => "terminal",
        Functional::Minimum => "minimum",
    };
    let rows = vec![vec![
        name.to_string(),
        args.n.to_string(),
        report.replications.to_string(),
        dist.mean.to_string(),
        dist.variance.to_string(),
        fmt_opt(dist.ks_distance),
        fmt_opt(dist.crossing_frequency),
        fmt_opt(dist.threshold),
    ]];
    emit(
        &args.output,
        "limit",
        &[
            "functional",
            "n",
            "replications",
            "mean",
            "variance",
            "ks_distance",
            "crossing_frequency",
            "threshold",
        ],
        rows,
        &config,
        ReportSummary::from(&report),
    )
}

fn monitor(args: MonitorArgs) -> CliResult<()> {
    if args.d == 0 {
        return Err(CliError::Usage("--d must be at least 1".into()));
    }
    let config = TestConfig::new(args.alpha, args.n, args.d)?;
    let mut monitor = LackOfFitMonitor::new(Polynomial::new(args.d - 1), config)?;
    let threshold = monitor.state().threshold();
    let mut out = csv::Writer::from_writer(io::stdout().lock());
    out.write_record([
        "index",
        "t",
        "y",
        "residual",
        "statistic",
        "threshold",
        "crossed",
    ])?;

    let stdin = io::stdin();
    let mut pending: Vec<f64> = Vec::with_capacity(2);
    for line in stdin.lock().lines() {
        let line = line?;
        for token in line.split_whitespace() {
            let value = token
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("not a number: {token:?}")))?;
            pending.push(value);
            if pending.len() < 2 {
                continue;
            }
            let (t, y) = (pending[0], pending[1]);
            pending.clear();
            if let MonitorEvent::Residual {
                index,
                innovation,
                statistic,
                crossed,
            } = monitor.push(t, y)?
            {
                out.write_record([
                    index.to_string(),
                    t.to_string(),
                    y.to_string(),
                    innovation.residual.to_string(),
                    statistic.to_string(),
                    threshold.to_string(),
                    crossed.to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    if !pending.is_empty() {
        return Err(CliError::Usage("input ended with an unpaired value".into()));
    }
    let state = monitor.state();
    match state.first_crossing_index() {
        Some(k) => eprintln!(
            "reject: boundary crossed at residual {k} of {}",
            state.capacity()
        ),
        None if state.is_complete() => {
            eprintln!("accept: no crossing in {} residuals", state.capacity())
        }
        None => eprintln!(
            "undecided: no crossing yet, {} of {} residuals seen",
            state.residual_count(),
            state.capacity()
        ),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Size(a) => size(a),
        Command::Drift(a) => drift(a),
        Command::Power(a) => power(a),
        Command::Dominance(a) => dominance(a),
        Command::Elaw(a) => elaw(a),
        Command::Limit(a) => limit(a),
        Command::Monitor(a) => monitor(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
