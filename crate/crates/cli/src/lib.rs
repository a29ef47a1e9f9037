//! Command-line front end: `analyze`, `verify`, `gallery`, `congruence`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lightcone::classify::{analyze, AnalysisConfig, RunReport};
use lightcone::gallery;
use lightcone::lightcone::congruence_defect;
use lightcone::verify::{verify_suite, SUITES};
use lightcone::GeomError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lightcone", version, about = "Light-cone analysis of conformal Kaehler submanifolds")]
struct Cli {
    #[command(flatten)]
    tol: TolFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TolFlags {
    /// Relative singular-value cutoff for ranks
    #[arg(long = "tol-rank", global = true)]
    rank: Option<f64>,
    /// Threshold for flatness and nullity defects
    #[arg(long = "tol-flat", global = true)]
    flat: Option<f64>,
    /// Threshold for the spread of the delta field
    #[arg(long = "tol-var", global = true)]
    var: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the pointwise pipeline over a grid and write a JSON report
    Analyze(AnalyzeArgs),
    /// Run a named self-check suite
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List gallery example ids or print one example as JSON
    Gallery {
        #[arg(long)]
        list: bool,
        #[arg(long, conflicts_with = "list")]
        show: Option<String>,
    },
    /// Congruence defect between the light-cone representatives of two examples
    Congruence {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// JSON file mirroring the analysis config
    #[arg(long, conflicts_with = "example")]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<String>,
    /// Complex dimension
    #[arg(long)]
    n: Option<usize>,
    /// Samples per chart axis
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "max-points")]
    max_points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage_error(msg: &str, schema: bool) -> i32 {
    eprintln!("error: {msg}");
    if schema {
        eprintln!("config schema (JSON):");
        let mut example = AnalysisConfig::for_example("inv-catenoid-cyl");
        example.n = Some(4);
        example.out = Some("report.json".into());
        eprintln!("{}", serde_json::to_string_pretty(&example).expect("config serializes"));
    }
    EXIT_USAGE
}

fn is_usage(e: &GeomError) -> bool {
    matches!(e, GeomError::GenerationFailed(_) | GeomError::UnknownSuite(_) | GeomError::BadParams(_))
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Analyze(a) => run_analyze(a, &cli.tol),
        Command::Verify { suite, seed } => run_verify(&suite, seed),
        Command::Gallery { list, show } => run_gallery(list, show),
        Command::Congruence { left, right, samples, seed } => run_congruence(&left, &right, samples, seed),
    }
}

fn build_config(a: &AnalyzeArgs, tol: &TolFlags) -> Result<AnalysisConfig, String> {
    let mut config = match (&a.config, &a.example) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str::<AnalysisConfig>(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?
        }
        (None, Some(id)) => AnalysisConfig::for_example(id),
        _ => return Err("analyze needs --config <path> or --example <id>".into()),
    };
    if a.n.is_some() {
        config.n = a.n;
    }
    if let Some(g) = a.grid {
        config.grid = g;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(m) = a.max_points {
        config.max_points = m;
    }
    if a.out.is_some() {
        config.out = a.out.clone();
    }
    if let Some(v) = tol.rank {
        config.tolerances.rank = v;
    }
    if let Some(v) = tol.flat {
        config.tolerances.flat = v;
    }
    if let Some(v) = tol.var {
        config.tolerances.var = v;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

/// Pipeline invariants whose violation makes `analyze` exit with 1.
pub fn assertion_failures(report: &RunReport) -> Vec<String> {
    let mut out = Vec::new();
    let asserted = report.points.iter().filter(|p| p.error.as_deref() == Some("ASSERTION_FAILED")).count();
    if asserted > 0 {
        out.push(format!("{asserted} points failed an internal assertion"));
    }
    let not_flat = report.points.iter().filter(|p| p.error.as_deref() == Some("NOT_FLAT")).count();
    if not_flat > 0 {
        out.push(format!("{not_flat} points have a non-flat coupled form"));
    }
    let a_f = report.aggregate.max_residuals.a_f;
    if a_f > 1e-8 && report.aggregate.counts.total > report.aggregate.counts.flat {
        out.push(format!("A_F + I defect {a_f:.3e} exceeds 1e-8"));
    }
    out
}

fn run_analyze(a: AnalyzeArgs, tol: &TolFlags) -> i32 {
    let config = match build_config(&a, tol) {
        Ok(c) => c,
        Err(msg) => return usage_error(&msg, true),
    };
    let report = match analyze(&config) {
        Ok(r) => r,
        Err(e) if is_usage(&e) => return usage_error(&e.to_string(), true),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ASSERTION;
        }
    };
    let json = report.to_json();
    match &config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_ASSERTION;
            }
            let agg = &report.aggregate;
            println!(
                "{}: {} ({} of {} points classified, delta variance {})",
                report.example,
                agg.classification,
                agg.counts.classified,
                agg.counts.total,
                agg.delta_variance.map_or("n/a".to_string(), |v| format!("{v:.3e}"))
            );
        }
        None => println!("{json}"),
    }
    let failures = assertion_failures(&report);
    for f in &failures {
        eprintln!("assertion: {f}");
    }
    if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_ASSERTION
    }
}

fn run_verify(suite: &str, seed: u64) -> i32 {
    match verify_suite(suite, seed) {
        Ok(r) => {
            println!("{}", serde_json::to_string_pretty(&r).expect("suite report serializes"));
            if r.passed {
                EXIT_OK
            } else {
                EXIT_ASSERTION
            }
        }
        Err(GeomError::UnknownSuite(name)) => usage_error(&format!("unknown suite '{name}'; available: {}", SUITES.join(", ")), false),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ASSERTION
        }
    }
}

fn run_gallery(list: bool, show: Option<String>) -> i32 {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if list {
        for id in gallery::list() {
            let _ = writeln!(out, "{id}");
        }
        return EXIT_OK;
    }
    match show {
        Some(id) => match gallery::by_id(&id) {
            Ok(e) => {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&e).expect("example serializes"));
                EXIT_OK
            }
            Err(e) => usage_error(&e.to_string(), false),
        },
        None => usage_error("gallery needs --list or --show <id>", false),
    }
}

fn run_congruence(left: &str, right: &str, samples: usize, seed: u64) -> i32 {
    let (l, r) = match (gallery::by_id(left), gallery::by_id(right)) {
        (Ok(l), Ok(r)) => (l, r),
        (Err(e), _) | (_, Err(e)) => return usage_error(&e.to_string(), false),
    };
    if samples == 0 {
        return usage_error("--samples must be positive", false);
    }
    let result = l.canonical_representative().and_then(|rl| {
        let rr = r.canonical_representative()?;
        congruence_defect(&rl, &rr, &l.patch.domain.center(), &l.sample_points(samples, seed))
    });
    match result {
        Ok(c) => {
            let json = serde_json::json!({
                "left": left,
                "right": right,
                "defect": c.defect,
                "lorentz_defect": c.lorentz_defect,
                "metric_deviation": c.metric_deviation,
            });
            println!("{}", serde_json::to_string_pretty(&json).expect("json"));
            EXIT_OK
        }
        Err(e) => {
            println!("{}", serde_json::json!({"left": left, "right": right, "error": e.code(), "message": e.to_string()}));
            EXIT_ASSERTION
        }
    }
}
