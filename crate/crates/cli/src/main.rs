use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ngdim::dimtest::{run_test, Decision, Method, TestResult};
use ngdim::io::{matrix_to_csv, parse_index_list, parse_method_list, read_csv};
use ngdim::nulldist::{mixture_quantile, mixture_survival};
use ngdim::scatter::{sigma1_hat, sigma1_hat_ica};
use ngdim::{
    dimtest::null_mixture_for, estimate_q, fobi_fit, run_experiment, BootstrapConfig, Error,
    EstimateRule, ExperimentConfig, ModelSpec, Sigma1Mode, TestConfig, ThresholdRule,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "ngdim",
    version,
    about = "Test and estimate the dimension of the non-Gaussian subspace"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test H0,k: the data has at most k non-Gaussian directions.
    Test(TestArgs),
    /// Estimate the signal dimension by sequential testing.
    EstimateQ(EstimateArgs),
    /// Evaluate the asymptotic null law of the combined statistic.
    NullDist(NullDistArgs),
    /// Rejection rates of the tests on one of the simulation models.
    Simulate(SimulateArgs),
    /// FOBI eigenvalues and kurtosis summaries of a dataset.
    Fobi(FobiArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct TestingArgs {
    /// asy, asy-var, asy-mean, asy-sum or boot
    #[arg(long, default_value = "asy", value_parser = parse_method)]
    method: Method,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "ngca", value_parser = parse_sigma1)]
    sigma1: Sigma1Mode,
    /// Worker threads for bootstrap replicates (default: all cores).
    #[arg(long, env = "NGDIM_WORKERS")]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl TestingArgs {
    fn config(&self) -> TestConfig {
        TestConfig {
            method: self.method,
            sigma1_mode: self.sigma1,
            bootstrap: BootstrapConfig {
                replicates: self.replicates,
                seed: self.seed,
                parallel_workers: self.workers,
            },
        }
    }
}

#[derive(Args)]
struct TestArgs {
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    alpha: f64,
    #[command(flatten)]
    testing: TestingArgs,
}

#[derive(Args)]
struct EstimateArgs {
    input: PathBuf,
    /// Significance level of each test (default 0.05).
    #[arg(long, conflicts_with = "threshold_rule", allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Accept the first k with n(p-k)T_k below c(n): sqrt, log or pow:<e>.
    #[arg(long, value_parser = parse_threshold)]
    threshold_rule: Option<ThresholdRule>,
    #[command(flatten)]
    testing: TestingArgs,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("query").required(true).args(["eval", "quantile"])))]
struct NullDistArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, allow_negative_numbers = true)]
    sigma1: f64,
    /// Print P(C > t).
    #[arg(long, allow_negative_numbers = true)]
    eval: Option<f64>,
    /// Print the t with P(C > t) = alpha.
    #[arg(long, allow_negative_numbers = true)]
    quantile: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// m1, m2 or m3
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Hypotheses to test, e.g. 2,3,4 or 1-3.
    #[arg(long)]
    ks: String,
    #[arg(long, default_value = "asy")]
    methods: String,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value = "ngca", value_parser = parse_sigma1)]
    sigma1: Sigma1Mode,
    #[arg(long, env = "NGDIM_WORKERS")]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FobiArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the estimated components to this CSV file.
    #[arg(long)]
    components: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sigma1(s: &str) -> Result<Sigma1Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_threshold(s: &str) -> Result<ThresholdRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_data() {
            2
        } else if e.is_numerical() {
            4
        } else {
            3
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn validation_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        message: message.into(),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn check_alpha(alpha: f64) -> CliResult {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(validation_error(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn check_workers(workers: Option<usize>) -> CliResult {
    match workers {
        Some(0) => Err(validation_error("--workers must be at least 1")),
        _ => Ok(()),
    }
}

/// Writes `contents` next to `path` and renames it into place, so a failed run leaves no
/// partial file behind.
fn write_atomic(path: &Path, contents: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| Failure {
        code: 2,
        message: format!("cannot write {}: {e}", path.display()),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn result_json(r: &TestResult, decision: Decision) -> Value {
    json!({
        "method": r.method,
        "k": r.k,
        "statistic": r.statistic,
        "scaled_statistic": r.scaled_statistic,
        "p_value": r.p_value,
        "sigma1": r.sigma1,
        "decision": decision,
        "n": r.n,
        "p": r.p,
        "warnings": r.warnings,
        "mixture": r.mixture,
        "df": r.df,
    })
}

const RESULT_CSV_HEADER: &str =
    "method,k,statistic,scaled_statistic,p_value,sigma1,decision,n,p,mixture_a,mixture_m,mixture_b,df,warnings";

fn result_csv_row(out: &mut String, r: &TestResult, decision: Decision) {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let warnings: Vec<String> = r
        .warnings
        .iter()
        .map(|w| {
            serde_json::to_value(w)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default()
        })
        .collect();
    let decision = match decision {
        Decision::Reject => "reject",
        Decision::Accept => "accept",
    };
    let _ = writeln!(
        out,
        "{},{},{:?},{:?},{:?},{:?},{},{},{},{},{},{},{},{}",
        r.method,
        r.k,
        r.statistic,
        r.scaled_statistic,
        r.p_value,
        r.sigma1,
        decision,
        r.n,
        r.p,
        opt(r.mixture.map(|m| format!("{:?}", m.a))),
        opt(r.mixture.map(|m| m.m.to_string())),
        opt(r.mixture.map(|m| format!("{:?}", m.b))),
        opt(r.df.map(|d| d.to_string())),
        warnings.join(";"),
    );
}

/// Writes to stdout; a closed pipe (e.g. output piped into `head`) is not an error.
fn emit(text: &str) -> CliResult {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure {
            code: 2,
            message: format!("cannot write to stdout: {e}"),
        }),
        _ => Ok(()),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn cmd_test(args: TestArgs) -> CliResult {
    check_alpha(args.alpha)?;
    check_workers(args.testing.workers)?;
    if args.testing.method == Method::Bootstrap && args.testing.replicates == 0 {
        return Err(validation_error("--replicates must be at least 1"));
    }
    let data = read_csv(&args.input)?;
    args.testing.method.validate(data.data.p(), args.k)?;
    let r = run_test(&data.data, args.k, &args.testing.config())?;
    let decision = r.decision(args.alpha);
    match args.testing.format {
        Format::Json => emit(&(pretty(&result_json(&r, decision)) + "\n"))?,
        Format::Csv => {
            let mut out = format!("{RESULT_CSV_HEADER}\n");
            result_csv_row(&mut out, &r, decision);
            emit(&out)?;
        }
    }
    Ok(())
}

fn cmd_estimate_q(args: EstimateArgs) -> CliResult {
    check_workers(args.testing.workers)?;
    let rule = match (args.alpha, args.threshold_rule) {
        (_, Some(t)) => EstimateRule::ThresholdSequence(t),
        (alpha, None) => {
            let alpha = alpha.unwrap_or(0.05);
            check_alpha(alpha)?;
            EstimateRule::FixedAlpha(alpha)
        }
    };
    let data = read_csv(&args.input)?;
    let x = &data.data;
    if x.n() <= x.p() {
        return Err(Error::TooFewObservations { n: x.n(), p: x.p() }.into());
    }
    let est = estimate_q(x, rule, &args.testing.config())?;
    let decide = |r: &TestResult| match rule {
        EstimateRule::FixedAlpha(alpha) => r.decision(alpha),
        EstimateRule::ThresholdSequence(t) if r.scaled_statistic < t.threshold(r.n, r.k) => {
            Decision::Accept
        }
        EstimateRule::ThresholdSequence(_) => Decision::Reject,
    };
    match args.testing.format {
        Format::Json => {
            let trail: Vec<Value> = est
                .trail
                .iter()
                .map(|r| result_json(r, decide(r)))
                .collect();
            let v = json!({ "q_hat": est.q_hat, "rule": est.rule, "trail": trail });
            emit(&(pretty(&v) + "\n"))?;
        }
        Format::Csv => {
            let mut out = format!("q_hat,{RESULT_CSV_HEADER}\n");
            for r in &est.trail {
                let _ = write!(out, "{},", est.q_hat);
                result_csv_row(&mut out, r, decide(r));
            }
            emit(&out)?;
        }
    }
    Ok(())
}

fn cmd_null_dist(args: NullDistArgs) -> CliResult {
    if args.p == 0 {
        return Err(validation_error("--p must be at least 1"));
    }
    let mix = null_mixture_for(args.p, args.k, args.sigma1)?;
    let value = match (args.eval, args.quantile) {
        (Some(t), _) if t.is_nan() => return Err(validation_error("--eval must be a number")),
        (Some(t), _) => mixture_survival(&mix, t)?,
        (None, Some(alpha)) => mixture_quantile(&mix, alpha)?,
        (None, None) => unreachable!("clap requires one of --eval and --quantile"),
    };
    emit(&format!("{value:?}\n"))
}

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let model: ModelSpec = args
        .model
        .parse()
        .map_err(|e: Error| input_error(e.to_string()))?;
    check_alpha(args.alpha)?;
    check_workers(args.workers)?;
    let ks = parse_index_list(&args.ks)?;
    let methods = parse_method_list(&args.methods)?;
    if methods.contains(&Method::Bootstrap) && args.replicates == 0 {
        return Err(validation_error("--replicates must be at least 1"));
    }
    let cfg = ExperimentConfig {
        n: args.n,
        reps: args.reps,
        ks,
        methods,
        alpha: args.alpha,
        sigma1_mode: args.sigma1,
        bootstrap: BootstrapConfig {
            replicates: args.replicates,
            seed: args.seed,
            parallel_workers: args.workers,
        },
        seed: args.seed,
    };
    let report = run_experiment(&model, &cfg)?;
    if report.failures > 0 {
        eprintln!(
            "warning: {} of {} repetitions failed and were left out of the rates",
            report.failures, report.reps
        );
    }
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    };
    match &args.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => emit(&text),
    }
}

fn cmd_fobi(args: FobiArgs) -> CliResult {
    let data = read_csv(&args.input)?;
    let x = &data.data;
    let fit = fobi_fit(x)?;
    let ngca = sigma1_hat(&fit, x)?;
    let ica = sigma1_hat_ica(&fit, x)?;
    if let Some(path) = &args.components {
        let z = fit.components(x)?;
        let header: Vec<String> = (1..=x.p()).map(|j| format!("z{j}")).collect();
        write_atomic(path, matrix_to_csv(z.as_matrix(), Some(&header)).as_bytes())?;
    }
    match args.format {
        Format::Json => {
            let v = json!({
                "n": fit.n,
                "p": fit.p(),
                "eigenvalues": fit.d,
                "sigma1_ngca": ngca.value,
                "sigma1_ica": ica.value,
            });
            emit(&(pretty(&v) + "\n"))?;
        }
        Format::Csv => {
            let mut out = String::from("quantity,value\n");
            for (i, d) in fit.d.iter().enumerate() {
                let _ = writeln!(out, "d{},{d:?}", i + 1);
            }
            let _ = writeln!(out, "sigma1_ngca,{:?}", ngca.value);
            let _ = writeln!(out, "sigma1_ica,{:?}", ica.value);
            emit(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::EstimateQ(a) => cmd_estimate_q(a),
        Command::NullDist(a) => cmd_null_dist(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fobi(a) => cmd_fobi(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
