use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use cimeter::bench::{run_bench, BenchRow, DEFAULT_MEASURES, DEFAULT_SIZES};
use cimeter::citest::{local_permutation_test, size_power_experiment, TestConfig};
use cimeter::data::{generate, load_csv, write_csv, GeneratorSpec, Model};
use cimeter::statistic::{compute, KernelChoice, MetricChoice};
use cimeter::verify::run_verify;
use cimeter::{ColumnRoleMap, Dataset, EstimatorConfig, Measure, SmoothingShape};

const SCHEMA: &str = "cimeter/1";
const THREADS_VAR: &str = "CIMETER_THREADS";

#[derive(Parser)]
#[command(name = "cimeter", version, about = "Conditional dependence measures and conditional independence tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one measure on a CSV dataset.
    Compute {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "hscic_trace")]
        measure: Measure,
        #[command(flatten)]
        estimator: EstimatorArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Local permutation test of X independent of Y given Z, on a file or on
    /// repeated draws from a generator (`--model`).
    Test {
        #[arg(long, required_unless_present = "model", conflicts_with = "model")]
        input: Option<PathBuf>,
        /// Column roles, `x=a,b;y=c;z=d[;zkind=discrete]`; defaults to the file's `#roles:` line.
        #[arg(long, value_parser = parse_roles)]
        roles: Option<ColumnRoleMap>,
        #[arg(long, default_value = "hscic_trace")]
        measure: Measure,
        #[arg(long = "B", default_value_t = 200)]
        b: usize,
        #[arg(long, default_value_t = 10)]
        knn: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        model: Option<Model>,
        #[arg(long, default_value_t = 100, requires = "model")]
        n: usize,
        #[arg(long, default_value_t = 100, requires = "model")]
        runs: usize,
        #[command(flatten)]
        dims: DimArgs,
        #[command(flatten)]
        estimator: EstimatorArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the identity and oracle suite on seeded random data.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Runtime table of estimators over sample sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
        sizes: Vec<usize>,
        #[arg(long = "measure", value_delimiter = ',', default_values_t = DEFAULT_MEASURES)]
        measures: Vec<Measure>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a synthetic dataset as CSV.
    Generate {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        dims: DimArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Column roles, `x=a,b;y=c;z=d[;zkind=discrete]`; defaults to the file's `#roles:` line.
    #[arg(long, value_parser = parse_roles)]
    roles: Option<ColumnRoleMap>,
}

#[derive(Args)]
struct DimArgs {
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value_t = 1)]
    r: usize,
}

#[derive(Args)]
struct EstimatorArgs {
    /// gaussian[:bw], laplacian[:scale], gaussian-density:t, distance[:metric], dirac
    #[arg(long)]
    kernel_x: Option<KernelChoice>,
    #[arg(long)]
    kernel_y: Option<KernelChoice>,
    #[arg(long)]
    kernel_z: Option<KernelChoice>,
    /// euclidean, euclidean-power:alpha, kernel:<kernel>
    #[arg(long)]
    metric_x: Option<MetricChoice>,
    #[arg(long)]
    metric_y: Option<MetricChoice>,
    /// Smoothing bandwidth t.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// gaussian, epanechnikov or box.
    #[arg(long)]
    smoothing: Option<SmoothingShape>,
    #[arg(long)]
    lambda: Option<f64>,
}

impl EstimatorArgs {
    fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            kernel_x: self.kernel_x.clone(),
            kernel_y: self.kernel_y.clone(),
            kernel_z: self.kernel_z.clone(),
            metric_x: self.metric_x.clone(),
            metric_y: self.metric_y.clone(),
            smoothing_shape: self.smoothing,
            smoothing_bandwidth: self.bandwidth,
            lambda: self.lambda,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_roles(s: &str) -> Result<ColumnRoleMap, cimeter::Error> {
    let roles = ColumnRoleMap::parse(s)?;
    roles.validate()?;
    Ok(roles)
}

enum Failure {
    Input(String),
    Numerical(String),
    Verification,
}

impl From<cimeter::Error> for Failure {
    fn from(e: cimeter::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("cimeter: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("cimeter: {msg}");
            ExitCode::from(3)
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t >= 1 => t,
        _ => return Err(Failure::Input(format!("{THREADS_VAR} must be a positive integer, got '{raw}'"))),
    };
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Input(format!("cannot size the thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Compute { input, measure, estimator, output } => {
            let d = load_csv(&input.input, input.roles.as_ref())?;
            let start = Instant::now();
            let resolved = estimator.config().resolve(&d)?;
            let result = compute(measure, &d, &resolved)?;
            let runtime_ms = elapsed_ms(start);
            let params = Value::Object(result.params.clone().into_iter().collect());
            emit(&output, |f| match f {
                Format::Json => Rendered::Json(document(
                    "compute",
                    json!({ "measure": measure, "value": result.value, "n": result.n, "params": params, "runtime_ms": runtime_ms }),
                )),
                Format::Csv => Rendered::Table(
                    vec!["measure", "value", "n", "runtime_ms", "params"],
                    vec![vec![
                        measure.to_string(),
                        num(result.value),
                        result.n.to_string(),
                        num(runtime_ms),
                        params.to_string(),
                    ]],
                ),
            })
        }
        Command::Test { input, roles, measure, b, knn, alpha, seed, model, n, runs, dims, estimator, output } => {
            let cfg = TestConfig { statistic: measure, b, knn, alpha, seed, estimator: estimator.config() };
            let start = Instant::now();
            match (input, model) {
                (Some(path), _) => {
                    let d = load_csv(&path, roles.as_ref())?;
                    let report = local_permutation_test(&cfg, &d)?;
                    let runtime_ms = elapsed_ms(start);
                    emit(&output, |f| match f {
                        Format::Json => {
                            let mut body = serde_json::to_value(&report).expect("report serializes");
                            body["runtime_ms"] = runtime_ms.into();
                            Rendered::Json(document("test", body))
                        }
                        Format::Csv => Rendered::Table(
                            vec![
                                "statistic",
                                "statistic_value",
                                "p_value",
                                "B",
                                "scheme",
                                "seed",
                                "knn",
                                "alpha",
                                "reject",
                                "n",
                                "runtime_ms",
                            ],
                            vec![vec![
                                report.statistic.to_string(),
                                num(report.statistic_value),
                                num(report.p_value),
                                report.b.to_string(),
                                report.scheme.clone(),
                                report.seed.to_string(),
                                report.knn.to_string(),
                                num(report.alpha),
                                report.reject.to_string(),
                                report.n.to_string(),
                                num(runtime_ms),
                            ]],
                        ),
                    })
                }
                (None, Some(model)) => {
                    let spec = GeneratorSpec::new(model, n, seed).with_dims(dims.p, dims.q, dims.r);
                    spec.validate()?;
                    let summary = size_power_experiment(&cfg, &spec, runs)?;
                    let runtime_ms = elapsed_ms(start);
                    emit(&output, |f| match f {
                        Format::Json => Rendered::Json(document(
                            "test",
                            json!({
                                "experiment": summary,
                                "statistic": measure,
                                "B": b,
                                "knn": knn,
                                "alpha": alpha,
                                "seed": seed,
                                "runtime_ms": runtime_ms,
                            }),
                        )),
                        Format::Csv => Rendered::Table(
                            vec![
                                "model",
                                "n",
                                "runs",
                                "rejections",
                                "rejection_rate",
                                "mean_statistic",
                                "mean_runtime_ms",
                            ],
                            vec![vec![
                                model.to_string(),
                                n.to_string(),
                                summary.runs.to_string(),
                                summary.rejections.to_string(),
                                num(summary.rejection_rate),
                                num(summary.mean_statistic),
                                num(summary.mean_runtime_ms),
                            ]],
                        ),
                    })
                }
                (None, None) => Err(Failure::Input("test needs --input or --model".into())),
            }
        }
        Command::Verify { seed, inject_fault, output } => {
            let report = run_verify(seed, inject_fault)?;
            emit(&output, |f| match f {
                Format::Json => {
                    Rendered::Json(document("verify", serde_json::to_value(&report).expect("report serializes")))
                }
                Format::Csv => Rendered::Table(
                    vec!["identity", "passed", "max_deviation", "tolerance", "cases"],
                    report
                        .identities
                        .iter()
                        .map(|i| {
                            vec![
                                i.name.clone(),
                                i.passed.to_string(),
                                num(i.max_deviation),
                                num(i.tolerance),
                                i.cases.to_string(),
                            ]
                        })
                        .collect(),
                ),
            })?;
            if report.all_passed {
                Ok(())
            } else {
                for i in report.identities.iter().filter(|i| !i.passed) {
                    eprintln!(
                        "cimeter: identity '{}' failed: deviation {:e} > {:e}",
                        i.name, i.max_deviation, i.tolerance
                    );
                }
                Err(Failure::Verification)
            }
        }
        Command::Bench { sizes, measures, repeats, seed, output } => {
            if sizes.is_empty() || measures.is_empty() {
                return Err(Failure::Input("bench needs at least one size and one measure".into()));
            }
            let rows = run_bench(&measures, &sizes, repeats, seed)?;
            emit(&output, |f| match f {
                Format::Json => Rendered::Json(document(
                    "bench",
                    json!({
                        "sizes": sizes,
                        "measures": measures,
                        "repeats": repeats,
                        "seed": seed,
                        "model": Model::GaussianCi.to_string(),
                        "rows": rows,
                        "monotone": monotone(&rows, &measures),
                    }),
                )),
                Format::Csv => Rendered::Table(
                    vec!["measure", "n", "runtime_ms", "repeats"],
                    rows.iter()
                        .map(|r| vec![r.measure.to_string(), r.n.to_string(), num(r.runtime_ms), r.repeats.to_string()])
                        .collect(),
                ),
            })
        }
        Command::Generate { model, n, dims, seed, out } => {
            let d = generate(&GeneratorSpec::new(model, n, seed).with_dims(dims.p, dims.q, dims.r))?;
            write_dataset(&d, out)
        }
    }
}

fn num(v: f64) -> String {
    if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn monotone(rows: &[BenchRow], measures: &[Measure]) -> Map<String, Value> {
    measures
        .iter()
        .map(|m| {
            let mut times: Vec<(usize, f64)> =
                rows.iter().filter(|r| r.measure == *m).map(|r| (r.n, r.runtime_ms)).collect();
            times.sort_by_key(|t| t.0);
            (m.to_string(), times.windows(2).all(|w| w[1].1 >= w[0].1).into())
        })
        .collect()
}

fn document(command: &str, body: Value) -> Value {
    let mut doc = Map::new();
    doc.insert("schema".into(), SCHEMA.into());
    doc.insert("command".into(), command.into());
    if let Value::Object(fields) = body {
        doc.extend(fields);
    }
    Value::Object(doc)
}

enum Rendered {
    Json(Value),
    Table(Vec<&'static str>, Vec<Vec<String>>),
}

fn sink(out: &Option<PathBuf>) -> Outcome<Box<dyn Write>> {
    Ok(match out {
        Some(path) => {
            Box::new(File::create(path).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(output: &OutputArgs, render: impl FnOnce(Format) -> Rendered) -> Outcome {
    let mut w = sink(&output.out)?;
    match render(output.format) {
        Rendered::Json(doc) => {
            serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Failure::Input(e.to_string()))?;
            writeln!(w)?;
        }
        Rendered::Table(header, rows) => {
            let mut table = csv::Writer::from_writer(w);
            table.write_record(&header)?;
            for row in rows {
                table.write_record(&row)?;
            }
            table.flush()?;
            return Ok(());
        }
    }
    w.flush()?;
    Ok(())
}

fn write_dataset(d: &Dataset, out: Option<PathBuf>) -> Outcome {
    let w = sink(&out)?;
    write_csv(d, w)?;
    Ok(())
}
