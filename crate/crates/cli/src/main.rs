mod labels;

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use modsplit::{detect, generate, load_edge_list, load_gml, modularity, nmi, Graph, Method, PlantedConfig, SsrConfig};
use serde::Serialize;

use labels::LabelFile;

#[derive(Parser)]
#[command(name = "modsplit", version, about = "Community detection by successive spectral relaxation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a graph and report its modularity.
    Detect(DetectArgs),
    /// Modularity of a given labelling.
    Score(ScoreArgs),
    /// Normalized mutual information between two label files.
    Nmi(NmiArgs),
    /// Write a planted-partition graph and its ground truth.
    Generate(GenerateArgs),
    /// Time detection across thread counts.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Edgelist,
    Gml,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ssr,
    Spectral,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Ssr => Method::Ssr,
            MethodArg::Spectral => Method::Spectral,
        }
    }
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long)]
    directed: bool,
    #[arg(long)]
    weighted: bool,
}

impl GraphArgs {
    fn load(&self) -> Result<Graph, CliError> {
        let graph = match self.format {
            Format::Edgelist => load_edge_list(&self.input, self.directed, self.weighted),
            Format::Gml => {
                if self.directed {
                    return Err(CliError::invalid("--directed applies to edge lists; GML declares it in the file"));
                }
                load_gml(&self.input, self.weighted)
            }
        };
        graph.map_err(|e| CliError::from_lib(&self.input, e))
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "ssr")]
    method: MethodArg,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl SolverArgs {
    fn config(&self, threads: usize) -> SsrConfig {
        SsrConfig {
            sigma: self.sigma,
            epsilon_min: self.epsilon,
            tol: self.tol,
            seed: self.seed,
            threads,
            ..SsrConfig::default()
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Partition file, one `token community` line per vertex.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run manifest.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct NmiArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    candidate: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    communities: usize,
    #[arg(long)]
    avg_degree: f64,
    #[arg(long)]
    max_degree: usize,
    #[arg(long)]
    mixing: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Writes `<PREFIX>.edges` and `<PREFIX>.truth`.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    threads_list: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Io(String),
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        CliError::Invalid(message.into())
    }

    fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn from_lib(path: &Path, e: modsplit::Error) -> Self {
        match e {
            modsplit::Error::Io(e) => CliError::io(path, e),
            other => CliError::Invalid(format!("{}: {other}", path.display())),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<modsplit::Error> for CliError {
    fn from(e: modsplit::Error) -> Self {
        match e {
            modsplit::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Detect(a) => cmd_detect(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Nmi(a) => cmd_nmi(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    schema: u32,
    version: &'static str,
    input: &'a Path,
    format: Format,
    directed: bool,
    weighted: bool,
    method: Method,
    config: SsrConfig,
    wall_time_secs: f64,
    matvecs: u64,
    work: u64,
    bisections: usize,
    q: f64,
    communities: usize,
    nmi: Option<f64>,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn cmd_detect(args: &DetectArgs) -> Result<(), CliError> {
    let graph = args.graph.load()?;
    let cfg = args.solver.config(args.solver.threads);
    let method = Method::from(args.solver.method);
    let report = detect(&graph, &cfg, method)?;

    if let Some(path) = &args.output {
        labels::write(&graph, report.partition.labels(), create(path)?).map_err(|e| CliError::io(path, e))?;
    }
    if let Some(path) = &args.json {
        let manifest = RunManifest {
            schema: 1,
            version: modsplit::VERSION,
            input: &args.graph.input,
            format: args.graph.format,
            directed: graph.is_directed(),
            weighted: args.graph.weighted,
            method,
            config: cfg,
            wall_time_secs: report.wall_time.as_secs_f64(),
            matvecs: report.matvecs,
            work: report.work,
            bisections: report.bisection_count,
            q: report.q(),
            communities: report.partition.community_count(),
            nmi: None,
        };
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &manifest).map_err(|e| CliError::io(path, e.into()))?;
        writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))?;
    }
    println!("Q={:.6}", report.q());
    println!("communities={}", report.partition.community_count());
    Ok(())
}

fn cmd_score(args: &ScoreArgs) -> Result<(), CliError> {
    let graph = args.graph.load()?;
    let file = LabelFile::read(&args.labels)?;
    let labels = file.labels_for(graph.tokens().iter().map(String::as_str), "graph")?;
    let score = modularity(&graph, &labels)?;
    println!("Q={:.6}", score.q);
    Ok(())
}

fn cmd_nmi(args: &NmiArgs) -> Result<(), CliError> {
    let truth = LabelFile::read(&args.truth)?;
    let candidate = LabelFile::read(&args.candidate)?;
    let aligned = candidate.labels_for(truth.entries.iter().map(|(t, _)| t.as_str()), "truth file")?;
    let value = nmi(&truth.partition(), &modsplit::Partition::from_labels(&aligned))?;
    println!("NMI={value:.6}");
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let planted = generate(&PlantedConfig {
        n: args.n,
        k: args.communities,
        avg_degree: args.avg_degree,
        max_degree: args.max_degree,
        mixing: args.mixing,
        seed: args.seed,
    })?;
    let with_ext = |ext: &str| {
        let mut name = args.output.clone().into_os_string();
        name.push(ext);
        PathBuf::from(name)
    };
    let edges = with_ext(".edges");
    let mut out = create(&edges)?;
    planted
        .graph
        .write_edge_list(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(&edges, e))?;
    let truth = with_ext(".truth");
    labels::write(&planted.graph, planted.truth.labels(), create(&truth)?).map_err(|e| CliError::io(&truth, e))?;
    println!("edges={}", planted.graph.edge_count());
    println!("mixing={:.6}", planted.realized_mixing);
    Ok(())
}

struct BenchRow {
    threads: usize,
    median: Duration,
    speedup: f64,
    q: f64,
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.threads_list.is_empty() || args.repeats == 0 {
        return Err(CliError::invalid("need at least one thread count and one repeat"));
    }
    let graph = args.graph.load()?;
    let method = Method::from(args.solver.method);
    let mut timed = Vec::new();
    for &threads in &args.threads_list {
        let cfg = args.solver.config(threads);
        let mut times = Vec::with_capacity(args.repeats);
        let mut q = 0.0;
        for _ in 0..args.repeats {
            let report = detect(&graph, &cfg, method)?;
            times.push(report.wall_time);
            q = report.q();
        }
        times.sort();
        timed.push((threads, median(&times), q));
    }
    let baseline = timed.iter().find(|r| r.0 == 1).unwrap_or(&timed[0]).1;
    let rows: Vec<BenchRow> = timed
        .iter()
        .map(|&(threads, median, q)| BenchRow {
            threads,
            median,
            speedup: baseline.as_secs_f64() / median.as_secs_f64(),
            q,
        })
        .collect();

    println!("{:>8} {:>12} {:>8} {:>10}", "threads", "median_s", "speedup", "Q");
    for r in &rows {
        println!("{:>8} {:>12.6} {:>8.2} {:>10.6}", r.threads, r.median.as_secs_f64(), r.speedup, r.q);
    }
    if let Some(path) = &args.csv {
        write_csv(path, &rows).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(e) => CliError::io(path, e),
            other => CliError::invalid(format!("{}: {other:?}", path.display())),
        })?;
    }
    Ok(())
}

fn median(sorted: &[Duration]) -> Duration {
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2
    }
}

fn write_csv(path: &Path, rows: &[BenchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["threads", "median_s", "speedup", "q"])?;
    for r in rows {
        w.write_record([
            r.threads.to_string(),
            format!("{:.6}", r.median.as_secs_f64()),
            format!("{:.4}", r.speedup),
            format!("{:.6}", r.q),
        ])?;
    }
    w.flush()?;
    Ok(())
}
