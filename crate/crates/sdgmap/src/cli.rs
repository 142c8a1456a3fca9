//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
//! invalid library, input or ground truth), 3 internal error.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use sdgmap_core::analytics::{self, ExportFormat};
use sdgmap_core::export::{self, ResultFormat};
use sdgmap_core::ingest::{read_batch, InputFormat, MappingRequest};
use sdgmap_core::library::{import_elsevier, ImportOptions};
use sdgmap_core::{load_library, CompiledLibrary, TopN};

use crate::config::{self, ServiceConfig};
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(
    name = "sdgmap",
    version,
    about = "Map research papers to Sustainable Development Goals with Boolean sub-queries"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the records of one or more CSV/TSV exports.
    Classify(ClassifyArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Convert a Scopus-syntax query dataset into a native library.
    ImportElsevier(ImportArgs),
    /// Per-goal frequency table from a `--format jsonlike` results file.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Jsonlike,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

impl From<TableFormat> for ExportFormat {
    fn from(f: TableFormat) -> Self {
        match f {
            TableFormat::Csv => ExportFormat::Csv,
            TableFormat::Json => ExportFormat::Structured,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputFormatArg {
    Csv,
    Tsv,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Query library in the native TSV format.
    #[arg(long, env = "SDGMAP_QUERIES")]
    pub queries: PathBuf,
    /// Input files; records are concatenated in the order given.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Number of goals per paper, 1 to 17.
    #[arg(long, env = "SDGMAP_TOP_N", default_value = "3")]
    pub top_n: TopN,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Force the input delimiter instead of detecting it.
    #[arg(long, value_enum)]
    pub input_format: Option<InputFormatArg>,
    /// Manual column mapping, e.g. `title=Article Title,abstract=AB,index_keywords=none`.
    #[arg(long)]
    pub map: Option<String>,
    /// Ground-truth CSV (`row_index,sdg_id` or `<id column>,sdg_id`).
    #[arg(long)]
    pub eval: Option<PathBuf>,
    /// Where to write the evaluation table; standard error when omitted.
    #[arg(long, requires = "eval")]
    pub eval_output: Option<PathBuf>,
    /// Deepest k reported by the evaluation table.
    #[arg(long, default_value = "5", requires = "eval")]
    pub eval_k: TopN,
    /// Write the per-goal frequency summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub summary_format: TableFormat,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "SDGMAP_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "SDGMAP_QUERIES")]
    pub queries: PathBuf,
    #[arg(long, env = "SDGMAP_LISTEN", default_value = config::DEFAULT_LISTEN)]
    pub listen: SocketAddr,
    /// Default number of goals per paper when a request names none.
    #[arg(long, env = "SDGMAP_TOP_N", default_value = "3")]
    pub top_n: TopN,
    /// Upload size cap, e.g. `32MiB`.
    #[arg(long, env = "SDGMAP_MAX_UPLOAD", default_value = "32MiB", value_parser = config::parse_size)]
    pub max_upload: usize,
    #[arg(long, env = "SDGMAP_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Query dataset as distributed (CSV or TSV).
    #[arg(long)]
    pub source: PathBuf,
    /// Native library to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Conversion report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Turn `W/n` and `PRE/n` into `AND` instead of rejecting the row.
    #[arg(long)]
    pub rewrite_proximity_as_and: bool,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long = "library-version")]
    pub library_version: Option<String>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Results written by `classify --format jsonlike`.
    #[arg(long)]
    pub results: PathBuf,
    /// Truncate every result to this depth first.
    #[arg(long)]
    pub top_n: Option<TopN>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

/// An error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn data(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 2,
            error: error.into(),
        }
    }

    fn internal(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 3,
            error: error.into(),
        }
    }
}

type CliResult = Result<(), Failure>;

/// Parses `args` and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Classify(a) => classify(a),
        Command::Serve(a) => serve(a),
        Command::ImportElsevier(a) => import(a),
        Command::Summarize(a) => summarize(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .context("cannot write to standard output"),
    }
    .map_err(Failure::internal)
}

fn load_compiled(path: &Path) -> Result<CompiledLibrary, Failure> {
    let lib = load_library(path).map_err(Failure::data)?;
    for w in lib.warnings() {
        log::warn!("{}: {w}", path.display());
    }
    Ok(CompiledLibrary::compile(lib))
}

fn classify(a: ClassifyArgs) -> CliResult {
    let lib = load_compiled(&a.queries)?;
    let request = match &a.map {
        Some(spec) => MappingRequest::parse(spec).map_err(|e| Failure {
            code: 1,
            error: anyhow::anyhow!("--map: {e}"),
        })?,
        None => MappingRequest::Auto,
    };
    let input_format = a.input_format.map(|f| match f {
        InputFormatArg::Csv => InputFormat::Csv,
        InputFormatArg::Tsv => InputFormat::Tsv,
    });
    let batch = read_batch(&a.input, input_format, &request).map_err(Failure::data)?;
    for w in &batch.diagnostics.warnings {
        log::warn!("{w}");
    }

    // Evaluation reads correct@k off full rankings; the written output is
    // the same rankings truncated, which nesting makes identical to a
    // direct top-n run.
    let depth = if a.eval.is_some() { TopN::MAX } else { a.top_n };
    let pool = pipeline::thread_pool(a.workers.unwrap_or_else(config::default_workers)).map_err(Failure::internal)?;
    let started = Instant::now();
    let full = pipeline::classify_all(&lib, &batch.records, depth, &pool);
    let elapsed = started.elapsed().as_secs_f64();
    let results: Vec<_> = if depth == a.top_n {
        full.clone()
    } else {
        full.iter()
            .map(|r| r.truncated(a.top_n).expect("top_n <= 17"))
            .collect()
    };
    eprintln!(
        "classified {} records from {} file(s) in {:.3} s ({:.0} records/sec); {} unclassifiable",
        batch.records.len(),
        batch.sources.len(),
        elapsed,
        batch.records.len() as f64 / elapsed.max(1e-9),
        batch.diagnostics.unclassifiable,
    );

    let format = match a.format {
        OutputFormat::Csv => ResultFormat::Csv,
        OutputFormat::Jsonlike => ResultFormat::JsonLines,
    };
    let mut buf = Vec::new();
    export::write_results(format, &batch, &results, a.top_n, &mut buf).map_err(Failure::internal)?;
    write_output(a.output.as_deref(), &buf)?;

    if let Some(path) = &a.summary {
        let summary = analytics::summarize(&results).map_err(Failure::data)?;
        let text = analytics::export_summary(&summary, a.summary_format.into()).map_err(Failure::data)?;
        write_output(Some(path), text.as_bytes())?;
    }

    if let Some(truth_path) = &a.eval {
        let text = std::fs::read_to_string(truth_path)
            .with_context(|| format!("cannot read {}", truth_path.display()))
            .map_err(Failure::data)?;
        let truth = analytics::parse_truth(&text, &batch)
            .with_context(|| truth_path.display().to_string())
            .map_err(Failure::data)?;
        let table = analytics::evaluate(&full, &truth, a.eval_k).map_err(Failure::data)?;
        let csv = analytics::eval_csv(&table).map_err(Failure::data)?;
        match &a.eval_output {
            Some(p) => write_output(Some(p), csv.as_bytes())?,
            None => eprint!("{csv}"),
        }
    }
    Ok(())
}

fn serve(a: ServeArgs) -> CliResult {
    let config = ServiceConfig {
        queries: a.queries,
        listen: a.listen,
        top_n: a.top_n,
        max_upload: a.max_upload,
        workers: a.workers.unwrap_or_else(config::default_workers),
    };
    let lib = load_compiled(&config.queries)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(Failure::internal)?;
    runtime
        .block_on(crate::server::serve(config, lib))
        .map_err(Failure::internal)
}

fn import(a: ImportArgs) -> CliResult {
    let opts = ImportOptions {
        rewrite_proximity_as_and: a.rewrite_proximity_as_and,
        name: a.name,
        version: a.library_version,
    };
    let (lib, report) = import_elsevier(&a.source, &opts).map_err(Failure::data)?;
    lib.write_native(&a.output)
        .with_context(|| format!("cannot write {}", a.output.display()))
        .map_err(Failure::internal)?;
    if let Some(p) = &a.report {
        let json = serde_json::to_string_pretty(&report).map_err(Failure::internal)? + "\n";
        write_output(Some(p), json.as_bytes())?;
    }
    eprintln!(
        "imported {} of {} rows into {} ({}); {} rejected",
        report.imported,
        report.rows_read,
        a.output.display(),
        lib.provenance(),
        report.rejected.len()
    );
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(())
}

fn summarize(a: SummarizeArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.results)
        .with_context(|| format!("cannot read {}", a.results.display()))
        .map_err(Failure::data)?;
    let results = export::read_results_jsonl(&text)
        .with_context(|| a.results.display().to_string())
        .map_err(Failure::data)?;
    let summary = match a.top_n {
        Some(k) => analytics::summarize_at(&results, k),
        None => analytics::summarize(&results),
    }
    .map_err(Failure::data)?;
    let out = analytics::export_summary(&summary, a.format.into()).map_err(Failure::data)?;
    write_output(a.output.as_deref(), out.as_bytes())
}
