use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use wsig_core::db::{write_atomic, MANIFEST_FILE};
use wsig_core::eros::{self, Aggregator, WeightOptions};
use wsig_core::ingest;
use wsig_core::retrieval::{self, ClassifyOptions};
use wsig_core::{Dialect, ErrorKind, SampleId, SignatureDatabase};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

/// Workload similarity from SAR and perf telemetry.
#[derive(Parser)]
#[command(name = "wsig", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse telemetry files and add them to a signature database.
    Ingest(IngestArgs),
    /// Summarize a signature database.
    Stats {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Pairwise Eros distance matrix for every sample in a database.
    Distances {
        #[arg(long)]
        db: PathBuf,
        #[command(flatten)]
        weights: WeightArgs,
        /// Round values to this many decimals.
        #[arg(long)]
        round: Option<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Leave-one-out precision-recall curve.
    Evaluate {
        #[arg(long)]
        db: PathBuf,
        #[arg(long, default_value_t = retrieval::DEFAULT_MAXR)]
        maxr: usize,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Classify an unlabeled telemetry file against the database.
    Query {
        file: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long, value_parser = parse_dialect)]
        dialect: Option<Dialect>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Compute weights from the database only.
        #[arg(long)]
        freeze_weights: bool,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long)]
        start_epoch: Option<i64>,
        #[arg(long)]
        json: bool,
    },
    /// Distance matrix for an external embedding tool, optionally with one
    /// extra unlabeled sample appended.
    ExportEmbedding {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        unknown: Option<PathBuf>,
        #[arg(long, default_value = "UNKNOWN")]
        unknown_label: String,
        #[arg(long, value_parser = parse_dialect)]
        dialect: Option<Dialect>,
        #[arg(long)]
        start_epoch: Option<i64>,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct IngestArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long)]
    label: String,
    #[arg(long, value_parser = parse_dialect)]
    dialect: Dialect,
    #[arg(long)]
    db: PathBuf,
    /// Epoch of the first perf sample; perf elapsed times are offset from it.
    #[arg(long)]
    start_epoch: Option<i64>,
}

#[derive(Args, Clone, Copy)]
struct WeightArgs {
    #[arg(long, default_value_t = Aggregator::Mean, value_parser = parse_aggregator)]
    aggregator: Aggregator,
    /// Use raw eigenvalues instead of per-sample normalized ones.
    #[arg(long)]
    no_normalize_eigenvalues: bool,
}

impl WeightArgs {
    fn options(self) -> WeightOptions {
        WeightOptions {
            aggregator: self.aggregator,
            normalize_eigenvalues: !self.no_normalize_eigenvalues,
        }
    }
}

fn parse_dialect(s: &str) -> Result<Dialect, String> {
    s.parse::<Dialect>().map_err(|e| e.to_string())
}

fn parse_aggregator(s: &str) -> Result<Aggregator, String> {
    s.parse::<Aggregator>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<wsig_core::Error>().map(|e| e.kind()) {
                Some(ErrorKind::Numeric) => EXIT_NUMERIC,
                Some(ErrorKind::Usage) => EXIT_USAGE,
                _ => EXIT_DATA,
            };
            ExitCode::from(code)
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => Ok(write_atomic(path, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Ingest(args) => ingest_files(args),
        Command::Stats { db, json } => {
            let st = SignatureDatabase::load(&db)?.stats();
            if json {
                println!("{}", serde_json::to_string_pretty(&st)?);
            } else {
                println!("variables: {}", st.variable_count);
                println!("average length: {}", st.average_length);
                println!("labels: {}", st.label_count);
                match st.uniform_samples_per_label() {
                    Some(n) => println!("samples per label: {n}"),
                    None => {
                        for (label, n) in &st.samples_per_label {
                            println!("  {label}: {n}");
                        }
                    }
                }
                println!("total samples: {}", st.total);
            }
            Ok(())
        }
        Command::Distances {
            db,
            weights,
            round,
            output,
        } => {
            let db = SignatureDatabase::load(&db)?;
            let (_, dm) = eros::database_distances(&db, weights.options())?;
            emit(output.as_deref(), &dm.to_csv(round))
        }
        Command::Evaluate {
            db,
            maxr,
            weights,
            output,
        } => {
            let db = SignatureDatabase::load(&db)?;
            let curve = retrieval::pr_curve(&db, maxr, weights.options())?;
            emit(output.as_deref(), &curve.to_csv())
        }
        Command::Query {
            file,
            db,
            dialect,
            k,
            freeze_weights,
            weights,
            start_epoch,
            json,
        } => {
            let db = SignatureDatabase::load(&db)?;
            let dialect = dialect.unwrap_or(db.dialect());
            let (unknown, _) =
                ingest::ingest_path(dialect, &file, SampleId::new("UNKNOWN", 0), start_epoch)?;
            let opts = ClassifyOptions {
                k,
                weights: weights.options(),
                freeze_weights,
            };
            let result = retrieval::classify_unknown(&db, &unknown, opts)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&result)?);
            } else {
                print!("{}", result.to_text());
            }
            Ok(())
        }
        Command::ExportEmbedding {
            db,
            unknown,
            unknown_label,
            dialect,
            start_epoch,
            weights,
            output,
        } => {
            let db = SignatureDatabase::load(&db)?;
            let dialect = dialect.unwrap_or(db.dialect());
            let unknown = match unknown {
                Some(path) => {
                    let id = SampleId::new(unknown_label, 0);
                    Some(ingest::ingest_path(dialect, &path, id, start_epoch)?.0)
                }
                None => None,
            };
            let dm = retrieval::export_embedding_input(&db, unknown.as_ref(), weights.options())?;
            emit(output.as_deref(), &dm.to_csv(None))
        }
    }
}

fn ingest_files(args: IngestArgs) -> anyhow::Result<()> {
    let mut db = if args.db.join(MANIFEST_FILE).exists() {
        let db = SignatureDatabase::load(&args.db)?;
        if db.dialect() != args.dialect {
            bail!(
                "database holds {} samples, not {}",
                db.dialect(),
                args.dialect
            );
        }
        Some(db)
    } else {
        None
    };

    for file in &args.files {
        let next = db.as_ref().map_or(0, |d| d.next_collection_id(&args.label));
        let id = SampleId::new(args.label.clone(), next);
        let (sample, report) =
            ingest::ingest_path(args.dialect, file, id.clone(), args.start_epoch)
                .with_context(|| format!("ingesting {}", file.display()))?;
        match db.as_mut() {
            Some(d) => d.add(sample)?,
            None => {
                db = Some(SignatureDatabase::from_samples(
                    sample.schema().clone(),
                    [sample],
                )?)
            }
        }
        eprintln!(
            "{id}: {} rows kept, {} dropped, {} columns ignored",
            report.rows_kept,
            report.rows_dropped,
            report.dropped_columns.len()
        );
    }
    // Nothing is written unless every file parsed.
    db.expect("at least one file").save(&args.db)?;
    Ok(())
}
