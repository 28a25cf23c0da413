//! `dbxplain`: score-based explanations for query answers and classifier
//! outcomes, reported as JSON.

mod commands;
mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "dbxplain", version, about = "Causes, responsibility, Shapley-style scores and repair programs")]
struct Cli {
    /// Render rationals as decimals instead of `p/q` strings.
    #[arg(long, global = true)]
    decimal: bool,
    /// Write the report to this file instead of standard output.
    #[arg(long, short, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Directory of `<Relation>.csv` files.
    #[arg(long, env = "DBXPLAIN_DATA", value_name = "DIR")]
    data: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct QueryArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Query file; relative paths are also looked up in the data directory.
    #[arg(long, value_name = "FILE")]
    query: PathBuf,
    /// Which query of the file to use when it defines several.
    #[arg(long)]
    name: Option<String>,
    /// Comma-separated answer that turns a non-Boolean query into a Boolean one.
    #[arg(long, value_name = "A,B,..")]
    answer: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct DcArgs {
    #[command(flatten)]
    data: DataArgs,
    /// File of denial constraints `:- body.`
    #[arg(long, value_name = "FILE")]
    dcs: PathBuf,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct ModelArgs {
    /// Decision tree in JSON.
    #[arg(long, value_name = "FILE")]
    tree: Option<PathBuf>,
    /// Exhaustive label table in CSV, feature columns plus `label`.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct EntityArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Feature values in feature order, comma-separated.
    #[arg(long, value_name = "V1,V2,..")]
    entity: String,
    /// Score only this feature; all features otherwise.
    #[arg(long)]
    feature: Option<String>,
    /// Looked-up directory for relative model and sample paths.
    #[arg(long, env = "DBXPLAIN_DATA", value_name = "DIR")]
    data: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DistKind {
    Uniform,
    Product,
    Empirical,
}

#[derive(Args, Debug, Clone)]
struct DistArgs {
    /// Distribution of the entity population.
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistKind,
    /// CSV sample of entities for `product` and `empirical`.
    #[arg(long, value_name = "FILE", required_if_eq_any = [("dist", "product"), ("dist", "empirical")])]
    sample: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RepairKind {
    Subset,
    Cardinality,
    AttrSubset,
    AttrCardinality,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ProgramKind {
    Repair,
    IncMeasure,
    AttrRepair,
    Cip,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a data directory and summarize its relations.
    IngestCheck(DataArgs),
    /// Evaluate a query; reports its answers and hierarchy.
    Query(QueryArgs),
    /// Actual causes of a true Boolean query with responsibilities.
    Causes(QueryArgs),
    /// Responsibility of one tuple.
    Resp {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long)]
        tid: u32,
    },
    /// Attribute-level causes and the null-based interventions behind them.
    AttrCauses(QueryArgs),
    /// Actual causes when interventions must keep hard constraints.
    CausesIcs {
        #[command(flatten)]
        q: QueryArgs,
        /// Denial constraints and inclusion dependencies.
        #[arg(long, value_name = "FILE")]
        ics: PathBuf,
    },
    /// Causal effect of tuples over a tuple-independent instance.
    CausalEffect {
        #[command(flatten)]
        q: QueryArgs,
        /// One tuple; all tuples otherwise.
        #[arg(long)]
        tid: Option<u32>,
        /// Probability of every tuple, `p/q` or decimal.
        #[arg(long, default_value = "1/2")]
        prob: String,
        /// Per-tuple override `TID=P`; repeatable.
        #[arg(long = "tuple-prob", value_name = "TID=P")]
        tuple_prob: Vec<String>,
    },
    /// Shapley value of tuples, exact or sampled.
    Shapley {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long)]
        tid: Option<u32>,
        /// Estimate by permutation sampling instead of exact enumeration.
        #[arg(long, requires = "seed")]
        sample: bool,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Banzhaf index of tuples.
    Banzhaf {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long)]
        tid: Option<u32>,
    },
    /// Repair-based inconsistency degree.
    IncDegree(DcArgs),
    /// Subset, cardinality or null-based repairs.
    Repairs {
        #[command(flatten)]
        dc: DcArgs,
        #[arg(long, value_enum, default_value = "subset")]
        semantics: RepairKind,
    },
    /// x-Resp scores of an entity's feature values.
    Xresp {
        #[command(flatten)]
        e: EntityArgs,
        /// Also list counterfactual versions up to this Hamming distance.
        #[arg(long, value_name = "D")]
        versions: Option<usize>,
    },
    /// Counter score: label minus its expectation with one feature free.
    Counter {
        #[command(flatten)]
        e: EntityArgs,
        #[command(flatten)]
        dist: DistArgs,
    },
    /// Generalized responsibility with contingencies.
    RespScore {
        #[command(flatten)]
        e: EntityArgs,
        #[command(flatten)]
        dist: DistArgs,
        /// Largest contingency size searched; all features by default.
        #[arg(long)]
        max_contingency: Option<usize>,
        /// Average only over values different from the original one.
        #[arg(long)]
        exclude_original: bool,
    },
    /// Shap scores.
    Shap {
        #[command(flatten)]
        e: EntityArgs,
        #[command(flatten)]
        dist: DistArgs,
    },
    /// Emit an answer-set program as text.
    EmitAsp {
        #[arg(long, value_enum)]
        kind: ProgramKind,
        #[arg(long, env = "DBXPLAIN_DATA", value_name = "DIR")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        dcs: Option<PathBuf>,
        /// Weak constraints selecting cardinality repairs or closest versions.
        #[arg(long)]
        weak: bool,
        /// Cause and contingency rules (repair programs).
        #[arg(long)]
        causes: bool,
        /// `preRho` rules; implies `--causes`.
        #[arg(long)]
        responsibility: bool,
        #[arg(long, value_name = "FILE")]
        tree: Option<PathBuf>,
        #[arg(long, value_name = "V1,V2,..")]
        entity: Option<String>,
        /// Forbidden partial entity `feature=value,..` for CIPs; repeatable.
        #[arg(long, value_name = "F=V,..")]
        forbid: Vec<String>,
    },
}

/// Failures after argument parsing. Usage errors exit with 2, the rest with 1.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Domain(e.to_string())
    }
}

/// Resolves `path` as given, falling back to `dir/path` for relative paths.
fn locate(path: &Path, dir: Option<&Path>) -> PathBuf {
    match dir {
        Some(d) if path.is_relative() && !path.exists() => d.join(path),
        _ => path.to_path_buf(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Domain(format!("cli: cannot read {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let fmt = render::Format { decimal: cli.decimal };
    let result = commands::run(&cli.command, fmt).and_then(|text| match &cli.output {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| Failure::Domain(format!("cli: cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
