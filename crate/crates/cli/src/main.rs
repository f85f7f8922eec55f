use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lpbound::bounds::Cone;
use lpbound_cli::{
    cmd_bound, cmd_check_ineq, cmd_compare, cmd_convert, cmd_evaluate, cmd_stats, cmd_worstcase, parse_preset,
    ConvertTarget, Engine, EvaluateArgs, Outcome,
};

/// Output-size bounds for conjunctive queries from lp-norms of degree sequences.
#[derive(Parser)]
#[command(name = "lpbound", version)]
struct Cli {
    /// Output format: one pretty JSON document, one compact JSON line, or text.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Jsonl,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConeArg {
    Gamma,
    Normal,
    Modular,
}

impl From<ConeArg> for Cone {
    fn from(c: ConeArg) -> Self {
        match c {
            ConeArg::Gamma => Cone::Polymatroid,
            ConeArg::Normal => Cone::Normal,
            ConeArg::Modular => Cone::Modular,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Oracle,
    Generic,
    Partitioned,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvertArg {
    /// Degree sequence to power sums.
    PowerSums,
    /// Power sums to degree sequence.
    Sequence,
}

#[derive(Subcommand)]
enum Command {
    /// Measure statistics on CSV/TSV data (one file per relation).
    Stats {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// JSON array of {atom, U, V, p} to measure.
        #[arg(long, conflicts_with = "auto")]
        spec: Option<PathBuf>,
        /// Norms for the simple conditionals of every atom, e.g. `1,2,inf` or `1..30,inf`.
        #[arg(long)]
        auto: Option<String>,
    },
    /// Bound the output size from a statistics file.
    Bound {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        stats: PathBuf,
        #[arg(long, value_enum, default_value_t = ConeArg::Gamma)]
        cone: ConeArg,
        /// Include Shannon multipliers, the optimal set function and slacks.
        #[arg(long)]
        certificate: bool,
    },
    /// Compare statistic presets against each other and the true output size.
    Compare {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Presets separated by `;`: `agm`, `panda` or a norm list such as `1,inf`.
        #[arg(long, default_value = "1;1,inf;2;1..4,inf;panda")]
        presets: String,
        /// Compute the true output size and the bound/true ratios.
        #[arg(long)]
        true_count: bool,
    },
    /// Evaluate the query.
    Evaluate {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = EngineArg::Generic)]
        engine: EngineArg,
        /// Statistics for the partitioned engine.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Norms gathered for the partitioned engine when --stats is absent.
        #[arg(long, default_value = "1,2,inf")]
        auto: String,
        /// Report only the output size.
        #[arg(long)]
        emit_count_only: bool,
        /// Write the output relation as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a database attaining the normal-cone bound for simple statistics.
    Worstcase {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        stats: PathBuf,
        /// Directory for one CSV per relation plus report.json.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Convert between degree sequences and their power sums.
    Convert {
        #[arg(long, value_enum)]
        to: ConvertArg,
        /// JSON array file.
        input: PathBuf,
    },
    /// Decide whether a weighted inequality over statistic terms holds on a cone.
    CheckIneq {
        /// JSON {variables?, terms: [{U, V, p, weight}], rhs}.
        ineq: PathBuf,
        /// Take variable names from this query.
        #[arg(long)]
        query: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ConeArg::Gamma)]
        cone: ConeArg,
    },
}

fn run(command: Command) -> Result<Outcome, lpbound_cli::CliError> {
    match command {
        Command::Stats { query, data, spec, auto } => cmd_stats(&query, &data, spec.as_deref(), auto.as_deref()),
        Command::Bound { query, stats, cone, certificate } => cmd_bound(&query, &stats, cone.into(), certificate),
        Command::Compare { query, data, presets, true_count } => {
            let presets = presets.split(';').filter(|s| !s.trim().is_empty()).map(parse_preset).collect::<Result<Vec<_>, _>>()?;
            cmd_compare(&query, &data, &presets, true_count)
        }
        Command::Evaluate { query, data, engine, stats, auto, emit_count_only, out } => cmd_evaluate(&EvaluateArgs {
            query: &query,
            data: &data,
            engine: match engine {
                EngineArg::Oracle => Engine::Oracle,
                EngineArg::Generic => Engine::Generic,
                EngineArg::Partitioned => Engine::Partitioned,
            },
            stats: stats.as_deref(),
            auto: &auto,
            count_only: emit_count_only,
            out: out.as_deref(),
        }),
        Command::Worstcase { query, stats, out_dir } => cmd_worstcase(&query, &stats, out_dir.as_deref()),
        Command::Convert { to, input } => cmd_convert(
            &input,
            match to {
                ConvertArg::PowerSums => ConvertTarget::PowerSums,
                ConvertArg::Sequence => ConvertTarget::Sequence,
            },
        ),
        Command::CheckIneq { ineq, query, cone } => cmd_check_ineq(&ineq, query.as_deref(), cone.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("JSON output")),
                Format::Jsonl => println!("{}", out.json),
                Format::Text => println!("{}", out.text),
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
