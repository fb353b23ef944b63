use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use regmap_core::HalfBp;

mod commands;
mod config;

use commands::{Algorithm, Choice, Locus, ReportFormatArg, Scenario, VariantArg};
use regmap_core::sqlgen::{ScriptKind, SqlDialect};

/// Bad flags, config values or argument combinations. Exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Genomic region overlap mining and database benchmarking.
///
/// Database backends are enabled by REGMAP_PG_URL and REGMAP_MYSQL_URL, or
/// by `pg_url` / `mysql_url` in the config file.
#[derive(Parser, Debug)]
#[command(name = "regmap", version, about)]
pub struct Cli {
    /// `key = value` file supplying defaults for any flag (keys are flag names
    /// without dashes). Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write seeded random regions as BED.
    Gen(GenArgs),
    /// Import BED files through the staging table and summarise the result.
    Import(ImportArgs),
    /// Join two BED files and list overlapping pairs.
    Overlap(OverlapArgs),
    /// Search a store built from BED files for invalid rows or regions near a position.
    Search(SearchArgs),
    /// Pairwise overlap percentages for every dataset pair in a catalog.
    Mine(MineArgs),
    /// Emit SQL scripts for one or all dialects and kinds.
    Sqlgen(SqlgenArgs),
    /// Run a timed benchmark scenario and write a report.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Number of regions [default: 5000].
    #[arg(long)]
    pub count: Option<usize>,
    /// RNG seed [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest region length; lengths are uniform in 1..=max-size [default: 500].
    #[arg(long)]
    pub max_size: Option<u64>,
    /// Make every region exactly max-size long.
    #[arg(long)]
    pub fixed_size: bool,
    /// Comma-separated chromosome names [default: chr1..chr22,chrX].
    #[arg(long, value_delimiter = ',')]
    pub chromosomes: Vec<String>,
    /// Lowest start coordinate [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub coord_lower: Option<i64>,
    /// Highest end coordinate [default: 200000000].
    #[arg(long)]
    pub coord_upper: Option<i64>,
    /// Output file [default: stdout].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ImportArgs {
    /// BED files; each becomes a dataset named after the file stem.
    #[arg(value_name = "FILE")]
    pub files: Vec<PathBuf>,
    /// Fail on the first malformed line instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Summary output file [default: stdout].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OverlapArgs {
    /// Query BED file.
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    /// Reference BED file.
    #[arg(long, value_name = "FILE")]
    pub b: PathBuf,
    /// Minimum signed bp overlap; values below 1 also admit non-overlapping
    /// pairs and need --max-centre-distance [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    pub min_bp: Option<i64>,
    /// Keep pairs whose centre distance is strictly below this (bp, halves allowed).
    #[arg(long)]
    pub max_centre_distance: Option<HalfBp>,
    /// Join algorithm: nested or sweep [default: sweep].
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// Fail on the first malformed line instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Output file [default: stdout].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// BED files loaded into the store, in order.
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    pub store_from: Vec<PathBuf>,
    /// List rows with a negative start or an end before the start.
    #[arg(long, conflicts_with = "near")]
    pub invalid: bool,
    /// List regions within --window bp of CHROM:POS. One of --invalid and
    /// --near is required.
    #[arg(long, value_name = "CHROM:POS")]
    pub near: Option<Locus>,
    /// Half-width of the proximity window [default: 100000].
    #[arg(long)]
    pub window: Option<u64>,
    /// Scan instead of building the per-chromosome index.
    #[arg(long)]
    pub no_index: bool,
    /// Fail on the first malformed line instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Output file [default: stdout].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MineArgs {
    /// Catalog TSV (name, factor, cell_line, treatment, assembly, path);
    /// relative paths resolve against its directory.
    #[arg(long, value_name = "FILE")]
    pub catalog: PathBuf,
    /// Minimum signed bp overlap [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    pub min_bp: Option<i64>,
    /// Centre distance bound (bp, halves allowed).
    #[arg(long)]
    pub max_centre_distance: Option<HalfBp>,
    /// Fail on the first malformed line instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Output file [default: stdout].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SqlgenArgs {
    /// postgres, mysql_innodb, mysql_myisam or all [default: all].
    #[arg(long)]
    pub dialect: Option<Choice<SqlDialect>>,
    /// Script kind (ddl, regmap_query, geo_query, bulk_import, random_gen,
    /// rowwise_insert, batch_insert, invalid_search, proximity_search) or all [default: all].
    #[arg(long)]
    pub kind: Option<Choice<ScriptKind>>,
    /// Directory the `{kind}.{dialect}.sql` files are written to.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Server-side file read by bulk_import [default: /tmp/regions.bed].
    #[arg(long)]
    pub import_path: Option<String>,
    /// Minimum bp overlap in regmap_query [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    pub min_bp: Option<i64>,
    /// Centre distance bound in regmap_query.
    #[arg(long)]
    pub max_centre_distance: Option<HalfBp>,
    /// Rows produced by random_gen [default: 5000].
    #[arg(long)]
    pub count: Option<u64>,
    /// Largest region length in random_gen [default: 500].
    #[arg(long)]
    pub max_size: Option<u64>,
    /// Fixed-length regions in random_gen.
    #[arg(long)]
    pub fixed_size: bool,
    /// Centre of proximity_search [default: chr8:128748314].
    #[arg(long, value_name = "CHROM:POS")]
    pub near: Option<Locus>,
    /// Half-width of proximity_search [default: 100000].
    #[arg(long)]
    pub window: Option<u64>,
    /// BED file whose regions the insert scripts contain [default: none].
    #[arg(long, value_name = "FILE")]
    pub regions: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// insertion, import, overlap or search.
    #[arg(long)]
    pub scenario: Option<Scenario>,
    /// Comma-separated sizes: regions per dataset, or store sizes for search
    /// [default: 5000,10000,20000,40000,80000; search 1000000].
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<u64>,
    /// Timed repetitions per cell [default: 3].
    #[arg(long)]
    pub reps: Option<u32>,
    /// Discarded repetitions before timing [default: 1].
    #[arg(long)]
    pub warmup: Option<u32>,
    /// Base seed [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest generated region length [default: 500].
    #[arg(long)]
    pub max_size: Option<u64>,
    /// Fixed-length generated regions.
    #[arg(long)]
    pub fixed_size: bool,
    /// BED files for the import scenario.
    #[arg(long, value_name = "FILE", num_args = 1..)]
    pub files: Vec<PathBuf>,
    /// Invalid rows seeded into the search store [default: 24].
    #[arg(long)]
    pub invalid: Option<usize>,
    /// Overlap variants: nested, sweep, geo, regmap_sql, geo_sql [default: all].
    #[arg(long, value_delimiter = ',')]
    pub variants: Vec<VariantArg>,
    /// Report file [default: stdout].
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Report format: tsv or json [default: tsv].
    #[arg(long)]
    pub format: Option<ReportFormatArg>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = config::Config::load_optional(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Gen(args) => commands::gen(&cfg, args),
        Command::Import(args) => commands::import(&cfg, args),
        Command::Overlap(args) => commands::overlap(&cfg, args),
        Command::Search(args) => commands::search(&cfg, args),
        Command::Mine(args) => commands::mine(&cfg, args),
        Command::Sqlgen(args) => commands::sqlgen(&cfg, args),
        Command::Bench(args) => commands::bench(&cfg, args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
