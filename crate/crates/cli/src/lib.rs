//! The `socdd` command line: analyze price files, print parameter tables and
//! plot data, and generate synthetic control series.
//!
//! Exit codes: 0 on success, 1 for data errors (unreadable or invalid input),
//! 2 for usage errors (bad flags or configuration).

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use soc_drawdown::control::{gen_drawdown_mixture, gen_gbm, mixture_depths, shuffle_returns, GbmSpec, MixtureSpec};
use soc_drawdown::critical::find_critical;
use soc_drawdown::drawdown::{collect_depths, extract, DepthUnit, DrawdownSet, Warmup, WindowSpec};
use soc_drawdown::fixtures::table_one;
use soc_drawdown::report::{
    analyze_index, emit_groups, emit_params_table, emit_plot_data, emit_table, group_reports, group_xmin,
    parse_group_map, report_json, AnalysisConfig, Figure, IndexReport, TableFormat, TableKind,
};
use soc_drawdown::series::{parse_price_file, PriceSchema, PriceSeries};

pub use config::FileConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Marks an error as the caller's fault (exit code 2).
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

#[derive(Parser, Debug)]
#[command(name = "socdd", version, about = "Draw-down criticality analysis of price series")]
struct Cli {
    /// TOML file with default analysis and schema settings
    #[arg(long, global = true, env = "SOCDD_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze price files and print the parameter table
    Analyze(AnalyzeArgs),
    /// Print a parameter or series-statistics table (or the bundled reference table)
    Table(TableArgs),
    /// Emit plot data for one price file
    Plot(PlotArgs),
    /// Generate synthetic control series as CSV
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Print the kurtosis sweep for a synthetic body+tail mixture or a price file
    SweepDemo(SweepArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct AnalysisOpts {
    /// Ceiling window in calendar months [default: 6]
    #[arg(long, conflicts_with = "window_days")]
    window_months: Option<u32>,
    /// Ceiling window in trading days instead of calendar months
    #[arg(long)]
    window_days: Option<u32>,
    /// Leave the ceiling undefined until the first full window
    #[arg(long)]
    skip_warmup: bool,
    /// Measure depths relative to the ceiling or in price points
    #[arg(long, value_enum)]
    depth_unit: Option<UnitArg>,
    /// Also count a draw-down still open at the end of the series
    #[arg(long)]
    include_incomplete: bool,
    /// Smallest inferior segment considered by the kurtosis sweep
    #[arg(long)]
    min_segment: Option<usize>,
    /// Smallest admissible tail
    #[arg(long)]
    min_tail: Option<usize>,
    /// Bootstrap trials for the goodness-of-fit p-value (0 skips it)
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Master seed for every random draw
    #[arg(long)]
    seed: Option<u64>,
    /// Classifier: minimum tail kurtosis
    #[arg(long)]
    k_sup_min: Option<f64>,
    /// Classifier: minimum tail size
    #[arg(long)]
    n_min: Option<usize>,
    /// Classifier: minimum bootstrap p-value
    #[arg(long)]
    p_min: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct SchemaOpts {
    /// Name of the date column
    #[arg(long)]
    date_column: Option<String>,
    /// Name of the closing-price column
    #[arg(long)]
    close_column: Option<String>,
    /// chrono date format, e.g. %m/%d/%Y [default: ISO-8601]
    #[arg(long)]
    date_format: Option<String>,
    /// Field delimiter: one ASCII character or `tab`
    #[arg(long)]
    delimiter: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum UnitArg {
    Relative,
    Points,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Tsv,
    Json,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Tsv => TableFormat::Tsv,
            FormatArg::Json => TableFormat::Json,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Params,
    SeriesStats,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Price files; the file stem is used as the symbol
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[command(flatten)]
    analysis: AnalysisOpts,
    #[command(flatten)]
    schema: SchemaOpts,
    #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
    format: FormatArg,
    /// `symbol<TAB>group` file; adds a per-group mean of x_min
    #[arg(long)]
    group_map: Option<PathBuf>,
    /// Write tables, per-series reports and plot data here instead of stdout
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Price files; the file stem is used as the symbol
    #[arg(required_unless_present = "fixture")]
    files: Vec<PathBuf>,
    /// Print the bundled 30-index reference table instead of analyzing files
    #[arg(long, conflicts_with = "files")]
    fixture: bool,
    #[arg(long, value_enum, default_value_t = KindArg::Params)]
    kind: KindArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
    format: FormatArg,
    /// `symbol<TAB>group` file; adds a per-group mean of x_min
    #[arg(long)]
    group_map: Option<PathBuf>,
    /// With --fixture: append the per-group means under the default grouping
    #[arg(long)]
    groups: bool,
    #[command(flatten)]
    analysis: AnalysisOpts,
    #[command(flatten)]
    schema: SchemaOpts,
}

#[derive(Args, Debug)]
struct PlotArgs {
    file: PathBuf,
    /// Figure to emit; repeat for several [default: all]
    #[arg(long, value_parser = parse_figure)]
    figure: Vec<Figure>,
    /// Write `<symbol>.<figure>.tsv` files here instead of stdout
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    analysis: AnalysisOpts,
    #[command(flatten)]
    schema: SchemaOpts,
}

fn parse_figure(s: &str) -> std::result::Result<Figure, String> {
    s.parse().map_err(|_| {
        let ids: Vec<&str> = Figure::ALL.iter().map(Figure::id).collect();
        format!("unknown figure `{s}` (expected one of {})", ids.join(", "))
    })
}

#[derive(Subcommand, Debug)]
enum SynthCommand {
    /// Geometric Brownian motion on weekday dates
    Gbm {
        #[arg(long, default_value_t = 8_000)]
        days: usize,
        /// Daily log-drift
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Daily log-volatility
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 100.0)]
        start_price: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output file [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shuffle the log-returns of an existing price file
    Shuffle {
        file: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        schema: SchemaOpts,
    },
    /// Price path whose draw-downs are a half-normal body plus a Pareto tail
    Mixture {
        #[command(flatten)]
        mixture: MixtureOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct MixtureOpts {
    #[arg(long, default_value_t = 400)]
    n_body: usize,
    #[arg(long, default_value_t = 100)]
    n_tail: usize,
    /// Scale of the half-normal body (fraction)
    #[arg(long, default_value_t = 0.005)]
    body_scale: f64,
    /// Tail exponent
    #[arg(long, default_value_t = 2.3)]
    alpha: f64,
    /// Seed for the mixture draws
    #[arg(long, default_value_t = 42)]
    mixture_seed: u64,
}

impl MixtureOpts {
    fn spec(&self) -> MixtureSpec {
        MixtureSpec {
            n_body: self.n_body,
            n_tail: self.n_tail,
            body_scale: self.body_scale,
            alpha: self.alpha,
            seed: self.mixture_seed,
            ..MixtureSpec::default()
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Price file to sweep instead of a synthetic mixture
    #[arg(long)]
    file: Option<PathBuf>,
    #[command(flatten)]
    mixture: MixtureOpts,
    #[command(flatten)]
    analysis: AnalysisOpts,
    #[command(flatten)]
    schema: SchemaOpts,
}

/// Runs the command line and returns the process exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().ansi().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "socdd: error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let file_config = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(|e| usage(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Analyze(a) => analyze(a, &file_config, out, err),
        Command::Table(a) => table(a, &file_config, out, err),
        Command::Plot(a) => plot(a, &file_config, out),
        Command::Synth(s) => synth(s, &file_config, out),
        Command::SweepDemo(a) => sweep_demo(a, &file_config, out),
    }
}

fn analysis_config(opts: &AnalysisOpts, base: &FileConfig) -> Result<AnalysisConfig> {
    let mut cfg = base.analysis.clone();
    if let Some(m) = opts.window_months {
        cfg.window = WindowSpec::calendar_months(m);
    }
    if let Some(d) = opts.window_days {
        cfg.window = WindowSpec::trading_days(d);
    }
    if opts.skip_warmup {
        cfg.window = cfg.window.with_warmup(Warmup::Skip);
    }
    if let Some(u) = opts.depth_unit {
        cfg.depth_unit = match u {
            UnitArg::Relative => DepthUnit::Relative,
            UnitArg::Points => DepthUnit::Points,
        };
    }
    cfg.include_incomplete |= opts.include_incomplete;
    cfg.min_segment = opts.min_segment.unwrap_or(cfg.min_segment);
    cfg.min_tail = opts.min_tail.unwrap_or(cfg.min_tail);
    cfg.bootstrap_trials = opts.bootstrap.unwrap_or(cfg.bootstrap_trials);
    cfg.master_seed = opts.seed.unwrap_or(cfg.master_seed);
    cfg.thresholds.k_sup_min = opts.k_sup_min.unwrap_or(cfg.thresholds.k_sup_min);
    cfg.thresholds.n_min = opts.n_min.unwrap_or(cfg.thresholds.n_min);
    cfg.thresholds.p_min = opts.p_min.unwrap_or(cfg.thresholds.p_min);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn price_schema(opts: &SchemaOpts, base: &FileConfig) -> Result<PriceSchema> {
    let mut schema = base.schema().map_err(|e| usage(format!("{e:#}")))?;
    if let Some(c) = &opts.date_column {
        schema.date_column = c.clone();
    }
    if let Some(c) = &opts.close_column {
        schema.close_column = c.clone();
    }
    if opts.date_format.is_some() {
        schema.date_format = opts.date_format.clone();
    }
    if let Some(d) = &opts.delimiter {
        schema.delimiter = config::parse_delimiter(d).map_err(|e| usage(e.to_string()))?;
    }
    Ok(schema)
}

fn symbol_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_series(path: &Path, schema: &PriceSchema) -> Result<PriceSeries> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_price_file(&symbol_of(path), &text, schema).with_context(|| format!("cannot parse {}", path.display()))
}

/// Analyzes every file in parallel. Failures are reported on `err` and
/// skipped; it is an error only if nothing could be analyzed.
fn analyze_files(
    files: &[PathBuf],
    cfg: &AnalysisConfig,
    schema: &PriceSchema,
    err: &mut dyn Write,
) -> Result<Vec<IndexReport>> {
    let results: Vec<Result<IndexReport>> = files
        .par_iter()
        .map(|path| {
            let series = load_series(path, schema)?;
            analyze_index(&series, cfg).with_context(|| format!("cannot analyze {}", path.display()))
        })
        .collect();

    let mut reports: Vec<IndexReport> = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(report) => {
                if reports.iter().any(|other| other.symbol == report.symbol) {
                    bail!("two input files share the symbol `{}`", report.symbol);
                }
                reports.push(report);
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(err, "socdd: skipping: {e:#}");
            }
        }
    }
    if reports.is_empty() {
        bail!("no series could be analyzed ({failed} failed)");
    }
    if failed > 0 {
        let _ = writeln!(err, "socdd: analyzed {} series, skipped {failed}", reports.len());
    }
    Ok(reports)
}

fn read_group_map(path: &Path) -> Result<soc_drawdown::report::GroupMap> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read group map {}", path.display()))?;
    parse_group_map(&text).with_context(|| format!("invalid group map {}", path.display()))
}

fn ext(format: FormatArg) -> &'static str {
    match format {
        FormatArg::Tsv => "tsv",
        FormatArg::Json => "json",
    }
}

/// File-name-safe form of a symbol.
fn file_stem_for(symbol: &str) -> String {
    symbol
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).context("cannot write to stdout")
}

fn analyze(a: AnalyzeArgs, base: &FileConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = analysis_config(&a.analysis, base)?;
    let schema = price_schema(&a.schema, base)?;
    let grouping = a.group_map.as_deref().map(read_group_map).transpose()?;
    let reports = analyze_files(&a.files, &cfg, &schema, err)?;
    let format = TableFormat::from(a.format);
    let params = emit_table(&reports, TableKind::Params, format)?;
    let groups = match &grouping {
        Some(map) => Some(emit_groups(&group_reports(&reports, map)?, cfg.depth_unit, &cfg.header())),
        None => None,
    };

    let Some(dir) = a.out_dir else {
        emit(out, &params)?;
        if let Some(g) = groups {
            emit(out, "\n")?;
            emit(out, &g)?;
        }
        return Ok(());
    };

    let e = ext(a.format);
    write_file(&dir.join(format!("params.{e}")), &params)?;
    write_file(&dir.join(format!("series_stats.{e}")), &emit_table(&reports, TableKind::SeriesStats, format)?)?;
    if let Some(g) = groups {
        write_file(&dir.join("groups.tsv"), &g)?;
    }
    for r in &reports {
        let stem = file_stem_for(&r.symbol);
        write_file(&dir.join("reports").join(format!("{stem}.json")), &report_json(r))?;
        for f in Figure::ALL {
            write_file(&dir.join("plots").join(format!("{stem}.{}.tsv", f.id())), &emit_plot_data(r, f))?;
        }
    }
    let _ = writeln!(err, "socdd: wrote {} series to {}", reports.len(), dir.display());
    Ok(())
}

fn table(a: TableArgs, base: &FileConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let format = TableFormat::from(a.format);
    if a.fixture {
        if a.kind != KindArg::Params {
            return Err(usage("the bundled reference table provides only --kind params"));
        }
        let t = table_one();
        let meta = "source=bundled_reference rows=30";
        emit(out, &emit_params_table(&t.params(), DepthUnit::Relative, meta, format)?)?;
        if a.groups || a.group_map.is_some() {
            let grouping = match &a.group_map {
                Some(path) => read_group_map(path)?,
                None => t.grouping(),
            };
            let groups = group_xmin(t.rows.iter().map(|r| (r.symbol.as_str(), r.params().x_min)), &grouping)?;
            emit(out, "\n")?;
            emit(out, &emit_groups(&groups, DepthUnit::Relative, meta))?;
        }
        return Ok(());
    }
    if a.groups && a.group_map.is_none() {
        return Err(usage("--groups without --fixture needs --group-map"));
    }

    let cfg = analysis_config(&a.analysis, base)?;
    let schema = price_schema(&a.schema, base)?;
    let grouping = a.group_map.as_deref().map(read_group_map).transpose()?;
    let reports = analyze_files(&a.files, &cfg, &schema, err)?;
    let kind = match a.kind {
        KindArg::Params => TableKind::Params,
        KindArg::SeriesStats => TableKind::SeriesStats,
    };
    emit(out, &emit_table(&reports, kind, format)?)?;
    if let Some(map) = grouping {
        emit(out, "\n")?;
        emit(out, &emit_groups(&group_reports(&reports, &map)?, cfg.depth_unit, &cfg.header()))?;
    }
    Ok(())
}

fn plot(a: PlotArgs, base: &FileConfig, out: &mut dyn Write) -> Result<()> {
    let cfg = analysis_config(&a.analysis, base)?;
    let schema = price_schema(&a.schema, base)?;
    let series = load_series(&a.file, &schema)?;
    let report = analyze_index(&series, &cfg).with_context(|| format!("cannot analyze {}", a.file.display()))?;
    let figures = if a.figure.is_empty() { Figure::ALL.to_vec() } else { a.figure };
    for f in figures {
        let data = emit_plot_data(&report, f);
        match &a.out_dir {
            Some(dir) => write_file(&dir.join(format!("{}.{}.tsv", file_stem_for(&report.symbol), f.id())), &data)?,
            None => emit(out, &data)?,
        }
    }
    Ok(())
}

fn price_csv(series: &PriceSeries, header: &str) -> String {
    let mut s = String::with_capacity(24 * series.len() + header.len());
    let _ = writeln!(s, "# socdd {header}");
    s.push_str("date,close\n");
    for (d, c) in series.dates().iter().zip(series.closes()) {
        let _ = writeln!(s, "{d},{c}");
    }
    s
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => emit(out, text),
    }
}

fn synth(cmd: SynthCommand, base: &FileConfig, out: &mut dyn Write) -> Result<()> {
    match cmd {
        SynthCommand::Gbm { days, mu, sigma, start_price, seed, out: path } => {
            if days < 2 || !(sigma >= 0.0) || !(start_price > 0.0) {
                return Err(usage("gbm needs --days >= 2, --sigma >= 0 and --start-price > 0"));
            }
            let spec = GbmSpec { start_price, ..GbmSpec::new(days, mu, sigma, seed) };
            let series = gen_gbm(&spec)?;
            let header = format!("synth=gbm seed={seed} days={days} mu={mu} sigma={sigma} start_price={start_price}");
            write_or_print(path.as_deref(), &price_csv(&series, &header), out)
        }
        SynthCommand::Shuffle { file, seed, out: path, schema } => {
            let schema = price_schema(&schema, base)?;
            let series = shuffle_returns(&load_series(&file, &schema)?, seed)?;
            let header = format!("synth=shuffle seed={seed} source={}", file.display());
            write_or_print(path.as_deref(), &price_csv(&series, &header), out)
        }
        SynthCommand::Mixture { mixture, out: path } => {
            let spec = mixture.spec();
            let series = gen_drawdown_mixture(&spec).map_err(|e| usage(e.to_string()))?;
            let header = format!(
                "synth=mixture seed={} n_body={} n_tail={} body_scale={} alpha={} graft={}",
                spec.seed,
                spec.n_body,
                spec.n_tail,
                spec.body_scale,
                spec.alpha,
                spec.graft_point()
            );
            write_or_print(path.as_deref(), &price_csv(&series, &header), out)
        }
    }
}

fn sweep_demo(a: SweepArgs, base: &FileConfig, out: &mut dyn Write) -> Result<()> {
    let cfg = analysis_config(&a.analysis, base)?;
    let (set, source) = match &a.file {
        Some(path) => {
            let series = load_series(path, &price_schema(&a.schema, base)?)?;
            let ex = extract(&series, &cfg.window)?;
            (collect_depths(&ex.events, cfg.depth_unit, cfg.include_incomplete), format!("file={}", path.display()))
        }
        None => {
            let spec = a.mixture.spec();
            let depths = mixture_depths(&spec).map_err(|e| usage(e.to_string()))?;
            let source = format!(
                "source=mixture mixture_seed={} n_body={} n_tail={} alpha={} graft={}",
                spec.seed,
                spec.n_body,
                spec.n_tail,
                spec.alpha,
                spec.graft_point()
            );
            (DrawdownSet::from_magnitudes(depths, DepthUnit::Relative), source)
        }
    };
    let (sweep, split) = find_critical(&set, cfg.min_segment, cfg.min_tail)?;

    let mut s = String::new();
    let _ = writeln!(s, "# socdd sweep {source} {}", cfg.header());
    let _ = writeln!(
        s,
        "# selected x_min={} n_sup={} n_inf={} k_inf={} k_sup={}",
        split.x_min, split.n_sup, split.n_inf, split.k_inf, split.k_sup
    );
    s.push_str("cutoff\tn_inferior\tk_inferior\tselected\n");
    for p in &sweep {
        let selected = u8::from(p.cutoff_value == split.x_min);
        let _ = writeln!(s, "{}\t{}\t{}\t{selected}", p.cutoff_value, p.n_inferior, p.k_inferior);
    }
    emit(out, &s)
}
