//! `nearme`: isochrones, local stats, data validation and the HTTP service
//! from the command line. Data goes to standard output, diagnostics to
//! standard error. Exit status is 0 on success, 1 on a domain error and 2 on
//! a usage error.

mod validate;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use nearme_core::epi::FipsAliases;
use nearme_core::geo::GeoPoint;
use nearme_core::routing::{compute_isochrone, load_graph, IsochroneConfig, IsochroneMode};
use nearme_core::Exec;
use nearme_service::{
    build_snapshot, local_stats, shutdown_signal, to_json_bytes, AppConfig, DataPaths, LocalQuery,
    LocalStatsResponse, Providers, Server, SnapshotSpec,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "nearme", version, about = "Drive-time local epidemic statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the drive-time isochrone around a point as a GeoJSON Feature.
    Isochrone(IsochroneArgs),
    /// Print local, state and national statistics for a point or place.
    LocalStats(LocalStatsArgs),
    /// Check data files and report errors and warnings.
    Validate(DataArgs),
    /// Run the HTTP service until interrupted.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct IsochroneArgs {
    #[arg(long, allow_negative_numbers = true)]
    lat: f64,
    #[arg(long, allow_negative_numbers = true)]
    lon: f64,
    /// Travel-time budget in seconds.
    #[arg(long)]
    budget: f64,
    #[arg(long)]
    graph_nodes: PathBuf,
    #[arg(long)]
    graph_edges: PathBuf,
    /// Grid cell edge in meters.
    #[arg(long)]
    cell_size: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ConcaveGrid,
    ConvexHull,
}

impl From<ModeArg> for IsochroneMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ConcaveGrid => IsochroneMode::ConcaveGrid,
            ModeArg::ConvexHull => IsochroneMode::ConvexHull,
        }
    }
}

#[derive(Args, Default)]
struct DataArgs {
    /// Service config; data paths and isochrone settings come from it.
    #[arg(long, conflicts_with_all = ["graph_nodes", "graph_edges", "counties", "cases", "deaths", "gazetteer"])]
    config: Option<PathBuf>,
    #[arg(long)]
    graph_nodes: Option<PathBuf>,
    #[arg(long)]
    graph_edges: Option<PathBuf>,
    #[arg(long)]
    counties: Option<PathBuf>,
    #[arg(long)]
    cases: Option<PathBuf>,
    #[arg(long)]
    deaths: Option<PathBuf>,
    #[arg(long)]
    gazetteer: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Args)]
#[command(group(ArgGroup::new("origin").required(true).args(["lat", "place"])))]
struct LocalStatsArgs {
    #[arg(long, requires = "lon", allow_negative_numbers = true)]
    lat: Option<f64>,
    #[arg(long, requires = "lat", allow_negative_numbers = true)]
    lon: Option<f64>,
    #[arg(long, conflicts_with_all = ["lat", "lon"])]
    place: Option<String>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// A domain failure: the message goes to standard error and the exit status is 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn init_logging(default: tracing::Level) {
    let level = std::env::var("NEARME_LOG")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default);
    let _ = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .try_init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Isochrone(a) => {
            init_logging(tracing::Level::WARN);
            cmd_isochrone(a)
        }
        Command::LocalStats(a) => {
            init_logging(tracing::Level::WARN);
            cmd_local_stats(a)
        }
        Command::Validate(a) => {
            init_logging(tracing::Level::WARN);
            cmd_validate(a)
        }
        Command::Serve { config } => {
            init_logging(tracing::Level::INFO);
            cmd_serve(config)
        }
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("nearme: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit(bytes: &[u8]) -> Result<ExitCode, Failure> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn read(path: &PathBuf) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn cmd_isochrone(a: IsochroneArgs) -> Result<ExitCode, Failure> {
    if !(a.budget >= 0.0 && a.budget.is_finite()) {
        return Err(Failure(format!("budget must be >= 0, got {}", a.budget)));
    }
    let origin = GeoPoint::new(a.lon, a.lat)?;
    let nodes = read(&a.graph_nodes)?;
    let edges = read(&a.graph_edges)?;
    let graph = load_graph(nodes.as_slice(), edges.as_slice())?;
    let d = IsochroneConfig::default();
    let cfg = IsochroneConfig {
        budget: a.budget,
        cell_size: a.cell_size.unwrap_or(d.cell_size),
        mode: a.mode.map_or(d.mode, Into::into),
        ..d
    };
    let iso = compute_isochrone(&graph, &origin, &cfg, Exec::preferred())?;
    let feature = json!({
        "type": "Feature",
        "geometry": iso.geometry.to_geojson(),
        "properties": {
            "budget": cfg.budget,
            "mode": cfg.mode.as_str(),
            "reached_nodes": iso.reach.arrivals.len(),
        },
    });
    let mut bytes = serde_json::to_vec(&feature)?;
    bytes.push(b'\n');
    emit(&bytes)
}

/// The snapshot spec and providers for commands that need the full stack.
fn resolve_data(data: DataArgs) -> Result<(SnapshotSpec, Providers), Failure> {
    if let Some(path) = data.config {
        let cfg = AppConfig::load(path)?;
        let providers = Providers {
            client: Default::default(),
            geocoder: cfg.geocoder.clone(),
            isochrone: cfg.isochrone_provider.clone(),
        };
        return Ok((SnapshotSpec::from(&cfg), providers));
    }
    let missing: Vec<&str> = [
        ("--graph-nodes", data.graph_nodes.is_none()),
        ("--graph-edges", data.graph_edges.is_none()),
        ("--counties", data.counties.is_none()),
        ("--cases", data.cases.is_none()),
        ("--deaths", data.deaths.is_none()),
        ("--gazetteer", data.gazetteer.is_none()),
    ]
    .into_iter()
    .filter_map(|(flag, absent)| absent.then_some(flag))
    .collect();
    if !missing.is_empty() {
        Cli::command()
            .error(
                clap::error::ErrorKind::MissingRequiredArgument,
                format!("give --config or all data flags; missing {}", missing.join(", ")),
            )
            .exit();
    }
    let spec = SnapshotSpec {
        data: DataPaths {
            graph_nodes: data.graph_nodes.unwrap(),
            graph_edges: data.graph_edges.unwrap(),
            counties: data.counties.unwrap(),
            cases: data.cases.unwrap(),
            deaths: data.deaths.unwrap(),
            gazetteer: data.gazetteer.unwrap(),
        },
        isochrone: IsochroneConfig::default(),
        aliases: FipsAliases::default(),
    };
    Ok((spec, Providers::default()))
}

fn cmd_local_stats(a: LocalStatsArgs) -> Result<ExitCode, Failure> {
    let query = match (a.lat, a.lon, a.place) {
        (Some(lat), Some(lon), None) => LocalQuery::Coordinates { lat, lon },
        (None, None, Some(place)) => LocalQuery::Place(place),
        _ => unreachable!("clap enforces exactly one origin"),
    };
    let (spec, providers) = resolve_data(a.data)?;
    let snap = build_snapshot(&spec)?;
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    let resp = rt
        .block_on(local_stats(&snap, &providers, &query))
        .map_err(|e| Failure(format!("{}: {}", e.code, e.message)))?;
    match a.format {
        Format::Json => emit(&to_json_bytes(&resp)),
        Format::Text => emit(text_report(&resp).as_bytes()),
    }
}

fn text_report(r: &LocalStatsResponse) -> String {
    use nearme_core::epi::group_thousands as g;
    let mut out = String::new();
    for line in &r.summary {
        out.push_str(line);
        out.push('\n');
    }
    out.push('\n');
    let header = ["FIPS", "County", "State", "Cases", "Deaths"];
    let rows: Vec<[String; 5]> = r
        .counties
        .iter()
        .map(|c| [c.fips.clone(), c.name.clone(), c.state.clone(), g(c.cases), g(c.deaths)])
        .collect();
    let mut width = header.map(str::len);
    for row in &rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut line = |cells: [&str; 5]| {
        let s = format!(
            "{:<w0$}  {:<w1$}  {:<w2$}  {:>w3$}  {:>w4$}",
            cells[0],
            cells[1],
            cells[2],
            cells[3],
            cells[4],
            w0 = width[0],
            w1 = width[1],
            w2 = width[2],
            w3 = width[3],
            w4 = width[4]
        );
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header);
    for row in &rows {
        line([&row[0], &row[1], &row[2], &row[3], &row[4]]);
    }
    out
}

fn cmd_validate(a: DataArgs) -> Result<ExitCode, Failure> {
    let report = match a.config {
        Some(path) => {
            let cfg = AppConfig::load(path)?;
            validate::run(
                &validate::Inputs::from(&cfg.data),
                Some((&cfg.isochrone, &cfg.fips_aliases)),
            )
        }
        None => {
            let inputs = validate::Inputs {
                graph_nodes: a.graph_nodes,
                graph_edges: a.graph_edges,
                counties: a.counties,
                cases: a.cases,
                deaths: a.deaths,
                gazetteer: a.gazetteer,
            };
            if inputs.is_empty() {
                Cli::command()
                    .error(
                        clap::error::ErrorKind::MissingRequiredArgument,
                        "give --config or at least one data file flag",
                    )
                    .exit();
            }
            validate::run(&inputs, None)
        }
    };
    let mut err = std::io::stderr().lock();
    for line in report.lines() {
        writeln!(err, "{line}")?;
    }
    writeln!(err, "{} error(s), {} warning(s)", report.errors, report.warnings)?;
    Ok(if report.errors == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_serve(config: PathBuf) -> Result<ExitCode, Failure> {
    let cfg = AppConfig::load(&config)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let server = Server::bind(&cfg).await?;
        eprintln!("nearme: listening on http://{}", server.local_addr()?);
        server.run(shutdown_signal()).await?;
        Ok::<_, Failure>(())
    })?;
    Ok(ExitCode::SUCCESS)
}
