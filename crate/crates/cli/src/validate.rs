//! File-by-file checks that collect every problem instead of stopping at the
//! first one.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use nearme_core::epi::{parse_csse, FipsAliases, Metric};
use nearme_core::geocode::load_gazetteer;
use nearme_core::region::load_counties;
use nearme_core::routing::{load_graph, IsochroneConfig, RoutingError};
use nearme_service::{build_snapshot, DataPaths, SnapshotError, SnapshotSpec};

#[derive(Debug, Default)]
pub struct Inputs {
    pub graph_nodes: Option<PathBuf>,
    pub graph_edges: Option<PathBuf>,
    pub counties: Option<PathBuf>,
    pub cases: Option<PathBuf>,
    pub deaths: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
}

impl Inputs {
    pub fn is_empty(&self) -> bool {
        self.all().iter().all(|p| p.is_none())
    }

    fn all(&self) -> [&Option<PathBuf>; 6] {
        [
            &self.graph_nodes,
            &self.graph_edges,
            &self.counties,
            &self.cases,
            &self.deaths,
            &self.gazetteer,
        ]
    }
}

impl From<&DataPaths> for Inputs {
    fn from(d: &DataPaths) -> Self {
        Self {
            graph_nodes: Some(d.graph_nodes.clone()),
            graph_edges: Some(d.graph_edges.clone()),
            counties: Some(d.counties.clone()),
            cases: Some(d.cases.clone()),
            deaths: Some(d.deaths.clone()),
            gazetteer: Some(d.gazetteer.clone()),
        }
    }
}

#[derive(Debug, Default)]
pub struct Report {
    entries: Vec<(&'static str, String)>,
    pub errors: usize,
    pub warnings: usize,
}

impl Report {
    fn ok(&mut self, path: &Path, msg: impl Display) {
        self.entries.push(("ok", format!("{}: {msg}", path.display())));
    }

    fn error(&mut self, path: &Path, msg: impl Display) {
        self.errors += 1;
        self.entries.push(("error", format!("{}: {msg}", path.display())));
    }

    fn warning(&mut self, path: &Path, msg: impl Display) {
        self.warnings += 1;
        self.entries.push(("warning", format!("{}: {msg}", path.display())));
    }

    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        self.entries.iter().map(|(kind, msg)| format!("{kind:<8}{msg}"))
    }
}

fn read(report: &mut Report, path: &Path) -> Option<Vec<u8>> {
    std::fs::read(path).map_err(|e| report.error(path, e)).ok()
}

/// Checks each given file; when every file is present and individually
/// valid, also checks that they fit together.
pub fn run(inputs: &Inputs, settings: Option<(&IsochroneConfig, &FipsAliases)>) -> Report {
    let mut r = Report::default();
    let mut all_ok = true;

    match (&inputs.graph_nodes, &inputs.graph_edges) {
        (Some(n), Some(e)) => match (read(&mut r, n), read(&mut r, e)) {
            (Some(nb), Some(eb)) => match load_graph(nb.as_slice(), eb.as_slice()) {
                Ok(g) => r.ok(e, format_args!("graph with {} nodes and {} arcs", g.node_count(), g.arc_count())),
                Err(err) => {
                    let which = match err {
                        RoutingError::MalformedRow { file: "nodes", .. }
                        | RoutingError::DuplicateNode(_)
                        | RoutingError::EmptyGraph => n,
                        _ => e,
                    };
                    r.error(which, err);
                    all_ok = false;
                }
            },
            _ => all_ok = false,
        },
        (Some(p), None) | (None, Some(p)) => {
            r.error(p, "graph nodes and edges must be checked together");
            all_ok = false;
        }
        (None, None) => {}
    }

    if let Some(p) = &inputs.counties {
        match read(&mut r, p).map(|b| load_counties(b.as_slice())) {
            Some(Ok(set)) => r.ok(p, format_args!("{} counties", set.len())),
            Some(Err(e)) => {
                r.error(p, e);
                all_ok = false;
            }
            None => all_ok = false,
        }
    }

    for (path, metric) in [(&inputs.cases, Metric::Cases), (&inputs.deaths, Metric::Deaths)] {
        let Some(p) = path else { continue };
        match read(&mut r, p).map(|b| parse_csse(b.as_slice(), metric)) {
            Some(Ok(parsed)) => {
                let t = &parsed.table;
                r.ok(p, format_args!("{} rows over {} days from {}", t.rows().len(), t.index().len(), t.index().start()));
                for w in &parsed.warnings {
                    r.warning(p, w);
                }
                for d in t.decreases() {
                    let row = &t.rows()[d.row];
                    let id = row.fips.code().unwrap_or("no FIPS");
                    r.warning(p, format_args!("{}, {} ({id}) falls from {} to {} on {}", row.name, row.state, d.from, d.to, d.date));
                }
            }
            Some(Err(e)) => {
                r.error(p, e);
                all_ok = false;
            }
            None => all_ok = false,
        }
    }

    if let Some(p) = &inputs.gazetteer {
        match read(&mut r, p).map(|b| load_gazetteer(b.as_slice())) {
            Some(Ok(g)) => r.ok(p, format_args!("{} places", g.len())),
            Some(Err(e)) => {
                r.error(p, e);
                all_ok = false;
            }
            None => all_ok = false,
        }
    }

    let complete = inputs.all().iter().all(|p| p.is_some());
    if complete && all_ok {
        let d = |p: &Option<PathBuf>| p.clone().expect("checked complete");
        let (iso, aliases) = settings.map_or((IsochroneConfig::default(), FipsAliases::default()), |(i, a)| (*i, a.clone()));
        let spec = SnapshotSpec {
            data: DataPaths {
                graph_nodes: d(&inputs.graph_nodes),
                graph_edges: d(&inputs.graph_edges),
                counties: d(&inputs.counties),
                cases: d(&inputs.cases),
                deaths: d(&inputs.deaths),
                gazetteer: d(&inputs.gazetteer),
            },
            isochrone: iso,
            aliases,
        };
        match build_snapshot(&spec) {
            Ok(s) => r.ok(Path::new("snapshot"), format_args!("consistent, data_version {}", s.data_version)),
            Err(SnapshotError::File { path, reason }) => r.error(&path, reason),
            Err(e) => r.error(Path::new("snapshot"), e),
        }
    }
    r
}
