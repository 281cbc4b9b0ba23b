//! An immutable, fully validated view of every data file, identified by a
//! content hash.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use nearme_core::epi::{parse_csse, FipsAliases, Metric, SeriesTable, Warning};
use nearme_core::geocode::{load_gazetteer, Gazetteer};
use nearme_core::region::{load_counties, CountyBoundarySet};
use nearme_core::routing::{load_graph, IsochroneConfig, RoadGraph, RoutingError};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{AppConfig, DataPaths};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnapshotError {
    #[error("{path}: {reason}")]
    File { path: PathBuf, reason: String },
    #[error("{0}")]
    Inconsistent(String),
}

fn file_err(path: &Path, e: impl ToString) -> SnapshotError {
    SnapshotError::File {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Everything needed to build a snapshot.
#[derive(Debug, Clone)]
pub struct SnapshotSpec {
    pub data: DataPaths,
    pub isochrone: IsochroneConfig,
    pub aliases: FipsAliases,
}

impl From<&AppConfig> for SnapshotSpec {
    fn from(c: &AppConfig) -> Self {
        Self {
            data: c.data.clone(),
            isochrone: c.isochrone,
            aliases: c.fips_aliases.clone(),
        }
    }
}

#[derive(Debug)]
pub struct Snapshot {
    pub graph: RoadGraph,
    pub counties: CountyBoundarySet,
    pub cases: SeriesTable,
    pub deaths: SeriesTable,
    pub gazetteer: Gazetteer,
    pub aliases: FipsAliases,
    pub isochrone: IsochroneConfig,
    pub warnings: Vec<(PathBuf, Warning)>,
    pub loaded_at: DateTime<Utc>,
    /// Hex prefix of a SHA-256 over every input file and the parameters
    /// that shape responses.
    pub data_version: String,
}

fn read(path: &Path) -> Result<Vec<u8>, SnapshotError> {
    std::fs::read(path).map_err(|e| file_err(path, e))
}

pub fn build_snapshot(spec: &SnapshotSpec) -> Result<Snapshot, SnapshotError> {
    let d = &spec.data;
    let files = [
        ("graph_nodes", &d.graph_nodes),
        ("graph_edges", &d.graph_edges),
        ("counties", &d.counties),
        ("cases", &d.cases),
        ("deaths", &d.deaths),
        ("gazetteer", &d.gazetteer),
    ];
    let mut hasher = Sha256::new();
    let mut bytes = Vec::with_capacity(files.len());
    for (name, path) in files {
        let b = read(path)?;
        hasher.update(name.as_bytes());
        hasher.update((b.len() as u64).to_le_bytes());
        hasher.update(&b);
        bytes.push(b);
    }
    hasher.update(serde_json::to_vec(&spec.isochrone).expect("config serializes"));
    for (from, to) in spec.aliases.entries() {
        hasher.update(format!("{from}>{to};").as_bytes());
    }
    let data_version = hex::encode(&hasher.finalize()[..8]);
    let [nodes, edges, counties, cases, deaths, gazetteer] = bytes.try_into().expect("six files");

    let graph = load_graph(nodes.as_slice(), edges.as_slice()).map_err(|e| {
        let path = match &e {
            RoutingError::MalformedRow { file: "nodes", .. } | RoutingError::EmptyGraph => &d.graph_nodes,
            RoutingError::DuplicateNode(_) => &d.graph_nodes,
            _ => &d.graph_edges,
        };
        file_err(path, e)
    })?;
    let counties = load_counties(counties.as_slice()).map_err(|e| file_err(&d.counties, e))?;
    let cases = parse_csse(cases.as_slice(), Metric::Cases).map_err(|e| file_err(&d.cases, e))?;
    let deaths = parse_csse(deaths.as_slice(), Metric::Deaths).map_err(|e| file_err(&d.deaths, e))?;
    let gazetteer = load_gazetteer(gazetteer.as_slice()).map_err(|e| file_err(&d.gazetteer, e))?;

    if cases.table.index() != deaths.table.index() {
        return Err(SnapshotError::Inconsistent(format!(
            "cases and deaths cover different dates ({} days from {} vs {} days from {})",
            cases.table.index().len(),
            cases.table.index().start(),
            deaths.table.index().len(),
            deaths.table.index().start()
        )));
    }
    for c in counties.counties() {
        let f = spec.aliases.resolve(c.fips());
        for (table, path) in [(&cases.table, &d.cases), (&deaths.table, &d.deaths)] {
            if !table.contains(f) {
                return Err(SnapshotError::Inconsistent(format!(
                    "county {} ({}) has no series row {f} in {}",
                    c.fips(),
                    c.name(),
                    path.display()
                )));
            }
        }
    }

    let warnings = cases
        .warnings
        .into_iter()
        .map(|w| (d.cases.clone(), w))
        .chain(deaths.warnings.into_iter().map(|w| (d.deaths.clone(), w)))
        .collect();
    Ok(Snapshot {
        graph,
        counties,
        cases: cases.table,
        deaths: deaths.table,
        gazetteer,
        aliases: spec.aliases.clone(),
        isochrone: spec.isochrone,
        warnings,
        loaded_at: Utc::now(),
        data_version,
    })
}
