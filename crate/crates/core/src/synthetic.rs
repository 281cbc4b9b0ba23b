//! Deterministic fixture generators: lattice road graphs, a three-county
//! demo region with matching time series and gazetteer, and a US-scale
//! jittered county tiling.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::GeoPoint;
use crate::routing::NodeId;

/// Centre of the demo region.
pub const DEMO_CENTER: (f64, f64) = (-97.75, 30.25);
/// Lattice spacing in degrees.
pub const DEMO_SPACING: f64 = 0.05;
/// Travel time per lattice edge.
pub const DEMO_EDGE_SECONDS: f64 = 600.0;

/// A square lattice of road nodes, optionally cut down to a diamond.
#[derive(Debug, Clone)]
pub struct Lattice {
    half: i64,
    center: (f64, f64),
    spacing: f64,
    edge_seconds: f64,
    offsets: Vec<(i64, i64)>,
    edges: Vec<((i64, i64), (i64, i64))>,
}

impl Lattice {
    /// `(2·half + 1)²` nodes with 4-neighbour bidirectional edges.
    pub fn square(half: i64, center: (f64, f64), spacing: f64, edge_seconds: f64) -> Self {
        Self::build(half, center, spacing, edge_seconds, |_, _| true)
    }

    /// Nodes with `|dx| + |dy| ≤ radius`; radius 4 gives 41 nodes.
    pub fn diamond(radius: i64, center: (f64, f64), spacing: f64, edge_seconds: f64) -> Self {
        Self::build(radius, center, spacing, edge_seconds, |dx, dy| dx.abs() + dy.abs() <= radius)
    }

    /// The 21×21 demo lattice.
    pub fn demo() -> Self {
        Self::square(10, DEMO_CENTER, DEMO_SPACING, DEMO_EDGE_SECONDS)
    }

    fn build(half: i64, center: (f64, f64), spacing: f64, edge_seconds: f64, keep: impl Fn(i64, i64) -> bool) -> Self {
        let mut offsets = Vec::new();
        for dy in -half..=half {
            for dx in -half..=half {
                if keep(dx, dy) {
                    offsets.push((dx, dy));
                }
            }
        }
        let mut edges = Vec::new();
        for &(dx, dy) in &offsets {
            for next in [(dx + 1, dy), (dx, dy + 1)] {
                if next.0.abs() <= half && next.1.abs() <= half && keep(next.0, next.1) {
                    edges.push(((dx, dy), next));
                }
            }
        }
        Self {
            half,
            center,
            spacing,
            edge_seconds,
            offsets,
            edges,
        }
    }

    pub fn node_id(&self, dx: i64, dy: i64) -> NodeId {
        let w = 2 * self.half + 1;
        ((dy + self.half) * w + (dx + self.half) + 1) as NodeId
    }

    pub fn point(&self, dx: i64, dy: i64) -> GeoPoint {
        GeoPoint::new(
            self.center.0 + dx as f64 * self.spacing,
            self.center.1 + dy as f64 * self.spacing,
        )
        .expect("lattice stays within valid coordinates")
    }

    pub fn offsets(&self) -> &[(i64, i64)] {
        &self.offsets
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Every edge is bidirectional.
    pub fn arc_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edge_seconds(&self) -> f64 {
        self.edge_seconds
    }

    pub fn nodes_csv(&self) -> String {
        let mut out = String::from("id,lat,lon\n");
        for &(dx, dy) in &self.offsets {
            let p = self.point(dx, dy);
            writeln!(out, "{},{},{}", self.node_id(dx, dy), p.lat(), p.lon()).unwrap();
        }
        out
    }

    pub fn edges_csv(&self) -> String {
        let mut out = String::from("from,to,seconds,oneway\n");
        for &(a, b) in &self.edges {
            writeln!(
                out,
                "{},{},{},0",
                self.node_id(a.0, a.1),
                self.node_id(b.0, b.1),
                self.edge_seconds
            )
            .unwrap();
        }
        out
    }
}

/// Number of lattice nodes within Manhattan radius `r` (centred diamond).
pub fn diamond_size(r: i64) -> usize {
    (2 * r * r + 2 * r + 1) as usize
}

/// One demo county: a rectangle in lon/lat.
#[derive(Debug, Clone, Copy)]
pub struct DemoCounty {
    pub fips: &'static str,
    pub name: &'static str,
    pub state: &'static str,
    pub lon: (f64, f64),
    pub lat: (f64, f64),
}

/// Three side-by-side Texas counties; the lattice sits over A and reaches into B.
pub const DEMO_COUNTIES: [DemoCounty; 3] = [
    DemoCounty {
        fips: "48001",
        name: "Alpha",
        state: "Texas",
        lon: (-98.30, -97.70),
        lat: (29.70, 30.80),
    },
    DemoCounty {
        fips: "48003",
        name: "Bravo",
        state: "Texas",
        lon: (-97.70, -97.20),
        lat: (29.70, 30.80),
    },
    DemoCounty {
        fips: "48005",
        name: "Charlie",
        state: "Texas",
        lon: (-97.20, -96.70),
        lat: (29.70, 30.80),
    },
];

pub fn demo_counties_geojson() -> String {
    let features: Vec<String> = DEMO_COUNTIES
        .iter()
        .map(|c| {
            let (x0, x1) = c.lon;
            let (y0, y1) = c.lat;
            format!(
                r#"{{"type":"Feature","properties":{{"fips":"{}","name":"{}","state":"{}"}},"geometry":{{"type":"Polygon","coordinates":[[[{x0},{y0}],[{x1},{y0}],[{x1},{y1}],[{x0},{y1}],[{x0},{y0}]]]}}}}"#,
                c.fips, c.name, c.state
            )
        })
        .collect();
    format!(
        "{{\"type\":\"FeatureCollection\",\"features\":[\n{}\n]}}\n",
        features.join(",\n")
    )
}

/// Days covered by the demo series, starting 2020-01-22.
pub const DEMO_DAYS: usize = 30;

/// A demo series row: FIPS (empty for unassigned), county name, state, and
/// cumulative cases and deaths as functions of the day number.
pub struct DemoRow {
    pub fips: &'static str,
    pub name: &'static str,
    pub state: &'static str,
    pub cases: fn(i64) -> i64,
    pub deaths: fn(i64) -> i64,
}

pub const DEMO_ROWS: [DemoRow; 5] = [
    DemoRow {
        fips: "48001",
        name: "Alpha",
        state: "Texas",
        cases: |d| 3 * d * (d + 1) / 2 + 5,
        deaths: |d| d * d / 10,
    },
    DemoRow {
        fips: "48003",
        name: "Bravo",
        state: "Texas",
        cases: |d| 100 + 7 * d,
        deaths: |d| d / 3,
    },
    DemoRow {
        fips: "48005",
        name: "Charlie",
        state: "Texas",
        cases: |d| 50 * d,
        deaths: |d| d / 2,
    },
    DemoRow {
        fips: "",
        name: "Unassigned",
        state: "Texas",
        cases: |d| 2 * d,
        deaths: |_| 0,
    },
    DemoRow {
        fips: "40001",
        name: "Adair",
        state: "Oklahoma",
        cases: |d| 4 * d + 1,
        deaths: |d| d / 5,
    },
];

pub fn demo_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 22).expect("valid date")
}

fn csse_csv(deaths: bool) -> String {
    let mut out = String::from("UID,iso2,iso3,code3,FIPS,Admin2,Province_State,Country_Region,Lat,Long_,Combined_Key");
    if deaths {
        out.push_str(",Population");
    }
    for d in 0..DEMO_DAYS {
        let date = demo_start() + Days::new(d as u64);
        write!(out, ",{}", date.format("%-m/%-d/%y")).unwrap();
    }
    out.push('\n');
    for (k, row) in DEMO_ROWS.iter().enumerate() {
        let fips = if row.fips.is_empty() { String::new() } else { format!("{}.0", row.fips) };
        write!(
            out,
            "{},US,USA,840,{fips},{},{},US,30.0,-97.0,\"{}, {}, US\"",
            84000000 + k,
            row.name,
            row.state,
            row.name,
            row.state
        )
        .unwrap();
        if deaths {
            out.push_str(",10000");
        }
        let f = if deaths { row.deaths } else { row.cases };
        for d in 0..DEMO_DAYS as i64 {
            write!(out, ",{}", f(d)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn demo_cases_csv() -> String {
    csse_csv(false)
}

pub fn demo_deaths_csv() -> String {
    csse_csv(true)
}

pub fn demo_gazetteer_csv() -> String {
    [
        "name,admin1,lat,lon,population",
        "Alpha Town,Texas,30.25,-97.75,50000",
        "Bravo City,Texas,30.30,-97.45,20000",
        "Springfield,Illinois,39.78,-89.65,114000",
        "Springfield,Missouri,37.21,-93.29,169000",
        "Faraway,Texas,31.50,-99.50,800",
        "",
    ]
    .join("\n")
}

/// File paths written by [`write_demo`].
#[derive(Debug, Clone)]
pub struct DemoPaths {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub counties: PathBuf,
    pub cases: PathBuf,
    pub deaths: PathBuf,
    pub gazetteer: PathBuf,
    pub config: PathBuf,
}

/// Writes the demo graph, counties, series, gazetteer and a `nearme.toml`
/// pointing at them into `dir`.
pub fn write_demo(dir: &Path) -> io::Result<DemoPaths> {
    std::fs::create_dir_all(dir)?;
    let lattice = Lattice::demo();
    let p = |name: &str| dir.join(name);
    let paths = DemoPaths {
        nodes: p("nodes.csv"),
        edges: p("edges.csv"),
        counties: p("counties.geojson"),
        cases: p("cases.csv"),
        deaths: p("deaths.csv"),
        gazetteer: p("gazetteer.csv"),
        config: p("nearme.toml"),
    };
    std::fs::write(&paths.nodes, lattice.nodes_csv())?;
    std::fs::write(&paths.edges, lattice.edges_csv())?;
    std::fs::write(&paths.counties, demo_counties_geojson())?;
    std::fs::write(&paths.cases, demo_cases_csv())?;
    std::fs::write(&paths.deaths, demo_deaths_csv())?;
    std::fs::write(&paths.gazetteer, demo_gazetteer_csv())?;
    std::fs::write(&paths.config, DEMO_CONFIG)?;
    Ok(paths)
}

pub const DEMO_CONFIG: &str = r#"# paths are relative to this file
graph_nodes = "nodes.csv"
graph_edges = "edges.csv"
counties = "counties.geojson"
cases = "cases.csv"
deaths = "deaths.csv"
gazetteer = "gazetteer.csv"
commitment_log = "commitments.jsonl"

listen = "127.0.0.1:8080"
refresh_interval = 86400
"#;

/// A jittered `nx × ny` tiling of quadrilateral-ish counties over `bounds`
/// (min lon, min lat, max lon, max lat), written as a GeoJSON
/// FeatureCollection. Neighbouring counties share their boundary vertices.
pub fn jittered_counties(nx: usize, ny: usize, bounds: (f64, f64, f64, f64), seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, y0, x1, y1) = bounds;
    let (cw, ch) = ((x1 - x0) / nx as f64, (y1 - y0) / ny as f64);
    // vertices on a doubled grid so each side gets a midpoint
    let (vx, vy) = (2 * nx + 1, 2 * ny + 1);
    let mut verts = vec![(0.0, 0.0); vx * vy];
    for j in 0..vy {
        for i in 0..vx {
            let interior = i > 0 && j > 0 && i < vx - 1 && j < vy - 1;
            let (jx, jy) = if interior {
                (rng.gen_range(-0.2..0.2) * cw, rng.gen_range(-0.2..0.2) * ch)
            } else {
                (0.0, 0.0)
            };
            verts[j * vx + i] = (x0 + i as f64 * cw / 2.0 + jx, y0 + j as f64 * ch / 2.0 + jy);
        }
    }
    let v = |i: usize, j: usize| verts[j * vx + i];
    let mut features = Vec::with_capacity(nx * ny);
    for cy in 0..ny {
        for cx in 0..nx {
            let (i, j) = (2 * cx, 2 * cy);
            let ring = [
                v(i, j),
                v(i + 1, j),
                v(i + 2, j),
                v(i + 2, j + 1),
                v(i + 2, j + 2),
                v(i + 1, j + 2),
                v(i, j + 2),
                v(i, j + 1),
                v(i, j),
            ];
            let coords: Vec<String> = ring.iter().map(|(x, y)| format!("[{x:.6},{y:.6}]")).collect();
            let k = cy * nx + cx;
            let fips = format!("{:02}{:03}", 1 + k / 100, 1 + 2 * (k % 100));
            features.push(format!(
                r#"{{"type":"Feature","properties":{{"fips":"{fips}","name":"County {k}","state":"State {}"}},"geometry":{{"type":"Polygon","coordinates":[[{}]]}}}}"#,
                1 + k / 100,
                coords.join(",")
            ));
        }
    }
    format!("{{\"type\":\"FeatureCollection\",\"features\":[\n{}\n]}}\n", features.join(",\n"))
}

/// Roughly continental-US bounds used with [`jittered_counties`].
pub const US_BOUNDS: (f64, f64, f64, f64) = (-124.0, 25.0, -67.0, 49.0);

/// A gazetteer of `n` synthetic places with deliberate name collisions
/// across states; every "name, admin1" key is unique.
pub fn synthetic_gazetteer(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("name,admin1,lat,lon,population\n");
    for k in 0..n {
        // every tenth row shares its name with up to 49 others in other states
        let (name, state) = if k % 10 == 0 {
            (format!("Fairview {}", k / 500), (k / 10) % 50)
        } else {
            (format!("Place {k}"), k % 50)
        };
        writeln!(
            out,
            "{name},State {state},{:.5},{:.5},{}",
            rng.gen_range(25.0..49.0),
            rng.gen_range(-124.0..-67.0),
            rng.gen_range(0..2_000_000)
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_bookkeeping() {
        let sq = Lattice::demo();
        assert_eq!(sq.node_count(), 441);
        assert_eq!(sq.edge_count(), 2 * 21 * 20);
        let d = Lattice::diamond(4, DEMO_CENTER, DEMO_SPACING, DEMO_EDGE_SECONDS);
        assert_eq!(d.node_count(), 41);
        assert_eq!(d.node_count(), diamond_size(4));
        assert_eq!(diamond_size(6), 85);
        assert_eq!(sq.nodes_csv().lines().count(), 442);
        assert_eq!(sq.edges_csv().lines().count(), 1 + sq.edge_count());
    }

    #[test]
    fn tiling_has_requested_size() {
        let text = jittered_counties(4, 3, (-100.0, 30.0, -96.0, 33.0), 7);
        assert_eq!(text.matches("\"Feature\"").count(), 12);
        assert_eq!(text, jittered_counties(4, 3, (-100.0, 30.0, -96.0, 33.0), 7));
    }
}
