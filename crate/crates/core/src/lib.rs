//! Core library: geometry predicates, drive-time isochrones over a road
//! graph, county intersection, epidemic series aggregation, geocoding and the
//! commitment log.

pub mod commitments;
pub mod epi;
pub mod exec;
pub mod geo;
pub mod geocode;
pub mod region;
pub mod routing;
pub mod synthetic;

pub use exec::Exec;
