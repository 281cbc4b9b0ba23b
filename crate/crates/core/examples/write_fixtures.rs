//! Writes the demo road graph, counties, series, gazetteer and config.
//!
//! ```text
//! cargo run -p nearme-core --example write_fixtures -- fixtures/demo
//! ```

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = std::env::args_os().nth(1).map_or_else(|| PathBuf::from("fixtures/demo"), PathBuf::from);
    let paths = nearme_core::synthetic::write_demo(&dir)?;
    println!("{}", paths.config.display());
    Ok(())
}
