//! Writes the bundled synthetic session.
//!
//! `cargo run --example make_fixture -- [DIR]`

use std::path::PathBuf;

use strokebench_core::synthetic::{write_fixture, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/session")));
    let config = write_fixture(&dir, &SyntheticSpec::default())?;
    println!("{}", config.display());
    Ok(())
}
