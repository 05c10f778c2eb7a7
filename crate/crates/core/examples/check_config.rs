//! Loads a JSON system description and prints its theorem pair.
//!
//! cargo run --example check_config -- crates/core/configs/m2-diag.json

use relmix::cli::config::load_config;
use relmix::cli::suite::{run_theorem, SuiteFlags};

fn main() -> relmix::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/c2-swap.json").into());
    let config = load_config(&path)?;
    let t = run_theorem(&config, &SuiteFlags::default())?;
    println!(
        "{}: relatively weakly mixing = {}, product relatively ergodic = {}",
        t.name, t.relatively_weakly_mixing, t.product_relatively_ergodic
    );
    println!("{}", t.report.note.unwrap_or_default());
    Ok(())
}
