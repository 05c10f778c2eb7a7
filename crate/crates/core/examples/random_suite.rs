//! Runs every check on a seeded batch of random tracial systems.

use relmix::cli::random::random_batch;
use relmix::cli::suite::{run_suite, SuiteFlags};

fn main() -> relmix::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let configs = random_batch(seed, 8, 4)?;
    let report = run_suite(&configs, &SuiteFlags::default(), Some(seed));
    print!("{}", report.to_text());
    for inst in &report.instances {
        if let Some(gap) = inst.basic_construction_gap.filter(|&g| g > 0) {
            println!("{}: dim A-bar exceeds dim span(APA) by {gap}", inst.name);
        }
    }
    std::process::exit(report.exit_code());
}
