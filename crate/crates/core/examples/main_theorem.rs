//! Relative weak mixing against ergodicity of the relatively independent
//! product, on the hand systems and a few random tracial ones.

use relmix::cli::config::hand_configs;
use relmix::cli::random::random_batch;
use relmix::ergodic::{check_main_theorem, DEFAULT_HORIZON, DEFAULT_PREDICATE_TOL};
use relmix::relprod::build_product_gns;
use relmix::repgns::{build_gns, cond_expectation, mirror_system};

fn main() -> relmix::Result<()> {
    let mut configs = hand_configs();
    configs.extend(random_batch(100, 6, 3)?);
    println!(
        "{:<12} {:>6} {:>6} {:>8} {:>8} {:>8}",
        "system", "dim A", "dim F", "rwm", "product", "ergodic"
    );
    for config in configs {
        let built = config.build(1e-9)?;
        let gns = build_gns(&built.system)?;
        let ce = cond_expectation(&gns, &built.subsystem)?;
        let pg = build_product_gns(&gns, &mirror_system(&gns, &ce)?, &ce)?;
        let t = check_main_theorem(&gns, &ce, &pg, DEFAULT_PREDICATE_TOL, DEFAULT_HORIZON)?;
        assert!(t.report.value, "{}", built.name);
        println!(
            "{:<12} {:>6} {:>6} {:>8} {:>8} {:>8}",
            built.name,
            built.system.algebra.dim(),
            built.subsystem.algebra().dim(),
            t.relatively_weakly_mixing,
            t.product_relatively_ergodic,
            t.relatively_ergodic
        );
    }
    Ok(())
}
