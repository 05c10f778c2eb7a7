//! The relatively independent joining of a system with its mirror over F,
//! and whether the product system is ergodic relative to its diagonal.

use relmix::cli::config::hand_configs;
use relmix::relprod::{build_product_gns, omega_eval, product_relatively_ergodic, TensorElement};
use relmix::repgns::{build_gns, cond_expectation, mirror_system};
use relmix::vnalg::matrix_unit;

fn main() -> relmix::Result<()> {
    for config in hand_configs() {
        let built = config.build(1e-9)?;
        let gns = build_gns(&built.system)?;
        let ce = cond_expectation(&gns, &built.subsystem)?;
        let mirror = mirror_system(&gns, &ce)?;
        let pg = build_product_gns(&gns, &mirror, &ce)?;
        let joined = product_relatively_ergodic(&pg, 1e-7)?;
        println!(
            "{:<8} dim H_omega = {}, dim H_lambda = {}, fixed space of W = {}, relatively ergodic = {}",
            built.name,
            pg.dim(),
            pg.h_lambda().rank(),
            pg.fixed_space()?.rank(),
            joined.value
        );
        println!(
            "         worst joining residual {:.1e}",
            pg.invariants(&gns, &mirror, &ce).max()
        );
    }

    // omega(e11 (x) j(e11)) on M2 over its diagonal
    let built = hand_configs()[1].build(1e-9)?;
    let gns = build_gns(&built.system)?;
    let ce = cond_expectation(&gns, &built.subsystem)?;
    let e11 = matrix_unit(2, 0, 0);
    let t = TensorElement::simple(e11.clone(), gns.mirror(&gns.pi(&e11)));
    println!("omega(e11 (x) j(e11)) = {:.6}", omega_eval(&gns, &ce, &t));
    Ok(())
}
