//! The algebra generated by A and P, its trace on span(APA), and the
//! identity linking it to the weak-mixing terms.

use relmix::basicons::{build_bar_gns, build_basic_construction, lemma_identity_check};
use relmix::cli::config::hand_configs;
use relmix::ergodic::rwm_term;
use relmix::repgns::{build_gns, cond_expectation};
use relmix::vnalg::matrix_unit;

fn main() -> relmix::Result<()> {
    let built = hand_configs()[1].build(1e-9)?;
    let gns = build_gns(&built.system)?;
    let ce = cond_expectation(&gns, &built.subsystem)?;
    let bc = build_basic_construction(&gns, &ce)?;
    println!(
        "{}: dim A-bar = {}, dim span(APA) = {}",
        built.name,
        bc.abar().dim(),
        bc.apa_span().rank()
    );
    println!("well-definedness residual {:.1e}", bc.well_defined_residual());

    let p = bc.p().clone();
    println!("mubar(P) = {:.6}", bc.mubar(&p)?);

    let (a, b) = (matrix_unit(2, 0, 1), matrix_unit(2, 1, 0));
    for n in 0..4 {
        let check = lemma_identity_check(&bc, &gns, &ce, &a, &b, n, 1e-8)?;
        println!(
            "n = {n}: term {:.6}, identity holds = {}",
            rwm_term(&gns, &ce, &a, &b, n).value(),
            check.value
        );
    }

    let bar = build_bar_gns(&bc)?;
    println!(
        "GNS of mubar: dim {}, lifted unitary residual {:.1e}",
        bar.dim(),
        bar.unitarity_residual()
    );
    Ok(())
}
