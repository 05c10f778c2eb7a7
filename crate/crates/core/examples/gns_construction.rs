//! GNS data of M₂ with a non-tracial state, and the mirror system on the
//! commutant.

use relmix::numkernel::{c64, CMatrix};
use relmix::repgns::{build_gns, cond_expectation, mirror_system};
use relmix::vnalg::{diag, fixed_algebra, validate_subsystem, AutomorphismKind, MatrixStarAlgebra, SystemSpec};

fn main() -> relmix::Result<()> {
    let density = diag(&[c64(0.7, 0.0), c64(0.3, 0.0)]);
    let unitary = diag(&[c64(1.0, 0.0), c64(0.0, 1.0)]);
    let system = SystemSpec::new(
        MatrixStarAlgebra::full(2),
        &density,
        &AutomorphismKind::Inner { unitary },
        1e-9,
    )?;
    let gns = build_gns(&system)?;

    println!("dim H = {}, tracial = {}", gns.dim(), gns.is_tracial());
    println!("Omega = {:?}", gns.omega().iter().map(|z| z.re).collect::<Vec<_>>());
    let inv = gns.invariants();
    println!("worst GNS residual {:.2e}", inv.max(gns.is_tracial()));

    // mu(a) = <Omega, pi(a) Omega>
    let a = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(0.0, 1.0), c64(-1.0, 0.0)]);
    let via_omega = gns.omega().dotc(&(gns.pi(&a) * gns.omega()));
    println!("mu(a) = {:.6}, <Omega, pi(a) Omega> = {:.6}", gns.mu(&a), via_omega);

    let fixed = fixed_algebra(&system.algebra, &system.alpha, 1e-9)?;
    let subsystem = validate_subsystem(&system, fixed, 1e-9)?;
    let ce = cond_expectation(&gns, &subsystem)?;
    let mirror = mirror_system(&gns, &ce)?;
    println!(
        "dim A' = {}, dim F~ = {}",
        mirror.a_prime().dim(),
        mirror.f_tilde().dim()
    );
    println!(
        "mirror residual {:.2e}",
        mirror.invariants(&gns, &ce).max(gns.is_tracial())
    );
    Ok(())
}
