//! The diagonal subalgebra of M₂ under Ad(diag(1, i)).

use relmix::numkernel::{c64, CMatrix};
use relmix::repgns::{build_gns, cond_expectation};
use relmix::vnalg::{diag, matrix_unit, validate_subsystem, AutomorphismKind, MatrixStarAlgebra, SystemSpec};

fn main() -> relmix::Result<()> {
    let unitary = diag(&[c64(1.0, 0.0), c64(0.0, 1.0)]);
    let trace = CMatrix::identity(2, 2) * c64(0.5, 0.0);
    let system = SystemSpec::new(
        MatrixStarAlgebra::full(2),
        &trace,
        &AutomorphismKind::Inner { unitary },
        1e-9,
    )?;
    let f = MatrixStarAlgebra::from_spanning(2, &[matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)], 1e-9)?;
    let subsystem = validate_subsystem(&system, f, 1e-9)?;
    let gns = build_gns(&system)?;
    let ce = cond_expectation(&gns, &subsystem)?;

    let a = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0), c64(4.0, 0.0)]);
    println!("a = {a:.3}");
    println!("D(a) = {:.3}", ce.apply(&gns, &a));
    println!("rank P = {}, dim ker D = {}", ce.h_f().rank(), ce.kernel_basis().len());

    let inv = ce.invariants(&gns);
    println!(
        "bimodule {:.1e}, PU - UP {:.1e}, D(a)Omega - P a Omega {:.1e}",
        inv.bimodule, inv.pu_up, inv.recovery
    );
    Ok(())
}
