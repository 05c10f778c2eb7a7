//! Finite Cesàro averages of <x, U^n y> approaching the projection onto the
//! fixed space, against the spectral bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relmix::cli::random::haar_unitary;
use relmix::ergodic::{cesaro, cesaro_bound, CesaroMode};
use relmix::numkernel::{c64, unitary_spectrum, CMatrix, CVector, DEFAULT_CLUSTER_TOL};

fn main() -> relmix::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = haar_unitary(&mut rng, 4);
    let phases = [c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 1.0), c64(-0.6, 0.8)];
    let u = &v * CMatrix::from_diagonal(&CVector::from_row_slice(&phases)) * v.adjoint();
    let x = CVector::from_fn(4, |i, _| c64(1.0 + i as f64, 0.0));
    let y = CVector::from_fn(4, |i, _| c64(0.0, 1.0 - i as f64));

    let spectrum = unitary_spectrum(&u, DEFAULT_CLUSTER_TOL)?;
    for (z, r) in spectrum.eigenvalues().iter().zip(spectrum.ranks()) {
        println!("eigenvalue {:+.3}{:+.3}i, multiplicity {r}", z.re, z.im);
    }
    for n in [1, 4, 16, 64, 256, 1024] {
        let r = cesaro(&u, &x, &y, CesaroMode::Empirical(n))?;
        println!(
            "N = {n:>5}: |average - limit| = {:.3e}, bound {:.3e}",
            r.gap.unwrap_or(0.0),
            cesaro_bound(&spectrum, &x, &y, n)
        );
    }
    println!("limit = {:.6}", cesaro(&u, &x, &y, CesaroMode::Exact)?.exact);
    Ok(())
}
