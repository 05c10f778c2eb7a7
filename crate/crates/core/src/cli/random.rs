//! Seeded random tracial systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{
    matrix_to_data, AlgebraConfig, AutomorphismConfig, StateConfig, SubsystemConfig, SystemConfig, SCHEMA_VERSION,
};
use crate::error::Result;
use crate::numkernel::{c64, CMatrix};
use crate::vnalg::DEFAULT_ALGEBRA_TOL;

pub const DEFAULT_MAX_DIM: usize = 4;

/// Haar unitary: QR of a complex Gaussian matrix with the phases of `R`
/// moved into `Q`.
pub fn haar_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        c64(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ) * c64(0.5f64.sqrt(), 0.0)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / c64(d.norm(), 0.0)
        } else {
            c64(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let d: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(d, d);
    let mut at = 0;
    for b in blocks {
        let n = b.nrows();
        out.view_mut((at, at), (n, n)).copy_from(b);
        at += n;
    }
    out
}

fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    (&g + g.adjoint()) * c64(0.5, 0.0)
}

/// Deterministic random tracial system of dimension at most `max_dim`.
///
/// The algebra is a direct sum of full matrix blocks, the state a weighted
/// trace, the automorphism `Ad(u)` for a block-diagonal Haar unitary `u`,
/// possibly followed by a swap of two equal blocks. The subsystem is one
/// of `ℂ1`, `A`, `A^α` or the algebra generated by the orbit of a random
/// Hermitian element.
pub fn random_system(seed: u64, max_dim: usize) -> Result<SystemConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(max_dim.clamp(1, 2)..=max_dim.max(1));
    let mut sizes = Vec::new();
    let mut left = d;
    while left > 0 {
        let s = rng.random_range(1..=left);
        sizes.push(s);
        left -= s;
    }
    let k = sizes.len();

    let unitaries: Vec<CMatrix> = sizes.iter().map(|&n| haar_unitary(&mut rng, n)).collect();
    let u = block_diag(&unitaries);

    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .filter(|&(i, j)| sizes[i] == sizes[j])
        .collect();
    let swap = if !pairs.is_empty() && rng.random_bool(0.5) {
        Some(pairs[rng.random_range(0..pairs.len())])
    } else {
        None
    };

    let mut weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
    let uniform = rng.random_bool(0.5);
    if let Some((i, j)) = swap {
        weights[j] = weights[i];
    }
    let state = if uniform {
        StateConfig::NormalizedTrace
    } else {
        let total: f64 = weights.iter().zip(&sizes).map(|(w, &n)| w * n as f64).sum();
        let blocks: Vec<CMatrix> = weights
            .iter()
            .zip(&sizes)
            .map(|(w, &n)| CMatrix::identity(n, n) * c64(w / total, 0.0))
            .collect();
        StateConfig::Density {
            matrix: matrix_to_data(&block_diag(&blocks)),
        }
    };

    let inner = AutomorphismConfig::Inner {
        unitary: matrix_to_data(&u),
    };
    let automorphism = match swap {
        Some((i, j)) => {
            let mut perm: Vec<usize> = (0..k).collect();
            perm.swap(i, j);
            AutomorphismConfig::Compose {
                automorphisms: vec![inner, AutomorphismConfig::BlockPermutation { sizes: None, perm }],
            }
        }
        None => inner,
    };

    let mut config = SystemConfig {
        schema_version: SCHEMA_VERSION,
        name: Some(format!("random-{seed}")),
        ambient_dim: d,
        algebra: AlgebraConfig::BlockDiagonal { sizes: sizes.clone() },
        state,
        automorphism,
        subsystem: SubsystemConfig::Trivial,
    };

    config.subsystem = match rng.random_range(0..4) {
        0 => SubsystemConfig::Trivial,
        1 => SubsystemConfig::Full,
        2 => SubsystemConfig::FixedAlgebra,
        _ => {
            let system = config.build_system(DEFAULT_ALGEBRA_TOL)?;
            let h = block_diag(&sizes.iter().map(|&n| random_hermitian(&mut rng, n)).collect::<Vec<_>>());
            let m = system.algebra.dim();
            let mut orbit = Vec::with_capacity(m);
            let mut x = h;
            for _ in 0..m {
                let next = system.alpha.apply(&system.algebra, &x);
                orbit.push(matrix_to_data(&x));
                x = next;
            }
            SubsystemConfig::Generated { matrices: orbit }
        }
    };
    Ok(config)
}

/// `count` systems with seeds `seed, seed + 1, ...`.
pub fn random_batch(seed: u64, count: usize, max_dim: usize) -> Result<Vec<SystemConfig>> {
    (0..count as u64)
        .map(|i| random_system(seed.wrapping_add(i), max_dim))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::unitarity_residual;

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            assert!(unitarity_residual(&haar_unitary(&mut rng, n)) < 1e-12);
        }
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        assert_eq!(random_system(3, 4).unwrap(), random_system(3, 4).unwrap());
        let a = serde_json::to_string(&random_system(3, 4).unwrap()).unwrap();
        let b = serde_json::to_string(&random_system(4, 4).unwrap()).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn random_systems_validate_as_traces() {
        for seed in 0..25 {
            let c = random_system(seed, 4).unwrap();
            assert!(c.ambient_dim <= 4);
            let built = c.build(1e-9).unwrap();
            assert!(built.system.state.is_trace(), "seed {seed}");
        }
    }
}
