//! With the trivial subsystem on an abelian system, relative weak mixing is
//! classical weak mixing of a measure-preserving permutation.

use proptest::prelude::*;

use relmix::cli::config::{
    matrix_to_data, AlgebraConfig, AutomorphismConfig, StateConfig, SubsystemConfig, SystemConfig,
};
use relmix::ergodic::is_relatively_weakly_mixing;
use relmix::numkernel::{c64, CMatrix, CVector};
use relmix::repgns::{build_gns, cond_expectation};

fn cycles(perm: &[usize]) -> Vec<usize> {
    // cycle label per point
    let mut label = vec![usize::MAX; perm.len()];
    for start in 0..perm.len() {
        let mut i = start;
        while label[i] == usize::MAX {
            label[i] = start;
            i = perm[i];
        }
    }
    label
}

/// `Σ_{n=1}^{L} |⟨f, Uⁿ g⟩_μ|²` over one period, for mean-zero indicators;
/// zero exactly when the averages of weak mixing vanish.
fn classical_weak_mixing(perm: &[usize], weights: &[f64]) -> bool {
    let d = perm.len();
    let period: usize = (1..=720)
        .find(|&l| (0..d).all(|i| (0..l).fold(i, |j, _| perm[j]) == i))
        .unwrap();
    let centered = |i: usize| -> Vec<f64> { (0..d).map(|k| f64::from(k == i) - weights[i]).collect() };
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            let (f, mut g) = (centered(i), centered(j));
            for _ in 0..period {
                g = (0..d).map(|k| g[perm[k]]).collect();
                let inner: f64 = (0..d).map(|k| weights[k] * f[k] * g[k]).sum();
                total += inner * inner;
            }
        }
    }
    total < 1e-20
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trivial_subsystem_matches_classical_weak_mixing(
        perm in (1usize..=5).prop_flat_map(|d| Just((0..d).collect::<Vec<_>>()).prop_shuffle()),
        raw in prop::collection::vec(0.5f64..1.5, 5),
    ) {
        let d = perm.len();
        let label = cycles(&perm);
        let mut weights: Vec<f64> = (0..d).map(|i| raw[label[i]]).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let density = CMatrix::from_diagonal(&CVector::from_iterator(d, weights.iter().map(|&w| c64(w, 0.0))));
        let config = SystemConfig {
            schema_version: 1,
            name: None,
            ambient_dim: d,
            algebra: AlgebraConfig::BlockDiagonal { sizes: vec![1; d] },
            state: StateConfig::Density { matrix: matrix_to_data(&density) },
            automorphism: AutomorphismConfig::BlockPermutation { sizes: None, perm: perm.clone() },
            subsystem: SubsystemConfig::Trivial,
        };
        let built = config.build(1e-9).unwrap();
        let gns = build_gns(&built.system).unwrap();
        let ce = cond_expectation(&gns, &built.subsystem).unwrap();
        let rwm = is_relatively_weakly_mixing(&gns, &ce, 1e-7, 64).unwrap();
        prop_assert_eq!(rwm.value, classical_weak_mixing(&perm, &weights));
        prop_assert_eq!(rwm.value, d == 1);
    }
}
