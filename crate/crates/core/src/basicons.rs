//! The basic construction `Ā = ⟨π(A), P⟩` on the GNS space, the trace
//! `μ̄(aPb) = μ(ab)` on `span(APA)`, and its GNS data.
//!
//! Traces only.

use crate::ergodic::rwm_term;
use crate::error::{Error, Result};
use crate::numkernel::{
    hermitian_eigen, max_abs, orthonormalize, unitarity_residual, unvectorize, vectorize, CMatrix, CVector, Subspace,
    C64, DEFAULT_RANK_TOL, DEFAULT_RESIDUAL_TOL,
};
use crate::relprod::GRAM_NULL_TOL;
use crate::repgns::{CondExpectation, GnsRep};
use crate::report::PredicateReport;
use crate::vnalg::{generate_algebra, MatrixStarAlgebra};

#[derive(Clone, Debug)]
pub struct BasicConstruction {
    m: usize,
    abar: MatrixStarAlgebra,
    p: CMatrix,
    u: CMatrix,
    /// Orthonormal basis of `span{π(uᵢ) P π(uⱼ)}` in vectorized form.
    apa: Subspace,
    /// `μ̄(x) = functional · vec(x)` on `span(APA)`.
    functional: CMatrix,
    well_defined_residual: f64,
    residual_tol: f64,
}

/// Builds `Ā`, the spanning family `π(uᵢ)Pπ(uⱼ)` and `μ̄`, and checks that
/// `μ̄` does not depend on the representative.
pub fn build_basic_construction(gns: &GnsRep, ce: &CondExpectation) -> Result<BasicConstruction> {
    if !gns.is_tracial() {
        return Err(Error::NotTracial {
            operation: "basic construction",
        });
    }
    let m = gns.dim();
    let p = ce.p().clone();
    let mut gens: Vec<CMatrix> = gns.pi_basis().to_vec();
    gens.push(p.clone());
    let abar = generate_algebra(&gens, m)?;

    let m2 = m * m;
    let mut s = CMatrix::zeros(m2, m2);
    let mut nu = CMatrix::zeros(1, m2);
    let units = gns.units();
    for i in 0..m {
        let left = &gns.pi_basis()[i] * &p;
        for j in 0..m {
            let x = &left * &gns.pi_basis()[j];
            s.set_column(i * m + j, &vectorize(&x));
            nu[(0, i * m + j)] = gns.mu(&(&units[i] * &units[j]));
        }
    }

    let cols: Vec<CVector> = (0..m2).map(|k| s.column(k).into_owned()).collect();
    let apa = orthonormalize(m2, &cols, DEFAULT_RANK_TOL)?;
    let q = apa.basis_matrix();
    let c = q.adjoint() * &s;
    let g = &c * c.adjoint();
    let row = match g.clone().cholesky() {
        Some(ch) => ch.solve(&(&c * nu.adjoint())).adjoint(),
        None if apa.rank() == 0 => CMatrix::zeros(1, 0),
        None => return Err(Error::Numerical("range of aPb is ill conditioned".into())),
    };
    let functional = &row * q.adjoint();
    let well_defined_residual = max_abs(&(&row * &c - &nu)) / nu.norm().max(1.0);
    if well_defined_residual > DEFAULT_RESIDUAL_TOL {
        return Err(Error::Internal(format!(
            "mubar is not well defined: a vanishing combination of aPb has mu-sum {well_defined_residual:.3e}"
        )));
    }

    Ok(BasicConstruction {
        m,
        abar,
        p,
        u: gns.u().clone(),
        apa,
        functional,
        well_defined_residual,
        residual_tol: DEFAULT_RESIDUAL_TOL,
    })
}

impl BasicConstruction {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn abar(&self) -> &MatrixStarAlgebra {
        &self.abar
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    /// `span(APA)`, vectorized.
    pub fn apa_span(&self) -> &Subspace {
        &self.apa
    }

    pub fn apa_basis(&self) -> Vec<CMatrix> {
        self.apa
            .basis()
            .iter()
            .map(|v| unvectorize(v, self.m, self.m))
            .collect()
    }

    /// `dim Ā − dim span(APA)`.
    pub fn dimension_gap(&self) -> usize {
        self.abar.dim().saturating_sub(self.apa.rank())
    }

    pub fn well_defined_residual(&self) -> f64 {
        self.well_defined_residual
    }

    /// Distance of `x` from `span(APA)`, relative to `max(1, ‖x‖)`.
    pub fn apa_residual(&self, x: &CMatrix) -> f64 {
        let v = vectorize(x);
        self.apa.distance(&v) / v.norm().max(1.0)
    }

    pub fn mubar(&self, x: &CMatrix) -> Result<C64> {
        let residual = self.apa_residual(x);
        if residual > self.residual_tol {
            return Err(Error::NotInSpan { residual });
        }
        Ok((&self.functional * vectorize(x))[(0, 0)])
    }

    pub fn alphabar(&self, x: &CMatrix) -> CMatrix {
        &self.u * x * self.u.adjoint()
    }

    pub fn alphabar_power(&self, x: &CMatrix, n: i64) -> CMatrix {
        let step = if n >= 0 { self.u.clone() } else { self.u.adjoint() };
        let mut out = x.clone();
        for _ in 0..n.unsigned_abs() {
            out = &step * out * step.adjoint();
        }
        out
    }
}

/// `μ̄(b*Pb ᾱⁿ(aPa*))` against `λ(|D(bαⁿ(a))|²)`.
pub fn lemma_identity_check(
    bc: &BasicConstruction,
    gns: &GnsRep,
    ce: &CondExpectation,
    a: &CMatrix,
    b: &CMatrix,
    n: i64,
    tol: f64,
) -> Result<PredicateReport> {
    let pa = gns.pi(a);
    let pb = gns.pi(b);
    let left = pb.adjoint() * bc.p() * &pb;
    let right = bc.alphabar_power(&(&pa * bc.p() * pa.adjoint()), n);
    let lhs = bc.mubar(&(left * right))?;
    let rhs = rwm_term(gns, ce, a, b, n).value();
    let residual = (lhs - C64::from(rhs)).norm();
    Ok(PredicateReport::threshold(
        "lemma identity",
        format!(
            "n={n}, mubar side {:.6e}{:+.6e}i, weak-mixing term {rhs:.6e}",
            lhs.re, lhs.im
        ),
        residual,
        tol,
    ))
}

/// GNS space of `μ̄` on `span(APA)` with the implementing unitary of `ᾱ`.
#[derive(Clone, Debug)]
pub struct BarGns {
    m: usize,
    basis: Vec<CMatrix>,
    gram: CMatrix,
    gamma: CMatrix,
    gamma_pinv: CMatrix,
    ubar: CMatrix,
    unitarity: f64,
}

pub fn build_bar_gns(bc: &BasicConstruction) -> Result<BarGns> {
    let m = bc.dim();
    let basis = bc.apa_basis();
    let r = basis.len();
    let mt = unvectorize(&bc.functional.transpose().column(0).into_owned(), m, m).transpose();
    let x = crate::numkernel::from_columns(m * m, bc.apa.basis());
    let mut right = CMatrix::zeros(m * m, r);
    for (l, xl) in basis.iter().enumerate() {
        right.set_column(l, &vectorize(&(xl * &mt)));
    }
    let raw = x.adjoint() * right;
    let herm_res = max_abs(&(&raw - raw.adjoint()));
    let gram = (&raw + raw.adjoint()) * C64::from(0.5);
    let (vals, vecs) = hermitian_eigen(&gram);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let scale = top.max(1.0);
    if herm_res > DEFAULT_RESIDUAL_TOL * scale || vals.first().is_some_and(|&v| v < -DEFAULT_RESIDUAL_TOL * scale) {
        return Err(Error::Internal(format!(
            "Gram of mubar is not positive: min eigenvalue {:.3e}, hermiticity {herm_res:.3e}",
            vals.first().copied().unwrap_or(0.0)
        )));
    }
    let keep: Vec<usize> = (0..r).filter(|&k| vals[k] > GRAM_NULL_TOL * top).collect();
    let dim = keep.len();
    let mut gamma = CMatrix::zeros(dim, r);
    let mut gamma_pinv = CMatrix::zeros(r, dim);
    for (row, &k) in keep.iter().enumerate() {
        let s = vals[k].sqrt();
        gamma.set_row(row, &(vecs.column(k).adjoint() * C64::from(s)));
        gamma_pinv.set_column(row, &(vecs.column(k) * C64::from(1.0 / s)));
    }

    let mut t = CMatrix::zeros(r, r);
    for (l, xl) in basis.iter().enumerate() {
        let moved = vectorize(&bc.alphabar(xl));
        t.set_column(l, &(x.adjoint() * moved));
    }
    let ubar = &gamma * t * &gamma_pinv;
    let unitarity = unitarity_residual(&ubar);
    if unitarity > 1e-6 * (dim.max(1) as f64).sqrt() {
        return Err(Error::Internal(format!(
            "lifted unitary fails unitarity by {unitarity:.3e}"
        )));
    }
    Ok(BarGns {
        m,
        basis,
        gram,
        gamma,
        gamma_pinv,
        ubar,
        unitarity,
    })
}

impl BarGns {
    /// `dim H̄`.
    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    /// Orthonormal (Hilbert–Schmidt) basis of `span(APA)` the Gram is taken over.
    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// `G_kl = μ̄(X_k* X_l)`.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn ubar(&self) -> &CMatrix {
        &self.ubar
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.unitarity
    }

    fn coords(&self, x: &CMatrix) -> CVector {
        CVector::from_iterator(
            self.basis.len(),
            self.basis.iter().map(|b| crate::numkernel::hs_inner(b, x)),
        )
    }

    /// `x̂` in an orthonormal basis of `H̄`.
    pub fn hat(&self, x: &CMatrix) -> CVector {
        &self.gamma * self.coords(x)
    }

    /// Element of `span(APA)` with the given class.
    pub fn element(&self, v: &CVector) -> CMatrix {
        let c = &self.gamma_pinv * v;
        let mut out = CMatrix::zeros(self.m, self.m);
        for (k, b) in self.basis.iter().enumerate() {
            out += b * c[k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{c64, trace};
    use crate::repgns::{build_gns, cond_expectation};
    use crate::vnalg::{diag, matrix_unit, validate_subsystem, AutomorphismKind, SystemSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn r(x: f64) -> C64 {
        c64(x, 0.0)
    }

    fn build(
        algebra: MatrixStarAlgebra,
        kind: AutomorphismKind,
        f: impl FnOnce(&SystemSpec) -> MatrixStarAlgebra,
    ) -> (GnsRep, CondExpectation) {
        let d = algebra.ambient_dim();
        let sys = SystemSpec::new(algebra, &(CMatrix::identity(d, d) * r(1.0 / d as f64)), &kind, TOL).unwrap();
        let sub = validate_subsystem(&sys, f(&sys), TOL).unwrap();
        let gns = build_gns(&sys).unwrap();
        let ce = cond_expectation(&gns, &sub).unwrap();
        (gns, ce)
    }

    fn rot() -> AutomorphismKind {
        AutomorphismKind::Inner {
            unitary: diag(&[r(1.0), c64(0.0, 1.0)]),
        }
    }

    fn m2(f: &str) -> (GnsRep, CondExpectation) {
        let f = f.to_string();
        build(MatrixStarAlgebra::full(2), rot(), move |s| match f.as_str() {
            "full" => s.algebra.clone(),
            "diag" => MatrixStarAlgebra::block_diagonal(&[1, 1]),
            _ => MatrixStarAlgebra::scalars(2),
        })
    }

    fn random_element(rng: &mut ChaCha8Rng, gns: &GnsRep) -> CMatrix {
        let m = gns.dim();
        gns.element(&CVector::from_fn(m, |_, _| {
            c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        }))
    }

    // closure of a family under products, by repeated Gram-Schmidt
    fn oracle_algebra_dim(d: usize, gens: &[CMatrix]) -> usize {
        let mut basis: Vec<CVector> = Vec::new();
        let add = |basis: &mut Vec<CVector>, x: &CMatrix| -> bool {
            let mut v = vectorize(x);
            for b in basis.iter() {
                let c = b.dotc(&v);
                v -= b * c;
            }
            let n = v.norm();
            if n > 1e-8 {
                basis.push(v / C64::from(n));
                true
            } else {
                false
            }
        };
        add(&mut basis, &CMatrix::identity(d, d));
        for g in gens {
            add(&mut basis, g);
            add(&mut basis, &g.adjoint());
        }
        loop {
            let current: Vec<CMatrix> = basis.iter().map(|v| unvectorize(v, d, d)).collect();
            let mut grew = false;
            for x in &current {
                for y in &current {
                    grew |= add(&mut basis, &(x * y));
                }
            }
            if !grew {
                return basis.len();
            }
        }
    }

    #[test]
    fn full_subalgebra_reduces_to_mu() {
        let (gns, ce) = m2("full");
        let bc = build_basic_construction(&gns, &ce).unwrap();
        assert!(max_abs(&(bc.p() - CMatrix::identity(4, 4))) < 1e-12);
        assert_eq!(bc.abar().dim(), 4);
        assert_eq!(bc.dimension_gap(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_element(&mut rng, &gns);
        assert!((bc.mubar(&gns.pi(&a)).unwrap() - gns.mu(&a)).norm() < 1e-10);
        let bar = build_bar_gns(&bc).unwrap();
        assert_eq!(bar.dim(), gns.dim());
        // orthonormal units stay orthonormal
        for (k, x) in gns.units().iter().enumerate() {
            for (l, y) in gns.units().iter().enumerate() {
                let ip = bar.hat(&gns.pi(x)).dotc(&bar.hat(&gns.pi(y)));
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!((ip - r(expected)).norm() < 1e-10);
            }
        }
        // Ū agrees with U
        let a_hat = bar.hat(&gns.pi(&a));
        let moved = bar.hat(&gns.pi(&gns.system().alpha.apply(&gns.system().algebra, &a)));
        assert!((bar.ubar() * a_hat - moved).norm() < 1e-10);
    }

    #[test]
    fn scalar_subalgebra() {
        let (gns, ce) = m2("scalar");
        let bc = build_basic_construction(&gns, &ce).unwrap();
        let p = bc.p();
        assert!((trace(p) - r(1.0)).norm() < 1e-12);
        assert!((bc.mubar(p).unwrap() - r(1.0)).norm() < 1e-12);
        let mut gens: Vec<CMatrix> = gns.pi_basis().to_vec();
        gens.push(p.clone());
        assert_eq!(bc.abar().dim(), oracle_algebra_dim(4, &gens));
        assert_eq!(bc.abar().dim(), 16);

        let bar = build_bar_gns(&bc).unwrap();
        // Gram rank by a dense eigensolve over the raw spanning family
        let mut family = Vec::new();
        for a in gns.pi_basis() {
            for b in gns.pi_basis() {
                family.push(a * p * b);
            }
        }
        let n = family.len();
        let g = CMatrix::from_fn(n, n, |k, l| bc.mubar(&(family[k].adjoint() * &family[l])).unwrap());
        let eig = (&g + g.adjoint()).map(|z| z * 0.5).symmetric_eigen();
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let rank = eig.eigenvalues.iter().filter(|&&v| v > 1e-9 * top).count();
        assert_eq!(bar.dim(), rank);
    }

    #[test]
    fn diagonal_subalgebra_dimension() {
        let (gns, ce) = m2("diag");
        let bc = build_basic_construction(&gns, &ce).unwrap();
        let mut gens: Vec<CMatrix> = gns.pi_basis().to_vec();
        gens.push(bc.p().clone());
        assert_eq!(bc.abar().dim(), oracle_algebra_dim(4, &gens));
        let bar = build_bar_gns(&bc).unwrap();
        let p_hat = bar.hat(bc.p());
        assert!((bar.ubar() * &p_hat - p_hat).norm() < 1e-10);
        assert!(bar.unitarity_residual() < 1e-9);
    }

    #[test]
    fn mubar_on_products() {
        let (gns, ce) = m2("diag");
        let bc = build_basic_construction(&gns, &ce).unwrap();
        let p = bc.p();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_element(&mut rng, &gns);
        let b = random_element(&mut rng, &gns);
        let c = random_element(&mut rng, &gns);
        let d = random_element(&mut rng, &gns);
        let x = gns.pi(&a) * p * gns.pi(&b);
        assert!((bc.mubar(&x).unwrap() - gns.mu(&(&a * &b))).norm() < 1e-10);
        assert_eq!(bc.mubar(&CMatrix::zeros(4, 4)).unwrap(), r(0.0));
        let y = &x + gns.pi(&c) * p * gns.pi(&d);
        let expected = gns.mu(&(&a * &b)) + gns.mu(&(&c * &d));
        assert!((bc.mubar(&y).unwrap() - expected).norm() < 1e-10);
        // F elements move across P
        let f = diag(&[c64(0.3, 0.1), c64(-1.2, 0.5)]);
        let left = gns.pi(&(&a * &f)) * p * gns.pi(&b);
        let right = gns.pi(&a) * p * gns.pi(&(&f * &b));
        assert!(max_abs(&(&left - &right)) < 1e-10);
        assert!((bc.mubar(&left).unwrap() - gns.mu(&(&a * &f * &b))).norm() < 1e-10);
    }

    #[test]
    fn mubar_rejects_outside_span() {
        let (gns, ce) = m2("diag");
        let bc = build_basic_construction(&gns, &ce).unwrap();
        assert!(bc.abar().dim() < 16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = CMatrix::from_fn(4, 4, |_, _| c64(rng.random::<f64>(), rng.random::<f64>()));
        assert!(matches!(bc.mubar(&x), Err(Error::NotInSpan { .. })));
    }

    #[test]
    fn lemma_examples() {
        let (gns, ce) = m2("diag");
        let bc = build_basic_construction(&gns, &ce).unwrap();
        let one = CMatrix::identity(2, 2);
        let rep = lemma_identity_check(&bc, &gns, &ce, &one, &one, 0, 1e-8).unwrap();
        assert!(rep.value);
        let lhs = bc.mubar(&(bc.p() * bc.p())).unwrap();
        assert!((lhs - r(1.0)).norm() < 1e-12);
        let rep = lemma_identity_check(&bc, &gns, &ce, &matrix_unit(2, 0, 1), &matrix_unit(2, 1, 0), 1, 1e-8).unwrap();
        assert!(rep.value, "{rep:?}");
        let term = rwm_term(&gns, &ce, &matrix_unit(2, 0, 1), &matrix_unit(2, 1, 0), 1).value();
        assert!((term - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_trace() {
        let sys = SystemSpec::new(MatrixStarAlgebra::full(2), &diag(&[r(0.6), r(0.4)]), &rot(), TOL).unwrap();
        let sub = validate_subsystem(&sys, MatrixStarAlgebra::block_diagonal(&[1, 1]), TOL).unwrap();
        let gns = build_gns(&sys).unwrap();
        let ce = cond_expectation(&gns, &sub).unwrap();
        assert!(matches!(
            build_basic_construction(&gns, &ce),
            Err(Error::NotTracial { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

        fn apa_element(rng: &mut ChaCha8Rng, gns: &GnsRep, p: &CMatrix) -> CMatrix {
            let mut x = CMatrix::zeros(gns.dim(), gns.dim());
            for _ in 0..2 {
                x += gns.pi(&random_element(rng, gns)) * p * gns.pi(&random_element(rng, gns));
            }
            x
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn mubar_trace_invariance_positivity(seed in any::<u64>(), which in 0usize..3) {
                let (gns, ce) = m2(["full", "diag", "scalar"][which]);
                let bc = build_basic_construction(&gns, &ce).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = apa_element(&mut rng, &gns, bc.p());
                let y = apa_element(&mut rng, &gns, bc.p());
                let xy = bc.mubar(&(&x * &y)).unwrap();
                let yx = bc.mubar(&(&y * &x)).unwrap();
                prop_assert!((xy - yx).norm() < 1e-9);
                let moved = bc.mubar(&bc.alphabar(&x)).unwrap();
                prop_assert!((moved - bc.mubar(&x).unwrap()).norm() < 1e-9);
                let pos = bc.mubar(&(x.adjoint() * &x)).unwrap();
                prop_assert!(pos.re > -1e-10 && pos.im.abs() < 1e-9);
            }

            #[test]
            fn lemma_identity_random(seed in any::<u64>(), n in 0i64..=10, which in 0usize..3) {
                let (gns, ce) = m2(["full", "diag", "scalar"][which]);
                let bc = build_basic_construction(&gns, &ce).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_element(&mut rng, &gns);
                let b = random_element(&mut rng, &gns);
                let rep = lemma_identity_check(&bc, &gns, &ce, &a, &b, n, 1e-8).unwrap();
                prop_assert!(rep.value, "{:?}", rep);
            }
        }
    }
}
