//! Cesàro averages, relative weak mixing and relative ergodicity, and the
//! characterizations tying them to the relatively independent joining.
//!
//! Limits are evaluated through spectral projectors: for a unitary `V`,
//! `(1/N) Σ_{n≤N} ⟨x, Vⁿ y⟩ → ⟨x, Q y⟩` with `Q` the eigenvalue-1
//! projector, and `(1/N) Σ ‖B Vⁿ x‖² → Σ_θ ‖B E_θ x‖²` since cross terms
//! between distinct eigenvalues average out.

use crate::error::{Error, Result};
use crate::numkernel::{
    c64, max_abs, spectral_norm, unitary_spectrum, CMatrix, CVector, SpectralDecomposition, C64, DEFAULT_CLUSTER_TOL,
};
use crate::relprod::{product_relatively_ergodic, ProductGns};
use crate::repgns::{CondExpectation, GnsRep};
use crate::report::{PredicateReport, WitnessSet};
use crate::vnalg::fixed_algebra;

/// Default tolerance for predicate decisions.
pub const DEFAULT_PREDICATE_TOL: f64 = 1e-7;
/// Default horizon of the empirical cross-checks.
pub const DEFAULT_HORIZON: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CesaroMode {
    Exact,
    Empirical(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct CesaroResult {
    pub exact: C64,
    pub empirical: Option<C64>,
    pub horizon: Option<usize>,
    pub gap: Option<f64>,
}

/// `lim (1/N) Σ_{n=1}^N ⟨x, Uⁿ y⟩`, optionally with the finite average.
pub fn cesaro(u: &CMatrix, x: &CVector, y: &CVector, mode: CesaroMode) -> Result<CesaroResult> {
    let n = u.nrows();
    if x.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if x.len() != n { x.len() } else { y.len() },
        });
    }
    let spectrum = unitary_spectrum(u, DEFAULT_CLUSTER_TOL)?;
    let exact = x.dotc(&(spectrum.fixed_projector() * y));
    match mode {
        CesaroMode::Exact => Ok(CesaroResult {
            exact,
            empirical: None,
            horizon: None,
            gap: None,
        }),
        CesaroMode::Empirical(horizon) => {
            let empirical = empirical_average(u, x, y, horizon);
            Ok(CesaroResult {
                exact,
                empirical: Some(empirical),
                horizon: Some(horizon),
                gap: Some((exact - empirical).norm()),
            })
        }
    }
}

fn empirical_average(u: &CMatrix, x: &CVector, y: &CVector, horizon: usize) -> C64 {
    let mut v = y.clone();
    let mut sum = c64(0.0, 0.0);
    for _ in 0..horizon {
        v = u * v;
        sum += x.dotc(&v);
    }
    sum / c64(horizon.max(1) as f64, 0.0)
}

/// Bound on `|empirical(N) − exact|`:
/// `(1/N) Σ_{θ ≠ 1} ‖x‖‖y‖·2/|1 − θ|`, plus the drift allowed by the
/// spread of eigenvalues inside each cluster and by rounding in the `N`
/// matrix-vector products.
pub fn cesaro_bound(spectrum: &SpectralDecomposition, x: &CVector, y: &CVector, horizon: usize) -> f64 {
    let n = horizon.max(1) as f64;
    let xy = x.norm() * y.norm();
    let roundoff = 8.0 * f64::EPSILON * spectrum.dim() as f64 * (n + 1.0) * xy;
    let fixed = spectrum.fixed_cluster();
    let mut c = 0.0;
    for (k, theta) in spectrum.eigenvalues().iter().enumerate() {
        if Some(k) != fixed {
            c += xy * 2.0 / (c64(1.0, 0.0) - theta).norm();
        }
    }
    c / n + (n + 1.0) / 2.0 * spectrum.max_spread() * xy + roundoff
}

/// One term `λ(|D(b αⁿ(a))|²)`, evaluated in the Hilbert space and on the
/// algebra side.
#[derive(Clone, Copy, Debug)]
pub struct RwmTerm {
    /// `‖P π(b) Uⁿ â‖²`.
    pub hilbert: f64,
    /// `λ(D(c)* D(c))` with `c = b αⁿ(a)`.
    pub algebraic: f64,
}

impl RwmTerm {
    pub fn value(&self) -> f64 {
        self.hilbert
    }

    pub fn discrepancy(&self) -> f64 {
        (self.hilbert - self.algebraic).abs()
    }
}

pub fn rwm_term(gns: &GnsRep, ce: &CondExpectation, a: &CMatrix, b: &CMatrix, n: i64) -> RwmTerm {
    let hilbert = (ce.p() * gns.pi(b) * gns.u_power(n) * gns.hat(a)).norm_squared();
    let sys = gns.system();
    let c = b * sys.alpha.apply_power(&sys.algebra, a, n);
    let dc = ce.apply(gns, &c);
    let algebraic = gns.mu(&(dc.adjoint() * &dc)).re;
    RwmTerm { hilbert, algebraic }
}

fn spectrum_of(gns: &GnsRep) -> Result<SpectralDecomposition> {
    unitary_spectrum(gns.u(), DEFAULT_CLUSTER_TOL)
}

/// Relative weak mixing, decided exactly: for every eigenvalue cluster θ of
/// `U`, every basis element `b` of `A` and every basis vector `â` of
/// `ker D`, `‖P π(b) E_θ â‖ ≤ tol`.
///
/// Each `(a, b)` pair is cross-checked against the finite average at
/// `horizon`, which must stay within the spectral bound for the gap.
pub fn is_relatively_weakly_mixing(
    gns: &GnsRep,
    ce: &CondExpectation,
    tol: f64,
    horizon: usize,
) -> Result<PredicateReport> {
    let spectrum = spectrum_of(gns)?;
    let p = ce.p();
    let kernel = ce.kernel_basis();
    let thetas = spectrum.eigenvalues();
    let mut set = WitnessSet::new(tol);
    let n = horizon.max(1) as f64;
    let spread = spectrum.max_spread();
    let mut worst_excess: f64 = 0.0;

    let projected: Vec<CMatrix> = gns.pi_basis().iter().map(|x| p * x).collect();
    for (ia, a) in kernel.iter().enumerate() {
        let parts: Vec<CVector> = spectrum.projectors().iter().map(|e| e * a).collect();
        // Uⁿ a for n = 1..=horizon
        let mut orbit = Vec::with_capacity(horizon);
        let mut v = a.clone();
        for _ in 0..horizon {
            v = gns.u() * v;
            orbit.push(v.clone());
        }
        for (ib, pb) in projected.iter().enumerate() {
            let vs: Vec<CVector> = parts.iter().map(|x| pb * x).collect();
            let mut exact = 0.0;
            for (k, vk) in vs.iter().enumerate() {
                let r = vk.norm();
                exact += r * r;
                set.record(|| format!("theta={}, a=ker[{ia}], b=u[{ib}]", fmt_c(thetas[k])), r);
            }
            if horizon == 0 {
                continue;
            }
            let empirical: f64 = orbit.iter().map(|x| (pb * x).norm_squared()).sum::<f64>() / n;
            let mut bound = 0.0;
            for (k, vk) in vs.iter().enumerate() {
                for (l, vl) in vs.iter().enumerate() {
                    if k != l {
                        let z = thetas[k].conj() * thetas[l];
                        bound += vk.dotc(vl).norm() * 2.0 / (c64(1.0, 0.0) - z).norm();
                    }
                }
            }
            let bnorm = spectral_norm(pb);
            bound =
                bound / n + bnorm * bnorm * ((n + 1.0) * spread + (n + 1.0) * (2.0 * n + 1.0) / 6.0 * spread * spread);
            let excess = (empirical - exact).abs() - bound;
            worst_excess = worst_excess.max(excess);
            if excess > 10.0 * tol {
                return Err(Error::Internal(format!(
                    "finite average at N={horizon} misses the spectral limit for a=ker[{ia}], b=u[{ib}]: \
                     |{empirical:.6e} - {exact:.6e}| exceeds bound {bound:.3e}"
                )));
            }
        }
    }
    if kernel.is_empty() {
        set.record(|| "ker D = {0}".into(), 0.0);
    }
    let mut report = set.into_report("relatively weakly mixing");
    if !gns.is_tracial() {
        report = report.with_note("definition-level check only (state is not a trace)");
    } else if horizon > 0 {
        report = report.with_note(format!("finite averages at N={horizon} within the spectral bound"));
    }
    Ok(report)
}

/// Both descriptions of relative ergodicity: `H^U ⊆ H_F` and `A^α ⊆ F`.
pub fn relative_ergodicity_criteria(
    gns: &GnsRep,
    ce: &CondExpectation,
    tol: f64,
) -> Result<(PredicateReport, PredicateReport)> {
    let spectrum = spectrum_of(gns)?;
    let fixed = spectrum.fixed_space();
    let p = ce.p();
    let mut hilbert = WitnessSet::new(tol);
    for (k, v) in fixed.basis().iter().enumerate() {
        hilbert.record(|| format!("fixed vector {k} of U"), (v - p * v).norm());
    }
    let sys = gns.system();
    let fixed_alg = fixed_algebra(&sys.algebra, &sys.alpha, 1e-9)?;
    let f = ce.subsystem().algebra();
    let mut algebraic = WitnessSet::new(tol);
    for (k, x) in fixed_alg.basis().iter().enumerate() {
        algebraic.record(|| format!("fixed element {k} of alpha"), f.residual(x));
    }
    Ok((
        hilbert.into_report("fixed space of U inside H_F").with_note(format!(
            "dim H^U = {}, dim H_F = {}",
            fixed.rank(),
            ce.h_f().rank()
        )),
        algebraic.into_report("fixed algebra inside F").with_note(format!(
            "dim A^alpha = {}, dim F = {}",
            fixed_alg.dim(),
            f.dim()
        )),
    ))
}

/// Relative ergodicity of the system, with the two criteria required to
/// agree.
pub fn is_system_relatively_ergodic(gns: &GnsRep, ce: &CondExpectation, tol: f64) -> Result<PredicateReport> {
    let (hilbert, algebraic) = relative_ergodicity_criteria(gns, ce, tol)?;
    if hilbert.value != algebraic.value {
        return Err(Error::Internal(format!(
            "H^U in H_F is {} but A^alpha in F is {}",
            hilbert.value, algebraic.value
        )));
    }
    let mut report = PredicateReport::new("relatively ergodic", hilbert.value, tol);
    report.witnesses = hilbert.witnesses;
    report.witnesses.extend(algebraic.witnesses);
    Ok(report.with_note("fixed space of U and fixed algebra agree"))
}

fn fmt_c(z: C64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

fn biconditional(name: &str, tol: f64, lhs_name: &str, lhs: &WitnessSet, rhs_name: &str, rhs: bool) -> PredicateReport {
    let lhs_value = !lhs.violated();
    let value = lhs_value == rhs;
    let mut report = PredicateReport::new(name, value, tol)
        .with_witness(format!("{lhs_name}: max residual"), lhs.max())
        .with_note(format!("{lhs_name} = {lhs_value}, {rhs_name} = {rhs}"));
    if !value {
        report = report.with_witness(
            format!("biconditional mismatch: {lhs_name} = {lhs_value}, {rhs_name} = {rhs}"),
            1.0,
        );
    }
    report
}

/// The five characterizations, each reported as a biconditional that must
/// hold on every system.
///
/// 1. centered form `λ(|D(bαⁿa) − D(b)D(αⁿa)|²)` ⟺ relative weak mixing;
/// 2. `a`-only form `λ(|D(a*αⁿa)|²)` over `ker D` ⟺ relative weak mixing
///    (traces only);
/// 3. `lim ω(tτⁿ(s)) = lim ω(E(t)τⁿ(E(s)))` ⟺ product relative ergodicity;
/// 4. `lim λ(|D(bαⁿa)|²) = lim λ(|D(b)D(αⁿa)|²)` ⟺ product relative
///    ergodicity (traces only);
/// 5. `lim μ(bαⁿa) = lim λ(D(b)αⁿ(D(a)))` ⟺ relative ergodicity.
pub fn check_characterizations(
    gns: &GnsRep,
    ce: &CondExpectation,
    pg: &ProductGns,
    tol: f64,
) -> Result<Vec<PredicateReport>> {
    let spectrum = spectrum_of(gns)?;
    let rwm = is_relatively_weakly_mixing(gns, ce, tol, 0)?.value;
    let product = product_relatively_ergodic(pg, tol)?.value;
    let system = is_system_relatively_ergodic(gns, ce, tol)?.value;
    let m = gns.dim();
    let p = ce.p();
    let tracial = gns.is_tracial();
    let thetas = spectrum.eigenvalues();
    let mut reports = Vec::with_capacity(5);

    // (i)
    let mut centered = WitnessSet::new(tol);
    let d_of_basis: Vec<CMatrix> = (0..m).map(|b| gns.pi_coords(&p.column(b).into_owned())).collect();
    for (k, e) in spectrum.projectors().iter().enumerate() {
        for (b, pib) in gns.pi_basis().iter().enumerate() {
            let x = p * pib * e - &d_of_basis[b] * p * e;
            for a in 0..m {
                centered.record(
                    || format!("theta={}, a=u[{a}], b=u[{b}]", fmt_c(thetas[k])),
                    x.column(a).norm(),
                );
            }
        }
    }
    reports.push(biconditional(
        "characterization (i): centered form",
        tol,
        "centered limits vanish",
        &centered,
        "relatively weakly mixing",
        rwm,
    ));

    // (ii)
    if tracial {
        let kernel = ce.kernel_basis();
        let mut a_only = WitnessSet::new(tol);
        for (k, e) in spectrum.projectors().iter().enumerate() {
            for (ix, x) in kernel.iter().enumerate() {
                let px = p * gns.pi_coords(x).adjoint();
                for (iy, y) in kernel.iter().enumerate() {
                    a_only.record(
                        || format!("theta={}, x=ker[{ix}], y=ker[{iy}]", fmt_c(thetas[k])),
                        (&px * (e * y)).norm(),
                    );
                }
            }
        }
        if kernel.is_empty() {
            a_only.record(|| "ker D = {0}".into(), 0.0);
        }
        reports.push(biconditional(
            "characterization (ii): a-only form",
            tol,
            "a-only limits vanish",
            &a_only,
            "relatively weakly mixing",
            rwm,
        ));
    } else {
        reports.push(
            PredicateReport::new("characterization (ii): a-only form", true, tol)
                .with_note("skipped: requires a tracial state"),
        );
    }

    // (iii)
    let w_spectrum = unitary_spectrum(pg.w(), DEFAULT_CLUSTER_TOL)?;
    let q = w_spectrum.fixed_projector();
    let gamma = pg.gamma();
    let gamma_e = gamma * pg.e_coeffs();
    let lhs = gamma.adjoint() * &q * gamma;
    let rhs = gamma_e.adjoint() * &q * &gamma_e;
    let mut tensor = WitnessSet::new(tol);
    tensor.record(
        || "max |lim w(t tau^n s) - lim w(E(t) tau^n E(s))| over spanning pairs".into(),
        max_abs(&(lhs - rhs)),
    );
    reports.push(biconditional(
        "characterization (iii): joining limits",
        tol,
        "joining limits agree",
        &tensor,
        "product relatively ergodic",
        product,
    ));

    // (iv)
    if tracial {
        let m2 = m * m;
        let mut t_left = CMatrix::zeros(m2, m2);
        let mut t_right = CMatrix::zeros(m2, m2);
        for e in spectrum.projectors() {
            let mut v_left = CMatrix::zeros(m, m2);
            let mut v_right = CMatrix::zeros(m, m2);
            for (b, (pi_b, d_b)) in gns.pi_basis().iter().zip(&d_of_basis).enumerate() {
                let l = p * pi_b * e;
                let r = d_b * p * e;
                for a in 0..m {
                    v_left.set_column(a * m + b, &l.column(a));
                    v_right.set_column(a * m + b, &r.column(a));
                }
            }
            t_left += v_left.adjoint() * v_left;
            t_right += v_right.adjoint() * v_right;
        }
        let mut limits = WitnessSet::new(tol);
        limits.record(
            || "max entry of the difference of the limit forms over a (x) b".into(),
            max_abs(&(t_left - t_right)),
        );
        reports.push(biconditional(
            "characterization (iv): conditional limits",
            tol,
            "conditional limits agree",
            &limits,
            "product relatively ergodic",
            product,
        ));
    } else {
        reports.push(
            PredicateReport::new("characterization (iv): conditional limits", true, tol)
                .with_note("skipped: requires a tracial state"),
        );
    }

    // (v)
    let qu = spectrum.fixed_projector();
    let s = gns.s_matrix();
    let diff = s.adjoint() * (&qu - p * &qu * p);
    let mut sys_limits = WitnessSet::new(tol);
    sys_limits.record(
        || "max |lim mu(b alpha^n a) - lim lambda(D(b) alpha^n D(a))|".into(),
        max_abs(&diff),
    );
    reports.push(biconditional(
        "characterization (v): system limits",
        tol,
        "system limits agree",
        &sys_limits,
        "relatively ergodic",
        system,
    ));
    Ok(reports)
}

/// Outcome of the main theorem check.
#[derive(Clone, Debug)]
pub struct TheoremOutcome {
    pub relatively_weakly_mixing: bool,
    pub product_relatively_ergodic: bool,
    pub relatively_ergodic: bool,
    pub report: PredicateReport,
}

/// Relative weak mixing ⟺ relative ergodicity of the product, plus
/// relative weak mixing ⟹ relative ergodicity. Traces only.
pub fn check_main_theorem(
    gns: &GnsRep,
    ce: &CondExpectation,
    pg: &ProductGns,
    tol: f64,
    horizon: usize,
) -> Result<TheoremOutcome> {
    if !gns.is_tracial() {
        return Err(Error::NotTracial {
            operation: "main theorem check",
        });
    }
    let rwm = is_relatively_weakly_mixing(gns, ce, tol, horizon)?;
    let product = product_relatively_ergodic(pg, tol)?;
    let system = is_system_relatively_ergodic(gns, ce, tol)?;
    let equivalence = rwm.value == product.value;
    let implication = !rwm.value || system.value;
    let mut report = PredicateReport::new("main theorem", equivalence && implication, tol).with_note(format!(
        "relatively weakly mixing = {}, product relatively ergodic = {}, relatively ergodic = {}",
        rwm.value, product.value, system.value
    ));
    if !equivalence {
        report = report.with_witness("equivalence violated", 1.0);
    }
    if !implication {
        report = report.with_witness("weak mixing without ergodicity", 1.0);
    }
    for w in rwm.witnesses.iter().take(2).chain(product.witnesses.iter().take(2)) {
        report.witnesses.push(w.clone());
    }
    Ok(TheoremOutcome {
        relatively_weakly_mixing: rwm.value,
        product_relatively_ergodic: product.value,
        relatively_ergodic: system.value,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relprod::build_product_gns;
    use crate::repgns::{build_gns, cond_expectation, mirror_system};
    use crate::vnalg::{diag, matrix_unit, validate_subsystem, AutomorphismKind, MatrixStarAlgebra, SystemSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn r(x: f64) -> C64 {
        c64(x, 0.0)
    }

    fn v(entries: &[C64]) -> CVector {
        CVector::from_column_slice(entries)
    }

    struct Built {
        gns: GnsRep,
        ce: CondExpectation,
        pg: ProductGns,
    }

    fn build(
        algebra: MatrixStarAlgebra,
        kind: AutomorphismKind,
        f: impl FnOnce(&SystemSpec) -> MatrixStarAlgebra,
    ) -> Built {
        let d = algebra.ambient_dim();
        let sys = SystemSpec::new(algebra, &(CMatrix::identity(d, d) * r(1.0 / d as f64)), &kind, TOL).unwrap();
        let sub = validate_subsystem(&sys, f(&sys), TOL).unwrap();
        let gns = build_gns(&sys).unwrap();
        let ce = cond_expectation(&gns, &sub).unwrap();
        let md = mirror_system(&gns, &ce).unwrap();
        let pg = build_product_gns(&gns, &md, &ce).unwrap();
        Built { gns, ce, pg }
    }

    fn m2_diag(full: bool) -> Built {
        build(
            MatrixStarAlgebra::full(2),
            AutomorphismKind::Inner {
                unitary: diag(&[r(1.0), c64(0.0, 1.0)]),
            },
            |s| {
                if full {
                    s.algebra.clone()
                } else {
                    MatrixStarAlgebra::block_diagonal(&[1, 1])
                }
            },
        )
    }

    fn c2_swap() -> Built {
        build(
            MatrixStarAlgebra::block_diagonal(&[1, 1]),
            AutomorphismKind::BlockPermutation {
                sizes: vec![1, 1],
                perm: vec![1, 0],
            },
            |_| MatrixStarAlgebra::scalars(2),
        )
    }

    #[test]
    fn cesaro_examples() {
        let x = v(&[r(0.3), c64(0.0, 0.4)]);
        let y = v(&[r(-1.0), r(2.0)]);
        let res = cesaro(&CMatrix::identity(2, 2), &x, &y, CesaroMode::Exact).unwrap();
        assert!((res.exact - x.dotc(&y)).norm() < 1e-14);

        let e2 = v(&[r(0.0), r(1.0)]);
        let res = cesaro(&diag(&[r(1.0), r(-1.0)]), &e2, &e2, CesaroMode::Empirical(2)).unwrap();
        assert!(res.exact.norm() < 1e-14);
        assert!(res.empirical.unwrap().norm() < 1e-14);

        let h = v(&[r(0.5f64.sqrt()), r(0.5f64.sqrt())]);
        let res = cesaro(&diag(&[r(1.0), c64(0.0, 1.0)]), &h, &h, CesaroMode::Exact).unwrap();
        assert!((res.exact - r(0.5)).norm() < 1e-14);
    }

    #[test]
    fn rwm_term_examples() {
        let b = m2_diag(false);
        for n in 0..6 {
            let t = rwm_term(&b.gns, &b.ce, &matrix_unit(2, 0, 1), &matrix_unit(2, 1, 0), n);
            assert!((t.value() - 0.5).abs() < 1e-12);
            assert!(t.discrepancy() < 1e-12);
        }
        let b = c2_swap();
        let a = diag(&[r(1.0), r(-1.0)]);
        for n in 0..6 {
            let t = rwm_term(&b.gns, &b.ce, &a, &a, n);
            assert!((t.value() - 1.0).abs() < 1e-12);
        }
        let b = m2_diag(true);
        assert!(b.ce.kernel_basis().is_empty());
    }

    #[test]
    fn rwm_examples() {
        assert!(
            is_relatively_weakly_mixing(&m2_diag(true).gns, &m2_diag(true).ce, 1e-7, 512)
                .unwrap()
                .value
        );
        let b = m2_diag(false);
        let rep = is_relatively_weakly_mixing(&b.gns, &b.ce, 1e-7, 512).unwrap();
        assert!(!rep.value);
        assert!(rep.witnesses[0].residual > 1e-7);
        let b = c2_swap();
        assert!(!is_relatively_weakly_mixing(&b.gns, &b.ce, 1e-7, 512).unwrap().value);
    }

    #[test]
    fn system_ergodicity_examples() {
        let b = build(MatrixStarAlgebra::full(2), AutomorphismKind::Identity, |s| {
            s.algebra.clone()
        });
        assert!(is_system_relatively_ergodic(&b.gns, &b.ce, 1e-7).unwrap().value);
        let b = m2_diag(false);
        assert!(is_system_relatively_ergodic(&b.gns, &b.ce, 1e-7).unwrap().value);
        let b = c2_swap();
        assert!(is_system_relatively_ergodic(&b.gns, &b.ce, 1e-7).unwrap().value);
        let b = build(MatrixStarAlgebra::full(2), AutomorphismKind::Identity, |_| {
            MatrixStarAlgebra::scalars(2)
        });
        assert!(!is_system_relatively_ergodic(&b.gns, &b.ce, 1e-7).unwrap().value);
    }

    #[test]
    fn characterization_examples() {
        for b in [m2_diag(true), m2_diag(false), c2_swap()] {
            let reps = check_characterizations(&b.gns, &b.ce, &b.pg, 1e-7).unwrap();
            assert_eq!(reps.len(), 5);
            for rep in &reps {
                assert!(rep.value, "{rep:?}");
            }
        }
        // (iv) at (e12, e21): left limit 1/2, right limit 0
        let b = m2_diag(false);
        let spectrum = unitary_spectrum(b.gns.u(), DEFAULT_CLUSTER_TOL).unwrap();
        let a = b.gns.hat(&matrix_unit(2, 0, 1));
        let bb = matrix_unit(2, 1, 0);
        let left: f64 = spectrum
            .projectors()
            .iter()
            .map(|e| (b.ce.p() * b.gns.pi(&bb) * e * &a).norm_squared())
            .sum();
        let dbb = b.ce.apply(&b.gns, &bb);
        let right: f64 = spectrum
            .projectors()
            .iter()
            .map(|e| (b.gns.pi(&dbb) * b.ce.p() * e * &a).norm_squared())
            .sum();
        assert!((left - 0.5).abs() < 1e-12);
        assert!(right.abs() < 1e-12);
    }

    #[test]
    fn main_theorem_examples() {
        let b = m2_diag(true);
        let out = check_main_theorem(&b.gns, &b.ce, &b.pg, 1e-7, 512).unwrap();
        assert!(out.report.value);
        assert_eq!(
            (out.relatively_weakly_mixing, out.product_relatively_ergodic),
            (true, true)
        );
        for b in [m2_diag(false), c2_swap()] {
            let out = check_main_theorem(&b.gns, &b.ce, &b.pg, 1e-7, 512).unwrap();
            assert!(out.report.value);
            assert_eq!(
                (out.relatively_weakly_mixing, out.product_relatively_ergodic),
                (false, false)
            );
        }
    }

    #[test]
    fn main_theorem_rejects_non_trace() {
        let rho = diag(&[r(0.7), r(0.3)]);
        let sys = SystemSpec::new(
            MatrixStarAlgebra::full(2),
            &rho,
            &AutomorphismKind::Inner {
                unitary: diag(&[r(1.0), c64(0.0, 1.0)]),
            },
            TOL,
        )
        .unwrap();
        let sub = validate_subsystem(&sys, MatrixStarAlgebra::block_diagonal(&[1, 1]), TOL).unwrap();
        let gns = build_gns(&sys).unwrap();
        let ce = cond_expectation(&gns, &sub).unwrap();
        let md = mirror_system(&gns, &ce).unwrap();
        let pg = build_product_gns(&gns, &md, &ce).unwrap();
        assert!(matches!(
            check_main_theorem(&gns, &ce, &pg, 1e-7, 64),
            Err(Error::NotTracial { .. })
        ));
        let rep = is_relatively_weakly_mixing(&gns, &ce, 1e-7, 64).unwrap();
        assert!(rep.note.unwrap().contains("definition-level"));
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn finite_averages_within_bound(seed in any::<u64>(), dim in 1usize..=16) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = CMatrix::from_fn(dim, dim, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let u = g.qr().q();
                let x = CVector::from_fn(dim, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let y = CVector::from_fn(dim, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let spectrum = unitary_spectrum(&u, DEFAULT_CLUSTER_TOL).unwrap();
                for horizon in [64, 512] {
                    let res = cesaro(&u, &x, &y, CesaroMode::Empirical(horizon)).unwrap();
                    prop_assert!(res.gap.unwrap() <= cesaro_bound(&spectrum, &x, &y, horizon) + 1e-12);
                }
            }

            #[test]
            fn square_average_bounded_by_max_times_average(seed in any::<u64>(), horizon in 1usize..64) {
                let b = c2_swap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = b.gns.element(&CVector::from_fn(2, |_, _| c64(rng.random(), rng.random())));
                let bb = b.gns.element(&CVector::from_fn(2, |_, _| c64(rng.random(), rng.random())));
                let terms: Vec<f64> = (1..=horizon as i64).map(|n| rwm_term(&b.gns, &b.ce, &a, &bb, n).value()).collect();
                let max = terms.iter().cloned().fold(0.0, f64::max);
                let n = horizon as f64;
                let sq: f64 = terms.iter().map(|c| c * c).sum::<f64>() / n;
                let lin: f64 = terms.iter().sum::<f64>() / n;
                prop_assert!(sq <= max * lin + 1e-12);
            }
        }
    }
}
