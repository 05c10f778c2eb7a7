//! GNS representation of `(A, μ)`, modular conjugation, the dynamics
//! unitary, the projection onto `H_F`, conditional expectations and the
//! mirror system on the commutant.
//!
//! The GNS space is `C^m` with `m = dim A`, in a μ-orthonormal basis
//! `u_1 = 1, u_2, …, u_m` of `A`; so `Ω = e_1` and `â_k = μ(u_k* a)`.
//! Antilinear maps are stored as a matrix `K` acting by `v ↦ K·conj(v)`.

use crate::error::{Error, Result};
use crate::numkernel::{
    c64, from_columns, hermitian_eigen, hermitian_function, max_abs, orthonormalize, projector, unitarity_residual,
    vectorize, CMatrix, CVector, Subspace, C64, DEFAULT_RANK_TOL,
};
use crate::vnalg::{commutant_with_tol, modular_invariance_check, MatrixStarAlgebra, Subsystem, SystemSpec};

/// Residual above which a vector recovered as an algebra element is
/// considered outside the expected subalgebra.
pub const RECOVERY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GnsRep {
    system: SystemSpec,
    units: Vec<CMatrix>,
    hat_rows: CMatrix,
    omega: CVector,
    left: Vec<CMatrix>,
    u: CMatrix,
    s_matrix: CMatrix,
    delta: CMatrix,
    j_matrix: CMatrix,
}

/// Residuals of the GNS identities.
#[derive(Clone, Debug, Default)]
pub struct GnsInvariants {
    pub omega_norm: f64,
    pub homomorphism: f64,
    pub star: f64,
    pub j_involution: f64,
    pub j_antiunitary: f64,
    pub u_unitary: f64,
    pub u_omega: f64,
    pub covariance: f64,
    pub uj_commute: f64,
    /// Distance between `J` and `â ↦ â*` (meaningful for traces only).
    pub tracial_j: f64,
}

impl GnsInvariants {
    pub fn max(&self, tracial: bool) -> f64 {
        let mut worst = [
            self.omega_norm,
            self.homomorphism,
            self.star,
            self.j_involution,
            self.j_antiunitary,
            self.u_unitary,
            self.u_omega,
            self.covariance,
            self.uj_commute,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if tracial {
            worst = worst.max(self.tracial_j);
        }
        worst
    }
}

/// GNS data for a validated system.
pub fn build_gns(system: &SystemSpec) -> Result<GnsRep> {
    let a = &system.algebra;
    let d = a.ambient_dim();
    let m = a.dim();
    let state = &system.state;

    // Gram matrix of the Hilbert-Schmidt basis under ⟨x, y⟩ = μ(x* y)
    let basis = a.basis();
    let mut gram = CMatrix::zeros(m, m);
    for k in 0..m {
        for l in k..m {
            let g = state.eval(&(basis[k].adjoint() * &basis[l]));
            gram[(k, l)] = g;
            gram[(l, k)] = g.conj();
        }
    }
    let ip = |x: &CVector, y: &CVector| x.dotc(&(&gram * y));

    let mut candidates = vec![a.coordinates(&CMatrix::identity(d, d))];
    candidates.extend((0..m).map(|k| {
        let mut e = CVector::zeros(m);
        e[k] = c64(1.0, 0.0);
        e
    }));
    let mut coords: Vec<CVector> = Vec::with_capacity(m);
    for c in candidates {
        if coords.len() == m {
            break;
        }
        let before = ip(&c, &c).re.sqrt();
        let mut r = c;
        for _ in 0..2 {
            for q in &coords {
                let w = ip(q, &r);
                r -= q * w;
            }
        }
        let norm = ip(&r, &r).re.max(0.0).sqrt();
        if norm > 1e-9 * before.max(1e-300) {
            r /= c64(norm, 0.0);
            coords.push(r);
        }
    }
    if coords.len() != m {
        return Err(Error::Numerical(format!(
            "GNS Gram matrix is singular: rank {} < {m}; state not faithful",
            coords.len()
        )));
    }
    let units: Vec<CMatrix> = coords.iter().map(|c| a.element(c)).collect();

    let mut hat_rows = CMatrix::zeros(m, d * d);
    for (k, uk) in units.iter().enumerate() {
        let y = (state.density() * uk.adjoint()).transpose();
        hat_rows.set_row(k, &vectorize(&y).transpose());
    }
    let hat = |x: &CMatrix| &hat_rows * vectorize(x);

    let mut left = Vec::with_capacity(m);
    for uk in &units {
        let cols: Vec<CVector> = units.iter().map(|ul| hat(&(uk * ul))).collect();
        left.push(from_columns(m, &cols));
    }
    let u = from_columns(
        m,
        &units
            .iter()
            .map(|ul| hat(&system.alpha.apply(a, ul)))
            .collect::<Vec<_>>(),
    );
    let s_matrix = from_columns(m, &units.iter().map(|ul| hat(&ul.adjoint())).collect::<Vec<_>>());
    let delta = s_matrix.transpose() * s_matrix.map(|z| z.conj());
    let delta_inv_sqrt = hermitian_function(&delta, |x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt());
    let j_matrix = &s_matrix * delta_inv_sqrt.map(|z| z.conj());

    let mut omega = CVector::zeros(m);
    omega[0] = c64(1.0, 0.0);

    let gns = GnsRep {
        system: system.clone(),
        units,
        hat_rows,
        omega,
        left,
        u,
        s_matrix,
        delta,
        j_matrix,
    };
    let residual = unitarity_residual(&gns.u);
    if residual > 1e-8 * (m as f64).sqrt() {
        return Err(Error::Internal(format!(
            "dynamics operator not unitary (residual {residual:.3e})"
        )));
    }
    Ok(gns)
}

fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

impl GnsRep {
    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    /// `dim H = dim A`.
    pub fn dim(&self) -> usize {
        self.units.len()
    }

    pub fn omega(&self) -> &CVector {
        &self.omega
    }

    /// The μ-orthonormal basis of `A` underlying the coordinates; `u_1 = 1`.
    pub fn units(&self) -> &[CMatrix] {
        &self.units
    }

    /// `â = aΩ` in GNS coordinates.
    pub fn hat(&self, x: &CMatrix) -> CVector {
        &self.hat_rows * vectorize(x)
    }

    /// The element of `A` whose class is `v`.
    pub fn element(&self, v: &CVector) -> CMatrix {
        let d = self.system.algebra.ambient_dim();
        let mut out = CMatrix::zeros(d, d);
        for (c, uk) in v.iter().zip(&self.units) {
            out += uk * *c;
        }
        out
    }

    /// `π(u_k)`.
    pub fn pi_basis(&self) -> &[CMatrix] {
        &self.left
    }

    /// `π(x)` for `x ∈ A`.
    pub fn pi(&self, x: &CMatrix) -> CMatrix {
        self.pi_coords(&self.hat(x))
    }

    /// `π(element(v))`.
    pub fn pi_coords(&self, v: &CVector) -> CMatrix {
        let m = self.dim();
        let mut out = CMatrix::zeros(m, m);
        for (c, l) in v.iter().zip(&self.left) {
            out += l * *c;
        }
        out
    }

    /// The dynamics unitary, `U â = α(a)^`.
    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn u_power(&self, n: i64) -> CMatrix {
        let step = if n >= 0 { self.u.clone() } else { self.u.adjoint() };
        let mut out = CMatrix::identity(self.dim(), self.dim());
        for _ in 0..n.unsigned_abs() {
            out = &step * out;
        }
        out
    }

    /// Matrix of the antilinear `S: â ↦ (a*)^`.
    pub fn s_matrix(&self) -> &CMatrix {
        &self.s_matrix
    }

    /// Modular operator `Δ = S*S`.
    pub fn delta(&self) -> &CMatrix {
        &self.delta
    }

    /// Matrix `K` of the modular conjugation, `J v = K conj(v)`.
    pub fn j_matrix(&self) -> &CMatrix {
        &self.j_matrix
    }

    pub fn apply_j(&self, v: &CVector) -> CVector {
        &self.j_matrix * v.map(|z| z.conj())
    }

    pub fn apply_s(&self, v: &CVector) -> CVector {
        &self.s_matrix * v.map(|z| z.conj())
    }

    /// `j(x) = J x* J`.
    pub fn mirror(&self, x: &CMatrix) -> CMatrix {
        &self.j_matrix * x.transpose() * conj(&self.j_matrix)
    }

    /// `μ(x)`.
    pub fn mu(&self, x: &CMatrix) -> C64 {
        self.system.state.eval(x)
    }

    pub fn is_tracial(&self) -> bool {
        self.system.state.is_trace()
    }

    pub fn invariants(&self) -> GnsInvariants {
        let m = self.dim();
        let id = CMatrix::identity(m, m);
        let a = &self.system.algebra;
        let mut inv = GnsInvariants {
            omega_norm: (self.omega.norm() - 1.0).abs(),
            ..Default::default()
        };
        for (k, uk) in self.units.iter().enumerate() {
            let adj = self.pi(&uk.adjoint());
            inv.star = inv.star.max(max_abs(&(adj - self.left[k].adjoint())));
            for (l, ul) in self.units.iter().enumerate() {
                let prod = self.pi(&(uk * ul));
                inv.homomorphism = inv.homomorphism.max(max_abs(&(prod - &self.left[k] * &self.left[l])));
            }
            let moved = &self.u * &self.left[k] * self.u.adjoint();
            let image = self.pi(&self.system.alpha.apply(a, uk));
            inv.covariance = inv.covariance.max(max_abs(&(moved - image)));
        }
        inv.j_involution = max_abs(&(&self.j_matrix * conj(&self.j_matrix) - &id));
        inv.j_antiunitary = unitarity_residual(&self.j_matrix);
        inv.u_unitary = unitarity_residual(&self.u);
        inv.u_omega = (&self.u * &self.omega - &self.omega).norm();
        inv.uj_commute = max_abs(&(&self.u * &self.j_matrix - &self.j_matrix * conj(&self.u)));
        inv.tracial_j = max_abs(&(&self.j_matrix - &self.s_matrix));
        inv
    }
}

/// `D: A → F` with `D(a)Ω = PaΩ`.
#[derive(Clone, Debug)]
pub struct CondExpectation {
    subsystem: Subsystem,
    h_f: Subspace,
    p: CMatrix,
    kernel: Vec<CVector>,
}

/// Residuals of the conditional expectation identities.
#[derive(Clone, Debug, Default)]
pub struct CondExpInvariants {
    pub idempotent: f64,
    pub unit: f64,
    pub state: f64,
    pub bimodule: f64,
    pub alpha_commute: f64,
    pub phi: f64,
    pub pu_up: f64,
    pub recovery: f64,
}

impl CondExpInvariants {
    pub fn max(&self) -> f64 {
        [
            self.idempotent,
            self.unit,
            self.state,
            self.bimodule,
            self.alpha_commute,
            self.phi,
            self.pu_up,
            self.recovery,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn cond_expectation(gns: &GnsRep, subsystem: &Subsystem) -> Result<CondExpectation> {
    let sys = gns.system();
    if !modular_invariance_check(&sys.algebra, subsystem.algebra(), &sys.state, 1e-9) {
        return Err(Error::InvalidSubsystem("not invariant under the modular group".into()));
    }
    let m = gns.dim();
    let f_hats: Vec<CVector> = subsystem.algebra().basis().iter().map(|f| gns.hat(f)).collect();
    let h_f = orthonormalize(m, &f_hats, DEFAULT_RANK_TOL)?;
    let p = projector(&h_f);
    // P is a projector, so its eigenvalues split cleanly into 0 and 1
    let (vals, vecs) = hermitian_eigen(&p);
    let kernel = (0..m)
        .filter(|&k| vals[k] < 0.5)
        .map(|k| vecs.column(k).into_owned())
        .collect();
    let ce = CondExpectation {
        subsystem: subsystem.clone(),
        h_f,
        p,
        kernel,
    };
    for (k, uk) in gns.units().iter().enumerate() {
        let image = ce.apply(gns, uk);
        let residual = subsystem.algebra().residual(&image);
        if residual > RECOVERY_TOL * image.norm().max(1.0) {
            return Err(Error::Internal(format!(
                "projection of basis element {k} is not in the subalgebra (residual {residual:.3e})"
            )));
        }
    }
    Ok(ce)
}

impl CondExpectation {
    pub fn subsystem(&self) -> &Subsystem {
        &self.subsystem
    }

    /// Projection onto `H_F`.
    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn h_f(&self) -> &Subspace {
        &self.h_f
    }

    /// Orthonormal basis of `ker D` in GNS coordinates.
    pub fn kernel_basis(&self) -> &[CVector] {
        &self.kernel
    }

    pub fn apply(&self, gns: &GnsRep, a: &CMatrix) -> CMatrix {
        gns.element(&(&self.p * gns.hat(a)))
    }

    /// `D` on GNS coordinates.
    pub fn apply_hat(&self, v: &CVector) -> CVector {
        &self.p * v
    }

    pub fn invariants(&self, gns: &GnsRep) -> CondExpInvariants {
        let sys = gns.system();
        let a = &sys.algebra;
        let f = self.subsystem.algebra();
        let id = CMatrix::identity(a.ambient_dim(), a.ambient_dim());
        let mut inv = CondExpInvariants {
            unit: (self.apply(gns, &id) - &id).norm(),
            pu_up: max_abs(&(&self.p * gns.u() - gns.u() * &self.p)),
            ..Default::default()
        };
        for x in gns.units() {
            let dx = self.apply(gns, x);
            inv.idempotent = inv.idempotent.max((self.apply(gns, &dx) - &dx).norm());
            inv.state = inv.state.max((gns.mu(&dx) - gns.mu(x)).norm());
            inv.recovery = inv.recovery.max((gns.hat(&dx) - &self.p * gns.hat(x)).norm());
            let ax = sys.alpha.apply(a, x);
            let d_alpha = self.apply(gns, &ax);
            let alpha_d = sys.alpha.apply(a, &dx);
            inv.alpha_commute = inv.alpha_commute.max((&d_alpha - &alpha_d).norm());
            let phi_d = f.element(&(self.subsystem.phi() * f.coordinates(&dx)));
            inv.phi = inv.phi.max((&alpha_d - phi_d).norm());
            for g in f.basis() {
                for h in f.basis() {
                    let lhs = self.apply(gns, &(g * x * h));
                    inv.bimodule = inv.bimodule.max((lhs - g * &dx * h).norm());
                }
            }
        }
        inv
    }
}

/// `A′`, `F̃ = j(F)` and `D̃ = j∘D∘j` on the GNS space.
#[derive(Clone, Debug)]
pub struct MirrorData {
    a_prime: MatrixStarAlgebra,
    a_prime_from_j: MatrixStarAlgebra,
    f_tilde: MatrixStarAlgebra,
    commutant_gap: f64,
}

/// Residuals of the mirror-system identities.
#[derive(Clone, Debug, Default)]
pub struct MirrorInvariants {
    /// Span distance between the solved commutant and `j(π(A))`.
    pub commutant_gap: f64,
    pub commutes: f64,
    pub state_invariance: f64,
    pub f_tilde_inside: f64,
    pub d_tilde_omega: f64,
    pub h_f_from_f_tilde: f64,
}

impl MirrorInvariants {
    pub fn max(&self, tracial: bool) -> f64 {
        let mut worst = [
            self.commutes,
            self.state_invariance,
            self.f_tilde_inside,
            self.d_tilde_omega,
            self.h_f_from_f_tilde,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if tracial {
            worst = worst.max(self.commutant_gap);
        }
        worst
    }
}

pub fn mirror_system(gns: &GnsRep, ce: &CondExpectation) -> Result<MirrorData> {
    let m = gns.dim();
    let pi_a = MatrixStarAlgebra::from_spanning(m, gns.pi_basis(), DEFAULT_RANK_TOL)?;
    let a_prime = commutant_with_tol(&pi_a, DEFAULT_RANK_TOL)?;
    let mirrored: Vec<CMatrix> = gns.pi_basis().iter().map(|x| gns.mirror(x)).collect();
    let a_prime_from_j = MatrixStarAlgebra::from_spanning(m, &mirrored, DEFAULT_RANK_TOL)?;
    let commutant_gap = a_prime.span_distance(&a_prime_from_j);
    if gns.is_tracial() && commutant_gap > 1e-7 {
        return Err(Error::Internal(format!(
            "commutant and mirror image of the algebra differ (gap {commutant_gap:.3e})"
        )));
    }
    let f_tilde_elems: Vec<CMatrix> = ce
        .subsystem()
        .algebra()
        .basis()
        .iter()
        .map(|f| gns.mirror(&gns.pi(f)))
        .collect();
    let f_tilde = MatrixStarAlgebra::from_spanning(m, &f_tilde_elems, DEFAULT_RANK_TOL)?;
    Ok(MirrorData {
        a_prime,
        a_prime_from_j,
        f_tilde,
        commutant_gap,
    })
}

impl MirrorData {
    /// `A′`, as the solved commutant of `π(A)`.
    pub fn a_prime(&self) -> &MatrixStarAlgebra {
        &self.a_prime
    }

    /// `j(π(A))`.
    pub fn a_prime_from_j(&self) -> &MatrixStarAlgebra {
        &self.a_prime_from_j
    }

    pub fn f_tilde(&self) -> &MatrixStarAlgebra {
        &self.f_tilde
    }

    pub fn commutant_gap(&self) -> f64 {
        self.commutant_gap
    }

    /// `μ′(b) = ⟨Ω, bΩ⟩`.
    pub fn mu_prime(&self, b: &CMatrix) -> C64 {
        b[(0, 0)]
    }

    /// `α′(b) = U b U*`.
    pub fn alpha_prime(&self, gns: &GnsRep, b: &CMatrix) -> CMatrix {
        gns.u() * b * gns.u().adjoint()
    }

    /// `D̃(b) = j(D(j(b)))`; `j(b) ∈ π(A)` is identified through its action
    /// on Ω.
    pub fn d_tilde(&self, gns: &GnsRep, ce: &CondExpectation, b: &CMatrix) -> CMatrix {
        let jb = gns.mirror(b);
        let v = &jb * gns.omega();
        gns.mirror(&gns.pi_coords(&ce.apply_hat(&v)))
    }

    pub fn invariants(&self, gns: &GnsRep, ce: &CondExpectation) -> MirrorInvariants {
        let mut inv = MirrorInvariants {
            commutant_gap: self.commutant_gap,
            ..Default::default()
        };
        for b in self.a_prime.basis() {
            for x in gns.pi_basis() {
                inv.commutes = inv.commutes.max(max_abs(&(b * x - x * b)));
            }
            let moved = self.alpha_prime(gns, b);
            inv.state_invariance = inv
                .state_invariance
                .max((self.mu_prime(&moved) - self.mu_prime(b)).norm());
            let dt = self.d_tilde(gns, ce, b);
            inv.d_tilde_omega = inv
                .d_tilde_omega
                .max((&dt * gns.omega() - ce.p() * b * gns.omega()).norm());
        }
        inv.f_tilde_inside = self.a_prime.containment_residual(&self.f_tilde);
        let f_tilde_omega: Vec<CVector> = self.f_tilde.basis().iter().map(|b| b * gns.omega()).collect();
        let span = orthonormalize(gns.dim(), &f_tilde_omega, DEFAULT_RANK_TOL).expect("dimensions agree");
        inv.h_f_from_f_tilde = span.equality_residual(ce.h_f());
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vnalg::{diag, matrix_unit, validate_subsystem, AutomorphismKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn r(x: f64) -> C64 {
        c64(x, 0.0)
    }

    fn m2_system(density: CMatrix) -> SystemSpec {
        let u = diag(&[r(1.0), c64(0.0, 1.0)]);
        SystemSpec::new(
            MatrixStarAlgebra::full(2),
            &density,
            &AutomorphismKind::Inner { unitary: u },
            TOL,
        )
        .unwrap()
    }

    fn half_trace(d: usize) -> CMatrix {
        CMatrix::identity(d, d) * r(1.0 / d as f64)
    }

    #[test]
    fn scalar_algebra_is_one_dimensional() {
        let sys = SystemSpec::new(
            MatrixStarAlgebra::full(1),
            &CMatrix::identity(1, 1),
            &AutomorphismKind::Identity,
            TOL,
        )
        .unwrap();
        let gns = build_gns(&sys).unwrap();
        assert_eq!(gns.dim(), 1);
        assert!((gns.u()[(0, 0)] - r(1.0)).norm() < 1e-14);
        assert!((gns.j_matrix()[(0, 0)] - r(1.0)).norm() < 1e-14);
    }

    #[test]
    fn m2_left_action_ranks() {
        let gns = build_gns(&m2_system(half_trace(2))).unwrap();
        assert_eq!(gns.dim(), 4);
        let p11 = gns.pi(&matrix_unit(2, 0, 0));
        let rank = p11.singular_values().iter().filter(|&&s| s > 1e-9).count();
        assert_eq!(rank, 2);
        assert!(gns.invariants().max(true) < 1e-10);
    }

    #[test]
    fn tracial_j_is_adjoint_map() {
        let gns = build_gns(&m2_system(half_trace(2))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = CMatrix::from_fn(2, 2, |_, _| c64(rng.random(), rng.random()));
        let polar = gns.apply_j(&gns.hat(&x));
        let direct = gns.hat(&x.adjoint());
        assert!((polar - direct).norm() < 1e-12);
    }

    #[test]
    fn non_tracial_modular_data() {
        let rho = diag(&[r(0.7), r(0.3)]);
        let gns = build_gns(&m2_system(rho)).unwrap();
        assert!(!gns.is_tracial());
        let inv = gns.invariants();
        assert!(inv.max(false) < 1e-10, "{inv:?}");
        assert!(inv.tracial_j > 1e-3);
        // S = J Δ^{1/2}
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = CVector::from_fn(4, |_, _| c64(rng.random(), rng.random()));
        let sqrt_delta = hermitian_function(gns.delta(), f64::sqrt);
        assert!((gns.apply_s(&v) - gns.apply_j(&(sqrt_delta * &v))).norm() < 1e-12);
    }

    #[test]
    fn mirror_examples() {
        let gns = build_gns(&m2_system(half_trace(2))).unwrap();
        let id = CMatrix::identity(4, 4);
        assert!(max_abs(&(gns.mirror(&id) - &id)) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = CMatrix::from_fn(4, 4, |_, _| c64(rng.random(), rng.random()));
        assert!(max_abs(&(gns.mirror(&gns.mirror(&x)) - &x)) < 1e-12);
        for a in gns.pi_basis() {
            let ja = gns.mirror(a);
            for b in gns.pi_basis() {
                assert!(max_abs(&(&ja * b - b * &ja)) < 1e-12);
            }
        }
    }

    #[test]
    fn conditional_expectation_examples() {
        let sys = m2_system(half_trace(2));
        let gns = build_gns(&sys).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = CMatrix::from_fn(2, 2, |_, _| c64(rng.random(), rng.random()));

        let trivial = validate_subsystem(&sys, MatrixStarAlgebra::scalars(2), TOL).unwrap();
        let ce = cond_expectation(&gns, &trivial).unwrap();
        let expected = CMatrix::identity(2, 2) * gns.mu(&a);
        assert!((ce.apply(&gns, &a) - expected).norm() < 1e-12);

        let diagonal = validate_subsystem(&sys, MatrixStarAlgebra::block_diagonal(&[1, 1]), TOL).unwrap();
        let ce = cond_expectation(&gns, &diagonal).unwrap();
        let expected = diag(&[a[(0, 0)], a[(1, 1)]]);
        assert!((ce.apply(&gns, &a) - expected).norm() < 1e-12);
        assert!(ce.invariants(&gns).max() < 1e-10);
        assert_eq!(ce.kernel_basis().len(), 2);

        let full = validate_subsystem(&sys, MatrixStarAlgebra::full(2), TOL).unwrap();
        let ce = cond_expectation(&gns, &full).unwrap();
        assert!((ce.apply(&gns, &a) - &a).norm() < 1e-12);
        assert!(ce.kernel_basis().is_empty());
    }

    #[test]
    fn non_tracial_conditional_expectation() {
        let rho = diag(&[r(2.0 / 3.0), r(1.0 / 3.0)]);
        let sys = m2_system(rho);
        let gns = build_gns(&sys).unwrap();
        let diagonal = validate_subsystem(&sys, MatrixStarAlgebra::block_diagonal(&[1, 1]), TOL).unwrap();
        let ce = cond_expectation(&gns, &diagonal).unwrap();
        assert!(ce.invariants(&gns).max() < 1e-10);
        let md = mirror_system(&gns, &ce).unwrap();
        assert!(md.invariants(&gns, &ce).max(false) < 1e-9);
        // even without a trace the two descriptions of the commutant agree
        assert!(md.commutant_gap() < 1e-8);
    }

    #[test]
    fn mirror_system_examples() {
        let sys = SystemSpec::new(
            MatrixStarAlgebra::full(1),
            &CMatrix::identity(1, 1),
            &AutomorphismKind::Identity,
            TOL,
        )
        .unwrap();
        let gns = build_gns(&sys).unwrap();
        let f = validate_subsystem(&sys, MatrixStarAlgebra::full(1), TOL).unwrap();
        let ce = cond_expectation(&gns, &f).unwrap();
        assert_eq!(mirror_system(&gns, &ce).unwrap().a_prime().dim(), 1);

        let sys = m2_system(half_trace(2));
        let gns = build_gns(&sys).unwrap();
        let f = validate_subsystem(&sys, MatrixStarAlgebra::block_diagonal(&[1, 1]), TOL).unwrap();
        let ce = cond_expectation(&gns, &f).unwrap();
        let md = mirror_system(&gns, &ce).unwrap();
        assert_eq!(md.a_prime().dim(), 4);
        assert_eq!(md.f_tilde().dim(), 2);
        assert!(md.invariants(&gns, &ce).max(true) < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let a = CMatrix::from_fn(2, 2, |_, _| c64(rng.random(), rng.random()));
            let ja = gns.mirror(&gns.pi(&a));
            let lhs = md.d_tilde(&gns, &ce, &ja);
            let rhs = gns.mirror(&gns.pi(&ce.apply(&gns, &a)));
            assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

        struct Fixture {
            gns: GnsRep,
            ce: CondExpectation,
        }

        /// Random tracial system on `M_n ⊕ M_n` with a block swap and a
        /// subalgebra recipe picked by `recipe`.
        fn fixture(seed: u64, recipe: u8) -> Fixture {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=2);
            let d = 2 * n;
            let a = MatrixStarAlgebra::block_diagonal(&[n, n]);
            let block = CMatrix::from_fn(n, n, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .qr()
                .q();
            let mut u = CMatrix::zeros(d, d);
            u.view_mut((0, 0), (n, n)).copy_from(&block);
            u.view_mut((n, n), (n, n)).copy_from(&block.adjoint());
            let kind = AutomorphismKind::Composition(vec![
                AutomorphismKind::Inner { unitary: u },
                AutomorphismKind::BlockPermutation {
                    sizes: vec![n, n],
                    perm: vec![1, 0],
                },
            ]);
            let sys = SystemSpec::new(a, &half_trace(d), &kind, TOL).unwrap();
            let f = match recipe % 3 {
                0 => MatrixStarAlgebra::scalars(d),
                1 => crate::vnalg::fixed_algebra(&sys.algebra, &sys.alpha, TOL).unwrap(),
                _ => sys.algebra.clone(),
            };
            let sub = validate_subsystem(&sys, f, TOL).unwrap();
            let gns = build_gns(&sys).unwrap();
            let ce = cond_expectation(&gns, &sub).unwrap();
            Fixture { gns, ce }
        }

        fn random_element(gns: &GnsRep, rng: &mut ChaCha8Rng) -> CMatrix {
            let v = CVector::from_fn(gns.dim(), |_, _| {
                c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            gns.element(&v)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn lambda_of_square_is_projected_norm(seed in any::<u64>(), recipe in any::<u8>()) {
                let fx = fixture(seed, recipe);
                for x in fx.gns.units() {
                    let dx = fx.ce.apply(&fx.gns, x);
                    let lhs = fx.gns.mu(&(dx.adjoint() * &dx));
                    let rhs = (fx.ce.p() * fx.gns.hat(x)).norm_squared();
                    prop_assert!((lhs - c64(rhs, 0.0)).norm() < 1e-10);
                }
            }

            #[test]
            fn norm_symmetry_under_trace(seed in any::<u64>(), recipe in any::<u8>(), n in 0i64..=10) {
                let fx = fixture(seed, recipe);
                let (gns, ce) = (&fx.gns, &fx.ce);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
                let a = random_element(gns, &mut rng);
                let b = random_element(gns, &mut rng);
                let lhs = (ce.p() * gns.pi(&b) * gns.u_power(n) * gns.hat(&a)).norm();
                let inner = gns.u_power(n) * gns.pi(&a.adjoint()) * gns.u_power(-n) * gns.hat(&b.adjoint());
                let rhs = (ce.p() * inner).norm();
                prop_assert!((lhs - rhs).abs() < 1e-10);
            }

            #[test]
            fn rwm_term_has_two_forms(seed in any::<u64>(), recipe in any::<u8>(), n in 0i64..=10) {
                let fx = fixture(seed, recipe);
                let (gns, ce) = (&fx.gns, &fx.ce);
                let sys = gns.system();
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xab);
                let a = random_element(gns, &mut rng);
                let b = random_element(gns, &mut rng);
                let an = sys.alpha.apply_power(&sys.algebra, &a, n);
                let left = ce.apply(gns, &(an.adjoint() * b.adjoint()));
                let right = ce.apply(gns, &(&b * &an));
                let lhs = gns.mu(&(left * right));
                let rhs = (ce.p() * gns.pi(&b) * gns.u_power(n) * gns.hat(&a)).norm_squared();
                prop_assert!((lhs - c64(rhs, 0.0)).norm() < 1e-10);
            }

            #[test]
            fn d_is_a_contraction(seed in any::<u64>(), recipe in any::<u8>()) {
                let fx = fixture(seed, recipe);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
                let a = random_element(&fx.gns, &mut rng);
                let da = fx.ce.apply(&fx.gns, &a);
                prop_assert!(fx.gns.hat(&da).norm() <= fx.gns.hat(&a).norm() + 1e-12);
            }

            #[test]
            fn j_preserves_h_f(seed in any::<u64>(), recipe in any::<u8>()) {
                let fx = fixture(seed, recipe);
                let images: Vec<CVector> = fx.ce.h_f().basis().iter().map(|v| fx.gns.apply_j(v)).collect();
                let span = orthonormalize(fx.gns.dim(), &images, DEFAULT_RANK_TOL).unwrap();
                prop_assert!(span.equality_residual(fx.ce.h_f()) < 1e-10);
            }
        }
    }
}
