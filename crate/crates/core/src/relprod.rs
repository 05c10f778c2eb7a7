//! The relatively independent joining `ω = μ ⊙_λ μ′` of `A` with its
//! mirror `A′`, and its GNS data.
//!
//! Simple tensors `u_i ⊗ f_j` over the μ-orthonormal basis of `A` and the
//! Hilbert-Schmidt basis of `A′` index the coefficient space `C^{m m′}`
//! (index `i·m′ + j`). `Γ` maps coefficients to `H_ω` so that
//! `⟨Γc, Γc′⟩ = c* G c′`.

use crate::error::{Error, Result};
use crate::numkernel::{
    c64, hermitian_eigen, max_abs, orthonormalize, projector, unitarity_residual, unitary_spectrum, CMatrix, CVector,
    Subspace, C64, DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL,
};
use crate::repgns::{CondExpectation, GnsRep, MirrorData};
use crate::report::{PredicateReport, WitnessSet};

/// Relative eigenvalue cutoff for the Gram null space.
pub const GRAM_NULL_TOL: f64 = 1e-10;
/// Default tolerance for joining identities.
pub const DEFAULT_JOINING_TOL: f64 = 1e-7;

const W_UNITARITY_TOL: f64 = 1e-6;

/// `Σ a_i ⊗ b_i` with `a_i ∈ A` (ambient matrices) and `b_i ∈ A′` (GNS
/// operators).
#[derive(Clone, Debug, Default)]
pub struct TensorElement {
    pub terms: Vec<(CMatrix, CMatrix)>,
}

impl TensorElement {
    pub fn simple(a: CMatrix, b: CMatrix) -> Self {
        TensorElement { terms: vec![(a, b)] }
    }
}

/// `ω(Σ a_i ⊗ b_i) = Σ ⟨Ω, D(a_i) D̃(b_i) Ω⟩`.
///
/// Uses `D̃(b)Ω = PbΩ` and `D(a)*Ω = P(a*)^`, so no conditional expectation
/// has to be materialized.
pub fn omega_eval(gns: &GnsRep, ce: &CondExpectation, t: &TensorElement) -> C64 {
    t.terms
        .iter()
        .map(|(a, b)| {
            let left = gns.hat(&a.adjoint());
            left.dotc(&(ce.p() * (b * gns.omega())))
        })
        .sum()
}

#[derive(Clone, Debug)]
pub struct ProductGns {
    m: usize,
    m_prime: usize,
    gram: CMatrix,
    gram_min_eigenvalue: f64,
    gamma: CMatrix,
    omega_omega: CVector,
    w: CMatrix,
    w_unitarity: f64,
    e_coeffs: CMatrix,
    h_mu: Subspace,
    h_mu_prime: Subspace,
    h_lambda: Subspace,
    h_lambda_tilde: Subspace,
    a_prime: crate::vnalg::MatrixStarAlgebra,
}

pub fn build_product_gns(gns: &GnsRep, mirror: &MirrorData, ce: &CondExpectation) -> Result<ProductGns> {
    let m = gns.dim();
    let a_prime = mirror.a_prime().clone();
    let fs = a_prime.basis();
    let mp = fs.len();
    let n = m * mp;
    let p = ce.p();

    // w[j][l] = P f_j* f_l Ω
    let w_vecs: Vec<Vec<CVector>> = fs
        .iter()
        .map(|fj| fs.iter().map(|fl| p * (fj.adjoint() * (fl * gns.omega()))).collect())
        .collect();
    let mut gram = CMatrix::zeros(n, n);
    for (k, uk) in gns.pi_basis().iter().enumerate() {
        for j in 0..mp {
            for l in 0..mp {
                let col = uk * &w_vecs[j][l];
                for i in 0..m {
                    gram[(i * mp + j, k * mp + l)] = col[i];
                }
            }
        }
    }
    let gram = (&gram + gram.adjoint()) * c64(0.5, 0.0);
    let (vals, vecs) = hermitian_eigen(&gram);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let gram_min_eigenvalue = vals.first().copied().unwrap_or(0.0);
    if gram_min_eigenvalue < -DEFAULT_JOINING_TOL * top.max(1.0) {
        return Err(Error::Numerical(format!(
            "joining Gram matrix not positive semidefinite (eigenvalue {gram_min_eigenvalue:.3e})"
        )));
    }
    let kept: Vec<usize> = (0..n).filter(|&k| vals[k] > GRAM_NULL_TOL * top).collect();
    let r = kept.len();
    let mut gamma = CMatrix::zeros(r, n);
    let mut gamma_pinv = CMatrix::zeros(n, r);
    for (row, &k) in kept.iter().enumerate() {
        let s = vals[k].sqrt();
        let v = vecs.column(k);
        gamma.set_row(row, &(v.adjoint() * c64(s, 0.0)));
        gamma_pinv.set_column(row, &(v * c64(1.0 / s, 0.0)));
    }

    let t_a = gns.u().clone();
    let mut t_b = CMatrix::zeros(mp, mp);
    for (j, fj) in fs.iter().enumerate() {
        t_b.set_column(j, &a_prime.coordinates(&mirror.alpha_prime(gns, fj)));
    }
    let w = &gamma * t_a.kronecker(&t_b) * &gamma_pinv;
    let w_unitarity = unitarity_residual(&w);
    if w_unitarity > W_UNITARITY_TOL * (r.max(1) as f64).sqrt() {
        return Err(Error::Internal(format!(
            "joining dynamics not unitary on the quotient (residual {w_unitarity:.3e})"
        )));
    }

    let identity_coords = a_prime.coordinates(&CMatrix::identity(m, m));
    let mut e1 = CVector::zeros(m);
    e1[0] = c64(1.0, 0.0);
    let omega_omega = &gamma * e1.kronecker(&identity_coords);

    let mut d_tilde = CMatrix::zeros(mp, mp);
    for (j, fj) in fs.iter().enumerate() {
        d_tilde.set_column(j, &a_prime.coordinates(&mirror.d_tilde(gns, ce, fj)));
    }
    let e_coeffs = p.kronecker(&d_tilde);

    let embed = |vecs: Vec<CVector>| orthonormalize(r, &vecs, DEFAULT_RANK_TOL);
    let h_mu = embed(
        (0..m)
            .map(|i| {
                let mut ei = CVector::zeros(m);
                ei[i] = c64(1.0, 0.0);
                &gamma * ei.kronecker(&identity_coords)
            })
            .collect(),
    )?;
    let h_mu_prime = embed(
        (0..mp)
            .map(|j| {
                let mut ej = CVector::zeros(mp);
                ej[j] = c64(1.0, 0.0);
                &gamma * e1.kronecker(&ej)
            })
            .collect(),
    )?;
    let f_basis = ce.subsystem().algebra().basis();
    let h_lambda = embed(
        f_basis
            .iter()
            .map(|f| &gamma * gns.hat(f).kronecker(&identity_coords))
            .collect(),
    )?;
    let h_lambda_tilde = embed(
        f_basis
            .iter()
            .map(|f| &gamma * e1.kronecker(&a_prime.coordinates(&gns.mirror(&gns.pi(f)))))
            .collect(),
    )?;
    let gap = h_lambda.equality_residual(&h_lambda_tilde);
    if gap > DEFAULT_JOINING_TOL {
        return Err(Error::Internal(format!(
            "the two descriptions of the diagonal subspace differ (gap {gap:.3e})"
        )));
    }

    Ok(ProductGns {
        m,
        m_prime: mp,
        gram,
        gram_min_eigenvalue,
        gamma,
        omega_omega,
        w,
        w_unitarity,
        e_coeffs,
        h_mu,
        h_mu_prime,
        h_lambda,
        h_lambda_tilde,
        a_prime,
    })
}

/// Residuals of the joining identities.
#[derive(Clone, Debug, Default)]
pub struct JoiningInvariants {
    pub gram_negativity: f64,
    pub normalization: f64,
    pub marginal_a: f64,
    pub marginal_a_prime: f64,
    pub tau_invariance: f64,
    pub diagonal_restriction: f64,
    pub w_unitarity: f64,
    pub w_omega: f64,
    pub h_lambda_descriptions: f64,
    pub h_lambda_inside: f64,
    pub lemma_orthogonality: f64,
    pub expectation_projection: f64,
}

impl JoiningInvariants {
    pub fn max(&self) -> f64 {
        [
            self.gram_negativity,
            self.normalization,
            self.marginal_a,
            self.marginal_a_prime,
            self.tau_invariance,
            self.diagonal_restriction,
            self.w_unitarity,
            self.w_omega,
            self.h_lambda_descriptions,
            self.h_lambda_inside,
            self.lemma_orthogonality,
            self.expectation_projection,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl ProductGns {
    /// `dim H_ω`.
    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    /// Number of spanning pairs `(u_i, f_j)`.
    pub fn spanning_len(&self) -> usize {
        self.m * self.m_prime
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn omega_omega(&self) -> &CVector {
        &self.omega_omega
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    pub fn h_mu(&self) -> &Subspace {
        &self.h_mu
    }

    pub fn h_mu_prime(&self) -> &Subspace {
        &self.h_mu_prime
    }

    pub fn h_lambda(&self) -> &Subspace {
        &self.h_lambda
    }

    /// `H_λ` spanned from `1 ⊗ F̃` instead of `F ⊗ 1`.
    pub fn h_lambda_tilde(&self) -> &Subspace {
        &self.h_lambda_tilde
    }

    /// `E = D ⊙ D̃` on the coefficient space.
    pub fn e_coeffs(&self) -> &CMatrix {
        &self.e_coeffs
    }

    /// Coefficients of `a ⊗ b`.
    pub fn coeffs(&self, gns: &GnsRep, a: &CMatrix, b: &CMatrix) -> CVector {
        gns.hat(a).kronecker(&self.a_prime.coordinates(b))
    }

    /// `γ_ω(a ⊗ b) = π_ω(a ⊗ b) Ω_ω`.
    pub fn gamma_simple(&self, gns: &GnsRep, a: &CMatrix, b: &CMatrix) -> CVector {
        &self.gamma * self.coeffs(gns, a, b)
    }

    pub fn gamma_of(&self, gns: &GnsRep, t: &TensorElement) -> CVector {
        let mut out = CVector::zeros(self.dim());
        for (a, b) in &t.terms {
            out += self.gamma_simple(gns, a, b);
        }
        out
    }

    pub fn invariants(&self, gns: &GnsRep, mirror: &MirrorData, ce: &CondExpectation) -> JoiningInvariants {
        let sys = gns.system();
        let m = self.m;
        let id_a = CMatrix::identity(sys.algebra.ambient_dim(), sys.algebra.ambient_dim());
        let id_h = CMatrix::identity(m, m);
        let top = self.gram.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let mut inv = JoiningInvariants {
            gram_negativity: (-self.gram_min_eigenvalue / top.max(1.0)).max(0.0),
            normalization: (omega_eval(gns, ce, &TensorElement::simple(id_a.clone(), id_h.clone())) - c64(1.0, 0.0))
                .norm()
                .max((self.omega_omega.norm() - 1.0).abs()),
            w_unitarity: self.w_unitarity,
            w_omega: (&self.w * &self.omega_omega - &self.omega_omega).norm(),
            h_lambda_descriptions: self.h_lambda.equality_residual(&self.h_lambda_tilde),
            h_lambda_inside: self
                .h_mu
                .containment_residual(&self.h_lambda)
                .max(self.h_mu_prime.containment_residual(&self.h_lambda)),
            ..Default::default()
        };
        for x in gns.units() {
            let lhs = omega_eval(gns, ce, &TensorElement::simple(x.clone(), id_h.clone()));
            inv.marginal_a = inv.marginal_a.max((lhs - gns.mu(x)).norm());
        }
        for b in self.a_prime.basis() {
            let lhs = omega_eval(gns, ce, &TensorElement::simple(id_a.clone(), b.clone()));
            inv.marginal_a_prime = inv.marginal_a_prime.max((lhs - mirror.mu_prime(b)).norm());
        }
        for x in gns.units() {
            let ax = sys.alpha.apply(&sys.algebra, x);
            for b in self.a_prime.basis() {
                let before = omega_eval(gns, ce, &TensorElement::simple(x.clone(), b.clone()));
                let after = omega_eval(gns, ce, &TensorElement::simple(ax.clone(), mirror.alpha_prime(gns, b)));
                inv.tau_invariance = inv.tau_invariance.max((after - before).norm());
                // ω(s) = ⟨Ω_ω, γ(s)⟩
                let via_gns = self.omega_omega.dotc(&self.gamma_simple(gns, x, b));
                inv.tau_invariance = inv.tau_invariance.max((via_gns - before).norm());
            }
        }
        for f in ce.subsystem().algebra().basis() {
            for g in mirror.f_tilde().basis() {
                let lhs = omega_eval(gns, ce, &TensorElement::simple(f.clone(), g.clone()));
                let rhs = gns.omega().dotc(&(gns.pi(f) * (g * gns.omega())));
                inv.diagonal_restriction = inv.diagonal_restriction.max((lhs - rhs).norm());
            }
        }
        let r = projector(&self.h_lambda);
        for a in ce.kernel_basis() {
            let coeff_a = a.clone();
            for j in 0..self.m_prime {
                let mut ej = CVector::zeros(self.m_prime);
                ej[j] = c64(1.0, 0.0);
                let g = &self.gamma * coeff_a.kronecker(&ej);
                inv.lemma_orthogonality = inv.lemma_orthogonality.max((&r * g).norm());
            }
        }
        let lhs = &self.gamma * &self.e_coeffs;
        let rhs = &r * &self.gamma;
        inv.expectation_projection = max_abs(&(lhs - rhs));
        inv
    }

    /// Decomposition of `W` into spectral projectors.
    pub fn fixed_space(&self) -> Result<Subspace> {
        Ok(unitary_spectrum(&self.w, DEFAULT_CLUSTER_TOL)?.fixed_space())
    }
}

/// True when every `W`-invariant vector of `H_ω` lies in `H_λ`.
pub fn product_relatively_ergodic(p: &ProductGns, tol: f64) -> Result<PredicateReport> {
    let fixed = p.fixed_space()?;
    let mut set = WitnessSet::new(tol);
    for (k, v) in fixed.basis().iter().enumerate() {
        set.record(|| format!("fixed vector {k} of W"), p.h_lambda.distance(v));
    }
    if fixed.rank() == 0 {
        set.record(|| "no fixed vectors".into(), 0.0);
    }
    Ok(set.into_report("product relatively ergodic").with_note(format!(
        "dim H_omega^W = {}, dim H_lambda = {}",
        fixed.rank(),
        p.h_lambda.rank()
    )))
}
