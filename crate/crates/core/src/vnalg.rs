//! Finite-dimensional von Neumann algebras as explicit spans inside `M_d`,
//! together with faithful states, automorphisms and subsystems.

use crate::error::{Error, Result};
use crate::numkernel::{
    c64, from_columns, hermitian_eigen, hermitian_function, hermiticity_residual, null_space, pseudo_inverse,
    singular_values, trace, unvectorize, vectorize, CMatrix, CVector, SpanBuilder, C64,
};

/// Default relative tolerance for algebraic identity checks.
pub const DEFAULT_ALGEBRA_TOL: f64 = 1e-9;

/// A unital *-subalgebra of `M_d`, stored as a Hilbert-Schmidt orthonormal
/// basis.
#[derive(Clone, Debug)]
pub struct MatrixStarAlgebra {
    ambient_dim: usize,
    basis: Vec<CMatrix>,
    stacked: CMatrix,
    contains_unit: bool,
}

impl MatrixStarAlgebra {
    fn from_orthonormal(ambient_dim: usize, basis: Vec<CMatrix>) -> Self {
        let cols: Vec<CVector> = basis.iter().map(vectorize).collect();
        let stacked = from_columns(ambient_dim * ambient_dim, &cols);
        let mut alg = MatrixStarAlgebra {
            ambient_dim,
            basis,
            stacked,
            contains_unit: false,
        };
        let id = CMatrix::identity(ambient_dim, ambient_dim);
        alg.contains_unit = alg.residual(&id) <= 1e-8 * (ambient_dim.max(1) as f64).sqrt();
        alg
    }

    /// Span of the given matrices. Closure is not checked here; see
    /// [`MatrixStarAlgebra::closure_residual`].
    pub fn from_spanning(ambient_dim: usize, elements: &[CMatrix], tol: f64) -> Result<Self> {
        let mut builder = SpanBuilder::new(ambient_dim * ambient_dim, tol);
        for x in elements {
            check_square(x, ambient_dim)?;
            builder.try_add(&vectorize(x));
        }
        let basis = builder
            .into_basis()
            .iter()
            .map(|v| unvectorize(v, ambient_dim, ambient_dim))
            .collect();
        Ok(Self::from_orthonormal(ambient_dim, basis))
    }

    /// `ℂ1` inside `M_d`.
    pub fn scalars(ambient_dim: usize) -> Self {
        let id = CMatrix::identity(ambient_dim, ambient_dim) * c64(1.0 / (ambient_dim as f64).sqrt(), 0.0);
        Self::from_orthonormal(ambient_dim, vec![id])
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self::block_diagonal(&[ambient_dim])
    }

    /// `M_{n_1} ⊕ … ⊕ M_{n_k}` embedded block-diagonally.
    pub fn block_diagonal(sizes: &[usize]) -> Self {
        let d: usize = sizes.iter().sum();
        let mut basis = Vec::new();
        let mut offset = 0;
        for &n in sizes {
            for j in 0..n {
                for i in 0..n {
                    let mut e = CMatrix::zeros(d, d);
                    e[(offset + i, offset + j)] = c64(1.0, 0.0);
                    basis.push(e);
                }
            }
            offset += n;
        }
        Self::from_orthonormal(d, basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension of the algebra as a vector space.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn contains_unit(&self) -> bool {
        self.contains_unit
    }

    /// Hilbert-Schmidt coefficients of the orthogonal projection of `x`.
    pub fn coordinates(&self, x: &CMatrix) -> CVector {
        self.stacked.adjoint() * vectorize(x)
    }

    pub fn element(&self, coords: &CVector) -> CMatrix {
        unvectorize(&(&self.stacked * coords), self.ambient_dim, self.ambient_dim)
    }

    pub fn project(&self, x: &CMatrix) -> CMatrix {
        self.element(&self.coordinates(x))
    }

    /// Hilbert-Schmidt distance from `x` to the span.
    pub fn residual(&self, x: &CMatrix) -> f64 {
        (x - self.project(x)).norm()
    }

    pub fn contains(&self, x: &CMatrix, tol: f64) -> bool {
        self.residual(x) <= tol * x.norm().max(1.0)
    }

    /// Largest residual of a basis element of `other` outside `self`.
    pub fn containment_residual(&self, other: &MatrixStarAlgebra) -> f64 {
        other.basis.iter().map(|b| self.residual(b)).fold(0.0, f64::max)
    }

    /// Zero iff the two spans coincide (dimension mismatch counts as 1).
    pub fn span_distance(&self, other: &MatrixStarAlgebra) -> f64 {
        let gap: f64 = if self.dim() == other.dim() { 0.0 } else { 1.0 };
        gap.max(self.containment_residual(other))
            .max(other.containment_residual(self))
    }

    /// Worst residual among pairwise products, adjoints and the unit.
    pub fn closure_residual(&self) -> f64 {
        let id = CMatrix::identity(self.ambient_dim, self.ambient_dim);
        let mut worst = self.residual(&id) / (self.ambient_dim.max(1) as f64).sqrt();
        for a in &self.basis {
            worst = worst.max(self.residual(&a.adjoint()));
            for b in &self.basis {
                worst = worst.max(self.residual(&(a * b)));
            }
        }
        worst
    }

    /// `A ∩ A′`.
    pub fn center(&self, tol: f64) -> MatrixStarAlgebra {
        let m = self.dim();
        let d2 = self.ambient_dim * self.ambient_dim;
        let mut constraints = CMatrix::zeros(m * d2, m);
        for (k, bk) in self.basis.iter().enumerate() {
            for (j, bj) in self.basis.iter().enumerate() {
                let c = vectorize(&(bk * bj - bj * bk));
                constraints.view_mut((j * d2, k), (d2, 1)).copy_from(&c);
            }
        }
        let elements: Vec<CMatrix> = null_space(&constraints, tol).iter().map(|c| self.element(c)).collect();
        Self::from_spanning(self.ambient_dim, &elements, tol).expect("dimensions agree")
    }

    /// A deterministic Hermitian element with generic spectrum.
    pub(crate) fn generic_hermitian(&self) -> CMatrix {
        let d = self.ambient_dim;
        let mut h = CMatrix::zeros(d, d);
        for (k, b) in self.basis.iter().enumerate() {
            let w = c64(((k as f64 + 1.0) * 0.754_877_666_246_692_7).fract() + 0.5, 0.0);
            h += (b + b.adjoint()) * w;
        }
        h
    }
}

fn check_square(x: &CMatrix, d: usize) -> Result<()> {
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if x.nrows() != d { x.nrows() } else { x.ncols() },
        });
    }
    Ok(())
}

/// Smallest unital *-subalgebra of `M_d` containing `generators`.
///
/// Breadth-first: every newly added basis element is multiplied on the
/// right by each generator and each generator adjoint, until nothing new
/// appears. Words in the generators span the generated algebra, so this
/// terminates with the full algebra.
pub fn generate_algebra(generators: &[CMatrix], d: usize) -> Result<MatrixStarAlgebra> {
    for g in generators {
        check_square(g, d)?;
    }
    // orthonormal basis of span(gens ∪ gens*) as the multiplier set
    let mut gen_span = SpanBuilder::new(d * d, DEFAULT_ALGEBRA_TOL);
    for g in generators {
        gen_span.try_add(&vectorize(g));
        gen_span.try_add(&vectorize(&g.adjoint()));
    }
    let multipliers: Vec<CMatrix> = gen_span.into_basis().iter().map(|v| unvectorize(v, d, d)).collect();

    let mut span = SpanBuilder::new(d * d, DEFAULT_ALGEBRA_TOL);
    let mut queue = std::collections::VecDeque::new();
    if let Some(v) = span.try_add(&vectorize(&CMatrix::identity(d, d))) {
        queue.push_back(unvectorize(&v, d, d));
    }
    while let Some(x) = queue.pop_front() {
        for g in &multipliers {
            if let Some(v) = span.try_add(&vectorize(&(&x * g))) {
                queue.push_back(unvectorize(&v, d, d));
            }
        }
    }
    let basis = span.into_basis().iter().map(|v| unvectorize(v, d, d)).collect();
    Ok(MatrixStarAlgebra::from_orthonormal(d, basis))
}

/// `{X ∈ M_d : XB = BX for every basis element B}`.
pub fn commutant(algebra: &MatrixStarAlgebra, d: usize) -> Result<MatrixStarAlgebra> {
    if algebra.ambient_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: algebra.ambient_dim(),
        });
    }
    commutant_with_tol(algebra, DEFAULT_ALGEBRA_TOL)
}

pub(crate) fn commutant_with_tol(algebra: &MatrixStarAlgebra, tol: f64) -> Result<MatrixStarAlgebra> {
    let d = algebra.ambient_dim();
    if d == 0 {
        return Ok(MatrixStarAlgebra::from_orthonormal(0, Vec::new()));
    }
    // Anything commuting with a generic Hermitian element h is block
    // diagonal in its eigenbasis; grouping eigenvalues loosely only enlarges
    // the search space, so the reduction is safe.
    let h = algebra.generic_hermitian();
    let (vals, vecs) = hermitian_eigen(&h);
    let scale = vals.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && vals[end] - vals[end - 1] < 1e-6 * scale {
            end += 1;
        }
        groups.push((start, end));
        start = end;
    }
    let mut candidates: Vec<CMatrix> = Vec::new();
    for &(s, e) in &groups {
        for j in s..e {
            for i in s..e {
                let vi = vecs.column(i);
                let vj = vecs.column(j);
                candidates.push(vi * vj.adjoint());
            }
        }
    }

    // Z holds the current solution space as coefficient columns over
    // `candidates`; each basis element cuts it down.
    let r = candidates.len();
    let mut z = CMatrix::identity(r, r);
    for b in algebra.basis() {
        if z.ncols() == 0 {
            break;
        }
        let mut c = CMatrix::zeros(d * d, r);
        for (k, x) in candidates.iter().enumerate() {
            c.set_column(k, &vectorize(&(x * b - b * x)));
        }
        let reduced = c * &z;
        let kernel = null_space(&reduced, tol);
        if kernel.len() == z.ncols() {
            continue;
        }
        let y = from_columns(z.ncols(), &kernel);
        z = &z * y;
    }
    let elements: Vec<CMatrix> = (0..z.ncols())
        .map(|k| {
            let mut x = CMatrix::zeros(d, d);
            for (i, cand) in candidates.iter().enumerate() {
                let w = z[(i, k)];
                if w != C64::new(0.0, 0.0) {
                    x += cand * w;
                }
            }
            x
        })
        .collect();
    MatrixStarAlgebra::from_spanning(d, &elements, tol)
}

/// Faithful state `x ↦ tr(ρx)`.
#[derive(Clone, Debug)]
pub struct StateSpec {
    density: CMatrix,
    is_trace: bool,
}

impl StateSpec {
    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    pub fn is_trace(&self) -> bool {
        self.is_trace
    }

    pub fn eval(&self, x: &CMatrix) -> C64 {
        // tr(ρx) = Σ ρ_ij x_ji
        let d = self.density.nrows();
        let mut s = c64(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                s += self.density[(i, j)] * x[(j, i)];
            }
        }
        s
    }

    /// The density of the restricted state inside `algebra`: the
    /// Hilbert-Schmidt projection of ρ, which reproduces `tr(ρx)` on the
    /// algebra.
    pub fn density_in(&self, algebra: &MatrixStarAlgebra) -> CMatrix {
        let p = algebra.project(&self.density);
        (&p + p.adjoint()) * c64(0.5, 0.0)
    }
}

/// Checks that `density` defines a faithful state on `algebra` and decides
/// traciality on the basis.
pub fn validate_state(algebra: &MatrixStarAlgebra, density: &CMatrix, tol: f64) -> Result<StateSpec> {
    check_square(density, algebra.ambient_dim())?;
    let herm = hermiticity_residual(density);
    if herm > tol * density.norm().max(1.0) {
        return Err(Error::NotHermitian { residual: herm });
    }
    let tr = trace(density);
    if (tr - c64(1.0, 0.0)).norm() > tol {
        return Err(Error::TraceNotOne { trace: tr.re });
    }
    let (vals, _) = hermitian_eigen(density);
    let min = vals.first().copied().unwrap_or(0.0);
    if min <= tol {
        return Err(Error::NotFaithful { min_eigenvalue: min });
    }
    let mut state = StateSpec {
        density: (density + density.adjoint()) * c64(0.5, 0.0),
        is_trace: false,
    };
    let basis = algebra.basis();
    let mut tracial = true;
    'outer: for (i, a) in basis.iter().enumerate() {
        for b in &basis[i + 1..] {
            if (state.eval(&(a * b)) - state.eval(&(b * a))).norm() > tol {
                tracial = false;
                break 'outer;
            }
        }
    }
    state.is_trace = tracial;
    Ok(state)
}

/// How an automorphism is specified.
#[derive(Clone, Debug)]
pub enum AutomorphismKind {
    Identity,
    /// `x ↦ u x u*`.
    Inner {
        unitary: CMatrix,
    },
    /// Moves block `i` of a block-diagonal layout to position `perm[i]`.
    BlockPermutation {
        sizes: Vec<usize>,
        perm: Vec<usize>,
    },
    /// Applied left to right.
    Composition(Vec<AutomorphismKind>),
    /// The linear map sending each `domain[i]` to `images[i]`.
    Linear {
        domain: Vec<CMatrix>,
        images: Vec<CMatrix>,
    },
}

/// Permutation unitary realizing a block permutation.
pub fn block_permutation_unitary(sizes: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let k = sizes.len();
    let mut seen = vec![false; k];
    if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidInput(format!(
            "{perm:?} is not a permutation of {k} blocks"
        )));
    }
    if let Some(i) = (0..k).find(|&i| sizes[i] != sizes[perm[i]]) {
        return Err(Error::InvalidInput(format!(
            "block {i} of size {} cannot move to block {} of size {}",
            sizes[i], perm[i], sizes[perm[i]]
        )));
    }
    let d: usize = sizes.iter().sum();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let mut w = CMatrix::zeros(d, d);
    for i in 0..k {
        for r in 0..sizes[i] {
            w[(offsets[perm[i]] + r, offsets[i] + r)] = c64(1.0, 0.0);
        }
    }
    Ok(w)
}

/// A validated *-automorphism, realized as a matrix on the algebra's
/// Hilbert-Schmidt coordinates.
#[derive(Clone, Debug)]
pub struct AutomorphismSpec {
    kind: AutomorphismKind,
    matrix: CMatrix,
    inverse: CMatrix,
}

impl AutomorphismSpec {
    pub fn kind(&self) -> &AutomorphismKind {
        &self.kind
    }

    /// Action on the algebra's basis coordinates.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, algebra: &MatrixStarAlgebra, x: &CMatrix) -> CMatrix {
        algebra.element(&(&self.matrix * algebra.coordinates(x)))
    }

    /// `α^n(x)`; negative `n` uses the inverse.
    pub fn apply_power(&self, algebra: &MatrixStarAlgebra, x: &CMatrix, n: i64) -> CMatrix {
        let step = if n >= 0 { &self.matrix } else { &self.inverse };
        let mut c = algebra.coordinates(x);
        for _ in 0..n.unsigned_abs() {
            c = step * c;
        }
        algebra.element(&c)
    }
}

fn realize(algebra: &MatrixStarAlgebra, kind: &AutomorphismKind, tol: f64) -> Result<CMatrix> {
    let d = algebra.ambient_dim();
    let m = algebra.dim();
    let by_images = |images: Vec<CMatrix>| -> Result<CMatrix> {
        let mut out = CMatrix::zeros(m, m);
        for (l, y) in images.iter().enumerate() {
            let residual = algebra.residual(y);
            if residual > tol * y.norm().max(1.0) {
                return Err(Error::AutomorphismRejected {
                    identity: "maps the algebra into itself",
                    left: l,
                    right: l,
                    residual,
                });
            }
            out.set_column(l, &algebra.coordinates(y));
        }
        Ok(out)
    };
    match kind {
        AutomorphismKind::Identity => Ok(CMatrix::identity(m, m)),
        AutomorphismKind::Inner { unitary } => {
            check_square(unitary, d)?;
            let residual = crate::numkernel::unitarity_residual(unitary);
            if residual > 1e-8 * (d.max(1) as f64).sqrt() {
                return Err(Error::NotUnitary { residual });
            }
            by_images(
                algebra
                    .basis()
                    .iter()
                    .map(|b| unitary * b * unitary.adjoint())
                    .collect(),
            )
        }
        AutomorphismKind::BlockPermutation { sizes, perm } => {
            let w = block_permutation_unitary(sizes, perm)?;
            check_square(&w, d)?;
            by_images(algebra.basis().iter().map(|b| &w * b * w.adjoint()).collect())
        }
        AutomorphismKind::Composition(parts) => {
            let mut total = CMatrix::identity(m, m);
            for p in parts {
                total = realize(algebra, p, tol)? * total;
            }
            Ok(total)
        }
        AutomorphismKind::Linear { domain, images } => {
            if domain.len() != images.len() {
                return Err(Error::InvalidInput(format!(
                    "{} domain elements but {} images",
                    domain.len(),
                    images.len()
                )));
            }
            for x in domain.iter().chain(images) {
                check_square(x, d)?;
            }
            let k = domain.len();
            let cx = from_columns(m, &domain.iter().map(|x| algebra.coordinates(x)).collect::<Vec<_>>());
            let cy = by_images(images.clone())?;
            let cy = if k == 0 { CMatrix::zeros(m, 0) } else { cy };
            let rank = singular_values(&cx).iter().filter(|&&s| s > 1e-9).count();
            if rank < m || domain.iter().any(|x| algebra.residual(x) > tol * x.norm().max(1.0)) {
                return Err(Error::InvalidInput("domain does not span the algebra".into()));
            }
            Ok(cy * pseudo_inverse(&cx, 1e-9))
        }
    }
}

/// Builds the map described by `kind` and checks that it is a
/// state-preserving *-automorphism of `algebra`.
pub fn validate_automorphism(
    algebra: &MatrixStarAlgebra,
    kind: &AutomorphismKind,
    state: &StateSpec,
    tol: f64,
) -> Result<AutomorphismSpec> {
    let matrix = realize(algebra, kind, tol)?;
    let m = algebra.dim();
    let apply = |x: &CMatrix| algebra.element(&(&matrix * algebra.coordinates(x)));
    let images: Vec<CMatrix> = algebra.basis().iter().map(apply).collect();
    let basis = algebra.basis();

    for i in 0..m {
        let residual = (apply(&basis[i].adjoint()) - images[i].adjoint()).norm();
        if residual > tol {
            return Err(Error::AutomorphismRejected {
                identity: "alpha(x*) = alpha(x)*",
                left: i,
                right: i,
                residual,
            });
        }
    }
    for i in 0..m {
        for j in 0..m {
            let residual = (apply(&(&basis[i] * &basis[j])) - &images[i] * &images[j]).norm();
            if residual > tol {
                return Err(Error::AutomorphismRejected {
                    identity: "alpha(xy) = alpha(x) alpha(y)",
                    left: i,
                    right: j,
                    residual,
                });
            }
        }
    }
    let inverse = matrix.clone().try_inverse().ok_or(Error::AutomorphismRejected {
        identity: "alpha is invertible",
        left: 0,
        right: 0,
        residual: f64::INFINITY,
    })?;
    let smin = singular_values(&matrix).iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= tol {
        return Err(Error::AutomorphismRejected {
            identity: "alpha is invertible",
            left: 0,
            right: 0,
            residual: smin,
        });
    }
    for i in 0..m {
        let residual = (state.eval(&images[i]) - state.eval(&basis[i])).norm();
        if residual > tol {
            return Err(Error::AutomorphismRejected {
                identity: "mu(alpha(x)) = mu(x)",
                left: i,
                right: i,
                residual,
            });
        }
    }
    Ok(AutomorphismSpec {
        kind: kind.clone(),
        matrix,
        inverse,
    })
}

/// `{x ∈ A : α(x) = x}`.
pub fn fixed_algebra(algebra: &MatrixStarAlgebra, alpha: &AutomorphismSpec, tol: f64) -> Result<MatrixStarAlgebra> {
    let m = algebra.dim();
    let shifted = alpha.matrix() - CMatrix::identity(m, m);
    let elements: Vec<CMatrix> = null_space(&shifted, tol).iter().map(|c| algebra.element(c)).collect();
    let fixed = MatrixStarAlgebra::from_spanning(algebra.ambient_dim(), &elements, tol)?;
    let closure = fixed.closure_residual();
    if closure > 1e3 * tol.max(1e-12) * (m.max(1) as f64) {
        return Err(Error::Internal(format!(
            "fixed-point space not a *-algebra (residual {closure:.3e})"
        )));
    }
    Ok(fixed)
}

/// True when the modular group of the state leaves `subalgebra` invariant.
///
/// The modular group on `A` is `Ad(ρ_A^{it})`, with `ρ_A` the density of the
/// state inside `A`. `Ad(ρ_A)` is diagonalizable with positive eigenvalues,
/// so invariance under it is equivalent to invariance under the whole group.
pub fn modular_invariance_check(
    algebra: &MatrixStarAlgebra,
    subalgebra: &MatrixStarAlgebra,
    state: &StateSpec,
    tol: f64,
) -> bool {
    if state.is_trace() {
        return true;
    }
    modular_invariance_residual(algebra, subalgebra, state) <= tol
}

/// Worst residual of `ρ_A f ρ_A^{-1}` outside the subalgebra, over its basis.
pub fn modular_invariance_residual(
    algebra: &MatrixStarAlgebra,
    subalgebra: &MatrixStarAlgebra,
    state: &StateSpec,
) -> f64 {
    let rho = state.density_in(algebra);
    let rho_inv = hermitian_function(&rho, |x| 1.0 / x);
    subalgebra
        .basis()
        .iter()
        .map(|f| {
            let g = &rho * f * &rho_inv;
            subalgebra.residual(&g) / g.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// `(A, μ, α)`.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub algebra: MatrixStarAlgebra,
    pub state: StateSpec,
    pub alpha: AutomorphismSpec,
}

impl SystemSpec {
    pub fn new(algebra: MatrixStarAlgebra, density: &CMatrix, alpha: &AutomorphismKind, tol: f64) -> Result<Self> {
        if !algebra.contains_unit() {
            return Err(Error::InvalidInput("algebra does not contain the identity".into()));
        }
        let closure = algebra.closure_residual();
        if closure > tol.max(1e-12) * 1e3 {
            return Err(Error::InvalidInput(format!(
                "span is not closed under products and adjoints (residual {closure:.3e})"
            )));
        }
        let state = validate_state(&algebra, density, tol)?;
        let alpha = validate_automorphism(&algebra, alpha, &state, tol)?;
        Ok(SystemSpec { algebra, state, alpha })
    }
}

/// `(F, λ, φ)` inside a system.
#[derive(Clone, Debug)]
pub struct Subsystem {
    algebra: MatrixStarAlgebra,
    lambda: StateSpec,
    phi: CMatrix,
}

impl Subsystem {
    pub fn algebra(&self) -> &MatrixStarAlgebra {
        &self.algebra
    }

    pub fn lambda(&self) -> &StateSpec {
        &self.lambda
    }

    /// Restriction of α on `F`'s basis coordinates.
    pub fn phi(&self) -> &CMatrix {
        &self.phi
    }
}

/// Checks `F ⊆ A`, `1 ∈ F`, closure, `α(F) = F` and modular invariance.
pub fn validate_subsystem(system: &SystemSpec, subalgebra: MatrixStarAlgebra, tol: f64) -> Result<Subsystem> {
    let a = &system.algebra;
    if subalgebra.ambient_dim() != a.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim(),
            found: subalgebra.ambient_dim(),
        });
    }
    let outside = a.containment_residual(&subalgebra);
    if outside > tol {
        return Err(Error::InvalidSubsystem(format!(
            "not contained in the algebra (residual {outside:.3e})"
        )));
    }
    if !subalgebra.contains_unit() {
        return Err(Error::InvalidSubsystem("does not contain the identity".into()));
    }
    let closure = subalgebra.closure_residual();
    if closure > tol.max(1e-12) * 1e3 {
        return Err(Error::InvalidSubsystem(format!(
            "not closed under products and adjoints (residual {closure:.3e})"
        )));
    }
    let k = subalgebra.dim();
    let mut phi = CMatrix::zeros(k, k);
    for (l, f) in subalgebra.basis().iter().enumerate() {
        let image = system.alpha.apply(a, f);
        let residual = subalgebra.residual(&image);
        if residual > tol {
            return Err(Error::InvalidSubsystem(format!(
                "alpha moves basis element {l} out of the subalgebra (residual {residual:.3e})"
            )));
        }
        phi.set_column(l, &subalgebra.coordinates(&image));
    }
    let smin = singular_values(&phi).iter().cloned().fold(f64::INFINITY, f64::min);
    if k > 0 && smin <= tol {
        return Err(Error::InvalidSubsystem("alpha is not onto the subalgebra".into()));
    }
    if !modular_invariance_check(a, &subalgebra, &system.state, tol) {
        return Err(Error::InvalidSubsystem("not invariant under the modular group".into()));
    }
    let lambda = StateSpec {
        density: system.state.density.clone(),
        is_trace: system.state.is_trace() || {
            let b = subalgebra.basis();
            b.iter().enumerate().all(|(i, x)| {
                b[i + 1..]
                    .iter()
                    .all(|y| (system.state.eval(&(x * y)) - system.state.eval(&(y * x))).norm() <= tol)
            })
        },
    };
    Ok(Subsystem {
        algebra: subalgebra,
        lambda,
        phi,
    })
}

/// Matrix unit `e_ij` in `M_d` (zero-based).
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMatrix {
    let mut e = CMatrix::zeros(d, d);
    e[(i, j)] = c64(1.0, 0.0);
    e
}

/// Diagonal matrix with the given complex entries.
pub fn diag(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}
