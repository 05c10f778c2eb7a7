//! Dense complex linear algebra: orthonormal bases, projectors, spectral
//! decomposition of unitaries and least-squares span membership.
//!
//! Everything here is a pure function of its inputs. Matrices are
//! `nalgebra` dense matrices of `Complex64`; vectorization is column-major,
//! matching `nalgebra`'s storage.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative singular-value cutoff used for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Distance on the unit circle below which eigenvalues are merged.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
/// Residual above which a vector is reported as outside a span.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

const UNITARITY_TOL: f64 = 1e-6;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Hilbert-Schmidt inner product `tr(a* b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `‖U*U − I‖` in Frobenius norm.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Columns of `m` as owned vectors.
pub fn columns(m: &CMatrix) -> Vec<CVector> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

pub fn from_columns(rows: usize, cols: &[CVector]) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
///
/// The input is symmetrized first, so small anti-Hermitian noise is ignored.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (h + h.adjoint()) * c64(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Applies `f` to the eigenvalues of a Hermitian positive matrix.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let s = c64(f(vals[j]), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    scaled * vecs.adjoint()
}

/// Orthonormal basis of a subspace of `C^ambient_dim`.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<CVector>,
    tol: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Subspace {
            ambient_dim,
            basis: Vec::new(),
            tol,
        }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        let basis = (0..ambient_dim)
            .map(|i| {
                let mut v = CVector::zeros(ambient_dim);
                v[i] = c64(1.0, 0.0);
                v
            })
            .collect();
        Subspace {
            ambient_dim,
            basis,
            tol,
        }
    }

    /// Wraps vectors that are already orthonormal.
    pub fn from_orthonormal(ambient_dim: usize, basis: Vec<CVector>, tol: f64) -> Self {
        debug_assert!(basis.iter().all(|v| v.len() == ambient_dim));
        Subspace {
            ambient_dim,
            basis,
            tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CVector] {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn basis_matrix(&self) -> CMatrix {
        from_columns(self.ambient_dim, &self.basis)
    }

    pub fn project(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.ambient_dim);
        for q in &self.basis {
            out += q * q.dotc(v);
        }
        out
    }

    /// Distance from `v` to the subspace.
    pub fn distance(&self, v: &CVector) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Largest distance from a basis vector of `other` to `self`; zero when
    /// `other ⊆ self`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        other.basis.iter().map(|v| self.distance(v)).fold(0.0, f64::max)
    }

    /// Symmetric containment residual; zero when the spans coincide.
    pub fn equality_residual(&self, other: &Subspace) -> f64 {
        let rank_gap: f64 = if self.rank() == other.rank() { 0.0 } else { 1.0 };
        rank_gap
            .max(self.containment_residual(other))
            .max(other.containment_residual(self))
    }

    /// `max |⟨q_i, q_j⟩ − δ_ij|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dotc(b) - c64(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Orthonormal basis for the span of `vectors`.
///
/// Pivoted Gram-Schmidt with reorthogonalization: the vector with the
/// largest residual is taken next, and the rank is reached once every
/// residual is at most `tol` times the largest input norm. An input which
/// is already orthonormal comes back unchanged.
pub fn orthonormalize(ambient_dim: usize, vectors: &[CVector], tol: f64) -> Result<Subspace> {
    if let Some(bad) = vectors.iter().find(|v| v.len() != ambient_dim) {
        return Err(Error::DimensionMismatch {
            expected: ambient_dim,
            found: bad.len(),
        });
    }
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(Subspace::from_orthonormal(
        ambient_dim,
        gram_schmidt(ambient_dim, vectors, tol * scale),
        tol,
    ))
}

/// Pivoted Gram-Schmidt keeping residuals above the absolute `cutoff`.
fn gram_schmidt(ambient_dim: usize, vectors: &[CVector], cutoff: f64) -> Vec<CVector> {
    let mut residuals: Vec<CVector> = vectors.to_vec();
    let mut used = vec![false; vectors.len()];
    let mut basis: Vec<CVector> = Vec::new();
    while basis.len() < ambient_dim {
        let (pick, norm) = residuals
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, r)| (i, r.norm()))
            .fold((usize::MAX, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pick == usize::MAX || norm <= cutoff {
            break;
        }
        used[pick] = true;
        let mut q = residuals[pick].clone();
        for b in &basis {
            q -= b * b.dotc(&q);
        }
        let norm = q.norm();
        if norm <= cutoff {
            continue;
        }
        q /= c64(norm, 0.0);
        for (i, r) in residuals.iter_mut().enumerate() {
            if !used[i] {
                let coeff = q.dotc(r);
                *r -= &q * coeff;
            }
        }
        basis.push(q);
    }
    basis
}

/// Thin singular value decomposition `A = U Σ V*`, singular values in
/// descending order.
///
/// Computed from the Hermitian eigenproblem of `[[0, A], [A*, 0]]`, whose
/// eigenvalues are `±σ`. Singular vectors belonging to singular values at
/// the noise level are not meaningful.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(a: &CMatrix) -> Svd {
    let (r, c) = a.shape();
    let k = r.min(c);
    let n = r + c;
    let mut h = CMatrix::zeros(n, n);
    h.view_mut((0, r), (r, c)).copy_from(a);
    h.view_mut((r, 0), (c, r)).copy_from(&a.adjoint());
    let (vals, vecs) = hermitian_eigen(&h);
    let mut u = CMatrix::zeros(r, k);
    let mut v = CMatrix::zeros(c, k);
    let mut singular_values = Vec::with_capacity(k);
    let root2 = c64(2f64.sqrt(), 0.0);
    for j in 0..k {
        let col = n - 1 - j;
        singular_values.push(vals[col].max(0.0));
        let x = vecs.column(col);
        u.set_column(j, &(x.rows(0, r) * root2));
        v.set_column(j, &(x.rows(r, c) * root2));
    }
    Svd { u, singular_values, v }
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    svd(a).singular_values
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let (vals, _) = hermitian_eigen(&(a.adjoint() * a));
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Moore-Penrose inverse, dropping singular values at most `rel_tol`
/// times the largest.
pub fn pseudo_inverse(a: &CMatrix, rel_tol: f64) -> CMatrix {
    let d = svd(a);
    let smax = d.singular_values.first().copied().unwrap_or(0.0);
    let mut out = CMatrix::zeros(a.ncols(), a.nrows());
    for (j, &s) in d.singular_values.iter().enumerate() {
        if s > rel_tol * smax && s > 0.0 {
            out += d.v.column(j) * d.u.column(j).adjoint() * c64(1.0 / s, 0.0);
        }
    }
    out
}

/// Orthogonal projector onto `subspace`.
pub fn projector(subspace: &Subspace) -> CMatrix {
    let b = subspace.basis_matrix();
    &b * b.adjoint()
}

/// Incremental orthonormal basis used when spans grow one vector at a time.
#[derive(Clone, Debug)]
pub(crate) struct SpanBuilder {
    dim: usize,
    basis: Vec<CVector>,
    tol: f64,
}

impl SpanBuilder {
    pub(crate) fn new(dim: usize, tol: f64) -> Self {
        SpanBuilder {
            dim,
            basis: Vec::new(),
            tol,
        }
    }

    /// Adds the component of `v` orthogonal to the current span when it is
    /// larger than `tol·‖v‖`; returns the new basis vector.
    pub(crate) fn try_add(&mut self, v: &CVector) -> Option<CVector> {
        let scale = v.norm();
        if scale == 0.0 || self.basis.len() == self.dim {
            return None;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.basis {
                let coeff = q.dotc(&r);
                r -= q * coeff;
            }
        }
        let norm = r.norm();
        if norm <= self.tol * scale {
            return None;
        }
        r /= c64(norm, 0.0);
        self.basis.push(r.clone());
        Some(r)
    }

    pub(crate) fn into_basis(self) -> Vec<CVector> {
        self.basis
    }
}

/// Spectral projectors of a unitary, eigenvalues clustered on the circle.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<C64>,
    members: Vec<Vec<C64>>,
    bases: Vec<CMatrix>,
    projectors: Vec<CMatrix>,
    cluster_tol: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cluster representatives, on the unit circle.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// Orthonormal eigenvector columns for each cluster.
    pub fn bases(&self) -> &[CMatrix] {
        &self.bases
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Index of the cluster containing a raw eigenvalue within the
    /// clustering tolerance of `z`.
    pub fn cluster_near(&self, z: C64) -> Option<usize> {
        self.members
            .iter()
            .position(|m| m.iter().any(|w| (w - z).norm() < self.cluster_tol))
    }

    pub fn fixed_cluster(&self) -> Option<usize> {
        self.cluster_near(c64(1.0, 0.0))
    }

    /// Largest distance from a raw eigenvalue to its cluster representative
    /// (to 1 for the fixed cluster).
    pub fn spreads(&self) -> Vec<f64> {
        let fixed = self.fixed_cluster();
        self.members
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let centre = if Some(k) == fixed {
                    c64(1.0, 0.0)
                } else {
                    self.eigenvalues[k]
                };
                m.iter().map(|w| (w - centre).norm()).fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn max_spread(&self) -> f64 {
        self.spreads().into_iter().fold(0.0, f64::max)
    }

    /// Projector onto the eigenvalue-1 space (zero if 1 is not in the
    /// spectrum).
    pub fn fixed_projector(&self) -> CMatrix {
        match self.fixed_cluster() {
            Some(k) => self.projectors[k].clone(),
            None => CMatrix::zeros(self.dim, self.dim),
        }
    }

    pub fn fixed_space(&self) -> Subspace {
        match self.fixed_cluster() {
            Some(k) => Subspace::from_orthonormal(self.dim, columns(&self.bases[k]), self.cluster_tol),
            None => Subspace::zero(self.dim, self.cluster_tol),
        }
    }

    /// `Σ θ E_θ`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (theta, e) in self.eigenvalues.iter().zip(&self.projectors) {
            out += e * *theta;
        }
        out
    }
}

fn rayleigh(u: &CMatrix, v: &CVector) -> C64 {
    v.dotc(&(u * v))
}

/// Spectral decomposition of a unitary matrix.
///
/// `U` is normal, so its Hermitian parts `(U + U*)/2` and `(U − U*)/2i`
/// commute. The first is diagonalized, its near-degenerate eigenspaces are
/// split by the second, and the resulting eigenvalues are merged into
/// connected components under distance `cluster_tol`.
pub fn unitary_spectrum(u: &CMatrix, cluster_tol: f64) -> Result<SpectralDecomposition> {
    let n = u.nrows();
    if u.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.ncols(),
        });
    }
    let residual = unitarity_residual(u);
    if residual > UNITARITY_TOL * (n.max(1) as f64).sqrt() {
        return Err(Error::NotUnitary { residual });
    }
    if n == 0 {
        return Ok(SpectralDecomposition {
            dim: 0,
            eigenvalues: Vec::new(),
            members: Vec::new(),
            bases: Vec::new(),
            projectors: Vec::new(),
            cluster_tol,
        });
    }

    let ud = u.adjoint();
    let re_part = (u + &ud) * c64(0.5, 0.0);
    let im_part = (u - &ud) * c64(0.0, -0.5);
    let (vals, vecs) = hermitian_eigen(&re_part);

    let mut eig: Vec<(C64, CVector)> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] < cluster_tol {
            end += 1;
        }
        let block = vecs.columns(start, end - start).into_owned();
        if end - start == 1 {
            let v = block.column(0).into_owned();
            eig.push((rayleigh(u, &v), v));
        } else {
            let restricted = block.adjoint() * &im_part * &block;
            let (_, rot) = hermitian_eigen(&restricted);
            let rotated = &block * rot;
            for j in 0..rotated.ncols() {
                let v = rotated.column(j).into_owned();
                eig.push((rayleigh(u, &v), v));
            }
        }
        start = end;
    }

    // connected components under |z_i − z_j| < cluster_tol
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let unit: Vec<C64> = eig
        .iter()
        .map(|(z, _)| if z.norm() > 0.0 { z / z.norm() } else { c64(1.0, 0.0) })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if (unit[i] - unit[j]).norm() < cluster_tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_index: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_index[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_index[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }

    let mut clusters: Vec<(C64, Vec<C64>, CMatrix)> = groups
        .into_iter()
        .map(|g| {
            let sum: C64 = g.iter().map(|&i| unit[i]).sum();
            let rep = if sum.norm() > 0.0 { sum / sum.norm() } else { unit[g[0]] };
            let members = g.iter().map(|&i| unit[i]).collect();
            let cols: Vec<CVector> = g.iter().map(|&i| eig[i].1.clone()).collect();
            (rep, members, from_columns(n, &cols))
        })
        .collect();
    clusters.sort_by(|a, b| a.0.arg().total_cmp(&b.0.arg()));

    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut members = Vec::with_capacity(clusters.len());
    let mut bases = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    for (rep, m, basis) in clusters {
        projectors.push(&basis * basis.adjoint());
        eigenvalues.push(rep);
        members.push(m);
        bases.push(basis);
    }
    Ok(SpectralDecomposition {
        dim: n,
        eigenvalues,
        members,
        bases,
        projectors,
        cluster_tol,
    })
}

/// Least-squares coefficients of `v` in terms of `basis`.
#[derive(Clone, Debug)]
pub struct SpanSolution {
    pub coefficients: CVector,
    pub residual: f64,
    pub in_span: bool,
}

pub fn solve_in_span(v: &CVector, basis: &[CVector], tol: f64) -> Result<SpanSolution> {
    let n = v.len();
    if let Some(bad) = basis.iter().find(|b| b.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    if basis.is_empty() {
        let residual = v.norm();
        return Ok(SpanSolution {
            coefficients: CVector::zeros(0),
            residual,
            in_span: residual <= tol,
        });
    }
    let b = from_columns(n, basis);
    let coefficients = pseudo_inverse(&b, 1e-12) * v;
    let residual = (v - &b * &coefficients).norm();
    Ok(SpanSolution {
        coefficients,
        residual,
        in_span: residual <= tol,
    })
}

/// Orthonormal basis of `{x : m x = 0}`: the orthogonal complement of the
/// row space, whose rank is decided as in [`orthonormalize`].
pub fn null_space(m: &CMatrix, tol: f64) -> Vec<CVector> {
    let cols = m.ncols();
    if cols == 0 {
        return Vec::new();
    }
    let rows: Vec<CVector> = (0..m.nrows()).map(|i| m.row(i).adjoint()).collect();
    let scale = rows.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let row_space = Subspace::from_orthonormal(cols, gram_schmidt(cols, &rows, tol * scale), tol);
    if row_space.rank() == 0 {
        return columns(&CMatrix::identity(cols, cols));
    }
    let complement = CMatrix::identity(cols, cols) - projector(&row_space);
    let (vals, vecs) = hermitian_eigen(&complement);
    (0..cols)
        .filter(|&k| vals[k] > 0.5)
        .map(|k| vecs.column(k).into_owned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(entries: &[f64]) -> CVector {
        CVector::from_iterator(entries.len(), entries.iter().map(|&x| c64(x, 0.0)))
    }

    fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        g.qr().q()
    }

    #[test]
    fn collinear_vectors_have_rank_one() {
        let s = orthonormalize(2, &[v(&[1.0, 0.0]), v(&[2.0, 0.0])], 1e-9).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.basis()[0].clone() - v(&[1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn empty_input_gives_zero_subspace() {
        let s = orthonormalize(3, &[], 1e-9).unwrap();
        assert_eq!(s.rank(), 0);
        assert_eq!(s.ambient_dim(), 3);
    }

    #[test]
    fn orthonormal_input_is_kept() {
        let r = 1.0 / 2f64.sqrt();
        let input = [v(&[r, r]), v(&[r, -r])];
        let s = orthonormalize(2, &input, 1e-9).unwrap();
        assert_eq!(s.rank(), 2);
        for (q, x) in s.basis().iter().zip(&input) {
            // equal up to a unit phase
            assert!((q.dotc(x).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = orthonormalize(2, &[v(&[1.0, 0.0, 0.0])], 1e-9).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn projector_examples() {
        let p = projector(&orthonormalize(2, &[v(&[1.0, 0.0])], 1e-9).unwrap());
        assert!(max_abs(&(p - CMatrix::from_diagonal(&v(&[1.0, 0.0])))) < 1e-15);

        let full = projector(&Subspace::full(3, 1e-9));
        assert!(max_abs(&(full - CMatrix::identity(3, 3))) < 1e-15);

        let p = projector(&orthonormalize(2, &[v(&[1.0, 1.0])], 1e-9).unwrap());
        assert!(max_abs(&(p - CMatrix::from_element(2, 2, c64(0.5, 0.0)))) < 1e-15);
    }

    #[test]
    fn spectrum_examples() {
        let s = unitary_spectrum(&CMatrix::identity(3, 3), 1e-8).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.eigenvalues()[0] - c64(1.0, 0.0)).norm() < 1e-14);
        assert!(max_abs(&(s.projectors()[0].clone() - CMatrix::identity(3, 3))) < 1e-14);

        let s = unitary_spectrum(&CMatrix::from_diagonal(&v(&[1.0, -1.0])), 1e-8).unwrap();
        assert_eq!(s.len(), 2);
        let plus = s.cluster_near(c64(1.0, 0.0)).unwrap();
        let minus = s.cluster_near(c64(-1.0, 0.0)).unwrap();
        assert!(max_abs(&(s.projectors()[plus].clone() - CMatrix::from_diagonal(&v(&[1.0, 0.0])))) < 1e-14);
        assert!(max_abs(&(s.projectors()[minus].clone() - CMatrix::from_diagonal(&v(&[0.0, 1.0])))) < 1e-14);

        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 1.0), c64(0.0, 1.0)]));
        let s = unitary_spectrum(&d, 1e-8).unwrap();
        let one = s.cluster_near(c64(1.0, 0.0)).unwrap();
        let i = s.cluster_near(c64(0.0, 1.0)).unwrap();
        assert_eq!(s.ranks()[one], 1);
        assert_eq!(s.ranks()[i], 2);
    }

    #[test]
    fn non_unitary_input_is_rejected() {
        let m = CMatrix::from_diagonal(&v(&[1.0, 2.0]));
        assert!(matches!(unitary_spectrum(&m, 1e-8), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn numerically_split_degenerate_eigenvalues_merge() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = random_unitary(6, &mut rng);
        let phases = [0.3, 0.3 + 1e-11, 0.3 - 2e-11, 2.0, 2.0, -1.0];
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            6,
            phases.iter().map(|&t| C64::from_polar(1.0, t)),
        ));
        let u = &q * d * q.adjoint();
        let s = unitary_spectrum(&u, 1e-8).unwrap();
        assert_eq!(s.len(), 3);
        assert!((s.reconstruct() - &u).norm() < 1e-7);
    }

    #[test]
    fn solve_in_span_examples() {
        let e1 = v(&[1.0, 0.0]);
        let e2 = v(&[0.0, 1.0]);
        let s = solve_in_span(&v(&[1.0, 1.0]), &[e1.clone(), e2], 1e-8).unwrap();
        assert!((s.coefficients - v(&[1.0, 1.0])).norm() < 1e-14);
        assert!(s.in_span && s.residual < 1e-14);

        let s = solve_in_span(&v(&[0.0, 1.0]), &[e1], 1e-8).unwrap();
        assert!((s.residual - 1.0).abs() < 1e-14);
        assert!(!s.in_span);

        let s = solve_in_span(&v(&[2.0, 2.0]), &[v(&[1.0, 1.0])], 1e-8).unwrap();
        assert!((s.coefficients[0] - c64(2.0, 0.0)).norm() < 1e-14);
        assert!(s.residual < 1e-14);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = CMatrix::from_row_slice(1, 3, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let n = null_space(&m, 1e-9);
        assert_eq!(n.len(), 2);
        for x in &n {
            assert!((&m * x).norm() < 1e-14);
        }
    }

    #[test]
    fn span_builder_skips_dependent_vectors() {
        let mut b = SpanBuilder::new(3, 1e-9);
        assert!(b.try_add(&v(&[1.0, 0.0, 0.0])).is_some());
        assert!(b.try_add(&v(&[2.0, 0.0, 0.0])).is_none());
        assert!(b.try_add(&v(&[1.0, 1.0, 0.0])).is_some());
        assert_eq!(b.basis.len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn projectors_are_hermitian_idempotent(seed in any::<u64>(), dim in 1usize..8, count in 0usize..8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let vecs: Vec<CVector> = (0..count)
                    .map(|_| CVector::from_fn(dim, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
                    .collect();
                let tol = 1e-9;
                let s = orthonormalize(dim, &vecs, tol).unwrap();
                let q = projector(&s);
                prop_assert!((&q * &q - &q).norm() <= 10.0 * tol);
                prop_assert!(hermiticity_residual(&q) <= 10.0 * tol);
                let again = orthonormalize(dim, s.basis(), tol).unwrap();
                prop_assert_eq!(again.rank(), s.rank());
            }

            #[test]
            fn unitary_spectrum_reconstructs(seed in any::<u64>(), dim in 1usize..=32) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = random_unitary(dim, &mut rng);
                let tol = 1e-8;
                let s = unitary_spectrum(&u, tol).unwrap();
                prop_assert!((s.reconstruct() - &u).norm() <= 10.0 * tol);
                let mut total = CMatrix::zeros(dim, dim);
                for e in s.projectors() {
                    prop_assert!((e * e - e).norm() <= 10.0 * tol);
                    prop_assert!(hermiticity_residual(e) <= 10.0 * tol);
                    total += e;
                }
                prop_assert!((total - CMatrix::identity(dim, dim)).norm() <= 10.0 * tol);
            }
        }
    }
}
