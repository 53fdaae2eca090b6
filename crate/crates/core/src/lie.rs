//! Matrix Lie groups and their Lie algebras.
//!
//! Every group is carried by a faithful square-matrix representation fixed by
//! its [`GroupTag`]. Elements are re-projected onto the group manifold after
//! every non-exact operation so that the defining relations stay testable at
//! tight tolerances.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Names a matrix Lie group together with its faithful representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupTag {
    /// General linear group on `R^n`.
    Gl(usize),
    /// Affine group of `R^n`, as `(n+1) x (n+1)` matrices with last row `(0,..,0,1)`.
    Aff(usize),
    /// Affine Galileo group over `d` space dimensions, acting on `(t, x_1..x_d, 1)`.
    ///
    /// `Galileo(1)` is the group of `(t, x) -> (t + a, x + b + v t)`.
    Galileo(usize),
    /// Pseudo-orthogonal group preserving `eta = diag(-1 (q times), +1 (p times))`.
    O { p: usize, q: usize },
    /// Projective linear group of `P(n)`, stored as normalized `(n+1) x (n+1)` matrices.
    Pgl(usize),
    /// Special orthogonal group.
    So(usize),
    /// Direct product, represented block-diagonally.
    Product(Box<GroupTag>, Box<GroupTag>),
}

impl GroupTag {
    /// The Galileo group of one-dimensional space, 3x3 on `(t, x, 1)`.
    pub const GALILEO2: GroupTag = GroupTag::Galileo(1);

    /// Size of the square matrices representing the group.
    pub fn matrix_size(&self) -> usize {
        match self {
            GroupTag::Gl(n) | GroupTag::So(n) => *n,
            GroupTag::Aff(n) | GroupTag::Pgl(n) => n + 1,
            GroupTag::Galileo(d) => d + 2,
            GroupTag::O { p, q } => p + q,
            GroupTag::Product(a, b) => a.matrix_size() + b.matrix_size(),
        }
    }

    /// Dimension of the Lie algebra.
    pub fn dim(&self) -> usize {
        match self {
            GroupTag::Gl(n) => n * n,
            GroupTag::Aff(n) => n * (n + 1),
            GroupTag::Galileo(d) => 2 * d + 1,
            GroupTag::O { p, q } => {
                let n = p + q;
                n * (n - 1) / 2
            }
            GroupTag::So(n) => n * (n - 1) / 2,
            GroupTag::Pgl(n) => (n + 1) * (n + 1) - 1,
            GroupTag::Product(a, b) => a.dim() + b.dim(),
        }
    }

    /// True when every algebra element is a nilpotent matrix, so that exp and
    /// log are finite sums.
    pub fn is_nilpotent(&self) -> bool {
        match self {
            GroupTag::Galileo(_) => true,
            GroupTag::Product(a, b) => a.is_nilpotent() && b.is_nilpotent(),
            _ => false,
        }
    }

    /// Diagonal of the invariant form for `O(p, q)`; identity for `SO(n)`.
    pub fn eta(&self) -> Option<DVector<f64>> {
        match self {
            GroupTag::O { p, q } => Some(DVector::from_fn(p + q, |i, _| if i < *q { -1.0 } else { 1.0 })),
            GroupTag::So(n) => Some(DVector::repeat(*n, 1.0)),
            _ => None,
        }
    }

    pub fn identity_matrix(&self) -> DMatrix<f64> {
        let n = self.matrix_size();
        DMatrix::identity(n, n)
    }

    /// Projects a matrix onto the group manifold.
    pub fn project_group(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            GroupTag::Gl(_) => m.clone(),
            GroupTag::Aff(n) => {
                let mut out = m.clone();
                for j in 0..*n {
                    out[(*n, j)] = 0.0;
                }
                out[(*n, *n)] = 1.0;
                out
            }
            GroupTag::Galileo(d) => {
                let n = d + 2;
                let mut out = DMatrix::identity(n, n);
                out[(0, d + 1)] = m[(0, d + 1)];
                for i in 1..=*d {
                    out[(i, 0)] = m[(i, 0)];
                    out[(i, d + 1)] = m[(i, d + 1)];
                }
                out
            }
            GroupTag::O { .. } | GroupTag::So(_) => {
                let eta = self.eta().expect("orthogonal tag");
                pseudo_orthogonal_polar(m, &eta)
            }
            GroupTag::Pgl(_) => normalize_projective_matrix(m).unwrap_or_else(|| m.clone()),
            GroupTag::Product(a, b) => {
                let (na, nb) = (a.matrix_size(), b.matrix_size());
                let top = a.project_group(&m.view((0, 0), (na, na)).into_owned());
                let bottom = b.project_group(&m.view((na, na), (nb, nb)).into_owned());
                block_diag(&top, &bottom)
            }
        }
    }

    /// Projects a matrix onto the Lie algebra (a linear projection).
    pub fn project_algebra(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            GroupTag::Gl(_) => m.clone(),
            GroupTag::Aff(n) => {
                let mut out = m.clone();
                for j in 0..=*n {
                    out[(*n, j)] = 0.0;
                }
                out
            }
            GroupTag::Galileo(d) => {
                let n = d + 2;
                let mut out = DMatrix::zeros(n, n);
                out[(0, d + 1)] = m[(0, d + 1)];
                for i in 1..=*d {
                    out[(i, 0)] = m[(i, 0)];
                    out[(i, d + 1)] = m[(i, d + 1)];
                }
                out
            }
            GroupTag::O { .. } | GroupTag::So(_) => {
                let eta = DMatrix::from_diagonal(&self.eta().expect("orthogonal tag"));
                (m - &eta * m.transpose() * &eta) * 0.5
            }
            GroupTag::Pgl(n) => {
                let size = n + 1;
                let shift = m.trace() / size as f64;
                m - DMatrix::identity(size, size) * shift
            }
            GroupTag::Product(a, b) => {
                let (na, nb) = (a.matrix_size(), b.matrix_size());
                let top = a.project_algebra(&m.view((0, 0), (na, na)).into_owned());
                let bottom = b.project_algebra(&m.view((na, na), (nb, nb)).into_owned());
                block_diag(&top, &bottom)
            }
        }
    }

    /// Violation of the group's defining relations (0 for an exact element).
    ///
    /// For `Pgl` only invertibility is a relation; normalization of the stored
    /// representative is checked by [`is_normalized_projective`].
    pub fn group_residual(&self, m: &DMatrix<f64>) -> f64 {
        let n = self.matrix_size();
        if m.nrows() != n || m.ncols() != n || m.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let invertible = m.clone().lu().determinant().abs() > 0.0;
        if !invertible {
            return f64::INFINITY;
        }
        match self {
            GroupTag::Gl(_) | GroupTag::Pgl(_) => 0.0,
            GroupTag::Aff(_) | GroupTag::Galileo(_) => max_abs(&(m - self.project_group(m))),
            GroupTag::O { .. } => {
                let eta = DMatrix::from_diagonal(&self.eta().expect("orthogonal tag"));
                max_abs(&(m.transpose() * &eta * m - &eta))
            }
            GroupTag::So(k) => {
                let gram = m.transpose() * m - DMatrix::<f64>::identity(*k, *k);
                max_abs(&gram).max((m.clone().lu().determinant() - 1.0).abs())
            }
            GroupTag::Product(a, b) => {
                let (na, nb) = (a.matrix_size(), b.matrix_size());
                let ra = a.group_residual(&m.view((0, 0), (na, na)).into_owned());
                let rb = b.group_residual(&m.view((na, na), (nb, nb)).into_owned());
                ra.max(rb).max(off_block_max(m, na))
            }
        }
    }

    /// Violation of the algebra's defining relations.
    pub fn algebra_residual(&self, m: &DMatrix<f64>) -> f64 {
        let n = self.matrix_size();
        if m.nrows() != n || m.ncols() != n {
            return f64::INFINITY;
        }
        max_abs(&(m - self.project_algebra(m)))
    }

    /// Fixed ordered basis of the Lie algebra.
    ///
    /// For `Galileo(1)` the order is `(eps_v, eps_a, eps_b)`: single 1 entries
    /// at (2,1), (1,3) and (2,3), 1-indexed.
    pub fn algebra_basis(&self) -> Vec<DMatrix<f64>> {
        let n = self.matrix_size();
        let unit = |i: usize, j: usize| {
            let mut m = DMatrix::zeros(n, n);
            m[(i, j)] = 1.0;
            m
        };
        match self {
            GroupTag::Gl(k) => (0..*k).flat_map(|i| (0..*k).map(move |j| (i, j))).map(|(i, j)| unit(i, j)).collect(),
            GroupTag::Aff(k) => {
                let mut out: Vec<_> = (0..*k).flat_map(|i| (0..*k).map(move |j| (i, j))).map(|(i, j)| unit(i, j)).collect();
                out.extend((0..*k).map(|i| unit(i, *k)));
                out
            }
            GroupTag::Galileo(d) => {
                let mut out: Vec<_> = (1..=*d).map(|i| unit(i, 0)).collect();
                out.push(unit(0, d + 1));
                out.extend((1..=*d).map(|i| unit(i, d + 1)));
                out
            }
            GroupTag::O { .. } | GroupTag::So(_) => {
                let eta = self.eta().expect("orthogonal tag");
                let mut out = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        let mut m = DMatrix::zeros(n, n);
                        m[(i, j)] = eta[i];
                        m[(j, i)] = -eta[j];
                        out.push(m);
                    }
                }
                out
            }
            GroupTag::Pgl(_) => {
                let mut out = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            out.push(unit(i, j));
                        }
                    }
                }
                for i in 0..n - 1 {
                    let mut m = unit(i, i);
                    m[(n - 1, n - 1)] = -1.0;
                    out.push(m);
                }
                out
            }
            GroupTag::Product(a, b) => {
                let (na, nb) = (a.matrix_size(), b.matrix_size());
                let za = DMatrix::zeros(na, na);
                let zb = DMatrix::zeros(nb, nb);
                let mut out: Vec<_> = a.algebra_basis().iter().map(|m| block_diag(m, &zb)).collect();
                out.extend(b.algebra_basis().iter().map(|m| block_diag(&za, m)));
                out
            }
        }
    }

    /// Coordinates of an algebra matrix in [`GroupTag::algebra_basis`].
    ///
    /// The input is projected onto the algebra first; extraction is exact
    /// (entry reads, no linear solve).
    pub fn coords(&self, m: &DMatrix<f64>) -> DVector<f64> {
        let m = self.project_algebra(m);
        let n = self.matrix_size();
        let mut out = Vec::with_capacity(self.dim());
        match self {
            GroupTag::Gl(k) => {
                for i in 0..*k {
                    for j in 0..*k {
                        out.push(m[(i, j)]);
                    }
                }
            }
            GroupTag::Aff(k) => {
                for i in 0..*k {
                    for j in 0..*k {
                        out.push(m[(i, j)]);
                    }
                }
                out.extend((0..*k).map(|i| m[(i, *k)]));
            }
            GroupTag::Galileo(d) => {
                out.extend((1..=*d).map(|i| m[(i, 0)]));
                out.push(m[(0, d + 1)]);
                out.extend((1..=*d).map(|i| m[(i, d + 1)]));
            }
            GroupTag::O { .. } | GroupTag::So(_) => {
                let eta = self.eta().expect("orthogonal tag");
                for i in 0..n {
                    for j in (i + 1)..n {
                        out.push(eta[i] * m[(i, j)]);
                    }
                }
            }
            GroupTag::Pgl(_) => {
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            out.push(m[(i, j)]);
                        }
                    }
                }
                out.extend((0..n - 1).map(|i| m[(i, i)]));
            }
            GroupTag::Product(a, b) => {
                let (na, nb) = (a.matrix_size(), b.matrix_size());
                out.extend(a.coords(&m.view((0, 0), (na, na)).into_owned()).iter());
                out.extend(b.coords(&m.view((na, na), (nb, nb)).into_owned()).iter());
            }
        }
        DVector::from_vec(out)
    }

    /// Inverse of [`GroupTag::coords`].
    pub fn from_coords(&self, c: &[f64]) -> DMatrix<f64> {
        let n = self.matrix_size();
        self.algebra_basis()
            .into_iter()
            .zip(c.iter())
            .fold(DMatrix::zeros(n, n), |acc, (b, &ci)| acc + b * ci)
    }

    fn inverse_matrix(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            GroupTag::Galileo(d) => {
                let n = d + 2;
                let mut out = DMatrix::identity(n, n);
                let a = m[(0, d + 1)];
                out[(0, d + 1)] = -a;
                for i in 1..=*d {
                    let v = m[(i, 0)];
                    out[(i, 0)] = -v;
                    out[(i, d + 1)] = -m[(i, d + 1)] + v * a;
                }
                Ok(out)
            }
            GroupTag::O { .. } | GroupTag::So(_) => {
                let eta = DMatrix::from_diagonal(&self.eta().expect("orthogonal tag"));
                Ok(&eta * m.transpose() * &eta)
            }
            _ => m.clone().try_inverse().ok_or(Error::Singular),
        }
    }
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupTag::Gl(n) => write!(f, "GL({n})"),
            GroupTag::Aff(n) => write!(f, "Aff({n})"),
            GroupTag::Galileo(d) => write!(f, "Galileo({})", d + 1),
            GroupTag::O { p, q } => write!(f, "O({p},{q})"),
            GroupTag::Pgl(n) => write!(f, "PGL({n})"),
            GroupTag::So(n) => write!(f, "SO({n})"),
            GroupTag::Product(a, b) => write!(f, "{a}x{b}"),
        }
    }
}

/// An element of a matrix Lie group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    tag: GroupTag,
    mat: DMatrix<f64>,
}

impl GroupElement {
    pub fn identity(tag: &GroupTag) -> Self {
        GroupElement { tag: tag.clone(), mat: tag.identity_matrix() }
    }

    /// Builds an element from a matrix that satisfies the defining relations
    /// up to drift (residual below `1e-6`); the result is re-projected.
    pub fn from_matrix(tag: &GroupTag, mat: DMatrix<f64>) -> Result<Self> {
        check_shape(tag, &mat)?;
        let residual = tag.group_residual(&mat);
        if residual > 1e-6 {
            return Err(Error::NotInGroup { tag: tag.clone(), residual });
        }
        let mat = tag.project_group(&mat);
        Ok(GroupElement { tag: tag.clone(), mat })
    }

    /// Galileo(1) element from its `(v, a, b)` triple.
    pub fn galileo(v: f64, a: f64, b: f64) -> Self {
        let mut mat = DMatrix::identity(3, 3);
        mat[(1, 0)] = v;
        mat[(0, 2)] = a;
        mat[(1, 2)] = b;
        GroupElement { tag: GroupTag::GALILEO2, mat }
    }

    /// Galileo element over `d = v.len()` space dimensions.
    pub fn galileo_nd(v: &[f64], a: f64, b: &[f64]) -> Self {
        assert_eq!(v.len(), b.len(), "boost and translation dimensions differ");
        let d = v.len();
        let mut mat = DMatrix::identity(d + 2, d + 2);
        mat[(0, d + 1)] = a;
        for i in 0..d {
            mat[(i + 1, 0)] = v[i];
            mat[(i + 1, d + 1)] = b[i];
        }
        GroupElement { tag: GroupTag::Galileo(d), mat }
    }

    /// The `(v, a, b)` triple of a Galileo(1) element.
    pub fn galileo_triple(&self) -> Option<[f64; 3]> {
        match self.tag {
            GroupTag::Galileo(1) => Some([self.mat[(1, 0)], self.mat[(0, 2)], self.mat[(1, 2)]]),
            _ => None,
        }
    }

    pub fn tag(&self) -> &GroupTag {
        &self.tag
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn residual(&self) -> f64 {
        self.tag.group_residual(&self.mat)
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        same_tag(&self.tag, &other.tag)?;
        let mat = self.tag.project_group(&(&self.mat * &other.mat));
        Ok(GroupElement { tag: self.tag.clone(), mat })
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        let inv = self.tag.inverse_matrix(&self.mat)?;
        Ok(GroupElement { tag: self.tag.clone(), mat: self.tag.project_group(&inv) })
    }

    /// Applies the representation to a column vector.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.mat * v
    }
}

/// An element of the Lie algebra of a tagged group.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    tag: GroupTag,
    mat: DMatrix<f64>,
}

impl AlgebraElement {
    pub fn zero(tag: &GroupTag) -> Self {
        let n = tag.matrix_size();
        AlgebraElement { tag: tag.clone(), mat: DMatrix::zeros(n, n) }
    }

    /// Builds an element from a matrix within `1e-8` of the algebra.
    pub fn from_matrix(tag: &GroupTag, mat: DMatrix<f64>) -> Result<Self> {
        check_shape(tag, &mat)?;
        let residual = tag.algebra_residual(&mat);
        if residual > 1e-8 * (1.0 + max_abs(&mat)) {
            return Err(Error::NotInGroup { tag: tag.clone(), residual });
        }
        Ok(AlgebraElement { tag: tag.clone(), mat: tag.project_algebra(&mat) })
    }

    /// Projects an arbitrary square matrix onto the algebra.
    pub fn projected(tag: &GroupTag, mat: &DMatrix<f64>) -> Self {
        AlgebraElement { tag: tag.clone(), mat: tag.project_algebra(mat) }
    }

    pub fn from_coords(tag: &GroupTag, c: &[f64]) -> Self {
        assert_eq!(c.len(), tag.dim(), "coordinate count for {tag}");
        AlgebraElement { tag: tag.clone(), mat: tag.from_coords(c) }
    }

    pub fn basis(tag: &GroupTag) -> Vec<AlgebraElement> {
        tag.algebra_basis().into_iter().map(|mat| AlgebraElement { tag: tag.clone(), mat }).collect()
    }

    /// `alpha_v eps_v + alpha_a eps_a + alpha_b eps_b` in the Galileo(1) algebra.
    pub fn galileo(alpha_v: f64, alpha_a: f64, alpha_b: f64) -> Self {
        Self::from_coords(&GroupTag::GALILEO2, &[alpha_v, alpha_a, alpha_b])
    }

    pub fn tag(&self) -> &GroupTag {
        &self.tag
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn coords(&self) -> DVector<f64> {
        self.tag.coords(&self.mat)
    }

    /// Frobenius norm of the representing matrix.
    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn residual(&self) -> f64 {
        self.tag.algebra_residual(&self.mat)
    }

    pub fn scale(&self, s: f64) -> Self {
        AlgebraElement { tag: self.tag.clone(), mat: &self.mat * s }
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.tag, rhs.tag, "adding algebra elements of different groups");
        AlgebraElement { tag: self.tag.clone(), mat: &self.mat + &rhs.mat }
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: AlgebraElement) -> AlgebraElement {
        &self + &rhs
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.tag, rhs.tag, "subtracting algebra elements of different groups");
        AlgebraElement { tag: self.tag.clone(), mat: &self.mat - &rhs.mat }
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: AlgebraElement) -> AlgebraElement {
        &self - &rhs
    }
}

impl Mul<f64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, s: f64) -> AlgebraElement {
        self.scale(s)
    }
}

impl Mul<f64> for AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, s: f64) -> AlgebraElement {
        self.scale(s)
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(-1.0)
    }
}

/// Group composition `g1 g2`.
pub fn compose(g1: &GroupElement, g2: &GroupElement) -> Result<GroupElement> {
    g1.compose(g2)
}

pub fn inverse(g: &GroupElement) -> Result<GroupElement> {
    g.inverse()
}

/// Matrix exponential, projected onto the group.
///
/// Nilpotent algebras sum the (finite) series exactly; otherwise a 13-term
/// Taylor series with scaling and squaring is used.
pub fn exp(xi: &AlgebraElement) -> GroupElement {
    let tag = &xi.tag;
    let raw = if tag.is_nilpotent() { nilpotent_exp(&xi.mat) } else { scaled_exp(&xi.mat) };
    GroupElement { tag: tag.clone(), mat: tag.project_group(&raw) }
}

/// Principal matrix logarithm, projected onto the algebra.
pub fn log(g: &GroupElement) -> Result<AlgebraElement> {
    let tag = &g.tag;
    if tag.is_nilpotent() {
        let n = g.mat.nrows();
        let nil = &g.mat - DMatrix::<f64>::identity(n, n);
        let mut power = nil.clone();
        let mut sum = DMatrix::zeros(n, n);
        for k in 1..=n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += &power * (sign / k as f64);
            power = &power * &nil;
            if power.iter().all(|v| *v == 0.0) {
                break;
            }
        }
        return Ok(AlgebraElement { tag: tag.clone(), mat: tag.project_algebra(&sum) });
    }
    let raw = match principal_log(&g.mat) {
        Ok(l) => l,
        // A projective class has two signed representatives; either may carry the log.
        Err(Error::NoPrincipalLog) if matches!(tag, GroupTag::Pgl(_)) => principal_log(&(-&g.mat))?,
        Err(e) => return Err(e),
    };
    Ok(AlgebraElement { tag: tag.clone(), mat: tag.project_algebra(&raw) })
}

/// True when `g` lies within the declared log radius: spectral radius of `g - I`
/// below `radius`.
pub fn within_log_radius(g: &GroupElement, radius: f64) -> bool {
    let n = g.mat.nrows();
    let shifted = &g.mat - DMatrix::<f64>::identity(n, n);
    let rho = shifted.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    rho < radius
}

/// Adjoint action `g xi g^{-1}`.
pub fn ad(g: &GroupElement, xi: &AlgebraElement) -> Result<AlgebraElement> {
    same_tag(&g.tag, &xi.tag)?;
    let inv = g.tag.inverse_matrix(&g.mat)?;
    let mat = &g.mat * &xi.mat * inv;
    Ok(AlgebraElement { tag: xi.tag.clone(), mat: xi.tag.project_algebra(&mat) })
}

/// Lie bracket `xi eta - eta xi`.
pub fn bracket(xi: &AlgebraElement, eta: &AlgebraElement) -> Result<AlgebraElement> {
    same_tag(&xi.tag, &eta.tag)?;
    let mat = &xi.mat * &eta.mat - &eta.mat * &xi.mat;
    Ok(AlgebraElement { tag: xi.tag.clone(), mat: xi.tag.project_algebra(&mat) })
}

/// Left Maurer-Cartan form: `g^{-1} dg` for a tangent matrix `dg` at `g`.
pub fn maurer_cartan(g: &GroupElement, dg: &DMatrix<f64>) -> Result<AlgebraElement> {
    check_shape(&g.tag, dg)?;
    let inv = g.tag.inverse_matrix(&g.mat)?;
    let mat = inv * dg;
    Ok(AlgebraElement { tag: g.tag.clone(), mat: g.tag.project_algebra(&mat) })
}

/// Random algebra element with basis coordinates uniform in `[-scale, scale]`.
pub fn random_algebra<R: Rng + ?Sized>(tag: &GroupTag, rng: &mut R, scale: f64) -> AlgebraElement {
    let c: Vec<f64> = (0..tag.dim()).map(|_| rng.random_range(-scale..=scale)).collect();
    AlgebraElement::from_coords(tag, &c)
}

/// Random group element `exp(xi)` with `xi` from [`random_algebra`].
pub fn random_element<R: Rng + ?Sized>(tag: &GroupTag, rng: &mut R, scale: f64) -> GroupElement {
    exp(&random_algebra(tag, rng, scale))
}

/// Divides a matrix by its first entry (row-major) of largest magnitude so that
/// entry becomes `+1`. Returns `None` for the zero matrix.
pub fn normalize_projective_matrix(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let pivot = projective_pivot(m.nrows(), m.ncols(), |i, j| m[(i, j)])?;
    Some(m / pivot)
}

/// Same normalization rule for homogeneous vectors.
pub fn normalize_homogeneous(v: &DVector<f64>) -> Option<DVector<f64>> {
    let pivot = projective_pivot(v.len(), 1, |i, _| v[i])?;
    Some(v / pivot)
}

/// True when the largest-magnitude entry of `m` is `+1` (within `tol`).
pub fn is_normalized_projective(m: &DMatrix<f64>, tol: f64) -> bool {
    let largest = max_abs(m);
    let pivot = projective_pivot(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    matches!(pivot, Some(p) if (p - 1.0).abs() <= tol) && (largest - 1.0).abs() <= tol
}

fn projective_pivot(rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> Option<f64> {
    let mut largest = 0.0f64;
    for i in 0..rows {
        for j in 0..cols {
            largest = largest.max(at(i, j).abs());
        }
    }
    if largest == 0.0 || !largest.is_finite() {
        return None;
    }
    // Near-ties resolve to the first entry so the representative is stable under round-off.
    let cutoff = largest * (1.0 - 1e-12);
    for i in 0..rows {
        for j in 0..cols {
            let v = at(i, j);
            if v.abs() >= cutoff {
                return Some(v);
            }
        }
    }
    None
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn off_block_max(m: &DMatrix<f64>, split: usize) -> f64 {
    let n = m.nrows();
    let mut out = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if (i < split) != (j < split) {
                out = out.max(m[(i, j)].abs());
            }
        }
    }
    out
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(na + nb, na + nb);
    out.view_mut((0, 0), (na, na)).copy_from(a);
    out.view_mut((na, na), (nb, nb)).copy_from(b);
    out
}

fn same_tag(a: &GroupTag, b: &GroupTag) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::TagMismatch { left: a.clone(), right: b.clone() })
    }
}

fn check_shape(tag: &GroupTag, m: &DMatrix<f64>) -> Result<()> {
    let n = tag.matrix_size();
    if m.nrows() == n && m.ncols() == n {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected: format!("{n}x{n}"), got: format!("{}x{}", m.nrows(), m.ncols()) })
    }
}

fn nilpotent_exp(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=n {
        term = &term * x / k as f64;
        if term.iter().all(|v| *v == 0.0) {
            break;
        }
        sum += &term;
    }
    sum
}

fn scaled_exp(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let norm = x.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let y = x / 2f64.powi(squarings);
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=13 {
        term = &term * &y / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn principal_log(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    for z in m.complex_eigenvalues().iter() {
        let scale = 1.0 + z.norm();
        if z.im.abs() <= 1e-10 * scale && z.re <= 1e-12 * scale {
            return Err(Error::NoPrincipalLog);
        }
    }
    let identity = DMatrix::<f64>::identity(n, n);
    let mut a = m.clone();
    let mut roots = 0;
    while (&a - &identity).norm() > 0.25 {
        if roots >= 64 {
            return Err(Error::NoPrincipalLog);
        }
        a = sqrtm(&a)?;
        roots += 1;
    }
    let y = &a - &identity;
    let mut sum = DMatrix::zeros(n, n);
    let mut power = y.clone();
    for j in 1..=200 {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += &power * (sign / j as f64);
        power = &power * &y;
        if power.norm() / (j as f64) < 1e-18 {
            break;
        }
    }
    Ok(sum * 2f64.powi(roots))
}

/// Principal square root by the product form of the Denman-Beavers iteration.
fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let identity = DMatrix::<f64>::identity(n, n);
    let mut m = a.clone();
    let mut y = a.clone();
    for _ in 0..100 {
        let m_inv = m.clone().try_inverse().ok_or(Error::NoPrincipalLog)?;
        y = &y * (&identity + &m_inv) * 0.5;
        m = (&identity + (&m + &m_inv) * 0.5) * 0.5;
        if (&m - &identity).norm() < 1e-14 {
            return Ok(y);
        }
    }
    Err(Error::NoPrincipalLog)
}

/// Nearest element of the group preserving `diag(eta)`, by the Newton
/// iteration for the generalized polar decomposition.
fn pseudo_orthogonal_polar(m: &DMatrix<f64>, eta: &DVector<f64>) -> DMatrix<f64> {
    let eta = DMatrix::from_diagonal(eta);
    let mut x = m.clone();
    for _ in 0..30 {
        let Some(inv_t) = x.transpose().try_inverse() else {
            return m.clone();
        };
        let next = (&x + &eta * inv_t * &eta) * 0.5;
        let change = max_abs(&(&next - &x));
        x = next;
        if change < 1e-16 * (1.0 + max_abs(&x)) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn o21() -> GroupTag {
        GroupTag::O { p: 2, q: 1 }
    }

    #[test]
    fn galileo_composition_law() {
        let g = GroupElement::galileo(1.0, 2.0, 3.0).compose(&GroupElement::galileo(4.0, 5.0, 6.0)).unwrap();
        assert_eq!(g.galileo_triple().unwrap(), [5.0, 7.0, 14.0]);
    }

    #[test]
    fn galileo_inverse() {
        let g = GroupElement::galileo(1.0, 2.0, 3.0);
        let inv = g.inverse().unwrap();
        assert_eq!(inv.galileo_triple().unwrap(), [-1.0, -2.0, -1.0]);
        assert_eq!(g.compose(&inv).unwrap(), GroupElement::identity(&GroupTag::GALILEO2));
    }

    #[test]
    fn compose_with_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for tag in [GroupTag::Gl(3), GroupTag::Aff(2), o21(), GroupTag::Pgl(2), GroupTag::So(3)] {
            let g = random_element(&tag, &mut rng, 0.7);
            let e = GroupElement::identity(&tag);
            assert!(max_abs(&(g.compose(&e).unwrap().matrix() - g.matrix())) < 1e-12, "{tag}");
        }
    }

    #[test]
    fn identity_inverse_is_identity() {
        for tag in [GroupTag::GALILEO2, GroupTag::Gl(2), o21()] {
            let e = GroupElement::identity(&tag);
            assert_eq!(e.inverse().unwrap(), e);
        }
    }

    #[test]
    fn random_gl3_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let raw = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(3, 3) * 2.0;
            let g = GroupElement::from_matrix(&GroupTag::Gl(3), raw).unwrap();
            let prod = g.matrix() * g.inverse().unwrap().matrix();
            assert!(max_abs(&(prod - DMatrix::identity(3, 3))) < 1e-10);
        }
    }

    #[test]
    fn tag_mismatch_is_reported() {
        let g = GroupElement::identity(&GroupTag::GALILEO2);
        let h = GroupElement::identity(&GroupTag::Aff(2));
        assert!(matches!(g.compose(&h), Err(Error::TagMismatch { .. })));
        let xi = AlgebraElement::zero(&GroupTag::Aff(2));
        assert!(matches!(ad(&g, &xi), Err(Error::TagMismatch { .. })));
        assert!(matches!(bracket(&AlgebraElement::zero(&GroupTag::GALILEO2), &xi), Err(Error::TagMismatch { .. })));
    }

    #[test]
    fn o21_products_preserve_eta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tag = o21();
        for _ in 0..100 {
            let a = random_element(&tag, &mut rng, 1.0);
            let b = random_element(&tag, &mut rng, 1.0);
            let m = a.compose(&b).unwrap();
            // brute-force M^T eta M
            let eta = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0]));
            let lhs = m.matrix().transpose() * &eta * m.matrix();
            assert!(max_abs(&(lhs - &eta)) < 1e-10);
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        for tag in [GroupTag::GALILEO2, GroupTag::Aff(3), o21(), GroupTag::Pgl(2)] {
            assert_eq!(exp(&AlgebraElement::zero(&tag)), GroupElement::identity(&tag));
        }
    }

    #[test]
    fn galileo_exp_closed_form() {
        let (av, aa, ab) = (0.7, -1.3, 2.1);
        let g = exp(&AlgebraElement::galileo(av, aa, ab));
        // term-by-term series oracle
        let x = AlgebraElement::galileo(av, aa, ab).matrix().clone();
        let mut series = DMatrix::identity(3, 3);
        let mut term = DMatrix::identity(3, 3);
        for k in 1..20 {
            term = &term * &x / k as f64;
            series += &term;
        }
        let [v, a, b] = g.galileo_triple().unwrap();
        assert_eq!([v, a], [av, aa]);
        assert!((b - (ab + av * aa / 2.0)).abs() < 1e-15);
        assert!(max_abs(&(series - g.matrix())) < 1e-15);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for tag in [GroupTag::GALILEO2, GroupTag::Galileo(2), GroupTag::Aff(2), GroupTag::Gl(3), o21(), GroupTag::So(3), GroupTag::Pgl(2)] {
            for _ in 0..100 {
                let mut xi = random_algebra(&tag, &mut rng, 0.5);
                if xi.norm() >= 0.5 {
                    xi = xi.scale(0.45 / xi.norm());
                }
                let back = log(&exp(&xi)).unwrap();
                assert!((&back - &xi).norm() < 1e-9, "{tag}: {}", (&back - &xi).norm());
            }
        }
    }

    #[test]
    fn log_exp_round_trip_far_from_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tag = GroupTag::Aff(2);
        for _ in 0..20 {
            let g = random_element(&tag, &mut rng, 1.0);
            let back = exp(&log(&g).unwrap());
            assert!(max_abs(&(back.matrix() - g.matrix())) < 1e-9);
        }
    }

    #[test]
    fn log_rejects_negative_eigenvalues() {
        // spatial rotation by pi inside O(2,1): eigenvalues -1, -1, 1
        let tag = o21();
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0]));
        let g = GroupElement::from_matrix(&tag, m).unwrap();
        assert_eq!(log(&g), Err(Error::NoPrincipalLog));
    }

    #[test]
    fn ad_galileo_boost_on_eps_a() {
        let g = GroupElement::galileo(2.5, 0.0, 0.0);
        let out = ad(&g, &AlgebraElement::galileo(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(out.coords().as_slice(), &[0.0, 1.0, 2.5]);
    }

    #[test]
    fn ad_identity_and_bracket_compatibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for tag in [GroupTag::GALILEO2, GroupTag::Aff(2), o21(), GroupTag::Pgl(2)] {
            for _ in 0..50 {
                let g = random_element(&tag, &mut rng, 0.8);
                let xi = random_algebra(&tag, &mut rng, 1.0);
                let eta = random_algebra(&tag, &mut rng, 1.0);
                let id = ad(&GroupElement::identity(&tag), &xi).unwrap();
                assert!((&id - &xi).norm() < 1e-14);
                let lhs = ad(&g, &bracket(&xi, &eta).unwrap()).unwrap();
                let rhs = bracket(&ad(&g, &xi).unwrap(), &ad(&g, &eta).unwrap()).unwrap();
                assert!((&lhs - &rhs).norm() < 1e-10, "{tag}");
            }
        }
    }

    #[test]
    fn galileo_bracket_table() {
        let [ev, ea, eb] = [AlgebraElement::galileo(1.0, 0.0, 0.0), AlgebraElement::galileo(0.0, 1.0, 0.0), AlgebraElement::galileo(0.0, 0.0, 1.0)];
        assert_eq!(bracket(&ev, &ea).unwrap(), eb);
        assert_eq!(bracket(&ev, &ev).unwrap(), AlgebraElement::zero(&GroupTag::GALILEO2));
    }

    #[test]
    fn jacobi_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for tag in [GroupTag::Gl(3), o21(), GroupTag::GALILEO2] {
            for _ in 0..50 {
                let [a, b, c] = [0, 1, 2].map(|_| random_algebra(&tag, &mut rng, 1.0));
                let j = bracket(&a, &bracket(&b, &c).unwrap()).unwrap()
                    + bracket(&b, &bracket(&c, &a).unwrap()).unwrap()
                    + bracket(&c, &bracket(&a, &b).unwrap()).unwrap();
                assert!(j.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn maurer_cartan_along_one_parameter_subgroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tag = GroupTag::Aff(2);
        let xi = random_algebra(&tag, &mut rng, 1.0);
        assert_eq!(maurer_cartan(&GroupElement::identity(&tag), xi.matrix()).unwrap(), xi);
        let t = 0.3;
        let h = 1e-5;
        let g = exp(&xi.scale(t));
        let gdot = (exp(&xi.scale(t + h)).matrix() - exp(&xi.scale(t - h)).matrix()) / (2.0 * h);
        let mc = maurer_cartan(&g, &gdot).unwrap();
        assert!((&mc - &xi).norm() < 1e-6);
    }

    #[test]
    fn maurer_cartan_left_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tag = o21();
        let g = random_element(&tag, &mut rng, 1.0);
        let h = random_element(&tag, &mut rng, 1.0);
        let dg = g.matrix() * random_algebra(&tag, &mut rng, 1.0).matrix();
        let a = maurer_cartan(&g, &dg).unwrap();
        let b = maurer_cartan(&h.compose(&g).unwrap(), &(h.matrix() * &dg)).unwrap();
        assert!((&a - &b).norm() < 1e-10);
    }

    #[test]
    fn closure_under_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for tag in [GroupTag::GALILEO2, GroupTag::Aff(2), o21(), GroupTag::So(3), GroupTag::Pgl(2), GroupTag::Product(Box::new(GroupTag::So(2)), Box::new(GroupTag::GALILEO2))] {
            for _ in 0..1000 {
                let a = random_element(&tag, &mut rng, 1.0);
                let b = random_element(&tag, &mut rng, 1.0);
                let c = a.compose(&b).unwrap();
                assert!(c.residual() < 1e-9, "{tag}: {}", c.residual());
                if let GroupTag::Pgl(_) = tag {
                    assert!(is_normalized_projective(c.matrix(), 1e-15));
                }
            }
        }
    }

    #[test]
    fn pgl_representative_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tag = GroupTag::Pgl(2);
        let g = random_element(&tag, &mut rng, 1.0);
        for s in [-4.0, 0.25, 8.0] {
            let h = GroupElement::from_matrix(&tag, g.matrix() * s).unwrap();
            assert_eq!(h, g);
        }
        let h = GroupElement::from_matrix(&tag, g.matrix() * -3.0).unwrap();
        assert!(max_abs(&(h.matrix() - g.matrix())) < 1e-15);
    }

    #[test]
    fn galileo_triple_extraction_is_exact() {
        let g = GroupElement::galileo(0.1, -2.75, 1e-7);
        let rebuilt = GroupElement::from_matrix(&GroupTag::GALILEO2, g.matrix().clone()).unwrap();
        let [v, a, b] = rebuilt.galileo_triple().unwrap();
        assert_eq!(GroupElement::galileo(v, a, b), g);
    }

    #[test]
    fn basis_coordinates_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for tag in [GroupTag::Gl(2), GroupTag::Aff(2), GroupTag::Galileo(2), o21(), GroupTag::So(3), GroupTag::Pgl(3), GroupTag::Product(Box::new(GroupTag::So(2)), Box::new(GroupTag::Aff(1)))] {
            assert_eq!(tag.algebra_basis().len(), tag.dim());
            let c: Vec<f64> = (0..tag.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = tag.from_coords(&c);
            assert!(tag.algebra_residual(&m) < 1e-15);
            let back = tag.coords(&m);
            for (x, y) in back.iter().zip(&c) {
                assert!((x - y).abs() < 1e-15, "{tag}");
            }
        }
    }
}
