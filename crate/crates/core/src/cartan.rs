//! Cartan structures on trivialized bundles with homogeneous fibre `G/G'`.
//!
//! A structure carries a section `x -> s(x)` of the principal bundle whose
//! image lies in the reduction `H'`; then `s0(x) = s(x) o` and
//! `H' = {(x, s(x) g') : g' in G'}`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lie::{self, AlgebraElement, GroupElement, GroupTag};
use crate::principal::{full_form, LocalConnection, PrincipalPoint, PrincipalTangent};
use crate::settings::NumericSettings;
use crate::transport::{horizontal_lift_with, FiberAction, LiftOptions, SmoothPath};

/// The homogeneous model spaces, each with `o` at chart coordinate zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// `R^n` under `Aff(n)`; `G' = GL(n)`.
    Affine { n: usize },
    /// Space-time `(t, x_1..x_d)` under `Galileo(d)`; `G'` = boosts.
    Galilean { d: usize },
    /// `RP^n` under `PGL(n+1)` in the chart `x_0 != 0`; `G'` fixes `[1, 0, .., 0]`.
    Projective { n: usize },
    /// Moebius space `S^n` under `O(n+1, 1)` in stereographic coordinates.
    Mobius { n: usize },
}

/// A homogeneous space `G/G'` with a chart around the base point `o`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSpec {
    kind: SpaceKind,
    tag: GroupTag,
    sub_basis: Vec<AlgebraElement>,
    complement: Vec<AlgebraElement>,
    /// Solves for coordinates in the adapted basis `sub_basis ++ complement`.
    adapted_inverse: DMatrix<f64>,
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

/// Moebius generators for `c = e_i`: `P` moves `o`, `K` fixes it.
fn mobius_pk(n: usize, i: usize, special: bool) -> DMatrix<f64> {
    let s = n + 2;
    let mut m = DMatrix::zeros(s, s);
    m[(0, i + 1)] = 1.0;
    m[(i + 1, 0)] = 1.0;
    if special {
        m[(i + 1, n + 1)] = -1.0;
        m[(n + 1, i + 1)] = 1.0;
    } else {
        m[(i + 1, n + 1)] = 1.0;
        m[(n + 1, i + 1)] = -1.0;
    }
    m
}

impl HomogeneousSpec {
    pub fn new(kind: SpaceKind) -> Self {
        let (tag, sub, comp): (GroupTag, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) = match kind {
            SpaceKind::Affine { n } => {
                assert!(n >= 1);
                let s = n + 1;
                let sub = (0..n).flat_map(|i| (0..n).map(move |j| unit(s, i, j))).collect();
                (GroupTag::Aff(n), sub, (0..n).map(|i| unit(s, i, n)).collect())
            }
            SpaceKind::Galilean { d } => {
                assert!(d >= 1);
                let s = d + 2;
                let sub = (1..=d).map(|i| unit(s, i, 0)).collect();
                let mut comp = vec![unit(s, 0, d + 1)];
                comp.extend((1..=d).map(|i| unit(s, i, d + 1)));
                (GroupTag::Galileo(d), sub, comp)
            }
            SpaceKind::Projective { n } => {
                assert!(n >= 1);
                let tag = GroupTag::Pgl(n);
                let sub = tag.algebra_basis().into_iter().filter(|m| (1..=n).all(|i| m[(i, 0)] == 0.0)).collect();
                (tag, sub, (1..=n).map(|i| unit(n + 1, i, 0)).collect())
            }
            SpaceKind::Mobius { n } => {
                assert!(n >= 1);
                let s = n + 2;
                let mut sub = Vec::new();
                for i in 1..=n {
                    for j in (i + 1)..=n {
                        sub.push(unit(s, i, j) - unit(s, j, i));
                    }
                }
                sub.push(unit(s, 0, n + 1) + unit(s, n + 1, 0));
                sub.extend((0..n).map(|i| mobius_pk(n, i, true)));
                (GroupTag::O { p: n + 1, q: 1 }, sub, (0..n).map(|i| mobius_pk(n, i, false)).collect())
            }
        };
        let sub_basis: Vec<_> = sub.iter().map(|m| AlgebraElement::from_matrix(&tag, m.clone()).expect("subalgebra generator")).collect();
        let complement: Vec<_> = comp.iter().map(|m| AlgebraElement::from_matrix(&tag, m.clone()).expect("complement generator")).collect();
        let cols: Vec<DVector<f64>> = sub_basis.iter().chain(&complement).map(|e| e.coords()).collect();
        let adapted = DMatrix::from_columns(&cols);
        assert_eq!(adapted.nrows(), adapted.ncols(), "dim g = dim g' + dim F");
        let adapted_inverse = adapted.try_inverse().expect("adapted basis spans the algebra");
        HomogeneousSpec { kind, tag, sub_basis, complement, adapted_inverse }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn tag(&self) -> &GroupTag {
        &self.tag
    }

    pub fn fiber_dim(&self) -> usize {
        self.complement.len()
    }

    /// Chart coordinates of the base point `o`.
    pub fn origin(&self) -> DVector<f64> {
        DVector::zeros(self.fiber_dim())
    }

    /// Basis of the isotropy algebra `g'`.
    pub fn subalgebra_basis(&self) -> &[AlgebraElement] {
        &self.sub_basis
    }

    /// Fixed complement of `g'`, ordered to match chart directions at `o`.
    pub fn complement_basis(&self) -> &[AlgebraElement] {
        &self.complement
    }

    /// Homogeneous representative of a chart point.
    pub fn lift_point(&self, y: &DVector<f64>) -> DVector<f64> {
        let k = self.fiber_dim();
        match self.kind {
            SpaceKind::Affine { .. } | SpaceKind::Galilean { .. } => DVector::from_fn(k + 1, |i, _| if i < k { y[i] } else { 1.0 }),
            SpaceKind::Projective { .. } => DVector::from_fn(k + 1, |i, _| if i == 0 { 1.0 } else { y[i - 1] }),
            SpaceKind::Mobius { .. } => {
                let r2 = y.norm_squared();
                DVector::from_fn(k + 2, |i, _| match i {
                    0 => 0.5 * (1.0 + r2),
                    i if i == k + 1 => 0.5 * (1.0 - r2),
                    i => y[i - 1],
                })
            }
        }
    }

    fn lift_differential(&self, y: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let k = self.fiber_dim();
        match self.kind {
            SpaceKind::Affine { .. } | SpaceKind::Galilean { .. } => DVector::from_fn(k + 1, |i, _| if i < k { v[i] } else { 0.0 }),
            SpaceKind::Projective { .. } => DVector::from_fn(k + 1, |i, _| if i == 0 { 0.0 } else { v[i - 1] }),
            SpaceKind::Mobius { .. } => {
                let yv = y.dot(v);
                DVector::from_fn(k + 2, |i, _| match i {
                    0 => yv,
                    i if i == k + 1 => -yv,
                    i => v[i - 1],
                })
            }
        }
    }

    fn chart_denominator(&self, x: &DVector<f64>) -> f64 {
        let k = self.fiber_dim();
        match self.kind {
            SpaceKind::Affine { .. } | SpaceKind::Galilean { .. } => x[k],
            SpaceKind::Projective { .. } => x[0],
            SpaceKind::Mobius { .. } => x[0] + x[k + 1],
        }
    }

    fn chart_numerator(&self, x: &DVector<f64>) -> DVector<f64> {
        let k = self.fiber_dim();
        match self.kind {
            SpaceKind::Affine { .. } | SpaceKind::Galilean { .. } => x.rows(0, k).into_owned(),
            SpaceKind::Projective { .. } | SpaceKind::Mobius { .. } => x.rows(1, k).into_owned(),
        }
    }

    /// Chart coordinates of a homogeneous vector.
    pub fn chart(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let den = self.chart_denominator(x);
        let scale = x.amax();
        if !(den.abs() > 1e-12 * scale) || !scale.is_finite() {
            return Err(Error::PointAtInfinity);
        }
        Ok(self.chart_numerator(x) / den)
    }

    fn chart_differential(&self, x: &DVector<f64>, dx: &DVector<f64>) -> Result<DVector<f64>> {
        let den = self.chart_denominator(x);
        let y = self.chart(x)?;
        Ok((self.chart_numerator(dx) - y * self.chart_denominator(dx)) / den)
    }

    /// `g . y` for a group matrix that need not be normalized.
    pub fn act_matrix(&self, g: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.chart(&(g * self.lift_point(y)))
    }

    /// Tangent of `s -> exp(s xi) . y` at `s = 0`.
    pub fn fundamental_field(&self, xi: &AlgebraElement, y: &DVector<f64>) -> Result<DVector<f64>> {
        let x = self.lift_point(y);
        self.chart_differential(&x, &(xi.matrix() * &x))
    }

    /// Tangent map of `y -> g . y` applied to `v` at `y`.
    pub fn push_forward(&self, g: &GroupElement, y: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        let x = g.matrix() * self.lift_point(y);
        let dx = g.matrix() * self.lift_differential(y, v);
        self.chart_differential(&x, &dx)
    }

    /// `T_e pi_G`: coefficients of `xi` on the complement basis.
    pub fn project_to_fiber(&self, xi: &AlgebraElement) -> DVector<f64> {
        let c = &self.adapted_inverse * xi.coords();
        c.rows(self.sub_basis.len(), self.fiber_dim()).into_owned()
    }

    /// Largest `g'`-coefficient of `xi`, zero for elements of `g'`.
    pub fn complement_part(&self, xi: &AlgebraElement) -> f64 {
        self.project_to_fiber(xi).amax()
    }

    /// `exp` of a random combination of the `g'` basis.
    pub fn random_subgroup_element<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> GroupElement {
        lie::exp(&self.random_subalgebra_element(rng, scale))
    }

    pub fn random_subalgebra_element<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> AlgebraElement {
        let mut out = AlgebraElement::zero(&self.tag);
        for b in &self.sub_basis {
            out = &out + &b.scale(rng.random_range(-scale..=scale));
        }
        out
    }
}

impl FiberAction for HomogeneousSpec {
    fn tag(&self) -> &GroupTag {
        &self.tag
    }

    fn fiber_dim(&self) -> usize {
        self.complement.len()
    }

    fn act(&self, g: &GroupElement, z: &DVector<f64>) -> Result<DVector<f64>> {
        if g.tag() != &self.tag {
            return Err(Error::TagMismatch { left: self.tag.clone(), right: g.tag().clone() });
        }
        self.act_matrix(g.matrix(), z)
    }
}

pub type SectionFn = Arc<dyn Fn(&DVector<f64>) -> GroupElement + Send + Sync>;

/// Step for differentiating a section.
const SECTION_FD_STEP: f64 = 1e-5;

/// A connection on `B x G` together with the reduction `H'` to `G'`.
#[derive(Clone)]
pub struct CartanStructure {
    name: String,
    spec: HomogeneousSpec,
    conn: LocalConnection,
    section: SectionFn,
}

impl fmt::Debug for CartanStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CartanStructure").field("name", &self.name).field("spec", &self.spec.kind).field("conn", &self.conn).finish_non_exhaustive()
    }
}

impl CartanStructure {
    /// With the identity section, so `(x, e)` lies in `H'` and `s0 = o`.
    pub fn new(name: impl Into<String>, spec: HomogeneousSpec, conn: LocalConnection) -> Result<Self> {
        let tag = spec.tag.clone();
        Self::with_section(name, spec, conn, Arc::new(move |_| GroupElement::identity(&tag)))
    }

    pub fn with_section(name: impl Into<String>, spec: HomogeneousSpec, conn: LocalConnection, section: SectionFn) -> Result<Self> {
        if spec.tag() != conn.tag() {
            return Err(Error::TagMismatch { left: spec.tag().clone(), right: conn.tag().clone() });
        }
        Ok(CartanStructure { name: name.into(), spec, conn, section })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &HomogeneousSpec {
        &self.spec
    }

    pub fn connection(&self) -> &LocalConnection {
        &self.conn
    }

    pub fn base_dim(&self) -> usize {
        self.conn.base_dim()
    }

    pub fn section(&self, x: &DVector<f64>) -> GroupElement {
        (self.section)(x)
    }

    /// `s0(x) = s(x) . o` in chart coordinates.
    pub fn s0(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.spec.act(&self.section(x), &self.spec.origin())
    }

    /// Derivative of the section along `w`, a matrix tangent to `G` at `s(x)`.
    pub fn section_derivative(&self, x: &DVector<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        let h = SECTION_FD_STEP;
        let plus = self.section(&(x + w * h));
        let minus = self.section(&(x - w * h));
        // Projective representatives are only defined up to scale; fix it to that of s(x).
        let at = self.section(x);
        let (p, m) = (rescale_like(plus.matrix(), at.matrix()), rescale_like(minus.matrix(), at.matrix()));
        (p - m) / (2.0 * h)
    }

    /// `ds[w] g'` as a tangent at the (possibly renormalized) point `s(x) g'`.
    fn carried_section_derivative(&self, x: &DVector<f64>, w: &DVector<f64>, g_prime: &GroupElement, p: &PrincipalPoint) -> DMatrix<f64> {
        let raw = self.section(x).matrix() * g_prime.matrix();
        let factor = p.g.matrix().dot(&raw) / raw.norm_squared();
        self.section_derivative(x, w) * g_prime.matrix() * factor
    }

    /// `H'` point over `x` with fibre coordinate `g'`.
    pub fn h_prime_point(&self, x: &DVector<f64>, g_prime: &GroupElement) -> Result<PrincipalPoint> {
        Ok(PrincipalPoint::new(x.clone(), self.section(x).compose(g_prime)?))
    }

    /// Distance of `g . o` from `s0(x)`.
    pub fn membership_residual(&self, p: &PrincipalPoint) -> Result<f64> {
        Ok((self.spec.act(&p.g, &self.spec.origin())? - self.s0(&p.x)?).amax())
    }

    /// Derivative of the membership constraint along `v`.
    pub fn tangency_residual(&self, p: &PrincipalPoint, v: &PrincipalTangent) -> Result<f64> {
        let h = NumericSettings::DEFAULT.tangency_fd_step;
        let o = self.spec.origin();
        let c = |s: f64| -> Result<DVector<f64>> {
            let g = p.g.matrix() + &v.dg * s;
            Ok(self.spec.act_matrix(&g, &o)? - self.s0(&(&p.x + &v.dx * s))?)
        };
        Ok(((c(h)? - c(-h)?) / (2.0 * h)).amax())
    }

    /// Basis of `T_p H'` at `p = (x, s(x) g')`: the section directions
    /// followed by the vertical fields of the `g'` basis.
    pub fn h_prime_tangent_basis(&self, x: &DVector<f64>, g_prime: &GroupElement) -> Result<(PrincipalPoint, Vec<PrincipalTangent>)> {
        let p = self.h_prime_point(x, g_prime)?;
        let m = self.base_dim();
        let mut basis = Vec::with_capacity(m + self.spec.sub_basis.len());
        for i in 0..m {
            let e = DVector::from_fn(m, |j, _| if i == j { 1.0 } else { 0.0 });
            let dg = self.carried_section_derivative(x, &e, g_prime, &p);
            basis.push(PrincipalTangent::new(e, dg));
        }
        for eta in &self.spec.sub_basis {
            basis.push(PrincipalTangent::new(DVector::zeros(m), p.g.matrix() * eta.matrix()));
        }
        Ok((p, basis))
    }
}

fn rescale_like(m: &DMatrix<f64>, reference: &DMatrix<f64>) -> DMatrix<f64> {
    let den = m.dot(reference);
    if den == 0.0 {
        return m.clone();
    }
    m * (reference.norm_squared() / den)
}

/// The form `omega` restricted to `H'`, evaluated after checking that `p`
/// lies on `H'` and `v` is tangent to it.
pub fn induced_form(cs: &CartanStructure, p: &PrincipalPoint, v: &PrincipalTangent) -> Result<AlgebraElement> {
    let scale = 1.0 + cs.s0(&p.x)?.amax();
    let residual = cs.membership_residual(p)?;
    if residual > 1e-10 * scale {
        return Err(Error::NotOnSubbundle { residual });
    }
    let residual = cs.tangency_residual(p, v)?;
    if residual > 1e-8 * scale * (1.0 + v.dx.amax() + v.dg.amax()) {
        return Err(Error::NotTangent { residual });
    }
    full_form(&cs.conn, p, v)
}

/// Matrix of `omega_{H'}` on the tangent basis of [`CartanStructure::h_prime_tangent_basis`].
pub fn induced_matrix(cs: &CartanStructure, x: &DVector<f64>, g_prime: &GroupElement) -> Result<DMatrix<f64>> {
    let (p, basis) = cs.h_prime_tangent_basis(x, g_prime)?;
    let mut cols = Vec::with_capacity(basis.len());
    for v in &basis {
        cols.push(full_form(&cs.conn, &p, v)?.coords());
    }
    Ok(DMatrix::from_columns(&cols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CartanClass {
    Cartan,
    /// Kernel-free on `H'` with `dim B < dim F`.
    Generalized,
    Neither,
}

impl fmt::Display for CartanClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CartanClass::Cartan => "cartan",
            CartanClass::Generalized => "generalized",
            CartanClass::Neither => "neither",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartanReport {
    pub class: CartanClass,
    pub samples: usize,
    pub base_dim: usize,
    pub fiber_dim: usize,
    /// Smallest singular value of `omega_{H'}` over all samples.
    pub min_singular_value: f64,
    /// Base point where the smallest singular value occurred.
    pub witness: Vec<f64>,
}

/// Classifies by the kernel of `omega_{H'}` at random points of `H'` and
/// the dimension count.
pub fn is_cartan(cs: &CartanStructure, samples: usize, seed: u64) -> Result<CartanReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = NumericSettings::DEFAULT.kernel_tol;
    let (m, k) = (cs.base_dim(), cs.spec.fiber_dim());
    let mut worst = f64::INFINITY;
    let mut witness = Vec::new();
    for _ in 0..samples.max(1) {
        let x = cs.conn.domain().sample(&mut rng);
        let g_prime = cs.spec.random_subgroup_element(&mut rng, 0.5);
        let mat = induced_matrix(cs, &x, &g_prime)?;
        let smallest = if mat.ncols() > mat.nrows() { 0.0 } else { mat.svd(false, false).singular_values.min() };
        if smallest < worst {
            worst = smallest;
            witness = x.iter().copied().collect();
        }
    }
    let class = if worst <= tol {
        CartanClass::Neither
    } else if m == k {
        CartanClass::Cartan
    } else {
        CartanClass::Generalized
    };
    Ok(CartanReport { class, samples, base_dim: m, fiber_dim: k, min_singular_value: worst, witness })
}

/// The soldering map at `x` applied to `w`, built from `p = (x, s(x))` and
/// the section direction over `w`.
pub fn soldering(cs: &CartanStructure, x: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    soldering_with_choice(cs, x, w, &GroupElement::identity(cs.spec.tag()), &AlgebraElement::zero(cs.spec.tag()))
}

/// Soldering computed from the `H'` point `(x, s(x) g')` and the tangent
/// `W' = (w, ds[w] g') + (s(x) g') eta'`; independent of `g'` and `eta'`.
pub fn soldering_with_choice(cs: &CartanStructure, x: &DVector<f64>, w: &DVector<f64>, g_prime: &GroupElement, eta_prime: &AlgebraElement) -> Result<DVector<f64>> {
    if w.len() != cs.base_dim() {
        return Err(Error::DimensionMismatch(format!("tangent of length {} on a base of dimension {}", w.len(), cs.base_dim())));
    }
    let p = cs.h_prime_point(x, g_prime)?;
    let dg = cs.carried_section_derivative(x, w, g_prime, &p) + p.g.matrix() * eta_prime.matrix();
    let xi = full_form(&cs.conn, &p, &PrincipalTangent::new(w.clone(), dg))?;
    cs.spec.push_forward(&p.g, &cs.spec.origin(), &cs.spec.project_to_fiber(&xi))
}

/// Soldering at `x` as a `dim F x dim B` matrix.
pub fn soldering_matrix(cs: &CartanStructure, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let m = cs.base_dim();
    let cols = (0..m)
        .map(|i| soldering(cs, x, &DVector::from_fn(m, |j, _| if i == j { 1.0 } else { 0.0 })))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Development of a base path in the fibre over its starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseDevelopment {
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    /// `dy/dt` at the start, by a one-sided fourth-order stencil.
    pub initial_tangent: DVector<f64>,
}

impl BaseDevelopment {
    pub fn max_second_difference(&self) -> f64 {
        crate::transport::max_second_difference(&self.times, &self.points)
    }
}

/// Develops `path` by lifting it horizontally from `s(x(t0))` and pulling
/// the section image `s(x(t)) . o` back to the fibre over `x(t0)`.
pub fn develop_base_path(cs: &CartanStructure, path: &SmoothPath, opts: &LiftOptions) -> Result<BaseDevelopment> {
    let x0 = path.start();
    let start = cs.section(&x0);
    let lift = horizontal_lift_with(&cs.conn, path, &start, opts)?;
    let o = cs.spec.origin();
    let mut points = Vec::with_capacity(lift.times.len());
    for (t, g) in lift.times.iter().zip(&lift.samples) {
        let carried = start.compose(&g.inverse()?)?.compose(&cs.section(&path.point(*t)))?;
        points.push(cs.spec.act(&carried, &o)?);
    }
    let h = lift.step;
    let initial_tangent = (&points[0] * -25.0 + &points[1] * 48.0 - &points[2] * 36.0 + &points[3] * 16.0 - &points[4] * 3.0) / (12.0 * h);
    Ok(BaseDevelopment { times: lift.times, points, initial_tangent })
}

/// Frame of `T_p H'` mapped by `omega_{H'}` onto the algebra basis, with
/// `p = (x, s(x) g')`.
pub fn parallelization_frame(cs: &CartanStructure, x: &DVector<f64>, g_prime: &GroupElement) -> Result<(PrincipalPoint, Vec<PrincipalTangent>)> {
    let (p, basis) = cs.h_prime_tangent_basis(x, g_prime)?;
    let cols = basis.iter().map(|v| full_form(&cs.conn, &p, v).map(|a| a.coords())).collect::<Result<Vec<_>>>()?;
    let mat = DMatrix::from_columns(&cols);
    if mat.nrows() != mat.ncols() {
        return Err(Error::NotCartan);
    }
    let smallest = mat.clone().svd(false, false).singular_values.min();
    if smallest <= NumericSettings::DEFAULT.kernel_tol {
        return Err(Error::NotCartan);
    }
    let inv = mat.try_inverse().ok_or(Error::NotCartan)?;
    let frame = (0..inv.ncols())
        .map(|j| {
            let mut v = basis[0].scale(inv[(0, j)]);
            for (k, b) in basis.iter().enumerate().skip(1) {
                v = v.add(&b.scale(inv[(k, j)]));
            }
            v
        })
        .collect();
    Ok((p, frame))
}
