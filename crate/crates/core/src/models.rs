//! Ready-made geometries: flat homogeneous models, affine structures,
//! Galilean gravity in one and two space dimensions, and the projective and
//! Moebius model spaces.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::cartan::{CartanStructure, HomogeneousSpec, SectionFn, SpaceKind};
use crate::error::{Error, Result};
use crate::fieldexpr::{self, Env};
use crate::lie::{self, GroupElement, GroupTag};
use crate::principal::{ChartDomain, Hole, LocalConnection};
use crate::transport::SmoothPath;

/// Names accepted by [`by_name`].
pub const MODEL_NAMES: [&str; 6] = ["homogeneous", "affine", "galilean", "galilean3d", "mobius", "projective"];

/// Group element carrying `o` to the chart point `y` in the flat model.
fn translation_section(spec: &HomogeneousSpec) -> SectionFn {
    let kind = spec.kind();
    let tag = spec.tag().clone();
    Arc::new(move |y: &DVector<f64>| {
        let n = tag.matrix_size();
        let k = y.len();
        let mut m = DMatrix::identity(n, n);
        match kind {
            SpaceKind::Affine { .. } | SpaceKind::Galilean { .. } => {
                for i in 0..k {
                    m[(i, k)] = y[i];
                }
            }
            SpaceKind::Projective { .. } => {
                for i in 0..k {
                    m[(i + 1, 0)] = y[i];
                }
            }
            SpaceKind::Mobius { .. } => m = mobius_translation(y),
        }
        GroupElement::from_matrix(&tag, m).expect("translation lies in the group")
    })
}

/// The Moebius transformation acting as `z -> z + c` on the plane chart.
pub fn mobius_translation(c: &DVector<f64>) -> DMatrix<f64> {
    let n = c.len();
    let h = 0.5 * c.norm_squared();
    let mut m = DMatrix::identity(n + 2, n + 2);
    m[(0, 0)] = 1.0 + h;
    m[(0, n + 1)] = h;
    m[(n + 1, 0)] = -h;
    m[(n + 1, n + 1)] = 1.0 - h;
    for i in 0..n {
        m[(0, i + 1)] = c[i];
        m[(i + 1, 0)] = c[i];
        m[(i + 1, n + 1)] = c[i];
        m[(n + 1, i + 1)] = -c[i];
    }
    m
}

/// The model itself: `A = 0` over `B = F`, with the section `x -> (x, t_x)`
/// where `t_x` carries `o` to `x`. Parallel transport is the identity in
/// this trivialization.
pub fn homogeneous_flat(spec: HomogeneousSpec) -> CartanStructure {
    let conn = LocalConnection::flat(ChartDomain::whole(spec.fiber_dim()), spec.tag().clone());
    let section = translation_section(&spec);
    let name = match spec.kind() {
        SpaceKind::Affine { .. } => "homogeneous",
        SpaceKind::Galilean { .. } => "homogeneous-galilean",
        SpaceKind::Projective { .. } => "projective",
        SpaceKind::Mobius { .. } => "mobius",
    };
    CartanStructure::with_section(name, spec, conn, section).expect("matching tags")
}

pub type Christoffel = Arc<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync>;
pub type EndomorphismField = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Affine structure on `R^n` from a linear connection and an endomorphism
/// field. `gamma(x)[k]` is the matrix `(Gamma^i_{kj})_{ij}`; the local form
/// has linear part `sum_k Gamma_k dx^k` and translation part `sigma0(x) dx`.
pub fn affine_structure(n: usize, gamma: Christoffel, sigma0: EndomorphismField) -> Result<CartanStructure> {
    let probe = DVector::zeros(n);
    let (g, s) = (gamma(&probe), sigma0(&probe));
    if g.len() != n || g.iter().any(|m| m.shape() != (n, n)) || s.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("affine data must be {n} matrices of size {n}x{n} and one {n}x{n} endomorphism")));
    }
    let form = Arc::new(move |x: &DVector<f64>, dx: &DVector<f64>| {
        let mut a = DMatrix::zeros(n + 1, n + 1);
        for (k, gk) in gamma(x).iter().enumerate() {
            let mut lin = a.view_mut((0, 0), (n, n));
            lin += gk * dx[k];
        }
        let t = sigma0(x) * dx;
        a.view_mut((0, n), (n, 1)).copy_from(&t);
        a
    });
    let spec = HomogeneousSpec::new(SpaceKind::Affine { n });
    let conn = LocalConnection::new(ChartDomain::whole(n), GroupTag::Aff(n), form);
    CartanStructure::new("affine", spec, conn)
}

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The two functions `V(t, x)` and `W(t, x)` of a Galilean gravity connection.
#[derive(Clone)]
pub struct GravityField {
    pub v: ScalarField,
    pub w: ScalarField,
}

impl fmt::Debug for GravityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GravityField").finish_non_exhaustive()
    }
}

impl GravityField {
    pub fn new(v: ScalarField, w: ScalarField) -> Self {
        GravityField { v, w }
    }

    pub fn constant(g: f64) -> Self {
        GravityField::linear(g, 0.0)
    }

    /// `V = g0 + k x`, `W = 0`.
    pub fn linear(g0: f64, k: f64) -> Self {
        GravityField { v: Arc::new(move |_, x| g0 + k * x), w: Arc::new(|_, _| 0.0) }
    }

    /// Fields from expressions in `t` and `x`, with extra named constants.
    /// Evaluation failures produce NaN, which the integrators report.
    pub fn from_exprs(v: &str, w: &str, constants: &BTreeMap<String, f64>) -> Result<Self> {
        Ok(GravityField { v: expr_field(v, constants)?, w: expr_field(w, constants)? })
    }
}

fn expr_field(src: &str, constants: &BTreeMap<String, f64>) -> Result<ScalarField> {
    let mut allowed: Vec<&str> = vec!["t", "x"];
    allowed.extend(constants.keys().map(String::as_str));
    let expr = fieldexpr::parse_with_vars(src, &allowed)?;
    let env: Env = constants.iter().map(|(k, v)| (k.clone(), *v)).collect();
    Ok(Arc::new(move |t, x| {
        let mut env = env.clone();
        env.insert("t".into(), t);
        env.insert("x".into(), x);
        expr.eval(&env).unwrap_or(f64::NAN)
    }))
}

/// Galilean gravity on space-time `(t, x)`:
/// `A = (-V dt - W dx) eps_v + dt eps_a + dx eps_b`. Trajectories with
/// `x'' = V + W x'` develop into straight lines.
pub fn galilean_gravity(field: GravityField) -> CartanStructure {
    let GravityField { v, w } = field;
    let form = Arc::new(move |p: &DVector<f64>, d: &DVector<f64>| {
        let (t, x) = (p[0], p[1]);
        let mut a = DMatrix::zeros(3, 3);
        a[(1, 0)] = -v(t, x) * d[0] - w(t, x) * d[1];
        a[(0, 2)] = d[0];
        a[(1, 2)] = d[1];
        a
    });
    let conn = LocalConnection::new(ChartDomain::whole(2), GroupTag::GALILEO2, form);
    CartanStructure::new("galilean", HomogeneousSpec::new(SpaceKind::Galilean { d: 1 }), conn).expect("matching tags")
}

/// The closed-form Galilean connection form at the group point `(v, a, b)`
/// for the tangent `(dt, dx, dv, da, db)`, returned on `(eps_v, eps_a, eps_b)`.
#[allow(clippy::too_many_arguments)]
pub fn galilean_form_closed(vv: f64, ww: f64, v: f64, a: f64, dt: f64, dx: f64, dv: f64, da: f64, db: f64) -> [f64; 3] {
    [-vv * dt - ww * dx + dv, dt + da, -(v + a * vv) * dt + (1.0 - a * ww) * dx - v * da + db]
}

pub type AccelField = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;

/// Galilean gravity over `(t, x, y)` with acceleration field `accel`, on
/// `Galileo(2)` with basis `(v1, v2, a, b1, b2)`. Optional hole around a
/// singular point of the field.
pub fn galilean_gravity_3d(accel: AccelField, hole: Option<Hole>) -> CartanStructure {
    let form = Arc::new(move |p: &DVector<f64>, d: &DVector<f64>| {
        let [ax, ay] = accel(p[0], p[1], p[2]);
        let mut a = DMatrix::zeros(4, 4);
        a[(1, 0)] = -ax * d[0];
        a[(2, 0)] = -ay * d[0];
        a[(0, 3)] = d[0];
        a[(1, 3)] = d[1];
        a[(2, 3)] = d[2];
        a
    });
    let mut domain = ChartDomain::whole(3);
    if let Some(h) = hole {
        domain = domain.with_hole(h);
    }
    let conn = LocalConnection::new(domain, GroupTag::Galileo(2), form);
    CartanStructure::new("galilean3d", HomogeneousSpec::new(SpaceKind::Galilean { d: 2 }), conn).expect("matching tags")
}

/// Radius of the disc removed around the attracting centre.
pub const KEPLER_HOLE_RADIUS: f64 = 1e-3;

/// Inverse-square attraction `-mu r / |r|^3` towards the origin.
pub fn kepler_field(mu: f64) -> AccelField {
    Arc::new(move |_, x, y| {
        let r3 = (x * x + y * y).powf(1.5);
        [-mu * x / r3, -mu * y / r3]
    })
}

pub fn kepler_structure(mu: f64) -> CartanStructure {
    let hole = Hole { axes: vec![1, 2], center: vec![0.0, 0.0], radius: KEPLER_HOLE_RADIUS };
    galilean_gravity_3d(kepler_field(mu), Some(hole))
}

/// Elliptic Kepler orbit with focus at the origin, at pericentre on the
/// positive x axis at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeplerOrbit {
    pub semi_major: f64,
    pub eccentricity: f64,
    pub mu: f64,
}

impl KeplerOrbit {
    pub fn new(semi_major: f64, eccentricity: f64, mu: f64) -> Result<Self> {
        if !(semi_major > 0.0 && mu > 0.0 && (0.0..1.0).contains(&eccentricity)) {
            return Err(Error::InvalidPath(format!("not an ellipse: a = {semi_major}, e = {eccentricity}, mu = {mu}")));
        }
        Ok(KeplerOrbit { semi_major, eccentricity, mu })
    }

    pub fn mean_motion(&self) -> f64 {
        (self.mu / self.semi_major.powi(3)).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.mean_motion()
    }

    fn eccentric_anomaly(&self, t: f64) -> f64 {
        let (e, m) = (self.eccentricity, self.mean_motion() * t);
        let mut big_e = if e > 0.8 { std::f64::consts::PI } else { m };
        for _ in 0..50 {
            let step = (big_e - e * big_e.sin() - m) / (1.0 - e * big_e.cos());
            big_e -= step;
            if step.abs() < 1e-15 * (1.0 + big_e.abs()) {
                break;
            }
        }
        big_e
    }

    /// Position and velocity at time `t`.
    pub fn state(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let (a, e) = (self.semi_major, self.eccentricity);
        let b = a * (1.0 - e * e).sqrt();
        let big_e = self.eccentric_anomaly(t);
        let (s, c) = big_e.sin_cos();
        let rate = self.mean_motion() / (1.0 - e * c);
        ([a * (c - e), b * s], [-a * s * rate, b * c * rate])
    }

    /// The space-time path `t -> (t, x(t), y(t))` over `[t0, t1]`.
    pub fn path(&self, t0: f64, t1: f64) -> Result<SmoothPath> {
        let (o1, o2) = (*self, *self);
        SmoothPath::new(
            t0,
            t1,
            Arc::new(move |t| {
                let ([x, y], _) = o1.state(t);
                DVector::from_vec(vec![t, x, y])
            }),
            Arc::new(move |t| {
                let (_, [vx, vy]) = o2.state(t);
                DVector::from_vec(vec![1.0, vx, vy])
            }),
        )
    }
}

/// A point of Moebius space: a null ray normalized so its largest entry is `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusPoint {
    ray: DVector<f64>,
}

impl MobiusPoint {
    pub fn from_ray(ray: DVector<f64>) -> Result<Self> {
        let ray = lie::normalize_homogeneous(&ray).ok_or_else(|| Error::DimensionMismatch("zero ray".into()))?;
        let q = mobius_q(&ray);
        if q.abs() > 1e-10 {
            return Err(Error::NotOnSubbundle { residual: q });
        }
        Ok(MobiusPoint { ray })
    }

    pub fn ray(&self) -> &DVector<f64> {
        &self.ray
    }

    /// Dimension `n` of the sphere.
    pub fn dim(&self) -> usize {
        self.ray.len() - 2
    }

    /// Image under a matrix of `O(n+1, 1)`.
    pub fn transform(&self, g: &DMatrix<f64>) -> Result<MobiusPoint> {
        MobiusPoint::from_ray(g * &self.ray)
    }
}

/// `x_1^2 + .. + x_{n+1}^2 - x_0^2`.
pub fn mobius_q(ray: &DVector<f64>) -> f64 {
    ray.rows(1, ray.len() - 1).norm_squared() - ray[0] * ray[0]
}

/// `y in S^n` to the ray of `(1, y)`.
pub fn mobius_embed_sphere(y: &DVector<f64>) -> Result<MobiusPoint> {
    let norm = y.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnitSphere { norm });
    }
    let mut ray = DVector::zeros(y.len() + 1);
    ray[0] = 1.0;
    ray.rows_mut(1, y.len()).copy_from(y);
    MobiusPoint::from_ray(ray)
}

/// `z in R^n` to the ray of `((1 + |z|^2)/2, z, (1 - |z|^2)/2)`.
pub fn mobius_embed_plane(z: &DVector<f64>) -> MobiusPoint {
    mobius_embed_tangent(z, &DMatrix::identity(z.len(), z.len()))
}

/// Tangent vector `v` with Gram matrix `metric` to the ray of
/// `((1 + g(v, v))/2, v, (1 - g(v, v))/2)`; null when `metric` is the
/// identity.
pub fn mobius_embed_tangent(v: &DVector<f64>, metric: &DMatrix<f64>) -> MobiusPoint {
    let n = v.len();
    let r2 = (v.transpose() * metric * v)[(0, 0)];
    let mut ray = DVector::zeros(n + 2);
    ray[0] = 0.5 * (1.0 + r2);
    ray[n + 1] = 0.5 * (1.0 - r2);
    ray.rows_mut(1, n).copy_from(v);
    let ray = lie::normalize_homogeneous(&ray).expect("first entry is positive");
    MobiusPoint { ray }
}

/// Inverse of [`mobius_embed_plane`]: `z_i = x_i / (x_0 + x_{n+1})`.
pub fn mobius_stereo_roundtrip(p: &MobiusPoint) -> Result<DVector<f64>> {
    let n = p.dim();
    let den = p.ray[0] + p.ray[n + 1];
    if den.abs() <= 1e-12 {
        return Err(Error::PointAtInfinity);
    }
    Ok(p.ray.rows(1, n) / den)
}

/// Stereographic projection from the south pole `(0, .., 0, -1)`.
pub fn stereographic(y: &DVector<f64>) -> Result<DVector<f64>> {
    let n = y.len() - 1;
    let den = 1.0 + y[n];
    if den.abs() <= 1e-12 {
        return Err(Error::PointAtInfinity);
    }
    Ok(y.rows(0, n) / den)
}

/// `R in O(n)` acting on the plane, as `diag(1, R, 1)` in `O(n+1, 1)`.
pub fn orthogonal_embed(r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.nrows();
    let mut m = DMatrix::identity(n + 2, n + 2);
    m.view_mut((1, 1), (n, n)).copy_from(r);
    m
}

/// `R in O(n+1)` acting on the sphere, as `diag(1, R)` in `O(n+1, 1)`.
pub fn sphere_rotation_embed(r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.nrows();
    let mut m = DMatrix::identity(n + 1, n + 1);
    m.view_mut((1, 1), (n, n)).copy_from(r);
    m
}

/// A point of `RP^n` with the normalized homogeneous representative.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    coords: DVector<f64>,
}

impl ProjectivePoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        let coords = lie::normalize_homogeneous(&coords).ok_or_else(|| Error::DimensionMismatch("zero vector has no projective class".into()))?;
        Ok(ProjectivePoint { coords })
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// The base point `[1, 0, .., 0]`.
    pub fn origin(n: usize) -> Self {
        ProjectivePoint { coords: DVector::from_fn(n + 1, |i, _| if i == 0 { 1.0 } else { 0.0 }) }
    }
}

pub fn projective_action(g: &GroupElement, p: &ProjectivePoint) -> Result<ProjectivePoint> {
    if !matches!(g.tag(), GroupTag::Pgl(n) if n + 1 == p.coords.len()) {
        return Err(Error::DimensionMismatch(format!("{} acting on a point with {} coordinates", g.tag(), p.coords.len())));
    }
    ProjectivePoint::new(g.apply(&p.coords))
}

/// `g in GL(n)` to the class of `diag(1, g)` in `PGL(n+1)`.
pub fn gl_embed(g: &DMatrix<f64>) -> Result<GroupElement> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::ShapeMismatch { expected: "square".into(), got: format!("{}x{}", g.nrows(), g.ncols()) });
    }
    let mut m = DMatrix::identity(n + 1, n + 1);
    m.view_mut((1, 1), (n, n)).copy_from(g);
    GroupElement::from_matrix(&GroupTag::Pgl(n), m)
}

/// Tangent vector `v` to the class of `(1, v)`.
pub fn tangent_embed(v: &DVector<f64>) -> ProjectivePoint {
    let mut c = DVector::zeros(v.len() + 1);
    c[0] = 1.0;
    c.rows_mut(1, v.len()).copy_from(v);
    ProjectivePoint::new(c).expect("nonzero")
}

/// Shipped structures with default parameters.
pub fn by_name(name: &str) -> Result<CartanStructure> {
    Ok(match name {
        "homogeneous" => homogeneous_flat(HomogeneousSpec::new(SpaceKind::Affine { n: 2 })),
        "affine" => affine_structure(2, sample_christoffel(), Arc::new(|_| DMatrix::identity(2, 2)))?,
        "galilean" => galilean_gravity(GravityField::linear(9.81, 0.3)),
        "galilean3d" => kepler_structure(1.0),
        "mobius" => homogeneous_flat(HomogeneousSpec::new(SpaceKind::Mobius { n: 2 })),
        "projective" => homogeneous_flat(HomogeneousSpec::new(SpaceKind::Projective { n: 2 })),
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}

/// A smooth, position-dependent set of connection coefficients on `R^2`.
fn sample_christoffel() -> Christoffel {
    Arc::new(|x: &DVector<f64>| {
        let (a, b) = (x[0], x[1]);
        vec![DMatrix::from_row_slice(2, 2, &[0.1 * b, -0.2, a.sin(), 0.3]), DMatrix::from_row_slice(2, 2, &[0.05, a * b, -0.1, b.cos()])]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{develop_base_path, is_cartan, soldering, soldering_matrix, CartanClass};
    use crate::lie::AlgebraElement;
    use crate::principal::{check_axioms, full_form, PrincipalPoint, PrincipalTangent};
    use crate::transport::{parallel_transport, LiftOptions, PiecewisePath};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
        lie::random_element(&GroupTag::So(n), rng, 2.0).into_matrix()
    }

    #[test]
    fn every_model_satisfies_the_axioms() {
        for name in MODEL_NAMES {
            let cs = by_name(name).unwrap();
            let r = check_axioms(cs.connection(), 200, 1).unwrap();
            assert!(r.passed(), "{name}: {r:?}");
        }
    }

    #[test]
    fn every_model_is_cartan() {
        for name in MODEL_NAMES {
            let cs = by_name(name).unwrap();
            assert_eq!(cs.base_dim(), cs.spec().fiber_dim());
            let r = is_cartan(&cs, 20, 2).unwrap();
            assert_eq!(r.class, CartanClass::Cartan, "{name}: {r:?}");
        }
    }

    #[test]
    fn galilean_form_matches_closed_expression() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cs = galilean_gravity(GravityField::new(Arc::new(|t, x| 9.81 + t * x), Arc::new(|t, x| 0.2 * t - x)));
        for _ in 0..200 {
            let (t, x, v, a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let [dt, dx, dv, da, db] = [0; 5].map(|_| rng.random_range(-1.0..1.0));
            let g = GroupElement::galileo(v, a, b);
            let dg = AlgebraElement::galileo(dv, da, db).matrix().clone();
            let p = PrincipalPoint::new(DVector::from_vec(vec![t, x]), g);
            let got = full_form(cs.connection(), &p, &PrincipalTangent::new(DVector::from_vec(vec![dt, dx]), dg)).unwrap().coords();
            let want = galilean_form_closed(9.81 + t * x, 0.2 * t - x, v, a, dt, dx, dv, da, db);
            for i in 0..3 {
                assert!((got[i] - want[i]).abs() < 1e-13 * (1.0 + want[i].abs()), "{got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn galilean_soldering_is_identity() {
        let cs = galilean_gravity(GravityField::linear(9.81, 0.3));
        let s = soldering_matrix(&cs, &DVector::from_vec(vec![0.5, 1.5])).unwrap();
        assert!((s - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn expression_fields() {
        let consts = BTreeMap::from([("k".to_string(), 0.3)]);
        let f = GravityField::from_exprs("9.81 + k*x", "0", &consts).unwrap();
        assert!(((f.v)(0.0, 2.0) - 10.41).abs() < 1e-12);
        assert_eq!((f.w)(1.0, 1.0), 0.0);
        assert!(GravityField::from_exprs("9.81 + q*x", "0", &consts).is_err());
        let f = GravityField::from_exprs("1/x", "0", &consts).unwrap();
        assert!((f.v)(0.0, 0.0).is_nan() || (f.v)(0.0, 0.0).is_infinite());
    }

    #[test]
    fn affine_soldering_and_classification() {
        let zero_gamma: Christoffel = Arc::new(|_| vec![DMatrix::zeros(2, 2); 2]);
        let id = affine_structure(2, sample_christoffel(), Arc::new(|_| DMatrix::identity(2, 2))).unwrap();
        let two = affine_structure(2, sample_christoffel(), Arc::new(|_| DMatrix::identity(2, 2) * 2.0)).unwrap();
        let zero = affine_structure(2, zero_gamma, Arc::new(|_| DMatrix::zeros(2, 2))).unwrap();
        let x = DVector::from_vec(vec![0.3, -0.6]);
        let w = DVector::from_vec(vec![0.7, 0.2]);
        assert!((soldering(&two, &x, &w).unwrap() - &w * 2.0).amax() < 1e-12);
        assert!((soldering_matrix(&id, &x).unwrap() - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert_eq!(is_cartan(&zero, 10, 1).unwrap().class, CartanClass::Neither);
        assert!(affine_structure(3, sample_christoffel(), Arc::new(|_| DMatrix::identity(3, 3))).is_err());
    }

    #[test]
    fn flat_affine_develops_segment() {
        let cs = affine_structure(2, Arc::new(|_| vec![DMatrix::zeros(2, 2); 2]), Arc::new(|_| DMatrix::identity(2, 2))).unwrap();
        let (a, b) = (DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![-1.0, 0.5]));
        let path = SmoothPath::line(a.clone(), b.clone(), 0.0, 1.0).unwrap();
        let dev = develop_base_path(&cs, &path, &LiftOptions::with_step(1e-2)).unwrap();
        for (t, y) in dev.times.iter().zip(&dev.points) {
            assert!((y - (&b - &a) * *t).amax() < 1e-12);
        }
    }

    #[test]
    fn flat_models_transport_trivially_and_develop_to_the_path() {
        for name in ["homogeneous", "projective", "mobius"] {
            let cs = by_name(name).unwrap();
            let path = SmoothPath::new(
                0.0,
                1.0,
                Arc::new(|t| DVector::from_vec(vec![0.2 + t.sin(), -0.3 + t * t])),
                Arc::new(|t| DVector::from_vec(vec![t.cos(), 2.0 * t])),
            )
            .unwrap();
            let y = DVector::from_vec(vec![0.4, 0.1]);
            let moved = parallel_transport(cs.connection(), &PiecewisePath::from(path.clone()), cs.spec(), &y, &LiftOptions::default()).unwrap();
            assert_eq!(moved, y, "{name}");
            let dev = develop_base_path(&cs, &path, &LiftOptions::default()).unwrap();
            for (t, y) in dev.times.iter().zip(&dev.points) {
                assert!((y - path.point(*t)).amax() < 1e-8, "{name}");
            }
        }
    }

    #[test]
    fn kepler_orbit_obeys_the_field() {
        let orbit = KeplerOrbit::new(1.0, 0.5, 1.0).unwrap();
        let field = kepler_field(1.0);
        for k in 0..20 {
            let t = k as f64 * orbit.period() / 20.0;
            let h = 1e-4;
            let (_, v1) = orbit.state(t - h);
            let (p, _) = orbit.state(t);
            let (_, v2) = orbit.state(t + h);
            let acc = [(v2[0] - v1[0]) / (2.0 * h), (v2[1] - v1[1]) / (2.0 * h)];
            let f = field(t, p[0], p[1]);
            assert!((acc[0] - f[0]).abs() < 1e-6 && (acc[1] - f[1]).abs() < 1e-6);
        }
        assert!(KeplerOrbit::new(1.0, 1.0, 1.0).is_err());
        let ([x, y], _) = orbit.state(0.0);
        assert!((x - 0.5).abs() < 1e-15 && y == 0.0);
    }

    #[test]
    fn kepler_path_through_centre_is_rejected() {
        let cs = kepler_structure(1.0);
        let path = SmoothPath::line(DVector::from_vec(vec![0.0, -1.0, 0.0]), DVector::from_vec(vec![1.0, 1.0, 0.0]), 0.0, 1.0).unwrap();
        assert!(matches!(develop_base_path(&cs, &path, &LiftOptions::with_step(1e-2)), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn projectile_in_the_plane_develops_straight() {
        let cs = galilean_gravity_3d(Arc::new(|_, _, _| [0.0, -9.81]), None);
        let path = SmoothPath::new(
            0.0,
            1.0,
            Arc::new(|t| DVector::from_vec(vec![t, 3.0 * t, 1.0 + 4.0 * t - 0.5 * 9.81 * t * t])),
            Arc::new(|t| DVector::from_vec(vec![1.0, 3.0, 4.0 - 9.81 * t])),
        )
        .unwrap();
        assert!(develop_base_path(&cs, &path, &LiftOptions::with_step(1e-3)).unwrap().max_second_difference() < 1e-6);
        let free = galilean_gravity_3d(Arc::new(|_, _, _| [0.0, 0.0]), None);
        let line = SmoothPath::line(DVector::from_vec(vec![0.0, 0.0, 0.0]), DVector::from_vec(vec![1.0, 2.0, -1.0]), 0.0, 1.0).unwrap();
        assert!(develop_base_path(&free, &line, &LiftOptions::with_step(1e-3)).unwrap().max_second_difference() < 1e-9);
    }

    #[test]
    fn mobius_embeddings() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 3;
        let o = mobius_embed_plane(&DVector::zeros(n));
        assert_eq!(o.ray(), &DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 1.0]));
        for _ in 0..100 {
            let z = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
            let p = mobius_embed_plane(&z);
            assert!(mobius_q(p.ray()).abs() < 1e-10);
            assert!((mobius_stereo_roundtrip(&p).unwrap() - &z).amax() < 1e-10);
            let r = random_rotation(n, &mut rng);
            let lhs = mobius_embed_plane(&(&r * &z));
            let rhs = p.transform(&orthogonal_embed(&r)).unwrap();
            assert!((lhs.ray() - rhs.ray()).amax() < 1e-10);
            let y = DVector::from_fn(n + 1, |_, _| rng.random_range(-1.0..1.0)).normalize();
            let s = mobius_embed_sphere(&y).unwrap();
            assert!((mobius_stereo_roundtrip(&s).unwrap() - stereographic(&y).unwrap()).amax() < 1e-10);
        }
        let far = MobiusPoint::from_ray(DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(matches!(mobius_stereo_roundtrip(&far), Err(Error::PointAtInfinity)));
        assert!(matches!(mobius_embed_sphere(&DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0])), Err(Error::NotUnitSphere { .. })));
    }

    #[test]
    fn mobius_group_preserves_the_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tag = GroupTag::O { p: 4, q: 1 };
        for _ in 0..100 {
            let z = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let g = lie::random_element(&tag, &mut rng, 0.5);
            let moved = g.apply(mobius_embed_plane(&z).ray());
            assert!(mobius_q(&moved).abs() < 1e-9 * moved.norm_squared());
        }
    }

    #[test]
    fn projective_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 2;
        let tag = GroupTag::Pgl(n);
        let o = ProjectivePoint::origin(n);
        let p = ProjectivePoint::new(DVector::from_vec(vec![0.3, -1.2, 0.5])).unwrap();
        assert_eq!(projective_action(&GroupElement::identity(&tag), &p).unwrap(), p);
        let two = gl_embed(&(DMatrix::identity(n, n) * 2.0)).unwrap();
        assert_eq!(projective_action(&two, &o).unwrap(), o);
        let at_infinity = ProjectivePoint::new(DVector::from_vec(vec![0.0, 1.0, -0.4])).unwrap();
        assert_eq!(projective_action(&two, &at_infinity).unwrap().coords()[0], 0.0);
        for _ in 0..100 {
            let (g1, g2) = (lie::random_element(&tag, &mut rng, 0.5), lie::random_element(&tag, &mut rng, 0.5));
            let lhs = projective_action(&g1.compose(&g2).unwrap(), &p).unwrap();
            let rhs = projective_action(&g1, &projective_action(&g2, &p).unwrap()).unwrap();
            assert!((lhs.coords() - rhs.coords()).amax() < 1e-10);
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(n, n) * 2.0;
            let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(n, n) * 2.0;
            let prod = gl_embed(&(&a * &b)).unwrap();
            let composed = gl_embed(&a).unwrap().compose(&gl_embed(&b).unwrap()).unwrap();
            assert!((prod.matrix() - composed.matrix()).amax() < 1e-10);
        }
        let v = DVector::from_vec(vec![0.5, -0.25]);
        assert_eq!(tangent_embed(&v).coords(), &DVector::from_vec(vec![1.0, 0.5, -0.25]));
    }

    #[test]
    fn registry_rejects_unknown_names() {
        assert!(matches!(by_name("hyperbolic"), Err(Error::UnknownModel(_))));
    }
}
