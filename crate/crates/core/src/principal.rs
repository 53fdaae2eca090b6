//! Trivialized principal bundles `U x G` over a chart domain and their
//! connection forms.
//!
//! A connection is stored through its local form `A(x, dx)`, the pullback of
//! the connection form along the identity section. The full form on the
//! bundle is rebuilt as `Ad_{g^-1} A(x, dx) + g^-1 dg`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lie::{self, AlgebraElement, GroupElement, GroupTag};

/// A region removed from a chart: points whose coordinates on `axes` lie
/// within `radius` of `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hole {
    pub axes: Vec<usize>,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Hole {
    fn contains(&self, x: &DVector<f64>) -> bool {
        let d2: f64 = self.axes.iter().zip(&self.center).map(|(&i, c)| (x[i] - c).powi(2)).sum();
        d2 < self.radius * self.radius
    }
}

/// Chart domain `U` in `R^m`: all of `R^m` or an open box, minus optional holes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartDomain {
    dim: usize,
    bounds: Option<Vec<(f64, f64)>>,
    holes: Vec<Hole>,
}

impl ChartDomain {
    pub fn whole(dim: usize) -> Self {
        assert!(dim >= 1, "chart dimension must be at least 1");
        ChartDomain { dim, bounds: None, holes: Vec::new() }
    }

    pub fn boxed(bounds: Vec<(f64, f64)>) -> Self {
        assert!(!bounds.is_empty(), "chart dimension must be at least 1");
        assert!(bounds.iter().all(|(lo, hi)| lo < hi), "box bounds must satisfy lo < hi");
        ChartDomain { dim: bounds.len(), bounds: Some(bounds), holes: Vec::new() }
    }

    pub fn with_hole(mut self, hole: Hole) -> Self {
        assert!(hole.axes.iter().all(|&i| i < self.dim));
        self.holes.push(hole);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if let Some(bounds) = &self.bounds {
            if bounds.iter().zip(x.iter()).any(|((lo, hi), v)| v <= lo || v >= hi) {
                return false;
            }
        }
        !self.holes.iter().any(|h| h.contains(x))
    }

    /// Uniform sample; unbounded axes draw from `[-2, 2]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        loop {
            let x = DVector::from_fn(self.dim, |i, _| {
                let (lo, hi) = self.bounds.as_ref().map_or((-2.0, 2.0), |b| b[i]);
                rng.random_range(lo..hi)
            });
            if self.contains(&x) {
                return x;
            }
        }
    }
}

/// Local connection form `A(x, dx)`, linear in `dx`.
pub type LocalForm = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// The trivialized avatar of a connection form over one chart.
#[derive(Clone)]
pub struct LocalConnection {
    domain: ChartDomain,
    tag: GroupTag,
    form: LocalForm,
}

impl fmt::Debug for LocalConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalConnection").field("domain", &self.domain).field("tag", &self.tag).finish_non_exhaustive()
    }
}

impl LocalConnection {
    /// `form(x, dx)` must return a matrix in the Lie algebra of `tag`.
    pub fn new(domain: ChartDomain, tag: GroupTag, form: LocalForm) -> Self {
        LocalConnection { domain, tag, form }
    }

    /// The connection with `A = 0`: its form is the Maurer-Cartan form.
    pub fn flat(domain: ChartDomain, tag: GroupTag) -> Self {
        let n = tag.matrix_size();
        LocalConnection::new(domain, tag, Arc::new(move |_, _| DMatrix::zeros(n, n)))
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn tag(&self) -> &GroupTag {
        &self.tag
    }

    pub fn base_dim(&self) -> usize {
        self.domain.dim
    }

    /// `A(x, dx)`.
    pub fn eval(&self, x: &DVector<f64>, dx: &DVector<f64>) -> Result<AlgebraElement> {
        if dx.len() != self.domain.dim {
            return Err(Error::ShapeMismatch { expected: format!("{}", self.domain.dim), got: format!("{}", dx.len()) });
        }
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain { point: x.iter().copied().collect() });
        }
        Ok(AlgebraElement::projected(&self.tag, &(self.form)(x, dx)))
    }

    /// Largest linearity defect `|A(x, a u + b w) - a A(x, u) - b A(x, w)|`
    /// over random samples.
    pub fn linearity_residual(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.domain.dim;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x = self.domain.sample(&mut rng);
            let u = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            let w = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let combined = self.eval(&x, &(&u * a + &w * b))?;
            let split = &self.eval(&x, &u)?.scale(a) + &self.eval(&x, &w)?.scale(b);
            worst = worst.max((&combined - &split).norm());
        }
        Ok(worst)
    }
}

/// A point `h = (x, g)` of the trivialized bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalPoint {
    pub x: DVector<f64>,
    pub g: GroupElement,
}

impl PrincipalPoint {
    pub fn new(x: DVector<f64>, g: GroupElement) -> Self {
        PrincipalPoint { x, g }
    }

    /// Right translation `R_h (x, g) = (x, g h)`.
    pub fn right_translate(&self, h: &GroupElement) -> Result<PrincipalPoint> {
        Ok(PrincipalPoint { x: self.x.clone(), g: self.g.compose(h)? })
    }
}

/// A tangent vector `(dx, dg)` at a bundle point; `dg` is a matrix tangent to `G` at `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalTangent {
    pub dx: DVector<f64>,
    pub dg: DMatrix<f64>,
}

impl PrincipalTangent {
    pub fn new(dx: DVector<f64>, dg: DMatrix<f64>) -> Self {
        PrincipalTangent { dx, dg }
    }

    pub fn horizontal_part(dx: DVector<f64>, size: usize) -> Self {
        PrincipalTangent { dx, dg: DMatrix::zeros(size, size) }
    }

    /// Push-forward by the right translation `R_h` from the point `p`.
    ///
    /// Projective representatives are renormalized after composing, so the
    /// tangent is rescaled by the same factor as the moved point.
    pub fn right_translate(&self, p: &PrincipalPoint, h: &GroupElement) -> Result<(PrincipalPoint, PrincipalTangent)> {
        let moved = p.right_translate(h)?;
        let raw = p.g.matrix() * h.matrix();
        let factor = moved.g.matrix().dot(&raw) / raw.norm_squared();
        Ok((moved, PrincipalTangent { dx: self.dx.clone(), dg: &self.dg * h.matrix() * factor }))
    }

    pub fn scale(&self, s: f64) -> PrincipalTangent {
        PrincipalTangent { dx: &self.dx * s, dg: &self.dg * s }
    }

    pub fn add(&self, other: &PrincipalTangent) -> PrincipalTangent {
        PrincipalTangent { dx: &self.dx + &other.dx, dg: &self.dg + &other.dg }
    }
}

/// A Lie-algebra-valued 1-form on the trivialized bundle.
pub trait ConnectionForm {
    fn tag(&self) -> &GroupTag;
    fn domain(&self) -> &ChartDomain;
    fn evaluate(&self, p: &PrincipalPoint, v: &PrincipalTangent) -> Result<AlgebraElement>;
}

impl ConnectionForm for LocalConnection {
    fn tag(&self) -> &GroupTag {
        &self.tag
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn evaluate(&self, p: &PrincipalPoint, v: &PrincipalTangent) -> Result<AlgebraElement> {
        full_form(self, p, v)
    }
}

/// The connection form on the whole bundle: `Ad_{g^-1} A(x, dx) + g^-1 dg`.
pub fn full_form(conn: &LocalConnection, p: &PrincipalPoint, v: &PrincipalTangent) -> Result<AlgebraElement> {
    let base = conn.eval(&p.x, &v.dx)?;
    let g_inv = p.g.inverse()?;
    let horizontal = lie::ad(&g_inv, &base)?;
    let vertical = lie::maurer_cartan(&p.g, &v.dg)?;
    Ok(&horizontal + &vertical)
}

/// Fundamental vector field `d/dt (g exp(t eta))` at `t = 0`, i.e. `(0, g eta)`.
pub fn fundamental_vector(eta: &AlgebraElement, p: &PrincipalPoint) -> Result<PrincipalTangent> {
    if eta.tag() != p.g.tag() {
        return Err(Error::TagMismatch { left: eta.tag().clone(), right: p.g.tag().clone() });
    }
    Ok(PrincipalTangent { dx: DVector::zeros(p.x.len()), dg: p.g.matrix() * eta.matrix() })
}

/// Worst-case sample of one axiom check.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomWitness {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub residual: f64,
}

/// Residuals of the two connection-form axioms over random samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub samples: usize,
    /// `max |omega(eta_hat) - eta|`.
    pub fundamental_residual: f64,
    /// `max |R_h^* omega - Ad_{h^-1} omega|`.
    pub equivariance_residual: f64,
    pub fundamental_witness: Option<AxiomWitness>,
    pub equivariance_witness: Option<AxiomWitness>,
    pub tolerance: f64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.fundamental_residual < self.tolerance && self.equivariance_residual < self.tolerance
    }
}

/// Default pass threshold for [`check_axioms`].
pub const AXIOM_TOLERANCE: f64 = 1e-8;

/// Samples `(point, tangent, group element)` triples and measures how far the
/// form is from reproducing generators on fundamental fields and from
/// transforming by `Ad_{h^-1}` under right translation.
pub fn check_axioms<C: ConnectionForm + ?Sized>(form: &C, samples: usize, seed: u64) -> Result<AxiomReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tag = form.tag().clone();
    let m = form.domain().dim();
    let n = tag.matrix_size();
    let mut report = AxiomReport {
        samples,
        fundamental_residual: 0.0,
        equivariance_residual: 0.0,
        fundamental_witness: None,
        equivariance_witness: None,
        tolerance: AXIOM_TOLERANCE,
    };
    for _ in 0..samples {
        let x = form.domain().sample(&mut rng);
        let g = lie::random_element(&tag, &mut rng, 0.8);
        let p = PrincipalPoint::new(x.clone(), g.clone());

        let eta = lie::random_algebra(&tag, &mut rng, 1.0);
        let hat = fundamental_vector(&eta, &p)?;
        let r1 = (&form.evaluate(&p, &hat)? - &eta).norm();
        if r1 >= report.fundamental_residual {
            report.fundamental_residual = r1;
            report.fundamental_witness = Some(AxiomWitness { x: x.iter().copied().collect(), g: g.matrix().iter().copied().collect(), residual: r1 });
        }

        let dx = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let dg = g.matrix() * lie::random_algebra(&tag, &mut rng, 1.0).matrix();
        debug_assert_eq!(dg.nrows(), n);
        let v = PrincipalTangent::new(dx, dg);
        let h = lie::random_element(&tag, &mut rng, 0.8);
        let (q, w) = v.right_translate(&p, &h)?;
        let moved = form.evaluate(&q, &w)?;
        let expected = lie::ad(&h.inverse()?, &form.evaluate(&p, &v)?)?;
        let r2 = (&moved - &expected).norm();
        if r2 >= report.equivariance_residual {
            report.equivariance_residual = r2;
            report.equivariance_witness = Some(AxiomWitness { x: x.iter().copied().collect(), g: g.matrix().iter().copied().collect(), residual: r2 });
        }
    }
    Ok(report)
}

/// Curvature `dA(u, w) + [A(u), A(w)]` at `x`, with `dA` by central differences.
pub fn curvature(conn: &LocalConnection, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>, fd_step: f64) -> Result<AlgebraElement> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::InvalidStep(fd_step));
    }
    let dom = conn.domain();
    if !dom.contains(x) {
        return Err(Error::OutsideDomain { point: x.iter().copied().collect() });
    }
    for probe in [x + u * fd_step, x - u * fd_step, x + w * fd_step, x - w * fd_step] {
        if !dom.contains(&probe) {
            return Err(Error::TooCloseToBoundary { point: x.iter().copied().collect(), step: fd_step });
        }
    }
    // d(A)(u, w) = u(A(w)) - w(A(u)) for constant vector fields u, w.
    let du_aw = (&conn.eval(&(x + u * fd_step), w)? - &conn.eval(&(x - u * fd_step), w)?).scale(0.5 / fd_step);
    let dw_au = (&conn.eval(&(x + w * fd_step), u)? - &conn.eval(&(x - w * fd_step), u)?).scale(0.5 / fd_step);
    let commutator = lie::bracket(&conn.eval(x, u)?, &conn.eval(x, w)?)?;
    Ok(&(&du_aw - &dw_au) + &commutator)
}

/// Dimension of the horizontal subspace `ker omega` at `p`, and the smallest
/// singular value kept when deciding the rank of the assembled map.
pub fn horizontal_dimension(conn: &LocalConnection, p: &PrincipalPoint, rel_tol: f64) -> Result<(usize, f64)> {
    let tag = conn.tag();
    let m = conn.base_dim();
    let k = tag.dim();
    let n = tag.matrix_size();
    let mut columns = Vec::with_capacity(m + k);
    for i in 0..m {
        let v = PrincipalTangent::horizontal_part(DVector::from_fn(m, |j, _| if i == j { 1.0 } else { 0.0 }), n);
        columns.push(full_form(conn, p, &v)?.coords());
    }
    for b in AlgebraElement::basis(tag) {
        let v = fundamental_vector(&b, p)?;
        columns.push(full_form(conn, p, &v)?.coords());
    }
    let mat = DMatrix::from_columns(&columns);
    let sv = mat.svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<f64> = sv.iter().cloned().filter(|s| *s > rel_tol * largest).collect();
    let rank = kept.len();
    let smallest = kept.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((m + k - rank, smallest))
}
