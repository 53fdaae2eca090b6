//! Horizontal lifts, parallel transport, holonomy and development.
//!
//! The lift of a base path `x(t)` solves `g' = -A(x, x') g`, which makes the
//! full form `Ad_{g^-1} A + g^-1 g'` vanish. Integration is classical RK4 on
//! the matrix representation with re-projection onto the group after every
//! step.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::{self, GroupElement, GroupTag};
use crate::principal::{full_form, LocalConnection, PrincipalPoint, PrincipalTangent};
use crate::settings::NumericSettings;

pub type PathFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Tolerance on the derivative consistency check of [`SmoothPath::new`].
pub const PATH_DERIVATIVE_TOL: f64 = 1e-5;

/// A smooth base path on `[t0, t1]` with a caller-supplied derivative.
#[derive(Clone)]
pub struct SmoothPath {
    t0: f64,
    t1: f64,
    x: PathFn,
    xdot: PathFn,
}

impl fmt::Debug for SmoothPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothPath").field("t0", &self.t0).field("t1", &self.t1).finish_non_exhaustive()
    }
}

impl SmoothPath {
    /// Validates finiteness and that `xdot` matches a finite-difference
    /// derivative of `x` at ten probe times.
    pub fn new(t0: f64, t1: f64, x: PathFn, xdot: PathFn) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(Error::InvalidPath(format!("need t0 < t1, got [{t0}, {t1}]")));
        }
        let path = SmoothPath { t0, t1, x, xdot };
        let dim = path.dim();
        let span = t1 - t0;
        let h = 1e-3 * span;
        for k in 0..10 {
            let t = t0 + (k as f64 + 0.5) / 10.0 * span;
            let v = path.velocity(t);
            if v.len() != dim || v.iter().chain(path.point(t).iter()).any(|c| !c.is_finite()) {
                return Err(Error::InvalidPath(format!("non-finite or mis-sized value at t = {t}")));
            }
            let fd = (path.point(t - 2.0 * h) - path.point(t - h) * 8.0 + path.point(t + h) * 8.0 - path.point(t + 2.0 * h)) / (12.0 * h);
            let gap = (&fd - &v).norm();
            if gap > PATH_DERIVATIVE_TOL * (1.0 + v.norm()) {
                return Err(Error::InvalidPath(format!("derivative mismatch {gap:.3e} at t = {t}")));
            }
        }
        Ok(path)
    }

    /// Straight segment from `a` at `t0` to `b` at `t1`.
    pub fn line(a: DVector<f64>, b: DVector<f64>, t0: f64, t1: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!("segment endpoints of length {} and {}", a.len(), b.len())));
        }
        let vel = (&b - &a) / (t1 - t0);
        let (a2, b2) = (a.clone(), b.clone());
        let v2 = vel.clone();
        SmoothPath::new(
            t0,
            t1,
            Arc::new(move |t| {
                let s = (t - t0) / (t1 - t0);
                &a2 * (1.0 - s) + &b2 * s
            }),
            Arc::new(move |_| v2.clone()),
        )
    }

    pub fn constant(x: DVector<f64>, t0: f64, t1: f64) -> Result<Self> {
        let n = x.len();
        SmoothPath::new(t0, t1, Arc::new(move |_| x.clone()), Arc::new(move |_| DVector::zeros(n)))
    }

    /// The same curve run backwards over the same parameter interval.
    pub fn reversed(&self) -> SmoothPath {
        let (t0, t1) = (self.t0, self.t1);
        let x = self.x.clone();
        let xdot = self.xdot.clone();
        SmoothPath { t0, t1, x: Arc::new(move |t| x(t0 + t1 - t)), xdot: Arc::new(move |t| -xdot(t0 + t1 - t)) }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn dim(&self) -> usize {
        (self.x)(self.t0).len()
    }

    pub fn point(&self, t: f64) -> DVector<f64> {
        (self.x)(t)
    }

    pub fn velocity(&self, t: f64) -> DVector<f64> {
        (self.xdot)(t)
    }

    pub fn start(&self) -> DVector<f64> {
        self.point(self.t0)
    }

    pub fn end(&self) -> DVector<f64> {
        self.point(self.t1)
    }
}

/// A concatenation of smooth pieces with matching endpoints.
#[derive(Debug, Clone)]
pub struct PiecewisePath {
    pieces: Vec<SmoothPath>,
}

/// Endpoint mismatch allowed between consecutive pieces.
const JOIN_TOL: f64 = 1e-9;

impl PiecewisePath {
    pub fn new(pieces: Vec<SmoothPath>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidPath("empty piecewise path".into()));
        }
        for w in pieces.windows(2) {
            if w[0].dim() != w[1].dim() {
                return Err(Error::DimensionMismatch("pieces of different dimension".into()));
            }
            let gap = (w[0].end() - w[1].start()).amax();
            if gap > JOIN_TOL {
                return Err(Error::InvalidPath(format!("pieces do not join (gap {gap:.3e})")));
            }
        }
        Ok(PiecewisePath { pieces })
    }

    pub fn pieces(&self) -> &[SmoothPath] {
        &self.pieces
    }

    pub fn start(&self) -> DVector<f64> {
        self.pieces[0].start()
    }

    pub fn end(&self) -> DVector<f64> {
        self.pieces[self.pieces.len() - 1].end()
    }

    pub fn then(&self, other: &PiecewisePath) -> Result<PiecewisePath> {
        PiecewisePath::new(self.pieces.iter().chain(&other.pieces).cloned().collect())
    }

    pub fn reversed(&self) -> PiecewisePath {
        PiecewisePath { pieces: self.pieces.iter().rev().map(SmoothPath::reversed).collect() }
    }

    /// Largest coordinate gap between the two endpoints.
    pub fn closure_gap(&self) -> f64 {
        (self.end() - self.start()).amax()
    }

    /// Positively oriented square in the `(i, j)` coordinate plane with lower
    /// left corner `corner`. The loop starts at the midpoint of the bottom
    /// edge, runs along `+e_i` first, and each unit of edge length takes one
    /// unit of parameter time.
    pub fn square_loop(corner: &DVector<f64>, i: usize, j: usize, side: f64) -> Result<PiecewisePath> {
        let n = corner.len();
        if i >= n || j >= n || i == j || !(side > 0.0) {
            return Err(Error::InvalidPath(format!("bad square loop: axes ({i}, {j}) in dimension {n}, side {side}")));
        }
        let at = |s: f64, r: f64| {
            let mut p = corner.clone();
            p[i] += s * side;
            p[j] += r * side;
            p
        };
        let corners = [at(0.5, 0.0), at(1.0, 0.0), at(1.0, 1.0), at(0.0, 1.0), at(0.0, 0.0), at(0.5, 0.0)];
        let mut t = 0.0;
        let mut pieces = Vec::with_capacity(5);
        for w in corners.windows(2) {
            let len = (&w[1] - &w[0]).norm();
            pieces.push(SmoothPath::line(w[0].clone(), w[1].clone(), t, t + len)?);
            t += len;
        }
        PiecewisePath::new(pieces)
    }
}

impl From<SmoothPath> for PiecewisePath {
    fn from(p: SmoothPath) -> Self {
        PiecewisePath { pieces: vec![p] }
    }
}

/// Integration controls for [`horizontal_lift_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftOptions {
    /// Requested step; the actual step divides the interval evenly.
    pub step: f64,
    /// Bound on the horizontality residual at every sample.
    pub tol: f64,
    /// Number of step halvings attempted before giving up.
    pub refinements: usize,
    /// Skip the residual check (used for convergence studies at coarse steps).
    pub check_residual: bool,
}

impl LiftOptions {
    pub fn with_step(step: f64) -> Self {
        LiftOptions { step, ..LiftOptions::default() }
    }

    pub fn from_settings(s: &NumericSettings) -> Self {
        LiftOptions { step: s.lift_step, tol: s.lift_tol, refinements: s.lift_refinements, check_residual: true }
    }

    pub fn unchecked(step: f64) -> Self {
        LiftOptions { step, check_residual: false, ..LiftOptions::default() }
    }
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions::from_settings(&NumericSettings::DEFAULT)
    }
}

/// Sampled horizontal lift over a smooth base path.
#[derive(Debug, Clone)]
pub struct LiftedPath {
    pub base: SmoothPath,
    pub times: Vec<f64>,
    pub samples: Vec<GroupElement>,
    pub step: f64,
    /// Largest horizontality residual over the samples (NaN when unchecked).
    pub max_residual: f64,
}

impl LiftedPath {
    pub fn first(&self) -> &GroupElement {
        &self.samples[0]
    }

    pub fn last(&self) -> &GroupElement {
        &self.samples[self.samples.len() - 1]
    }

    /// Dense output by geodesic interpolation `g_i exp(s log(g_i^-1 g_{i+1}))`.
    pub fn at(&self, t: f64) -> Result<GroupElement> {
        let (t0, t1) = (self.times[0], self.times[self.times.len() - 1]);
        if !(t >= t0 && t <= t1) {
            return Err(Error::InvalidPath(format!("t = {t} outside [{t0}, {t1}]")));
        }
        let i = match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => return Ok(self.samples[i].clone()),
            Err(i) => i - 1,
        };
        let s = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        let (gi, gj) = (&self.samples[i], &self.samples[i + 1]);
        let rel = lie::log(&gi.inverse()?.compose(gj)?)?;
        gi.compose(&lie::exp(&rel.scale(s)))
    }
}

fn rhs(conn: &LocalConnection, path: &SmoothPath, t: f64, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let a = conn.eval(&path.point(t), &path.velocity(t))?;
    Ok(-(a.matrix() * g))
}

fn integrate(conn: &LocalConnection, path: &SmoothPath, g0: &GroupElement, steps: usize) -> Result<(Vec<f64>, Vec<GroupElement>, f64)> {
    let tag = g0.tag().clone();
    let (t0, t1) = (path.t0(), path.t1());
    let h = (t1 - t0) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut samples = Vec::with_capacity(steps + 1);
    times.push(t0);
    samples.push(g0.clone());
    let mut g = g0.matrix().clone();
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = rhs(conn, path, t, &g)?;
        let k2 = rhs(conn, path, t + 0.5 * h, &(&g + &k1 * (0.5 * h)))?;
        let k3 = rhs(conn, path, t + 0.5 * h, &(&g + &k2 * (0.5 * h)))?;
        let k4 = rhs(conn, path, t + h, &(&g + &k3 * h))?;
        let next = &g + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::LiftDiverged(format!("non-finite state at t = {}", t + h)));
        }
        g = tag.project_group(&next);
        let tk = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
        times.push(tk);
        samples.push(GroupElement::from_matrix(&tag, g.clone()).map_err(|e| Error::LiftDiverged(format!("left the group at t = {tk}: {e}")))?);
    }
    Ok((times, samples, h))
}

/// Horizontality residual `|omega(x', g')|` at every sample, with `g'`
/// estimated from the samples by fourth-order finite differences.
pub fn horizontality_residuals(conn: &LocalConnection, lift: &LiftedPath) -> Result<Vec<f64>> {
    let n = lift.samples.len();
    if n < 5 {
        return Err(Error::InvalidPath("need at least five samples".into()));
    }
    let h = lift.step;
    let m = |i: usize| lift.samples[i].matrix();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let dg = if i < 2 {
            (m(i) * -25.0 + m(i + 1) * 48.0 - m(i + 2) * 36.0 + m(i + 3) * 16.0 - m(i + 4) * 3.0) / (12.0 * h)
        } else if i + 2 >= n {
            (m(i) * 25.0 - m(i - 1) * 48.0 + m(i - 2) * 36.0 - m(i - 3) * 16.0 + m(i - 4) * 3.0) / (12.0 * h)
        } else {
            (m(i - 2) - m(i - 1) * 8.0 + m(i + 1) * 8.0 - m(i + 2)) / (12.0 * h)
        };
        let t = lift.times[i];
        let p = PrincipalPoint::new(lift.base.point(t), lift.samples[i].clone());
        let v = PrincipalTangent::new(lift.base.velocity(t), dg);
        out.push(full_form(conn, &p, &v)?.norm());
    }
    Ok(out)
}

/// Horizontal lift of `path` starting at `g0`, with default tolerances.
pub fn horizontal_lift(conn: &LocalConnection, path: &SmoothPath, g0: &GroupElement, step: f64) -> Result<LiftedPath> {
    horizontal_lift_with(conn, path, g0, &LiftOptions::with_step(step))
}

pub fn horizontal_lift_with(conn: &LocalConnection, path: &SmoothPath, g0: &GroupElement, opts: &LiftOptions) -> Result<LiftedPath> {
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::InvalidStep(opts.step));
    }
    if g0.tag() != conn.tag() {
        return Err(Error::TagMismatch { left: conn.tag().clone(), right: g0.tag().clone() });
    }
    if path.dim() != conn.base_dim() {
        return Err(Error::DimensionMismatch(format!("path in R^{} for a base of dimension {}", path.dim(), conn.base_dim())));
    }
    let span = path.t1() - path.t0();
    let mut steps = ((span / opts.step).ceil() as usize).max(4);
    let mut attempts = 0;
    loop {
        let (times, samples, h) = integrate(conn, path, g0, steps)?;
        let mut lift = LiftedPath { base: path.clone(), times, samples, step: h, max_residual: f64::NAN };
        if !opts.check_residual {
            return Ok(lift);
        }
        let worst = horizontality_residuals(conn, &lift)?.into_iter().fold(0.0, f64::max);
        lift.max_residual = worst;
        if worst < opts.tol {
            return Ok(lift);
        }
        if attempts >= opts.refinements {
            return Err(Error::LiftDiverged(format!("horizontality residual {worst:.3e} above {:.1e} at step {h:.3e}", opts.tol)));
        }
        attempts += 1;
        steps *= 2;
    }
}

/// The transport element `G` with `lift(t1) = G lift(t0)`, for lifts along
/// every piece composed in order.
pub fn transport_element(conn: &LocalConnection, path: &PiecewisePath, opts: &LiftOptions) -> Result<GroupElement> {
    let mut total = GroupElement::identity(conn.tag());
    for piece in path.pieces() {
        let lift = horizontal_lift_with(conn, piece, &GroupElement::identity(conn.tag()), opts)?;
        total = lift.last().compose(&total)?;
    }
    Ok(total)
}

/// A homogeneous fibre `F = G/G'` in coordinates, acted on by `G`.
pub trait FiberAction {
    fn tag(&self) -> &GroupTag;
    fn fiber_dim(&self) -> usize;
    fn act(&self, g: &GroupElement, z: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Parallel transport of a fibre point along `path`: `h(t1) h(t0)^-1 z0`.
pub fn parallel_transport<F: FiberAction + ?Sized>(conn: &LocalConnection, path: &PiecewisePath, action: &F, z0: &DVector<f64>, opts: &LiftOptions) -> Result<DVector<f64>> {
    if action.tag() != conn.tag() {
        return Err(Error::TagMismatch { left: conn.tag().clone(), right: action.tag().clone() });
    }
    action.act(&transport_element(conn, path, opts)?, z0)
}

/// Holonomy of a closed loop: the endpoint of the lift started at the identity.
pub fn holonomy(conn: &LocalConnection, path: &PiecewisePath, opts: &LiftOptions) -> Result<GroupElement> {
    let gap = path.closure_gap();
    if gap > NumericSettings::DEFAULT.loop_closure_tol {
        return Err(Error::LoopNotClosed { gap });
    }
    transport_element(conn, path, opts)
}

/// A sampled path in a single fibre.
#[derive(Debug, Clone, PartialEq)]
pub struct Development {
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
}

impl Development {
    pub fn max_second_difference(&self) -> f64 {
        max_second_difference(&self.times, &self.points)
    }
}

/// Development of a total-space path `t -> (x(t), zeta(t))`: each point is
/// carried back to the fibre over `x(t0)` by inverse parallel transport.
pub fn develop_total_path<F, Z>(conn: &LocalConnection, action: &F, base: &SmoothPath, zeta: Z, opts: &LiftOptions) -> Result<Development>
where
    F: FiberAction + ?Sized,
    Z: Fn(f64) -> DVector<f64>,
{
    let lift = horizontal_lift_with(conn, base, &GroupElement::identity(conn.tag()), opts)?;
    let mut points = Vec::with_capacity(lift.times.len());
    for (t, g) in lift.times.iter().zip(&lift.samples) {
        points.push(action.act(&g.inverse()?, &zeta(*t))?);
    }
    Ok(Development { times: lift.times, points })
}

/// `max |y_{i+1} - 2 y_i + y_{i-1}| / h^2`, the discrete second derivative.
/// Vanishes on samples of an affinely parameterized straight line.
pub fn max_second_difference(times: &[f64], points: &[DVector<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 1..points.len().saturating_sub(1) {
        let h = 0.5 * (times[i + 1] - times[i - 1]);
        let dd = (&points[i + 1] - &points[i] * 2.0 + &points[i - 1]).norm() / (h * h);
        worst = worst.max(dd);
    }
    worst
}

/// Step-halving error ratio `|g_h - g_{h/2}| / |g_{h/2} - g_{h/4}|` at the
/// end of the lift; close to 16 for a fourth-order method.
pub fn convergence_ratio(conn: &LocalConnection, path: &SmoothPath, g0: &GroupElement, step: f64) -> Result<f64> {
    let end = |h: f64| -> Result<DMatrix<f64>> { Ok(horizontal_lift_with(conn, path, g0, &LiftOptions::unchecked(h))?.last().matrix().clone()) };
    let (a, b, c) = (end(step)?, end(step / 2.0)?, end(step / 4.0)?);
    Ok((&a - &b).norm() / (&b - &c).norm())
}

/// Richardson error estimate `|g_h - g_{h/2}| / 15` of the lift endpoint.
pub fn richardson_error(conn: &LocalConnection, path: &SmoothPath, g0: &GroupElement, step: f64) -> Result<f64> {
    let full = horizontal_lift_with(conn, path, g0, &LiftOptions::with_step(step))?;
    let half = horizontal_lift_with(conn, path, g0, &LiftOptions::with_step(step / 2.0))?;
    Ok((full.last().matrix() - half.last().matrix()).norm() / 15.0)
}
