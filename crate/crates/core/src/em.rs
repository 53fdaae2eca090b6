//! Exterior calculus on `R^4` with coordinates `(t, x1, x2, x3)` for the
//! electromagnetic field.
//!
//! 2-forms are stored on the basis
//! `[dx2^dx3, dx3^dx1, dx1^dx2, dx1^dt, dx2^dt, dx3^dt]`, 3-forms on
//! `[dx1^dx2^dx3, dx2^dx3^dt, dx3^dx1^dt, dx1^dx2^dt]`, and 4-forms by their
//! coefficient on `dt^dx1^dx2^dx3`.
//!
//! With `F = B_1 dx2^dx3 + .. + (E_1 dx1 + ..)^dt` and
//! `G = D_1 dx2^dx3 + .. - (H_1 dx1 + ..)^dt`, the exterior derivative reads
//! `dF = (div B, rot E + dB/dt)` and `dG = (div D, -(rot H - dD/dt))`, so
//! `dF = 0` and `dG = 4 pi J` are the four field equations.
//!
//! The Hodge star uses the metric `diag(-alpha, 1, 1, 1)` and the
//! orientation `dt^dx1^dx2^dx3`. On 2-forms it sends `(B, E)` to
//! `(E / sqrt(alpha), -sqrt(alpha) B)`, so `G = sqrt(eps0/mu0) * F` under
//! `D = eps0 E`, `H = B / mu0` exactly when `sqrt(alpha) = 1/sqrt(eps0 mu0)`,
//! i.e. `alpha = c^2`. [`calibrate_alpha`] recovers this numerically.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Point4 = [f64; 4];
pub type ScalarFn4 = Arc<dyn Fn(&Point4) -> f64 + Send + Sync>;

/// Default finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

fn constant(c: f64) -> ScalarFn4 {
    Arc::new(move |_| c)
}

fn scaled(f: &ScalarFn4, s: f64) -> ScalarFn4 {
    let f = f.clone();
    Arc::new(move |p| s * f(p))
}

/// Three scalar component functions of a vector field.
#[derive(Clone)]
pub struct VectorField(pub [ScalarFn4; 3]);

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorField(..)")
    }
}

impl VectorField {
    pub fn zero() -> Self {
        VectorField([constant(0.0), constant(0.0), constant(0.0)])
    }

    pub fn constant(v: [f64; 3]) -> Self {
        VectorField(v.map(constant))
    }

    pub fn from_fns(f1: ScalarFn4, f2: ScalarFn4, f3: ScalarFn4) -> Self {
        VectorField([f1, f2, f3])
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorField([scaled(&self.0[0], s), scaled(&self.0[1], s), scaled(&self.0[2], s)])
    }

    pub fn eval(&self, p: &Point4) -> [f64; 3] {
        [self.0[0](p), self.0[1](p), self.0[2](p)]
    }
}

/// A 2-form with coefficient functions on the six basis 2-forms.
#[derive(Clone)]
pub struct Form2Field(pub [ScalarFn4; 6]);

/// A 3-form with coefficient functions on the four basis 3-forms.
#[derive(Clone)]
pub struct Form3Field(pub [ScalarFn4; 4]);

impl fmt::Debug for Form2Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Form2Field(..)")
    }
}

impl fmt::Debug for Form3Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Form3Field(..)")
    }
}

impl Form2Field {
    pub fn eval(&self, p: &Point4) -> [f64; 6] {
        std::array::from_fn(|i| self.0[i](p))
    }
}

impl Form3Field {
    pub fn eval(&self, p: &Point4) -> [f64; 4] {
        std::array::from_fn(|i| self.0[i](p))
    }
}

#[allow(non_snake_case)]
pub fn build_F(e: &VectorField, b: &VectorField) -> Form2Field {
    let [b1, b2, b3] = b.0.clone();
    let [e1, e2, e3] = e.0.clone();
    Form2Field([b1, b2, b3, e1, e2, e3])
}

#[allow(non_snake_case)]
pub fn build_G(d: &VectorField, h: &VectorField) -> Form2Field {
    let [d1, d2, d3] = d.0.clone();
    let [h1, h2, h3] = h.scaled(-1.0).0;
    Form2Field([d1, d2, d3, h1, h2, h3])
}

#[allow(non_snake_case)]
pub fn build_J(rho: &ScalarFn4, j: &VectorField) -> Form3Field {
    let [j1, j2, j3] = j.scaled(-1.0).0;
    Form3Field([rho.clone(), j1, j2, j3])
}

/// Central difference of `f` along coordinate `axis`.
fn partial(f: &ScalarFn4, p: &Point4, axis: usize, h: f64) -> f64 {
    let (mut a, mut b) = (*p, *p);
    a[axis] += h;
    b[axis] -= h;
    (f(&a) - f(&b)) / (2.0 * h)
}

/// Exterior derivative of a 2-form at `p`, by central differences.
pub fn d2_numeric(form: &Form2Field, p: &Point4, h: f64) -> [f64; 4] {
    let d = |i: usize, axis: usize| partial(&form.0[i], p, axis, h);
    [
        d(0, 1) + d(1, 2) + d(2, 3),
        d(0, 0) + d(5, 2) - d(4, 3),
        d(1, 0) + d(3, 3) - d(5, 1),
        d(2, 0) + d(4, 1) - d(3, 2),
    ]
}

/// Exterior derivative of a 3-form at `p` on `dt^dx1^dx2^dx3`.
pub fn d3_numeric(form: &Form3Field, p: &Point4, h: f64) -> f64 {
    let d = |i: usize, axis: usize| partial(&form.0[i], p, axis, h);
    d(0, 0) - d(1, 1) - d(2, 2) - d(3, 3)
}

/// `(mu, nu)` index pairs of the 2-form basis with the sign relating the
/// basis coefficient to the tensor component `F_{mu nu}`.
const PAIRS: [(usize, usize, f64); 6] = [(2, 3, 1.0), (3, 1, 1.0), (1, 2, 1.0), (1, 0, 1.0), (2, 0, 1.0), (3, 0, 1.0)];

/// Antisymmetric tensor `F_{mu nu}` of a 2-form value.
pub fn form2_to_tensor(c: &[f64; 6]) -> [[f64; 4]; 4] {
    let mut t = [[0.0; 4]; 4];
    for (k, &(m, n, s)) in PAIRS.iter().enumerate() {
        t[m][n] = s * c[k];
        t[n][m] = -s * c[k];
    }
    t
}

pub fn tensor_to_form2(t: &[[f64; 4]; 4]) -> [f64; 6] {
    std::array::from_fn(|k| {
        let (m, n, s) = PAIRS[k];
        s * t[m][n]
    })
}

fn levi_civita(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let p = [i, j, k, l];
    let mut sign = 1.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            if p[a] == p[b] {
                return 0.0;
            }
            if p[a] > p[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Hodge star of a 2-form value for the metric `diag(-alpha, 1, 1, 1)`:
/// `(*F)_{mu nu} = 1/2 sqrt|g| eps_{a b mu nu} F^{a b}`.
pub fn hodge2(c: &[f64; 6], alpha: f64) -> [f64; 6] {
    let f = form2_to_tensor(c);
    let inv = [-1.0 / alpha, 1.0, 1.0, 1.0];
    let vol = alpha.sqrt();
    let mut out = [[0.0; 4]; 4];
    for (m, row) in out.iter_mut().enumerate() {
        for (n, slot) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    acc += levi_civita(a, b, m, n) * inv[a] * inv[b] * f[a][b];
                }
            }
            *slot = 0.5 * vol * acc;
        }
    }
    tensor_to_form2(&out)
}

/// `** = -1` on 2-forms in Lorentzian signature.
pub const HODGE2_SQUARE_SIGN: f64 = -1.0;

/// Vacuum constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellConstants {
    pub eps0: f64,
    pub mu0: f64,
}

impl MaxwellConstants {
    pub const SI: MaxwellConstants = MaxwellConstants { eps0: 8.8541878128e-12, mu0: 1.25663706212e-6 };
    pub const NATURAL: MaxwellConstants = MaxwellConstants { eps0: 1.0, mu0: 1.0 };

    pub fn new(eps0: f64, mu0: f64) -> Result<Self> {
        if !(eps0 > 0.0 && mu0 > 0.0 && eps0.is_finite() && mu0.is_finite()) {
            return Err(Error::DimensionMismatch(format!("vacuum constants must be positive, got eps0 = {eps0}, mu0 = {mu0}")));
        }
        Ok(MaxwellConstants { eps0, mu0 })
    }

    /// Wave speed `1 / sqrt(eps0 mu0)`.
    pub fn c(&self) -> f64 {
        1.0 / (self.eps0 * self.mu0).sqrt()
    }

    pub fn impedance_factor(&self) -> f64 {
        (self.eps0 / self.mu0).sqrt()
    }
}

impl Default for MaxwellConstants {
    fn default() -> Self {
        MaxwellConstants::SI
    }
}

/// Finds the metric factor `alpha` for which the constitutive relations
/// `D = eps0 E`, `H = B / mu0` read `G = sqrt(eps0/mu0) * F`.
///
/// The star scales the electric block as `alpha^(-1/2)` and the magnetic
/// block as `alpha^(1/2)`, so each block fixes `alpha` from one probe at
/// `alpha = 1`; the two values must agree.
pub fn calibrate_alpha(k: &MaxwellConstants) -> Result<f64> {
    let z = k.impedance_factor();
    let electric = hodge2(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0], 1.0)[0];
    let alpha_e = (z * electric / k.eps0).powi(2);
    let magnetic = hodge2(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0)[3];
    let alpha_m = (-1.0 / k.mu0 / (z * magnetic)).powi(2);
    if ((alpha_e - alpha_m) / alpha_e).abs() > 1e-12 || !(alpha_e > 0.0) {
        return Err(Error::DimensionMismatch(format!("electric and magnetic calibrations disagree: {alpha_e} vs {alpha_m}")));
    }
    Ok(alpha_e)
}

/// Electromagnetic field data with sources.
#[derive(Clone, Debug)]
pub struct MaxwellFields {
    pub e: VectorField,
    pub b: VectorField,
    pub d: VectorField,
    pub h: VectorField,
    pub rho: ScalarFnDebug,
    pub j: VectorField,
}

/// Wrapper giving scalar fields a `Debug` impl.
#[derive(Clone)]
pub struct ScalarFnDebug(pub ScalarFn4);

impl fmt::Debug for ScalarFnDebug {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarFn4(..)")
    }
}

impl MaxwellFields {
    /// Vacuum fields with `D = eps0 E`, `H = B / mu0` and no sources.
    pub fn vacuum(e: VectorField, b: VectorField, k: &MaxwellConstants) -> Self {
        MaxwellFields { d: e.scaled(k.eps0), h: b.scaled(1.0 / k.mu0), e, b, rho: ScalarFnDebug(constant(0.0)), j: VectorField::zero() }
    }

    pub fn zero() -> Self {
        MaxwellFields::vacuum(VectorField::zero(), VectorField::zero(), &MaxwellConstants::NATURAL)
    }

    #[allow(non_snake_case)]
    pub fn F(&self) -> Form2Field {
        build_F(&self.e, &self.b)
    }

    #[allow(non_snake_case)]
    pub fn G(&self) -> Form2Field {
        build_G(&self.d, &self.h)
    }

    #[allow(non_snake_case)]
    pub fn J(&self) -> Form3Field {
        build_J(&self.rho.0, &self.j)
    }
}

/// Linearly polarized plane wave `E = amp * pol * cos(k.x - omega t)`,
/// `B = k_hat x E / c`, with `omega = c |k|`.
pub fn plane_wave(k: &MaxwellConstants, wave: [f64; 3], pol: [f64; 3], amp: f64) -> Result<MaxwellFields> {
    let kn = (wave[0] * wave[0] + wave[1] * wave[1] + wave[2] * wave[2]).sqrt();
    let dot = wave[0] * pol[0] + wave[1] * pol[1] + wave[2] * pol[2];
    if kn == 0.0 || dot.abs() > 1e-12 * kn {
        return Err(Error::DimensionMismatch("plane wave needs a nonzero wave vector orthogonal to the polarization".into()));
    }
    let c = k.c();
    let omega = c * kn;
    let kh = wave.map(|v| v / kn);
    let bdir = [kh[1] * pol[2] - kh[2] * pol[1], kh[2] * pol[0] - kh[0] * pol[2], kh[0] * pol[1] - kh[1] * pol[0]];
    let phase = move |p: &Point4| wave[0] * p[1] + wave[1] * p[2] + wave[2] * p[3] - omega * p[0];
    let comp = |dir: [f64; 3], scale: f64, i: usize| -> ScalarFn4 { Arc::new(move |p| scale * dir[i] * phase(p).cos()) };
    let e = VectorField([comp(pol, amp, 0), comp(pol, amp, 1), comp(pol, amp, 2)]);
    let b = VectorField([comp(bdir, amp / c, 0), comp(bdir, amp / c, 1), comp(bdir, amp / c, 2)]);
    Ok(MaxwellFields::vacuum(e, b, k))
}

/// Point charge `q` at the origin: `D = q r / |r|^3`, `E = D / eps0`.
pub fn coulomb(k: &MaxwellConstants, q: f64) -> MaxwellFields {
    let comp = |i: usize, s: f64| -> ScalarFn4 {
        Arc::new(move |p| {
            let r2 = p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
            s * q * p[i + 1] / (r2 * r2.sqrt())
        })
    };
    let d = VectorField([comp(0, 1.0), comp(1, 1.0), comp(2, 1.0)]);
    let e = VectorField([comp(0, 1.0 / k.eps0), comp(1, 1.0 / k.eps0), comp(2, 1.0 / k.eps0)]);
    MaxwellFields { e, b: VectorField::zero(), d, h: VectorField::zero(), rho: ScalarFnDebug(constant(0.0)), j: VectorField::zero() }
}

/// Inside a uniformly charged ball of density `rho0`: `D = (4 pi rho0 / 3) r`.
pub fn uniform_ball(k: &MaxwellConstants, rho0: f64) -> MaxwellFields {
    let s = 4.0 * PI * rho0 / 3.0;
    let comp = |i: usize, f: f64| -> ScalarFn4 { Arc::new(move |p| f * p[i + 1]) };
    let d = VectorField([comp(0, s), comp(1, s), comp(2, s)]);
    let e = d.scaled(1.0 / k.eps0);
    MaxwellFields { e, b: VectorField::zero(), d, h: VectorField::zero(), rho: ScalarFnDebug(constant(rho0)), j: VectorField::zero() }
}

/// Residual maxima of [`maxwell_check`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MaxwellReport {
    pub points: usize,
    /// `max |dF|`.
    pub df: f64,
    /// `max |dG - 4 pi J|`.
    pub dg_minus_4pi_j: f64,
    /// `max |div B|`.
    pub div_b: f64,
    /// `max |rot E + dB/dt|`.
    pub faraday: f64,
    /// `max |div D - 4 pi rho|`.
    pub gauss: f64,
    /// `max |rot H - dD/dt - 4 pi j|`.
    pub ampere: f64,
    /// Largest mismatch between form components and the classical
    /// expressions they stand for.
    pub identification: f64,
}

fn curl(f: &VectorField, p: &Point4, h: f64) -> [f64; 3] {
    let d = |i: usize, axis: usize| partial(&f.0[i], p, axis, h);
    [d(2, 2) - d(1, 3), d(0, 3) - d(2, 1), d(1, 1) - d(0, 2)]
}

fn div(f: &VectorField, p: &Point4, h: f64) -> f64 {
    (0..3).map(|i| partial(&f.0[i], p, i + 1, h)).sum()
}

fn dt(f: &VectorField, p: &Point4, h: f64) -> [f64; 3] {
    std::array::from_fn(|i| partial(&f.0[i], p, 0, h))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Evaluates `dF` and `dG - 4 pi J` on `grid` next to the classical
/// divergence and curl equations, and records how far each form
/// component is from its classical counterpart.
pub fn maxwell_check(fields: &MaxwellFields, grid: &[Point4], h: f64) -> MaxwellReport {
    let (f, g, j) = (fields.F(), fields.G(), fields.J());
    let mut r = MaxwellReport { points: grid.len(), ..Default::default() };
    let four_pi = 4.0 * PI;
    for p in grid {
        let df = d2_numeric(&f, p, h);
        let dg = d2_numeric(&g, p, h);
        let jv = j.eval(p);
        let src: [f64; 4] = std::array::from_fn(|i| dg[i] - four_pi * jv[i]);

        let div_b = div(&fields.b, p, h);
        let rot_e = curl(&fields.e, p, h);
        let db = dt(&fields.b, p, h);
        let faraday: [f64; 3] = std::array::from_fn(|i| rot_e[i] + db[i]);
        let rho = (fields.rho.0)(p);
        let gauss = div(&fields.d, p, h) - four_pi * rho;
        let rot_h = curl(&fields.h, p, h);
        let dd = dt(&fields.d, p, h);
        let jj = fields.j.eval(p);
        let ampere: [f64; 3] = std::array::from_fn(|i| rot_h[i] - dd[i] - four_pi * jj[i]);

        r.df = r.df.max(norm(&df));
        r.dg_minus_4pi_j = r.dg_minus_4pi_j.max(norm(&src));
        r.div_b = r.div_b.max(div_b.abs());
        r.faraday = r.faraday.max(norm(&faraday));
        r.gauss = r.gauss.max(gauss.abs());
        r.ampere = r.ampere.max(norm(&ampere));

        let mut worst = (df[0] - div_b).abs().max((src[0] - gauss).abs());
        for i in 0..3 {
            worst = worst.max((df[i + 1] - faraday[i]).abs()).max((src[i + 1] + ampere[i]).abs());
        }
        r.identification = r.identification.max(worst);
    }
    r
}

/// Regular grid with `n[i]` points per axis between `lo[i]` and `hi[i]`.
pub fn grid(lo: Point4, hi: Point4, n: [usize; 4]) -> Vec<Point4> {
    let coord = |axis: usize, k: usize| {
        if n[axis] <= 1 {
            lo[axis]
        } else {
            lo[axis] + (hi[axis] - lo[axis]) * k as f64 / (n[axis] - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(n.iter().product());
    for a in 0..n[0].max(1) {
        for b in 0..n[1].max(1) {
            for c in 0..n[2].max(1) {
                for d in 0..n[3].max(1) {
                    out.push([coord(0, a), coord(1, b), coord(2, c), coord(3, d)]);
                }
            }
        }
    }
    out
}

/// A scalar sampled on a rectilinear grid in `(t, x1, x2, x3)`, interpolated
/// multilinearly. Axes with a single sample are treated as constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledScalar {
    axes: [Vec<f64>; 4],
    values: Vec<f64>,
}

impl SampledScalar {
    /// Builds from rows `(t, x1, x2, x3, value)` covering every grid node once.
    pub fn from_rows(rows: &[[f64; 5]]) -> Result<Self> {
        let axes: [Vec<f64>; 4] = std::array::from_fn(|a| {
            let mut v: Vec<f64> = rows.iter().map(|r| r[a]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        });
        let total: usize = axes.iter().map(Vec::len).product();
        if rows.is_empty() || total != rows.len() {
            return Err(Error::DimensionMismatch(format!("{} samples do not form a full grid of {} nodes", rows.len(), total)));
        }
        let mut values = vec![f64::NAN; total];
        for r in rows {
            let idx = Self::flat_index(&axes, std::array::from_fn(|a| axes[a].binary_search_by(|v| v.total_cmp(&r[a])).expect("value is an axis node")));
            if !values[idx].is_nan() {
                return Err(Error::DimensionMismatch(format!("duplicate sample at ({}, {}, {}, {})", r[0], r[1], r[2], r[3])));
            }
            values[idx] = r[4];
        }
        Ok(SampledScalar { axes, values })
    }

    fn flat_index(axes: &[Vec<f64>; 4], i: [usize; 4]) -> usize {
        ((i[0] * axes[1].len() + i[1]) * axes[2].len() + i[2]) * axes[3].len() + i[3]
    }

    /// Multilinear interpolation, clamped to the grid box.
    pub fn eval(&self, p: &Point4) -> f64 {
        let mut lo = [0usize; 4];
        let mut w = [0.0f64; 4];
        for a in 0..4 {
            let ax = &self.axes[a];
            if ax.len() == 1 {
                continue;
            }
            let x = p[a].clamp(ax[0], ax[ax.len() - 1]);
            let i = ax.partition_point(|v| *v <= x).clamp(1, ax.len() - 1) - 1;
            lo[a] = i;
            w[a] = (x - ax[i]) / (ax[i + 1] - ax[i]);
        }
        let mut acc = 0.0;
        for corner in 0..16usize {
            let mut idx = [0usize; 4];
            let mut weight = 1.0;
            for a in 0..4 {
                let up = (corner >> a) & 1 == 1;
                if self.axes[a].len() == 1 {
                    if up {
                        weight = 0.0;
                    }
                    continue;
                }
                idx[a] = lo[a] + usize::from(up);
                weight *= if up { w[a] } else { 1.0 - w[a] };
            }
            if weight != 0.0 {
                acc += weight * self.values[Self::flat_index(&self.axes, idx)];
            }
        }
        acc
    }

    pub fn into_fn(self) -> ScalarFn4 {
        Arc::new(move |p| self.eval(p))
    }
}
