//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cartan_core::cartan::{develop_base_path, is_cartan, soldering, soldering_matrix, soldering_with_choice, CartanClass};
use cartan_core::em::{self, calibrate_alpha, d2_numeric, hodge2, plane_wave, MaxwellConstants, MaxwellFields, Point4, ScalarFn4, VectorField};
use cartan_core::lie::{self, GroupElement, GroupTag};
use cartan_core::models::{self, Christoffel, GravityField, KeplerOrbit, MobiusPoint};
use cartan_core::principal::{check_axioms, curvature};
use cartan_core::transport::{convergence_ratio, holonomy, parallel_transport, LiftOptions, PiecewisePath, SmoothPath};
use cartan_core::Result;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: pass flag and a short measurement summary.
type Outcome = (bool, String);

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Result<Outcome>,
}

const G: f64 = 9.81;

fn freefall() -> SmoothPath {
    SmoothPath::new(
        0.0,
        1.0,
        Arc::new(|t| DVector::from_vec(vec![t, 0.5 * G * t * t])),
        Arc::new(|t| DVector::from_vec(vec![1.0, G * t])),
    )
    .unwrap()
}

fn perturbed() -> SmoothPath {
    SmoothPath::new(
        0.0,
        1.0,
        Arc::new(|t| DVector::from_vec(vec![t, 0.5 * G * t * t + 0.1 * (5.0 * t).sin()])),
        Arc::new(|t| DVector::from_vec(vec![1.0, G * t + 0.5 * (5.0 * t).cos()])),
    )
    .unwrap()
}

fn random_smooth_path<R: Rng>(rng: &mut R, dim: usize) -> SmoothPath {
    let coef: Vec<[f64; 4]> = (0..dim).map(|_| [0; 4].map(|_| rng.random_range(-1.0..1.0))).collect();
    let c2 = coef.clone();
    SmoothPath::new(
        0.0,
        1.0,
        Arc::new(move |t| DVector::from_fn(dim, |i, _| coef[i][0] + coef[i][1] * t + coef[i][2] * (3.0 * t).sin() + coef[i][3] * t * t)),
        Arc::new(move |t| DVector::from_fn(dim, |i, _| c2[i][1] + 3.0 * c2[i][2] * (3.0 * t).cos() + 2.0 * c2[i][3] * t)),
    )
    .unwrap()
}

fn connection_axioms() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for name in models::MODEL_NAMES {
        let cs = models::by_name(name)?;
        let r = check_axioms(cs.connection(), 1000, 11)?;
        ok &= r.fundamental_residual < 1e-8 && r.equivariance_residual < 1e-8;
        worst = worst.max(r.fundamental_residual).max(r.equivariance_residual);
    }
    Ok((ok, format!("{} models x 1000 samples, worst residual {worst:.2e}", models::MODEL_NAMES.len())))
}

fn flat_homogeneous() -> Result<Outcome> {
    let cs = models::by_name("homogeneous")?;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut transport_err, mut dev_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let path = random_smooth_path(&mut rng, 2);
        let y = DVector::from_fn(2, |_, _| rng.random_range(-2.0..2.0));
        let moved = parallel_transport(cs.connection(), &PiecewisePath::from(path.clone()), cs.spec(), &y, &LiftOptions::default())?;
        transport_err = transport_err.max((moved - &y).amax());
        let dev = develop_base_path(&cs, &path, &LiftOptions::default())?;
        for (t, p) in dev.times.iter().zip(&dev.points) {
            dev_err = dev_err.max((p - path.point(*t)).amax());
        }
    }
    Ok((transport_err < 1e-8 && dev_err < 1e-8, format!("20 paths, transport {transport_err:.2e}, development {dev_err:.2e}")))
}

fn freefall_straight() -> Result<Outcome> {
    let cs = models::galilean_gravity(GravityField::constant(G));
    let opts = LiftOptions::with_step(1e-3);
    let straight = develop_base_path(&cs, &freefall(), &opts)?.max_second_difference();
    let bent = develop_base_path(&cs, &perturbed(), &opts)?.max_second_difference();
    Ok((straight < 1e-6 && bent > 1e-2, format!("free fall {straight:.2e}, perturbed {bent:.2e}")))
}

fn integrability() -> Result<Outcome> {
    let opts = LiftOptions::default();
    let flat = models::galilean_gravity(GravityField::constant(G));
    let big = PiecewisePath::square_loop(&DVector::from_vec(vec![0.2, -0.3]), 0, 1, 0.5)?;
    let flat_log = lie::log(&holonomy(flat.connection(), &big, &opts)?)?.norm();

    let k = 0.3;
    let delta = 0.1;
    let curved = models::galilean_gravity(GravityField::linear(G, k));
    let corner = DVector::from_vec(vec![0.4, 0.7]);
    let square = PiecewisePath::square_loop(&corner, 0, 1, delta)?;
    let log_hol = lie::log(&holonomy(curved.connection(), &square, &opts)?)?;
    let centre = corner.add_scalar(0.5 * delta);
    let e = |i: usize| DVector::from_fn(2, |j, _| if i == j { 1.0 } else { 0.0 });
    let omega = curvature(curved.connection(), &centre, &e(0), &e(1), 1e-5)?;
    let predicted = omega.scale(-delta * delta);
    let rel = (&log_hol - &predicted).norm() / predicted.norm();
    let c = log_hol.coords();
    Ok((
        flat_log < 1e-7 && rel < 0.05,
        format!("constant V |log| {flat_log:.2e}; log holonomy ({:.3e}, {:.1e}, {:.1e}), off prediction by {:.2}%", c[0], c[1], c[2], 100.0 * rel),
    ))
}

fn soldering_checks() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut spread: f64 = 0.0;
    for name in ["affine", "galilean", "galilean3d", "projective", "mobius"] {
        let cs = models::by_name(name)?;
        for _ in 0..100 {
            let x = cs.connection().domain().sample(&mut rng);
            let w = DVector::from_fn(cs.base_dim(), |_, _| rng.random_range(-1.0..1.0));
            let reference = soldering(&cs, &x, &w)?;
            for _ in 0..5 {
                let g_prime = cs.spec().random_subgroup_element(&mut rng, 0.5);
                let eta_prime = cs.spec().random_subalgebra_element(&mut rng, 1.0);
                let other = soldering_with_choice(&cs, &x, &w, &g_prime, &eta_prime)?;
                spread = spread.max((other - &reference).amax() / (1.0 + reference.amax()));
            }
        }
    }

    let cs = models::galilean_gravity(GravityField::linear(G, 0.3));
    let path = perturbed();
    let dev = develop_base_path(&cs, &path, &LiftOptions::with_step(1e-3))?;
    let sigma = soldering(&cs, &path.start(), &path.velocity(path.t0()))?;
    let tangency = (&dev.initial_tangent - sigma).amax();
    Ok((spread < 1e-9 && tangency < 1e-6, format!("choice spread {spread:.2e} over 5 models x 100 points x 5 choices, tangency {tangency:.2e}")))
}

fn christoffel() -> Christoffel {
    Arc::new(|x: &DVector<f64>| vec![DMatrix::from_row_slice(2, 2, &[0.1 * x[1], 0.2, -0.3, x[0]]), DMatrix::from_row_slice(2, 2, &[0.5, -0.1 * x[0], 0.0, 0.25])])
}

fn affine_criterion() -> Result<Outcome> {
    let id = models::affine_structure(2, christoffel(), Arc::new(|_| DMatrix::identity(2, 2)))?;
    let zero = models::affine_structure(2, christoffel(), Arc::new(|_| DMatrix::zeros(2, 2)))?;
    let sigma = |x: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[1.0 + x[0] * x[0], 0.3, x[1], 2.0]);
    let general = models::affine_structure(2, christoffel(), Arc::new(sigma))?;
    let class_id = is_cartan(&id, 200, 61)?.class;
    let class_zero = is_cartan(&zero, 200, 62)?.class;
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    let mut err: f64 = 0.0;
    for _ in 0..100 {
        let x = general.connection().domain().sample(&mut rng);
        err = err.max((soldering_matrix(&general, &x)? - sigma(&x)).amax());
        err = err.max((soldering_matrix(&id, &x)? - DMatrix::identity(2, 2)).amax());
    }
    Ok((
        class_id == CartanClass::Cartan && class_zero == CartanClass::Neither && err < 1e-9,
        format!("sigma0 = id: {class_id}, sigma0 = 0: {class_zero}, soldering error {err:.2e}"),
    ))
}

fn conformal_model() -> Result<Outcome> {
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let (mut q, mut equiv, mut round): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..200 {
        let z = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let p = models::mobius_embed_plane(&z);
        q = q.max(models::mobius_q(p.ray()).abs());
        round = round.max((models::mobius_stereo_roundtrip(&p)? - &z).amax());
        let y = DVector::from_fn(n + 1, |_, _| rng.random_range(-1.0..1.0)).normalize();
        let s = models::mobius_embed_sphere(&y)?;
        q = q.max(models::mobius_q(s.ray()).abs());
        if y[n] > -0.9 {
            round = round.max((models::mobius_stereo_roundtrip(&s)? - models::stereographic(&y)?).amax());
        }
        let r = lie::random_element(&GroupTag::So(n), &mut rng, 2.0).into_matrix();
        let lhs = models::mobius_embed_plane(&(&r * &z));
        let rhs = p.transform(&models::orthogonal_embed(&r))?;
        equiv = equiv.max((lhs.ray() - rhs.ray()).amax());
    }
    let mut far = DVector::zeros(n + 2);
    far[0] = 1.0;
    far[n + 1] = -1.0;
    let excluded = matches!(models::mobius_stereo_roundtrip(&MobiusPoint::from_ray(far)?), Err(cartan_core::Error::PointAtInfinity));
    Ok((
        q < 1e-10 && equiv < 1e-10 && round < 1e-10 && excluded,
        format!("Q {q:.2e}, equivariance {equiv:.2e}, round trip {round:.2e}, excluded ray rejected: {excluded}"),
    ))
}

fn poly(f: fn(&Point4) -> f64) -> ScalarFn4 {
    Arc::new(f)
}

fn field(f: [fn(&Point4) -> f64; 3]) -> VectorField {
    VectorField::from_fns(poly(f[0]), poly(f[1]), poly(f[2]))
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn maxwell_criterion() -> Result<Outcome> {
    // Degree-2 polynomial fields with hand-computed divergences and curls.
    let e = field([|p| p[2] * p[0], |p| p[3] * p[3], |p| p[1] * p[2]]);
    let b = field([|p| p[1] * p[1], |p| p[0] * p[3], |p| p[2] * p[3] + p[0] * p[0]]);
    let d = field([|p| p[0] * p[1] * p[1], |p| p[2] * p[3], |p| p[0]]);
    let hm = field([|p| p[3] * p[0], |p| p[1] * p[1], |p| p[2] * p[2]]);
    let rho = poly(|p| p[1]);
    let j = field([|p| p[0], |_| 0.0, |p| p[2]]);
    let four_pi = 4.0 * PI;
    let f = em::build_F(&e, &b);
    let g = em::build_G(&d, &hm);
    let jf = em::build_J(&rho, &j);
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let mut dict: f64 = 0.0;
    for _ in 0..100 {
        let p: Point4 = [0; 4].map(|_| rng.random_range(-1.0..1.0));
        let [t, x1, x2, x3] = p;
        let div_b = 2.0 * x1 + x2;
        let faraday = [x1 - 2.0 * x3, x3 - x2, t];
        let gauss = 2.0 * t * x1 + x3 - four_pi * x1;
        let ampere = [2.0 * x2 - x1 * x1 - four_pi * t, t, 2.0 * x1 - 1.0 - four_pi * x2];
        let df = d2_numeric(&f, &p, 1e-4);
        let dg = d2_numeric(&g, &p, 1e-4);
        let jv = jf.eval(&p);
        dict = dict.max((df[0] - div_b).abs()).max((dg[0] - four_pi * jv[0] - gauss).abs());
        for i in 0..3 {
            dict = dict.max((df[i + 1] - faraday[i]).abs()).max((dg[i + 1] - four_pi * jv[i + 1] + ampere[i]).abs());
        }
    }

    let probe = em::grid([0.0, -1.0, -1.0, -1.0], [1.0, 1.0, 1.0, 1.0], [3, 3, 3, 3]);
    let mut wave: f64 = 0.0;
    let natural = plane_wave(&MaxwellConstants::NATURAL, [1.0, 2.0, -2.0], [2.0, 0.0, 1.0], 1.0)?;
    let r = em::maxwell_check(&natural, &probe, 1e-4);
    wave = wave.max(r.df).max(r.dg_minus_4pi_j);
    let si = MaxwellConstants::SI;
    let kn = 1.0 / si.c();
    let r = em::maxwell_check(&plane_wave(&si, [0.0, 0.6 * kn, 0.8 * kn], [1.0, 0.0, 0.0], 1.0)?, &probe, 1e-4);
    wave = wave.max(r.df).max(r.dg_minus_4pi_j);

    let alpha = calibrate_alpha(&si)?;
    let z = si.impedance_factor();
    let mut hodge: f64 = 0.0;
    for _ in 0..100 {
        let ev = [0; 3].map(|_| rng.random_range(-1.0..1.0));
        let bv = [0; 3].map(|_| rng.random_range(-1.0..1.0) / si.c());
        let fields = MaxwellFields::vacuum(VectorField::constant(ev), VectorField::constant(bv), &si);
        let p: Point4 = [0; 4].map(|_| rng.random_range(-1.0..1.0));
        let fv = fields.F().eval(&p);
        let gv = fields.G().eval(&p);
        let star = hodge2(&fv, alpha);
        let scale = max_abs(gv);
        hodge = hodge.max(max_abs((0..6).map(|i| gv[i] - z * star[i])) / scale);
    }
    Ok((
        dict < 1e-8 && wave < 1e-6 && hodge < 1e-10,
        format!("dictionary {dict:.2e}, plane wave {wave:.2e}, Hodge (relative) {hodge:.2e}, alpha = c^2 {}", ((alpha - si.c() * si.c()) / alpha).abs() < 1e-12),
    ))
}

fn kepler() -> Result<Outcome> {
    let orbit = KeplerOrbit::new(1.0, 0.5, 1.0)?;
    let cs = models::kepler_structure(1.0);
    let path = orbit.path(0.0, 0.5 * orbit.period())?;
    let dev = develop_base_path(&cs, &path, &LiftOptions::with_step(1e-4))?;
    let sd = dev.max_second_difference();
    Ok((sd < 1e-4, format!("half orbit, {} samples, max second difference {sd:.2e}", dev.times.len())))
}

fn integrator_order() -> Result<Outcome> {
    let cs = models::galilean_gravity(GravityField::constant(G));
    let g0 = GroupElement::identity(&GroupTag::GALILEO2);
    let ratio = convergence_ratio(cs.connection(), &perturbed(), &g0, 0.05)?;
    Ok(((12.0..=20.0).contains(&ratio), format!("error ratio under step halving {ratio:.2}")))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "connection-form axioms", limit: Duration::from_secs(5), run: connection_axioms },
        Criterion { id: 2, name: "flat homogeneous model", limit: Duration::from_secs(10), run: flat_homogeneous },
        Criterion { id: 3, name: "free-fall straight development", limit: Duration::from_secs(5), run: freefall_straight },
        Criterion { id: 4, name: "integrability dichotomy", limit: Duration::from_secs(10), run: integrability },
        Criterion { id: 5, name: "soldering", limit: Duration::from_secs(10), run: soldering_checks },
        Criterion { id: 6, name: "affine criterion", limit: Duration::from_secs(5), run: affine_criterion },
        Criterion { id: 7, name: "conformal model", limit: Duration::from_secs(2), run: conformal_model },
        Criterion { id: 8, name: "Maxwell reformulation", limit: Duration::from_secs(10), run: maxwell_criterion },
        Criterion { id: 9, name: "Kepler development", limit: Duration::from_secs(60), run: kepler },
        Criterion { id: 10, name: "integrator order", limit: Duration::from_secs(10), run: integrator_order },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= c.limit, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {:<32} {:>7.3}s / {:>2}s  {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
