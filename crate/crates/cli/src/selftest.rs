//! Invariant suite behind `--selftest`: one line per check, seeded sampling.

use std::sync::Arc;
use std::time::Instant;

use cartan_core::cartan::{develop_base_path, is_cartan, soldering, soldering_with_choice, CartanClass};
use cartan_core::em::{self, hodge2, MaxwellConstants, HODGE2_SQUARE_SIGN};
use cartan_core::fieldexpr;
use cartan_core::lie::{self, AlgebraElement, GroupElement, GroupTag};
use cartan_core::models::{self, GravityField, KeplerOrbit};
use cartan_core::principal::{check_axioms, curvature, full_form, horizontal_dimension, ChartDomain, LocalConnection, PrincipalPoint, PrincipalTangent};
use cartan_core::transport::{convergence_ratio, holonomy, transport_element, LiftOptions, PiecewisePath, SmoothPath};
use cartan_core::Result;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = (bool, String);

const G: f64 = 9.81;

fn tags() -> Vec<GroupTag> {
    vec![GroupTag::Gl(3), GroupTag::Aff(2), GroupTag::GALILEO2, GroupTag::Galileo(2), GroupTag::O { p: 3, q: 1 }, GroupTag::Pgl(2), GroupTag::So(3)]
}

fn group_closure(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for tag in tags() {
        for _ in 0..1000 {
            let (g, h) = (lie::random_element(&tag, rng, 1.0), lie::random_element(&tag, rng, 1.0));
            worst = worst.max(g.compose(&h)?.residual());
        }
    }
    Ok((worst < 1e-9, format!("defining-relation residual {worst:.1e}")))
}

fn exp_log(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for tag in tags() {
        for _ in 0..200 {
            let xi = lie::random_algebra(&tag, rng, 0.3);
            let g = lie::exp(&xi);
            if lie::within_log_radius(&g, 0.9) {
                worst = worst.max((&lie::log(&g)? - &xi).norm());
            }
        }
    }
    Ok((worst < 1e-9, format!("round-trip error {worst:.1e}")))
}

fn ad_bracket(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for tag in tags() {
        for _ in 0..200 {
            let g = lie::random_element(&tag, rng, 0.8);
            let (a, b) = (lie::random_algebra(&tag, rng, 1.0), lie::random_algebra(&tag, rng, 1.0));
            let lhs = lie::ad(&g, &lie::bracket(&a, &b)?)?;
            let rhs = lie::bracket(&lie::ad(&g, &a)?, &lie::ad(&g, &b)?)?;
            worst = worst.max((&lhs - &rhs).norm() / (1.0 + lhs.norm()));
        }
    }
    Ok((worst < 1e-10, format!("bracket mismatch {worst:.1e}")))
}

fn galileo_triple(rng: &mut ChaCha8Rng) -> Result<Check> {
    let exact = (0..1000).all(|_| {
        let t = [0; 3].map(|_| rng.random_range(-100.0..100.0));
        GroupElement::galileo(t[0], t[1], t[2]).galileo_triple() == Some(t)
    });
    Ok((exact, "bit-identical triple recovery".into()))
}

fn axioms(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for name in models::MODEL_NAMES {
        let r = check_axioms(models::by_name(name)?.connection(), 1000, rng.random())?;
        worst = worst.max(r.fundamental_residual).max(r.equivariance_residual);
    }
    Ok((worst < 1e-8, format!("{} models, worst residual {worst:.1e}", models::MODEL_NAMES.len())))
}

fn horizontal_dims(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut ok = true;
    let mut smallest = f64::INFINITY;
    for name in models::MODEL_NAMES {
        let conn = models::by_name(name)?.connection().clone();
        for _ in 0..20 {
            let p = PrincipalPoint::new(conn.domain().sample(rng), lie::random_element(conn.tag(), rng, 0.8));
            let (dim, sv) = horizontal_dimension(&conn, &p, 1e-8)?;
            ok &= dim == conn.base_dim();
            smallest = smallest.min(sv);
        }
    }
    Ok((ok, format!("dimension = base dimension, smallest kept singular value {smallest:.2e}")))
}

fn flat_curvature(rng: &mut ChaCha8Rng) -> Result<Check> {
    let conn = LocalConnection::flat(ChartDomain::whole(3), GroupTag::Aff(3));
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (x, u, w) = (conn.domain().sample(rng), conn.domain().sample(rng), conn.domain().sample(rng));
        worst = worst.max(curvature(&conn, &x, &u, &w, 1e-5)?.norm());
    }
    Ok((worst == 0.0, format!("Maurer-Cartan curvature {worst:.1e}")))
}

fn groupoid(rng: &mut ChaCha8Rng) -> Result<Check> {
    let cs = models::galilean_gravity(GravityField::new(Arc::new(|t, x| G + 0.3 * x + t * t), Arc::new(|t, x| 0.1 * t * x)));
    let conn = cs.connection();
    let opts = LiftOptions::with_step(1e-2);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let pts: Vec<DVector<f64>> = (0..3).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0))).collect();
        let p = PiecewisePath::from(SmoothPath::line(pts[0].clone(), pts[1].clone(), 0.0, 1.0)?);
        let q = PiecewisePath::from(SmoothPath::line(pts[1].clone(), pts[2].clone(), 0.0, 0.5)?);
        let (tp, tq) = (transport_element(conn, &p, &opts)?, transport_element(conn, &q, &opts)?);
        let joined = transport_element(conn, &p.then(&q)?, &opts)?;
        worst = worst.max((joined.matrix() - tq.compose(&tp)?.matrix()).amax());
        let back = transport_element(conn, &p.reversed(), &opts)?;
        worst = worst.max((back.matrix() - tp.inverse()?.matrix()).amax());
    }
    Ok((worst < 1e-7, format!("concatenation and reversal error {worst:.1e}")))
}

fn freefall_path(perturb: f64) -> Result<SmoothPath> {
    SmoothPath::new(
        0.0,
        1.0,
        Arc::new(move |t| DVector::from_vec(vec![t, 0.5 * G * t * t + perturb * (5.0 * t).sin()])),
        Arc::new(move |t| DVector::from_vec(vec![1.0, G * t + 5.0 * perturb * (5.0 * t).cos()])),
    )
}

fn straight_iff_geodesic(_: &mut ChaCha8Rng) -> Result<Check> {
    let cs = models::galilean_gravity(GravityField::constant(G));
    let opts = LiftOptions::with_step(1e-3);
    let straight = develop_base_path(&cs, &freefall_path(0.0)?, &opts)?.max_second_difference();
    let bent = develop_base_path(&cs, &freefall_path(0.1)?, &opts)?.max_second_difference();
    Ok((straight < 1e-6 && bent > 1e-2, format!("free fall {straight:.1e}, perturbed {bent:.1e}")))
}

fn integrability(_: &mut ChaCha8Rng) -> Result<Check> {
    let opts = LiftOptions::default();
    let flat = models::galilean_gravity(GravityField::constant(G));
    let big = PiecewisePath::square_loop(&DVector::from_vec(vec![0.0, 0.0]), 0, 1, 0.5)?;
    let flat_log = lie::log(&holonomy(flat.connection(), &big, &opts)?)?.norm();
    let curved = models::galilean_gravity(GravityField::linear(G, 0.3));
    let small = PiecewisePath::square_loop(&DVector::from_vec(vec![0.0, 0.0]), 0, 1, 0.1)?;
    let log = lie::log(&holonomy(curved.connection(), &small, &opts)?)?;
    let expected = AlgebraElement::galileo(-0.3 * 0.01, 0.0, 0.0);
    let rel = (&log - &expected).norm() / expected.norm();
    Ok((flat_log < 1e-7 && rel < 0.05, format!("constant V {flat_log:.1e}, linear V off by {:.2}%", 100.0 * rel)))
}

fn order(_: &mut ChaCha8Rng) -> Result<Check> {
    let cs = models::galilean_gravity(GravityField::constant(G));
    let ratio = convergence_ratio(cs.connection(), &freefall_path(0.1)?, &GroupElement::identity(&GroupTag::GALILEO2), 0.05)?;
    Ok(((12.0..=20.0).contains(&ratio), format!("step-halving ratio {ratio:.2}")))
}

fn soldering_choices(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for name in ["affine", "galilean", "galilean3d", "projective", "mobius"] {
        let cs = models::by_name(name)?;
        for _ in 0..20 {
            let x = cs.connection().domain().sample(rng);
            let w = DVector::from_fn(cs.base_dim(), |_, _| rng.random_range(-1.0..1.0));
            let reference = soldering(&cs, &x, &w)?;
            for _ in 0..5 {
                let (g, eta) = (cs.spec().random_subgroup_element(rng, 0.5), cs.spec().random_subalgebra_element(rng, 1.0));
                worst = worst.max((soldering_with_choice(&cs, &x, &w, &g, &eta)? - &reference).amax() / (1.0 + reference.amax()));
            }
        }
    }
    Ok((worst < 1e-9, format!("choice spread {worst:.1e}")))
}

fn classification(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut ok = true;
    for name in models::MODEL_NAMES {
        let cs = models::by_name(name)?;
        let seed = rng.random();
        let (a, b) = (is_cartan(&cs, 20, seed)?, is_cartan(&cs, 40, seed)?);
        ok &= a.class == CartanClass::Cartan && b.class == CartanClass::Cartan && cs.base_dim() == cs.spec().fiber_dim();
    }
    Ok((ok, "every model cartan at 20 and 40 samples".into()))
}

fn galilean_form(rng: &mut ChaCha8Rng) -> Result<Check> {
    let cs = models::galilean_gravity(GravityField::linear(G, 0.3));
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let [t, x, v, a, b, dt, dx, dv, da, db] = [0; 10].map(|_| rng.random_range(-2.0..2.0));
        let p = PrincipalPoint::new(DVector::from_vec(vec![t, x]), GroupElement::galileo(v, a, b));
        let tangent = PrincipalTangent::new(DVector::from_vec(vec![dt, dx]), AlgebraElement::galileo(dv, da, db).matrix().clone());
        let got = full_form(cs.connection(), &p, &tangent)?.coords();
        let want = models::galilean_form_closed(G + 0.3 * x, 0.0, v, a, dt, dx, dv, da, db);
        for i in 0..3 {
            worst = worst.max((got[i] - want[i]).abs() / (1.0 + want[i].abs()));
        }
    }
    Ok((worst < 1e-12, format!("closed-form mismatch {worst:.1e}")))
}

fn conformal(rng: &mut ChaCha8Rng) -> Result<Check> {
    let (mut q, mut round, mut equiv): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let z = DVector::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
        let p = models::mobius_embed_plane(&z);
        q = q.max(models::mobius_q(p.ray()).abs());
        round = round.max((models::mobius_stereo_roundtrip(&p)? - &z).amax());
        let r = lie::random_element(&GroupTag::So(3), rng, 2.0).into_matrix();
        let moved = p.transform(&models::orthogonal_embed(&r))?;
        equiv = equiv.max((models::mobius_embed_plane(&(&r * &z)).ray() - moved.ray()).amax());
    }
    Ok((q < 1e-10 && round < 1e-10 && equiv < 1e-10, format!("Q {q:.1e}, round trip {round:.1e}, equivariance {equiv:.1e}")))
}

fn maxwell(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut hodge: f64 = 0.0;
    for _ in 0..100 {
        let c: [f64; 6] = [0; 6].map(|_| rng.random_range(-1.0..1.0));
        let alpha = rng.random_range(0.1..10.0);
        let twice = hodge2(&hodge2(&c, alpha), alpha);
        hodge = hodge.max((0..6).map(|i| (twice[i] - HODGE2_SQUARE_SIGN * c[i]).abs()).fold(0.0, f64::max));
    }
    let k = MaxwellConstants::NATURAL;
    let wave = em::plane_wave(&k, [1.0, 2.0, -2.0], [2.0, 0.0, 1.0], 1.0)?;
    let r = em::maxwell_check(&wave, &em::grid([0.0, -1.0, -1.0, -1.0], [1.0, 1.0, 1.0, 1.0], [2, 3, 3, 3]), 1e-4);
    Ok((hodge < 1e-12 && r.df < 1e-6 && r.dg_minus_4pi_j < 1e-6, format!("** sign error {hodge:.1e}, plane wave dF {:.1e}, dG {:.1e}", r.df, r.dg_minus_4pi_j)))
}

fn kepler(_: &mut ChaCha8Rng) -> Result<Check> {
    let orbit = KeplerOrbit::new(1.0, 0.5, 1.0)?;
    let dev = develop_base_path(&models::kepler_structure(1.0), &orbit.path(0.0, 0.5 * orbit.period())?, &LiftOptions::with_step(1e-4))?;
    let sd = dev.max_second_difference();
    Ok((sd < 1e-4, format!("half orbit second difference {sd:.1e}")))
}

fn expressions(_: &mut ChaCha8Rng) -> Result<Check> {
    let pow = fieldexpr::parse("2^3^2")?.eval_with(&[])?;
    let kepler = fieldexpr::parse("-mu/ (x^2+y^2)^1.5 * x")?.eval_with(&[("mu", 1.0), ("x", 1.0), ("y", 0.0)])?;
    let e = fieldexpr::parse("9.81 + 0.3*x - sin(t)^2 / -2")?;
    let round = fieldexpr::parse(&e.to_string())? == e;
    Ok((pow == 512.0 && kepler == -1.0 && round, "right-associative power, unary minus, printer round trip".into()))
}

type CheckFn = fn(&mut ChaCha8Rng) -> Result<Check>;

const CHECKS: [(&str, CheckFn); 18] = [
    ("group closure", group_closure),
    ("exp/log round trip", exp_log),
    ("Ad respects brackets", ad_bracket),
    ("Galileo triple exact", galileo_triple),
    ("connection-form axioms", axioms),
    ("horizontal dimension", horizontal_dims),
    ("flat curvature vanishes", flat_curvature),
    ("transport groupoid action", groupoid),
    ("straight iff geodesic", straight_iff_geodesic),
    ("integrability dichotomy", integrability),
    ("integrator order", order),
    ("soldering well defined", soldering_choices),
    ("Cartan classification", classification),
    ("Galilean closed form", galilean_form),
    ("conformal model", conformal),
    ("Maxwell forms", maxwell),
    ("Kepler development", kepler),
    ("expression grammar", expressions),
];

/// Runs every check, printing a table to stdout. Returns true when all pass.
pub fn run(seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    for (name, check) in CHECKS {
        let start = Instant::now();
        let (ok, detail) = match check(&mut rng) {
            Ok(c) => c,
            Err(e) => (false, format!("error: {e}")),
        };
        passed += usize::from(ok);
        println!("{:<4}  {:<28} {:>8.3}s  {detail}", if ok { "PASS" } else { "FAIL" }, name, start.elapsed().as_secs_f64());
    }
    println!("{passed}/{} checks passed", CHECKS.len());
    passed == CHECKS.len()
}
