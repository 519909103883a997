use nalgebra::{dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

const TOL: f64 = 1e-9;

fn unit_square() -> BoundedBody {
    BoundedBody::cube(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap()
}

fn capped() -> BoundedBody {
    BoundedBody::capped_ball(1.0, dvector![1.0, 0.0], 0.75).unwrap()
}

#[test]
fn membership_examples() {
    let ball = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    assert!(ball.membership(&dvector![0.5, 0.0], TOL).unwrap());
    let s3 = BoundedBody::simplex(3).unwrap();
    assert!(!s3.membership(&dvector![0.5, 0.5, 0.5], TOL).unwrap());
    assert!(!capped().membership(&dvector![0.875, 0.0], TOL).unwrap());
    assert!(capped().membership(&dvector![0.75, 0.5], TOL).unwrap());
}

#[test]
fn membership_rejects_wrong_dimension() {
    let ball = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    assert_eq!(
        ball.membership(&dvector![0.0], TOL),
        Err(Error::DimensionMismatch {
            expected: 2,
            got: 1
        })
    );
}

#[test]
fn separation_examples() {
    let ball = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    let Separation::Separated(h) = ball.separate(&dvector![2.0, 0.0], TOL).unwrap() else {
        panic!("(2,0) is outside the disk");
    };
    assert!((h.normal - dvector![1.0, 0.0]).norm() < 1e-15);
    assert!((h.offset - 1.0).abs() < 1e-15);

    let s2 = BoundedBody::simplex(2).unwrap();
    assert_eq!(
        s2.separate(&dvector![0.5, 0.5], TOL).unwrap(),
        Separation::Inside
    );

    let Separation::Separated(h) = unit_square().separate(&dvector![2.0, 2.0], TOL).unwrap() else {
        panic!("(2,2) is outside the square");
    };
    let s = 0.5f64.sqrt();
    assert!((h.normal - dvector![s, s]).norm() < 1e-12);
    assert!((h.offset - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn linopt_examples() {
    let s3 = BoundedBody::simplex(3).unwrap();
    let l = s3.linopt(&dvector![3.0, 1.0, 2.0], TOL).unwrap();
    assert_eq!(l.point, dvector![1.0, 0.0, 0.0]);
    assert_eq!(l.value, 3.0);

    let ball = BoundedBody::ball(dvector![0.0, 0.0], 2.0).unwrap();
    let l = ball.linopt(&dvector![0.0, 1.0], TOL).unwrap();
    assert_eq!(l.point, dvector![0.0, 2.0]);
    assert_eq!(l.value, 2.0);

    let l = capped().linopt(&dvector![1.0, 0.0], TOL).unwrap();
    assert!((l.value - 0.75).abs() < 1e-15);
    assert!(capped().membership(&l.point, TOL).unwrap());
}

#[test]
fn capped_linopt_matches_grid() {
    let body = capped();
    for k in 0..24 {
        let t = k as f64 * std::f64::consts::TAU / 24.0;
        let c = dvector![t.cos(), t.sin()];
        let v = body.linopt(&c, TOL).unwrap().value;
        let mut grid = f64::NEG_INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let x = dvector![-1.0 + i as f64 / 200.0, -1.0 + j as f64 / 200.0];
                if x.norm() <= 1.0 && x[0] <= 0.75 {
                    grid = grid.max(c.dot(&x));
                }
            }
        }
        assert!(
            v >= grid - 1e-12 && v <= grid + 1e-2,
            "direction {k}: {v} vs {grid}"
        );
    }
}

#[test]
fn projection_examples() {
    let ball = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    assert_eq!(
        ball.project(&dvector![3.0, 0.0], TOL).unwrap(),
        dvector![1.0, 0.0]
    );
    let s2 = BoundedBody::simplex(2).unwrap();
    let p = s2.project(&dvector![0.8, 0.8], TOL).unwrap();
    assert!((p - dvector![0.5, 0.5]).norm() < 1e-15);
    assert_eq!(
        unit_square().project(&dvector![-1.0, 0.5], TOL).unwrap(),
        dvector![0.0, 0.5]
    );
}

#[test]
fn simplex_projection_matches_kkt_oracle() {
    // Independent check: the projection x of y satisfies x = max(y − θ, 0)
    // for the θ making the sum one, found here by bisection.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let y = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid: f64 = 0.5 * (lo + hi);
            let s: f64 = y.iter().map(|v| (v - mid).max(0.0)).sum();
            if s > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let expect = y.map(|v| (v - lo).max(0.0));
        assert!((project_simplex(&y) - expect).norm() < 1e-12);
    }
}

#[test]
fn quadmin_examples() {
    let ball = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    let q = ball
        .quadmin(&DMatrix::identity(2, 2), &dvector![0.0, 0.0], 1e-12)
        .unwrap();
    assert!(q.point.norm() <= 1e-6 && q.value <= 1e-12);

    let q = unit_square()
        .quadmin(&DMatrix::identity(2, 2), &dvector![-2.0, 0.0], 1e-12)
        .unwrap();
    assert!((q.point - dvector![1.0, 0.0]).norm() < 1e-9);
    assert!((q.value - 0.5).abs() < 1e-12);

    let s2 = BoundedBody::simplex(2).unwrap();
    let q = s2
        .quadmin(&DMatrix::zeros(2, 2), &dvector![1.0, 0.0], 1e-12)
        .unwrap();
    assert!(s2.membership(&q.point, TOL).unwrap());
    assert!((q.value - 0.5).abs() < 1e-15);
}

#[test]
fn quadmin_grid_oracle_on_square() {
    let body = unit_square();
    let m = dvector![1.0, 2.0, -1.0, 0.5];
    let m = DMatrix::from_column_slice(2, 2, m.as_slice());
    let b = dvector![-0.3, 0.9];
    let q = body.quadmin(&m, &b, 1e-14).unwrap();
    let mut best = f64::INFINITY;
    for i in 0..=500 {
        for j in 0..=500 {
            let x = dvector![i as f64 / 500.0, j as f64 / 500.0];
            best = best.min(0.5 * (&m * x + &b).norm_squared());
        }
    }
    assert!(q.value <= best + 1e-12);
    assert!(q.value >= best - 1e-4);
}

#[test]
fn precondition_examples() {
    let ball = BoundedBody::ball(dvector![5.0, 0.0], 1.0).unwrap();
    let (pre, body) = ball.precondition();
    assert_eq!(
        pre.map.apply(&dvector![5.0, 0.0]).unwrap(),
        dvector![0.0, 0.0]
    );
    assert_eq!(body.inner_radius(), 1.0);
    assert!(body.inner_center().norm() == 0.0);
    assert!((body.outer_radius() - 11.0).abs() < 1e-12);

    let unit = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    assert!(unit.precondition().0.is_identity());

    let bx = BoundedBody::cube(dvector![2.0, 2.0], dvector![4.0, 4.0]).unwrap();
    assert_eq!(bx.inner_center(), &dvector![3.0, 3.0]);
    let (pre, body) = bx.precondition();
    assert_eq!(
        pre.map.apply(&dvector![3.0, 3.0]).unwrap(),
        dvector![0.0, 0.0]
    );
    for k in 0..64 {
        let t = k as f64 * std::f64::consts::TAU / 64.0;
        assert!(body.membership(&dvector![t.cos(), t.sin()], 1e-12).unwrap());
    }
}

fn json_close(a: &serde_json::Value, b: &serde_json::Value) -> bool {
    use serde_json::Value;
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            (x - y).abs() <= 1e-15 * x.abs().max(y.abs()).max(1.0)
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_close(p, q))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x.iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| json_close(v, w)))
        }
        _ => a == b,
    }
}

#[test]
fn json_round_trip_of_every_shape() {
    let bodies = vec![
        BoundedBody::ball(dvector![0.1, -0.2], 1.5).unwrap(),
        unit_square(),
        BoundedBody::simplex(3).unwrap(),
        BoundedBody::corner_simplex_hrep(2).unwrap(),
        BoundedBody::corner_simplex(3).unwrap(),
        capped(),
        BoundedBody::ball(dvector![5.0, 0.0], 1.0)
            .unwrap()
            .precondition()
            .1,
        BoundedBody::intersection(
            unit_square(),
            vec![Halfspace::new(dvector![1.0, 1.0], 1.5).unwrap()],
            Some((dvector![0.4, 0.4], 0.35)),
        )
        .unwrap(),
    ];
    for b in bodies {
        let s = serde_json::to_string(&b).unwrap();
        let back: BoundedBody = serde_json::from_str(&s).unwrap();
        let a: serde_json::Value = serde_json::from_str(&s).unwrap();
        let b2: serde_json::Value = serde_json::to_value(&back).unwrap();
        assert!(json_close(&a, &b2), "{a} vs {b2}");
        assert_eq!(back.dim(), b.dim());
        assert!((back.outer_radius() - b.outer_radius()).abs() <= 1e-15 * b.outer_radius());
    }
}

#[test]
fn json_schema_of_hpolytope() {
    let s = r#"{"shape":"hpolytope","dim":2,"rows":[[[1.0,0.0],1.0],[[-1.0,0.0],1.0],[[0.0,1.0],1.0],[[0.0,-1.0],1.0]],"inner":{"center":[0.0,0.0],"radius":1.0},"outer_radius":1.5}"#;
    let b: BoundedBody = serde_json::from_str(s).unwrap();
    assert!(b.membership(&dvector![0.9, -0.9], TOL).unwrap());
    assert!(serde_json::from_str::<BoundedBody>(
        r#"{"shape":"ball","center":[0],"radius":1,"extra":2}"#
    )
    .is_err());
}

#[test]
fn cutting_plane_agrees_with_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bodies = [
        unit_square(),
        BoundedBody::corner_simplex(3).unwrap(),
        capped(),
        BoundedBody::ball(dvector![0.3, 0.1, -0.2], 0.7).unwrap(),
    ];
    for b in &bodies {
        for _ in 0..20 {
            let c = DVector::from_fn(b.dim(), |_, _| rng.random_range(-1.0..1.0));
            let exact = b.linopt(&c, TOL).unwrap().value;
            let cp = b.linopt_cutting_plane(&c, 1e-9).unwrap();
            assert!(
                (exact - cp.value).abs() < 1e-6,
                "{exact} vs {} on {:?} c={c}",
                cp.value,
                b.shape()
            );
            assert!(cp.upper >= exact - 1e-12);
        }
    }
}

#[test]
fn hpolytope_linopt_is_certified_vertex() {
    let b = BoundedBody::corner_simplex_hrep(3).unwrap();
    let l = b.linopt(&dvector![1.0, 2.0, 0.5], TOL).unwrap();
    assert!((l.point - dvector![0.0, 1.0, 0.0]).norm() < 1e-12);
    assert_eq!(l.upper, l.value);
}

fn any_body() -> impl Strategy<Value = BoundedBody> {
    prop_oneof![
        (1usize..=5, 0.2f64..2.0).prop_map(|(d, r)| BoundedBody::ball(
            DVector::from_element(d, 0.1),
            r
        )
        .unwrap()),
        (1usize..=5).prop_map(|d| BoundedBody::cube(
            DVector::from_element(d, -0.5),
            DVector::from_element(d, 1.0)
        )
        .unwrap()),
        (2usize..=5).prop_map(|d| BoundedBody::simplex(d).unwrap()),
        (1usize..=4).prop_map(|d| BoundedBody::corner_simplex(d).unwrap()),
        (1usize..=4).prop_map(|d| BoundedBody::corner_simplex_hrep(d).unwrap()),
        (2usize..=5, -0.5f64..0.9).prop_map(|(d, k)| {
            let mut u = DVector::zeros(d);
            u[0] = 1.0;
            BoundedBody::capped_ball(1.0, u, k).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn separate_agrees_with_membership(body in any_body(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DVector::from_fn(body.dim(), |_, _| rng.random_range(-2.0..2.0));
        let member = body.membership(&x, TOL).unwrap();
        match body.separate(&x, TOL) {
            Ok(Separation::Inside) => prop_assert!(member),
            Ok(Separation::Separated(h)) => {
                prop_assert!(!member);
                prop_assert!(h.violation(&x) > 0.0);
                prop_assert!((h.normal.norm() - 1.0).abs() < 1e-12);
                for _ in 0..50 {
                    let y = body.sample(&mut rng).unwrap();
                    prop_assert!(h.violation(&y) <= 1e-8);
                }
            }
            Err(Error::DegenerateProjection) => prop_assert!(!member),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn projection_is_idempotent(body in any_body(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DVector::from_fn(body.dim(), |_, _| rng.random_range(-3.0..3.0));
        let p = body.project(&y, TOL).unwrap();
        prop_assert!(body.membership(&p, 1e-7).unwrap());
        let pp = body.project(&p, TOL).unwrap();
        prop_assert!((&pp - &p).norm() <= 2e-7);
        // Obtuse-angle characterization against sampled body points.
        for _ in 0..20 {
            let z = body.sample(&mut rng).unwrap();
            prop_assert!((&y - &p).dot(&(z - &p)) <= 1e-6);
        }
    }

    #[test]
    fn quadmin_first_order_certificate(body in any_body(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = body.dim();
        let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let tol = 1e-10;
        let q = body.quadmin(&m, &b, tol).unwrap();
        prop_assert!(body.membership(&q.point, 1e-7).unwrap());
        let g = m.transpose() * (&m * &q.point + &b);
        let v = body.linopt(&-&g, TOL).unwrap().point;
        prop_assert!(g.dot(&(v - &q.point)) >= -10.0 * tol - 1e-9);
    }

    #[test]
    fn inner_ball_and_outer_radius(body in any_body(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = body.dim();
        for _ in 0..20 {
            let y = body.sample(&mut rng).unwrap();
            prop_assert!(y.norm() <= body.outer_radius() + 1e-9);
            if !body.is_flat() {
                let g = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                if g.norm() > 1e-6 {
                    let x = body.inner_center() + &g * (body.inner_radius() / g.norm());
                    prop_assert!(body.membership(&x, 1e-9).unwrap());
                }
            }
        }
    }

    #[test]
    fn precondition_round_trip(body in any_body(), seed in any::<u64>()) {
        prop_assume!(!body.is_flat());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pre, img) = body.precondition();
        prop_assert!((img.inner_radius() - 1.0).abs() < 1e-15);
        prop_assert!(img.outer_radius() <= 2.0 * body.outer_radius() / body.inner_radius() + 1e-9);
        for _ in 0..5 {
            let x = body.sample(&mut rng).unwrap();
            let y = pre.map.apply(&x).unwrap();
            prop_assert!((pre.inverse.apply(&y).unwrap() - &x).amax() <= 1e-10);
            prop_assert!(img.membership(&y, 1e-7).unwrap());
        }
    }
}
