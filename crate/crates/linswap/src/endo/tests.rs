use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sample::{map_in_ball, random_hpolytope, verified_endomorphism};
use super::*;
use crate::error::Error;

fn square() -> BoundedBody {
    BoundedBody::cube(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap()
}

fn simplex_vertices(d: usize) -> Vec<DVector<f64>> {
    vertices_of(&BoundedBody::simplex(d).unwrap()).unwrap()
}

#[test]
fn vrep_examples() {
    let s3 = BoundedBody::simplex(3).unwrap();
    let cyc = AffineMap::new(
        dmatrix![0.0, 0.0, 1.0; 1.0, 0.0, 0.0; 0.0, 1.0, 0.0],
        DVector::zeros(3),
    )
    .unwrap();
    assert_eq!(
        endo_membership_vrep(&simplex_vertices(3), &s3, &cyc, 1e-9).unwrap(),
        EndoMembership::Member
    );

    let bad = AffineMap::new(
        dmatrix![1.5, 0.0, 0.0; -0.5, 1.0, 0.0; 0.0, 0.0, 1.0],
        DVector::zeros(3),
    )
    .unwrap();
    match endo_membership_vrep(&simplex_vertices(3), &s3, &bad, 1e-9).unwrap() {
        EndoMembership::Violated(t) => {
            assert!(matches!(
                t.provenance,
                Provenance::VRepViolation { vertex: 0, .. }
            ));
            assert!(t.violation(&bad) > 0.0);
            assert!((t.halfspace.normal.norm() - 1.0).abs() < 1e-12);
        }
        EndoMembership::Member => panic!("image of e1 leaves the simplex"),
    }

    let half = AffineMap::new(DMatrix::identity(2, 2) * 0.5, dvector![0.25, 0.25]).unwrap();
    let sq = square();
    assert_eq!(
        endo_membership_vrep(&vertices_of(&sq).unwrap(), &sq, &half, 1e-9).unwrap(),
        EndoMembership::Member
    );
}

#[test]
fn hrep_examples() {
    let s3 = BoundedBody::simplex(3).unwrap();
    assert_eq!(
        endo_membership_hrep(&simplex_rows(3), &s3, &AffineMap::identity(3), 1e-9).unwrap(),
        EndoMembership::Member
    );

    let disk = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    let target = BoundedBody::cube(dvector![-1.0, -1.0], dvector![1.0, 1.0]).unwrap();
    let two = AffineMap::scaled_identity(2, 2.0);
    match endo_membership_hrep(&target.hrep_rows().unwrap(), &disk, &two, 1e-9).unwrap() {
        EndoMembership::Violated(t) => match t.provenance {
            Provenance::HRepViolation { row, witness } => {
                assert_eq!(row, 0);
                assert!((witness - dvector![1.0, 0.0]).norm() < 1e-15);
            }
            p => panic!("unexpected provenance {p:?}"),
        },
        EndoMembership::Member => panic!("2I doubles the disk"),
    }

    let sq = square();
    let shift = AffineMap::translation(&dvector![0.5, 0.0]);
    assert!(matches!(
        endo_membership_hrep(&sq.hrep_rows().unwrap(), &sq, &shift, 1e-9).unwrap(),
        EndoMembership::Violated(_)
    ));
}

#[test]
fn fixed_point_examples() {
    let disk = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    match find_fixed_point(&disk, &AffineMap::scaled_identity(2, 0.5), 1e-8).unwrap() {
        FixedPointResult::Found { point, residual } => {
            assert!(point.norm() < 1e-12);
            assert!(residual < 1e-12);
        }
        r => panic!("{r:?}"),
    }

    match find_fixed_point(
        &square(),
        &AffineMap::translation(&dvector![2.0, 0.0]),
        1e-8,
    )
    .unwrap()
    {
        FixedPointResult::NotFound {
            min_residual_sq,
            witness,
        } => {
            assert!((min_residual_sq - 4.0).abs() < 1e-9);
            assert!(square().membership(&witness, 1e-9).unwrap());
        }
        r => panic!("{r:?}"),
    }

    let capped = BoundedBody::capped_ball(1.0, dvector![1.0, 0.0], 0.75).unwrap();
    match find_fixed_point(&capped, &AffineMap::scaled_identity(2, -7.0 / 8.0), 1e-8).unwrap() {
        FixedPointResult::Found { point, residual } => {
            assert!(point.norm() < 1e-12);
            assert!(residual < 1e-12);
        }
        r => panic!("{r:?}"),
    }
}

#[test]
fn fixed_point_rejects_nonpositive_tolerance() {
    assert!(matches!(
        find_fixed_point(&square(), &AffineMap::identity(2), 0.0),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn semi_separation_examples() {
    let disk = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    match semi_separate(&disk, &AffineMap::identity(2), 1e-8).unwrap() {
        SemiSeparation::FixedPoint(p) => assert!(p.norm() <= 1.0 + 1e-9),
        c => panic!("{c:?}"),
    }

    let shift = AffineMap::translation(&dvector![2.0, 0.0]);
    let SemiSeparation::Cut(t) = semi_separate(&square(), &shift, 1e-8).unwrap() else {
        panic!("a translation has no fixed point");
    };
    let Provenance::SemiSeparation { u, p_u } = &t.provenance else {
        panic!("wrong provenance");
    };
    assert!((u / u.norm() - dvector![1.0, 0.0]).norm() < 1e-9);
    assert_eq!(p_u, &dvector![1.0, 0.0]);
    assert!(t.violation(&shift) > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let phi = verified_endomorphism(&square(), &mut rng).unwrap();
        assert!(t.violation(&phi) <= 1e-8);
        // The constraint reads φ'((1,0))₁ ≤ 1.
        assert!(phi.apply(&dvector![1.0, 0.0]).unwrap()[0] <= 1.0 + 1e-12);
    }

    let up = AffineMap::translation(&dvector![0.0, 3.0]);
    let SemiSeparation::Cut(t) = semi_separate(&disk, &up, 1e-8).unwrap() else {
        panic!("a translation has no fixed point");
    };
    let Provenance::SemiSeparation { u, p_u } = &t.provenance else {
        panic!("wrong provenance");
    };
    assert!((u / u.norm() - dvector![0.0, 1.0]).norm() < 1e-9);
    assert!((p_u - dvector![0.0, 1.0]).norm() < 1e-9);
    assert!(t.violation(&up) > 0.0);
}

#[test]
fn samplers_are_endomorphisms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bodies = [
        square(),
        BoundedBody::simplex(3).unwrap(),
        BoundedBody::corner_simplex(2).unwrap(),
        random_hpolytope(3, 6, &mut rng).unwrap(),
    ];
    for b in &bodies {
        let verts = vertices_of(b);
        let rows = b.hrep_rows();
        for _ in 0..200 {
            let phi = verified_endomorphism(b, &mut rng).unwrap();
            if let Some(v) = &verts {
                assert_eq!(
                    endo_membership_vrep(v, b, &phi, 1e-9).unwrap(),
                    EndoMembership::Member
                );
            }
            if let Some(r) = &rows {
                assert_eq!(
                    endo_membership_hrep(r, b, &phi, 1e-9).unwrap(),
                    EndoMembership::Member
                );
            }
        }
    }
}

#[test]
fn endo_bounds_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in 2..=3 {
        let body = random_hpolytope(d, 5, &mut rng).unwrap();
        let rows = body.hrep_rows().unwrap();
        let bounds = EndoBounds::of(&body);
        for _ in 0..100 {
            let phi = map_in_ball(&bounds.center_map, bounds.inner_radius, &mut rng).unwrap();
            assert_eq!(
                endo_membership_hrep(&rows, &body, &phi, 1e-9).unwrap(),
                EndoMembership::Member
            );
        }
        let mut accepted = 0;
        for _ in 0..400 {
            let center = verified_endomorphism(&body, &mut rng).unwrap();
            let phi = map_in_ball(&center, 0.5, &mut rng).unwrap();
            if endo_membership_hrep(&rows, &body, &phi, 1e-9).unwrap() == EndoMembership::Member {
                accepted += 1;
                assert!(phi.frob_norm() <= bounds.outer_radius + 1e-6);
            }
        }
        assert!(accepted > 20);
    }
}

#[test]
fn vrep_and_hrep_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cases = [
        (BoundedBody::simplex(3).unwrap(), simplex_rows(3)),
        (square(), square().hrep_rows().unwrap()),
        (
            BoundedBody::corner_simplex(2).unwrap(),
            BoundedBody::corner_simplex_hrep(2)
                .unwrap()
                .hrep_rows()
                .unwrap(),
        ),
    ];
    for (body, rows) in &cases {
        let verts = vertices_of(body).unwrap();
        let d = body.dim();
        for _ in 0..500 {
            let center = verified_endomorphism(body, &mut rng).unwrap();
            let phi = map_in_ball(&center, 0.3, &mut rng).unwrap();
            let v =
                endo_membership_vrep(&verts, body, &phi, 1e-9).unwrap() == EndoMembership::Member;
            let h = endo_membership_hrep(rows, body, &phi, 1e-9).unwrap() == EndoMembership::Member;
            assert_eq!(v, h, "disagreement at {phi:?} in dimension {d}");
        }
    }
}

#[test]
fn fixed_point_matches_linear_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let body = BoundedBody::ball(dvector![0.0, 0.0, 0.0], 1.0).unwrap();
    let mut checked = 0;
    while checked < 100 {
        let m = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-0.6..0.6));
        let b = DVector::from_fn(3, |_, _| rng.random_range(-0.3..0.3));
        let a = DMatrix::identity(3, 3) - &m;
        let sv = a.clone().svd(false, false).singular_values;
        if sv.max() / sv.min() > 1e6 {
            continue;
        }
        let x = a.lu().solve(&b).unwrap();
        if x.norm() >= 0.99 {
            continue;
        }
        let phi = AffineMap::new(m, b).unwrap();
        let FixedPointResult::Found { point, .. } = find_fixed_point(&body, &phi, 1e-8).unwrap()
        else {
            panic!("interior fixed point missed");
        };
        assert!((point - x).norm() <= 1e-8);
        checked += 1;
    }
}

#[test]
fn simplex_optimum_by_enumeration() {
    // Single round p = e1, ℓ = e1 on the simplex: the best stochastic map
    // sends e1 to e2 or e3, with value 0.
    let p = dvector![1.0, 0.0, 0.0];
    let l = dvector![1.0, 0.0, 0.0];
    let c = pairing(&l, &p);
    let s3 = BoundedBody::simplex(3).unwrap();
    let opt = minimize_over_endomorphisms(&s3, &c, 1e-9).unwrap();
    assert_eq!(opt.value, 0.0);
    // Brute force over deterministic column-stochastic matrices.
    let mut best = f64::INFINITY;
    for code in 0..27 {
        let mut m = DMatrix::zeros(3, 3);
        for j in 0..3 {
            m[(code / 3usize.pow(j as u32) % 3, j)] = 1.0;
        }
        let phi = AffineMap::new(m, DVector::zeros(3)).unwrap();
        best = best.min(c.dot(&phi.flatten()));
    }
    assert_eq!(best, opt.value);
}

#[test]
fn ellipsoid_optimum_on_corner_simplex_matches_vertex_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let hrep = BoundedBody::corner_simplex_hrep(2).unwrap();
    let vrep = BoundedBody::corner_simplex(2).unwrap();
    for _ in 0..5 {
        let c = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let a = minimize_over_endomorphisms(&hrep, &c, 1e-8).unwrap();
        let b = minimize_over_endomorphisms(&vrep, &c, 1e-8).unwrap();
        // Vertex-image enumeration: an endomorphism of a triangle is fixed by
        // the images of its three vertices, and the objective is linear in
        // them, so each vertex goes to a vertex.
        let verts = vertices_of(&vrep).unwrap();
        let mut best = f64::INFINITY;
        for code in 0..27usize {
            let imgs: Vec<&DVector<f64>> =
                (0..3).map(|j| &verts[code / 3usize.pow(j) % 3]).collect();
            let b0 = imgs[0].clone();
            let m = DMatrix::from_columns(&[imgs[1] - &b0, imgs[2] - &b0]);
            best = best.min(c.dot(&AffineMap::new(m, b0).unwrap().flatten()));
        }
        assert!((a.value - best).abs() < 1e-6, "{} vs {best}", a.value);
        assert!((b.value - best).abs() < 1e-6, "{} vs {best}", b.value);
        assert!(a.lower <= best + 1e-9);
    }
}

#[test]
fn oracle_only_bodies_are_unsupported() {
    let disk = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
    let c = DVector::from_element(6, 1.0);
    assert!(matches!(
        minimize_over_endomorphisms(&disk, &c, 1e-6),
        Err(Error::UnsupportedBody(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairing_identity(seed in any::<u64>(), d in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = map_in_ball(&AffineMap::identity(d), 3.0, &mut rng).unwrap();
        let u = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let p = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let lhs = pairing(&u, &p).dot(&phi.flatten());
        let rhs = u.dot(&phi.apply(&p).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn semi_separation_is_sound(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = random_hpolytope(d, 4, &mut rng).unwrap();
        let bounds = EndoBounds::of(&body);
        let phi = map_in_ball(&AffineMap::constant(&DVector::zeros(d)), bounds.outer_radius, &mut rng).unwrap();
        match semi_separate(&body, &phi, 1e-8).unwrap() {
            SemiSeparation::FixedPoint(p) => {
                prop_assert!((phi.apply(&p).unwrap() - &p).norm() <= 1e-8);
                prop_assert!(body.membership(&p, 1e-8).unwrap());
            }
            SemiSeparation::Cut(t) => {
                prop_assert!(t.violation(&phi) > 0.0);
                for _ in 0..50 {
                    let e = verified_endomorphism(&body, &mut rng).unwrap();
                    prop_assert!(t.violation(&e) <= 1e-8);
                }
            }
        }
    }
}

#[test]
fn corner_simplex_near_boundary_maps() {
    // Maps whose unique fixed point sits just outside the corner simplex are
    // cut by a barycentric constraint; maps that keep every vertex inside
    // get a fixed point inside.
    let body = BoundedBody::corner_simplex(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..40 {
        let shift = if k % 2 == 0 { -1e-8 } else { 1e-8 };
        let m = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-3.0..3.0));
        let target = dvector![shift, 0.4];
        let phi = AffineMap::new(m.clone(), &target - &m * &target).unwrap();
        match semi_separate(&body, &phi, 1e-9).unwrap() {
            SemiSeparation::FixedPoint(p) => {
                assert!((phi.apply(&p).unwrap() - &p).norm() <= 1e-9);
                assert!(body.membership(&p, 1e-9).unwrap());
            }
            SemiSeparation::Cut(cut) => {
                assert!(cut.violation(&phi) > 0.0);
                for _ in 0..50 {
                    let e = verified_endomorphism(&body, &mut rng).unwrap();
                    assert!(cut.violation(&e) <= 1e-8);
                }
            }
        }
    }
}
