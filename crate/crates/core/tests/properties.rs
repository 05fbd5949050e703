use nalgebra::DMatrix;
use proptest::prelude::*;

use kcone::affine::{construct_affine_k_minorant, verify_k_bound};
use kcone::convexity::{estimate_dual_kf, test_k_convexity};
use kcone::lp::{hull_membership, solve, LpProblem, LpStatus};
use kcone::maps::parse_map;
use kcone::sampling::Sampler;
use kcone::space::{smat, svec};
use kcone::{Cone, MapSpec, Point, SpaceDesc};

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 3)
}

fn rows3(min: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(vec3(), min..=max)
        .prop_filter("nonzero rows", |rs| rs.iter().all(|r| r.iter().map(|v| v * v).sum::<f64>() > 1e-2))
}

fn sym2() -> impl Strategy<Value = DMatrix<f64>> {
    (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b, c)| DMatrix::from_row_slice(2, 2, &[a, b, b, c]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hull_of_convex_combination(points in prop::collection::vec(vec3(), 2..8), w in prop::collection::vec(0.01f64..1.0, 8)) {
        let pts: Vec<Point> = points.iter().map(|p| Point::rn(p)).collect();
        let s: f64 = w[..pts.len()].iter().sum();
        let mut q = vec![0.0; 3];
        for (p, wi) in pts.iter().zip(&w) {
            for (qi, pi) in q.iter_mut().zip(&p.coords) {
                *qi += wi / s * pi;
            }
        }
        let m = hull_membership(&pts, &Point::rn(&q), 1e-8).unwrap();
        prop_assert!(m.inside);
        let lam = m.coefficients.unwrap();
        prop_assert!((lam.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        prop_assert!(lam.iter().all(|l| *l >= -1e-10));
        prop_assert!(m.residual <= 1e-8);
    }

    #[test]
    fn far_point_is_separated(points in prop::collection::vec(vec3(), 1..8)) {
        let pts: Vec<Point> = points.iter().map(|p| Point::rn(p)).collect();
        let q = [100.0, -100.0, 100.0];
        let m = hull_membership(&pts, &Point::rn(&q), 1e-8).unwrap();
        prop_assert!(!m.inside);
        let sep = m.separator.unwrap();
        prop_assert!(sep.eval(&q) > 0.0);
        for p in &pts {
            prop_assert!(sep.eval(&p.coords) <= 1e-7);
        }
    }

    #[test]
    fn lp_box_optimum(c in vec3(), ub in prop::collection::vec(0.5f64..4.0, 3)) {
        // max <c,x> over 0 <= x <= ub: optimum picks ub_i where c_i > 0.
        let mut p = LpProblem::new(3).maximize(c.clone());
        for (j, u) in ub.iter().enumerate() {
            let mut row = vec![0.0; 3];
            row[j] = 1.0;
            p = p.le(row, *u);
        }
        let r = solve(&p).unwrap();
        prop_assert_eq!(r.status, LpStatus::Optimal);
        let want: f64 = c.iter().zip(&ub).map(|(ci, ui)| ci.max(0.0) * ui).sum();
        prop_assert!((r.objective_value.unwrap() - want).abs() < 1e-8 * (1.0 + want.abs()));
    }

    #[test]
    fn contradictory_bounds_infeasible(a in 0.1f64..5.0) {
        // x >= a and x <= -a has no solution; the Farkas ray proves it.
        let p = LpProblem::new(1).free(0).ge(vec![1.0], a).le(vec![1.0], -a);
        let r = solve(&p).unwrap();
        prop_assert_eq!(r.status, LpStatus::Infeasible);
        prop_assert!(r.farkas.is_some());
    }

    #[test]
    fn polar_involution_v_rep(gens in rows3(1, 5), x in vec3()) {
        let k = Cone::v_rep(SpaceDesc::rn(3), gens).unwrap();
        let kpp = k.polar().polar();
        let p = Point::rn(&x);
        let a = k.contains(&p, 1e-7).unwrap();
        let b = kpp.contains(&p, 1e-7).unwrap();
        // near-boundary points may flip under rounding
        if a != b {
            let scaled = p.scale(1.0 / p.norm().max(1e-12));
            prop_assert!(k.contains(&scaled, 1e-5).unwrap() == kpp.contains(&scaled, 1e-5).unwrap());
        }
    }

    #[test]
    fn dual_is_negated_polar(normals in rows3(1, 4), x in vec3()) {
        let k = Cone::h_rep(SpaceDesc::rn(3), normals, vec![]).unwrap();
        let p = Point::rn(&x);
        prop_assert_eq!(k.dual().contains(&p, 1e-9).unwrap(), k.polar().contains(&p.neg(), 1e-9).unwrap());
    }

    #[test]
    fn polar_pairs_are_nonpositive(gens in rows3(1, 5), seed in 0u64..1000) {
        let k = Cone::v_rep(SpaceDesc::rn(3), gens.clone()).unwrap();
        for w in k.polar().ri_sample(10, seed).unwrap() {
            for g in &gens {
                prop_assert!(w.dot(&Point::rn(g)).unwrap() <= 1e-8);
            }
        }
    }

    #[test]
    fn orthant_order_antisymmetric(x in vec3(), y in vec3()) {
        let k = Cone::orthant(3);
        let (px, py) = (Point::rn(&x), Point::rn(&y));
        let xy = k.leq(&px, &py, 0.0).unwrap().0;
        let yx = k.leq(&py, &px, 0.0).unwrap().0;
        if xy && yx {
            prop_assert!(px.sub(&py).unwrap().norm() == 0.0);
        }
        prop_assert_eq!(xy, x.iter().zip(&y).all(|(a, b)| a <= b));
    }

    #[test]
    fn psd_order_matches_eigenvalues(a in sym2(), b in sym2()) {
        let k = Cone::psd(2);
        let (pa, pb) = (svec(&a).unwrap(), svec(&b).unwrap());
        let lmin = (&b - &a).symmetric_eigenvalues().min();
        if lmin.abs() > 1e-6 {
            prop_assert_eq!(k.leq(&pa, &pb, 1e-9).unwrap().0, lmin > 0.0);
        }
    }

    #[test]
    fn eigen_is_orthogonally_invariant(a in sym2(), theta in 0.0f64..6.3) {
        let f = MapSpec::eigen(2);
        let q = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let rotated = &q * &a * q.transpose();
        let y1 = f.eval(&svec(&a).unwrap()).unwrap();
        let y2 = f.eval(&svec(&(0.5 * (&rotated + rotated.transpose()))).unwrap()).unwrap();
        prop_assert!(y1.sub(&y2).unwrap().norm() < 1e-9);
        prop_assert!(y1.coords[0] >= y1.coords[1]);
    }

    #[test]
    fn svec_roundtrip_preserves_inner_product(a in sym2(), b in sym2()) {
        let (pa, pb) = (svec(&a).unwrap(), svec(&b).unwrap());
        prop_assert!((pa.dot(&pb).unwrap() - (&a * &b).trace()).abs() < 1e-9);
        prop_assert!((smat(&pa) - &a).norm() < 1e-12);
    }

    #[test]
    fn square_gradient_formula(a in sym2(), v in sym2()) {
        // d/dX <V, X^2> = VX + XV
        let f = MapSpec::square(2);
        let g = f.grad_scalar(&svec(&v).unwrap(), &svec(&a).unwrap()).unwrap();
        let want = svec(&(&v * &a + &a * &v)).unwrap();
        prop_assert!(g.sub(&want).unwrap().norm() < 1e-9 * (1.0 + want.norm()));
    }

    #[test]
    fn intersection_epigraph_is_conjunction(x in vec3(), y in vec3(), n1 in rows3(1, 3), n2 in rows3(1, 3)) {
        let sp = SpaceDesc::rn(3);
        let k1 = Cone::h_rep(sp, n1, vec![]).unwrap();
        let k2 = Cone::h_rep(sp, n2, vec![]).unwrap();
        let k = k1.intersect(&k2).unwrap();
        let (px, py) = (Point::rn(&x), Point::rn(&y));
        let both = k1.leq(&px, &py, 1e-9).unwrap().0 && k2.leq(&px, &py, 1e-9).unwrap().0;
        prop_assert_eq!(k.leq(&px, &py, 1e-9).unwrap().0, both);
    }

    #[test]
    fn epigraph_absorbs_cone(xs in prop::collection::vec(-2.0f64..2.0, 4), seed in 0u64..1000) {
        // (x, F(x) + k) is in Epi_K F for k in K
        let f = MapSpec::gram_half(2, 2);
        let k = Cone::psd(2);
        let x = Point::new(f.input_space(), xs).unwrap();
        let fx = f.eval(&x).unwrap();
        for d in k.ri_sample(5, seed).unwrap() {
            prop_assert!(k.leq(&fx, &fx.add(&d).unwrap(), 1e-9).unwrap().0);
        }
    }
}

#[test]
fn same_seed_same_estimate() {
    let f = MapSpec::inverse(2);
    let a = estimate_dual_kf(&f, 40, 60, 42).unwrap();
    let b = estimate_dual_kf(&f, 40, 60, 42).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = estimate_dual_kf(&f, 40, 60, 43).unwrap();
    assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
}

#[test]
fn sampler_points_are_index_addressable() {
    let s = Sampler::unit_sphere(SpaceDesc::sym(3), 9);
    let all = s.sample(20);
    assert_eq!(s.sample_range(7, 5), all[7..12].to_vec());
    assert_eq!(s.point(13), all[13]);
}

#[test]
fn gallery_convexity_verdicts() {
    let psd = Cone::psd(2);
    for name in ["gramhalf:2x2", "square:2", "inverse:2"] {
        let f = parse_map(name).unwrap();
        assert!(!test_k_convexity(&f, &psd, 100, 0).unwrap().is_negative(), "{name}");
        assert!(test_k_convexity(&f, &Cone::trivial(f.output_space()), 100, 0).unwrap().is_negative(), "{name}");
    }
    let e3 = parse_map("eigen:3").unwrap();
    assert!(!test_k_convexity(&e3, &Cone::spectral(3), 100, 0).unwrap().is_negative());
}

#[test]
fn minorant_on_convex_halfspace_only() {
    // (x², −x²): only the first component is convex
    let f = parse_map("x2-negx2").unwrap();
    let s = Sampler::boxed(f.input_space(), -3.0, 3.0, 0);
    let b = construct_affine_k_minorant(&f, &[Point::rn(&[1.0, 0.0])], &[]).unwrap();
    assert!(!verify_k_bound(&f, &b, &s, 300, 0, 1e-8).unwrap().is_negative());
    let b = construct_affine_k_minorant(&f, &[Point::rn(&[0.0, 1.0])], &[]).unwrap();
    assert!(verify_k_bound(&f, &b, &s, 300, 0, 1e-8).unwrap().is_refuted());
}
