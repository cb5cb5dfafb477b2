//! Property tests for the support-function calculus against a vertex oracle.

mod support;

use proptest::prelude::*;

use blockreach::geometry::{
    box_approximation, is_subset, template_overapprox, HPolyhedron, Hyperrectangle, LazySet,
    Matrix, Vector,
};

use support::{support_by_vertices, vertices_of};

fn vec_strategy(n: usize, range: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-range..range, n)
}

fn box_strategy(n: usize) -> impl Strategy<Value = Hyperrectangle> {
    (vec_strategy(n, 2.0), prop::collection::vec(0.01..1.5f64, n)).prop_map(|(c, r)| {
        Hyperrectangle::new(
            Vector::from_column_slice(&c),
            Vector::from_column_slice(&r),
        )
    })
}

fn box_vertices(b: &Hyperrectangle) -> Vec<Vector> {
    b.vertices()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minkowski_sum_support_is_sum(a in box_strategy(3), b in box_strategy(3), d in vec_strategy(3, 1.0)) {
        let d = Vector::from_column_slice(&d);
        let sum = LazySet::MinkowskiSum(vec![LazySet::Box(a.clone()), LazySet::Box(b.clone())]);
        let got = sum.support(&d).unwrap();
        prop_assert!((got - (a.support(&d) + b.support(&d))).abs() < 1e-12);
    }

    #[test]
    fn hull_support_is_max(a in box_strategy(3), b in box_strategy(3), d in vec_strategy(3, 1.0)) {
        let d = Vector::from_column_slice(&d);
        let hull = LazySet::ConvexHull(vec![LazySet::Box(a.clone()), LazySet::Box(b.clone())]);
        let got = hull.support(&d).unwrap();
        prop_assert!((got - a.support(&d).max(b.support(&d))).abs() < 1e-12);
    }

    #[test]
    fn product_support_is_sum_of_parts(a in box_strategy(2), b in box_strategy(2), d in vec_strategy(4, 1.0)) {
        let d = Vector::from_column_slice(&d);
        let prod = LazySet::Product(vec![LazySet::Box(a.clone()), LazySet::Box(b.clone())]);
        let got = prod.support(&d).unwrap();
        let da = Vector::from_column_slice(&[d[0], d[1]]);
        let db = Vector::from_column_slice(&[d[2], d[3]]);
        prop_assert!((got - (a.support(&da) + b.support(&db))).abs() < 1e-12);
    }

    #[test]
    fn linear_map_support_matches_vertices(b in box_strategy(3), m in vec_strategy(9, 1.0), d in vec_strategy(3, 1.0)) {
        let d = Vector::from_column_slice(&d);
        let m = Matrix::from_row_slice(3, 3, &m);
        let mapped = LazySet::LinearMap(m.clone(), Box::new(LazySet::Box(b.clone())));
        let got = mapped.support(&d).unwrap();
        let oracle = box_vertices(&b)
            .iter()
            .map(|v| (&m * v).dot(&d))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    }

    #[test]
    fn polyhedron_support_matches_vertex_oracle(seed in 0u64..1000) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = support::random_poly(&mut rng, 3, 2);
        let verts = vertices_of(&p);
        prop_assert!(!verts.is_empty());
        for d in support::dense_directions(3, 20, &mut rng) {
            let got = p.support(&d).unwrap();
            let oracle = support_by_vertices(&verts, &d);
            prop_assert!((got - oracle).abs() < 1e-7, "{got} vs {oracle}");
        }
    }

    #[test]
    fn box_approximation_contains_the_set(seed in 0u64..1000) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = support::random_poly(&mut rng, 3, 2);
        let set = LazySet::Polyhedron(p.clone());
        let bx = box_approximation(&set).unwrap();
        for v in vertices_of(&p) {
            prop_assert!(bx.contains(&v, 1e-9));
        }
    }

    #[test]
    fn template_overapprox_contains_the_set(seed in 0u64..1000) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = support::random_poly(&mut rng, 2, 2);
        let set = LazySet::Polyhedron(p.clone());
        let approx = template_overapprox(&set, &blockreach::geometry::octagon_directions_2d()).unwrap();
        for v in vertices_of(&p) {
            prop_assert!(approx.contains(&v, 1e-9));
        }
    }

    #[test]
    fn subset_check_matches_vertex_oracle(a in box_strategy(3), b in box_strategy(3)) {
        let outer = b.to_polyhedron();
        let claimed = is_subset(&LazySet::Box(a.clone()), &outer).unwrap();
        let oracle = box_vertices(&a).iter().all(|v| outer.contains(v, 1e-9));
        prop_assert_eq!(claimed, oracle);
    }

    #[test]
    fn intersection_is_commutative(seed in 0u64..500) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = support::random_poly(&mut rng, 2, 1);
        let b = support::random_poly(&mut rng, 2, 1);
        let ab = a.intersection(&b).unwrap();
        let ba = b.intersection(&a).unwrap();
        prop_assert_eq!(ab.is_empty(), ba.is_empty());
        if !ab.is_empty() {
            for d in support::dense_directions(2, 16, &mut rng) {
                let x = ab.support(&d).unwrap();
                let y = ba.support(&d).unwrap();
                prop_assert!((x - y).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn empty_intersection_support_errors() {
    let a = HPolyhedron::with_dim(
        1,
        vec![blockreach::geometry::HalfSpace::new(
            Vector::from_column_slice(&[1.0]),
            0.0,
        )],
    );
    let b = HPolyhedron::with_dim(
        1,
        vec![blockreach::geometry::HalfSpace::new(
            Vector::from_column_slice(&[-1.0]),
            -1.0,
        )],
    );
    let both = a.intersection(&b).unwrap();
    assert!(both.is_empty());
    assert!(both.support(&Vector::from_column_slice(&[1.0])).is_err());
}
