mod common;

use std::sync::OnceLock;

use approx::assert_relative_eq;
use common::{random_stream, StreamSpec};
use nalgebra::{dmatrix, dvector, DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zonoid::candidates::{bravo_candidates, lambda_zonotope};
use zonoid::estimators::{self, transform_nonneg, untransform, EstimatorConfig};
use zonoid::geometry::PMatrix;
use zonoid::lmi::{assemble_f, solve_p2, ContractionConfig, P2Optimum};
use zonoid::oracle::{self, Polygon};
use zonoid::{Halfspace, LambdaGain, Strip, StripBundle, Zonotope};

fn zonotope(n: usize, max_gens: usize) -> impl Strategy<Value = Zonotope> {
    (n..=max_gens).prop_flat_map(move |r| {
        (
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n * r),
        )
            .prop_map(move |(c, g)| Zonotope::new(DVector::from_vec(c), DMatrix::from_vec(n, r, g)).unwrap())
    })
}

fn direction(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(DVector::from_vec)
}

fn samples_in(z: &Zonotope, keep: impl Fn(&DVector<f64>) -> bool, tries: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..tries).map(|_| z.sample_with(&mut rng)).filter(|x| keep(x)).collect()
}

/// Andrew's monotone chain, counterclockwise.
fn hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut out: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = out.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while out.len() >= start + 2 && cross(out[out.len() - 2], out[out.len() - 1], p) <= 0.0 {
                out.pop();
            }
            out.push(p);
        }
        out.pop();
    }
    out
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[i][1] * v[(i + 1) % n][0]).sum::<f64>() / 2.0
}

fn polygon(seed_pts: Vec<[f64; 2]>) -> Polygon {
    Polygon::new(hull(seed_pts))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_encloses_original(z in zonotope(3, 9), max_order in 3usize..7, d in direction(3)) {
        let s = z.support_value(&d).unwrap();
        let reduced = z.reduce_order(max_order);
        prop_assert!(reduced.order() <= max_order);
        prop_assert!(reduced.support_value(&d).unwrap() >= s - 1e-9 * (1.0 + s.abs()));
        prop_assert!(z.reduce_to_interval_hull().support_value(&d).unwrap() >= s - 1e-9 * (1.0 + s.abs()));
    }

    #[test]
    fn bravo_candidates_cover_intersection(z in zonotope(2, 5), phi in direction(2), off in -0.8..0.8f64, size in 0.05..1.0f64, seed in any::<u64>()) {
        let center = phi.dot(z.center()) + off * z.support_value(&phi).unwrap().abs().max(0.1);
        let strip = Strip::new(phi, center, size).unwrap();
        let cands = bravo_candidates(&z, &strip).unwrap();
        prop_assert_eq!(cands.len(), z.order() + 1);
        prop_assert_eq!(&cands[0], &z);
        for x in samples_in(&z, |x| strip.contains(x, 0.0), 400, seed) {
            for c in &cands {
                prop_assert!(c.contains_point(&x, 1e-9));
            }
        }
    }

    #[test]
    fn any_gain_covers_bundle_intersection(z in zonotope(2, 4), lam in prop::collection::vec(-1.0..1.0f64, 4), seed in any::<u64>()) {
        let phi = dmatrix![1.0, 0.3; 0.2, 1.0];
        let d = phi.transpose() * z.center();
        let bundle = StripBundle::new(phi, d, dvector![0.3, 0.4]).unwrap();
        let gain = LambdaGain::new(DMatrix::from_vec(2, 2, lam)).unwrap();
        let out = lambda_zonotope(&z, &bundle, &gain).unwrap();
        for x in samples_in(&z, |x| bundle.contains(x, 0.0), 400, seed) {
            prop_assert!(out.contains_point(&x, 1e-9));
        }
    }

    #[test]
    fn minkowski_area_matches_hull(pts in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 3..10), g in (0.0..0.5f64, 0.0..0.5f64)) {
        let poly = polygon(pts.iter().map(|p| [p.0, p.1]).collect());
        prop_assume!(poly.area() > 1e-6);
        let sum = poly.minkowski_box([g.0, g.1]);
        let mut corners = Vec::new();
        for v in poly.vertices() {
            for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                corners.push([v[0] + sx * g.0, v[1] + sy * g.1]);
            }
        }
        let expected = shoelace(&hull(corners));
        prop_assert!(sum.is_convex());
        assert_relative_eq!(sum.area(), expected, max_relative = 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn clipping_order_is_irrelevant(pts in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 3..10), a in direction(2), b in direction(2), oa in -1.0..1.0f64, ob in -1.0..1.0f64) {
        let poly = polygon(pts.iter().map(|p| [p.0, p.1]).collect());
        let (ha, hb) = (Halfspace::new(a, oa), Halfspace::new(b, ob));
        let ab = poly.clip(&ha).clip(&hb);
        let ba = poly.clip(&hb).clip(&ha);
        assert_relative_eq!(ab.area(), ba.area(), epsilon = 1e-10);
        prop_assert!(ab.area() <= poly.area() + 1e-12);
    }

    #[test]
    fn planar_volume_is_polygon_area(z in zonotope(2, 7)) {
        let poly = Polygon::from_zonotope(&z).unwrap();
        let pts: Vec<[f64; 2]> = poly.vertices().to_vec();
        assert_relative_eq!(z.volume().unwrap(), shoelace(&hull(pts)), max_relative = 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn shift_round_trip(z in zonotope(2, 4), d in prop::collection::vec(0.0..3.0f64, 2)) {
        let d = DVector::from_vec(d);
        let back = untransform(&z.translate(&d).unwrap(), &d).unwrap();
        prop_assert!((back.center() - z.center()).amax() < 1e-12);
        prop_assert_eq!(back.generators(), z.generators());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shifted_records_stay_consistent(seed in any::<u64>(), d in prop::collection::vec(0.0..3.0f64, 2)) {
        let d = DVector::from_vec(d);
        let (stream, truth) = random_stream(seed, StreamSpec { steps: 10, ..Default::default() });
        for (r, th) in stream.iter().zip(&truth) {
            prop_assert!(r.consistent_with(th, 1e-9));
            prop_assert!(transform_nonneg(r, &d).unwrap().consistent_with(&(th + &d), 1e-9));
        }
    }

    #[test]
    fn cazi_is_sound_and_deterministic(seed in any::<u64>(), m in 1usize..5, drift in 0.0..0.01f64) {
        let (stream, truth) = random_stream(seed, StreamSpec { steps: 25, m, drift, ..Default::default() });
        let cfg = EstimatorConfig::default();
        let a = estimators::run(&stream, &cfg).unwrap();
        let b = estimators::run(&stream, &cfg).unwrap();
        prop_assert_eq!(&a.steps, &b.steps);
        for (s, th) in a.steps.iter().zip(&truth) {
            prop_assert!(s.afss.contains_point(th, 1e-9), "step {}", s.k);
        }
    }

    #[test]
    fn multipass_volume_never_grows(seed in any::<u64>()) {
        let (stream, _) = random_stream(seed, StreamSpec { steps: 15, ..Default::default() });
        let passes = estimators::multipass(&stream, &EstimatorConfig::default(), 3).unwrap();
        let v: Vec<f64> = passes.iter().map(|t| t.final_volume().unwrap()).collect();
        prop_assert!(v[1] <= v[0] * (1.0 + 1e-12) && v[2] <= v[1] * (1.0 + 1e-12), "{v:?}");
    }

    #[test]
    fn fss_shrinks_without_drift(seed in any::<u64>()) {
        let (stream, truth) = random_stream(seed, StreamSpec { steps: 15, ..Default::default() });
        let steps = oracle::run(&Polygon::from_box([0.0, 0.0], [2.0, 2.0]), &stream).unwrap();
        for (w, th) in steps.windows(2).zip(&truth[1..]) {
            prop_assert!(w[1].area <= w[0].area + 1e-12);
            prop_assert!(Polygon::new(w[1].vertices.clone()).contains([th[0], th[1]], 1e-9));
        }
    }
}

struct Fig3 {
    bundle: StripBundle,
    opt: P2Optimum,
}

fn fig3() -> &'static Fig3 {
    static CELL: OnceLock<Fig3> = OnceLock::new();
    CELL.get_or_init(|| {
        let z = Zonotope::new(dvector![0.1, -0.5], dmatrix![0.1, 0.2, 0.3; 0.3, 0.2, 0.1]).unwrap();
        let bundle = StripBundle::new(
            dmatrix![5.0, -4.0, 1.0; 1.0, 1.0, 2.0],
            dvector![-0.1163, -0.2935, -0.6928],
            dvector![0.2, 0.2, 0.3],
        )
        .unwrap();
        let gamma = DMatrix::from_diagonal(&dvector![0.05, 0.05]);
        let sol = solve_p2(&z, &bundle, &gamma, &ContractionConfig::default()).unwrap();
        let opt = sol.optimum().expect("instance is feasible").clone();
        Fig3 { bundle, opt }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// F(αP, αX) = αF + (1−α)·(PSD), so shrinking keeps feasibility.
    #[test]
    fn p2_optimum_scales_down(alpha in 1e-3..=1.0f64) {
        let f = fig3();
        let gamma = DMatrix::from_diagonal(&dvector![0.05, 0.05]);
        let p = PMatrix::new(f.opt.p.matrix() * alpha).unwrap();
        let x = &f.opt.x * alpha;
        let m = assemble_f(&p, &x, &f.bundle, &gamma, &ContractionConfig::default()).unwrap();
        let lmin = SymmetricEigen::new(m).eigenvalues.min();
        prop_assert!(lmin >= -1e-7, "λmin {lmin} at α {alpha}");
    }
}
