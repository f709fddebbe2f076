use proptest::prelude::*;

use skms::algebra::{max_abs, Grading, Mat, Parity, C64};
use skms::cochain::{boundary, jlo_cocycle, tau_eval};
use skms::kernels::exp_divided_difference;
use skms::model::{build_model, ModelSpec};
use skms::perturbation::PerturbedContext;
use skms::report::{reports_from_json, reports_to_csv, reports_to_json, VerificationReport};
use skms::sample::{random_element, random_even, rng};

fn spec_strategy() -> impl Strategy<Value = ModelSpec> {
    (1usize..5, 1usize..5, any::<u64>(), any::<bool>(), prop::option::of((any::<u64>(), 0.1f64..1.0)))
        .prop_filter("p != q", |(p, q, ..)| p != q)
        .prop_map(|(p, q, seed, block, pert)| {
            let spec = if block {
                ModelSpec::rectangular_block_seeded(p, q, seed)
            } else {
                ModelSpec::random_graded(p, q, seed)
            };
            match pert {
                Some((s, scale)) => spec.with_perturbation_seed(s, scale),
                None => spec,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parity_split_reconstructs(seed in any::<u64>(), p in 1usize..4, q in 1usize..4) {
        let g = Grading::standard(p, q).unwrap();
        let x = random_element(&g, &mut rng(seed));
        let (even, odd) = g.parity_split(&x).unwrap();
        prop_assert!(max_abs(&(even.matrix() + odd.matrix() - x.matrix())) < 1e-14);
        prop_assert_eq!(g.classify(even.matrix()), Parity::Even);
        prop_assert_eq!(g.classify(odd.matrix()), Parity::Odd);
    }

    #[test]
    fn grading_fixes_scalars_exactly(spec in spec_strategy(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let model = build_model(&spec).unwrap();
        let d = model.system.dim();
        let s = Mat::identity(d, d) * C64::new(re, im);
        prop_assert_eq!(model.system.grading().conjugate(&s), s.clone());
        prop_assert!(max_abs(&model.system.delta_mat(&Mat::identity(d, d))) == 0.0);
    }

    #[test]
    fn divided_differences_are_symmetric(mut nodes in prop::collection::vec(-4.0f64..4.0, 1..7), rot in 0usize..7) {
        let a = exp_divided_difference(&nodes);
        let k = rot % nodes.len();
        nodes.rotate_left(k);
        nodes.reverse();
        let b = exp_divided_difference(&nodes);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!(a > 0.0);
    }

    #[test]
    fn model_json_round_trip(spec in spec_strategy()) {
        let text = spec.to_json().unwrap();
        let back = ModelSpec::from_json(&text).unwrap();
        prop_assert_eq!(back.digest(), spec.digest());
        let (a, b) = (build_model(&spec).unwrap(), build_model(&back).unwrap());
        prop_assert_eq!(a.system.supercharge().matrix(), b.system.supercharge().matrix());
        prop_assert_eq!(a.perturbation.matrix(), b.perturbation.matrix());
    }

    #[test]
    fn witten_index_is_integral_and_invariant(spec in spec_strategy(), r in 0.0f64..1.0) {
        let model = build_model(&spec).unwrap();
        let z = model.witten_index();
        prop_assert!((z - (spec.p as f64 - spec.q as f64)).abs() < 1e-10);
        let ctx = PerturbedContext::new(model.system.clone(), model.perturbation.clone(), r).unwrap();
        prop_assert!((ctx.witten_index_r() - z).abs() < 1e-10);
    }

    #[test]
    fn tau_vanishes_on_scalar_slots(spec in spec_strategy(), slot in 1usize..5, seed in any::<u64>()) {
        let model = build_model(&spec).unwrap();
        let g = model.system.grading();
        let mut r = rng(seed);
        let n = 4;
        let mut xs: Vec<_> = (0..=n).map(|_| random_even(g, &mut r)).collect();
        xs[slot] = g.identity();
        prop_assert_eq!(tau_eval(&model.system, n, &xs).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn jlo_is_closed_on_random_models(spec in spec_strategy(), seed in any::<u64>()) {
        let model = build_model(&spec).unwrap();
        let g = model.system.grading();
        let d = boundary(&jlo_cocycle(model.system.clone(), 4));
        let mut r = rng(seed);
        for n in [1usize, 3] {
            let xs: Vec<Mat> = (0..=n).map(|_| random_even(g, &mut r).into_matrix()).collect();
            let scale: f64 = xs.iter().map(|x| x.norm()).product();
            prop_assert!(d.eval(n, &xs).unwrap().norm() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn report_serializations_agree(rows in prop::collection::vec(("[a-z_,\"]{1,12}", 0.0f64..1.0, 1e-12f64..1.0, any::<u64>()), 0..6)) {
        let reports: Vec<_> = rows
            .iter()
            .map(|(name, res, tol, seed)| VerificationReport::new(name, "anchor", 3, *res, *tol, *seed))
            .collect();
        prop_assert_eq!(reports_from_json(&reports_to_json(&reports).unwrap()).unwrap(), reports.clone());
        let csv = reports_to_csv(&reports);
        let parsed: Vec<_> = csv::ReaderBuilder::new().from_reader(csv.as_bytes()).records().collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(parsed.len(), reports.len());
        for (rec, rep) in parsed.iter().zip(&reports) {
            prop_assert_eq!(&rec[0], rep.identity_name.as_str());
            prop_assert_eq!(&rec[5], if rep.passed { "true" } else { "false" });
        }
    }
}
