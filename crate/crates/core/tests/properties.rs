mod common;

use common::{dataset, random_instance, rng, OracleObjective};
use oversight::dataset::{binarize_target, partition_by_attribute, split_train_test};
use oversight::experiments::{emit_explanation_report, ExplanationContext, Scope};
use oversight::fairglm::{
    covariance_vectors, fit, objective_subgradient, objective_value, FitOptions, ValueWeights,
};
use oversight::pdm::{
    apply_epsilon_budget, apply_unconstrained, correct_random_gt, deviation_fraction, hamming,
    DecisionTarget, PdmKind, PdmPolicy,
};
use oversight::selection::{
    build_observation2_instance, naive_select, robust_select, Candidate, CandidateSet, PolicySet,
};
use oversight::values::{evaluate_f, rho_decision, rho_score, value_report};
use proptest::prelude::*;
use rand::Rng;

fn bits(n: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, n)
}

fn theta(rng: &mut rand_chacha::ChaCha8Rng, p: usize, scale: f64) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(-scale..scale)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn objective_is_concave_along_chords(seed in any::<u64>(), w1 in 0.0f64..5.0, w2 in 0.0f64..5.0) {
        let mut r = rng(seed);
        let data = random_instance(&mut r, 12, 3, &[0, 2]);
        let w = ValueWeights::new(vec![w1, w2]).unwrap();
        let (a, b) = (theta(&mut r, 4, 3.0), theta(&mut r, 4, 3.0));
        let fa = objective_value(&a, &data, &w, 1e-6).unwrap();
        let fb = objective_value(&b, &data, &w, 1e-6).unwrap();
        for lam in [0.25, 0.5, 0.75] {
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect();
            let fm = objective_value(&mid, &data, &w, 1e-6).unwrap();
            prop_assert!(fm >= lam * fa + (1.0 - lam) * fb - 1e-9, "{fm} < chord");
        }
    }

    #[test]
    fn objective_matches_first_principles(seed in any::<u64>(), w in 0.0f64..3.0) {
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..9).map(|_| theta(&mut r, 3, 4.0)).collect();
        let y: Vec<u8> = (0..9).map(|i| (i % 2) as u8).collect();
        let data = dataset(&rows, &y, &[1]);
        let oracle = OracleObjective::new(&rows, &y, &[1], &[w], 1e-3);
        let t = theta(&mut r, 4, 2.0);
        let got = objective_value(&t, &data, &ValueWeights::new(vec![w]).unwrap(), 1e-3).unwrap();
        prop_assert!((got - oracle.value(&t)).abs() <= 1e-10 * (1.0 + got.abs()));
    }

    #[test]
    fn subgradient_matches_finite_differences(seed in any::<u64>()) {
        let mut r = rng(seed);
        let data = random_instance(&mut r, 15, 3, &[1]);
        let w = ValueWeights::new(vec![r.random_range(0.0..2.0)]).unwrap();
        let c = &covariance_vectors(&data)[0];
        let t = theta(&mut r, 4, 2.0);
        let ct: f64 = c.iter().zip(&t).map(|(a, b)| a * b).sum();
        prop_assume!(ct.abs() > 1e-3);
        let g = objective_subgradient(&t, &data, &w, 1e-6).unwrap();
        let h = 1e-6;
        for j in 0..t.len() {
            let (mut up, mut dn) = (t.clone(), t.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (objective_value(&up, &data, &w, 1e-6).unwrap()
                - objective_value(&dn, &data, &w, 1e-6).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()), "j={j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn rho_score_is_the_training_penalty(seed in any::<u64>()) {
        let mut r = rng(seed);
        let data = random_instance(&mut r, 10, 3, &[0, 1]);
        let t = theta(&mut r, 4, 2.0);
        let model = {
            let mut m = fit(&data, &ValueWeights::zeros(2), &FitOptions::default()).unwrap();
            m.theta = t.clone();
            m
        };
        let scores = model.scores(&data).unwrap();
        let base = objective_value(&t, &data, &ValueWeights::zeros(2), 0.0).unwrap();
        for l in 0..2 {
            let mut w = vec![0.0; 2];
            w[l] = 1.0;
            let pen = base - objective_value(&t, &data, &ValueWeights::new(w).unwrap(), 0.0).unwrap();
            let rho = rho_score(&data, &scores, data.sensitive[l]).unwrap();
            prop_assert!((pen - rho).abs() <= 1e-12 * (1.0 + rho), "{pen} vs {rho}");
        }
    }

    #[test]
    fn rho_is_translation_invariant_and_scales(
        raw in prop::collection::vec(-100.0f64..100.0, 2..30),
        shift in -1e3f64..1e3,
        alpha in 0.01f64..100.0,
        seed in any::<u64>(),
    ) {
        let n = raw.len();
        let mut r = rng(seed);
        let d: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let mk = |f: &dyn Fn(f64) -> f64| {
            dataset(&raw.iter().map(|v| vec![f(*v)]).collect::<Vec<_>>(), &y, &[0])
        };
        let base = rho_decision(&mk(&|v| v), &d, 0).unwrap();
        let shifted = rho_decision(&mk(&|v| v + shift), &d, 0).unwrap();
        let scaled = rho_decision(&mk(&|v| alpha * v), &d, 0).unwrap();
        let tol = 1e-9 * (1.0 + shift.abs()) * 100.0;
        prop_assert!((base - shifted).abs() <= tol);
        prop_assert!((scaled - alpha * base).abs() <= 1e-9 * (1.0 + alpha * base) * 100.0);
        let comp: Vec<u8> = d.iter().map(|v| 1 - v).collect();
        let c = rho_decision(&mk(&|v| v), &comp, 0).unwrap();
        prop_assert!((c - base).abs() <= 1e-10 * (1.0 + base) * 100.0);
    }

    #[test]
    fn f_decreases_in_each_rho(acc in 0.0f64..1.0, r1 in 0.0f64..10.0, dr in 0.001f64..5.0, w in 0.01f64..5.0) {
        let weights = ValueWeights::new(vec![w, 1.0]).unwrap();
        let lo = evaluate_f(acc, &[r1, 1.0], &weights).unwrap();
        let hi = evaluate_f(acc, &[r1 + dr, 1.0], &weights).unwrap();
        prop_assert!(hi < lo);
    }

    #[test]
    fn deviation_is_a_scaled_metric((a, b, c) in (1usize..64).prop_flat_map(|n| (bits(n), bits(n), bits(n)))) {
        let d = |x: &[u8], y: &[u8]| deviation_fraction(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &b) == 0.0, a == b);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15);
        prop_assert!((0.0..=1.0).contains(&d(&a, &b)));
        prop_assert_eq!((d(&a, &b) * a.len() as f64).round() as usize, hamming(&a, &b));
    }

    #[test]
    fn epsilon_budget_respects_its_bound(
        (rec, target) in (0usize..200).prop_flat_map(|n| (bits(n), bits(n))),
        eps in 0.0f64..=1.0,
    ) {
        let out = apply_epsilon_budget(&rec, &target, eps).unwrap();
        let n = rec.len();
        prop_assert!(out.overrides <= (eps * n as f64).floor() as usize);
        prop_assert_eq!(hamming(&out.decisions, &rec), out.overrides);
        if n > 0 {
            prop_assert!(deviation_fraction(&out.decisions, &rec).unwrap() <= eps);
        }
        for i in 0..n {
            if out.decisions[i] != rec[i] {
                prop_assert_eq!(out.decisions[i], target[i]);
            }
        }
        let needed = hamming(&rec, &target);
        prop_assert_eq!(out.overrides, needed.min((eps * n as f64).floor() as usize));
    }

    #[test]
    fn unconstrained_overseer_fixes_the_realized_report(
        (rec_a, rec_b, t, y) in (2usize..40).prop_flat_map(|n| (bits(n), bits(n), bits(n), bits(n))),
        raw_seed in any::<u64>(),
    ) {
        let n = t.len();
        let mut r = rng(raw_seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(0.0..10.0)]).collect();
        let data = dataset(&rows, &y, &[0]);
        let w = ValueWeights::new(vec![0.7]).unwrap();
        let ra = apply_unconstrained(&rec_a, &t).unwrap();
        let rb = apply_unconstrained(&rec_b, &t).unwrap();
        prop_assert_eq!(&ra.decisions, &t);
        prop_assert_eq!(&rb.decisions, &t);
        let direct = value_report(&data, &t, &y, &w).unwrap();
        prop_assert_eq!(value_report(&data, &ra.decisions, &y, &w).unwrap(), direct.clone());
        prop_assert_eq!(value_report(&data, &rb.decisions, &y, &w).unwrap(), direct);
    }

    #[test]
    fn random_corrections_only_touch_mistakes(
        (rec, labels) in (0usize..120).prop_flat_map(|n| (bits(n), bits(n))),
        k in 0usize..150,
        seed in any::<u64>(),
    ) {
        let out = correct_random_gt(&rec, &labels, k, seed).unwrap();
        let errors = hamming(&rec, &labels);
        prop_assert_eq!(out.overrides, k.min(errors));
        prop_assert_eq!(hamming(&out.decisions, &labels), errors - out.overrides);
        for i in 0..rec.len() {
            if rec[i] == labels[i] {
                prop_assert_eq!(out.decisions[i], rec[i]);
            }
        }
        prop_assert_eq!(correct_random_gt(&rec, &labels, k, seed).unwrap(), out);
    }

    #[test]
    fn policy_text_round_trips(eps in 0.0f64..=1.0, k in 0usize..1000, seed in any::<u64>(), label in "[a-z]{0,6}") {
        let policies = [
            PdmPolicy::identity(),
            PdmPolicy::new(PdmKind::Unconstrained(DecisionTarget::Labels)).unwrap(),
            PdmPolicy::new(PdmKind::Unconstrained(DecisionTarget::InvertedLabels)).unwrap(),
            PdmPolicy::new(PdmKind::EpsilonBudget { target: DecisionTarget::Labels, epsilon: eps }).unwrap(),
            PdmPolicy::new(PdmKind::RandomCorrectGt { k, seed }).unwrap(),
            PdmPolicy::new(PdmKind::LocalRefit {
                attr_index: k % 13,
                threshold: eps * 100.0,
                weights: ValueWeights::new(vec![eps, 0.25]).unwrap(),
            }).unwrap(),
        ];
        for p in policies {
            let p = p.with_label(label.clone());
            let back: PdmPolicy = p.to_string().parse().unwrap();
            prop_assert_eq!(back, p);
        }
    }

    #[test]
    fn min_f_is_monotone_under_policy_growth(
        (cands, y) in (4usize..40).prop_flat_map(|n| (prop::collection::vec(bits(n), 1..4), bits(n))),
        eps in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let n = y.len();
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(0.0..10.0)]).collect();
        let data = dataset(&rows, &y, &[0]);
        let w = ValueWeights::new(vec![0.3]).unwrap();
        let cs = CandidateSet::new(
            cands.iter().enumerate().map(|(i, d)| Candidate { label: format!("c{i}"), decisions: d.clone() }).collect(),
            y.clone(),
        ).unwrap();
        let small = vec![PdmPolicy::identity()];
        let mut big = small.clone();
        big.push(PdmPolicy::new(PdmKind::EpsilonBudget { target: DecisionTarget::InvertedLabels, epsilon: eps }).unwrap());
        big.push(PdmPolicy::new(PdmKind::RandomCorrectGt { k: n / 3, seed }).unwrap());
        let a = robust_select(&cs, &PolicySet::uniform(small, cs.len()), &w, &data).unwrap();
        let b = robust_select(&cs, &PolicySet::uniform(big.clone(), cs.len()), &w, &data).unwrap();
        for (lo, hi) in b.worst_case.iter().zip(&a.worst_case) {
            prop_assert!(lo <= hi);
        }
        // Every matrix entry is an independent recomputation of F.
        for (i, c) in cs.candidates.iter().enumerate() {
            for (j, p) in big.iter().enumerate() {
                let applied = p.apply(&c.decisions, &y).unwrap();
                let f = value_report(&data, &applied.decisions, &y, &w).unwrap().f;
                prop_assert_eq!(b.matrix.rows[i][j], f);
            }
        }
        // Identity-only robust selection coincides with naive selection.
        prop_assert_eq!(a.winner, naive_select(&cs, &w, &data).unwrap());
    }

    #[test]
    fn observation2_instances_reverse_the_choice(n in 1usize..5000, eps in 0.001f64..=1.0, frac in 0.01f64..0.99) {
        let delta = eps * frac;
        let inst = build_observation2_instance(n, eps, delta).unwrap();
        let w = inst.weights();
        let naive = naive_select(&inst.candidates, &w, &inst.data).unwrap();
        let robust = robust_select(&inst.candidates, &inst.policies, &w, &inst.data).unwrap();
        prop_assert_ne!(naive, robust.winner);
        prop_assert!(robust.worst_case[robust.winner] > robust.worst_case[naive]);
    }

    #[test]
    fn partition_is_disjoint_and_exhaustive(vals in prop::collection::vec(-50.0f64..50.0, 1..60), thr in -60.0f64..60.0) {
        let y: Vec<u8> = (0..vals.len()).map(|i| (i % 2) as u8).collect();
        let data = dataset(&vals.iter().map(|v| vec![*v]).collect::<Vec<_>>(), &y, &[]);
        let p = partition_by_attribute(&data, 0, thr).unwrap();
        let mut all: Vec<usize> = p.upper_idx.iter().chain(&p.lower_idx).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..vals.len()).collect::<Vec<_>>());
        prop_assert!(p.upper_idx.iter().all(|&i| vals[i] >= thr));
        prop_assert!(p.lower_idx.iter().all(|&i| vals[i] < thr));
    }

    #[test]
    fn binarizing_labels_keeps_positives(mut v in bits(40)) {
        v[0] = 1;
        let vals: Vec<f64> = v.iter().map(|&b| f64::from(b)).collect();
        let out = binarize_target(&vals);
        for i in 0..v.len() {
            if v[i] == 1 {
                prop_assert_eq!(out[i], 1);
            }
        }
    }

    #[test]
    fn splits_partition_the_rows(n in 2usize..80, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let data = dataset(&rows, &y, &[]);
        if let Ok(s) = split_train_test(&data, frac, seed) {
            prop_assert_eq!(s.test.n(), (frac * n as f64).floor() as usize);
            prop_assert_eq!(s.train.n() + s.test.n(), n);
            let mut ids: Vec<usize> = s.train.row_ids.iter().chain(&s.test.row_ids).copied().collect();
            ids.sort_unstable();
            prop_assert_eq!(ids, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn explanation_fields_nest(seed in any::<u64>(), eps in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let data = random_instance(&mut r, 10, 2, &[1]);
        let w = ValueWeights::new(vec![0.5]).unwrap();
        let model = fit(&data, &w, &FitOptions::default()).unwrap();
        let policy = PdmPolicy::new(PdmKind::EpsilonBudget { target: DecisionTarget::Labels, epsilon: eps }).unwrap();
        let ctx = ExplanationContext { model: &model, data: &data, policy: Some(&policy), weights: Some(&w) };
        let fields: Vec<Vec<String>> = [Scope::E1, Scope::E2, Scope::E3, Scope::E4]
            .into_iter()
            .map(|s| emit_explanation_report(s, &ctx).unwrap().field_names())
            .collect();
        for pair in fields.windows(2) {
            prop_assert!(pair[1].len() > pair[0].len());
            prop_assert!(pair[0].iter().all(|f| pair[1].contains(f)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn penalty_path_is_monotone(seed in any::<u64>(), base in 0.0f64..2.0, step in 0.1f64..5.0) {
        let mut r = rng(seed);
        let data = random_instance(&mut r, 40, 3, &[0, 2]);
        let c = covariance_vectors(&data);
        let opts = FitOptions::default();
        let penalty = |w: Vec<f64>, l: usize| {
            let m = fit(&data, &ValueWeights::new(w).unwrap(), &opts).unwrap();
            c[l].iter().zip(&m.theta).map(|(a, b)| a * b).sum::<f64>().abs()
        };
        for l in 0..2 {
            let mut w = vec![base; 2];
            let before = penalty(w.clone(), l);
            w[l] += step;
            let after = penalty(w, l);
            prop_assert!(after <= before + 1e-4, "l={l}: {after} > {before}");
        }
    }

    #[test]
    fn decisions_ignore_positive_rescaling(seed in any::<u64>(), s in 0.01f64..100.0) {
        let mut r = rng(seed);
        let data = random_instance(&mut r, 20, 3, &[1]);
        let model = fit(&data, &ValueWeights::new(vec![0.2]).unwrap(), &FitOptions::default()).unwrap();
        let mut scaled = model.clone();
        scaled.theta.iter_mut().for_each(|t| *t *= s);
        for i in 0..data.n() {
            let x = data.x.row(i);
            let (_, p) = model.predict_score(x).unwrap();
            prop_assert!(p > 0.0 && p < 1.0);
            let (score, _) = model.predict_score(x).unwrap();
            if score.abs() > 1e-9 {
                prop_assert_eq!(model.decide(x).unwrap(), scaled.decide(x).unwrap());
            }
        }
    }
}
