use proptest::prelude::*;
use survfunnel::funnel::{benchmark_mortality, summarize_center, BenchmarkConfig, Classification, Multiplicity, Outcome};
use survfunnel::pseudo::pseudo_observations;
use survfunnel::survdata::{
    kaplan_meier, km_death_probability, poisson_binomial_pmf, reverse_kaplan_meier, two_sided_critical, Dataset, SubjectRecord,
};

/// Distinct exit times so deaths and censorings never tie.
fn cohort() -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec((1u32..10_000, any::<bool>()), 2..40).prop_map(|v| {
        let mut seen = std::collections::BTreeSet::new();
        v.into_iter().filter(|(t, _)| seen.insert(*t)).map(|(t, d)| (t as f64 / 100.0, d)).collect()
    })
}

fn records(v: &[(f64, bool)]) -> Vec<SubjectRecord<f64>> {
    v.iter().map(|&(t, d)| SubjectRecord::simple("c", t, d, &[]).unwrap()).collect()
}

proptest! {
    #[test]
    fn km_times_reverse_km_is_empirical_survivor(v in cohort(), t in 0.0f64..100.0) {
        let r = records(&v);
        let s = kaplan_meier(&r).unwrap().eval(t);
        let g = reverse_kaplan_meier(&r).unwrap().eval(t);
        let beyond = r.iter().filter(|x| x.time > t).count() as f64 / r.len() as f64;
        prop_assert!((s * g - beyond).abs() < 1e-12);
    }

    #[test]
    fn pmf_is_a_distribution_with_the_right_mean(p in prop::collection::vec(0.0f64..=1.0, 0..60)) {
        let pmf = poisson_binomial_pmf(&p).unwrap();
        prop_assert_eq!(pmf.len(), p.len() + 1);
        prop_assert!(pmf.iter().all(|&q| q >= 0.0));
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = pmf.iter().enumerate().map(|(k, q)| k as f64 * q).sum();
        prop_assert!((mean - p.iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn pseudo_values_average_to_estimate(v in cohort()) {
        let r = records(&v);
        let tau = 50.0;
        // The identity needs every leave-one-out curve to reach tau. When dropping
        // the last subject at risk leaves a curve that stops at a censoring before
        // tau, that replicate is pinned at its last value and the mean drifts.
        let loo_defined = (0..r.len()).all(|i| {
            let mut rest = r.clone();
            rest.remove(i);
            km_death_probability(&rest, tau).is_ok()
        });
        prop_assume!(loo_defined);
        if let Ok(pv) = pseudo_observations(&r, tau) {
            let f = 1.0 - kaplan_meier(&r).unwrap().eval(tau);
            let mean = pv.iter().sum::<f64>() / pv.len() as f64;
            prop_assert!((mean - f).abs() < 1e-12);
        }
    }

    #[test]
    fn pseudo_mean_gap_needs_an_undefined_leave_one_out(v in cohort()) {
        let r = records(&v);
        let tau = 50.0;
        if let Ok(pv) = pseudo_observations(&r, tau) {
            let f = 1.0 - kaplan_meier(&r).unwrap().eval(tau);
            let mean = pv.iter().sum::<f64>() / pv.len() as f64;
            if (mean - f).abs() > 1e-9 {
                let undefined = (0..r.len()).any(|i| {
                    let mut rest = r.clone();
                    rest.remove(i);
                    km_death_probability(&rest, tau).is_err()
                });
                prop_assert!(undefined);
            }
        }
    }

    #[test]
    fn z_flag_matches_ratio_band(probs in prop::collection::vec(0.01f64..0.99, 1..50), frac in 0.0f64..=1.0) {
        let n = probs.len();
        let k = ((n as f64) * frac).round() as usize;
        let recs: Vec<_> = (0..n).map(|i| SubjectRecord::simple("c", if i < k { 1.0 } else { 20.0 }, true, &[]).unwrap()).collect();
        let cfg = BenchmarkConfig { multiplicity: Multiplicity::None, ..BenchmarkConfig::new(12.0) };
        let s = summarize_center("c", &recs, &probs, Outcome::Death, &cfg, 0.3).unwrap();
        let z = two_sided_critical(0.05).unwrap();
        let flagged = s.classification != Some(Classification::Target);
        let ratio_band = (s.observed as f64 / s.expected - 1.0).abs() > z * s.variance.sqrt() / s.expected;
        prop_assert_eq!(flagged, ratio_band);
    }
}

fn two_center_data(scale: f64) -> Dataset<f64> {
    let mut recs = Vec::new();
    for i in 0..60 {
        let c = if i % 3 == 0 { "a" } else { "b" };
        let t = (1.0 + ((i * 17) % 29) as f64) * scale;
        let x = ((i * 7) % 5) as f64 / 4.0 - 0.5;
        recs.push(SubjectRecord::simple(c, t, i % 4 != 0, &[x]).unwrap());
    }
    Dataset::new(recs, vec!["x".into()]).unwrap()
}

#[test]
fn z_scores_invariant_to_time_unit() {
    let cfg = |tau| BenchmarkConfig { small_center_threshold: 0, ..BenchmarkConfig::new(tau) };
    let a = benchmark_mortality(&two_center_data(1.0), &cfg(15.0)).unwrap();
    let b = benchmark_mortality(&two_center_data(30.4), &cfg(15.0 * 30.4)).unwrap();
    for (x, y) in a.summaries.iter().zip(&b.summaries) {
        assert_eq!(x.observed, y.observed);
        assert!((x.expected - y.expected).abs() < 1e-9);
        assert!((x.z.unwrap() - y.z.unwrap()).abs() < 1e-9);
    }
}

#[test]
fn equal_probabilities_give_raw_size_as_effective_n() {
    let recs: Vec<_> = (0..25).map(|i| SubjectRecord::simple("c", 1.0 + i as f64, i % 2 == 0, &[]).unwrap()).collect();
    let probs = vec![0.2; 25];
    let s = summarize_center("c", &recs, &probs, Outcome::Death, &BenchmarkConfig::new(100.0), 0.2).unwrap();
    assert!((s.eff_n.unwrap() - 25.0).abs() < 1e-9);
}

#[test]
fn expected_deaths_near_observed_without_censoring() {
    // Only approximately equal: the Breslow jumps compound as exp(-H), not as
    // a product-limit.
    let mut recs = Vec::new();
    for i in 0..80 {
        let c = ["a", "b", "c", "d"][i % 4];
        recs.push(SubjectRecord::simple(c, 0.5 + ((i * 13) % 41) as f64 * 0.25, true, &[]).unwrap());
    }
    let data = Dataset::new(recs, vec![]).unwrap();
    let rep = benchmark_mortality(&data, &BenchmarkConfig::new(6.0)).unwrap();
    let o: usize = rep.summaries.iter().map(|s| s.observed).sum();
    let e: f64 = rep.summaries.iter().map(|s| s.expected).sum();
    assert!((o as f64 - e).abs() < 0.01 * o as f64, "{o} vs {e}");
}
