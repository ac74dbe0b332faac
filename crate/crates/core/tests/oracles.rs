use std::collections::BTreeMap;

use num_rational::Ratio;
use survfunnel::cox::{Baseline, PartialLikelihood};
use survfunnel::funnel::{event_probability, followup_probability};
use survfunnel::survdata::{poisson_binomial_pmf, Dataset, StepFunction, SubjectRecord};
use survfunnel::{fit_cox, CoxFit, ModelSpec};

/// Brute-force distribution of a sum of independent Bernoullis.
fn enumerate_pmf(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut pmf = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let mut prob = 1.0;
        for (i, &pi) in p.iter().enumerate() {
            prob *= if mask & (1 << i) != 0 { pi } else { 1.0 - pi };
        }
        pmf[mask.count_ones() as usize] += prob;
    }
    pmf
}

#[test]
fn poisson_binomial_matches_enumeration() {
    let mut worst: f64 = 0.0;
    for n in 1..=12 {
        let p: Vec<f64> = (0..n).map(|i| ((i * 37 + n * 11) % 97) as f64 / 97.0).collect();
        let dp = poisson_binomial_pmf(&p).unwrap();
        for (a, b) in dp.iter().zip(enumerate_pmf(&p)) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= 1e-12, "max error {worst}");
}

#[test]
fn poisson_binomial_exact_in_rationals() {
    let p = [Ratio::new(1i64, 3), Ratio::new(1, 2), Ratio::new(3, 4)];
    let pmf = poisson_binomial_pmf(&p).unwrap();
    // (2/3)(1/2)(1/4), then by hand for 1, 2, 3 successes
    assert_eq!(pmf[0], Ratio::new(1, 12));
    assert_eq!(pmf[1], Ratio::new(2 * 1 * 1 + 1 * 1 * 1 + 2 * 1 * 3, 24));
    assert_eq!(pmf[2], Ratio::new(1 * 1 * 1 + 1 * 3 + 2 * 1 * 3, 24));
    assert_eq!(pmf[3], Ratio::new(3, 24));
    assert_eq!(pmf.iter().copied().fold(Ratio::new(0, 1), |a, b| a + b), Ratio::new(1, 1));
}

/// `value(t) = f(t)` sampled at `n` equally spaced points on `(0, end]`.
fn grid(n: usize, end: f64, f: impl Fn(f64) -> f64) -> StepFunction<f64> {
    let knots: Vec<f64> = (1..=n).map(|k| end * k as f64 / n as f64).collect();
    let values = knots.iter().map(|&t| f(t)).collect();
    StepFunction::new(f(0.0), knots, values).unwrap()
}

#[test]
fn constant_hazards_match_closed_forms() {
    let tau = 12.0;
    let n = 10_000;
    for &(h, c) in &[(0.02, 0.05), (0.1, 0.01), (0.05, 0.05), (0.3, 0.2)] {
        let cum = grid(n, tau, |t| h * t);
        let g = grid(n, tau, |t| (-c * t).exp());
        let pooled = CoxFit::from_parts(vec![], vec![], Baseline::Pooled(cum.clone()));
        let strat = CoxFit::from_parts(vec![], vec![], Baseline::Stratified(BTreeMap::from([("a".to_string(), cum)])));

        let p = event_probability(&pooled, &[], &g, tau).unwrap();
        let q = followup_probability(&strat, &g, &[], "a", tau).unwrap();
        let total = h + c;
        let mass = 1.0 - (-total * tau).exp();
        assert!((p - h / total * mass).abs() < 1e-3, "h={h} c={c} p={p}");
        assert!((q - c / total * mass).abs() < 1e-3, "h={h} c={c} q={q}");
        let survivor = (-total * tau).exp();
        assert!((p + q + survivor - 1.0).abs() < 2e-3, "sum {}", p + q + survivor);
    }
}

#[test]
fn linear_predictor_scales_hazard() {
    let tau = 5.0;
    let (h, c, beta, x) = (0.04, 0.02, 0.7, 1.3);
    let cum = grid(10_000, tau, |t| h * t);
    let g = grid(10_000, tau, |t| (-c * t).exp());
    let fit = CoxFit::from_parts(vec!["x".into()], vec![beta], Baseline::Pooled(cum));
    let hx = h * (beta * x as f64).exp();
    let want = hx / (hx + c) * (1.0 - (-(hx + c) * tau).exp());
    assert!((event_probability(&fit, &[x], &g, tau).unwrap() - want).abs() < 1e-3);
}

fn dataset(rows: &[(&str, f64, bool, &[f64])]) -> Dataset<f64> {
    let recs = rows.iter().map(|&(c, t, d, x)| SubjectRecord::simple(c, t, d, x).unwrap()).collect();
    let p = rows[0].3.len();
    Dataset::new(recs, (0..p).map(|i| format!("x{i}")).collect()).unwrap()
}

/// Breslow log partial likelihood written directly from its definition.
fn naive_loglik(data: &Dataset<f64>, beta: &[f64]) -> f64 {
    let lp = |r: &SubjectRecord<f64>| r.covariates.iter().zip(beta).map(|(x, b)| x.unwrap() * b).sum::<f64>();
    let recs = data.records();
    let mut ll = 0.0;
    for r in recs.iter().filter(|r| r.event) {
        let denom: f64 = recs.iter().filter(|s| s.time >= r.time && s.entry_time < r.time).map(|s| lp(s).exp()).sum();
        ll += lp(r) - denom.ln();
    }
    ll
}

/// Maximizer of a concave function on a box by repeated grid refinement.
fn grid_argmax(f: impl Fn(&[f64]) -> f64, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut center = vec![(lo + hi) / 2.0; dim];
    let mut half = (hi - lo) / 2.0;
    let steps = 20i32;
    while half > 1e-7 {
        let mut best = (f64::NEG_INFINITY, center.clone());
        let mut idx = vec![-steps; dim];
        loop {
            let pt: Vec<f64> = center.iter().zip(&idx).map(|(c, &k)| c + half * k as f64 / steps as f64).collect();
            let v = f(&pt);
            if v > best.0 {
                best = (v, pt);
            }
            let mut d = 0;
            while d < dim {
                idx[d] += 1;
                if idx[d] <= steps {
                    break;
                }
                idx[d] = -steps;
                d += 1;
            }
            if d == dim {
                break;
            }
        }
        center = best.1;
        half *= 4.0 / steps as f64;
    }
    center
}

fn ten_subjects() -> Dataset<f64> {
    dataset(&[
        ("a", 2.0, true, &[0.5, 1.0]),
        ("a", 3.0, true, &[-0.2, 0.0]),
        ("a", 3.0, false, &[1.1, 1.0]),
        ("a", 4.5, true, &[0.0, 0.0]),
        ("b", 5.0, true, &[-1.0, 1.0]),
        ("b", 6.0, false, &[0.3, 0.0]),
        ("b", 7.0, true, &[-0.6, 1.0]),
        ("b", 8.0, true, &[0.8, 0.0]),
        ("b", 9.0, false, &[-0.4, 1.0]),
        ("b", 3.0, true, &[0.2, 0.0]),
    ])
}

#[test]
fn cox_matches_grid_search() {
    let data = ten_subjects();
    let fit = fit_cox(&data, &ModelSpec::pooled()).unwrap();
    let oracle = grid_argmax(|b| naive_loglik(&data, b), 2, -3.0, 3.0);
    for (a, b) in fit.beta.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-3, "{:?} vs {:?}", fit.beta, oracle);
    }
    assert!((fit.log_likelihood - naive_loglik(&data, &fit.beta)).abs() < 1e-8);
}

#[test]
fn cox_single_covariate_golden_section() {
    let data = dataset(&[
        ("a", 1.0, true, &[0.3]),
        ("a", 2.0, true, &[1.0]),
        ("a", 2.5, false, &[-0.5]),
        ("a", 4.0, true, &[-1.0]),
    ]);
    let f = |b: f64| naive_loglik(&data, &[b]);
    let (mut lo, mut hi) = (-5.0f64, 5.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-10 {
        let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let fit = fit_cox(&data, &ModelSpec::pooled()).unwrap();
    assert!((fit.beta[0] - (lo + hi) / 2.0).abs() < 1e-6);
}

#[test]
fn cox_binary_covariate_score_root() {
    let data = dataset(&[
        ("a", 1.0, true, &[1.0]),
        ("a", 2.0, true, &[0.0]),
        ("a", 3.0, true, &[1.0]),
        ("a", 4.0, false, &[0.0]),
        ("a", 5.0, true, &[0.0]),
        ("a", 6.0, true, &[1.0]),
    ]);
    // score for a binary covariate: sum over deaths of x_i minus the risk-set share of x=1
    let score = |b: f64| {
        let recs = data.records();
        recs.iter()
            .filter(|r| r.event)
            .map(|r| {
                let risk: Vec<_> = recs.iter().filter(|s| s.time >= r.time).collect();
                let ones = risk.iter().filter(|s| s.covariates[0] == Some(1.0)).count() as f64;
                let zeros = risk.len() as f64 - ones;
                r.covariates[0].unwrap() - ones * b.exp() / (ones * b.exp() + zeros)
            })
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fit = fit_cox(&data, &ModelSpec::pooled()).unwrap();
    assert!((fit.beta[0] - lo).abs() < 1e-7);
}

#[test]
fn score_matches_finite_differences() {
    let data = ten_subjects();
    let lik = PartialLikelihood::new(&data, &ModelSpec::pooled()).unwrap();
    for beta in [[0.0, 0.0], [0.4, -0.7], [-1.2, 0.9]] {
        let eval = lik.evaluate(&beta).unwrap();
        for j in 0..2 {
            let h = 1e-6;
            let mut up = beta;
            let mut dn = beta;
            up[j] += h;
            dn[j] -= h;
            let fd = (lik.evaluate(&up).unwrap().log_likelihood - lik.evaluate(&dn).unwrap().log_likelihood) / (2.0 * h);
            let rel = (eval.score[j] - fd).abs() / fd.abs().max(1e-8);
            assert!(rel < 1e-4, "beta {beta:?} j {j}: {} vs {fd}", eval.score[j]);
            // information is the negative Hessian
            for k in 0..2 {
                let fdh = -(lik.evaluate(&up).unwrap().score[k] - lik.evaluate(&dn).unwrap().score[k]) / (2.0 * h);
                assert!((eval.information[j][k] - fdh).abs() < 1e-4 * fdh.abs().max(1.0));
            }
        }
    }
}

#[test]
fn shifting_covariates_leaves_beta_unchanged() {
    let data = ten_subjects();
    let shifted = data.with_records(
        data.records()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.covariates = r.covariates.iter().map(|x| x.map(|v| v + 100.0)).collect();
                r
            })
            .collect(),
    )
    .unwrap();
    let a = fit_cox(&data, &ModelSpec::pooled()).unwrap();
    let b = fit_cox(&shifted, &ModelSpec::pooled()).unwrap();
    for (x, y) in a.beta.iter().zip(&b.beta) {
        assert!((x - y).abs() < 1e-7);
    }
    let x0 = [0.1, 1.0];
    let x1 = [100.1, 101.0];
    assert!((a.survival(&x0, None, 6.0).unwrap() - b.survival(&x1, None, 6.0).unwrap()).abs() < 1e-8);
}

#[test]
fn stratified_fit_matches_within_stratum_likelihood() {
    let data = ten_subjects();
    let fit = fit_cox(&data, &ModelSpec::stratified()).unwrap();
    let f = |b: &[f64]| {
        ["a", "b"]
            .iter()
            .map(|c| naive_loglik(&data.filter(|r| r.center_id == *c).unwrap(), b))
            .sum::<f64>()
    };
    let oracle = grid_argmax(f, 2, -3.0, 3.0);
    for (a, b) in fit.beta.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-3, "{:?} vs {:?}", fit.beta, oracle);
    }
}
