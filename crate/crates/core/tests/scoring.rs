mod common;

use common::oracle_score;
use proptest::prelude::*;
use remedibench::runner::{score_sli_csv, sli_csv};
use remedibench::slo::SliSample;
use remedibench::{total_score, violation_score, SliKind, SliSeries, SloScore, SloSpec};

fn series(values: &[f64]) -> SliSeries {
    SliSeries::from_values("s", values)
}

fn score(values: &[f64], tau: f64) -> f64 {
    violation_score(&series(values), tau).unwrap().score
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64, 1e-6..1e6f64], 1..200)
}

fn scores(n: usize) -> Vec<SloScore> {
    (0..n)
        .map(|i| SloScore {
            name: format!("s{i}"),
            terms: vec![],
            score: 0.0,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_oracle(v in values(), tau in 1e-3..1e3f64) {
        let got = score(&v, tau);
        prop_assert!((got - oracle_score(&v, tau)).abs() <= 1e-12);
        prop_assert!((0.0..1.0).contains(&got));
    }

    #[test]
    fn scale_invariant(v in values(), tau in 1e-3..1e3f64, c in 1e-3..1e3f64) {
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        prop_assert!((score(&scaled, tau * c) - score(&v, tau)).abs() <= 1e-12);
    }

    #[test]
    fn monotone_in_values(v in values(), tau in 1e-3..1e3f64, i in any::<prop::sample::Index>(), bump in 0.0..100.0f64) {
        let mut worse = v.clone();
        let i = i.index(v.len());
        worse[i] += bump;
        prop_assert!(score(&worse, tau) >= score(&v, tau));
    }

    #[test]
    fn antitone_in_threshold(v in values(), tau in 1e-3..1e3f64, bump in 0.0..100.0f64) {
        prop_assert!(score(&v, tau + bump) <= score(&v, tau));
    }

    #[test]
    fn total_is_dot_product(parts in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..10)) {
        let mut s = scores(parts.len());
        for (slot, (score, _)) in s.iter_mut().zip(&parts) {
            slot.score = *score;
        }
        let w: Vec<f64> = parts.iter().map(|p| p.1).collect();
        let mut dot = 0.0;
        for (score, weight) in &parts {
            dot += score * weight;
        }
        prop_assert!((total_score(&s, &w).unwrap() - dot).abs() <= 1e-12);
    }

    #[test]
    fn csv_round_trip(v in values(), tau in 1e-3..1e3f64) {
        let samples: Vec<SliSample> = v
            .iter()
            .enumerate()
            .map(|(i, &value)| SliSample {
                t_ms: i as f64 * 1000.0,
                slo: "lat".into(),
                sli: SliKind::EventTimeLatency,
                value,
                ratio: value / tau,
                carried_forward: false,
                scored: true,
            })
            .collect();
        let spec = SloSpec {
            name: "lat".into(),
            sli: SliKind::EventTimeLatency,
            threshold: tau,
            weight: 1.0,
            window_ms: 1000.0,
        };
        let parsed = score_sli_csv(&sli_csv(&samples), &[spec]).unwrap();
        prop_assert_eq!(parsed.v_total.to_bits(), score(&v, tau).to_bits());
    }
}

#[test]
fn all_compliant_scores_zero() {
    assert_eq!(score(&[0.0, 1.0, 2.0, 2.5], 2.5), 0.0);
}

#[test]
fn single_violation_in_four() {
    // 1 - 2.5/5 = 0.5, averaged over 4 samples
    assert_eq!(score(&[1.0, 5.0, 2.0, 2.5], 2.5), 0.125);
}

#[test]
fn total_boundary_cases_are_exact() {
    let mut s = scores(3);
    let w = [0.5, 0.25, 0.25];
    assert_eq!(total_score(&s, &w).unwrap(), 0.0);
    s[1].score = 0.3;
    assert_eq!(total_score(&s, &w).unwrap(), 0.25 * 0.3);
    s[1].score = 0.0;
    s[0].score = 0.7;
    assert_eq!(total_score(&s, &w).unwrap(), 0.5 * 0.7);
}

#[test]
fn total_rejects_length_mismatch() {
    assert!(total_score(&scores(2), &[1.0]).is_err());
}

#[test]
fn rejects_bad_threshold_and_empty_series() {
    assert!(violation_score(&series(&[1.0]), 0.0).is_err());
    assert!(violation_score(&series(&[1.0]), f64::NAN).is_err());
    assert!(violation_score(&series(&[]), 1.0).is_err());
}
