use proptest::prelude::*;
use softdmp::operators::{boltzmann_policy, mellow_max, EntropyParam};

fn row() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..8)
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..8).prop_flat_map(|n| (prop::collection::vec(-10.0f64..10.0, n), prop::collection::vec(-10.0f64..10.0, n)))
}

fn eta() -> impl Strategy<Value = EntropyParam> {
    prop_oneof![
        Just(EntropyParam::NegInf),
        Just(EntropyParam::PosInf),
        Just(EntropyParam::ZERO),
        (-50.0f64..50.0).prop_map(EntropyParam::Finite),
        prop::sample::select(vec![-1e4, -100.0, -0.01, 1e-6, 0.01, 100.0, 1e4]).prop_map(EntropyParam::Finite),
    ]
}

fn hard_max(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn hard_min(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn stays_within_row_range(q in row(), e in eta()) {
        let v = mellow_max(&q, e);
        prop_assert!(v >= hard_min(&q) && v <= hard_max(&q));
    }

    #[test]
    fn non_expansion((a, b) in pair(), e in eta()) {
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!((mellow_max(&a, e) - mellow_max(&b, e)).abs() <= gap + 1e-12);
    }

    #[test]
    fn monotone_in_values((a, b) in pair(), e in eta()) {
        let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        prop_assert!(mellow_max(&a, e) <= mellow_max(&hi, e) + 1e-12);
    }

    #[test]
    fn shift_equivariant(q in row(), e in eta(), c in -20.0f64..20.0) {
        let shifted: Vec<f64> = q.iter().map(|x| x + c).collect();
        prop_assert!((mellow_max(&shifted, e) - (mellow_max(&q, e) + c)).abs() <= 1e-9);
    }

    #[test]
    fn monotone_in_eta(q in row(), e1 in eta(), e2 in eta()) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(mellow_max(&q, lo) <= mellow_max(&q, hi) + 1e-12);
    }

    #[test]
    fn large_eta_approaches_hard_operators(q in row()) {
        prop_assert!((mellow_max(&q, EntropyParam::Finite(1e6)) - hard_max(&q)).abs() <= 1e-5);
        prop_assert!((mellow_max(&q, EntropyParam::Finite(-1e6)) - hard_min(&q)).abs() <= 1e-5);
    }

    #[test]
    fn zero_eta_is_the_mean(q in row()) {
        let mean = q.iter().sum::<f64>() / q.len() as f64;
        prop_assert!((mellow_max(&q, EntropyParam::ZERO) - mean).abs() <= 1e-12);
        prop_assert!((mellow_max(&q, EntropyParam::Finite(1e-9)) - mean).abs() <= 1e-7);
    }

    #[test]
    fn negating_eta_mirrors_the_row(q in row(), e in eta()) {
        let neg: Vec<f64> = q.iter().map(|x| -x).collect();
        prop_assert!((mellow_max(&q, -e) + mellow_max(&neg, e)).abs() <= 1e-9);
    }

    #[test]
    fn flipped_policy_is_the_negated_eta_policy(q in row(), e in eta()) {
        prop_assert_eq!(boltzmann_policy(&q, e, true), boltzmann_policy(&q, -e, false));
    }

    #[test]
    fn policy_is_a_distribution(q in row(), e in eta(), flipped: bool) {
        let pi = boltzmann_policy(&q, e, flipped);
        prop_assert_eq!(pi.len(), q.len());
        prop_assert!(pi.probs().iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!((pi.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn policy_prefers_higher_values_for_positive_eta(q in row(), e in 0.01f64..50.0) {
        let pi = boltzmann_policy(&q, EntropyParam::Finite(e), false);
        for i in 0..q.len() {
            for j in 0..q.len() {
                if q[i] > q[j] {
                    prop_assert!(pi.prob(i) >= pi.prob(j));
                }
            }
        }
    }

    #[test]
    fn eta_json_round_trip(e in eta()) {
        let text = serde_json::to_string(&e).unwrap();
        let back: EntropyParam = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, e);
    }
}

#[test]
fn infinite_eta_serializes_as_string() {
    assert_eq!(serde_json::to_string(&EntropyParam::NegInf).unwrap(), "\"-inf\"");
    assert_eq!(serde_json::to_string(&EntropyParam::PosInf).unwrap(), "\"inf\"");
    let parsed: Vec<EntropyParam> = serde_json::from_str(r#"["-inf", -1000, "0.5", 1e8]"#).unwrap();
    assert_eq!(
        parsed,
        vec![EntropyParam::NegInf, EntropyParam::Finite(-1000.0), EntropyParam::Finite(0.5), EntropyParam::PosInf]
    );
    assert!(serde_json::from_str::<EntropyParam>("\"nan\"").is_err());
}
