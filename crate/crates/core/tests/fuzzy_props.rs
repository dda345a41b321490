use arfault::fuzzy::{decode, encode, ga_tune, Chromosome, FuzzyTemplate, GaConfig, LabeledInputs};
use proptest::prelude::*;

fn chromosome(t: &FuzzyTemplate) -> impl Strategy<Value = Chromosome> {
    let rules = t.rule_antecedents().len();
    (
        prop::collection::vec(0.01f64..1.0, t.weight_len()),
        prop::collection::vec(0usize..t.output_terms, rules),
    )
        .prop_map(|(weights, consequents)| Chromosome { weights, consequents })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decode_encode_identity(ch in chromosome(&FuzzyTemplate::per_phase()), span in 0.1f64..10.0) {
        let t = FuzzyTemplate::per_phase();
        let uni: Vec<(f64, f64)> = (0..6).map(|i| (-span + i as f64 * 0.01, span)).collect();
        let sys = decode(&t, &uni, &ch).unwrap();
        let again = decode(&t, &uni, &encode(&t, &sys).unwrap()).unwrap();
        for (a, b) in sys.inputs().iter().chain([sys.output()]).zip(again.inputs().iter().chain([again.output()])) {
            for (ta, tb) in a.terms.iter().zip(&b.terms) {
                for (x, y) in ta.set.points().iter().zip(tb.set.points()) {
                    prop_assert!((x - y).abs() <= 1e-9 * span.max(1.0));
                }
            }
        }
        prop_assert_eq!(sys.rules(), again.rules());
    }

    #[test]
    fn infer_stays_in_unit_interval(ch in chromosome(&FuzzyTemplate::per_phase()), x in prop::collection::vec(-5.0f64..5.0, 6)) {
        let t = FuzzyTemplate::per_phase();
        let uni = vec![(-2.0, 2.0); 6];
        let sys = decode(&t, &uni, &ch).unwrap();
        let inf = sys.infer(&x).unwrap();
        prop_assert!((0.0..=1.0).contains(&inf.score));
    }
}

#[test]
fn three_output_terms_round_trip_and_tune() {
    let t = FuzzyTemplate { output_terms: 3, ..FuzzyTemplate::joint(&["x", "y"]) };
    let mut d = LabeledInputs::default();
    for i in 0..40 {
        let x = i as f64 / 40.0;
        d.push(vec![x, 1.0 - x], x > 0.5);
    }
    let tuned = ga_tune(&d, &t, &GaConfig { generations: 20, ..GaConfig::default() }).unwrap();
    assert!(tuned.fitness >= 0.9);
    assert!(tuned.trace.windows(2).all(|w| w[1] >= w[0]));
    let ch = encode(&t, &tuned.system).unwrap();
    assert_eq!(ch.consequents, tuned.chromosome.consequents);
}
