//! Property tests for the structural invariants.

use proptest::prelude::*;

use tmae::*;

fn arb_examples(max_v: usize, max_n: usize) -> impl Strategy<Value = (usize, Vec<Example>)> {
    (1..=max_v).prop_flat_map(move |v| {
        let example = (any::<bool>(), prop::collection::vec(any::<bool>(), v)).prop_map(
            move |(label, bits)| Example {
                label,
                input: Bitset::from_indices(
                    v,
                    &bits
                        .iter()
                        .enumerate()
                        .filter_map(|(i, &b)| b.then_some(i))
                        .collect::<Vec<_>>(),
                ),
            },
        );
        prop::collection::vec(example, 0..max_n).prop_map(move |ex| (v, ex))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn example_file_round_trip_is_identity((v, examples) in arb_examples(100, 40)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("examples.tmex");
        let header = ExampleHeader {
            feature_count: v as u32,
            example_count: examples.len() as u32,
            accumulation: 3,
            target_index: 0,
        };
        write_example_file(&path, &header, &examples).unwrap();
        let (h, back) = read_example_file(&path).unwrap();
        prop_assert_eq!(h, header);
        prop_assert_eq!(back, examples);
    }

    #[test]
    fn states_stay_in_range_and_masks_stay_consistent(
        seed in any::<u64>(),
        b in 1u32..=6,
        v in 1u32..=9,
        ops in prop::collection::vec((0u8..3, any::<u16>()), 1..120),
    ) {
        let n = BankConfig::default_inclusion_threshold(b);
        let mut cfg = BankConfig::new(3, v, b, n);
        cfg.specificity = 1.5;
        let rng = TokenRng::new(seed, 0);
        let mut bank = ClauseBank::new(cfg.clone(), &rng).unwrap();
        for (i, (op, pattern)) in ops.iter().enumerate() {
            let x = Bitset::from_indices(
                v as usize,
                &(0..v as usize).filter(|&f| pattern >> f & 1 == 1).collect::<Vec<_>>(),
            );
            let j = i % 3;
            let fr = FeedbackRng { rng, epoch: 0, example: i as u32 };
            match op {
                0 => bank.type_ia_feedback(j, &x, &fr),
                1 => bank.type_ib_feedback(j, &fr),
                _ => bank.type_ii_feedback(j, &x),
            }
            for clause in 0..3 {
                let mut included = 0;
                for k in 0..2 * v as usize {
                    let s = bank.state(clause, k);
                    prop_assert!(s <= cfg.max_state());
                    included += (s > n) as u32;
                }
                prop_assert_eq!(bank.include_count(clause), included);
            }
        }
    }

    #[test]
    fn update_probability_is_clamped_and_monotone(
        t in 1i32..100_000,
        factor in 0.25f64..8.0,
        a in -1.0f64..=1.0,
        b in -1.0f64..=1.0,
    ) {
        let v1 = (a * t as f64) as i32;
        let v2 = (b * t as f64) as i32;
        let (lo, hi) = (v1.min(v2), v1.max(v2));
        for label in [true, false] {
            let p_lo = update_probability(lo, t, label, factor);
            let p_hi = update_probability(hi, t, label, factor);
            prop_assert!((0.0..=1.0).contains(&p_lo) && (0.0..=1.0).contains(&p_hi));
            if label {
                prop_assert!(p_lo >= p_hi);
            } else {
                prop_assert!(p_lo <= p_hi);
            }
        }
    }

    #[test]
    fn class_sum_matches_wide_integer_oracle(
        weights in prop::collection::vec(-50_000i32..50_000, 1..40),
        fire_bits in any::<u64>(),
        t in 1i32..30_000,
    ) {
        let outputs = Bitset::from_indices(
            weights.len(),
            &(0..weights.len()).filter(|&j| fire_bits >> (j % 64) & 1 == 1).collect::<Vec<_>>(),
        );
        let expected: i128 = weights
            .iter()
            .enumerate()
            .map(|(j, &w)| if outputs.get(j) { w as i128 } else { 0 })
            .sum::<i128>()
            .clamp(-(t as i128), t as i128);
        prop_assert_eq!(class_sum(&outputs, &weights, t) as i128, expected);
    }

    #[test]
    fn accumulated_inputs_cover_source_documents(
        doc_patterns in prop::collection::vec(1u16..=u16::MAX, 2..12),
        accumulation in 1usize..5,
        seed in any::<u64>(),
    ) {
        let v = 16usize;
        let docs: Vec<Bitset> = doc_patterns
            .iter()
            .map(|p| Bitset::from_indices(v, &(0..v).filter(|&f| p >> f & 1 == 1).collect::<Vec<_>>()))
            .collect();
        // pick a target present in some document but not all
        let target = (0..v).find(|&f| {
            let present = docs.iter().filter(|d| d.get(f)).count();
            present > 0 && present < docs.len()
        });
        prop_assume!(target.is_some());
        let target = target.unwrap();
        let rng = TokenRng::new(seed, 0);
        let examples = prepare_examples(&docs, target, "t", 16, accumulation, &rng).unwrap();
        for ex in &examples {
            // the target bit is never set, label-1 by masking, label-0
            // by pool construction
            prop_assert!(!ex.input.get(target));
            // OR-monotonicity: some document must explain every set
            // bit, and every label-1 input must come from target docs
            let pool: Vec<&Bitset> = docs
                .iter()
                .filter(|d| d.get(target) == ex.label)
                .collect();
            for f in 0..v {
                if ex.input.get(f) {
                    prop_assert!(pool.iter().any(|d| d.get(f)), "bit {f} unexplained");
                }
            }
        }
    }

    #[test]
    fn embedding_reflection_negates_vectors(
        seed in any::<u64>(),
        c in 1u32..4,
        v in 1u32..6,
    ) {
        let cfg = BankConfig::new(c, v, 8, 127);
        let rng = TokenRng::new(seed, 0);
        let mut bank = ClauseBank::new(cfg.clone(), &rng).unwrap();
        let scatter = TokenRng::new(seed ^ 0x1234, 1);
        for j in 0..c as usize {
            for k in 0..2 * v as usize {
                bank.set_state(j, k, scatter.init_draw(j as u32, k as u32) % 256);
            }
        }
        let e = extract_embedding(&bank, "t");
        let mut reflected = bank.clone();
        for j in 0..c as usize {
            for k in 0..2 * v as usize {
                reflected.set_state(j, k, cfg.max_state() - bank.state(j, k));
            }
        }
        let r = extract_embedding(&reflected, "t");
        let negated: Vec<i64> = e.values.iter().map(|x| -x).collect();
        prop_assert_eq!(r.values, negated);
    }
}
