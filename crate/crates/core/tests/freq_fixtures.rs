mod common;

use gramfreq::fixtures;
use gramfreq::freq::{freq_dp, freq_via_pointing, frequency_profile, full_frequency_profile};
use gramfreq::scalar::ratio_to_f64;
use gramfreq::spec::Specification;
use gramfreq::Weights;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Percentages of each named atom in the profile at size `n`.
fn percentages(spec: &Specification, w: &Weights, n: usize) -> Vec<(String, f64)> {
    let p = full_frequency_profile(spec, w, n).unwrap();
    p.entries
        .iter()
        .map(|(a, f)| (spec.atom_name(*a).to_string(), 100.0 * ratio_to_f64(f)))
        .collect()
}

fn check_table(got: &[(String, f64)], want: &[(&str, f64)], tol: f64) {
    for (name, value) in want {
        let (_, g) = got.iter().find(|(n, _)| n == name).unwrap();
        assert!((g - value).abs() <= tol, "{name}: {g:.4} vs {value}");
    }
}

#[test]
fn frequencies_match_enumerated_means() {
    for (name, text) in fixtures::ALL {
        let spec = fixtures::load(text);
        let w = Weights::declared(&spec);
        for n in 1..=7 {
            let words = common::enumerate(&spec, spec.axiom(), n);
            if words.is_empty() {
                continue;
            }
            let total: BigRational = words.iter().map(|s| common::word_weight(&w, s)).sum();
            for a in spec.atom_ids() {
                let occ: BigRational = words
                    .iter()
                    .map(|s| {
                        let k = s.iter().filter(|x| **x == a).count() as i64;
                        common::word_weight(&w, s) * BigRational::from_integer(k.into())
                    })
                    .sum();
                let want = occ / &total;
                assert_eq!(freq_dp(&spec, &w, a, n).unwrap(), want, "{name} {} n={n}", spec.atom_name(a));
                assert_eq!(freq_via_pointing(&spec, &w, a, n).unwrap(), want);
            }
        }
    }
}

#[test]
fn motzkin_unary_share_follows_weight() {
    // Share c of unary nodes tends to f with weight 2f/(1-f).
    let spec = fixtures::load(fixtures::MOTZKIN);
    let c = spec.atom_by_name("c").unwrap();
    for (weight, limit) in [(2, 0.5), (10, 5.0 / 6.0)] {
        let w = Weights::uniform().with(c, ratio(weight, 1)).unwrap();
        let dev = |n: usize| {
            let f = freq_via_pointing(&spec, &w, c, n).unwrap() / BigRational::from_integer(n.into());
            (ratio_to_f64(&f) - limit).abs()
        };
        assert!(dev(500) < 0.02, "weight {weight}: {}", dev(500));
        assert!(dev(500) < dev(100));
    }
}

#[test]
fn uniform_rna_profile_at_300() {
    let spec = fixtures::load(fixtures::RNA);
    let got = percentages(&spec, &Weights::uniform(), 300);
    let want = [
        ("Bo", 7.2), ("b", 5.6), ("Io", 2.8), ("i", 7.3), ("Mo", 3.7),
        ("m", 7.6), ("To", 5.2), ("t", 14.5), ("Ho", 18.6), ("h", 27.5),
    ];
    check_table(&got, &want, 0.05 + 1e-9);
}

#[test]
fn loop_model_profile_at_300() {
    let spec = fixtures::load(fixtures::RNA_LOOPS);
    let got = percentages(&spec, &Weights::declared(&spec), 300);
    check_table(&got, &[("Mo", 1.1), ("m", 9.0), ("Ho", 4.8), ("h", 48.9)], 0.1);
}

#[test]
fn helix_model_profile_at_300() {
    let spec = fixtures::load(fixtures::RNA_HELICES);
    let got = percentages(&spec, &Weights::declared(&spec), 300);
    check_table(&got, &[("Ho", 4.8), ("h", 48.9)], 0.05 + 1e-9);
}

#[test]
fn quadtree_profile_at_201() {
    let spec = fixtures::load(fixtures::QUADTREE);
    let got = percentages(&spec, &Weights::declared(&spec), 201);
    let want = [("a0", 60.19949), ("a1", 9.94975), ("a2", 9.95000), ("a3", 9.95024), ("a4", 9.95049)];
    check_table(&got, &want, 5e-5);
}

#[test]
fn routes_agree_on_declared_weights() {
    for (name, text) in fixtures::ALL {
        let spec = fixtures::load(text);
        let w = Weights::declared(&spec);
        for &a in spec.distinguished() {
            for n in [1, 9, 23] {
                let dp = freq_dp(&spec, &w, a, n);
                let pt = freq_via_pointing(&spec, &w, a, n);
                match (dp, pt) {
                    (Ok(x), Ok(y)) => assert_eq!(x, y, "{name} n={n}"),
                    (Err(x), Err(y)) => assert_eq!(x.code(), y.code()),
                    (x, y) => panic!("{name} n={n}: {x:?} vs {y:?}"),
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn routes_agree_on_random_weights(
        fixture in 0usize..fixtures::ALL.len(),
        raw in proptest::collection::vec((1i64..30, 1i64..30), 12),
        n in 1usize..18,
    ) {
        let spec = fixtures::load(fixtures::ALL[fixture].1);
        let mut w = Weights::uniform();
        for (a, (p, q)) in spec.atom_ids().zip(raw) {
            w.set(a, ratio(p, q)).unwrap();
        }
        let Ok(profile) = full_frequency_profile(&spec, &w, n) else {
            return Ok(());
        };
        let mut total = BigRational::zero();
        for (a, f) in &profile.entries {
            let dp = freq_dp(&spec, &w, *a, n).unwrap();
            prop_assert_eq!(&dp / BigRational::from_integer(n.into()), f.clone());
            total += f;
        }
        prop_assert!(total.is_one());
    }

    #[test]
    fn common_scaling_shifts_nothing(
        fixture in prop_oneof![Just(fixtures::FIBONACCI), Just(fixtures::MOTIF), Just(fixtures::MOTZKIN)],
        p in 1i64..40, q in 1i64..40, n in 1usize..30,
    ) {
        // Every structure of a given size has the same number of atoms, so
        // multiplying every weight by one factor leaves the profile intact.
        let spec = fixtures::load(fixture);
        let base = Weights::declared(&spec);
        let mut scaled = Weights::uniform();
        for a in spec.atom_ids() {
            scaled.set(a, base.get(a) * ratio(p, q)).unwrap();
        }
        let x = frequency_profile(&spec, &base, n);
        let y = frequency_profile(&spec, &scaled, n);
        prop_assert_eq!(x.ok(), y.ok());
    }
}

#[test]
fn raising_a_weight_raises_its_frequency() {
    for (text, name) in [(fixtures::MOTZKIN, "c"), (fixtures::FIBONACCI, "a")] {
        let spec = fixtures::load(text);
        let atom = spec.atom_by_name(name).unwrap();
        let mut previous: Option<BigRational> = None;
        for (p, q) in [(1, 8), (1, 2), (1, 1), (3, 2), (4, 1), (20, 1)] {
            let w = Weights::uniform().with(atom, ratio(p, q)).unwrap();
            let f = freq_via_pointing(&spec, &w, atom, 20).unwrap();
            if let Some(prev) = &previous {
                assert!(f > *prev, "{name} at {p}/{q}");
            }
            previous = Some(f);
        }
    }
}
