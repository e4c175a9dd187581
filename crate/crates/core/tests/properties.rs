use std::collections::BTreeSet;

use num_bigint::BigInt;
use proptest::prelude::*;
use rand::Rng;

use bisidon::embedding::{
    multiplicative_to_additive_embedding, sample_modular_embedding, verify_freiman_homomorphism,
    IntegerSet,
};
use bisidon::energy::{
    additive_energy, energy, is_additive_sidon, is_bi_sidon, is_sidon, multiplicative_energy,
    nontrivial_quadruples, trivial_energy, Operation,
};
use bisidon::exactnum::{NumberSet, RationalNumber};
use bisidon::extractor::{
    build_sidon_pullback, delete_quadruple_elements, extract, select_prime, sparsify, BranchChoice,
    ExtractorConfig,
};
use bisidon::lab::{
    energy_by_enumeration, max_bi_sidon_exact, read_rows, write_rows, DatasetKind, ExperimentRow,
    ORACLE_LIMIT,
};
use bisidon::parabola::{is_plane_sidon, no_three_collinear, random_parabola};
use bisidon::stream::{rng_from_seed, substream};

fn nonzero_set(max_len: usize, range: i64) -> impl Strategy<Value = NumberSet> {
    prop::collection::btree_set(
        (-range..=range).prop_filter("nonzero", |v| *v != 0),
        0..=max_len,
    )
    .prop_map(|s| NumberSet::from_integers(s).unwrap())
}

fn rational_set(max_len: usize) -> impl Strategy<Value = NumberSet> {
    prop::collection::vec((-60i64..=60, 1i64..=9), 0..=max_len).prop_map(|v| {
        let s: BTreeSet<RationalNumber> = v
            .into_iter()
            .map(|(n, d)| RationalNumber::from_ratio(n, d).unwrap())
            .collect();
        NumberSet::new(s.into_iter().collect()).unwrap()
    })
}

fn positive_rational_set(max_len: usize) -> impl Strategy<Value = NumberSet> {
    prop::collection::vec((1i64..=400, 1i64..=30), 0..=max_len).prop_map(|v| {
        let s: BTreeSet<RationalNumber> = v
            .into_iter()
            .map(|(n, d)| RationalNumber::from_ratio(n, d).unwrap())
            .collect();
        NumberSet::new(s.into_iter().collect()).unwrap()
    })
}

fn shifted(a: &NumberSet, t: &RationalNumber) -> NumberSet {
    NumberSet::new(a.iter().map(|x| x + t).collect()).unwrap()
}

fn scaled(a: &NumberSet, t: &RationalNumber) -> NumberSet {
    NumberSet::new(a.iter().map(|x| x * t).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn energy_bounds_and_sidon(a in rational_set(40)) {
        let e = additive_energy(&a);
        let n = a.len() as u64;
        prop_assert!(e >= trivial_energy(a.len()));
        prop_assert!(e <= n * n * n);
        prop_assert_eq!(is_additive_sidon(&a), e == trivial_energy(a.len()));
        prop_assert_eq!(is_additive_sidon(&a), nontrivial_quadruples(&a, Operation::Sum).unwrap().is_empty());
    }

    #[test]
    fn grouped_matches_enumeration(a in nonzero_set(14, 30)) {
        for op in [Operation::Sum, Operation::Product] {
            prop_assert_eq!(energy(&a, op).unwrap(), energy_by_enumeration(&a, op).unwrap());
        }
    }

    #[test]
    fn rational_energies_match_enumeration(a in rational_set(12)) {
        prop_assert_eq!(additive_energy(&a), energy_by_enumeration(&a, Operation::Sum).unwrap());
        if !a.contains_zero() {
            prop_assert_eq!(
                multiplicative_energy(&a).unwrap(),
                energy_by_enumeration(&a, Operation::Product).unwrap()
            );
        }
    }

    #[test]
    fn affine_invariance(a in rational_set(30), t in (-50i64..=50, 1i64..=7), s in (1i64..=20, 1i64..=7)) {
        let t = RationalNumber::from_ratio(t.0, t.1).unwrap();
        let s = RationalNumber::from_ratio(s.0, s.1).unwrap();
        prop_assert_eq!(additive_energy(&shifted(&a, &t)), additive_energy(&a));
        prop_assert_eq!(additive_energy(&scaled(&a, &s)), additive_energy(&a));
        if !a.contains_zero() {
            prop_assert_eq!(
                multiplicative_energy(&scaled(&a, &s)).unwrap(),
                multiplicative_energy(&a).unwrap()
            );
            prop_assert_eq!(
                multiplicative_energy(&scaled(&a, &(-&s))).unwrap(),
                multiplicative_energy(&a).unwrap()
            );
        }
    }

    #[test]
    fn radix_embedding_is_two_sided(a in positive_rational_set(40)) {
        let f = multiplicative_to_additive_embedding(&a).unwrap();
        let v = a.as_slice();
        let img = f.images();
        for i in 0..v.len() {
            for j in i..v.len() {
                for k in 0..v.len() {
                    for l in k..v.len() {
                        let products = &v[i] * &v[j] == &v[k] * &v[l];
                        let sums = &img[i] + &img[j] == &img[k] + &img[l];
                        prop_assert_eq!(products, sums);
                    }
                }
            }
        }
    }

    #[test]
    fn modular_embedding_is_freiman(values in prop::collection::btree_set(1u64..1 << 40, 0..=60), seed: u64) {
        let a = IntegerSet::from_u64s(values).unwrap();
        let p = select_prime(a.len());
        let r = sample_modular_embedding(&a, p, 2, &mut rng_from_seed(seed)).unwrap();
        prop_assert!(verify_freiman_homomorphism(&r.embedding));
        prop_assert!(r.embedding.len() <= a.len());
    }

    #[test]
    fn pullback_is_additive_sidon(values in prop::collection::btree_set(1u64..5000, 0..=150), seed: u64) {
        let a = IntegerSet::from_u64s(values).unwrap();
        let p = select_prime(a.len());
        let cfg = ExtractorConfig { embedding_retries: 4, ..ExtractorConfig::default() };
        let b = build_sidon_pullback(&a, p, &cfg, &mut rng_from_seed(seed)).unwrap();
        let set = NumberSet::new(b.subset.iter().cloned().map(RationalNumber::from_integer).collect()).unwrap();
        prop_assert!(is_additive_sidon(&set));
        prop_assert!(b.subset.len() <= b.retained);
        prop_assert!(b.subset.iter().all(|x| a.values().contains(x)));
    }

    #[test]
    fn random_parabolas_are_sidon(seed: u64, pi in 0usize..5) {
        let p = [3u64, 5, 7, 11, 37][pi];
        let par = random_parabola(p, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(par.points().len() as u64, p);
        prop_assert!(is_plane_sidon(par.points()));
        prop_assert!(no_three_collinear(par.points()));
    }

    #[test]
    fn deletion_clears_relations(a in nonzero_set(40, 60)) {
        for op in [Operation::Sum, Operation::Product] {
            let d = delete_quadruple_elements(&a, op).unwrap();
            prop_assert!(is_sidon(&d.survivors, op).unwrap());
            prop_assert!(d.survivors.is_subset_of(&a));
            prop_assert_eq!(d.survivors.len() + d.removed.len(), a.len());
            prop_assert!(d.removed.len() <= d.e0 + d.e1 + d.e2);
        }
    }

    #[test]
    fn extraction_is_sound(a in rational_set(60), seed: u64) {
        let cfg = ExtractorConfig { trials: 2, ..ExtractorConfig::with_seed(seed) };
        let r = extract(&a, &cfg).unwrap();
        prop_assert!(r.verified);
        prop_assert!(is_bi_sidon(&r.subset).unwrap());
        prop_assert!(r.subset.is_subset_of(&a));
        prop_assert!(r.trace.is_consistent());
        let positive = a.iter().filter(|x| x.is_positive()).count();
        let negative = a.iter().filter(|x| x.is_negative()).count();
        if positive.max(negative) > 0 {
            prop_assert!(!r.subset.is_empty());
        }
    }

    #[test]
    fn oracle_dominates_extraction(a in nonzero_set(12, 40), seed: u64) {
        let oracle = max_bi_sidon_exact(&a, ORACLE_LIMIT).unwrap();
        prop_assert!(is_bi_sidon(&oracle).unwrap());
        prop_assert!(oracle.is_subset_of(&a));
        prop_assert!(oracle.len() >= a.len().min(2));
        let r = extract(&a, &ExtractorConfig { trials: 4, ..ExtractorConfig::with_seed(seed) }).unwrap();
        prop_assert!(r.subset.len() <= oracle.len());
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(
        (0usize..4, 1usize..100_000, any::<u64>(), any::<u64>(), prop::option::of(any::<bool>()), prop::option::of(3u64..10_000), 0usize..100, any::<u64>()),
        0..20,
    )) {
        let kinds = [DatasetKind::Interval, DatasetKind::Geometric, DatasetKind::Random, DatasetKind::Pds];
        let rows: Vec<ExperimentRow> = rows
            .into_iter()
            .map(|(k, n, trial, seed, branch, p, s, wall_ms)| ExperimentRow {
                kind: kinds[k],
                n,
                trial,
                seed,
                branch: branch.map(|b| if b {
                    bisidon::extractor::Branch::AdditiveFirst
                } else {
                    bisidon::extractor::Branch::MultiplicativeFirst
                }),
                p,
                size_a2: s + 3,
                size_b: s + 2,
                size_btilde: s + 1,
                size_s: s,
                wall_ms,
            })
            .collect();
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        prop_assert_eq!(read_rows(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn rational_text_round_trip(n in any::<i64>(), d in 1i64..=i64::MAX) {
        let r = RationalNumber::from_ratio(n, d).unwrap();
        prop_assert_eq!(r.to_string().parse::<RationalNumber>().unwrap(), r);
    }
}

#[test]
fn oracle_lower_bound_on_small_sets() {
    let mut rng = rng_from_seed(21);
    for _ in 0..40 {
        let size = rng.random_range(1..=ORACLE_LIMIT);
        let mut values = BTreeSet::new();
        while values.len() < size {
            values.insert(rng.random_range(1i64..=200));
        }
        let a = NumberSet::from_integers(values).unwrap();
        let best = max_bi_sidon_exact(&a, ORACLE_LIMIT).unwrap();
        let cube_root = (1..).find(|k: &usize| k * k * k >= a.len()).unwrap();
        assert!(best.len() >= cube_root, "{a:?}");
    }
}

#[test]
fn sidon_iff_trivial_energy() {
    let mut rng = rng_from_seed(22);
    let mut seen = [0usize; 2];
    for _ in 0..1000 {
        let size = rng.random_range(0..=12);
        let mut values = BTreeSet::new();
        while values.len() < size {
            let v = rng.random_range(-150i64..=150);
            if v != 0 {
                values.insert(v);
            }
        }
        let a = NumberSet::from_integers(values).unwrap();
        for op in [Operation::Sum, Operation::Product] {
            let sidon = is_sidon(&a, op).unwrap();
            seen[sidon as usize] += 1;
            assert_eq!(sidon, energy(&a, op).unwrap() == trivial_energy(a.len()));
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0);
}

#[test]
fn sparsify_rate() {
    let b: Vec<u32> = (0..300).collect();
    let q = RationalNumber::from_ratio(1, 3).unwrap();
    let runs = 10_000;
    let mut rng = rng_from_seed(23);
    let ratios: Vec<f64> = (0..runs)
        .map(|_| sparsify(&b, &q, &mut rng).len() as f64 / 300.0)
        .collect();
    let mean = ratios.iter().sum::<f64>() / runs as f64;
    // Each ratio has variance q(1 − q)/300.
    let sigma = ((2.0 / 9.0) / 300.0 / runs as f64).sqrt();
    assert!((mean - 1.0 / 3.0).abs() <= 3.0 * sigma, "mean {mean}");
}

#[test]
fn pullback_mean_size() {
    let a = IntegerSet::from_u64s(1..=1024).unwrap();
    let p = select_prime(a.len());
    let cfg = ExtractorConfig::default();
    let sizes: Vec<f64> = (0..200)
        .map(|i| {
            build_sidon_pullback(&a, p, &cfg, &mut substream(24, i))
                .unwrap()
                .subset
                .len() as f64
        })
        .collect();
    let n = sizes.len() as f64;
    let mean = sizes.iter().sum::<f64>() / n;
    let sd = (sizes.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let target = 1024.0 / 8.0 / p as f64;
    assert!(
        mean >= target - 3.0 * sd / n.sqrt(),
        "mean {mean}, target {target}"
    );
}

#[test]
fn trials_are_monotone() {
    let a = NumberSet::from_integers(1..=400).unwrap();
    let mut last = 0;
    for trials in [1, 2, 4, 8, 16] {
        let cfg = ExtractorConfig {
            trials,
            ..ExtractorConfig::with_seed(25)
        };
        let size = extract(&a, &cfg).unwrap().subset.len();
        assert!(size >= last);
        last = size;
    }
}

/// Two-sided Mann-Whitney rank test at level 0.01, normal approximation with ties.
fn same_distribution(x: &[usize], y: &[usize]) -> bool {
    let mut all: Vec<(usize, usize)> = x
        .iter()
        .map(|&v| (v, 0))
        .chain(y.iter().map(|&v| (v, 1)))
        .collect();
    all.sort_unstable();
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let j = (i..n).find(|&j| all[j].0 != all[i].0).unwrap_or(n);
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        for r in &mut ranks[i..j] {
            *r = (i + j + 1) as f64 / 2.0;
        }
        i = j;
    }
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let r1: f64 = all
        .iter()
        .zip(&ranks)
        .filter(|((_, g), _)| *g == 0)
        .map(|(_, r)| r)
        .sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n1 + n2 + 1.0) - tie_term / ((n1 + n2) * (n1 + n2 - 1.0)));
    var == 0.0 || ((u - mean) / var.sqrt()).abs() < 2.576
}

#[test]
fn branches_are_symmetric() {
    let powers = NumberSet::from_integers((1..=10).map(|i| 1i64 << i)).unwrap();
    let interval = NumberSet::from_integers(1..=10).unwrap();
    let mut mult = Vec::new();
    let mut add = Vec::new();
    for seed in 0..60 {
        let auto = ExtractorConfig {
            trials: 1,
            ..ExtractorConfig::with_seed(seed)
        };
        let r = extract(&powers, &auto).unwrap();
        assert_eq!(
            r.trace.branch,
            Some(bisidon::extractor::Branch::MultiplicativeFirst)
        );
        mult.push(r.subset.len());
        let forced = ExtractorConfig {
            branch: BranchChoice::AdditiveFirst,
            seed: seed + 1000,
            ..auto
        };
        add.push(extract(&interval, &forced).unwrap().subset.len());
    }
    assert!(same_distribution(&mult, &add), "{mult:?} vs {add:?}");
}

#[test]
fn large_values_use_exact_keys() {
    let big = BigInt::from(1u64 << 62);
    let a = NumberSet::new(
        [1u32, 2, 3, 5]
            .iter()
            .map(|&k| RationalNumber::from_integer(&big * k))
            .collect(),
    )
    .unwrap();
    // 1 + 3 = 2 + 2 and 1 + 5 = 3 + 3, four ordered quadruples each.
    assert_eq!(additive_energy(&a), trivial_energy(4) + 8);
    assert_eq!(
        energy_by_enumeration(&a, Operation::Sum).unwrap(),
        trivial_energy(4) + 8
    );
}
