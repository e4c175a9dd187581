//! The extraction pipeline: preprocess, choose a branch from the energies,
//! embed into `F_p²`, pull back a random parabola, sparsify, delete the
//! remaining relations of the other operation, verify.

mod config;

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::One;
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{Branch, BranchChoice, ExtractorConfig, ADAPTIVE_STEPS};

use crate::embedding::{
    best_of_k_embeddings, multiplicative_to_additive_embedding, verify_freiman_homomorphism,
    IntegerSet,
};
use crate::energy::{
    energy_report, is_additive_sidon, is_bi_sidon, nontrivial_relations, EnergyReport, Operation,
};
use crate::error::{Error, Result};
use crate::exactnum::{
    ceil_sqrt, common_denominator, next_prime_at_least, NumberSet, RationalNumber,
};
use crate::parabola::{random_parabola, Parabola};
use crate::stream::substream;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtractionTrace {
    /// `None` when the preprocessed input has at most two elements.
    pub branch: Option<Branch>,
    pub additive_energy: Option<u64>,
    pub multiplicative_energy: Option<u64>,
    pub p: Option<u64>,
    pub negated: bool,
    /// `|A|` after preprocessing.
    pub size_a: usize,
    pub size_a2: usize,
    pub size_b: usize,
    pub size_btilde: usize,
    pub size_s: usize,
    pub removed_e0: usize,
    pub removed_e1: usize,
    pub removed_e2: usize,
    pub removals: usize,
    pub q: Option<RationalNumber>,
    pub c: Option<RationalNumber>,
    /// The pipeline returned nothing and the smallest element was used instead.
    pub fallback: bool,
    pub seed: u64,
    pub trial: u64,
    pub wall_ms: u64,
}

impl ExtractionTrace {
    fn whole(prep: &PreparedInput, cfg: &ExtractorConfig, trial: u64) -> Self {
        let n = prep.positive.len();
        ExtractionTrace {
            branch: None,
            additive_energy: prep.energies.map(|e| e.additive_energy),
            multiplicative_energy: prep.energies.map(|e| e.multiplicative_energy),
            p: None,
            negated: prep.negated,
            size_a: n,
            size_a2: n,
            size_b: n,
            size_btilde: n,
            size_s: n,
            removed_e0: 0,
            removed_e1: 0,
            removed_e2: 0,
            removals: 0,
            q: None,
            c: None,
            fallback: false,
            seed: cfg.seed,
            trial,
            wall_ms: 0,
        }
    }

    /// `|S| <= |B̃| <= |B| <= |A''| <= |A|` and `|S| = |B̃| − removals`.
    pub fn is_consistent(&self) -> bool {
        self.size_s <= self.size_btilde
            && self.size_btilde <= self.size_b
            && self.size_b <= self.size_a2
            && self.size_a2 <= self.size_a
            && self.size_s + self.removals == self.size_btilde
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BiSidonResult {
    pub subset: NumberSet,
    pub trace: ExtractionTrace,
    pub verified: bool,
}

/// Drops 0 and keeps the larger of `A ∩ ℚ>0` and `(−A) ∩ ℚ>0`, the
/// unnegated part on ties. The flag says whether results must be negated back.
pub fn preprocess(a: &NumberSet) -> (NumberSet, bool) {
    let positive: Vec<RationalNumber> = a.iter().filter(|x| x.is_positive()).cloned().collect();
    let negative = a.iter().filter(|x| x.is_negative()).count();
    if negative > positive.len() {
        (
            a.negated()
                .iter()
                .filter(|x| x.is_positive())
                .cloned()
                .collect_set(),
            true,
        )
    } else {
        (positive.collect_set(), false)
    }
}

trait CollectSet {
    fn collect_set(self) -> NumberSet;
}

impl<I: IntoIterator<Item = RationalNumber>> CollectSet for I {
    fn collect_set(self) -> NumberSet {
        NumberSet::from_distinct(self.into_iter().collect())
    }
}

fn branch_from_energies(e: &EnergyReport) -> Branch {
    if e.multiplicative_energy <= e.additive_energy {
        Branch::AdditiveFirst
    } else {
        Branch::MultiplicativeFirst
    }
}

/// Additive-first when `E×(A) <= E+(A)`. `A` must be positive and nonempty.
pub fn choose_branch(a: &NumberSet) -> Result<Branch> {
    if a.is_empty() || a.iter().any(|x| !x.is_positive()) {
        return Err(Error::Precondition(
            "branch choice needs a nonempty positive set".into(),
        ));
    }
    Ok(branch_from_energies(&energy_report(a)?))
}

/// Smallest prime `>= ⌈8√N⌉`.
pub fn select_prime(n: usize) -> u64 {
    next_prime_at_least(ceil_sqrt(64 * n.max(1) as u64))
}

#[derive(Clone, Debug)]
pub struct Pullback {
    /// `|A''|`.
    pub retained: usize,
    pub parabola: Parabola,
    /// `B = f⁻¹(P)`, ascending.
    pub subset: Vec<BigInt>,
}

/// `B = {a ∈ A'' : f(a) ∈ P}` for the best of `embedding_retries` embeddings
/// `f` and a uniformly random parabola `P`. `B` is checked to be additive Sidon.
pub fn build_sidon_pullback<R: RngCore + ?Sized>(
    a: &IntegerSet,
    p: u64,
    cfg: &ExtractorConfig,
    rng: &mut R,
) -> Result<Pullback> {
    if cfg.d != 2 {
        return Err(Error::Precondition(format!(
            "pullback needs d = 2, got {}",
            cfg.d
        )));
    }
    let best = best_of_k_embeddings(a, p, cfg.d, cfg.embedding_retries, rng)?;
    let f = best.embedding;
    if !verify_freiman_homomorphism(&f) {
        return Err(Error::Internal(
            "sampled embedding is not a Freiman embedding".into(),
        ));
    }
    let parabola = random_parabola(p, rng)?;
    let subset: Vec<BigInt> = f
        .image_table()
        .filter(|(_, img)| parabola.contains_raw(img[0], img[1]))
        .map(|(x, _)| x.clone())
        .collect();
    let as_set = NumberSet::from_distinct(
        subset
            .iter()
            .cloned()
            .map(RationalNumber::from_integer)
            .collect(),
    );
    if !is_additive_sidon(&as_set) {
        return Err(Error::Internal(
            "parabola pullback is not additive Sidon".into(),
        ));
    }
    Ok(Pullback {
        retained: f.len(),
        parabola,
        subset,
    })
}

/// Keeps each element independently when a uniform 64-bit draw `u`
/// satisfies `u < q · 2^64`.
pub fn sparsify<T: Clone, R: RngCore + ?Sized>(b: &[T], q: &RationalNumber, rng: &mut R) -> Vec<T> {
    let scaled = &RationalNumber::from_integer(BigInt::one() << 64) * q;
    let threshold = scaled.as_ratio().ceil().to_integer();
    b.iter()
        .filter(|_| BigInt::from(rng.next_u64()) < threshold)
        .cloned()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deletion {
    pub survivors: NumberSet,
    /// Removed elements in removal order.
    pub removed: Vec<RationalNumber>,
    /// Initial nontrivial relations by kind.
    pub e0: usize,
    pub e1: usize,
    pub e2: usize,
}

/// Repeatedly removes the element in the most remaining nontrivial relations
/// of `op` (the largest such element on ties) until none remain.
pub fn delete_quadruple_elements(b: &NumberSet, op: Operation) -> Result<Deletion> {
    let relations = nontrivial_relations(b, op)?;
    let (mut e0, mut e1, mut e2) = (0, 0, 0);
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(relations.len());
    let mut incidence: Vec<Vec<usize>> = vec![Vec::new(); b.len()];
    let mut count = vec![0usize; b.len()];
    for (r, [(i, j), (k, l)]) in relations.iter().enumerate() {
        match (i == j, k == l) {
            (false, false) => e0 += 1,
            (true, true) => e2 += 1,
            _ => e1 += 1,
        }
        let mut m = vec![*i, *j, *k, *l];
        m.sort_unstable();
        m.dedup();
        for &x in &m {
            incidence[x].push(r);
            count[x] += 1;
        }
        members.push(m);
    }
    let mut alive = vec![true; relations.len()];
    let mut keep = vec![true; b.len()];
    let mut removed = Vec::new();
    while let Some((victim, _)) = count
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .max_by_key(|&(i, c)| (*c, i))
    {
        keep[victim] = false;
        removed.push(b.as_slice()[victim].clone());
        for &r in &incidence[victim] {
            if std::mem::replace(&mut alive[r], false) {
                for &x in &members[r] {
                    count[x] -= 1;
                }
            }
        }
    }
    let survivors = b
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(x, _)| x.clone())
        .collect_set();
    Ok(Deletion {
        survivors,
        removed,
        e0,
        e1,
        e2,
    })
}

/// Preprocessed input with its energies, shared across trials.
#[derive(Clone, Debug)]
pub struct PreparedInput {
    pub original: NumberSet,
    pub positive: NumberSet,
    pub negated: bool,
    pub energies: Option<EnergyReport>,
}

impl PreparedInput {
    pub fn new(a: &NumberSet) -> Result<Self> {
        let (positive, negated) = preprocess(a);
        let energies = if positive.is_empty() {
            None
        } else {
            Some(energy_report(&positive)?)
        };
        Ok(PreparedInput {
            original: a.clone(),
            positive,
            negated,
            energies,
        })
    }
}

/// Integer coordinates of the positive set in which the pullback is additive.
struct Coordinates {
    integers: IntegerSet,
    back: BTreeMap<BigInt, RationalNumber>,
}

fn coordinates(a: &NumberSet, branch: Branch) -> Result<Coordinates> {
    let pairs: Vec<(BigInt, RationalNumber)> = match branch {
        Branch::AdditiveFirst => {
            let l = common_denominator(a.iter());
            a.iter()
                .map(|x| (x.numer() * (&l / x.denom()), x.clone()))
                .collect()
        }
        Branch::MultiplicativeFirst => {
            let radix = multiplicative_to_additive_embedding(a)?;
            let min = radix.images().iter().min().cloned().unwrap_or_default();
            let shift = BigInt::one() - min;
            radix
                .images()
                .iter()
                .map(|f| f + &shift)
                .zip(radix.elements().iter().cloned())
                .collect()
        }
    };
    let integers = IntegerSet::new(pairs.iter().map(|(v, _)| v.clone()).collect())?;
    Ok(Coordinates {
        integers,
        back: pairs.into_iter().collect(),
    })
}

fn run_pipeline<R: RngCore + ?Sized>(
    prep: &PreparedInput,
    cfg: &ExtractorConfig,
    rng: &mut R,
    trial: u64,
) -> Result<BiSidonResult> {
    let start = Instant::now();
    let mut trace = ExtractionTrace::whole(prep, cfg, trial);
    let a = &prep.positive;
    let n = a.len();
    let mut subset = a.clone();
    if let (Some(energies), true) = (prep.energies, n > 2) {
        let branch = match cfg.branch {
            BranchChoice::Auto => branch_from_energies(&energies),
            BranchChoice::AdditiveFirst => Branch::AdditiveFirst,
            BranchChoice::MultiplicativeFirst => Branch::MultiplicativeFirst,
        };
        let coords = coordinates(a, branch)?;
        let p = cfg.p_override.unwrap_or_else(|| select_prime(n));
        let pullback = build_sidon_pullback(&coords.integers, p, cfg, rng)?;
        let b: Vec<RationalNumber> = pullback
            .subset
            .iter()
            .map(|v| coords.back[v].clone())
            .collect();
        let op = match branch {
            Branch::AdditiveFirst => Operation::Product,
            Branch::MultiplicativeFirst => Operation::Sum,
        };

        let mut best: Option<(Deletion, usize, RationalNumber, RationalNumber)> = None;
        for (c, q) in cfg.pilot_rates(n)? {
            let sparse = NumberSet::from_distinct(sparsify(&b, &q, rng));
            let deletion = delete_quadruple_elements(&sparse, op)?;
            if best
                .as_ref()
                .is_none_or(|(d, ..)| deletion.survivors.len() > d.survivors.len())
            {
                best = Some((deletion, sparse.len(), c, q));
            }
        }
        let (deletion, size_btilde, c, q) = best.expect("at least one pilot");
        trace.branch = Some(branch);
        trace.p = Some(p);
        trace.size_a2 = pullback.retained;
        trace.size_b = b.len();
        trace.size_btilde = size_btilde;
        trace.size_s = deletion.survivors.len();
        trace.removed_e0 = deletion.e0;
        trace.removed_e1 = deletion.e1;
        trace.removed_e2 = deletion.e2;
        trace.removals = deletion.removed.len();
        trace.q = Some(q);
        trace.c = Some(c);
        subset = deletion.survivors;
    }
    if subset.is_empty() && !a.is_empty() {
        subset = NumberSet::from_distinct(vec![a.as_slice()[0].clone()]);
        trace.fallback = true;
    }
    if prep.negated {
        subset = subset.negated();
    }
    if !trace.is_consistent() {
        return Err(Error::Internal(format!("inconsistent trace {trace:?}")));
    }
    if !is_bi_sidon(&subset)? || !subset.is_subset_of(&prep.original) {
        return Err(Error::Internal(format!(
            "extracted set {subset:?} failed verification"
        )));
    }
    if cfg.record_timing {
        trace.wall_ms = start.elapsed().as_millis() as u64;
    }
    Ok(BiSidonResult {
        subset,
        trace,
        verified: true,
    })
}

/// One run of the pipeline. If it ends empty on a nonempty positive part,
/// the smallest element (a singleton is bi-Sidon) is returned and
/// `trace.fallback` is set; the trace sizes still describe the pipeline.
pub fn extract_once<R: RngCore + ?Sized>(
    a: &NumberSet,
    cfg: &ExtractorConfig,
    rng: &mut R,
) -> Result<BiSidonResult> {
    cfg.validate()?;
    run_pipeline(&PreparedInput::new(a)?, cfg, rng, 0)
}

/// Runs trial `i` on `substream(seed, i)` for `i < trials` and returns the
/// largest subset, the lexicographically smallest among equals.
pub fn extract(a: &NumberSet, cfg: &ExtractorConfig) -> Result<BiSidonResult> {
    cfg.validate()?;
    extract_prepared(&PreparedInput::new(a)?, cfg)
}

pub fn extract_prepared(prep: &PreparedInput, cfg: &ExtractorConfig) -> Result<BiSidonResult> {
    let results = extract_trials(prep, cfg)?;
    Ok(results
        .into_iter()
        .reduce(|best, r| {
            let better = r.subset.len() > best.subset.len()
                || (r.subset.len() == best.subset.len() && r.subset < best.subset);
            if better {
                r
            } else {
                best
            }
        })
        .expect("trials >= 1"))
}

/// Every trial's result, in trial order.
pub fn extract_trials(prep: &PreparedInput, cfg: &ExtractorConfig) -> Result<Vec<BiSidonResult>> {
    cfg.validate()?;
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_pipeline(prep, cfg, &mut substream(cfg.seed, i), i))
        .collect()
}
