//! Additive and multiplicative energies, Sidon predicates and the nontrivial
//! quadruples of a set.
//!
//! Energies count ordered quadruples `(a, b, a', b')` with `a∘b = a'∘b'`,
//! computed as `Σ_s r(s)²` where `r(s)` counts ordered pairs with `a∘b = s`.
//! Pair keys are mapped to machine integers whenever the input allows it
//! (common-denominator scaling for sums, reduced `i128` fractions for
//! products); big rationals are the fallback.
//!
//! Counting uses a dense table when the integer keys span a small window and
//! otherwise a hash-partitioned sort: the pair space is scanned once per
//! partition, keeping only the keys that hash into it, so memory stays
//! bounded at `O(pairs / partitions)`. Partitions are independent and run on
//! the rayon pool; the total does not depend on scheduling.

use std::collections::hash_map::{DefaultHasher, Entry};
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{common_denominator, NumberSet, RationalNumber};
use crate::stream::splitmix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Sum,
    Product,
}

impl Operation {
    pub fn apply(self, a: &RationalNumber, b: &RationalNumber) -> RationalNumber {
        match self {
            Operation::Sum => a + b,
            Operation::Product => a * b,
        }
    }

    pub fn other(self) -> Operation {
        match self {
            Operation::Sum => Operation::Product,
            Operation::Product => Operation::Sum,
        }
    }
}

/// Shape of a nontrivial relation `b1∘b2 = b3∘b4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadrupleKind {
    /// All four elements distinct.
    E0,
    /// Exactly one side is a doubled element.
    E1,
    /// Both sides doubled: only `a·a = (−a)·(−a)`, so only for products of
    /// sets containing an element and its negative.
    E2,
}

/// Canonical representative of a nontrivial relation: `b1 <= b2`, `b3 <= b4`
/// and `(b1, b2)` lexicographically before `(b3, b4)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Quadruple {
    pub elements: [RationalNumber; 4],
    pub operation: Operation,
    pub kind: QuadrupleKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub additive_energy: u64,
    pub multiplicative_energy: u64,
    pub set_size: usize,
}

// ---------------------------------------------------------------------------
// Pair keys

pub(crate) trait PairKeys: Sync {
    type Key: Ord + Hash + Clone + Send + Sync;

    fn len(&self) -> usize;
    fn key(&self, i: usize, j: usize) -> Self::Key;
    fn mix(key: &Self::Key) -> u64;

    /// `(lowest key, width)` when keys are integers in a known window.
    fn dense_window(&self) -> Option<(i128, u128)> {
        None
    }

    fn dense_offset(_key: &Self::Key, _lo: i128) -> usize {
        unreachable!("dense_offset without dense_window")
    }
}

/// Integer values with `|v| < 2^62`: sums and products fit in `i128`.
pub(crate) struct IntKeys {
    values: Vec<i128>,
    op: Operation,
}

impl PairKeys for IntKeys {
    type Key = i128;

    fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn key(&self, i: usize, j: usize) -> i128 {
        match self.op {
            Operation::Sum => self.values[i] + self.values[j],
            Operation::Product => self.values[i] * self.values[j],
        }
    }

    #[inline]
    fn mix(key: &i128) -> u64 {
        splitmix64((*key as u64) ^ ((*key >> 64) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn dense_window(&self) -> Option<(i128, u128)> {
        let lo = *self.values.first()?;
        let hi = *self.values.last()?;
        let (min, max) = match self.op {
            Operation::Sum => (2 * lo, 2 * hi),
            Operation::Product => {
                let c = [lo * lo, lo * hi, hi * hi];
                (*c.iter().min()?, *c.iter().max()?)
            }
        };
        Some((min, (max - min) as u128 + 1))
    }

    #[inline]
    fn dense_offset(key: &i128, lo: i128) -> usize {
        (key - lo) as usize
    }
}

/// Products of rationals with numerator and denominator below `2^62`, keyed
/// by the reduced fraction.
pub(crate) struct FracProductKeys {
    values: Vec<(i128, i128)>,
}

impl PairKeys for FracProductKeys {
    type Key = (i128, i128);

    fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn key(&self, i: usize, j: usize) -> (i128, i128) {
        let (n1, d1) = self.values[i];
        let (n2, d2) = self.values[j];
        let g1 = n1.gcd(&d2);
        let g2 = n2.gcd(&d1);
        ((n1 / g1) * (n2 / g2), (d1 / g2) * (d2 / g1))
    }

    #[inline]
    fn mix(key: &(i128, i128)) -> u64 {
        IntKeys::mix(&key.0) ^ splitmix64(IntKeys::mix(&key.1))
    }
}

pub(crate) struct BigKeys<'a> {
    values: &'a [RationalNumber],
    op: Operation,
}

impl PairKeys for BigKeys<'_> {
    type Key = RationalNumber;

    fn len(&self) -> usize {
        self.values.len()
    }

    fn key(&self, i: usize, j: usize) -> RationalNumber {
        self.op.apply(&self.values[i], &self.values[j])
    }

    fn mix(key: &RationalNumber) -> u64 {
        let mut h = DefaultHasher::new();
        key.hash(&mut h);
        h.finish()
    }
}

pub(crate) trait KeyVisitor {
    type Output;
    fn visit<P: PairKeys>(self, keys: &P) -> Self::Output;
}

const SMALL: i64 = 1 << 62;

fn small_int(v: &num_bigint::BigInt) -> Option<i128> {
    v.to_i64()
        .filter(|x| x.unsigned_abs() < SMALL as u64)
        .map(i128::from)
}

/// Picks the cheapest exact key representation for `set` under `op` and
/// hands it to `visitor`. Keys index into `set.as_slice()`.
pub(crate) fn visit_keys<V: KeyVisitor>(set: &NumberSet, op: Operation, visitor: V) -> V::Output {
    let values = set.as_slice();
    match op {
        Operation::Sum => {
            let l = common_denominator(values);
            let scaled: Option<Vec<i128>> = values
                .iter()
                .map(|r| small_int(&(r.numer() * (&l / r.denom()))))
                .collect();
            if let Some(values) = scaled {
                return visitor.visit(&IntKeys { values, op });
            }
        }
        Operation::Product => {
            if values.iter().all(RationalNumber::is_integer) {
                let ints: Option<Vec<i128>> = values.iter().map(|r| small_int(r.numer())).collect();
                if let Some(values) = ints {
                    return visitor.visit(&IntKeys { values, op });
                }
            }
            let fracs: Option<Vec<(i128, i128)>> = values
                .iter()
                .map(|r| small_int(r.numer()).zip(small_int(r.denom())))
                .collect();
            if let Some(values) = fracs {
                return visitor.visit(&FracProductKeys { values });
            }
        }
    }
    visitor.visit(&BigKeys { values, op })
}

fn check_multiplicative(set: &NumberSet, op: Operation) -> Result<()> {
    if op == Operation::Product && set.contains_zero() {
        return Err(Error::ZeroInMultiplicative);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Energy

const DENSE_WIDTH_LIMIT: u128 = 1 << 25;

struct EnergyCounter;

impl KeyVisitor for EnergyCounter {
    type Output = u64;

    fn visit<P: PairKeys>(self, keys: &P) -> u64 {
        let n = keys.len();
        if n == 0 {
            return 0;
        }
        let pairs = (n as u128) * (n as u128 + 1) / 2;
        if let Some((lo, width)) = keys.dense_window() {
            if width <= DENSE_WIDTH_LIMIT && width <= 16 * pairs {
                return dense_energy(keys, lo, width as usize);
            }
        }
        partitioned_energy(keys)
    }
}

fn dense_energy<P: PairKeys>(keys: &P, lo: i128, width: usize) -> u64 {
    let n = keys.len();
    let mut counts = vec![0u32; width];
    for i in 0..n {
        counts[P::dense_offset(&keys.key(i, i), lo)] += 1;
        for j in i + 1..n {
            counts[P::dense_offset(&keys.key(i, j), lo)] += 2;
        }
    }
    counts.iter().map(|&r| (r as u64) * (r as u64)).sum()
}

fn partition_count(pairs: u128) -> u64 {
    let per_pass = ((1u128 << 24) / rayon::current_num_threads().max(1) as u128).max(1 << 18);
    pairs.div_ceil(per_pass).max(1) as u64
}

fn partitioned_energy<P: PairKeys>(keys: &P) -> u64 {
    let n = keys.len();
    let passes = partition_count((n as u128) * (n as u128 + 1) / 2);
    (0..passes)
        .into_par_iter()
        .map(|pass| {
            let keep = |k: &P::Key| passes == 1 || P::mix(k) % passes == pass;
            let mut off = Vec::new();
            let mut diag = Vec::new();
            for i in 0..n {
                let k = keys.key(i, i);
                if keep(&k) {
                    diag.push(k);
                }
                for j in i + 1..n {
                    let k = keys.key(i, j);
                    if keep(&k) {
                        off.push(k);
                    }
                }
            }
            off.sort_unstable();
            diag.sort_unstable();
            sum_of_squared_representations(&off, &diag)
        })
        .sum()
}

/// `Σ (2u + d)²` where `u` and `d` count each key among the off-diagonal and
/// diagonal pair keys (both sorted).
fn sum_of_squared_representations<K: Ord>(off: &[K], diag: &[K]) -> u64 {
    let (mut i, mut j) = (0, 0);
    let mut total = 0u64;
    while i < off.len() || j < diag.len() {
        let key = match (off.get(i), diag.get(j)) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!(),
        };
        let mut u = 0u64;
        while i < off.len() && &off[i] == key {
            u += 1;
            i += 1;
        }
        let mut d = 0u64;
        while j < diag.len() && &diag[j] == key {
            d += 1;
            j += 1;
        }
        let r = 2 * u + d;
        total += r * r;
    }
    total
}

pub fn additive_energy(set: &NumberSet) -> u64 {
    visit_keys(set, Operation::Sum, EnergyCounter)
}

pub fn multiplicative_energy(set: &NumberSet) -> Result<u64> {
    check_multiplicative(set, Operation::Product)?;
    Ok(visit_keys(set, Operation::Product, EnergyCounter))
}

pub fn energy(set: &NumberSet, op: Operation) -> Result<u64> {
    match op {
        Operation::Sum => Ok(additive_energy(set)),
        Operation::Product => multiplicative_energy(set),
    }
}

pub fn energy_report(set: &NumberSet) -> Result<EnergyReport> {
    Ok(EnergyReport {
        additive_energy: additive_energy(set),
        multiplicative_energy: multiplicative_energy(set)?,
        set_size: set.len(),
    })
}

/// `2n² − n`, the energy of a Sidon set of size `n`.
pub fn trivial_energy(n: usize) -> u64 {
    let n = n as u64;
    (2 * n * n).saturating_sub(n)
}

// ---------------------------------------------------------------------------
// Sidon predicates and quadruples

struct FirstCollision;

impl KeyVisitor for FirstCollision {
    type Output = Option<[(usize, usize); 2]>;

    fn visit<P: PairKeys>(self, keys: &P) -> Self::Output {
        let n = keys.len();
        let mut seen: HashMap<P::Key, (usize, usize)> = HashMap::new();
        for i in 0..n {
            for j in i..n {
                match seen.entry(keys.key(i, j)) {
                    Entry::Occupied(e) => return Some([*e.get(), (i, j)]),
                    Entry::Vacant(e) => {
                        e.insert((i, j));
                    }
                }
            }
        }
        None
    }
}

fn make_quadruple(set: &NumberSet, op: Operation, mut sides: [(usize, usize); 2]) -> Quadruple {
    sides.sort_unstable();
    let [(a, b), (c, d)] = sides;
    let kind = match (a == b, c == d) {
        (false, false) => QuadrupleKind::E0,
        (true, true) => QuadrupleKind::E2,
        _ => QuadrupleKind::E1,
    };
    let v = set.as_slice();
    Quadruple {
        elements: [v[a].clone(), v[b].clone(), v[c].clone(), v[d].clone()],
        operation: op,
        kind,
    }
}

/// A nontrivial relation in `set`, if any.
pub fn sidon_witness(set: &NumberSet, op: Operation) -> Result<Option<Quadruple>> {
    check_multiplicative(set, op)?;
    Ok(visit_keys(set, op, FirstCollision).map(|sides| make_quadruple(set, op, sides)))
}

pub fn is_sidon(set: &NumberSet, op: Operation) -> Result<bool> {
    check_multiplicative(set, op)?;
    Ok(visit_keys(set, op, FirstCollision).is_none())
}

pub fn is_additive_sidon(set: &NumberSet) -> bool {
    visit_keys(set, Operation::Sum, FirstCollision).is_none()
}

pub fn is_multiplicative_sidon(set: &NumberSet) -> Result<bool> {
    is_sidon(set, Operation::Product)
}

/// Both predicates. Rejects zero like the multiplicative predicate does.
pub fn is_bi_sidon(set: &NumberSet) -> Result<bool> {
    Ok(is_additive_sidon(set) && is_multiplicative_sidon(set)?)
}

struct RelationLister;

impl KeyVisitor for RelationLister {
    type Output = Vec<[(usize, usize); 2]>;

    fn visit<P: PairKeys>(self, keys: &P) -> Self::Output {
        let n = keys.len();
        let mut groups: HashMap<P::Key, Vec<(usize, usize)>> = HashMap::new();
        for i in 0..n {
            for j in i..n {
                groups.entry(keys.key(i, j)).or_default().push((i, j));
            }
        }
        let mut out = Vec::new();
        for pairs in groups.into_values().filter(|g| g.len() > 1) {
            for (x, &first) in pairs.iter().enumerate() {
                for &second in &pairs[x + 1..] {
                    out.push([first, second]);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Index form of the nontrivial relations: pairs of index pairs `i <= j`
/// into `set.as_slice()`, each relation once, sorted.
pub(crate) fn nontrivial_relations(
    set: &NumberSet,
    op: Operation,
) -> Result<Vec<[(usize, usize); 2]>> {
    check_multiplicative(set, op)?;
    Ok(visit_keys(set, op, RelationLister))
}

/// One canonical quadruple per nontrivial relation, in ascending order of
/// their index pairs.
pub fn nontrivial_quadruples(set: &NumberSet, op: Operation) -> Result<Vec<Quadruple>> {
    Ok(nontrivial_relations(set, op)?
        .into_iter()
        .map(|sides| make_quadruple(set, op, sides))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> NumberSet {
        NumberSet::from_integers(v.iter().copied()).unwrap()
    }

    fn q(s: &str) -> RationalNumber {
        s.parse().unwrap()
    }

    #[test]
    fn energy_examples() {
        assert_eq!(additive_energy(&ints(&[5])), 1);
        assert_eq!(multiplicative_energy(&ints(&[5])).unwrap(), 1);
        assert_eq!(additive_energy(&ints(&[1, 2, 3])), 19);
        assert_eq!(multiplicative_energy(&ints(&[1, 2, 3])).unwrap(), 15);
        assert_eq!(multiplicative_energy(&ints(&[2, 4, 8])).unwrap(), 19);
        assert_eq!(additive_energy(&ints(&[1, 2, 5, 7])), 28);
        assert_eq!(additive_energy(&NumberSet::empty()), 0);
    }

    #[test]
    fn zero_rejected_for_products() {
        assert!(matches!(
            multiplicative_energy(&ints(&[0, 1, 2])),
            Err(Error::ZeroInMultiplicative)
        ));
        assert!(is_bi_sidon(&ints(&[0, 1])).is_err());
        assert!(nontrivial_quadruples(&ints(&[0, 3]), Operation::Product).is_err());
        assert_eq!(additive_energy(&ints(&[0, 1, 2])), 19);
    }

    #[test]
    fn predicates() {
        assert!(!is_additive_sidon(&ints(&[1, 2, 3])));
        assert!(!is_multiplicative_sidon(&ints(&[2, 3, 4, 6])).unwrap());
        let s = ints(&[1, 2, 5, 7]);
        assert!(is_additive_sidon(&s));
        assert!(is_multiplicative_sidon(&s).unwrap());
        assert!(is_bi_sidon(&s).unwrap());
        assert!(is_bi_sidon(&NumberSet::empty()).unwrap());
        assert!(!is_bi_sidon(&ints(&[1, 2, 3])).unwrap());
    }

    #[test]
    fn quadruple_examples() {
        let qs = nontrivial_quadruples(&ints(&[2, 3, 4, 6]), Operation::Product).unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].elements, [q("2"), q("6"), q("3"), q("4")]);
        assert_eq!(qs[0].kind, QuadrupleKind::E0);

        let qs = nontrivial_quadruples(&ints(&[2, 4, 8]), Operation::Product).unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].elements, [q("2"), q("8"), q("4"), q("4")]);
        assert_eq!(qs[0].kind, QuadrupleKind::E1);

        assert!(nontrivial_quadruples(&ints(&[1, 2, 5, 7]), Operation::Sum)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn opposite_squares_are_a_relation() {
        let s = ints(&[-2, 2]);
        let qs = nontrivial_quadruples(&s, Operation::Product).unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].kind, QuadrupleKind::E2);
        assert!(!is_multiplicative_sidon(&s).unwrap());
        assert_eq!(multiplicative_energy(&s).unwrap(), 8);
    }

    #[test]
    fn rational_inputs_use_exact_keys() {
        let s = NumberSet::new(vec![q("1/2"), q("1/3"), q("1/6"), q("2/3")]).unwrap();
        // 1/2 + 1/6 = 1/3 + 1/3
        assert!(!is_additive_sidon(&s));
        let w = sidon_witness(&s, Operation::Sum).unwrap().unwrap();
        assert_eq!(
            &w.elements[0] + &w.elements[1],
            &w.elements[2] + &w.elements[3]
        );
        let mut brute = 0u64;
        for a in s.iter() {
            for b in s.iter() {
                for c in s.iter() {
                    for d in s.iter() {
                        if a * b == c * d {
                            brute += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(multiplicative_energy(&s).unwrap(), brute);
    }

    #[test]
    fn big_values_fall_back_to_rationals() {
        let big = RationalNumber::from_integer(num_bigint::BigInt::from(1u8) << 70);
        let s = NumberSet::new(vec![big.clone(), &big + &q("1"), &big + &q("2")]).unwrap();
        assert_eq!(additive_energy(&s), 19);
        assert_eq!(multiplicative_energy(&s).unwrap(), 15);
    }

    #[test]
    fn dense_and_partitioned_paths_agree() {
        let s = ints(&(1..=300).collect::<Vec<_>>());
        let dense = additive_energy(&s);
        let sparse = partitioned_energy(&IntKeys {
            values: (1..=300).map(i128::from).collect(),
            op: Operation::Sum,
        });
        assert_eq!(dense, sparse);
        assert_eq!(dense, (2 * 300u64.pow(3) + 300) / 3);
    }

    #[test]
    fn interval_energy_closed_form() {
        for n in 1..60u64 {
            let s = ints(&(1..=n as i64).collect::<Vec<_>>());
            assert_eq!(additive_energy(&s), (2 * n * n * n + n) / 3);
        }
    }
}
