use std::collections::HashMap;

use crate::energy::Operation;
use crate::error::{Error, Result};
use crate::exactnum::{NumberSet, RationalNumber};

pub const ORACLE_LIMIT: usize = 24;
pub const ENUMERATION_LIMIT: usize = 30;

/// Class id of every pair value `x_i ∘ x_j`, `i <= j`, row-major in an `n × n` table.
fn pair_classes(v: &[RationalNumber], op: Operation) -> (Vec<u32>, usize) {
    let n = v.len();
    let mut ids: HashMap<RationalNumber, u32> = HashMap::new();
    let mut table = vec![0u32; n * n];
    for i in 0..n {
        for j in i..n {
            let next = ids.len() as u32;
            let id = *ids.entry(op.apply(&v[i], &v[j])).or_insert(next);
            table[i * n + j] = id;
            table[j * n + i] = id;
        }
    }
    (table, ids.len())
}

struct Search<'a> {
    n: usize,
    sums: &'a [u32],
    products: &'a [u32],
    sum_used: Vec<bool>,
    product_used: Vec<bool>,
    chosen: Vec<usize>,
    best: Vec<usize>,
}

impl Search<'_> {
    /// Adds `x` if neither table collides; returns whether it was added.
    fn try_push(&mut self, x: usize) -> bool {
        let n = self.n;
        let row = self.chosen.iter().copied().chain(std::iter::once(x));
        let fits = row.clone().all(|c| {
            !self.sum_used[self.sums[x * n + c] as usize]
                && !self.product_used[self.products[x * n + c] as usize]
        });
        if !fits {
            return false;
        }
        for c in row {
            self.sum_used[self.sums[x * n + c] as usize] = true;
            self.product_used[self.products[x * n + c] as usize] = true;
        }
        self.chosen.push(x);
        true
    }

    fn pop(&mut self) {
        let n = self.n;
        let x = self.chosen.pop().expect("nonempty");
        for c in self.chosen.iter().copied().chain(std::iter::once(x)) {
            self.sum_used[self.sums[x * n + c] as usize] = false;
            self.product_used[self.products[x * n + c] as usize] = false;
        }
    }

    fn run(&mut self, next: usize) {
        if self.chosen.len() > self.best.len() {
            self.best = self.chosen.clone();
        }
        if next == self.n || self.chosen.len() + (self.n - next) <= self.best.len() {
            return;
        }
        if self.try_push(next) {
            self.run(next + 1);
            self.pop();
        }
        self.run(next + 1);
    }
}

/// A largest bi-Sidon subset, the lexicographically smallest among those,
/// by depth-first branch and bound over the ascending elements.
pub fn max_bi_sidon_exact(a: &NumberSet, limit: usize) -> Result<NumberSet> {
    if a.len() > limit {
        return Err(Error::Precondition(format!(
            "|A| = {} exceeds the oracle limit {limit}",
            a.len()
        )));
    }
    if a.contains_zero() {
        return Err(Error::ZeroInMultiplicative);
    }
    let v = a.as_slice();
    let (sums, sum_classes) = pair_classes(v, Operation::Sum);
    let (products, product_classes) = pair_classes(v, Operation::Product);
    let mut search = Search {
        n: v.len(),
        sums: &sums,
        products: &products,
        sum_used: vec![false; sum_classes],
        product_used: vec![false; product_classes],
        chosen: Vec::new(),
        best: Vec::new(),
    };
    search.run(0);
    NumberSet::new(search.best.iter().map(|&i| v[i].clone()).collect())
}

/// Ordered quadruples `(a, b, a', b') ∈ A⁴` with `a ∘ b = a' ∘ b'`, counted directly.
pub fn energy_by_enumeration(a: &NumberSet, op: Operation) -> Result<u64> {
    if a.len() > ENUMERATION_LIMIT {
        return Err(Error::Precondition(format!(
            "|A| = {} exceeds the enumeration limit {ENUMERATION_LIMIT}",
            a.len()
        )));
    }
    if op == Operation::Product && a.contains_zero() {
        return Err(Error::ZeroInMultiplicative);
    }
    let v = a.as_slice();
    let mut count = 0;
    for x in v {
        for y in v {
            let lhs = op.apply(x, y);
            for z in v {
                for w in v {
                    if op.apply(z, w) == lhs {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::is_bi_sidon;

    fn ints(v: &[i64]) -> NumberSet {
        NumberSet::from_integers(v.iter().copied()).unwrap()
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(
            max_bi_sidon_exact(&ints(&[1, 2, 3]), ORACLE_LIMIT).unwrap(),
            ints(&[1, 2])
        );
        let best =
            max_bi_sidon_exact(&NumberSet::from_integers(1..=7).unwrap(), ORACLE_LIMIT).unwrap();
        assert_eq!(best, ints(&[1, 2, 5, 7]));
        assert!(max_bi_sidon_exact(&NumberSet::empty(), ORACLE_LIMIT)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn oracle_limits() {
        let big = NumberSet::from_integers(1..=25).unwrap();
        assert!(matches!(
            max_bi_sidon_exact(&big, ORACLE_LIMIT),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            max_bi_sidon_exact(&ints(&[0, 1]), 24),
            Err(Error::ZeroInMultiplicative)
        ));
    }

    /// Exhaustive check over all subsets.
    fn brute_max(a: &NumberSet) -> usize {
        let v = a.as_slice();
        (0u32..1 << v.len())
            .filter_map(|mask| {
                let s = NumberSet::new(
                    (0..v.len())
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| v[i].clone())
                        .collect(),
                )
                .unwrap();
                is_bi_sidon(&s).unwrap().then_some(s.len())
            })
            .max()
            .unwrap()
    }

    #[test]
    fn oracle_matches_exhaustive_search() {
        let sets = [
            ints(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
            ints(&[-4, -2, -1, 1, 2, 4, 8, 16]),
            ints(&[2, 3, 4, 6, 8, 9, 12, 18, 27]),
        ];
        for a in &sets {
            let best = max_bi_sidon_exact(a, ORACLE_LIMIT).unwrap();
            assert!(is_bi_sidon(&best).unwrap());
            assert_eq!(best.len(), brute_max(a));
        }
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(
            energy_by_enumeration(&ints(&[1, 2, 3]), Operation::Sum).unwrap(),
            19
        );
        assert_eq!(
            energy_by_enumeration(&ints(&[1, 2, 3]), Operation::Product).unwrap(),
            15
        );
        assert_eq!(
            energy_by_enumeration(&ints(&[4]), Operation::Sum).unwrap(),
            1
        );
        assert_eq!(
            energy_by_enumeration(&ints(&[4]), Operation::Product).unwrap(),
            1
        );
        let big = NumberSet::from_integers(1..=31).unwrap();
        assert!(energy_by_enumeration(&big, Operation::Sum).is_err());
    }
}
