use std::collections::{HashMap, HashSet};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive};
use rand::RngCore;
use rayon::prelude::*;

use crate::energy::{visit_keys, KeyVisitor, Operation, PairKeys};
use crate::error::{Error, Result};
use crate::exactnum::{is_prime, NumberSet, RationalNumber};
use crate::stream::substream;

/// Multipliers are `k / 2^THETA_BITS` with `k` uniform in `[0, 2^THETA_BITS)`.
pub const THETA_BITS: u32 = 63;
const THETA_MASK: u64 = (1 << THETA_BITS) - 1;
const HALF: u64 = 1 << (THETA_BITS - 1);

/// Distinct positive integers in ascending order, with their residues
/// modulo `2^63` cached for the embedding kernel.
#[derive(Clone, Debug)]
pub struct IntegerSet {
    values: Vec<BigInt>,
    residues: Vec<u64>,
}

impl IntegerSet {
    pub fn new(mut values: Vec<BigInt>) -> Result<Self> {
        values.sort_unstable();
        if let Some(bad) = values.iter().find(|v| !v.is_positive()) {
            return Err(Error::Precondition(format!(
                "expected positive integers, got {bad}"
            )));
        }
        if let Some(w) = values.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Duplicate(w[0].to_string()));
        }
        let modulus = BigInt::one() << THETA_BITS;
        let residues = values
            .iter()
            .map(|v| {
                (v % &modulus)
                    .to_u64()
                    .expect("positive residue below 2^63")
            })
            .collect();
        Ok(Self { values, residues })
    }

    pub fn from_u64s(values: impl IntoIterator<Item = u64>) -> Result<Self> {
        Self::new(values.into_iter().map(BigInt::from).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }
}

/// Injective Freiman homomorphism from the retained subset `A'` into `F_p^d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModularEmbedding {
    p: u64,
    d: usize,
    thetas: Vec<u64>,
    retained: Vec<BigInt>,
    images: Vec<u64>,
}

impl ModularEmbedding {
    /// Assembles an embedding from raw parts without checking it; see
    /// [`verify_freiman_homomorphism`]. `images` holds `d` residues per
    /// retained element, in the order of `retained`.
    pub fn from_parts(
        p: u64,
        d: usize,
        thetas: Vec<u64>,
        retained: Vec<BigInt>,
        images: Vec<u64>,
    ) -> Result<Self> {
        if images.len() != retained.len() * d || thetas.len() != d {
            return Err(Error::InvalidInput(
                "image table shape does not match d".into(),
            ));
        }
        Ok(Self {
            p,
            d,
            thetas,
            retained,
            images,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// The multipliers `θ_i` as exact rationals in `[0, 1)`.
    pub fn thetas(&self) -> Vec<RationalNumber> {
        self.thetas
            .iter()
            .map(|&k| {
                RationalNumber::new(BigInt::from(k), BigInt::one() << THETA_BITS)
                    .expect("nonzero denominator")
            })
            .collect()
    }

    /// The retained set `A'`, ascending.
    pub fn retained(&self) -> &[BigInt] {
        &self.retained
    }

    pub fn len(&self) -> usize {
        self.retained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }

    /// Image of the `index`-th retained element.
    pub fn image(&self, index: usize) -> &[u64] {
        &self.images[index * self.d..(index + 1) * self.d]
    }

    pub fn image_of(&self, a: &BigInt) -> Option<&[u64]> {
        self.retained.binary_search(a).ok().map(|i| self.image(i))
    }

    pub fn image_table(&self) -> impl Iterator<Item = (&BigInt, &[u64])> {
        self.retained
            .iter()
            .zip(self.images.chunks_exact(self.d.max(1)))
    }

    #[cfg(test)]
    pub(crate) fn images_mut(&mut self) -> &mut [u64] {
        &mut self.images
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingResult {
    pub embedding: ModularEmbedding,
    /// `|A'| / |A|` (1 for empty input).
    pub retained_fraction: RationalNumber,
    /// `|B|`: elements whose fractional parts all fell in `[0, 1/2)`.
    pub eligible: usize,
    /// `|C|`: elements sharing their image with another element of `A`.
    pub colliding: usize,
}

/// `[p θ a] mod p` and whether `{p θ a} < 1/2`, exactly.
///
/// With `θ = k / 2^63` write `k a = q 2^63 + r`. Then `p θ a = p q + p r / 2^63`,
/// so the coordinate is `⌊p r / 2^63⌋` (already below `p`) and the fractional
/// part is `(p r mod 2^63) / 2^63`. Only `a mod 2^63` matters.
#[inline]
pub(crate) fn phi(p: u64, theta: u64, residue: u64) -> (u64, bool) {
    let r = theta.wrapping_mul(residue) & THETA_MASK;
    let m = p as u128 * r as u128;
    let coord = (m >> THETA_BITS) as u64;
    let frac = (m as u64) & THETA_MASK;
    (coord, frac < HALF)
}

fn check_preconditions(n: usize, p: u64, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Precondition("dimension d must be positive".into()));
    }
    if !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not prime")));
    }
    // N <= 2^(-2d-1) p^d
    let lhs = BigUint::from(n) << (2 * d + 1);
    let rhs = num_traits::pow(BigUint::from(p), d);
    if lhs > rhs {
        return Err(Error::Precondition(format!(
            "|A| = {n} exceeds 2^-{} * {p}^{d}; enlarge p",
            2 * d + 1
        )));
    }
    Ok(())
}

fn sample_with_thetas(a: &IntegerSet, p: u64, d: usize, thetas: Vec<u64>) -> EmbeddingResult {
    let n = a.len();
    let mut images = vec![0u64; n * d];
    let mut eligible = vec![true; n];
    for (idx, &res) in a.residues.iter().enumerate() {
        for (c, &theta) in thetas.iter().enumerate() {
            let (coord, low_half) = phi(p, theta, res);
            images[idx * d + c] = coord;
            eligible[idx] &= low_half;
        }
    }
    let mut multiplicity: HashMap<&[u64], u32> = HashMap::with_capacity(n);
    for img in images.chunks_exact(d) {
        *multiplicity.entry(img).or_default() += 1;
    }
    let colliding: Vec<bool> = images
        .chunks_exact(d)
        .map(|img| multiplicity[img] > 1)
        .collect();

    let mut retained = Vec::new();
    let mut kept_images = Vec::new();
    for idx in 0..n {
        if eligible[idx] && !colliding[idx] {
            retained.push(a.values[idx].clone());
            kept_images.extend_from_slice(&images[idx * d..(idx + 1) * d]);
        }
    }
    let retained_fraction = if n == 0 {
        RationalNumber::one()
    } else {
        RationalNumber::from_ratio(retained.len() as i64, n as i64).expect("n > 0")
    };
    EmbeddingResult {
        eligible: eligible.iter().filter(|&&e| e).count(),
        colliding: colliding.iter().filter(|&&c| c).count(),
        embedding: ModularEmbedding {
            p,
            d,
            thetas,
            retained,
            images: kept_images,
        },
        retained_fraction,
    }
}

/// One random embedding: `A' = B \ C` where `B` keeps the elements whose
/// fractional parts `{p θ_i a}` all lie in `[0, 1/2)` and `C` holds every
/// element of `A` whose image is shared with another element of `A`.
pub fn sample_modular_embedding<R: RngCore + ?Sized>(
    a: &IntegerSet,
    p: u64,
    d: usize,
    rng: &mut R,
) -> Result<EmbeddingResult> {
    check_preconditions(a.len(), p, d)?;
    let thetas = (0..d)
        .map(|_| rng.next_u64() >> (64 - THETA_BITS))
        .collect();
    Ok(sample_with_thetas(a, p, d, thetas))
}

/// `k` independent samples on substreams `0..k` of a seed drawn from `rng`;
/// returns the one with the largest `|A'|`, the lowest index on ties.
pub fn best_of_k_embeddings<R: RngCore + ?Sized>(
    a: &IntegerSet,
    p: u64,
    d: usize,
    k: usize,
    rng: &mut R,
) -> Result<EmbeddingResult> {
    check_preconditions(a.len(), p, d)?;
    if k == 0 {
        return Err(Error::Precondition("best-of-k needs k >= 1".into()));
    }
    let base = rng.next_u64();
    let samples: Vec<EmbeddingResult> = (0..k as u64)
        .into_par_iter()
        .map(|j| sample_modular_embedding(a, p, d, &mut substream(base, j)))
        .collect::<Result<_>>()?;
    let mut best = None::<EmbeddingResult>;
    for s in samples {
        if best
            .as_ref()
            .is_none_or(|b| s.embedding.len() > b.embedding.len())
        {
            best = Some(s);
        }
    }
    Ok(best.expect("k >= 1"))
}

struct HomomorphismCheck<'a> {
    embedding: &'a ModularEmbedding,
}

impl HomomorphismCheck<'_> {
    fn image_sum(&self, i: usize, j: usize) -> Vec<u64> {
        let p = self.embedding.p;
        self.embedding
            .image(i)
            .iter()
            .zip(self.embedding.image(j))
            .map(|(&x, &y)| (x + y) % p)
            .collect()
    }

    /// Packs an image sum into one word when `p^d` fits in 128 bits.
    fn packed_sum(&self, i: usize, j: usize) -> Option<u128> {
        let p = self.embedding.p as u128;
        let mut code = 0u128;
        for (&x, &y) in self.embedding.image(i).iter().zip(self.embedding.image(j)) {
            code = code
                .checked_mul(p)?
                .checked_add((x as u128 + y as u128) % p)?;
        }
        Some(code)
    }

    fn packable(&self) -> bool {
        let p = self.embedding.p as u128;
        (0..self.embedding.d)
            .try_fold(1u128, |acc, _| acc.checked_mul(p))
            .is_some()
    }
}

impl KeyVisitor for HomomorphismCheck<'_> {
    type Output = bool;

    fn visit<P: PairKeys>(self, keys: &P) -> bool {
        let n = keys.len();
        if self.packable() {
            if let Some((lo, width)) = keys.dense_window() {
                if width <= 1 << 25 {
                    let mut table = vec![u128::MAX; width as usize];
                    for i in 0..n {
                        for j in i..n {
                            let slot = &mut table[P::dense_offset(&keys.key(i, j), lo)];
                            let code = self.packed_sum(i, j).expect("packable");
                            if *slot == u128::MAX {
                                *slot = code;
                            } else if *slot != code {
                                return false;
                            }
                        }
                    }
                    return true;
                }
            }
            let mut seen: HashMap<P::Key, u128> = HashMap::new();
            for i in 0..n {
                for j in i..n {
                    let code = self.packed_sum(i, j).expect("packable");
                    if *seen.entry(keys.key(i, j)).or_insert(code) != code {
                        return false;
                    }
                }
            }
            return true;
        }
        let mut seen: HashMap<P::Key, Vec<u64>> = HashMap::new();
        for i in 0..n {
            for j in i..n {
                let code = self.image_sum(i, j);
                if *seen.entry(keys.key(i, j)).or_insert_with(|| code.clone()) != code {
                    return false;
                }
            }
        }
        true
    }
}

/// Injective on `A'`, and all pairs of `A'` with equal sums have equal image sums.
pub fn verify_freiman_homomorphism(embedding: &ModularEmbedding) -> bool {
    if embedding.len() <= 1 {
        return true;
    }
    let distinct: HashSet<&[u64]> = embedding.images.chunks_exact(embedding.d).collect();
    if distinct.len() != embedding.len() {
        return false;
    }
    let Ok(set) = NumberSet::new(
        embedding
            .retained
            .iter()
            .cloned()
            .map(RationalNumber::from_integer)
            .collect(),
    ) else {
        return false;
    };
    if set
        .as_slice()
        .iter()
        .map(|r| r.numer())
        .ne(embedding.retained.iter())
    {
        return false;
    }
    visit_keys(&set, Operation::Sum, HomomorphismCheck { embedding })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::rng_from_seed;

    /// `([p θ a] mod p, {p θ a} < 1/2)` for an arbitrary rational `θ`.
    fn phi_reference(p: u64, theta: &RationalNumber, a: i64) -> (BigInt, bool) {
        let x = &(theta * &RationalNumber::from(a)) * &RationalNumber::from(p as i64);
        let floor = num_integer::Integer::div_floor(x.numer(), x.denom());
        let frac = &x - &RationalNumber::from_integer(floor.clone());
        let half = RationalNumber::from_ratio(1, 2).unwrap();
        (
            num_integer::Integer::mod_floor(&floor, &BigInt::from(p)),
            frac < half,
        )
    }

    #[test]
    fn phi_reference_examples() {
        let tenth = RationalNumber::from_ratio(1, 10).unwrap();
        assert_eq!(phi_reference(7, &tenth, 3), (BigInt::from(2), true));
        assert_eq!(phi_reference(7, &tenth, 10).0, BigInt::from(0));
        assert_eq!(phi_reference(7, &tenth, 13).0, BigInt::from(2));
    }

    #[test]
    fn phi_matches_reference_on_dyadic_multipliers() {
        let mut rng = rng_from_seed(1);
        for _ in 0..2000 {
            let k = rng.next_u64() >> 1;
            let a = (rng.next_u64() % 1_000_000 + 1) as i64;
            let p = [7u64, 37, 97, 1031][(a % 4) as usize];
            let theta = RationalNumber::new(BigInt::from(k), BigInt::one() << THETA_BITS).unwrap();
            let (coord, low) = phi(p, k, a as u64);
            assert_eq!((BigInt::from(coord), low), phi_reference(p, &theta, a));
        }
    }

    #[test]
    fn phi_respects_addition_on_low_half() {
        let mut rng = rng_from_seed(2);
        let p = 7;
        for _ in 0..5000 {
            let theta = rng.next_u64() >> 1;
            let a = rng.next_u64() % 10_000 + 1;
            let b = rng.next_u64() % 10_000 + 1;
            let (fa, la) = phi(p, theta, a);
            let (fb, lb) = phi(p, theta, b);
            let (fab, _) = phi(p, theta, a + b);
            if la && lb {
                assert_eq!((fa + fb) % p, fab);
            }
        }
    }

    #[test]
    fn precondition_enforced() {
        let a = IntegerSet::from_u64s(1..=300).unwrap();
        let mut rng = rng_from_seed(0);
        // 300 * 32 > 97^2 = 9409
        assert!(matches!(
            sample_modular_embedding(&a, 97, 2, &mut rng),
            Err(Error::Precondition(_))
        ));
        let a = IntegerSet::from_u64s(1..=294).unwrap();
        assert!(sample_modular_embedding(&a, 97, 2, &mut rng).is_ok());
        assert!(sample_modular_embedding(&a, 96, 2, &mut rng).is_err());
        assert!(sample_modular_embedding(&a, 97, 0, &mut rng).is_err());
    }

    #[test]
    fn integer_set_validation() {
        assert!(IntegerSet::from_u64s([0, 1]).is_err());
        assert!(IntegerSet::from_u64s([3, 3]).is_err());
        assert!(IntegerSet::new(vec![BigInt::from(-1)]).is_err());
    }

    #[test]
    fn samples_verify_and_corruption_is_caught() {
        let mut rng = rng_from_seed(9);
        let a = IntegerSet::from_u64s((1..=100).map(|x| x * x * 31 + 7)).unwrap();
        for _ in 0..50 {
            let r = sample_modular_embedding(&a, 97, 2, &mut rng).unwrap();
            assert!(verify_freiman_homomorphism(&r.embedding));
            let e = &r.embedding;
            assert!(e.retained().windows(2).all(|w| w[0] < w[1]));
            if e.len() >= 2 {
                let mut bad = e.clone();
                let first: Vec<u64> = bad.image(0).to_vec();
                let d = bad.d();
                bad.images_mut()[d..2 * d].copy_from_slice(&first);
                assert!(!verify_freiman_homomorphism(&bad));
            }
        }
    }

    #[test]
    fn non_homomorphic_table_is_rejected() {
        // 1 + 4 = 2 + 3 but the images disagree
        let e = ModularEmbedding::from_parts(
            11,
            1,
            vec![0],
            [1, 2, 3, 4].map(BigInt::from).to_vec(),
            vec![1, 2, 3, 5],
        )
        .unwrap();
        assert!(!verify_freiman_homomorphism(&e));
        let ok = ModularEmbedding::from_parts(
            11,
            1,
            vec![0],
            [1, 2, 3, 4].map(BigInt::from).to_vec(),
            vec![1, 2, 3, 4],
        )
        .unwrap();
        assert!(verify_freiman_homomorphism(&ok));
    }

    #[test]
    fn tiny_tables_are_vacuous() {
        let e = ModularEmbedding::from_parts(5, 2, vec![0, 0], vec![BigInt::from(3)], vec![1, 1])
            .unwrap();
        assert!(verify_freiman_homomorphism(&e));
        let e = ModularEmbedding::from_parts(5, 2, vec![0, 0], vec![], vec![]).unwrap();
        assert!(verify_freiman_homomorphism(&e));
    }

    #[test]
    fn best_of_one_is_one_sample() {
        let a = IntegerSet::from_u64s((1..=60).map(|x| 3 * x + 1)).unwrap();
        let mut rng = rng_from_seed(4);
        let best = best_of_k_embeddings(&a, 97, 2, 1, &mut rng).unwrap();
        let mut rng = rng_from_seed(4);
        let base = rng.next_u64();
        let single = sample_modular_embedding(&a, 97, 2, &mut substream(base, 0)).unwrap();
        assert_eq!(best, single);
    }

    #[test]
    fn singleton_keeps_zero_or_one() {
        let a = IntegerSet::from_u64s([42]).unwrap();
        let mut rng = rng_from_seed(8);
        for _ in 0..20 {
            let r = best_of_k_embeddings(&a, 11, 2, 3, &mut rng).unwrap();
            assert!(r.embedding.len() <= 1);
        }
    }

    #[test]
    fn thetas_are_exact_dyadic_rationals() {
        let a = IntegerSet::from_u64s([1, 2, 3]).unwrap();
        let r = sample_modular_embedding(&a, 97, 3, &mut rng_from_seed(5)).unwrap();
        for t in r.embedding.thetas() {
            assert!(!t.is_negative() && t < RationalNumber::one());
            let scaled = &t * &RationalNumber::from_integer(BigInt::one() << THETA_BITS);
            assert!(scaled.is_integer());
        }
    }
}
