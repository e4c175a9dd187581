use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{factorize, ExponentVector, NumberSet, RationalNumber};

/// `f(a) = Σ e_k R^k` over the ascending primes `p_k` dividing some element,
/// where `e_k` is the exponent of `p_k` in `a`.
///
/// `R = 2M + 1` with `M` the largest absolute entry of any pairwise sum of
/// exponent vectors, so sums of two images decode uniquely as signed digits
/// in `[-M, M]`: `ab = a'b'` iff `f(a) + f(b) = f(a') + f(b')`.
#[derive(Clone, Debug)]
pub struct RadixEmbedding {
    prime_order: Vec<u64>,
    radix: BigInt,
    elements: Vec<RationalNumber>,
    images: Vec<BigInt>,
}

impl RadixEmbedding {
    pub fn prime_order(&self) -> &[u64] {
        &self.prime_order
    }

    pub fn radix(&self) -> &BigInt {
        &self.radix
    }

    /// Elements in ascending order, aligned with [`Self::images`].
    pub fn elements(&self) -> &[RationalNumber] {
        &self.elements
    }

    pub fn images(&self) -> &[BigInt] {
        &self.images
    }

    pub fn image(&self, a: &RationalNumber) -> Option<&BigInt> {
        self.elements.binary_search(a).ok().map(|i| &self.images[i])
    }
}

pub fn multiplicative_to_additive_embedding(set: &NumberSet) -> Result<RadixEmbedding> {
    if let Some(bad) = set.iter().find(|a| !a.is_positive()) {
        return Err(Error::Precondition(format!(
            "multiplicative embedding needs positive rationals, got {bad}"
        )));
    }
    let vectors: Vec<ExponentVector> = set.iter().map(factorize).collect::<Result<_>>()?;
    let mut prime_order: Vec<u64> = vectors.iter().flat_map(|v| v.primes()).collect();
    prime_order.sort_unstable();
    prime_order.dedup();

    // The largest entry of a pairwise sum is attained by doubling the
    // largest single entry (elements lacking a prime contribute 0).
    let max_entry = vectors
        .iter()
        .flat_map(|v| v.iter().map(|(_, e)| e.unsigned_abs()))
        .max()
        .unwrap_or(0);
    let radix = BigInt::from(2 * (2 * max_entry) + 1);

    let mut powers = Vec::with_capacity(prime_order.len());
    let mut acc = BigInt::one();
    for _ in &prime_order {
        powers.push(acc.clone());
        acc *= &radix;
    }
    let images = vectors
        .iter()
        .map(|v| {
            v.iter().fold(BigInt::zero(), |sum, (p, e)| {
                let k = prime_order
                    .binary_search(&p)
                    .expect("prime collected above");
                sum + &powers[k] * e
            })
        })
        .collect();
    Ok(RadixEmbedding {
        prime_order,
        radix,
        elements: set.as_slice().to_vec(),
        images,
    })
}
