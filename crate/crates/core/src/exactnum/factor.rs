use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::primes::{is_prime, mul_mod, small_primes, TRIAL_DIVISION_LIMIT};
use super::rational::RationalNumber;
use crate::error::{Error, Result};

/// Prime-exponent coordinates of a positive rational. Only nonzero exponents
/// are stored; negative exponents come from the denominator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ExponentVector(BTreeMap<u64, i64>);

impl ExponentVector {
    pub fn get(&self, prime: u64) -> i64 {
        self.0.get(&prime).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.0.iter().map(|(&p, &e)| (p, e))
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    fn add_exponent(&mut self, prime: u64, e: i64) {
        let entry = self.0.entry(prime).or_insert(0);
        *entry += e;
        if *entry == 0 {
            self.0.remove(&prime);
        }
    }

    /// Coordinate-wise sum, i.e. the vector of the product.
    pub fn sum(&self, other: &ExponentVector) -> ExponentVector {
        let mut out = self.clone();
        for (p, e) in other.iter() {
            out.add_exponent(p, e);
        }
        out
    }

    /// The rational `prod p^e`.
    pub fn evaluate(&self) -> RationalNumber {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (p, e) in self.iter() {
            let pe = num_traits::pow(BigInt::from(p), e.unsigned_abs() as usize);
            if e > 0 {
                num *= pe;
            } else {
                den *= pe;
            }
        }
        RationalNumber::new(num, den).expect("nonzero denominator")
    }
}

impl FromIterator<(u64, i64)> for ExponentVector {
    fn from_iter<I: IntoIterator<Item = (u64, i64)>>(iter: I) -> Self {
        let mut v = ExponentVector::default();
        for (p, e) in iter {
            v.add_exponent(p, e);
        }
        v
    }
}

/// Exponent vector of a positive rational.
pub fn factorize(r: &RationalNumber) -> Result<ExponentVector> {
    if !r.is_positive() {
        return Err(Error::Precondition(format!(
            "factorize needs a positive rational, got {r}"
        )));
    }
    let mut v = ExponentVector::default();
    let num = r.numer().magnitude();
    for (p, e) in factor_natural(num).map_err(|why| Error::Factorization(r.to_string(), why))? {
        v.add_exponent(p, e as i64);
    }
    let den = r.denom().magnitude();
    for (p, e) in factor_natural(den).map_err(|why| Error::Factorization(r.to_string(), why))? {
        v.add_exponent(p, -(e as i64));
    }
    Ok(v)
}

/// Trial division below 10^6, then Pollard-rho on a cofactor below 2^64.
fn factor_natural(n: &BigUint) -> std::result::Result<Vec<(u64, u32)>, String> {
    let mut out = Vec::new();
    if n.is_zero() {
        return Err("zero has no factorization".into());
    }
    let mut rest = n.clone();
    for &p in small_primes() {
        let p_big = BigUint::from(p);
        if &p_big * &p_big > rest {
            break;
        }
        let mut e = 0u32;
        loop {
            let (q, r) = rest.div_rem(&p_big);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            out.push((p as u64, e));
        }
    }
    if rest.is_one() {
        return Ok(out);
    }
    let limit = TRIAL_DIVISION_LIMIT as u64;
    let Some(cofactor) = rest.to_u64() else {
        return Err(format!(
            "cofactor {rest} exceeds 64 bits after trial division below {limit}"
        ));
    };
    let mut factors = Vec::new();
    if cofactor < limit * limit {
        factors.push(cofactor);
    } else {
        split_u64(cofactor, &mut factors);
    }
    factors.sort_unstable();
    for f in factors {
        match out.last_mut() {
            Some((p, e)) if *p == f => *e += 1,
            _ => out.push((f, 1)),
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn split_u64(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    split_u64(d, out);
    split_u64(n / d, out);
}

/// A nontrivial divisor of the odd composite `n` (all its prime factors exceed 10^6).
fn pollard_brent(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g, mut q) = (2u64, 2u64, 1u64, 1u64);
        let mut ys = y;
        let mut r = 1u64;
        const BATCH: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

/// Sign-aware helper: the exponent vector of `|r|` for nonzero `r`.
pub fn factorize_abs(r: &RationalNumber) -> Result<ExponentVector> {
    if r.is_zero() {
        return Err(Error::ZeroInMultiplicative);
    }
    factorize(&r.abs())
}
