use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{is_prime, RationalNumber};

/// Fractional bits kept when approximating `N^e` for irrational powers.
const POWER_BITS: usize = 64;

/// Number of doublings of `c` tried by the adaptive sweep after the base value.
pub const ADAPTIVE_STEPS: u32 = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchChoice {
    #[default]
    Auto,
    AdditiveFirst,
    MultiplicativeFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Build an additive Sidon set, then delete multiplicative relations.
    AdditiveFirst,
    /// Build a multiplicative Sidon set, then delete additive relations.
    MultiplicativeFirst,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::AdditiveFirst => "additive_first",
            Branch::MultiplicativeFirst => "multiplicative_first",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub delta: RationalNumber,
    pub c: RationalNumber,
    pub q_override: Option<RationalNumber>,
    pub p_override: Option<u64>,
    pub d: usize,
    pub trials: usize,
    pub embedding_retries: usize,
    pub branch: BranchChoice,
    pub adaptive_c: bool,
    pub seed: u64,
    /// Fill `wall_ms` in traces. Off by default so outputs are reproducible.
    pub record_timing: bool,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            delta: RationalNumber::from_ratio(7, 26).expect("nonzero"),
            c: RationalNumber::from_ratio(1, 1024).expect("nonzero"),
            q_override: None,
            p_override: None,
            d: 2,
            trials: 32,
            embedding_retries: 16,
            branch: BranchChoice::Auto,
            adaptive_c: true,
            seed: 0,
            record_timing: false,
        }
    }
}

impl ExtractorConfig {
    pub fn with_seed(seed: u64) -> Self {
        ExtractorConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = RationalNumber::zero();
        let one = RationalNumber::one();
        if self.c <= zero {
            return Err(Error::InvalidInput(format!(
                "c must be positive, got {}",
                self.c
            )));
        }
        if self.delta <= zero || self.delta >= one {
            return Err(Error::InvalidInput(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if let Some(q) = &self.q_override {
            if *q <= zero || *q > one {
                return Err(Error::InvalidInput(format!(
                    "q must lie in (0, 1], got {q}"
                )));
            }
        }
        if let Some(p) = self.p_override {
            if p < 3 || !is_prime(p) {
                return Err(Error::InvalidInput(format!(
                    "p must be an odd prime, got {p}"
                )));
            }
        }
        if self.d != 2 {
            return Err(Error::InvalidInput(format!(
                "the parabola pullback lives in the plane; d must be 2, got {}",
                self.d
            )));
        }
        if self.trials == 0 || self.embedding_retries == 0 {
            return Err(Error::InvalidInput(
                "trials and embedding retries must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `δ/3 − 1/6`, the exponent of `N` in the sampling rate.
    pub fn rate_exponent(&self) -> RationalNumber {
        &(&self.delta * &RationalNumber::from_ratio(1, 3).expect("nonzero"))
            - &RationalNumber::from_ratio(1, 6).expect("nonzero")
    }

    /// `1/3 + δ/3`, the exponent of the guaranteed subset size.
    pub fn size_exponent(&self) -> RationalNumber {
        &(&self.delta + &RationalNumber::one())
            * &RationalNumber::from_ratio(1, 3).expect("nonzero")
    }

    /// Checks the default constants against each other: `δ = 7/26` gives a
    /// sampling rate `N^(−1/13)` and a size exponent `33/78`.
    pub fn self_check(&self) -> Result<()> {
        let default = ExtractorConfig::default();
        let expect_rate = RationalNumber::from_ratio(-1, 13).expect("nonzero");
        let expect_size = RationalNumber::from_ratio(33, 78).expect("nonzero");
        if default.rate_exponent() != expect_rate || default.size_exponent() != expect_size {
            return Err(Error::Internal("default exponents are inconsistent".into()));
        }
        Ok(())
    }

    /// `min(1, c · N^(δ/3 − 1/6))`, or the override.
    pub fn q_for(&self, n: usize) -> Result<RationalNumber> {
        match &self.q_override {
            Some(q) => Ok(q.clone()),
            None => rate(n, &self.c, &self.rate_exponent()),
        }
    }

    /// The sampling rates tried for an input of size `n`, without repeats
    /// once the rate saturates at 1.
    pub fn pilot_rates(&self, n: usize) -> Result<Vec<(RationalNumber, RationalNumber)>> {
        if self.q_override.is_some() || !self.adaptive_c {
            return Ok(vec![(self.c.clone(), self.q_for(n)?)]);
        }
        let exponent = self.rate_exponent();
        let mut out = Vec::new();
        for j in 0..=ADAPTIVE_STEPS {
            let c = &self.c * &RationalNumber::from_integer(BigInt::one() << j);
            let q = rate(n, &c, &exponent)?;
            let saturated = q == RationalNumber::one();
            out.push((c, q));
            if saturated {
                break;
            }
        }
        Ok(out)
    }
}

fn rate(n: usize, c: &RationalNumber, exponent: &RationalNumber) -> Result<RationalNumber> {
    let q = c * &power(n, exponent)?;
    Ok(if q > RationalNumber::one() {
        RationalNumber::one()
    } else {
        q
    })
}

/// `N^e`, exact when the root is rational, otherwise truncated to
/// `POWER_BITS` fractional bits of `N^|e|`.
fn power(n: usize, e: &RationalNumber) -> Result<RationalNumber> {
    if n <= 1 {
        return Ok(RationalNumber::one());
    }
    let too_big = || Error::InvalidInput(format!("exponent {e} is too large"));
    let a = e.numer().abs().to_u32().ok_or_else(too_big)?;
    let b = e
        .denom()
        .to_u32()
        .filter(|&b| b <= 1 << 12)
        .ok_or_else(too_big)?;
    let scaled = num_traits::pow(BigUint::from(n), a as usize) << (POWER_BITS * b as usize);
    let root = BigInt::from(scaled.nth_root(b));
    let unit = BigInt::one() << POWER_BITS;
    if e.numer().is_negative() {
        RationalNumber::new(unit, root)
    } else {
        RationalNumber::new(root, unit)
    }
}
