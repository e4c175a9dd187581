//! Exact arithmetic: rationals, primes, factorization and the affine plane over F_p.

mod factor;
mod field;
mod primes;
mod rational;

pub use factor::{factorize, factorize_abs, ExponentVector};
pub use field::{
    affine_group_order, all_affine_maps, collinear, sample_uniform_affine, uniform_residue,
    AffineMap, FpPoint,
};
pub use primes::{ceil_sqrt, is_prime, mul_mod, next_prime_at_least, pow_mod};
pub use rational::{common_denominator, NumberSet, RationalNumber};
