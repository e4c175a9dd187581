//! Extraction of bi-Sidon subsets from finite sets of rationals.
//!
//! A set is bi-Sidon when all its pairwise sums are distinct and all its
//! pairwise products are distinct. [`extractor::extract`] finds such subsets
//! by embedding the input into the plane over a prime field, pulling back a
//! random parabola (an additive Sidon set of the plane), sparsifying, and
//! deleting one element from each surviving multiplicative relation. The
//! multiplicative case is handled symmetrically through prime-exponent
//! coordinates.
//!
//! [`lab`] holds brute-force oracles, dataset generators and the scaling
//! experiment behind the `bisidon` command-line tool.

pub mod embedding;
pub mod energy;
pub mod error;
pub mod exactnum;
pub mod extractor;
pub mod lab;
pub mod parabola;
pub mod stream;

pub use error::{Error, Result};
pub use exactnum::{NumberSet, RationalNumber};
