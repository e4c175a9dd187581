//! Freiman embeddings.
//!
//! [`multiplicative_to_additive_embedding`] turns products of positive
//! rationals into sums of integers through prime-exponent coordinates read in
//! a signed-digit radix. [`sample_modular_embedding`] maps a set of integers
//! into `F_p^d` with random rational multipliers, keeping the elements on
//! which the map is an injective Freiman homomorphism.

mod modular;
mod radix;

pub use modular::{
    best_of_k_embeddings, sample_modular_embedding, verify_freiman_homomorphism, EmbeddingResult,
    IntegerSet, ModularEmbedding, THETA_BITS,
};
pub use radix::{multiplicative_to_additive_embedding, RadixEmbedding};
