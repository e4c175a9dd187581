//! Parabolas in the plane over F_p: affine images of `P0 = {(t, t²)}`.
//!
//! Every parabola has `p` points, is an additive Sidon set of `F_p²` and has
//! no three collinear points. A uniformly random invertible affine map gives
//! a uniformly random parabola since every parabola's stabilizer in the
//! affine group has the same order `p(p−1)`.

use std::collections::HashSet;

use num_bigint::BigInt;
use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactnum::{
    collinear, is_prime, mul_mod, sample_uniform_affine, AffineMap, FpPoint, RationalNumber,
};
use crate::stream::substream;

/// Monte-Carlo trials per substream chunk.
pub const MC_CHUNK: u64 = 1 << 16;

/// Largest prime for which the exhaustive enumerations are run.
pub const EXHAUSTIVE_MAX_P: u64 = 7;

#[derive(Clone, Debug)]
pub struct Parabola {
    p: u64,
    generator: AffineMap,
    inverse: AffineMap,
    points: Vec<FpPoint>,
}

/// Parabolas are equal as point sets; distinct generators can give the same set.
impl PartialEq for Parabola {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.points == other.points
    }
}

impl Eq for Parabola {}

impl Parabola {
    /// `g(P0)`.
    pub fn from_generator(generator: AffineMap) -> Parabola {
        let p = generator.modulus();
        let mut points: Vec<FpPoint> = (0..p)
            .map(|t| {
                let (x, y) = generator.apply_raw(t, mul_mod(t, t, p));
                FpPoint { x, y, p }
            })
            .collect();
        points.sort_unstable();
        Parabola {
            p,
            inverse: generator.invert(),
            generator,
            points,
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn generator(&self) -> &AffineMap {
        &self.generator
    }

    /// Points in ascending `(x, y)` order.
    pub fn points(&self) -> &[FpPoint] {
        &self.points
    }

    pub fn contains(&self, v: &FpPoint) -> bool {
        v.p == self.p && self.contains_raw(v.x, v.y)
    }

    #[inline]
    pub(crate) fn contains_raw(&self, x: u64, y: u64) -> bool {
        on_standard_parabola(&self.inverse, x, y)
    }
}

#[inline]
fn on_standard_parabola(inverse: &AffineMap, x: u64, y: u64) -> bool {
    let p = inverse.modulus();
    let (u, v) = inverse.apply_raw(x % p, y % p);
    mul_mod(u, u, p) == v
}

fn require_prime(p: u64, min: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not prime")));
    }
    if p < min {
        return Err(Error::Precondition(format!("p = {p} is below {min}")));
    }
    Ok(())
}

pub fn standard_parabola(p: u64) -> Result<Parabola> {
    require_prime(p, 2)?;
    Ok(Parabola::from_generator(AffineMap::identity(p)))
}

/// `g(P0)` for a uniformly random invertible affine `g`. Needs `p >= 3`:
/// over F_2 a parabola is any two points.
pub fn random_parabola<R: RngCore + ?Sized>(p: u64, rng: &mut R) -> Result<Parabola> {
    require_prime(p, 3)?;
    Ok(Parabola::from_generator(sample_uniform_affine(p, rng)))
}

/// `P_s = {(x, y) : (x + s y)² = x + s² y}` for `s ∈ F_p \ {0, 1}`: the
/// `p − 2` parabolas through `(0,0)`, `(1,0)` and `(0,1)`.
///
/// `(x, y) ↦ (x + s y, x + s² y)` maps `P_s` onto `P0` and has determinant
/// `s(s − 1) ≠ 0`, so its inverse generates `P_s`. Each returned parabola's
/// points are the solution set of the defining equation, found by scanning
/// the plane; the generator is checked against it.
pub fn parabolas_through_unit_triple(p: u64) -> Result<Vec<Parabola>> {
    require_prime(p, 3)?;
    (2..p)
        .map(|s| {
            let s2 = mul_mod(s, s, p);
            let to_standard =
                AffineMap::new([[1, s], [1, s2]], FpPoint::new(0, 0, p)).expect("s(s-1) != 0");
            let mut solutions = Vec::with_capacity(p as usize);
            for x in 0..p {
                for y in 0..p {
                    let u = (x + mul_mod(s, y, p)) % p;
                    if mul_mod(u, u, p) == (x + mul_mod(s2, y, p)) % p {
                        solutions.push(FpPoint { x, y, p });
                    }
                }
            }
            let parabola = Parabola::from_generator(to_standard.invert());
            if parabola.points != solutions {
                return Err(Error::Internal(format!(
                    "P_{s} generator disagrees with its equation"
                )));
            }
            Ok(parabola)
        })
        .collect()
}

/// `Pr[{v1, v2, v3} ⊂ P] = (p − 2) / (p² (p + 1)(p − 1))` for any noncollinear triple.
pub fn triple_containment_probability_exact(p: u64) -> Result<RationalNumber> {
    require_prime(p, 3)?;
    let pb = BigInt::from(p);
    RationalNumber::new(&pb - 2, &pb * &pb * (&pb + 1) * (&pb - 1))
}

/// Sidon in `F_p²`: the `p(p+1)/2` sums `u + v` over unordered pairs
/// (with repetition) are pairwise distinct.
pub fn is_plane_sidon(points: &[FpPoint]) -> bool {
    let mut sums = HashSet::with_capacity(points.len() * (points.len() + 1) / 2);
    for (i, u) in points.iter().enumerate() {
        for v in &points[i..] {
            let Ok(s) = u.add(v) else { return false };
            if !sums.insert((s.x, s.y)) {
                return false;
            }
        }
    }
    true
}

pub fn no_three_collinear(points: &[FpPoint]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if collinear(&points[i], &points[j], &points[k]) {
                    return false;
                }
            }
        }
    }
    true
}

/// Every distinct parabola over F_p with the number of affine maps producing
/// it, in ascending order of point sets. Exhaustive; `p <= 7`.
pub fn enumerate_parabolas(p: u64) -> Result<Vec<(Vec<FpPoint>, u64)>> {
    require_prime(p, 3)?;
    if p > EXHAUSTIVE_MAX_P {
        return Err(Error::Precondition(format!(
            "exhaustive enumeration is limited to p <= {EXHAUSTIVE_MAX_P}"
        )));
    }
    let mut counts = std::collections::BTreeMap::<Vec<FpPoint>, u64>::new();
    for g in crate::exactnum::all_affine_maps(p) {
        *counts
            .entry(Parabola::from_generator(g).points)
            .or_default() += 1;
    }
    Ok(counts.into_iter().collect())
}

/// Hit count of a Monte-Carlo estimate. Comparisons against targets are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McEstimate {
    pub hits: u64,
    pub trials: u64,
}

impl McEstimate {
    pub fn estimate(&self) -> RationalNumber {
        RationalNumber::new(BigInt::from(self.hits), BigInt::from(self.trials.max(1)))
            .expect("positive denominator")
    }

    /// Binomial variance of the estimate, `p̂(1 − p̂)/n`.
    pub fn variance(&self) -> RationalNumber {
        let n = self.trials.max(1) as i64;
        let e = self.estimate();
        &(&e * &(&RationalNumber::one() - &e)) * &RationalNumber::from_ratio(1, n).expect("n > 0")
    }

    /// Standard error, for reporting.
    pub fn stderr(&self) -> f64 {
        self.variance().to_f64().sqrt()
    }

    /// `|p̂ − target| <= k · stderr`.
    pub fn within_sigmas(&self, target: &RationalNumber, k: u32) -> bool {
        let diff = &self.estimate() - target;
        let k2 = RationalNumber::from((k * k) as i64);
        &diff * &diff <= &k2 * &self.variance()
    }

    /// `p̂ <= bound + k · stderr`.
    pub fn at_most(&self, bound: &RationalNumber, k: u32) -> bool {
        let diff = &self.estimate() - bound;
        !diff.is_positive() || self.within_sigmas(bound, k)
    }
}

/// Fraction of random parabolas containing all of `points` (3 or 4 distinct
/// points with a common prime modulus `p >= 3`). Trials run in chunks of
/// [`MC_CHUNK`], chunk `c` on substream `c` of a seed drawn from `rng`.
pub fn estimate_containment_probability<R: RngCore + ?Sized>(
    points: &[FpPoint],
    trials: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    if !(3..=4).contains(&points.len()) {
        return Err(Error::Precondition("expected 3 or 4 points".into()));
    }
    let p = points[0].p;
    if let Some(v) = points.iter().find(|v| v.p != p) {
        return Err(Error::ModulusMismatch(p, v.p));
    }
    require_prime(p, 3)?;
    let distinct: HashSet<_> = points.iter().map(|v| (v.x, v.y)).collect();
    if distinct.len() != points.len() {
        return Err(Error::Precondition("points must be distinct".into()));
    }
    if trials == 0 {
        return Err(Error::Precondition("trials must be positive".into()));
    }
    let base = rng.next_u64();
    let chunks = trials.div_ceil(MC_CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(base, c);
            let n = MC_CHUNK.min(trials - c * MC_CHUNK);
            (0..n)
                .filter(|_| {
                    let inverse = sample_uniform_affine(p, &mut rng).invert();
                    points
                        .iter()
                        .all(|v| on_standard_parabola(&inverse, v.x, v.y))
                })
                .count() as u64
        })
        .sum();
    Ok(McEstimate { hits, trials })
}
