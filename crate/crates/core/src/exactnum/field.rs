//! Points of the plane over F_p and the affine group acting on it.

use rand::RngCore;
use serde::Serialize;

use super::primes::{mul_mod, pow_mod};
use crate::error::{Error, Result};

/// Uniform residue in `[0, p)`: draws 64-bit words and rejects the top
/// partial block so that every residue has the same number of preimages.
pub fn uniform_residue<R: RngCore + ?Sized>(p: u64, rng: &mut R) -> u64 {
    debug_assert!(p > 0);
    let zone = u64::MAX - (u64::MAX % p + 1) % p;
    loop {
        let w = rng.next_u64();
        if w <= zone {
            return w % p;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FpPoint {
    pub x: u64,
    pub y: u64,
    #[serde(skip)]
    pub p: u64,
}

impl FpPoint {
    pub fn new(x: u64, y: u64, p: u64) -> Self {
        Self {
            x: x % p,
            y: y % p,
            p,
        }
    }

    pub fn add(&self, other: &FpPoint) -> Result<FpPoint> {
        check_modulus(self.p, other.p)?;
        Ok(FpPoint::new(self.x + other.x, self.y + other.y, self.p))
    }
}

fn check_modulus(a: u64, b: u64) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::ModulusMismatch(a, b))
    }
}

/// `v -> M v + t` over F_p with `det M != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AffineMap {
    matrix: [[u64; 2]; 2],
    translation: FpPoint,
}

impl AffineMap {
    pub fn new(matrix: [[u64; 2]; 2], translation: FpPoint) -> Result<Self> {
        let p = translation.p;
        let matrix = matrix.map(|row| row.map(|e| e % p));
        let g = Self {
            matrix,
            translation,
        };
        if g.det() == 0 {
            return Err(Error::Precondition("singular affine matrix".into()));
        }
        Ok(g)
    }

    pub fn identity(p: u64) -> Self {
        Self {
            matrix: [[1, 0], [0, 1]],
            translation: FpPoint::new(0, 0, p),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.translation.p
    }

    pub fn matrix(&self) -> [[u64; 2]; 2] {
        self.matrix
    }

    pub fn translation(&self) -> FpPoint {
        self.translation
    }

    pub fn det(&self) -> u64 {
        let p = self.modulus();
        let [[a, b], [c, d]] = self.matrix;
        (mul_mod(a, d, p) + p - mul_mod(b, c, p)) % p
    }

    /// `M v + t`. Unchecked modulus; callers inside the crate guarantee it.
    #[inline]
    pub(crate) fn apply_raw(&self, x: u64, y: u64) -> (u64, u64) {
        let p = self.modulus();
        let [[a, b], [c, d]] = self.matrix;
        let nx = (mul_mod(a, x, p) + mul_mod(b, y, p) + self.translation.x) % p;
        let ny = (mul_mod(c, x, p) + mul_mod(d, y, p) + self.translation.y) % p;
        (nx, ny)
    }

    pub fn apply(&self, v: &FpPoint) -> Result<FpPoint> {
        check_modulus(self.modulus(), v.p)?;
        let (x, y) = self.apply_raw(v.x, v.y);
        Ok(FpPoint { x, y, p: v.p })
    }

    /// `h` with `h(g(v)) = v` for all `v`.
    pub fn invert(&self) -> AffineMap {
        let p = self.modulus();
        let det_inv = pow_mod(self.det(), p - 2, p);
        let [[a, b], [c, d]] = self.matrix;
        let neg = |v: u64| (p - v % p) % p;
        let inv = [
            [mul_mod(d, det_inv, p), mul_mod(neg(b), det_inv, p)],
            [mul_mod(neg(c), det_inv, p), mul_mod(a, det_inv, p)],
        ];
        let t = self.translation;
        let tx = (mul_mod(inv[0][0], t.x, p) + mul_mod(inv[0][1], t.y, p)) % p;
        let ty = (mul_mod(inv[1][0], t.x, p) + mul_mod(inv[1][1], t.y, p)) % p;
        AffineMap {
            matrix: inv,
            translation: FpPoint::new(neg(tx), neg(ty), p),
        }
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &AffineMap) -> Result<AffineMap> {
        let p = self.modulus();
        check_modulus(p, other.modulus())?;
        let m = self.matrix;
        let n = other.matrix;
        let mut prod = [[0u64; 2]; 2];
        for (i, row) in prod.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (mul_mod(m[i][0], n[0][j], p) + mul_mod(m[i][1], n[1][j], p)) % p;
            }
        }
        let (tx, ty) = self.apply_raw(other.translation.x, other.translation.y);
        Ok(AffineMap {
            matrix: prod,
            translation: FpPoint::new(tx, ty, p),
        })
    }
}

/// Order of `Aff(F_p^2)`: `p^2 (p^2 - 1)(p^2 - p)`.
pub fn affine_group_order(p: u64) -> u128 {
    let p = p as u128;
    p * p * (p * p - 1) * (p * p - p)
}

/// Uniform over all invertible affine maps: four uniform residues for the
/// matrix, redrawn while singular, then a uniform translation.
pub fn sample_uniform_affine<R: RngCore + ?Sized>(p: u64, rng: &mut R) -> AffineMap {
    let matrix = loop {
        let m = [
            [uniform_residue(p, rng), uniform_residue(p, rng)],
            [uniform_residue(p, rng), uniform_residue(p, rng)],
        ];
        let det = (mul_mod(m[0][0], m[1][1], p) + p - mul_mod(m[0][1], m[1][0], p)) % p;
        if det != 0 {
            break m;
        }
    };
    let translation = FpPoint {
        x: uniform_residue(p, rng),
        y: uniform_residue(p, rng),
        p,
    };
    AffineMap {
        matrix,
        translation,
    }
}

/// Every invertible affine map of the plane over F_p, in a fixed order.
pub fn all_affine_maps(p: u64) -> impl Iterator<Item = AffineMap> {
    let r = 0..p;
    let mats = r.clone().flat_map(move |a| {
        (0..p).flat_map(move |b| (0..p).flat_map(move |c| (0..p).map(move |d| [[a, b], [c, d]])))
    });
    mats.filter(move |m| {
        !(mul_mod(m[0][0], m[1][1], p) + p - mul_mod(m[0][1], m[1][0], p)).is_multiple_of(p)
    })
    .flat_map(move |m| {
        (0..p).flat_map(move |tx| {
            (0..p).map(move |ty| AffineMap {
                matrix: m,
                translation: FpPoint { x: tx, y: ty, p },
            })
        })
    })
}

/// Whether three points of the plane lie on a common line.
pub fn collinear(a: &FpPoint, b: &FpPoint, c: &FpPoint) -> bool {
    let p = a.p;
    let (ux, uy) = ((b.x + p - a.x) % p, (b.y + p - a.y) % p);
    let (vx, vy) = ((c.x + p - a.x) % p, (c.y + p - a.y) % p);
    mul_mod(ux, vy, p) == mul_mod(uy, vx, p)
}
