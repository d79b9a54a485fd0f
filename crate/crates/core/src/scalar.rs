//! Number types the tables are generic over.

use crate::rng::RandomSource;
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt::Debug;

pub trait Scalar: Clone + Debug + Send + Sync {
    fn nil() -> Self;
    fn unit() -> Self;
    fn is_nil(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    /// `self += a * b`
    fn add_mul(&mut self, a: &Self, b: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn mul_usize(&self, k: usize) -> Self;
    /// Division by a positive integer. Integer implementations require the
    /// division to be exact.
    fn div_usize(&self, k: usize) -> Self;
}

impl Scalar for BigInt {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn mul_usize(&self, k: usize) -> Self {
        self * BigInt::from(k)
    }
    fn div_usize(&self, k: usize) -> Self {
        let (q, r) = self.div_rem(&BigInt::from(k));
        assert!(Zero::is_zero(&r), "inexact integer division in a count table");
        q
    }
}

impl Scalar for BigRational {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn mul_usize(&self, k: usize) -> Self {
        self * BigRational::from_integer(BigInt::from(k))
    }
    fn div_usize(&self, k: usize) -> Self {
        self / BigRational::from_integer(BigInt::from(k))
    }
}

impl Scalar for f64 {
    fn nil() -> Self {
        0.0
    }
    fn unit() -> Self {
        1.0
    }
    fn is_nil(&self) -> bool {
        *self == 0.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += *other;
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn mul_usize(&self, k: usize) -> Self {
        self * k as f64
    }
    fn div_usize(&self, k: usize) -> Self {
        self / k as f64
    }
}

/// Scalars that support exact random choices.
pub trait ExactScalar: Scalar {
    /// A uniform point of `[0, total)`, possibly refined lazily.
    type Draw;
    fn draw(total: &Self, rng: &mut RandomSource) -> Self::Draw;
    /// Whether the drawn point lies strictly below `acc`.
    fn below(draw: &mut Self::Draw, acc: &Self, rng: &mut RandomSource) -> bool;
    fn to_ratio(&self) -> BigRational;
}

impl ExactScalar for BigInt {
    type Draw = BigInt;
    fn draw(total: &Self, rng: &mut RandomSource) -> BigInt {
        let bound = total.to_biguint().expect("positive total");
        BigInt::from_biguint(Sign::Plus, rng.below(&bound))
    }
    fn below(draw: &mut BigInt, acc: &Self, _rng: &mut RandomSource) -> bool {
        &*draw < acc
    }
    fn to_ratio(&self) -> BigRational {
        BigRational::from_integer(self.clone())
    }
}

/// Uniform point `total * U` where the bits of `U` are drawn on demand:
/// `U` lies in `[lo / 2^k, (lo + 1) / 2^k)`.
#[derive(Debug, Clone)]
pub struct LazyUniform {
    total: BigRational,
    lo: BigUint,
    k: u64,
}

impl ExactScalar for BigRational {
    type Draw = LazyUniform;
    fn draw(total: &Self, _rng: &mut RandomSource) -> LazyUniform {
        LazyUniform {
            total: total.clone(),
            lo: BigUint::zero(),
            k: 0,
        }
    }
    fn below(draw: &mut LazyUniform, acc: &Self, rng: &mut RandomSource) -> bool {
        // Compare U against r = acc / total.
        let r = acc / &draw.total;
        let (num, den) = (
            r.numer().to_biguint().unwrap_or_default(),
            r.denom().to_biguint().expect("positive denominator"),
        );
        loop {
            let scale = BigUint::one() << draw.k;
            if (&draw.lo + 1u32) * &den <= &num * &scale {
                return true;
            }
            if &draw.lo * &den >= &num * &scale {
                return false;
            }
            draw.lo = (&draw.lo << 1u32) + BigUint::from(rng.next_u32() & 1);
            draw.k += 1;
        }
    }
    fn to_ratio(&self) -> BigRational {
        self.clone()
    }
}

/// Closest double to a big rational, with huge or tiny values saturating.
pub fn ratio_to_f64(v: &BigRational) -> f64 {
    if let Some(x) = v.to_f64() {
        if x.is_finite() && x != 0.0 {
            return x;
        }
    }
    if Zero::is_zero(v) {
        return 0.0;
    }
    // Shift both parts to about 64 significant bits.
    let nb = v.numer().bits() as i64;
    let db = v.denom().bits() as i64;
    let n = shift_to_f64(v.numer(), nb - 64);
    let d = shift_to_f64(v.denom(), db - 64);
    let e = (nb - 64) - (db - 64);
    n / d * 2f64.powi(e.clamp(-2000, 2000) as i32)
}

fn shift_to_f64(x: &BigInt, shift: i64) -> f64 {
    let y = if shift > 0 { x >> shift as usize } else { x << (-shift) as usize };
    y.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lazy_uniform_is_fair() {
        let mut rng = RandomSource::new(7);
        let total = BigRational::new(3.into(), 7.into());
        let cut = BigRational::new(1.into(), 7.into());
        let mut hits = 0;
        let trials = 30_000;
        for _ in 0..trials {
            let mut d = BigRational::draw(&total, &mut rng);
            if BigRational::below(&mut d, &cut, &mut rng) {
                hits += 1;
            }
        }
        let p = hits as f64 / trials as f64;
        assert!((p - 1.0 / 3.0).abs() < 0.02, "{p}");
    }

    #[test]
    fn lazy_uniform_is_consistent() {
        let mut rng = RandomSource::new(1);
        let total = BigRational::from_integer(1.into());
        let mut d = BigRational::draw(&total, &mut rng);
        let half = BigRational::new(1.into(), 2.into());
        let first = BigRational::below(&mut d, &half, &mut rng);
        assert_eq!(BigRational::below(&mut d, &half, &mut rng), first);
        assert!(BigRational::below(&mut d, &total, &mut rng));
        assert!(!BigRational::below(&mut d, &BigRational::zero(), &mut rng));
    }

    #[test]
    fn big_ratio_to_float() {
        let big = BigInt::from(3) << 3000usize;
        let v = BigRational::new(big.clone(), (BigInt::from(2) << 3000usize) + 1);
        assert!((ratio_to_f64(&v) - 1.5).abs() < 1e-12);
        assert_eq!(ratio_to_f64(&BigRational::new(1.into(), 4.into())), 0.25);
    }
}
