//! Exact scalars: arbitrary-precision rationals with an `i64` fast path, plus
//! an opt-in modular mode.
//!
//! Every coefficient in the crate is an [`ExactScalar`]. In exact mode all
//! ring operations are exact and equality is decidable. In modular mode all
//! values are residues modulo a fixed odd prime `p`; this turns the decision
//! procedures into one-sided tests (a nonzero quantity may be reported as
//! zero with probability at most `deg/p`), which is acceptable as a benchmark
//! accelerator but never the default.
//!
//! Mixing exact and modular values in one operation reduces the exact side
//! modulo `p`; mixing two different primes is a programming error and panics.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arithmetic mode for a computation: exact rationals or residues mod `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithMode {
    Exact,
    Modular(u64),
}

impl ArithMode {
    /// Modular mode with a validated prime. Requires `2 < p < 2^63`.
    pub fn modular(p: u64) -> Result<ArithMode> {
        if p <= 2 {
            return Err(Error::Modular(format!("modulus {p} must exceed 2")));
        }
        if p >= 1 << 63 {
            return Err(Error::Modular(format!("modulus {p} must be below 2^63")));
        }
        if !is_prime_u64(p) {
            return Err(Error::Modular(format!("modulus {p} is not prime")));
        }
        Ok(ArithMode::Modular(p))
    }
}

impl fmt::Display for ArithMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithMode::Exact => write!(f, "exact"),
            ArithMode::Modular(p) => write!(f, "mod {p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    /// Integer fitting in a machine word. The canonical form for such values.
    Small(i64),
    /// Integer outside the `i64` range.
    Big(BigInt),
    /// Non-integer rational, normalized with positive denominator.
    Ratio(BigRational),
    /// Residue `value` modulo the prime `prime`, with `value < prime`.
    Mod { value: u64, prime: u64 },
}

/// An exact scalar: arbitrary-precision rational in exact mode, residue in
/// modular mode. Immutable value semantics; all operations are total except
/// division by zero and mixed-prime arithmetic.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactScalar(Repr);

fn norm_i128(v: i128) -> Repr {
    if let Ok(s) = i64::try_from(v) {
        Repr::Small(s)
    } else {
        Repr::Big(BigInt::from(v))
    }
}

fn norm_big(v: BigInt) -> Repr {
    match v.to_i64() {
        Some(s) => Repr::Small(s),
        None => Repr::Big(v),
    }
}

fn norm_ratio(v: BigRational) -> Repr {
    if v.is_integer() {
        norm_big(v.to_integer())
    } else {
        Repr::Ratio(v)
    }
}

fn mod_reduce_big(v: &BigInt, p: u64) -> u64 {
    let r = v.mod_floor(&BigInt::from(p));
    r.to_u64().expect("residue fits u64")
}

fn mod_reduce_i64(v: i64, p: u64) -> u64 {
    let r = (v as i128).rem_euclid(p as i128);
    r as u64
}

fn mod_add(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b; // p < 2^63 keeps this from overflowing
    if s >= p {
        s - p
    } else {
        s
    }
}

fn mod_sub(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

fn mod_mul(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn mod_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mod_mul(acc, base, p);
        }
        base = mod_mul(base, base, p);
        exp >>= 1;
    }
    acc
}

fn mod_inv(a: u64, p: u64) -> Result<u64> {
    if a % p == 0 {
        return Err(Error::Modular(format!("no inverse of 0 mod {p}")));
    }
    // p prime, so Fermat works.
    Ok(mod_pow(a, p - 2, p))
}

/// Deterministic Miller-Rabin for `u64` (the listed witnesses cover 2^64).
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mod_mul(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar(Repr::Small(0))
    }

    pub fn one() -> Self {
        ExactScalar(Repr::Small(1))
    }

    pub fn from_int(v: BigInt) -> Self {
        ExactScalar(norm_big(v))
    }

    /// Exact rational `num/den`. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        ExactScalar(norm_ratio(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }

    pub fn from_ratio(num: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::SyntaxError {
                line: 0,
                message: "zero denominator".into(),
            });
        }
        Ok(ExactScalar(norm_ratio(BigRational::new(num, den))))
    }

    /// Residue `v mod p`. `p` must already be validated as prime.
    pub fn modular(v: i64, p: u64) -> Self {
        ExactScalar(Repr::Mod {
            value: mod_reduce_i64(v, p),
            prime: p,
        })
    }

    pub fn mode(&self) -> ArithMode {
        match &self.0 {
            Repr::Mod { prime, .. } => ArithMode::Modular(*prime),
            _ => ArithMode::Exact,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(v) => *v == 0,
            Repr::Big(_) | Repr::Ratio(_) => false, // canonical form excludes small values
            Repr::Mod { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.0 {
            Repr::Small(v) => *v == 1,
            Repr::Mod { value, .. } => *value == 1,
            _ => false,
        }
    }

    pub fn is_integer(&self) -> bool {
        !matches!(&self.0, Repr::Ratio(_))
    }

    /// Sign of an exact value: -1, 0 or +1. `None` in modular mode, where
    /// sign is meaningless.
    pub fn sign(&self) -> Option<i8> {
        match &self.0 {
            Repr::Small(v) => Some(v.signum() as i8),
            Repr::Big(v) => Some(if v.is_negative() { -1 } else { 1 }),
            Repr::Ratio(v) => Some(if v.is_negative() { -1 } else { 1 }),
            Repr::Mod { .. } => None,
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(v) => Some(*v),
            _ => None,
        }
    }

    /// Convert into the target mode. Exact values reduce mod `p`; a rational
    /// whose denominator is divisible by `p` is rejected. Converting a
    /// modular value back to exact is not defined and is rejected.
    pub fn to_mode(&self, mode: ArithMode) -> Result<ExactScalar> {
        match (mode, &self.0) {
            (ArithMode::Exact, Repr::Mod { .. }) => Err(Error::Modular(
                "cannot lift a modular residue back to exact mode".into(),
            )),
            (ArithMode::Exact, _) => Ok(self.clone()),
            (ArithMode::Modular(p), _) => {
                let value = self.try_residue(p)?;
                Ok(ExactScalar(Repr::Mod { value, prime: p }))
            }
        }
    }

    fn try_residue(&self, p: u64) -> Result<u64> {
        match &self.0 {
            Repr::Small(v) => Ok(mod_reduce_i64(*v, p)),
            Repr::Big(v) => Ok(mod_reduce_big(v, p)),
            Repr::Ratio(v) => {
                let den = mod_reduce_big(v.denom(), p);
                if den == 0 {
                    return Err(Error::Modular(format!(
                        "denominator of {v} is divisible by the modulus {p}"
                    )));
                }
                let num = mod_reduce_big(v.numer(), p);
                Ok(mod_mul(num, mod_inv(den, p)?, p))
            }
            Repr::Mod { value, prime } => {
                if *prime == p {
                    Ok(*value)
                } else {
                    panic!("mixed moduli {prime} and {p}")
                }
            }
        }
    }

    fn residue(&self, p: u64) -> u64 {
        self.try_residue(p)
            .expect("exact value not reducible modulo the computation prime")
    }

    fn as_big(&self) -> BigInt {
        match &self.0 {
            Repr::Small(v) => BigInt::from(*v),
            Repr::Big(v) => v.clone(),
            _ => unreachable!("as_big on non-integer"),
        }
    }

    fn as_ratio(&self) -> BigRational {
        match &self.0 {
            Repr::Small(v) => BigRational::from(BigInt::from(*v)),
            Repr::Big(v) => BigRational::from(v.clone()),
            Repr::Ratio(v) => v.clone(),
            Repr::Mod { .. } => unreachable!("as_ratio on modular value"),
        }
    }

    pub fn neg_assign(&mut self) {
        match &mut self.0 {
            Repr::Small(v) if *v != i64::MIN => *v = -*v,
            Repr::Mod { value, prime } => {
                if *value != 0 {
                    *value = *prime - *value;
                }
            }
            _ => {
                let old = std::mem::replace(&mut self.0, Repr::Small(0));
                self.0 = match old {
                    Repr::Small(v) => norm_i128(-(v as i128)),
                    Repr::Big(v) => norm_big(-v),
                    Repr::Ratio(v) => Repr::Ratio(-v),
                    Repr::Mod { .. } => unreachable!(),
                };
            }
        }
    }

    /// Multiplicative inverse; error on zero.
    pub fn inv(&self) -> Result<ExactScalar> {
        match &self.0 {
            Repr::Small(0) => Err(Error::SolveFailure("division by zero".into())),
            Repr::Mod { value, prime } => Ok(ExactScalar(Repr::Mod {
                value: mod_inv(*value, *prime)?,
                prime: *prime,
            })),
            _ => Ok(ExactScalar(norm_ratio(self.as_ratio().recip()))),
        }
    }

    pub fn checked_div(&self, rhs: &ExactScalar) -> Result<ExactScalar> {
        Ok(self * &rhs.inv()?)
    }

    pub fn pow(&self, exp: u32) -> ExactScalar {
        let mut acc = match self.mode() {
            ArithMode::Exact => ExactScalar::one(),
            ArithMode::Modular(p) => ExactScalar::modular(1, p),
        };
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Fused `self += a * b`, the hot operation of every engine.
    pub fn add_mul_assign(&mut self, a: &ExactScalar, b: &ExactScalar) {
        if let (Repr::Small(x), Repr::Small(y), Repr::Small(z)) = (&self.0, &a.0, &b.0) {
            let acc = *x as i128 + (*y as i128) * (*z as i128);
            self.0 = norm_i128(acc);
            return;
        }
        let prod = a * b;
        *self += &prod;
    }

    /// Exact integer factorial of a small argument.
    pub fn factorial(n: u64) -> ExactScalar {
        let mut acc = BigInt::one();
        for k in 2..=n {
            acc *= k;
        }
        ExactScalar::from_int(acc)
    }
}

impl Default for ExactScalar {
    fn default() -> Self {
        ExactScalar::zero()
    }
}

impl From<i64> for ExactScalar {
    fn from(v: i64) -> Self {
        ExactScalar(Repr::Small(v))
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(v) => write!(f, "{v}"),
            Repr::Big(v) => write!(f, "{v}"),
            Repr::Ratio(v) => write!(f, "{}/{}", v.numer(), v.denom()),
            Repr::Mod { value, .. } => write!(f, "{value}"),
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Mod { value, prime } => write!(f, "{value} (mod {prime})"),
            _ => fmt::Display::fmt(self, f),
        }
    }
}

impl FromStr for ExactScalar {
    type Err = Error;

    /// Parses `p` or `p/q` with optional sign, e.g. `-3`, `2/3`, `-7/2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::SyntaxError {
            line: 0,
            message: format!("invalid rational `{s}`: {m}"),
        };
        let (num_s, den_s) = match s.split_once('/') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let num = BigInt::from_str(num_s.trim()).map_err(|_| bad("bad numerator"))?;
        match den_s {
            None => Ok(ExactScalar::from_int(num)),
            Some(d) => {
                let den = BigInt::from_str(d.trim()).map_err(|_| bad("bad denominator"))?;
                if den.is_zero() {
                    return Err(bad("zero denominator"));
                }
                Ok(ExactScalar(norm_ratio(BigRational::new(num, den))))
            }
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait<&ExactScalar> for &ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &ExactScalar) -> ExactScalar {
                binop(self, rhs, BinOp::$trait)
            }
        }
        impl std::ops::$trait for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                binop(&self, &rhs, BinOp::$trait)
            }
        }
    };
}

enum BinOp {
    Add,
    Sub,
    Mul,
}

fn binop(a: &ExactScalar, b: &ExactScalar, op: BinOp) -> ExactScalar {
    use Repr::*;
    let repr = match (&a.0, &b.0) {
        (Small(x), Small(y)) => {
            let (x, y) = (*x as i128, *y as i128);
            norm_i128(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
            })
        }
        (Mod { prime, .. }, _) | (_, Mod { prime, .. }) => {
            let p = *prime;
            let (x, y) = (a.residue(p), b.residue(p));
            Mod {
                value: match op {
                    BinOp::Add => mod_add(x, y, p),
                    BinOp::Sub => mod_sub(x, y, p),
                    BinOp::Mul => mod_mul(x, y, p),
                },
                prime: p,
            }
        }
        (Ratio(_), _) | (_, Ratio(_)) => {
            let (x, y) = (a.as_ratio(), b.as_ratio());
            norm_ratio(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
            })
        }
        _ => {
            let (x, y) = (a.as_big(), b.as_big());
            norm_big(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
            })
        }
    };
    ExactScalar(repr)
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl std::ops::Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        let mut v = self.clone();
        v.neg_assign();
        v
    }
}

impl std::ops::Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(mut self) -> ExactScalar {
        self.neg_assign();
        self
    }
}

impl std::ops::AddAssign<&ExactScalar> for ExactScalar {
    fn add_assign(&mut self, rhs: &ExactScalar) {
        if let (Repr::Small(x), Repr::Small(y)) = (&self.0, &rhs.0) {
            self.0 = norm_i128(*x as i128 + *y as i128);
        } else {
            *self = &*self + rhs;
        }
    }
}

impl std::ops::SubAssign<&ExactScalar> for ExactScalar {
    fn sub_assign(&mut self, rhs: &ExactScalar) {
        if let (Repr::Small(x), Repr::Small(y)) = (&self.0, &rhs.0) {
            self.0 = norm_i128(*x as i128 - *y as i128);
        } else {
            *self = &*self - rhs;
        }
    }
}

impl std::ops::MulAssign<&ExactScalar> for ExactScalar {
    fn mul_assign(&mut self, rhs: &ExactScalar) {
        *self = &*self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_overflow_promotes() {
        let a = ExactScalar::from(i64::MAX);
        let b = &a + &ExactScalar::one();
        assert!(b.to_i64().is_none());
        let back = &b - &ExactScalar::one();
        assert_eq!(back.to_i64(), Some(i64::MAX));
        assert_eq!(back, a);
    }

    #[test]
    fn rational_normalizes_to_integer() {
        let half = ExactScalar::ratio(1, 2);
        let two = ExactScalar::from(2);
        assert_eq!(&half * &two, ExactScalar::one());
        assert!( (&half + &half).is_one());
        assert_eq!(ExactScalar::ratio(4, 2), ExactScalar::from(2));
        assert_eq!(ExactScalar::ratio(-3, -6), ExactScalar::ratio(1, 2));
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["0", "17", "-3", "2/3", "-7/2"] {
            let v: ExactScalar = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        assert_eq!("4/6".parse::<ExactScalar>().unwrap().to_string(), "2/3");
        assert!("1/0".parse::<ExactScalar>().is_err());
        assert!("x".parse::<ExactScalar>().is_err());
    }

    #[test]
    fn modular_arithmetic() {
        let p = 101;
        let a = ExactScalar::modular(-1, p);
        assert_eq!(a.to_string(), "100");
        let b = ExactScalar::modular(3, p);
        assert_eq!((&a + &b).to_string(), "2");
        assert_eq!((&a * &b).to_string(), "98");
        let third = ExactScalar::ratio(1, 3).to_mode(ArithMode::Modular(p)).unwrap();
        assert!((&third * &b).is_one());
    }

    #[test]
    fn modular_infects_exact() {
        let p = 97;
        let a = ExactScalar::modular(5, p);
        let b = ExactScalar::from(100);
        assert_eq!((&a + &b).to_string(), "8");
        assert_eq!((&b * &a).mode(), ArithMode::Modular(p));
    }

    #[test]
    fn mode_validation() {
        assert!(ArithMode::modular(2).is_err());
        assert!(ArithMode::modular(91).is_err()); // 7 * 13
        assert!(ArithMode::modular(101).is_ok());
        assert!(ExactScalar::ratio(1, 101).to_mode(ArithMode::Modular(101)).is_err());
    }

    #[test]
    fn primality() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(3));
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(561)); // Carmichael
        assert!(is_prime_u64(2_305_843_009_213_693_951)); // 2^61 - 1
        assert!(!is_prime_u64(u64::MAX));
    }

    #[test]
    fn fused_add_mul() {
        let mut acc = ExactScalar::from(10);
        acc.add_mul_assign(&ExactScalar::from(3), &ExactScalar::from(-4));
        assert_eq!(acc, ExactScalar::from(-2));
        let mut acc = ExactScalar::from(i64::MAX);
        acc.add_mul_assign(&ExactScalar::from(i64::MAX), &ExactScalar::from(i64::MAX));
        let expect = ExactScalar::from(i64::MAX)
            * ExactScalar::from(i64::MAX)
            + ExactScalar::from(i64::MAX);
        assert_eq!(acc, expect);
    }

    #[test]
    fn factorials() {
        assert_eq!(ExactScalar::factorial(0), ExactScalar::one());
        assert_eq!(ExactScalar::factorial(5), ExactScalar::from(120));
        assert_eq!(
            ExactScalar::factorial(25).to_string(),
            "15511210043330985984000000"
        );
    }
}
