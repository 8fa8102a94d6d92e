//! Sparse monomials over 1-based variables.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::scalar::ExactScalar;

/// A monomial `x^a`, stored as a sorted sparse list of `(variable, exponent)`
/// pairs with no zero exponents. Variables are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<(u32, u32)>,
}

impl Monomial {
    /// The constant monomial `1`.
    pub fn one() -> Monomial {
        Monomial { exps: Vec::new() }
    }

    pub fn var(v: u32) -> Monomial {
        assert!(v >= 1, "variables are 1-based");
        Monomial { exps: vec![(v, 1)] }
    }

    /// Builds from arbitrary pairs: merges duplicates, drops zeros, sorts.
    pub fn from_pairs(pairs: &[(u32, u32)]) -> Monomial {
        let mut exps: Vec<(u32, u32)> = Vec::with_capacity(pairs.len());
        let mut sorted = pairs.to_vec();
        sorted.sort_by_key(|&(v, _)| v);
        for (v, e) in sorted {
            assert!(v >= 1, "variables are 1-based");
            if e == 0 {
                continue;
            }
            match exps.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => exps.push((v, e)),
            }
        }
        Monomial { exps }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent_of(&self, v: u32) -> u32 {
        self.exps
            .binary_search_by_key(&v, |&(var, _)| var)
            .map(|i| self.exps[i].1)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.exps.iter().copied()
    }

    pub fn max_var(&self) -> u32 {
        self.exps.last().map(|&(v, _)| v).unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut a, mut b) = (self.exps.iter().peekable(), other.exps.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(va, ea)), Some(&&(vb, eb))) => match va.cmp(&vb) {
                    Ordering::Less => {
                        exps.push((va, ea));
                        a.next();
                    }
                    Ordering::Greater => {
                        exps.push((vb, eb));
                        b.next();
                    }
                    Ordering::Equal => {
                        exps.push((va, ea + eb));
                        a.next();
                        b.next();
                    }
                },
                (Some(&&p), None) => {
                    exps.push(p);
                    a.next();
                }
                (None, Some(&&p)) => {
                    exps.push(p);
                    b.next();
                }
                (None, None) => break,
            }
        }
        Monomial { exps }
    }

    /// Whether `self` divides `other` componentwise.
    pub fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().all(|&(v, e)| other.exponent_of(v) >= e)
    }

    /// `self / other`, if `other` divides `self`.
    pub fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        if !other.divides(self) {
            return None;
        }
        let exps = self
            .exps
            .iter()
            .filter_map(|&(v, e)| {
                let r = e - other.exponent_of(v);
                (r > 0).then_some((v, r))
            })
            .collect();
        Some(Monomial { exps })
    }

    /// `a! = prod_v a_v!`.
    pub fn factorial(&self) -> ExactScalar {
        let mut acc = BigInt::one();
        for &(_, e) in &self.exps {
            for t in 2..=e as u64 {
                acc *= t;
            }
        }
        ExactScalar::from_int(acc)
    }

    /// The falling-factorial coefficient of the derivative rule
    /// `d^a (x^b) = b!/(b-a)! x^(b-a)`, defined when `a` divides `b`.
    pub fn falling_factorial(&self, of: &Monomial) -> ExactScalar {
        debug_assert!(self.divides(of));
        let mut acc = BigInt::one();
        for &(v, a) in &self.exps {
            let b = of.exponent_of(v) as u64;
            for t in 0..a as u64 {
                acc *= b - t;
            }
        }
        ExactScalar::from_int(acc)
    }

    pub fn is_squarefree(&self) -> bool {
        self.exps.iter().all(|&(_, e)| e <= 1)
    }
}

/// Degree first, then lexicographic with larger exponents on earlier
/// variables sorting first; a deterministic total order used for basis
/// selection and display.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let (mut a, mut b) = (self.exps.iter(), other.exps.iter());
            loop {
                match (a.next(), b.next()) {
                    (Some(&(va, ea)), Some(&(vb, eb))) => {
                        match va.cmp(&vb).then(eb.cmp(&ea)) {
                            Ordering::Equal => continue,
                            ord => return ord,
                        }
                    }
                    (Some(_), None) => return Ordering::Greater,
                    (None, Some(_)) => return Ordering::Less,
                    (None, None) => return Ordering::Equal,
                }
            }
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for &(v, e) in &self.exps {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{v}")?;
            } else {
                write!(f, "x{v}^{e}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_normalizes() {
        let m = Monomial::from_pairs(&[(3, 1), (1, 2), (3, 1), (2, 0)]);
        assert_eq!(m.to_string(), "x1^2*x3^2");
        assert_eq!(m.degree(), 4);
        assert_eq!(m.exponent_of(2), 0);
        assert_eq!(m.exponent_of(3), 2);
    }

    #[test]
    fn division() {
        let a = Monomial::from_pairs(&[(1, 1), (2, 1)]);
        let b = Monomial::from_pairs(&[(1, 2), (2, 1), (3, 1)]);
        assert!(a.divides(&b));
        assert!(!b.divides(&a));
        assert_eq!(b.checked_div(&a).unwrap().to_string(), "x1*x3");
        assert_eq!(a.checked_div(&b), None);
    }

    #[test]
    fn factorial_and_falling() {
        let m = Monomial::from_pairs(&[(1, 3), (2, 2)]);
        assert_eq!(m.factorial(), ExactScalar::from(12));
        let a = Monomial::from_pairs(&[(1, 2)]);
        // d1^2 on x1^3 x2^2 brings down 3*2
        assert_eq!(a.falling_factorial(&m), ExactScalar::from(6));
    }

    #[test]
    fn order_is_degree_then_lex() {
        let one = Monomial::one();
        let x1 = Monomial::var(1);
        let x2 = Monomial::var(2);
        let x1x1 = Monomial::from_pairs(&[(1, 2)]);
        let x1x2 = Monomial::from_pairs(&[(1, 1), (2, 1)]);
        let x2x2 = Monomial::from_pairs(&[(2, 2)]);
        let mut v = vec![x2x2.clone(), x1x2.clone(), one.clone(), x2.clone(), x1x1.clone(), x1.clone()];
        v.sort();
        assert_eq!(v, vec![one, x1, x2, x1x1, x1x2, x2x2]);
    }
}
