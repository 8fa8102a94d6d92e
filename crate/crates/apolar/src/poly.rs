//! Sparse multivariate polynomials and the brute-force oracles built on them:
//! differential operators, the apolar inner product, the permanent, and the
//! dimension of the span of all partial derivatives.
//!
//! Everything here is deliberately direct. These functions are the reference
//! implementations the engine modules are tested against, so they trade speed
//! for obviousness.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::monomial::Monomial;
use crate::scalar::ExactScalar;

/// Matrices that exceed this size are rejected by [`permanent`].
pub const PERMANENT_LIMIT: usize = 10;

/// Candidate-derivative budget for [`diff_span_dim`].
pub const DIFF_SPAN_LIMIT: usize = 200_000;

/// A sparse multivariate polynomial with exact coefficients. Terms are kept
/// in a `BTreeMap` so iteration order, and thus all output, is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparsePoly {
    terms: BTreeMap<Monomial, ExactScalar>,
}

impl SparsePoly {
    pub fn zero() -> SparsePoly {
        SparsePoly::default()
    }

    pub fn constant(c: ExactScalar) -> SparsePoly {
        let mut p = SparsePoly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(v: u32) -> SparsePoly {
        let mut p = SparsePoly::zero();
        p.add_term(Monomial::var(v), ExactScalar::one());
        p
    }

    /// Builds from `(coefficient, [(var, exp), ...])` pairs.
    pub fn from_terms(terms: &[(i64, &[(u32, u32)])]) -> SparsePoly {
        let mut p = SparsePoly::zero();
        for &(c, pairs) in terms {
            p.add_term(Monomial::from_pairs(pairs), ExactScalar::from(c));
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: ExactScalar) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &ExactScalar)> {
        self.terms.iter()
    }

    /// The term with the largest monomial in the degree-then-lex order.
    pub fn leading_term(&self) -> Option<(&Monomial, &ExactScalar)> {
        self.terms.iter().next_back()
    }

    pub fn coefficient(&self, m: &Monomial) -> ExactScalar {
        self.terms.get(m).cloned().unwrap_or_else(ExactScalar::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Largest variable index that occurs.
    pub fn max_var(&self) -> u32 {
        self.terms.keys().map(Monomial::max_var).max().unwrap_or(0)
    }

    /// `Some(d)` when every term has degree `d`; the zero polynomial is
    /// homogeneous of every degree and reports `None`.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(Monomial::degree);
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.is_zero() || self.homogeneous_degree().is_some()
    }

    pub fn scale(&self, c: &ExactScalar) -> SparsePoly {
        if c.is_zero() {
            return SparsePoly::zero();
        }
        let mut out = SparsePoly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &SparsePoly) -> SparsePoly {
        let mut out = SparsePoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> SparsePoly {
        let mut acc = SparsePoly::constant(ExactScalar::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Partial derivative with respect to `x_v`.
    pub fn partial(&self, v: u32) -> SparsePoly {
        let mut out = SparsePoly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent_of(v);
            if e == 0 {
                continue;
            }
            let reduced = m.checked_div(&Monomial::var(v)).expect("exponent checked");
            out.add_term(reduced, c * &ExactScalar::from(e as i64));
        }
        out
    }

    /// Substitutes `x_v := 0`, dropping every term containing the variable.
    pub fn zero_variable(&self, v: u32) -> SparsePoly {
        let mut out = SparsePoly::zero();
        for (m, c) in &self.terms {
            if m.exponent_of(v) == 0 {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }
}

impl std::ops::Add<&SparsePoly> for &SparsePoly {
    type Output = SparsePoly;
    fn add(self, rhs: &SparsePoly) -> SparsePoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl std::ops::Sub<&SparsePoly> for &SparsePoly {
    type Output = SparsePoly;
    fn sub(self, rhs: &SparsePoly) -> SparsePoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl std::ops::Neg for &SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        self.scale(&-&ExactScalar::one())
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Applies `h(d_1, ..., d_n)` to `f`, term by term, with the factorial rule
/// `d^a (x^b) = b!/(b-a)! x^(b-a)` when `a <= b` and zero otherwise.
pub fn apply_diff_operator(h: &SparsePoly, f: &SparsePoly) -> SparsePoly {
    let mut out = SparsePoly::zero();
    for (alpha, ch) in &h.terms {
        for (beta, cf) in &f.terms {
            if let Some(rest) = beta.checked_div(alpha) {
                let coeff = alpha.falling_factorial(beta);
                out.add_term(rest, &(ch * cf) * &coeff);
            }
        }
    }
    out
}

/// The apolar inner product `<f, g> = f(d_1, ..., d_n) g = sum_a f_a g_a a!`
/// of two homogeneous polynomials of equal degree.
pub fn apolar_inner_product(f: &SparsePoly, g: &SparsePoly) -> Result<ExactScalar> {
    if f.is_zero() || g.is_zero() {
        return Ok(ExactScalar::zero());
    }
    let df = f
        .homogeneous_degree()
        .ok_or_else(|| Error::DegreeMismatch("first argument is not homogeneous".into()))?;
    let dg = g
        .homogeneous_degree()
        .ok_or_else(|| Error::DegreeMismatch("second argument is not homogeneous".into()))?;
    if df != dg {
        return Err(Error::DegreeMismatch(format!(
            "degrees {df} and {dg} differ"
        )));
    }
    let mut acc = ExactScalar::zero();
    for (m, cf) in &f.terms {
        if let Some(cg) = g.terms.get(m) {
            acc.add_mul_assign(&(cf * cg), &m.factorial());
        }
    }
    Ok(acc)
}

/// Permanent of a square matrix by direct enumeration over permutations,
/// with pruning on zero entries. Oracle-scale only.
pub fn permanent(a: &[Vec<ExactScalar>]) -> Result<ExactScalar> {
    let n = a.len();
    if n > PERMANENT_LIMIT {
        return Err(Error::SizeLimit(format!(
            "permanent limited to n <= {PERMANENT_LIMIT}, got {n}"
        )));
    }
    for row in a {
        if row.len() != n {
            return Err(Error::BadDims("permanent requires a square matrix".into()));
        }
    }
    fn rec(a: &[Vec<ExactScalar>], row: usize, used: u32, prefix: ExactScalar, acc: &mut ExactScalar) {
        let n = a.len();
        if row == n {
            *acc += &prefix;
            return;
        }
        for col in 0..n {
            if used & (1 << col) != 0 || a[row][col].is_zero() {
                continue;
            }
            rec(a, row + 1, used | (1 << col), &prefix * &a[row][col], acc);
        }
    }
    let mut acc = ExactScalar::zero();
    rec(a, 0, 0, ExactScalar::one(), &mut acc);
    Ok(acc)
}

/// Incremental exact row reduction over sparse polynomials, keyed by leading
/// monomial. Rank queries are what [`diff_span_dim`] and the apolar-algebra
/// construction are built on.
#[derive(Debug, Default)]
pub struct RowReducer {
    pivots: BTreeMap<Monomial, SparsePoly>,
}

impl RowReducer {
    pub fn new() -> RowReducer {
        RowReducer::default()
    }

    /// Fully reduces `p` against the current pivots.
    pub fn reduce(&self, p: &SparsePoly) -> SparsePoly {
        let mut cur = p.clone();
        loop {
            let hit = cur
                .terms
                .iter()
                .rev()
                .find_map(|(m, c)| self.pivots.get(m).map(|piv| (piv.clone(), c.clone())));
            match hit {
                Some((piv, c)) => {
                    cur = &cur - &piv.scale(&c);
                }
                None => return cur,
            }
        }
    }

    /// Reduces and, when a nonzero remainder is left, installs it as a new
    /// monic pivot. Returns whether the rank grew.
    pub fn insert(&mut self, p: &SparsePoly) -> bool {
        let rem = self.reduce(p);
        if rem.is_zero() {
            return false;
        }
        let (lead_m, lead_c) = rem.terms.iter().next_back().expect("nonzero");
        let inv = lead_c.inv().expect("nonzero leading coefficient");
        let monic = rem.scale(&inv);
        self.pivots.insert(lead_m.clone(), monic);
        true
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Dimension of `Diff(f)`, the span of all partial derivatives of `f` of all
/// orders, `f` included. Computed by exact elimination on the derivative
/// list, walking derivative orders level by level.
pub fn diff_span_dim(f: &SparsePoly) -> Result<usize> {
    if f.is_zero() {
        return Ok(0);
    }
    let mut reducer = RowReducer::new();
    reducer.insert(f);
    let vars: Vec<u32> = (1..=f.max_var()).collect();
    // level t holds the distinct nonzero d^a f with |a| = t
    let mut level: BTreeMap<Monomial, SparsePoly> = BTreeMap::new();
    level.insert(Monomial::one(), f.clone());
    let mut seen = 1usize;
    while !level.is_empty() {
        let mut next: BTreeMap<Monomial, SparsePoly> = BTreeMap::new();
        for (alpha, poly) in &level {
            for &v in &vars {
                let next_alpha = alpha.mul(&Monomial::var(v));
                if next.contains_key(&next_alpha) {
                    continue;
                }
                let d = poly.partial(v);
                if d.is_zero() {
                    continue;
                }
                seen += 1;
                if seen > DIFF_SPAN_LIMIT {
                    return Err(Error::SizeLimit(format!(
                        "diff_span_dim exceeded {DIFF_SPAN_LIMIT} candidate derivatives"
                    )));
                }
                reducer.insert(&d);
                next.insert(next_alpha, d);
            }
        }
        level = next;
    }
    Ok(reducer.rank())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(terms: &[(i64, &[(u32, u32)])]) -> SparsePoly {
        SparsePoly::from_terms(terms)
    }

    #[test]
    fn apply_diff_worked_example() {
        // (3 d1 d2 + d1^2) applied to x1^2 x2 = 6 x1 + 2 x2
        let h = p(&[(3, &[(1, 1), (2, 1)]), (1, &[(1, 2)])]);
        let f = p(&[(1, &[(1, 2), (2, 1)])]);
        let expect = p(&[(6, &[(1, 1)]), (2, &[(2, 1)])]);
        assert_eq!(apply_diff_operator(&h, &f), expect);
    }

    #[test]
    fn apply_diff_identity_and_factorial_rule() {
        let f = p(&[(1, &[(1, 1), (2, 1)])]);
        let one = SparsePoly::constant(ExactScalar::one());
        assert_eq!(apply_diff_operator(&one, &f), f);

        let h = p(&[(1, &[(1, 2)])]);
        let cube = p(&[(1, &[(1, 3)])]);
        assert_eq!(apply_diff_operator(&h, &cube), p(&[(6, &[(1, 1)])]));
    }

    #[test]
    fn inner_product_basics() {
        let x1x2 = p(&[(1, &[(1, 1), (2, 1)])]);
        assert_eq!(apolar_inner_product(&x1x2, &x1x2).unwrap(), ExactScalar::from(1));

        let x1sq = p(&[(1, &[(1, 2)])]);
        assert_eq!(apolar_inner_product(&x1sq, &x1sq).unwrap(), ExactScalar::from(2));

        // <x1 x2, P_A> for A = [[1,2],[3,4]] is the permanent 10
        let pa = p(&[(1, &[(1, 1)]), (2, &[(2, 1)])]).mul(&p(&[(3, &[(1, 1)]), (4, &[(2, 1)])]));
        assert_eq!(apolar_inner_product(&x1x2, &pa).unwrap(), ExactScalar::from(10));
    }

    #[test]
    fn inner_product_errors() {
        let x1 = SparsePoly::var(1);
        let x1x2 = p(&[(1, &[(1, 1), (2, 1)])]);
        assert!(matches!(
            apolar_inner_product(&x1, &x1x2),
            Err(Error::DegreeMismatch(_))
        ));
        let inhomog = p(&[(1, &[(1, 1)]), (1, &[(1, 2)])]);
        assert!(matches!(
            apolar_inner_product(&inhomog, &inhomog),
            Err(Error::DegreeMismatch(_))
        ));
        assert_eq!(
            apolar_inner_product(&SparsePoly::zero(), &x1).unwrap(),
            ExactScalar::zero()
        );
    }

    #[test]
    fn permanent_examples() {
        let m = |rows: &[&[i64]]| -> Vec<Vec<ExactScalar>> {
            rows.iter()
                .map(|r| r.iter().map(|&v| ExactScalar::from(v)).collect())
                .collect()
        };
        assert_eq!(permanent(&m(&[&[1]])).unwrap(), ExactScalar::from(1));
        assert_eq!(
            permanent(&m(&[&[1, 2], &[3, 4]])).unwrap(),
            ExactScalar::from(10)
        );
        assert_eq!(
            permanent(&m(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])).unwrap(),
            ExactScalar::from(1)
        );
        let big = vec![vec![ExactScalar::one(); 11]; 11];
        assert!(matches!(permanent(&big), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn diff_span_dims() {
        // x1 x2 x3: products of subsets of the variables, 2^3 of them
        let f = p(&[(1, &[(1, 1), (2, 1), (3, 1)])]);
        assert_eq!(diff_span_dim(&f).unwrap(), 8);

        // generic Hankel determinant at d = 2: x1 x3 - x2^2
        let h = p(&[(1, &[(1, 1), (3, 1)]), (-1, &[(2, 2)])]);
        assert_eq!(diff_span_dim(&h).unwrap(), 5);
    }

    #[test]
    fn diff_span_dim_generic_det3() {
        // det of a generic 3x3 matrix in variables x_{3(i-1)+j}
        let mut det = SparsePoly::zero();
        let perms: [( [usize; 3], i64); 6] = [
            ([0, 1, 2], 1),
            ([1, 2, 0], 1),
            ([2, 0, 1], 1),
            ([0, 2, 1], -1),
            ([1, 0, 2], -1),
            ([2, 1, 0], -1),
        ];
        for (sigma, sign) in perms {
            let pairs: Vec<(u32, u32)> =
                (0..3).map(|i| ((3 * i + sigma[i] + 1) as u32, 1)).collect();
            det.add_term(Monomial::from_pairs(&pairs), ExactScalar::from(sign));
        }
        assert_eq!(diff_span_dim(&det).unwrap(), 20);
    }

    #[test]
    fn row_reducer_rank() {
        let mut r = RowReducer::new();
        assert!(r.insert(&p(&[(1, &[(1, 1)]), (1, &[(2, 1)])])));
        assert!(r.insert(&p(&[(1, &[(2, 1)])])));
        assert!(!r.insert(&p(&[(2, &[(1, 1)]), (5, &[(2, 1)])])));
        assert_eq!(r.rank(), 2);
    }
}
