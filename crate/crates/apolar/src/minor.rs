//! The general engine: differential evaluation of a skew circuit against the
//! determinant of a symbolic matrix, with state kept in the space of minors.
//!
//! The space of partial derivatives of `det X` for a `d x d` symbolic matrix
//! `X` is spanned by the minors `X[a|b]`, of which there are
//! `sum_k C(d,k)^2 = C(2d,d) < 4^d`. A state vector stores one coefficient
//! per (row set, column set) pair, blocked by minor size `k`; differentiating
//! by a linear form maps block `k` into block `k-1` through the cofactor
//! rule, so a homogeneous circuit touches one block per layer.

use crate::circuit::{evaluate_circuit, Circuit, CircuitSemantics, LinearForm};
use crate::comb::{colex_rank, increasing_seqs, Binomials};
use crate::error::{Error, Result};
use crate::poly::SparsePoly;
use crate::scalar::{ArithMode, ExactScalar};

/// Exact-mode practical bound: `C(2d,d)` coefficients of growing bit-length.
pub const MINOR_ENGINE_MAX_D: usize = 14;

/// A square matrix of linear forms together with the per-variable coefficient
/// index used to assemble directional-derivative weights.
#[derive(Debug, Clone)]
pub struct SymbolicMatrix {
    d: usize,
    entries: Vec<Vec<LinearForm>>,
    nvars: u32,
    /// `coeff_index[l]` lists `(i, j, a)` with `a = d l_{i,j} / d x_l != 0`;
    /// 0-based `i, j`.
    coeff_index: Vec<Vec<(usize, usize, ExactScalar)>>,
}

impl SymbolicMatrix {
    pub fn new(entries: Vec<Vec<LinearForm>>) -> Result<SymbolicMatrix> {
        let d = entries.len();
        if d == 0 {
            return Err(Error::BadDims("matrix must be at least 1 x 1".into()));
        }
        if d > MINOR_ENGINE_MAX_D {
            return Err(Error::SizeLimit(format!(
                "general engine capped at d <= {MINOR_ENGINE_MAX_D}, got {d}"
            )));
        }
        if entries.iter().any(|row| row.len() != d) {
            return Err(Error::BadDims("matrix rows of unequal length".into()));
        }
        let nvars = entries
            .iter()
            .flatten()
            .map(LinearForm::max_var)
            .max()
            .unwrap_or(0);
        let mut coeff_index = vec![Vec::new(); nvars as usize + 1];
        for (i, row) in entries.iter().enumerate() {
            for (j, form) in row.iter().enumerate() {
                for (v, c) in form.coeffs() {
                    coeff_index[v as usize].push((i, j, c.clone()));
                }
            }
        }
        Ok(SymbolicMatrix {
            d,
            entries,
            nvars,
            coeff_index,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    /// 1-based entry access.
    pub fn entry(&self, i: usize, j: usize) -> &LinearForm {
        &self.entries[i - 1][j - 1]
    }

    pub fn entries(&self) -> &[Vec<LinearForm>] {
        &self.entries
    }

    pub fn to_mode(&self, mode: ArithMode) -> Result<SymbolicMatrix> {
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|f| f.to_mode(mode)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        SymbolicMatrix::new(entries)
    }

    /// Dense weight matrix of the directional derivative along `form`:
    /// `w[i][j] = sum_v form_v * (coefficient of x_v in entry (i,j))`.
    fn direction_weights(&self, form: &LinearForm) -> Vec<Vec<ExactScalar>> {
        let mut w = vec![vec![ExactScalar::zero(); self.d]; self.d];
        for (v, c) in form.coeffs() {
            let Some(index) = self.coeff_index.get(v as usize) else {
                continue;
            };
            for (i, j, a) in index {
                w[*i][*j].add_mul_assign(a, c);
            }
        }
        w
    }

    /// Symbolic determinant of the submatrix with 1-based rows `alpha` and
    /// columns `beta`, by cofactor expansion. Oracle-scale.
    pub fn minor_poly(&self, alpha: &[usize], beta: &[usize]) -> SparsePoly {
        fn det(grid: &[Vec<SparsePoly>]) -> SparsePoly {
            let n = grid.len();
            if n == 0 {
                return SparsePoly::constant(ExactScalar::one());
            }
            let mut acc = SparsePoly::zero();
            for (j, cell) in grid[0].iter().enumerate() {
                if cell.is_zero() {
                    continue;
                }
                let sub: Vec<Vec<SparsePoly>> = grid[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter_map(|(jj, p)| (jj != j).then(|| p.clone()))
                            .collect()
                    })
                    .collect();
                let cof = cell.mul(&det(&sub));
                if j % 2 == 0 {
                    acc = &acc + &cof;
                } else {
                    acc = &acc - &cof;
                }
            }
            acc
        }
        let grid: Vec<Vec<SparsePoly>> = alpha
            .iter()
            .map(|&i| beta.iter().map(|&j| self.entry(i, j).to_poly()).collect())
            .collect();
        det(&grid)
    }

    /// Symbolic determinant of the full matrix. Oracle-scale.
    pub fn det_poly(&self) -> SparsePoly {
        let all: Vec<usize> = (1..=self.d).collect();
        self.minor_poly(&all, &all)
    }
}

/// Ranking tables shared by all states of one evaluation: the colex-ordered
/// sequences `I(d,k)` and, per sequence, the rank after removing one element.
#[derive(Debug)]
pub struct MinorTables {
    binom: Binomials,
    /// `seqs[k]` lists `I(d,k)` in colex order.
    seqs: Vec<Vec<Vec<usize>>>,
    /// `removed[k][rank][i]` is the colex rank of the sequence with the
    /// element at position `i` deleted.
    removed: Vec<Vec<Vec<usize>>>,
}

impl MinorTables {
    pub fn new(d: usize) -> MinorTables {
        let binom = Binomials::new(2 * d.max(1));
        let seqs: Vec<Vec<Vec<usize>>> = (0..=d).map(|k| increasing_seqs(d, k)).collect();
        let removed = seqs
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(|seq| {
                        (0..seq.len())
                            .map(|i| {
                                let mut s = seq.clone();
                                s.remove(i);
                                colex_rank(&s, &binom)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        MinorTables {
            binom,
            seqs,
            removed,
        }
    }

    fn block_side(&self, d: usize, k: usize) -> usize {
        self.binom.c(d, k) as usize
    }
}

/// Coefficients over the minor basis `{X[a|b]}`, blocked by size `k`. Block
/// `k` is a dense `C(d,k) x C(d,k)` array over colex ranks of the row and
/// column sets; absent blocks are zero. The `k = 0` slot is the coefficient
/// of the empty minor, whose value is 1.
#[derive(Debug, Clone)]
pub struct MinorVector {
    d: usize,
    blocks: Vec<Option<Vec<ExactScalar>>>,
}

impl MinorVector {
    pub fn zero(d: usize) -> MinorVector {
        MinorVector {
            d,
            blocks: vec![None; d + 1],
        }
    }

    /// The representation of `det X` itself: coefficient 1 on `X[1..d|1..d]`.
    pub fn det_representation(d: usize) -> MinorVector {
        let mut v = MinorVector::zero(d);
        v.blocks[d] = Some(vec![ExactScalar::one()]);
        v
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Total coefficient capacity `sum_k C(d,k)^2 = C(2d,d)`.
    pub fn total_len(&self) -> u64 {
        let b = Binomials::new(2 * self.d);
        b.c(2 * self.d, self.d)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.as_ref().is_none_or(|v| v.iter().all(ExactScalar::is_zero)))
    }

    /// Coefficient of the empty minor, i.e. the scalar value of a fully
    /// differentiated state.
    pub fn scalar_part(&self) -> ExactScalar {
        self.blocks[0]
            .as_ref()
            .map(|b| b[0].clone())
            .unwrap_or_else(ExactScalar::zero)
    }

    pub fn set(&mut self, tables: &MinorTables, alpha: &[usize], beta: &[usize], c: ExactScalar) {
        assert_eq!(alpha.len(), beta.len());
        let k = alpha.len();
        let side = tables.block_side(self.d, k);
        let block = self.blocks[k].get_or_insert_with(|| vec![ExactScalar::zero(); side * side]);
        let (ra, rb) = (
            colex_rank(alpha, &tables.binom),
            colex_rank(beta, &tables.binom),
        );
        block[ra * side + rb] = c;
    }

    pub fn get(&self, tables: &MinorTables, alpha: &[usize], beta: &[usize]) -> ExactScalar {
        let k = alpha.len();
        let side = tables.block_side(self.d, k);
        match &self.blocks[k] {
            None => ExactScalar::zero(),
            Some(block) => {
                let (ra, rb) = (
                    colex_rank(alpha, &tables.binom),
                    colex_rank(beta, &tables.binom),
                );
                block[ra * side + rb].clone()
            }
        }
    }

    fn merge(mut self, other: MinorVector) -> MinorVector {
        debug_assert_eq!(self.d, other.d);
        for (k, block) in other.blocks.into_iter().enumerate() {
            let Some(block) = block else { continue };
            match &mut self.blocks[k] {
                slot @ None => *slot = Some(block),
                Some(mine) => {
                    for (a, b) in mine.iter_mut().zip(block) {
                        *a += &b;
                    }
                }
            }
        }
        self
    }

    fn scaled(&self, c: &ExactScalar) -> MinorVector {
        if c.is_zero() {
            return MinorVector::zero(self.d);
        }
        MinorVector {
            d: self.d,
            blocks: self
                .blocks
                .iter()
                .map(|b| b.as_ref().map(|v| v.iter().map(|x| x * c).collect()))
                .collect(),
        }
    }

    /// Expands back to a polynomial through the symbolic minors of `X`.
    /// Oracle-scale.
    pub fn to_poly(&self, x: &SymbolicMatrix, tables: &MinorTables) -> SparsePoly {
        let mut acc = SparsePoly::zero();
        for (k, block) in self.blocks.iter().enumerate() {
            let Some(block) = block else { continue };
            let side = tables.block_side(self.d, k);
            for (ra, alpha) in tables.seqs[k].iter().enumerate() {
                for (rb, beta) in tables.seqs[k].iter().enumerate() {
                    let c = &block[ra * side + rb];
                    if c.is_zero() {
                        continue;
                    }
                    acc = &acc + &x.minor_poly(alpha, beta).scale(c);
                }
            }
        }
        acc
    }
}

/// Core of the engine: the directional derivative of a minor combination.
/// For each coefficient `c` on `X[a|b]` and each submatrix position `(i,j)`,
/// adds `(-1)^{i+j} w[a_i][b_j] c` to the coefficient of the minor with row
/// `a_i` and column `b_j` deleted.
fn derivative_directional(
    tables: &MinorTables,
    p: &MinorVector,
    w: &[Vec<ExactScalar>],
) -> MinorVector {
    let d = p.d;
    let mut out = MinorVector::zero(d);
    for k in 1..=d {
        let Some(block) = &p.blocks[k] else { continue };
        let side = tables.block_side(d, k);
        let out_side = tables.block_side(d, k - 1);
        let out_block =
            out.blocks[k - 1].get_or_insert_with(|| vec![ExactScalar::zero(); out_side * out_side]);
        let seqs = &tables.seqs[k];
        let removed = &tables.removed[k];
        for ra in 0..side {
            let alpha = &seqs[ra];
            for rb in 0..side {
                let c = &block[ra * side + rb];
                if c.is_zero() {
                    continue;
                }
                let beta = &seqs[rb];
                for i in 0..k {
                    let wrow = &w[alpha[i] - 1];
                    for j in 0..k {
                        let weight = &wrow[beta[j] - 1];
                        if weight.is_zero() {
                            continue;
                        }
                        let slot =
                            &mut out_block[removed[ra][i] * out_side + removed[rb][j]];
                        let term = weight * c;
                        if (i + j) % 2 == 0 {
                            *slot += &term;
                        } else {
                            *slot -= &term;
                        }
                    }
                }
            }
        }
    }
    out
}

/// `dP/dx_l` expressed over the minor basis.
pub fn minor_derivative(x: &SymbolicMatrix, p: &MinorVector, l: u32) -> Result<MinorVector> {
    if l == 0 || l > x.nvars {
        return Err(Error::IndexOutOfRange(format!(
            "variable {l} outside 1..={}",
            x.nvars
        )));
    }
    let tables = MinorTables::new(x.d);
    Ok(derivative_directional(
        &tables,
        p,
        &x.direction_weights(&LinearForm::single(l)),
    ))
}

struct MinorSemantics<'a> {
    x: &'a SymbolicMatrix,
    tables: &'a MinorTables,
}

impl CircuitSemantics for MinorSemantics<'_> {
    type State = MinorVector;

    fn input(&self, var: u32) -> Result<MinorVector> {
        let base = MinorVector::det_representation(self.x.d);
        Ok(derivative_directional(
            self.tables,
            &base,
            &self.x.direction_weights(&LinearForm::single(var)),
        ))
    }

    fn constant(&self, c: &ExactScalar) -> Result<MinorVector> {
        Ok(MinorVector::det_representation(self.x.d).scaled(c))
    }

    fn add(&self, a: MinorVector, b: MinorVector) -> Result<MinorVector> {
        Ok(a.merge(b))
    }

    fn mul_lin(&self, form: &LinearForm, a: MinorVector) -> Result<MinorVector> {
        if form.is_zero() {
            return Ok(MinorVector::zero(self.x.d));
        }
        Ok(derivative_directional(
            self.tables,
            &a,
            &self.x.direction_weights(form),
        ))
    }
}

/// Theorem-1 evaluation: `<det X, g>` for the polynomial `g` computed by the
/// skew circuit `c`, exactly, storing one minor-coefficient vector per live
/// gate.
pub fn gendiff_evaluate(x: &SymbolicMatrix, c: &Circuit) -> Result<ExactScalar> {
    if !c.is_skew() {
        return Err(Error::NonSkew);
    }
    match c.degree() {
        None => return Ok(ExactScalar::zero()),
        Some(deg) if deg as usize != x.d => {
            return Err(Error::DegreeMismatch(format!(
                "circuit degree {deg} does not match matrix size {}",
                x.d
            )))
        }
        Some(_) => {}
    }
    let tables = MinorTables::new(x.d);
    let sem = MinorSemantics { x, tables: &tables };
    let state = evaluate_circuit(&sem, c)?;
    Ok(state.scalar_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_circuit, CircuitBuilder};
    use crate::poly::{apolar_inner_product, SparsePoly};

    fn generic_2x2() -> SymbolicMatrix {
        SymbolicMatrix::new(vec![
            vec![LinearForm::single(1), LinearForm::single(2)],
            vec![LinearForm::single(3), LinearForm::single(4)],
        ])
        .unwrap()
    }

    fn hankel_2x2() -> SymbolicMatrix {
        SymbolicMatrix::new(vec![
            vec![LinearForm::single(1), LinearForm::single(2)],
            vec![LinearForm::single(2), LinearForm::single(3)],
        ])
        .unwrap()
    }

    #[test]
    fn cofactor_of_top_left_variable() {
        let x = generic_2x2();
        let tables = MinorTables::new(2);
        let p = MinorVector::det_representation(2);
        let d = minor_derivative(&x, &p, 1).unwrap();
        assert_eq!(d.get(&tables, &[2], &[2]), ExactScalar::one());
        assert_eq!(d.get(&tables, &[1], &[1]), ExactScalar::zero());
        assert_eq!(d.to_poly(&x, &tables), SparsePoly::var(4));
    }

    #[test]
    fn hankel_middle_variable_has_two_minors()  {
        let x = hankel_2x2();
        let tables = MinorTables::new(2);
        let p = MinorVector::det_representation(2);
        let d = minor_derivative(&x, &p, 2).unwrap();
        assert_eq!(d.get(&tables, &[2], &[1]), -ExactScalar::one());
        assert_eq!(d.get(&tables, &[1], &[2]), -ExactScalar::one());
        // both minors expand to x2, so the derivative is -2 x2
        assert_eq!(
            d.to_poly(&x, &tables),
            SparsePoly::from_terms(&[(-2, &[(2, 1)])])
        );
    }

    #[test]
    fn derivative_of_scalar_block_is_zero() {
        let x = generic_2x2();
        let tables = MinorTables::new(2);
        let mut p = MinorVector::zero(2);
        p.set(&tables, &[], &[], ExactScalar::from(7));
        let d = minor_derivative(&x, &p, 1).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn derivative_out_of_range() {
        let x = generic_2x2();
        let p = MinorVector::det_representation(2);
        assert!(matches!(
            minor_derivative(&x, &p, 9),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn gendiff_hankel_det_examples() {
        let x = hankel_2x2();
        // det X = x1 x3 - x2^2
        let c13 = parse_circuit("g1 = var 1\ng2 = mullin 1:3 g1\n").unwrap();
        assert_eq!(gendiff_evaluate(&x, &c13).unwrap(), ExactScalar::from(1));

        let c22 = parse_circuit("g1 = var 2\ng2 = mullin 1:2 g1\n").unwrap();
        assert_eq!(gendiff_evaluate(&x, &c22).unwrap(), ExactScalar::from(-2));

        let c11 = parse_circuit("g1 = var 1\ng2 = mullin 1:1 g1\n").unwrap();
        assert_eq!(gendiff_evaluate(&x, &c11).unwrap(), ExactScalar::zero());
    }

    #[test]
    fn gendiff_degree_checks() {
        let x = hankel_2x2();
        let deg3 = parse_circuit("g1 = var 1\ng2 = mullin 1:1 g1\ng3 = mullin 1:1 g2\n").unwrap();
        assert!(matches!(
            gendiff_evaluate(&x, &deg3),
            Err(Error::DegreeMismatch(_))
        ));
        let zero = parse_circuit("g1 = const 0\n").unwrap();
        assert_eq!(gendiff_evaluate(&x, &zero).unwrap(), ExactScalar::zero());
    }

    #[test]
    fn operators_commute() {
        let x = SymbolicMatrix::new(vec![
            vec![
                LinearForm::from_pairs(vec![(1, ExactScalar::from(2)), (2, ExactScalar::from(1))]),
                LinearForm::single(3),
                LinearForm::zero(),
            ],
            vec![
                LinearForm::single(2),
                LinearForm::from_pairs(vec![(3, ExactScalar::from(-1))]),
                LinearForm::single(1),
            ],
            vec![LinearForm::single(4), LinearForm::single(1), LinearForm::single(2)],
        ])
        .unwrap();
        let p = MinorVector::det_representation(3);
        for (l1, l2) in [(1u32, 2u32), (2, 3), (1, 4), (3, 4)] {
            let a = minor_derivative(&x, &minor_derivative(&x, &p, l1).unwrap(), l2).unwrap();
            let b = minor_derivative(&x, &minor_derivative(&x, &p, l2).unwrap(), l1).unwrap();
            let tables = MinorTables::new(3);
            assert_eq!(a.to_poly(&x, &tables), b.to_poly(&x, &tables));
        }
    }

    #[test]
    fn derivative_matches_symbolic_partial() {
        // expand the derivative of det X and compare against d(det)/dx_l
        let x = SymbolicMatrix::new(vec![
            vec![LinearForm::single(1), LinearForm::single(2), LinearForm::single(3)],
            vec![LinearForm::single(2), LinearForm::single(3), LinearForm::single(4)],
            vec![LinearForm::single(3), LinearForm::single(4), LinearForm::single(1)],
        ])
        .unwrap();
        let tables = MinorTables::new(3);
        let det = x.det_poly();
        let p = MinorVector::det_representation(3);
        for l in 1..=4u32 {
            let d = minor_derivative(&x, &p, l).unwrap();
            assert_eq!(d.to_poly(&x, &tables), det.partial(l), "l = {l}");
        }
        // second order: mixed partial through two engine steps
        let d12 = minor_derivative(&x, &minor_derivative(&x, &p, 1).unwrap(), 2).unwrap();
        assert_eq!(d12.to_poly(&x, &tables), det.partial(1).partial(2));
    }

    #[test]
    fn gendiff_agrees_with_polynomial_oracle() {
        let x = SymbolicMatrix::new(vec![
            vec![
                LinearForm::from_pairs(vec![(1, ExactScalar::from(1)), (4, ExactScalar::from(-2))]),
                LinearForm::single(2),
            ],
            vec![
                LinearForm::from_pairs(vec![(2, ExactScalar::ratio(1, 2))]),
                LinearForm::single(3),
            ],
        ])
        .unwrap();
        let det = x.det_poly();

        // a small family of degree-2 skew circuits over 4 variables
        let mut circuits = Vec::new();
        for v1 in 1..=4u32 {
            for v2 in 1..=4u32 {
                let mut b = CircuitBuilder::new();
                let g1 = b.input(v1);
                let g2 = b.mul_lin(LinearForm::single(v2), g1);
                circuits.push(b.finish(g2));
            }
        }
        let mut b = CircuitBuilder::new();
        let g1 = b.input(1);
        let g2 = b.input(2);
        let s = b.add(g1, g2).unwrap();
        let m = b.mul_lin(
            LinearForm::from_pairs(vec![(3, ExactScalar::from(3)), (4, ExactScalar::ratio(-1, 3))]),
            s,
        );
        circuits.push(b.finish(m));

        for c in &circuits {
            let expect = apolar_inner_product(&crate::circuit::expand_circuit(c).unwrap(), &det).unwrap();
            assert_eq!(gendiff_evaluate(&x, c).unwrap(), expect);
        }
    }

    #[test]
    fn vector_capacity_formula() {
        for d in 1..=5 {
            let v = MinorVector::zero(d);
            let b = Binomials::new(2 * d);
            let total: u64 = (0..=d).map(|k| b.c(d, k) * b.c(d, k)).sum();
            assert_eq!(v.total_len(), total);
            assert_eq!(v.total_len(), b.c(2 * d, d));
        }
    }

    #[test]
    fn size_cap() {
        let row = vec![LinearForm::single(1); 15];
        let entries = vec![row; 15];
        assert!(matches!(
            SymbolicMatrix::new(entries),
            Err(Error::SizeLimit(_))
        ));
    }
}
