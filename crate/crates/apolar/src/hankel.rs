//! The Hankel engine: differential evaluation against the determinant of a
//! symbolic Hankel matrix, with state kept in the space of *maximal minors*
//! of the triangular arrangement built from the forms `l_1, ..., l_{2d-1}`.
//!
//! The arrangement `C_d` is the `(2d-1) x (2d-1)` matrix with entry
//! `(i,j) = l_{i+j-1}` when `i + j <= 2d` and zero below the antidiagonal;
//! its leading `d x d` block `H_d` is the Hankel matrix. A maximal minor
//! `[b] = C_d[1..k | b_1..b_k]` requires `b_k <= 2d - k`, so there are
//! `sum_k C(2d-k, k) = F(2d+1)` of them — strictly below `phi^{2d}` — and
//! they span every partial derivative of `det H_d`.
//!
//! Differentiation maps block `k` to block `k-1` in two steps: a cofactor
//! pass producing coefficients `b(i, g)` of row-omitted minors
//! `[1..^i..k | g]`, and a straightening pass rewriting each row-omitted
//! minor as a sum of maximal minors,
//!
//! ```text
//! [1, ..., ^i, ..., k | g] = sum over J subset of [k-1], |J| = k-i,
//!                            of [g + e(J)]
//! ```
//!
//! dropping the shifts that collide (a repeated column is a zero minor). The
//! straightening pass runs as a dynamic program over positions: sequences
//! strictly increasing except at one live boundary position, with one table
//! per total shift count so that every table carries a single row of `b`.

use crate::circuit::{evaluate_circuit, Circuit, CircuitSemantics, LinearForm};
use crate::comb::{colex_rank, increasing_seqs, Binomials};
use crate::error::{Error, Result};
use crate::minor::SymbolicMatrix;
use crate::poly::SparsePoly;
use crate::scalar::{ArithMode, ExactScalar};

/// Formal ceiling on the arrangement size.
pub const HANKEL_ENGINE_MAX_D: usize = 24;

/// Largest tolerated basis (state vectors and shift tables scale with it).
const MAX_BASIS_SLOTS: u64 = 100_000_000;

/// Number of maximal minors of `C_d`: `sum_{k=0}^{d} C(2d-k, k)`.
pub fn hankel_basis_dimension(d: usize) -> u64 {
    let b = Binomials::new(2 * d);
    (0..=d).map(|k| b.c(2 * d - k, k)).sum()
}

/// The symbolic arrangement: forms `l_1, ..., l_{2d-1}` whose Hankel layout
/// is derived, never stored.
#[derive(Debug, Clone)]
pub struct HankelArrangement {
    d: usize,
    forms: Vec<LinearForm>,
    nvars: u32,
    /// `coeff_index[v]` lists `(m, a)` with `a = d l_{m+1} / d x_v != 0`.
    coeff_index: Vec<Vec<(usize, ExactScalar)>>,
}

impl HankelArrangement {
    pub fn new(d: usize, forms: Vec<LinearForm>) -> Result<HankelArrangement> {
        if d == 0 {
            return Err(Error::BadDims("arrangement requires d >= 1".into()));
        }
        if d > HANKEL_ENGINE_MAX_D {
            return Err(Error::SizeLimit(format!(
                "hankel engine capped at d <= {HANKEL_ENGINE_MAX_D}, got {d}"
            )));
        }
        if hankel_basis_dimension(d) > MAX_BASIS_SLOTS {
            return Err(Error::SizeLimit(format!(
                "maximal-minor basis for d = {d} exceeds {MAX_BASIS_SLOTS} slots"
            )));
        }
        if forms.len() != 2 * d - 1 {
            return Err(Error::BadDims(format!(
                "expected 2d-1 = {} forms, got {}",
                2 * d - 1,
                forms.len()
            )));
        }
        let nvars = forms.iter().map(LinearForm::max_var).max().unwrap_or(0);
        let mut coeff_index = vec![Vec::new(); nvars as usize + 1];
        for (m, form) in forms.iter().enumerate() {
            for (v, c) in form.coeffs() {
                coeff_index[v as usize].push((m, c.clone()));
            }
        }
        Ok(HankelArrangement {
            d,
            forms,
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

    pub fn forms(&self) -> &[LinearForm] {
        &self.forms
    }

    /// 1-based form access: `l_m`.
    pub fn form(&self, m: usize) -> &LinearForm {
        &self.forms[m - 1]
    }

    /// Arrangement entry `(i, j)`, zero below the antidiagonal.
    pub fn entry(&self, i: usize, j: usize) -> Option<&LinearForm> {
        (i + j <= 2 * self.d).then(|| self.form(i + j - 1))
    }

    /// Materializes the leading `d x d` Hankel block as a symbolic matrix
    /// for the general engine.
    pub fn hankel_matrix(&self) -> Result<SymbolicMatrix> {
        let entries = (1..=self.d)
            .map(|i| (1..=self.d).map(|j| self.form(i + j - 1).clone()).collect())
            .collect();
        SymbolicMatrix::new(entries)
    }

    /// Materializes the full `(2d-1) x (2d-1)` arrangement. Oracle-scale
    /// (the general engine caps the dimension).
    pub fn arrangement_matrix(&self) -> Result<SymbolicMatrix> {
        let n = 2 * self.d - 1;
        let entries = (1..=n)
            .map(|i| {
                (1..=n)
                    .map(|j| self.entry(i, j).cloned().unwrap_or_else(LinearForm::zero))
                    .collect()
            })
            .collect();
        SymbolicMatrix::new(entries)
    }

    /// Symbolic expansion of the maximal minor `[b] = C_d[1..k | b]`.
    /// Oracle-scale.
    pub fn maximal_minor_poly(&self, beta: &[usize]) -> Result<SparsePoly> {
        let k = beta.len();
        let rows: Vec<usize> = (1..=k).collect();
        Ok(self.arrangement_matrix()?.minor_poly(&rows, beta))
    }

    pub fn to_mode(&self, mode: ArithMode) -> Result<HankelArrangement> {
        let forms = self
            .forms
            .iter()
            .map(|f| f.to_mode(mode))
            .collect::<Result<Vec<_>>>()?;
        HankelArrangement::new(self.d, forms)
    }

    /// Directional weights `w_m = sum_v form_v * (coefficient of x_v in l_m)`
    /// for `m = 1..2d-1` (0-based storage).
    fn direction_weights(&self, form: &LinearForm) -> Vec<ExactScalar> {
        let mut w = vec![ExactScalar::zero(); 2 * self.d - 1];
        for (v, c) in form.coeffs() {
            let Some(index) = self.coeff_index.get(v as usize) else {
                continue;
            };
            for (m, a) in index {
                w[*m].add_mul_assign(a, c);
            }
        }
        w
    }
}

/// The arrangement of the simple-cycle reduction: `l_m = sum_k k^{m+1} x_k`,
/// so that `H_d = V diag(x) V^T` for the Vandermonde matrix `V_{i,j} = j^i`.
/// Every `d`-column minor of `V` is nonzero, which makes all Cauchy-Binet
/// weights strictly positive.
pub fn vandermonde_hankel(n: usize, d: usize) -> Result<HankelArrangement> {
    if n < d || d == 0 {
        return Err(Error::BadDims(format!(
            "vandermonde arrangement requires n >= d >= 1, got n = {n}, d = {d}"
        )));
    }
    let forms = (1..=2 * d - 1)
        .map(|m| {
            LinearForm::from_pairs(
                (1..=n)
                    .map(|j| {
                        let w = num_bigint::BigInt::from(j).pow(m as u32 + 1);
                        (j as u32, ExactScalar::from_int(w))
                    })
                    .collect(),
            )
        })
        .collect();
    HankelArrangement::new(d, forms)
}

/// Coefficients over the maximal minors `[b]`, blocked by size `k`; block
/// `k` is a dense array over colex ranks of `I(2d-k, k)`. The `k = 0` slot
/// is the empty minor, of value 1.
#[derive(Debug, Clone)]
pub struct MaxMinorVector {
    d: usize,
    blocks: Vec<Option<Vec<ExactScalar>>>,
}

impl MaxMinorVector {
    pub fn zero(d: usize) -> MaxMinorVector {
        MaxMinorVector {
            d,
            blocks: vec![None; d + 1],
        }
    }

    /// The representation of `det H_d` itself: the full maximal minor
    /// `[1..d]` with coefficient 1.
    pub fn det_representation(d: usize) -> MaxMinorVector {
        let mut v = MaxMinorVector::zero(d);
        v.blocks[d] = Some(vec![ExactScalar::one()]);
        v
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn total_len(&self) -> u64 {
        hankel_basis_dimension(self.d)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.as_ref().is_none_or(|v| v.iter().all(ExactScalar::is_zero)))
    }

    pub fn scalar_part(&self) -> ExactScalar {
        self.blocks[0]
            .as_ref()
            .map(|b| b[0].clone())
            .unwrap_or_else(ExactScalar::zero)
    }

    pub fn set(&mut self, tables: &HankelTables, beta: &[usize], c: ExactScalar) {
        let k = beta.len();
        let len = tables.block_len(k);
        let block = self.blocks[k].get_or_insert_with(|| vec![ExactScalar::zero(); len]);
        block[colex_rank(beta, &tables.binom)] = c;
    }

    pub fn get(&self, tables: &HankelTables, beta: &[usize]) -> ExactScalar {
        let k = beta.len();
        match &self.blocks[k] {
            None => ExactScalar::zero(),
            Some(block) => block[colex_rank(beta, &tables.binom)].clone(),
        }
    }

    fn merge(mut self, other: MaxMinorVector) -> MaxMinorVector {
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

    fn scaled(&self, c: &ExactScalar) -> MaxMinorVector {
        if c.is_zero() {
            return MaxMinorVector::zero(self.d);
        }
        MaxMinorVector {
            d: self.d,
            blocks: self
                .blocks
                .iter()
                .map(|b| b.as_ref().map(|v| v.iter().map(|x| x * c).collect()))
                .collect(),
        }
    }

    /// Expands back to a polynomial through the symbolic maximal minors.
    /// Oracle-scale.
    pub fn to_poly(&self, h: &HankelArrangement, tables: &HankelTables) -> Result<SparsePoly> {
        let mut acc = SparsePoly::zero();
        for (k, block) in self.blocks.iter().enumerate() {
            let Some(block) = block else { continue };
            for (r, beta) in tables.seqs[k].iter().enumerate() {
                if block[r].is_zero() {
                    continue;
                }
                acc = &acc + &h.maximal_minor_poly(beta)?.scale(&block[r]);
            }
        }
        Ok(acc)
    }
}

/// Where a `+1` shift at one position sends a carrier sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShiftTarget {
    /// Strictly increasing result, rank within `I(2d-k, k)`.
    Strict(u32),
    /// Result collides at the shifted boundary; rank of the merged sequence
    /// within `I(2d-k, k-1)`.
    Merged(u32),
    /// Shift would exceed the value bound; only ever reached with zero mass.
    Invalid,
}

/// Precomputed sequence lists and straightening shift tables for one `d`.
#[derive(Debug)]
pub struct HankelTables {
    d: usize,
    binom: Binomials,
    /// `seqs[k]`: `I(2d-k, k)` in colex order.
    seqs: Vec<Vec<Vec<usize>>>,
    /// `removed[k][rank][j]`: rank of the sequence with position `j` deleted
    /// (a member of `I(2d-k, k-1)` read in the embedded ranking).
    removed: Vec<Vec<Vec<usize>>>,
    /// `strict_shift[k][j][rank]` for `j = 1..=k` (index 0 unused): the
    /// target of incrementing position `j` of a strict sequence.
    strict_shift: Vec<Vec<Vec<ShiftTarget>>>,
    /// `merged_shift[k][j][rank]`: the target of incrementing the first of
    /// the two collided positions `(j-1, j)` of a merged sequence; defined
    /// for `j = 2..=k`.
    merged_shift: Vec<Vec<Vec<ShiftTarget>>>,
}

impl HankelTables {
    pub fn new(d: usize) -> HankelTables {
        let binom = Binomials::new(2 * d);
        let seqs: Vec<Vec<Vec<usize>>> =
            (0..=d).map(|k| increasing_seqs(2 * d - k, k)).collect();
        let removed: Vec<Vec<Vec<usize>>> = seqs
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(|seq| {
                        (0..seq.len())
                            .map(|j| {
                                let mut s = seq.clone();
                                s.remove(j);
                                colex_rank(&s, &binom)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let mut strict_shift = Vec::with_capacity(d + 1);
        let mut merged_shift = Vec::with_capacity(d + 1);
        for k in 0..=d {
            let bound = 2 * d - k;
            let mut strict_k = vec![Vec::new()]; // j = 0 unused
            let mut merged_k = vec![Vec::new(), Vec::new()]; // j = 0, 1 unused
            for j in 1..=k {
                let table = seqs[k]
                    .iter()
                    .map(|seq| {
                        let v = seq[j - 1] + 1;
                        if v > bound {
                            ShiftTarget::Invalid
                        } else if j == k || v < seq[j] {
                            let mut s = seq.clone();
                            s[j - 1] = v;
                            ShiftTarget::Strict(colex_rank(&s, &binom) as u32)
                        } else {
                            debug_assert_eq!(v, seq[j]);
                            let mut s = seq.clone();
                            s[j - 1] = v;
                            s.remove(j);
                            ShiftTarget::Merged(colex_rank(&s, &binom) as u32)
                        }
                    })
                    .collect();
                strict_k.push(table);
            }
            for j in 2..=k {
                // merged sequences are length k-1; the duplicate value sits
                // at positions (j-1, j) of the expanded sequence
                let table = seqs[k - 1]
                    .iter()
                    .map(|delta| {
                        let v = delta[j - 2] + 1;
                        if v > bound {
                            ShiftTarget::Invalid
                        } else if j - 1 == delta.len() || v < delta[j - 1] {
                            let mut s = delta.clone();
                            s.insert(j - 1, v);
                            ShiftTarget::Strict(colex_rank(&s, &binom) as u32)
                        } else {
                            debug_assert_eq!(v, delta[j - 1]);
                            ShiftTarget::Merged(colex_rank(delta, &binom) as u32)
                        }
                    })
                    .collect();
                merged_k.push(table);
            }
            strict_shift.push(strict_k);
            merged_shift.push(merged_k);
        }

        HankelTables {
            d,
            binom,
            seqs,
            removed,
            strict_shift,
            merged_shift,
        }
    }

    fn block_len(&self, k: usize) -> usize {
        self.binom.c(2 * self.d - k, k) as usize
    }
}

/// Rewrites the row-omitted minor `[1, ..., ^i, ..., k | beta]` over the
/// maximal minors by direct enumeration of the shift subsets, dropping
/// non-increasing results. The reference straightening; the engine's dynamic
/// program is cross-checked against it.
pub fn straighten_row_omitted(
    d: usize,
    i: usize,
    k: usize,
    beta: &[usize],
) -> Result<MaxMinorVector> {
    if !(1 <= i && i <= k && k <= d) {
        return Err(Error::IndexOutOfRange(format!(
            "need 1 <= i <= k <= d, got i = {i}, k = {k}, d = {d}"
        )));
    }
    if beta.len() != k - 1 {
        return Err(Error::IndexOutOfRange(format!(
            "beta must have length k-1 = {}, got {}",
            k - 1,
            beta.len()
        )));
    }
    if !beta.windows(2).all(|w| w[0] < w[1])
        || beta.iter().any(|&b| b < 1 || b > 2 * d - k)
    {
        return Err(Error::IndexOutOfRange(format!(
            "beta must be strictly increasing within [1, {}]",
            2 * d - k
        )));
    }

    let tables = HankelTables::new(d);
    let mut out = MaxMinorVector::zero(d);
    let ones = k - i;
    let len = k - 1;
    // all J subset of [k-1] with |J| = k - i
    let mut chosen = vec![false; len];
    fn rec(
        pos: usize,
        left: usize,
        chosen: &mut Vec<bool>,
        beta: &[usize],
        tables: &HankelTables,
        out: &mut MaxMinorVector,
    ) {
        let len = chosen.len();
        if left > len - pos {
            return;
        }
        if pos == len {
            let shifted: Vec<usize> = beta
                .iter()
                .zip(chosen.iter())
                .map(|(&b, &c)| b + usize::from(c))
                .collect();
            if shifted.windows(2).all(|w| w[0] < w[1]) {
                let prev = out.get(tables, &shifted);
                out.set(tables, &shifted, prev + ExactScalar::one());
            }
            return;
        }
        chosen[pos] = true;
        if left > 0 {
            rec(pos + 1, left - 1, chosen, beta, tables, out);
        }
        chosen[pos] = false;
        rec(pos + 1, left, chosen, beta, tables, out);
    }
    rec(0, ones, &mut chosen, beta, &tables, &mut out);
    Ok(out)
}

/// One straightening table: per shift count, the in-progress coefficients
/// over strict sequences and over sequences collided at the live boundary.
struct DpCell {
    strict: Vec<ExactScalar>,
    merged: Vec<ExactScalar>,
}

/// Directional derivative in the maximal-minor basis: the cofactor pass
/// produces `b(i, g)`; the straightening dynamic program folds the shifted
/// indicator sums back onto maximal minors.
fn derivative_directional(
    tables: &HankelTables,
    p: &MaxMinorVector,
    w: &[ExactScalar],
) -> MaxMinorVector {
    let d = p.d;
    let mut out = MaxMinorVector::zero(d);
    for s in 1..=d {
        let Some(block) = &p.blocks[s] else { continue };
        let k = s - 1;
        let gamma_len = tables.binom.c(2 * d - s, s - 1) as usize;

        // cofactor pass: coefficient of the minor with row i and column
        // beta_j removed is (-1)^{i+j} w_{i + beta_j - 1} c_beta
        let mut b = vec![vec![ExactScalar::zero(); gamma_len]; s + 1];
        let seqs = &tables.seqs[s];
        for (rb, c) in block.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let beta = &seqs[rb];
            for j in 0..s {
                let gamma_rank = tables.removed[s][rb][j];
                for i in 1..=s {
                    let weight = &w[i + beta[j] - 2];
                    if weight.is_zero() {
                        continue;
                    }
                    let term = weight * c;
                    let slot = &mut b[i][gamma_rank];
                    if (i + j + 1) % 2 == 0 {
                        *slot += &term;
                    } else {
                        *slot -= &term;
                    }
                }
            }
        }

        // straightening: row i expands over shift subsets of size s - i;
        // one table per shift count keeps the rows separate
        let strict_len = tables.block_len(k);
        let merged_len = if k == 0 {
            0
        } else {
            tables.binom.c(2 * d - k, k - 1) as usize
        };
        let out_block =
            out.blocks[k].get_or_insert_with(|| vec![ExactScalar::zero(); strict_len]);
        for shifts in 0..=k {
            let row = &b[s - shifts];
            if row.iter().all(ExactScalar::is_zero) {
                continue;
            }
            let mut cells: Vec<DpCell> = (0..=shifts)
                .map(|_| DpCell {
                    strict: vec![ExactScalar::zero(); strict_len],
                    merged: vec![ExactScalar::zero(); merged_len],
                })
                .collect();
            // gamma ranks embed into I(2d-k, k) as a prefix
            cells[0].strict[..gamma_len].clone_from_slice(row);

            for j in 1..=k {
                for i in (1..=shifts.min(j)).rev() {
                    let mut new_merged = vec![ExactScalar::zero(); merged_len];
                    // split borrow: cells[i-1] is still at column j-1
                    let (lower, upper) = cells.split_at_mut(i);
                    let (src, dst) = (&lower[i - 1], &mut upper[0]);
                    let shift = &tables.strict_shift[k][j];
                    for (r, v) in src.strict.iter().enumerate() {
                        if v.is_zero() {
                            continue;
                        }
                        match shift[r] {
                            ShiftTarget::Strict(t) => dst.strict[t as usize] += v,
                            ShiftTarget::Merged(t) => new_merged[t as usize] += v,
                            ShiftTarget::Invalid => {
                                debug_assert!(false, "mass on an out-of-range shift")
                            }
                        }
                    }
                    if j >= 2 {
                        let shift = &tables.merged_shift[k][j];
                        for (r, v) in src.merged.iter().enumerate() {
                            if v.is_zero() {
                                continue;
                            }
                            match shift[r] {
                                ShiftTarget::Strict(t) => dst.strict[t as usize] += v,
                                ShiftTarget::Merged(t) => new_merged[t as usize] += v,
                                ShiftTarget::Invalid => {
                                    debug_assert!(false, "mass on an out-of-range shift")
                                }
                            }
                        }
                    }
                    // carrying a collision past its boundary would repeat a
                    // column, so the old merged mass of this cell is dropped
                    dst.merged = new_merged;
                }
            }
            debug_assert!(cells[shifts].merged.iter().all(ExactScalar::is_zero));
            for (slot, v) in out_block.iter_mut().zip(&cells[shifts].strict) {
                *slot += v;
            }
        }
    }
    out
}

/// `dP/dx_l` over the maximal-minor basis.
pub fn hankel_derivative(
    h: &HankelArrangement,
    p: &MaxMinorVector,
    l: u32,
) -> Result<MaxMinorVector> {
    if l == 0 || l > h.nvars {
        return Err(Error::IndexOutOfRange(format!(
            "variable {l} outside 1..={}",
            h.nvars
        )));
    }
    let tables = HankelTables::new(h.d);
    Ok(derivative_directional(
        &tables,
        p,
        &h.direction_weights(&LinearForm::single(l)),
    ))
}

struct HankelSemantics<'a> {
    h: &'a HankelArrangement,
    tables: &'a HankelTables,
}

impl CircuitSemantics for HankelSemantics<'_> {
    type State = MaxMinorVector;

    fn input(&self, var: u32) -> Result<MaxMinorVector> {
        let base = MaxMinorVector::det_representation(self.h.d);
        Ok(derivative_directional(
            self.tables,
            &base,
            &self.h.direction_weights(&LinearForm::single(var)),
        ))
    }

    fn constant(&self, c: &ExactScalar) -> Result<MaxMinorVector> {
        Ok(MaxMinorVector::det_representation(self.h.d).scaled(c))
    }

    fn add(&self, a: MaxMinorVector, b: MaxMinorVector) -> Result<MaxMinorVector> {
        Ok(a.merge(b))
    }

    fn mul_lin(&self, form: &LinearForm, a: MaxMinorVector) -> Result<MaxMinorVector> {
        if form.is_zero() {
            return Ok(MaxMinorVector::zero(self.h.d));
        }
        Ok(derivative_directional(
            self.tables,
            &a,
            &self.h.direction_weights(form),
        ))
    }
}

/// Theorem-2 evaluation: `<det H_d, g>` for the polynomial `g` computed by
/// the skew circuit `c`, exactly, with `phi^{2d}`-sized state.
pub fn hankeldiff_evaluate(h: &HankelArrangement, c: &Circuit) -> Result<ExactScalar> {
    if !c.is_skew() {
        return Err(Error::NonSkew);
    }
    match c.degree() {
        None => return Ok(ExactScalar::zero()),
        Some(deg) if deg as usize != h.d => {
            return Err(Error::DegreeMismatch(format!(
                "circuit degree {deg} does not match arrangement size {}",
                h.d
            )))
        }
        Some(_) => {}
    }
    let tables = HankelTables::new(h.d);
    let sem = HankelSemantics { h, tables: &tables };
    let state = evaluate_circuit(&sem, c)?;
    Ok(state.scalar_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::minor::gendiff_evaluate;
    use crate::poly::apolar_inner_product;

    /// Arrangement with generic forms `l_m = x_m`.
    fn generic(d: usize) -> HankelArrangement {
        let forms = (1..=2 * d as u32 - 1).map(LinearForm::single).collect();
        HankelArrangement::new(d, forms).unwrap()
    }

    #[test]
    fn entry_layout() {
        let h = generic(2);
        assert_eq!(h.entry(1, 1), Some(&LinearForm::single(1)));
        assert_eq!(h.entry(2, 2), Some(&LinearForm::single(3)));
        assert_eq!(h.entry(2, 3), None);
        assert_eq!(h.entry(3, 3), None);
    }

    #[test]
    fn straighten_examples() {
        // d=2: omit row 1 of a 2-row minor with beta = (1); both C2[2|1]
        // and C2[1|2] equal l2
        let tables = HankelTables::new(2);
        let s = straighten_row_omitted(2, 1, 2, &[1]).unwrap();
        assert_eq!(s.get(&tables, &[2]), ExactScalar::one());
        assert_eq!(s.get(&tables, &[1]), ExactScalar::zero());
        assert_eq!(s.get(&tables, &[3]), ExactScalar::zero());

        // omit the last row: the identity case
        let s = straighten_row_omitted(3, 3, 3, &[1, 3]).unwrap();
        assert_eq!(s.get(&tables_for(3), &[1, 3]), ExactScalar::one());

        // every shift collides: beta = (1, 2) with one mandatory shift of
        // its first position gives (2,2); of the second gives (1,3)
        let s = straighten_row_omitted(3, 2, 3, &[1, 2]).unwrap();
        assert_eq!(s.get(&tables_for(3), &[1, 3]), ExactScalar::one());
        assert_eq!(s.get(&tables_for(3), &[2, 3]), ExactScalar::zero());
    }

    fn tables_for(d: usize) -> HankelTables {
        HankelTables::new(d)
    }

    #[test]
    fn straighten_rejects_bad_indices() {
        assert!(straighten_row_omitted(2, 3, 2, &[1]).is_err());
        assert!(straighten_row_omitted(2, 1, 2, &[9]).is_err());
        assert!(straighten_row_omitted(2, 1, 2, &[1, 2]).is_err());
    }

    #[test]
    fn straighten_matches_symbolic_minor_exhaustively() {
        // acceptance-scale check at d <= 3: the expansion of the straightened
        // combination equals the omitted-row minor itself
        for d in 1..=3usize {
            let h = generic(d);
            let tables = HankelTables::new(d);
            let arr = h.arrangement_matrix().unwrap();
            for k in 1..=d {
                for i in 1..=k {
                    for beta in increasing_seqs(2 * d - k, k - 1) {
                        let rows: Vec<usize> =
                            (1..=k).filter(|&r| r != i).collect();
                        let expect = arr.minor_poly(&rows, &beta);
                        let got = straighten_row_omitted(d, i, k, &beta)
                            .unwrap()
                            .to_poly(&h, &tables)
                            .unwrap();
                        assert_eq!(got, expect, "d={d} k={k} i={i} beta={beta:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn derivative_examples() {
        // d=2, l_m = x_m: P = [1,2] = det H_2 = x1 x3 - x2^2
        let h = generic(2);
        let tables = HankelTables::new(2);
        let p = MaxMinorVector::det_representation(2);

        let d1 = hankel_derivative(&h, &p, 1).unwrap();
        assert_eq!(d1.get(&tables, &[3]), ExactScalar::one());
        assert_eq!(
            d1.to_poly(&h, &tables).unwrap(),
            SparsePoly::var(3)
        );

        let d2 = hankel_derivative(&h, &p, 2).unwrap();
        assert_eq!(d2.get(&tables, &[2]), ExactScalar::from(-2));
        assert_eq!(
            d2.to_poly(&h, &tables).unwrap(),
            SparsePoly::from_terms(&[(-2, &[(2, 1)])])
        );

        let mut scalar_only = MaxMinorVector::zero(2);
        scalar_only.set(&tables, &[], ExactScalar::from(5));
        assert!(hankel_derivative(&h, &scalar_only, 1).unwrap().is_zero());
    }

    #[test]
    fn derivative_matches_symbolic_partial_exhaustively() {
        // every basis vector, every variable, d <= 3, generic forms
        for d in 1..=3usize {
            let h = generic(d);
            let tables = HankelTables::new(d);
            for k in 1..=d {
                for beta in increasing_seqs(2 * d - k, k) {
                    let mut p = MaxMinorVector::zero(d);
                    p.set(&tables, &beta, ExactScalar::one());
                    let minor = h.maximal_minor_poly(&beta).unwrap();
                    for l in 1..=(2 * d as u32 - 1) {
                        let got = hankel_derivative(&h, &p, l)
                            .unwrap()
                            .to_poly(&h, &tables)
                            .unwrap();
                        assert_eq!(got, minor.partial(l), "d={d} beta={beta:?} l={l}");
                    }
                }
            }
        }
    }

    #[test]
    fn evaluate_examples() {
        let h = generic(2);
        let c13 = parse_circuit("g1 = var 1\ng2 = mullin 1:3 g1\n").unwrap();
        assert_eq!(hankeldiff_evaluate(&h, &c13).unwrap(), ExactScalar::from(1));

        let c22 = parse_circuit("g1 = var 2\ng2 = mullin 1:2 g1\n").unwrap();
        assert_eq!(hankeldiff_evaluate(&h, &c22).unwrap(), ExactScalar::from(-2));

        let c11 = parse_circuit("g1 = var 1\ng2 = mullin 1:1 g1\n").unwrap();
        assert_eq!(hankeldiff_evaluate(&h, &c11).unwrap(), ExactScalar::zero());
    }

    #[test]
    fn engines_agree_on_materialized_hankel() {
        // mixed forms, all two-gate products plus a composite circuit
        let d = 3;
        let forms: Vec<LinearForm> = vec![
            LinearForm::single(1),
            LinearForm::from_pairs(vec![(2, ExactScalar::from(2)), (1, ExactScalar::from(-1))]),
            LinearForm::single(2),
            LinearForm::from_pairs(vec![(3, ExactScalar::from(1)), (4, ExactScalar::from(3))]),
            LinearForm::single(4),
        ];
        let h = HankelArrangement::new(d, forms).unwrap();
        let x = h.hankel_matrix().unwrap();
        let det = x.det_poly();

        for v1 in 1..=4u32 {
            for v2 in 1..=4u32 {
                for v3 in 1..=4u32 {
                    let text = format!(
                        "g1 = var {v1}\ng2 = mullin 1:{v2} g1\ng3 = mullin 2:{v3},-1:1 g2\n"
                    );
                    let c = parse_circuit(&text).unwrap();
                    let hv = hankeldiff_evaluate(&h, &c).unwrap();
                    let gv = gendiff_evaluate(&x, &c).unwrap();
                    assert_eq!(hv, gv, "v = ({v1},{v2},{v3})");
                    let oracle = apolar_inner_product(
                        &crate::circuit::expand_circuit(&c).unwrap(),
                        &det,
                    )
                    .unwrap();
                    assert_eq!(hv, oracle);
                }
            }
        }
    }

    #[test]
    fn vandermonde_arrangement() {
        let h = vandermonde_hankel(2, 1).unwrap();
        assert_eq!(h.forms().len(), 1);
        // l1 = 1^2 x1 + 2^2 x2
        assert_eq!(h.form(1).coefficient_of(1), ExactScalar::from(1));
        assert_eq!(h.form(1).coefficient_of(2), ExactScalar::from(4));

        let h = vandermonde_hankel(1, 1).unwrap();
        assert_eq!(h.form(1).to_poly(), SparsePoly::var(1));

        for (n, d) in [(3usize, 2usize), (5, 3), (4, 4)] {
            let h = vandermonde_hankel(n, d).unwrap();
            assert_eq!(h.forms().len(), 2 * d - 1);
        }
        assert!(matches!(
            vandermonde_hankel(2, 3),
            Err(Error::BadDims(_))
        ));
    }

    #[test]
    fn basis_dimension_counts() {
        assert_eq!(hankel_basis_dimension(2), 5);
        assert_eq!(hankel_basis_dimension(3), 13);
        assert_eq!(hankel_basis_dimension(10), 10946);
    }

    #[test]
    fn iterated_derivatives_stay_in_basis_span() {
        // differentiating det H_d along random-ish variable sequences keeps
        // an exact maximal-minor representation: the expansion always equals
        // the corresponding symbolic derivative of det H_d
        let d = 3;
        let h = generic(d);
        let tables = HankelTables::new(d);
        let det = h.hankel_matrix().unwrap().det_poly();
        for seq in [[1u32, 2, 3], [5, 1, 4], [2, 2, 2], [3, 4, 5]] {
            let mut state = MaxMinorVector::det_representation(d);
            let mut expect = det.clone();
            for &l in &seq {
                state = hankel_derivative(&h, &state, l).unwrap();
                expect = expect.partial(l);
                assert_eq!(state.to_poly(&h, &tables).unwrap(), expect);
            }
        }
    }
}
