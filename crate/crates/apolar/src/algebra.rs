//! Apolar algebras and the bilinear-complexity laboratory.
//!
//! For a homogeneous `f`, the apolar algebra `A_f` is the quotient of the
//! ring of differential operators by the annihilator of `f`; it is
//! vector-space isomorphic to `Diff(f)` via `h -> h(d) f`. This module
//! constructs a monomial basis of `A_f`, its structure tensor, and an
//! evaluator that runs arbitrary (not necessarily skew) circuits through the
//! algebra's multiplication.
//!
//! On top of that sit the laboratory pieces:
//!
//! * subset convolution as multiplication in `A_{x_1...x_n}`, both the naive
//!   `3^n`-product loop and the ranked zeta/Moebius algorithm with an
//!   instrumented multiplication count;
//! * the `(I|J)` basis of the apolar algebra of the determinant with its
//!   sign rule, the Clifford structure tensor, its gamma-matrix
//!   representation, and the exact epsilon-degree-zero extraction recovering
//!   the determinant structure tensor from a Clifford tensor square;
//! * the interpolation construction turning a Waring decomposition of `f`
//!   into a structure-tensor decomposition with at most `(3d+1) r` simple
//!   terms.

use std::collections::BTreeMap;

use crate::circuit::{evaluate_circuit, Circuit, CircuitSemantics, LinearForm};
use crate::error::{Error, Result};
use crate::monomial::Monomial;
use crate::poly::{apply_diff_operator, diff_span_dim, SparsePoly};
use crate::scalar::ExactScalar;

/// Caps the dimension of a constructed algebra (the structure tensor is
/// quadratic in it).
pub const ALGEBRA_DIM_LIMIT: usize = 2048;

// ---------------------------------------------------------------------------
// Exact linear solving over monomial-indexed rows
// ---------------------------------------------------------------------------

/// Echelon basis of the images `d^a f` with coordinate bookkeeping, so that
/// arbitrary elements of `Diff(f)` can be written over the chosen basis.
#[derive(Debug, Default)]
struct CoordSolver {
    /// Monic reduced rows keyed by leading monomial, with the coordinates of
    /// each row over the original basis images.
    rows: BTreeMap<Monomial, (SparsePoly, Vec<ExactScalar>)>,
    dim: usize,
}

impl CoordSolver {
    fn new() -> CoordSolver {
        CoordSolver::default()
    }

    /// Reduces `p`, returning the remainder and the coordinates of `p - rem`
    /// over the original basis.
    fn reduce(&self, p: &SparsePoly) -> (SparsePoly, Vec<ExactScalar>) {
        let mut cur = p.clone();
        let mut coords = vec![ExactScalar::zero(); self.dim];
        loop {
            let hit = cur
                .terms()
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .find_map(|(m, c)| self.rows.get(m).map(|row| (row, c.clone())));
            match hit {
                Some(((poly, row_coords), c)) => {
                    cur = &cur - &poly.scale(&c);
                    for (slot, rc) in coords.iter_mut().zip(row_coords) {
                        slot.add_mul_assign(&c, rc);
                    }
                }
                None => return (cur, coords),
            }
        }
    }

    /// Installs `p` as basis element number `self.dim` if independent.
    fn try_insert(&mut self, p: &SparsePoly) -> bool {
        let (rem, used) = self.reduce(p);
        if rem.is_zero() {
            return false;
        }
        let (lead_m, lead_c) = rem.terms().next_back().expect("nonzero");
        let inv = lead_c.inv().expect("nonzero leading coefficient");
        // rem = p - (p - rem), so the monic row rem/lead has coordinates
        // (e_new - used) / lead over the original basis
        let mut coords = used;
        coords.resize(self.dim + 1, ExactScalar::zero());
        for slot in coords.iter_mut() {
            *slot = -&(&*slot * &inv);
        }
        coords[self.dim] = inv.clone();
        self.rows.insert(lead_m.clone(), (rem.scale(&inv), coords));
        self.dim += 1;
        for (_, (_, c)) in self.rows.iter_mut() {
            c.resize(self.dim, ExactScalar::zero());
        }
        true
    }

    /// Coordinates of `p` over the original basis; error when out of span.
    fn solve(&self, p: &SparsePoly) -> Result<Vec<ExactScalar>> {
        let (rem, mut coords) = self.reduce(p);
        if !rem.is_zero() {
            return Err(Error::SolveFailure(format!(
                "element outside the span, remainder {rem}"
            )));
        }
        coords.resize(self.dim, ExactScalar::zero());
        Ok(coords)
    }
}

// ---------------------------------------------------------------------------
// Apolar algebras
// ---------------------------------------------------------------------------

/// A monomial basis of the apolar algebra of `f`, with the images `d^a f`,
/// the top (degree-`d`) basis element `q`, and the pairing `<f, q>`.
#[derive(Debug)]
pub struct ApolarAlgebra {
    f: SparsePoly,
    degree: u32,
    basis: Vec<Monomial>,
    basis_images: Vec<SparsePoly>,
    degree_one: Vec<usize>,
    top: usize,
    top_pairing: ExactScalar,
    solver: CoordSolver,
    /// Coordinates of `d_v f` per variable, zero when annihilated.
    var_images: Vec<Vec<ExactScalar>>,
}

/// Greedy monomial basis: candidate monomials ordered by degree then
/// lexicographically, each kept when its image `d^a f` extends the
/// independent set, until the dimension of `Diff(f)` is reached.
pub fn apolar_monomial_basis(f: &SparsePoly) -> Result<ApolarAlgebra> {
    if f.is_zero() {
        return Err(Error::DegreeMismatch("f must be nonzero".into()));
    }
    let degree = f
        .homogeneous_degree()
        .ok_or_else(|| Error::DegreeMismatch("f must be homogeneous".into()))?;
    let target = diff_span_dim(f)?;
    if target > ALGEBRA_DIM_LIMIT {
        return Err(Error::SizeLimit(format!(
            "algebra dimension {target} exceeds {ALGEBRA_DIM_LIMIT}"
        )));
    }

    // divisor closure of the support, iterated in degree-then-lex order
    let mut candidates: std::collections::BTreeSet<Monomial> = std::collections::BTreeSet::new();
    let mut stack: Vec<Monomial> = f.terms().map(|(m, _)| m.clone()).collect();
    while let Some(m) = stack.pop() {
        if !candidates.insert(m.clone()) {
            continue;
        }
        for (v, _) in m.iter() {
            stack.push(m.checked_div(&Monomial::var(v)).expect("divisor"));
        }
    }

    let mut solver = CoordSolver::new();
    let mut basis = Vec::new();
    let mut basis_images = Vec::new();
    for alpha in &candidates {
        if basis.len() == target {
            break;
        }
        let mut op = SparsePoly::zero();
        op.add_term(alpha.clone(), ExactScalar::one());
        let image = apply_diff_operator(&op, f);
        if image.is_zero() {
            continue;
        }
        if solver.try_insert(&image) {
            basis.push(alpha.clone());
            basis_images.push(image);
        }
    }
    debug_assert_eq!(basis.len(), target, "monomial images must span Diff(f)");

    let top = basis
        .iter()
        .position(|m| m.degree() == degree)
        .expect("one degree-d monomial is always selected");
    let top_pairing = basis_images[top].coefficient(&Monomial::one());
    let degree_one = basis
        .iter()
        .enumerate()
        .filter_map(|(i, m)| (m.degree() == 1).then_some(i))
        .collect();

    let mut var_images = vec![Vec::new()];
    for v in 1..=f.max_var() {
        let image = f.partial(v);
        let coords = if image.is_zero() {
            vec![ExactScalar::zero(); basis.len()]
        } else {
            solver.solve(&image)?
        };
        var_images.push(coords);
    }

    Ok(ApolarAlgebra {
        f: f.clone(),
        degree,
        basis,
        basis_images,
        degree_one,
        top,
        top_pairing,
        solver,
        var_images,
    })
}

impl ApolarAlgebra {
    pub fn f(&self) -> &SparsePoly {
        &self.f
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn basis_images(&self) -> &[SparsePoly] {
        &self.basis_images
    }

    /// Indices of the degree-one basis monomials.
    pub fn degree_one(&self) -> &[usize] {
        &self.degree_one
    }

    /// Index of the unique degree-`d` basis monomial `q`.
    pub fn top(&self) -> usize {
        self.top
    }

    /// `<f, q>`.
    pub fn top_pairing(&self) -> &ExactScalar {
        &self.top_pairing
    }

    /// Coordinates of an element of `Diff(f)` over the basis images.
    pub fn coordinates_of_image(&self, p: &SparsePoly) -> Result<Vec<ExactScalar>> {
        self.solver.solve(p)
    }

    /// Coordinates of the class of `d_v`; the zero vector when `d_v f = 0`.
    pub fn var_coordinates(&self, v: u32) -> Vec<ExactScalar> {
        self.var_images
            .get(v as usize)
            .cloned()
            .unwrap_or_else(|| vec![ExactScalar::zero(); self.dim()])
    }

    /// `sum_i c_i (d^{a_i} f)`, the image under the vector-space isomorphism.
    pub fn image_of_coordinates(&self, coords: &[ExactScalar]) -> SparsePoly {
        let mut acc = SparsePoly::zero();
        for (c, img) in coords.iter().zip(&self.basis_images) {
            if !c.is_zero() {
                acc = &acc + &img.scale(c);
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Structure tensors
// ---------------------------------------------------------------------------

/// A sparse 3-tensor `sum e_i (x) e_j (x) (e_i . e_j)` over a labeled basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureTensor {
    dim: usize,
    labels: Vec<String>,
    /// Sorted `(i, j, k, coefficient)` entries, no zeros.
    entries: Vec<(usize, usize, usize, ExactScalar)>,
}

impl StructureTensor {
    pub fn from_entries(
        dim: usize,
        labels: Vec<String>,
        raw: Vec<(usize, usize, usize, ExactScalar)>,
    ) -> StructureTensor {
        assert_eq!(labels.len(), dim);
        let mut map: BTreeMap<(usize, usize, usize), ExactScalar> = BTreeMap::new();
        for (i, j, k, c) in raw {
            assert!(i < dim && j < dim && k < dim);
            let slot = map.entry((i, j, k)).or_insert_with(ExactScalar::zero);
            *slot += &c;
        }
        let entries = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((i, j, k), c)| (i, j, k, c))
            .collect();
        StructureTensor {
            dim,
            labels,
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entries(&self) -> &[(usize, usize, usize, ExactScalar)] {
        &self.entries
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn coefficient(&self, i: usize, j: usize, k: usize) -> ExactScalar {
        match self
            .entries
            .binary_search_by(|(a, b, c, _)| (*a, *b, *c).cmp(&(i, j, k)))
        {
            Ok(idx) => self.entries[idx].3.clone(),
            Err(_) => ExactScalar::zero(),
        }
    }

    /// Bilinear product of coordinate vectors through the tensor.
    pub fn product(&self, u: &[ExactScalar], v: &[ExactScalar]) -> Vec<ExactScalar> {
        let mut out = vec![ExactScalar::zero(); self.dim];
        for (i, j, k, c) in &self.entries {
            if u[*i].is_zero() || v[*j].is_zero() {
                continue;
            }
            let t = &(&u[*i] * &v[*j]) * c;
            out[*k] += &t;
        }
        out
    }

    /// Number of `(i, j)` pairs carrying some nonzero entry.
    pub fn nonzero_pairs(&self) -> usize {
        let mut pairs: Vec<(usize, usize)> =
            self.entries.iter().map(|(i, j, _, _)| (*i, *j)).collect();
        pairs.dedup();
        pairs.len()
    }
}

/// The structure tensor of `A_f` over the constructed monomial basis: entry
/// `(i, j, .)` holds the coordinates of `d^{a_i + a_j} f`.
pub fn structure_tensor(a: &ApolarAlgebra) -> Result<StructureTensor> {
    let dim = a.dim();
    let mut cache: BTreeMap<Monomial, Vec<ExactScalar>> = BTreeMap::new();
    let mut entries = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let gamma = a.basis[i].mul(&a.basis[j]);
            let coords = match cache.get(&gamma) {
                Some(c) => c.clone(),
                None => {
                    let mut op = SparsePoly::zero();
                    op.add_term(gamma.clone(), ExactScalar::one());
                    let image = apply_diff_operator(&op, &a.f);
                    let c = if image.is_zero() {
                        vec![ExactScalar::zero(); dim]
                    } else {
                        a.solver.solve(&image)?
                    };
                    cache.insert(gamma, c.clone());
                    c
                }
            };
            for (k, c) in coords.into_iter().enumerate() {
                if !c.is_zero() {
                    entries.push((i, j, k, c));
                }
            }
        }
    }
    let labels = a.basis.iter().map(|m| m.to_string()).collect();
    Ok(StructureTensor::from_entries(dim, labels, entries))
}

// ---------------------------------------------------------------------------
// Circuit evaluation through the algebra
// ---------------------------------------------------------------------------

struct AlgebraSemantics<'a> {
    algebra: &'a ApolarAlgebra,
    tensor: &'a StructureTensor,
}

impl CircuitSemantics for AlgebraSemantics<'_> {
    type State = Vec<ExactScalar>;

    fn input(&self, var: u32) -> Result<Vec<ExactScalar>> {
        Ok(self.algebra.var_coordinates(var))
    }

    fn constant(&self, c: &ExactScalar) -> Result<Vec<ExactScalar>> {
        let mut v = vec![ExactScalar::zero(); self.algebra.dim()];
        v[0] = c.clone(); // the unit monomial is always basis element 0
        Ok(v)
    }

    fn add(&self, mut a: Vec<ExactScalar>, b: Vec<ExactScalar>) -> Result<Vec<ExactScalar>> {
        for (x, y) in a.iter_mut().zip(b) {
            *x += &y;
        }
        Ok(a)
    }

    fn mul_lin(&self, form: &LinearForm, a: Vec<ExactScalar>) -> Result<Vec<ExactScalar>> {
        let mut left = vec![ExactScalar::zero(); self.algebra.dim()];
        for (v, c) in form.coeffs() {
            for (slot, x) in left.iter_mut().zip(self.algebra.var_coordinates(v)) {
                slot.add_mul_assign(c, &x);
            }
        }
        Ok(self.tensor.product(&left, &a))
    }

    fn mul(&self, a: Vec<ExactScalar>, b: Vec<ExactScalar>) -> Result<Vec<ExactScalar>> {
        Ok(self.tensor.product(&a, &b))
    }
}

/// Evaluates `<f, g>` by running the circuit through `A_f`: variables map to
/// their degree-one classes, products go through the structure tensor (so
/// general multiplication gates are allowed here), and the result is the top
/// coordinate times `<f, q>`.
pub fn algebra_evaluate(
    a: &ApolarAlgebra,
    t: &StructureTensor,
    c: &Circuit,
) -> Result<ExactScalar> {
    match c.degree() {
        None => return Ok(ExactScalar::zero()),
        Some(deg) if deg != a.degree() => {
            return Err(Error::DegreeMismatch(format!(
                "circuit degree {deg} does not match deg f = {}",
                a.degree()
            )))
        }
        Some(_) => {}
    }
    let sem = AlgebraSemantics {
        algebra: a,
        tensor: t,
    };
    let state = evaluate_circuit(&sem, c)?;
    Ok(&state[a.top()] * a.top_pairing())
}

// ---------------------------------------------------------------------------
// Subset convolution
// ---------------------------------------------------------------------------

fn subset_len_to_n(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::LengthMismatch(format!(
            "input length {len} is not a power of two"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

/// `(sigma * tau)(S) = sum_{U subset of S} sigma(U) tau(S - U)` by the
/// direct double loop: `3^n` multiplications.
pub fn subset_convolution_naive(
    sigma: &[ExactScalar],
    tau: &[ExactScalar],
) -> Result<Vec<ExactScalar>> {
    if sigma.len() != tau.len() {
        return Err(Error::LengthMismatch(format!(
            "lengths {} and {} differ",
            sigma.len(),
            tau.len()
        )));
    }
    subset_len_to_n(sigma.len())?;
    let full = sigma.len();
    let mut out = vec![ExactScalar::zero(); full];
    for s in 0..full {
        let mut u = s;
        loop {
            out[s].add_mul_assign(&sigma[u], &tau[s & !u]);
            if u == 0 {
                break;
            }
            u = (u - 1) & s;
        }
    }
    Ok(out)
}

pub fn subset_convolution_fast(
    sigma: &[ExactScalar],
    tau: &[ExactScalar],
) -> Result<Vec<ExactScalar>> {
    subset_convolution_fast_counted(sigma, tau).map(|(v, _)| v)
}

/// Ranked zeta transform, pointwise rank convolution, ranked Moebius
/// inversion. Exact, and the pointwise products are counted: exactly
/// `2^n (n+1)(n+2)/2 <= (n+1)^2 2^n` of them.
pub fn subset_convolution_fast_counted(
    sigma: &[ExactScalar],
    tau: &[ExactScalar],
) -> Result<(Vec<ExactScalar>, u64)> {
    if sigma.len() != tau.len() {
        return Err(Error::LengthMismatch(format!(
            "lengths {} and {} differ",
            sigma.len(),
            tau.len()
        )));
    }
    let n = subset_len_to_n(sigma.len())?;
    let full = sigma.len();

    let ranked = |src: &[ExactScalar]| -> Vec<Vec<ExactScalar>> {
        let mut slices = vec![vec![ExactScalar::zero(); full]; n + 1];
        for (s, v) in src.iter().enumerate() {
            slices[s.count_ones() as usize][s] = v.clone();
        }
        for slice in &mut slices {
            for b in 0..n {
                for s in 0..full {
                    if s & (1 << b) != 0 {
                        let low = slice[s & !(1 << b)].clone();
                        slice[s] += &low;
                    }
                }
            }
        }
        slices
    };

    let zs = ranked(sigma);
    let zt = ranked(tau);

    let mut muls = 0u64;
    let mut conv = vec![vec![ExactScalar::zero(); full]; n + 1];
    for (r, slice) in conv.iter_mut().enumerate() {
        for (s, slot) in slice.iter_mut().enumerate() {
            for a in 0..=r {
                slot.add_mul_assign(&zs[a][s], &zt[r - a][s]);
                muls += 1;
            }
        }
    }

    for slice in &mut conv {
        for b in 0..n {
            for s in 0..full {
                if s & (1 << b) != 0 {
                    let low = slice[s & !(1 << b)].clone();
                    slice[s] -= &low;
                }
            }
        }
    }

    let out = (0..full)
        .map(|s| conv[s.count_ones() as usize][s].clone())
        .collect();
    Ok((out, muls))
}

// ---------------------------------------------------------------------------
// The (I|J) basis of the determinant's apolar algebra
// ---------------------------------------------------------------------------

/// Basis label `(I|J)` of `A_{det_n}`: strictly increasing row and column
/// sequences of equal length.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DetBasisLabel {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl DetBasisLabel {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Result<DetBasisLabel> {
        if rows.len() != cols.len() {
            return Err(Error::BadDims("row and column sets of unequal size".into()));
        }
        let incr = |s: &[usize]| s.windows(2).all(|w| w[0] < w[1]) && s.iter().all(|&v| v >= 1);
        if !incr(&rows) || !incr(&cols) {
            return Err(Error::BadDims(
                "labels require strictly increasing 1-based sequences".into(),
            ));
        }
        Ok(DetBasisLabel { rows, cols })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// The operator monomial `prod_t d_{(I_t, J_t)}` over the `n x n`
    /// variable grid `x_{(i-1)n + j}`.
    pub fn to_monomial(&self, n: usize) -> Monomial {
        let pairs: Vec<(u32, u32)> = self
            .rows
            .iter()
            .zip(&self.cols)
            .map(|(&i, &j)| (((i - 1) * n + j) as u32, 1))
            .collect();
        Monomial::from_pairs(&pairs)
    }
}

impl std::fmt::Display for DetBasisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |s: &[usize]| {
            s.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "({}|{})", join(&self.rows), join(&self.cols))
    }
}

/// Sign of the permutation sorting the concatenation of two strictly
/// increasing sequences: `(-1)^{inversions}`.
fn merge_sign(a: &[usize], b: &[usize]) -> i64 {
    let mut inversions = 0usize;
    for &x in a {
        inversions += b.iter().filter(|&&y| y < x).count();
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out
}

/// Product rule of the `(I|J)` basis: zero when row or column sets meet,
/// otherwise the sorted union with sign `sgn(I,I') sgn(J,J')`.
pub fn det_basis_product(p: &DetBasisLabel, q: &DetBasisLabel) -> Option<(i64, DetBasisLabel)> {
    let disjoint = |a: &[usize], b: &[usize]| a.iter().all(|x| !b.contains(x));
    if !disjoint(&p.rows, &q.rows) || !disjoint(&p.cols, &q.cols) {
        return None;
    }
    let sign = merge_sign(&p.rows, &q.rows) * merge_sign(&p.cols, &q.cols);
    let label = DetBasisLabel {
        rows: merge_sorted(&p.rows, &q.rows),
        cols: merge_sorted(&p.cols, &q.cols),
    };
    Some((sign, label))
}

/// All `(I|J)` labels for the `n x n` determinant, ordered by size then
/// lexicographically; `C(2n,n)` of them.
pub fn det_basis_labels(n: usize) -> Vec<DetBasisLabel> {
    let mut out = Vec::new();
    for k in 0..=n {
        for rows in crate::comb::increasing_seqs(n, k) {
            for cols in crate::comb::increasing_seqs(n, k) {
                out.push(DetBasisLabel {
                    rows: rows.clone(),
                    cols,
                });
            }
        }
    }
    out.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
    out
}

/// The structure tensor of `A_{det_n}` built from the product rule alone.
pub fn det_rule_structure_tensor(n: usize) -> StructureTensor {
    let labels = det_basis_labels(n);
    let index: BTreeMap<&DetBasisLabel, usize> =
        labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let mut entries = Vec::new();
    for (i, p) in labels.iter().enumerate() {
        for (j, q) in labels.iter().enumerate() {
            if let Some((sign, label)) = det_basis_product(p, q) {
                let k = index[&label]; // unions stay within [n]
                entries.push((i, j, k, ExactScalar::from(sign)));
            }
        }
    }
    let label_strings = labels.iter().map(|l| l.to_string()).collect();
    StructureTensor::from_entries(labels.len(), label_strings, entries)
}

/// The generic `n x n` determinant polynomial over variables `x_{(i-1)n+j}`.
pub fn generic_det_poly(n: usize) -> SparsePoly {
    let entries: Vec<Vec<LinearForm>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| LinearForm::single((i * n + j + 1) as u32))
                .collect()
        })
        .collect();
    crate::minor::SymbolicMatrix::new(entries)
        .expect("generic matrix within caps")
        .det_poly()
}

// ---------------------------------------------------------------------------
// Clifford algebra
// ---------------------------------------------------------------------------

/// The Clifford algebra on `n` generators with `x_i^2 = +1`: basis `X_U`
/// over subsets of `[n]` (as bitmasks), and `X_U X_U' = sgn(U,U') X_{U xor U'}`
/// where the sign counts the inversions of the stable merge.
#[derive(Debug, Clone)]
pub struct CliffordTensor {
    n: usize,
}

impl CliffordTensor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Sign and result mask of `X_u * X_v`.
    pub fn product(&self, u: usize, v: usize) -> (i64, usize) {
        // for each generator in v, the generators of u strictly above it
        // must step over it; equal generators square to +1
        let mut inversions = 0u32;
        for b in 0..self.n {
            if v & (1 << b) != 0 {
                inversions += (u >> (b + 1)).count_ones();
            }
        }
        (if inversions % 2 == 0 { 1 } else { -1 }, u ^ v)
    }

    /// All `4^n` entries, each `+-1`.
    pub fn to_structure_tensor(&self) -> StructureTensor {
        let dim = self.dim();
        let labels = (0..dim).map(|u| subset_label(self.n, u)).collect();
        let mut entries = Vec::with_capacity(dim * dim);
        for u in 0..dim {
            for v in 0..dim {
                let (sign, w) = self.product(u, v);
                entries.push((u, v, w, ExactScalar::from(sign)));
            }
        }
        StructureTensor::from_entries(dim, labels, entries)
    }
}

fn subset_label(n: usize, mask: usize) -> String {
    let elems: Vec<String> = (1..=n)
        .filter(|&i| mask & (1 << (i - 1)) != 0)
        .map(|i| i.to_string())
        .collect();
    format!("X{{{}}}", elems.join(","))
}

/// Clifford structure tensor for even `n <= 6`.
pub fn clifford_structure_tensor(n: usize) -> Result<CliffordTensor> {
    if n % 2 != 0 {
        return Err(Error::OddN(n));
    }
    if n > 6 {
        return Err(Error::SizeLimit(format!(
            "clifford tensor capped at n <= 6, got {n}"
        )));
    }
    Ok(CliffordTensor { n })
}

/// An exact Gaussian rational `re + im i`; the matrix representation at
/// `n = 4` needs the imaginary unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianScalar {
    pub re: ExactScalar,
    pub im: ExactScalar,
}

impl GaussianScalar {
    pub fn zero() -> GaussianScalar {
        GaussianScalar {
            re: ExactScalar::zero(),
            im: ExactScalar::zero(),
        }
    }

    pub fn real(re: ExactScalar) -> GaussianScalar {
        GaussianScalar {
            re,
            im: ExactScalar::zero(),
        }
    }

    pub fn imaginary(im: ExactScalar) -> GaussianScalar {
        GaussianScalar {
            re: ExactScalar::zero(),
            im,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn mul(&self, other: &GaussianScalar) -> GaussianScalar {
        GaussianScalar {
            re: &(&self.re * &other.re) - &(&self.im * &other.im),
            im: &(&self.re * &other.im) + &(&self.im * &other.re),
        }
    }

    pub fn add(&self, other: &GaussianScalar) -> GaussianScalar {
        GaussianScalar {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn scale(&self, s: i64) -> GaussianScalar {
        let s = ExactScalar::from(s);
        GaussianScalar {
            re: &self.re * &s,
            im: &self.im * &s,
        }
    }
}

/// A dense square matrix over Gaussian rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianMatrix {
    pub size: usize,
    pub data: Vec<GaussianScalar>,
}

impl GaussianMatrix {
    pub fn zero(size: usize) -> GaussianMatrix {
        GaussianMatrix {
            size,
            data: vec![GaussianScalar::zero(); size * size],
        }
    }

    pub fn identity(size: usize) -> GaussianMatrix {
        let mut m = GaussianMatrix::zero(size);
        for i in 0..size {
            m.data[i * size + i] = GaussianScalar::real(ExactScalar::one());
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &GaussianScalar {
        &self.data[i * self.size + j]
    }

    pub fn mul(&self, other: &GaussianMatrix) -> GaussianMatrix {
        assert_eq!(self.size, other.size);
        let n = self.size;
        let mut out = GaussianMatrix::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let t = a.mul(other.at(k, j));
                    out.data[i * n + j] = out.data[i * n + j].add(&t);
                }
            }
        }
        out
    }

    pub fn scale(&self, s: i64) -> GaussianMatrix {
        GaussianMatrix {
            size: self.size,
            data: self.data.iter().map(|v| v.scale(s)).collect(),
        }
    }

    /// Kronecker product.
    pub fn kron(&self, other: &GaussianMatrix) -> GaussianMatrix {
        let (a, b) = (self.size, other.size);
        let mut out = GaussianMatrix::zero(a * b);
        for i in 0..a {
            for j in 0..a {
                let s = self.at(i, j);
                if s.is_zero() {
                    continue;
                }
                for p in 0..b {
                    for q in 0..b {
                        out.data[(i * b + p) * (a * b) + (j * b + q)] = s.mul(other.at(p, q));
                    }
                }
            }
        }
        out
    }
}

fn pauli() -> (GaussianMatrix, GaussianMatrix, GaussianMatrix) {
    let e = |re: i64| GaussianScalar::real(ExactScalar::from(re));
    let im = |v: i64| GaussianScalar::imaginary(ExactScalar::from(v));
    let x = GaussianMatrix {
        size: 2,
        data: vec![e(0), e(1), e(1), e(0)],
    };
    let y = GaussianMatrix {
        size: 2,
        data: vec![e(0), im(-1), im(1), e(0)],
    };
    let z = GaussianMatrix {
        size: 2,
        data: vec![e(1), e(0), e(0), e(-1)],
    };
    (x, y, z)
}

/// The gamma-matrix representation: `X_U` maps to the ordered product of the
/// generator images, a `2^{n/2} x 2^{n/2}` matrix over Gaussian rationals
/// (real at `n = 2`). Supported for `n in {2, 4}`; one matrix per subset
/// mask, indexed like the tensor basis.
pub fn clifford_matrix_iso(n: usize) -> Result<Vec<GaussianMatrix>> {
    if n % 2 != 0 {
        return Err(Error::OddN(n));
    }
    let (x, y, z) = pauli();
    let generators: Vec<GaussianMatrix> = match n {
        2 => vec![z.clone(), x.clone()],
        4 => {
            let i2 = GaussianMatrix::identity(2);
            vec![x.kron(&i2), y.kron(&i2), z.kron(&x), z.kron(&y)]
        }
        other => {
            return Err(Error::SizeLimit(format!(
                "matrix representation implemented for n in {{2, 4}}, got {other}"
            )))
        }
    };
    let size = 1 << (n / 2);
    let dim = 1 << n;
    let mut images = Vec::with_capacity(dim);
    for mask in 0..dim {
        let mut m = GaussianMatrix::identity(size);
        for (b, gen) in generators.iter().enumerate() {
            if mask & (1 << b) != 0 {
                m = m.mul(gen);
            }
        }
        images.push(m);
    }
    Ok(images)
}

/// Checks that the representation is an algebra homomorphism on every basis
/// pair: `image(U) image(V) = sgn(U,V) image(U xor V)`.
pub fn verify_clifford_iso(n: usize) -> Result<()> {
    let tensor = clifford_structure_tensor(n)?;
    let images = clifford_matrix_iso(n)?;
    for u in 0..tensor.dim() {
        for v in 0..tensor.dim() {
            let (sign, w) = tensor.product(u, v);
            let lhs = images[u].mul(&images[v]);
            let rhs = images[w].scale(sign);
            if lhs != rhs {
                return Err(Error::VerificationFailure(format!(
                    "gamma images disagree with the sign rule at masks ({u}, {v})"
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Exact epsilon-extraction of the determinant tensor from Clifford squares
// ---------------------------------------------------------------------------

/// A Laurent polynomial in one indeterminate with exact coefficients; just
/// what the epsilon bookkeeping needs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaurentScalar {
    terms: BTreeMap<i64, ExactScalar>,
}

impl LaurentScalar {
    pub fn zero() -> LaurentScalar {
        LaurentScalar::default()
    }

    pub fn add_term(&mut self, exp: i64, c: ExactScalar) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exp) {
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

    pub fn coefficient(&self, exp: i64) -> ExactScalar {
        self.terms
            .get(&exp)
            .cloned()
            .unwrap_or_else(ExactScalar::zero)
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }
}

/// Result of [`clifford_det_decomposition`].
#[derive(Debug)]
pub struct CliffordDecompositionReport {
    /// `dim A_{det_n} = C(2n, n)`.
    pub dim: usize,
    /// Simple terms of the induced decomposition of the structure tensor.
    pub term_count: usize,
    /// Upper bound `(4n+1) * 7^2` from interpolating over the Strassen
    /// square.
    pub term_bound: usize,
}

/// Strassen's seven-term decomposition of the `2 x 2` matrix multiplication
/// tensor, in `e_{ij}` coordinates (row-major `e11, e12, e21, e22`).
fn strassen_triples() -> Vec<([i64; 4], [i64; 4], [i64; 4])> {
    vec![
        ([1, 0, 0, 1], [1, 0, 0, 1], [1, 0, 0, 1]),   // (A11+A22)(B11+B22)
        ([0, 0, 1, 1], [1, 0, 0, 0], [0, 0, 1, -1]),  // (A21+A22)B11
        ([1, 0, 0, 0], [0, 1, 0, -1], [0, 1, 0, 1]),  // A11(B12-B22)
        ([0, 0, 0, 1], [-1, 0, 1, 0], [1, 0, 1, 0]),  // A22(B21-B11)
        ([1, 1, 0, 0], [0, 0, 0, 1], [-1, 1, 0, 0]),  // (A11+A12)B22
        ([-1, 0, 1, 0], [1, 1, 0, 0], [0, 0, 0, 1]),  // (A21-A11)(B11+B12)
        ([0, 1, 0, -1], [0, 0, 1, 1], [1, 0, 0, 0]),  // (A12-A22)(B21+B22)
    ]
}

/// Exact Gaussian-elimination solve of a dense rational system.
fn solve_dense(
    mut a: Vec<Vec<ExactScalar>>,
    mut rhs: Vec<ExactScalar>,
) -> Result<Vec<ExactScalar>> {
    let n = a.len();
    for row in &a {
        if row.len() != n {
            return Err(Error::BadDims("solve requires a square system".into()));
        }
    }
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Err(Error::SolveFailure("singular system".into()));
        };
        a.swap(col, p);
        rhs.swap(col, p);
        let inv = a[col][col].inv()?;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] * &inv;
            for c in col..n {
                let t = &a[col][c] * &factor;
                a[r][c] -= &t;
            }
            let t = &rhs[col] * &factor;
            rhs[r] -= &t;
        }
    }
    (0..n).map(|i| rhs[i].checked_div(&a[i][i])).collect()
}

/// Interpolation weights `w_s` over the nodes with
/// `sum_s w_s node_s^j = [j == target]` for `j = 0..nodes.len()-1`.
fn interpolation_weights(nodes: &[ExactScalar], target: usize) -> Result<Vec<ExactScalar>> {
    let n = nodes.len();
    let a: Vec<Vec<ExactScalar>> = (0..n)
        .map(|j| nodes.iter().map(|x| x.pow(j as u32)).collect())
        .collect();
    let mut rhs = vec![ExactScalar::zero(); n];
    rhs[target] = ExactScalar::one();
    solve_dense(a, rhs)
}

/// Verifies, at `n = 2`, that the determinant's structure tensor is the
/// epsilon-degree-zero part of the transformed Clifford tensor square, and
/// reports the simple-term count of the decomposition this induces.
///
/// Three routes to the same tensor are compared entrywise:
///
/// 1. the tensor computed from `det_2` through the generic apolar-algebra
///    machinery, relabeled onto `(I|J)`;
/// 2. the sign-rule tensor from [`det_basis_product`];
/// 3. the exact extraction: transform `T_2 (x) T_2` by the maps sending
///    `X_U (x) X_V` to `(U|V) eps^{|U|+|V|}` (respectively
///    `eps^{-|U|-|V|}` on the result side; zero when `|U| != |V|`) and take
///    the `eps^0` coefficient.
///
/// The decomposition route then interpolates over `4n+1` numeric epsilon
/// values against the 49-term Strassen square of `T_2`, sums the resulting
/// simple tensors, and checks exact equality once more.
pub fn clifford_det_decomposition(n: usize) -> Result<CliffordDecompositionReport> {
    if n % 2 != 0 {
        return Err(Error::OddN(n));
    }
    if n != 2 {
        return Err(Error::SizeLimit(format!(
            "decomposition verification is desk-scale, n = 2 only (got {n})"
        )));
    }

    // route 1: generic machinery on det_2
    let det = generic_det_poly(n);
    let algebra = apolar_monomial_basis(&det)?;
    let computed = structure_tensor(&algebra)?;

    // route 2: the sign rule
    let labels = det_basis_labels(n);
    let rule = det_rule_structure_tensor(n);
    if algebra.dim() != labels.len() {
        return Err(Error::VerificationFailure(format!(
            "dim A_det = {} but there are {} labels",
            algebra.dim(),
            labels.len()
        )));
    }
    let mut perm = Vec::with_capacity(labels.len()); // label index -> basis index
    for label in &labels {
        let monomial = label.to_monomial(n);
        let pos = algebra
            .basis()
            .iter()
            .position(|m| *m == monomial)
            .ok_or_else(|| {
                Error::VerificationFailure(format!(
                    "label {label} is not a basis monomial of A_det"
                ))
            })?;
        perm.push(pos);
    }
    let ldim = labels.len();
    for li in 0..ldim {
        for lj in 0..ldim {
            for lk in 0..ldim {
                let a = computed.coefficient(perm[li], perm[lj], perm[lk]);
                let b = rule.coefficient(li, lj, lk);
                if a != b {
                    return Err(Error::VerificationFailure(format!(
                        "sign rule disagrees with the computed tensor at ({}, {})",
                        labels[li], labels[lj]
                    )));
                }
            }
        }
    }

    // route 3: symbolic epsilon extraction of (M, M, M') . (T_n (x) T_n)
    let clifford = clifford_structure_tensor(n)?;
    let dim_cl = clifford.dim();
    let label_index: BTreeMap<&DetBasisLabel, usize> =
        labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let pair_label = |u: usize, v: usize| -> Option<usize> {
        if u.count_ones() != v.count_ones() {
            return None;
        }
        let to_seq = |mask: usize| (1..=n).filter(|&i| mask & (1 << (i - 1)) != 0).collect();
        let label = DetBasisLabel {
            rows: to_seq(u),
            cols: to_seq(v),
        };
        label_index.get(&label).copied()
    };

    let mut extracted: BTreeMap<(usize, usize, usize), LaurentScalar> = BTreeMap::new();
    for u in 0..dim_cl {
        for up in 0..dim_cl {
            let (su, u_res) = clifford.product(u, up);
            for v in 0..dim_cl {
                for vp in 0..dim_cl {
                    let (sv, v_res) = clifford.product(v, vp);
                    let (Some(i), Some(j), Some(k)) = (
                        pair_label(u, v),
                        pair_label(up, vp),
                        pair_label(u_res, v_res),
                    ) else {
                        continue;
                    };
                    let exp = (u.count_ones()
                        + v.count_ones()
                        + up.count_ones()
                        + vp.count_ones()) as i64
                        - (u_res.count_ones() + v_res.count_ones()) as i64;
                    debug_assert!(exp >= 0, "epsilon exponents are nonnegative");
                    extracted
                        .entry((i, j, k))
                        .or_default()
                        .add_term(exp, ExactScalar::from(su * sv));
                }
            }
        }
    }
    for i in 0..ldim {
        for j in 0..ldim {
            for k in 0..ldim {
                let eps0 = extracted
                    .get(&(i, j, k))
                    .map(|l| l.coefficient(0))
                    .unwrap_or_else(ExactScalar::zero);
                if eps0 != rule.coefficient(i, j, k) {
                    return Err(Error::VerificationFailure(format!(
                        "eps^0 extraction disagrees at ({}, {}, {})",
                        labels[i], labels[j], labels[k]
                    )));
                }
            }
        }
    }

    // decomposition route: Strassen square of T_2 pulled back through the
    // matrix representation, interpolated over 4n+1 numeric nodes
    let images = clifford_matrix_iso(n)?;
    let mut p_cols: Vec<Vec<ExactScalar>> = Vec::with_capacity(dim_cl);
    for img in &images {
        let mut col = Vec::with_capacity(4);
        for v in &img.data {
            if !v.im.is_zero() {
                return Err(Error::VerificationFailure(
                    "representation is not real at n = 2".into(),
                ));
            }
            col.push(v.re.clone());
        }
        p_cols.push(col);
    }
    let p = |e: usize, u: usize| p_cols[u][e].clone();
    let p_mat: Vec<Vec<ExactScalar>> =
        (0..4).map(|e| (0..4).map(|u| p(e, u)).collect()).collect();
    let mut p_inv_cols = Vec::with_capacity(4);
    for k in 0..4 {
        let mut rhs = vec![ExactScalar::zero(); 4];
        rhs[k] = ExactScalar::one();
        p_inv_cols.push(solve_dense(p_mat.clone(), rhs)?);
    }

    // pull the matrix-multiplication triples back: dual factors by P^T,
    // the primal factor by P^{-1}
    let pull_dual = |vec4: &[i64; 4]| -> Vec<ExactScalar> {
        (0..4)
            .map(|u| {
                let mut acc = ExactScalar::zero();
                for (e, &c) in vec4.iter().enumerate() {
                    acc.add_mul_assign(&ExactScalar::from(c), &p(e, u));
                }
                acc
            })
            .collect()
    };
    let pull_primal = |vec4: &[i64; 4]| -> Vec<ExactScalar> {
        let mut acc = vec![ExactScalar::zero(); 4];
        for (e, &c) in vec4.iter().enumerate() {
            let c = ExactScalar::from(c);
            for (slot, inv) in acc.iter_mut().zip(&p_inv_cols[e]) {
                slot.add_mul_assign(&c, inv);
            }
        }
        acc
    };
    let cl_triples: Vec<(Vec<ExactScalar>, Vec<ExactScalar>, Vec<ExactScalar>)> =
        strassen_triples()
            .iter()
            .map(|(u, v, w)| (pull_dual(u), pull_dual(v), pull_primal(w)))
            .collect();

    // sanity: the pulled-back triples really decompose T_2
    for a in 0..dim_cl {
        for b in 0..dim_cl {
            let (sign, res) = clifford.product(a, b);
            for c in 0..dim_cl {
                let mut acc = ExactScalar::zero();
                for (u, v, w) in &cl_triples {
                    acc += &(&(&u[a] * &v[b]) * &w[c]);
                }
                let expect = if c == res {
                    ExactScalar::from(sign)
                } else {
                    ExactScalar::zero()
                };
                if acc != expect {
                    return Err(Error::VerificationFailure(
                        "Strassen pullback does not reproduce the Clifford tensor".into(),
                    ));
                }
            }
        }
    }

    let nodes: Vec<ExactScalar> = (0..=4 * n as i64).map(|s| ExactScalar::from(s + 1)).collect();
    let weights = interpolation_weights(&nodes, 0)?;

    // M_eps over pair coordinates (u, v) -> label space
    let m_apply = |eps: &ExactScalar, vec: &[ExactScalar], inverse: bool| -> Vec<ExactScalar> {
        let mut out = vec![ExactScalar::zero(); ldim];
        for u in 0..dim_cl {
            for v in 0..dim_cl {
                let x = &vec[u * dim_cl + v];
                if x.is_zero() {
                    continue;
                }
                let Some(label) = pair_label(u, v) else {
                    continue;
                };
                let e = (u.count_ones() + v.count_ones()) as u32;
                let factor = if inverse {
                    eps.pow(e).inv().expect("nonzero node")
                } else {
                    eps.pow(e)
                };
                out[label].add_mul_assign(x, &factor);
            }
        }
        out
    };
    let kron = |x: &[ExactScalar], y: &[ExactScalar]| -> Vec<ExactScalar> {
        let mut out = vec![ExactScalar::zero(); dim_cl * dim_cl];
        for (iu, xu) in x.iter().enumerate() {
            if xu.is_zero() {
                continue;
            }
            for (iv, yv) in y.iter().enumerate() {
                out[iu * dim_cl + iv] = xu * yv;
            }
        }
        out
    };

    let mut sum_entries: Vec<(usize, usize, usize, ExactScalar)> = Vec::new();
    let mut term_count = 0usize;
    for (s, eps) in nodes.iter().enumerate() {
        for (ua, va, wa) in &cl_triples {
            for (ub, vb, wb) in &cl_triples {
                let first = m_apply(eps, &kron(ua, ub), false);
                let second = m_apply(eps, &kron(va, vb), false);
                let mut third = m_apply(eps, &kron(wa, wb), true);
                for t in &mut third {
                    *t *= &weights[s];
                }
                if first.iter().all(ExactScalar::is_zero)
                    || second.iter().all(ExactScalar::is_zero)
                    || third.iter().all(ExactScalar::is_zero)
                {
                    continue;
                }
                term_count += 1;
                for (i, fi) in first.iter().enumerate() {
                    if fi.is_zero() {
                        continue;
                    }
                    for (j, sj) in second.iter().enumerate() {
                        if sj.is_zero() {
                            continue;
                        }
                        for (k, tk) in third.iter().enumerate() {
                            if tk.is_zero() {
                                continue;
                            }
                            sum_entries.push((i, j, k, &(fi * sj) * tk));
                        }
                    }
                }
            }
        }
    }
    let summed = StructureTensor::from_entries(
        ldim,
        labels.iter().map(|l| l.to_string()).collect(),
        sum_entries,
    );
    if summed != rule {
        return Err(Error::VerificationFailure(
            "interpolated decomposition does not sum to the structure tensor".into(),
        ));
    }
    if term_count < ldim {
        return Err(Error::VerificationFailure(format!(
            "term count {term_count} below the dimension {ldim}"
        )));
    }

    Ok(CliffordDecompositionReport {
        dim: ldim,
        term_count,
        term_bound: (4 * n + 1) * 49,
    })
}

// ---------------------------------------------------------------------------
// Waring decompositions to structure-tensor decompositions
// ---------------------------------------------------------------------------

/// Result of [`waring_to_tensor`].
#[derive(Debug)]
pub struct WaringTensorReport {
    pub dim: usize,
    pub term_count: usize,
    /// `(3d+1) r`.
    pub term_bound: usize,
}

/// Turns a Waring decomposition `f = sum_i c_i l_i^d` into a decomposition
/// of the structure tensor of `A_f` with at most `(3d+1) r` simple terms,
/// via exact interpolation over the nodes `eps_s = s+1`, and verifies that
/// the simple terms sum to the structure tensor.
pub fn waring_to_tensor(
    f: &SparsePoly,
    decomposition: &[(ExactScalar, LinearForm)],
) -> Result<WaringTensorReport> {
    let d = f
        .homogeneous_degree()
        .ok_or_else(|| Error::DegreeMismatch("f must be nonzero homogeneous".into()))?;

    let mut sum = SparsePoly::zero();
    for (c, form) in decomposition {
        sum = &sum + &form.to_poly().pow(d).scale(c);
    }
    if sum != *f {
        return Err(Error::NotADecomposition(format!(
            "powers sum to {sum}, not to f"
        )));
    }

    let algebra = apolar_monomial_basis(f)?;
    let tensor = structure_tensor(&algebra)?;
    let dim = algebra.dim();
    let basis = algebra.basis();

    let nodes: Vec<ExactScalar> = (0..=3 * d as i64).map(|s| ExactScalar::from(s + 1)).collect();
    let weights = interpolation_weights(&nodes, d as usize)?;

    // d!/(d-j)!
    let falling = |j: u32| -> ExactScalar {
        let mut acc = ExactScalar::one();
        for t in 0..j {
            acc *= &ExactScalar::from((d - t) as i64);
        }
        acc
    };

    // simple term for node s and summand i:
    //   u = v = sum_a (prod_t a_{i,t}^{alpha_t}) eps^{|alpha|} e_alpha
    //   z = w_s sum_j c_i d!/(d-j)! eps^{d-j} l_i^{d-j}
    let mut term_count = 0usize;
    let mut slices: Vec<Vec<SparsePoly>> = vec![vec![SparsePoly::zero(); dim]; dim];
    for (s, eps) in nodes.iter().enumerate() {
        for (c_i, form) in decomposition {
            let eval_monomial = |alpha: &Monomial| -> ExactScalar {
                let mut acc = ExactScalar::one();
                for (v, e) in alpha.iter() {
                    acc *= &form.coefficient_of(v).pow(e);
                }
                acc
            };
            let coords: Vec<ExactScalar> = basis
                .iter()
                .map(|alpha| &eval_monomial(alpha) * &eps.pow(alpha.degree()))
                .collect();
            let mut z = SparsePoly::zero();
            let form_poly = form.to_poly();
            for j in 0..=d {
                let coeff = &(&(c_i * &falling(j)) * &eps.pow(d - j)) * &weights[s];
                z = &z + &form_poly.pow(d - j).scale(&coeff);
            }
            if coords.iter().all(ExactScalar::is_zero) || z.is_zero() {
                continue;
            }
            term_count += 1;
            for (a, ca) in coords.iter().enumerate() {
                if ca.is_zero() {
                    continue;
                }
                for (b, cb) in coords.iter().enumerate() {
                    if cb.is_zero() {
                        continue;
                    }
                    slices[a][b] = &slices[a][b] + &z.scale(&(ca * cb));
                }
            }
        }
    }

    // the summed tensor must equal the structure tensor entrywise; slices
    // live in Diff(f), so solve each back to coordinates
    for (a, row) in slices.iter().enumerate() {
        for (b, poly) in row.iter().enumerate() {
            let coords = if poly.is_zero() {
                vec![ExactScalar::zero(); dim]
            } else {
                algebra.coordinates_of_image(poly).map_err(|_| {
                    Error::VerificationFailure(format!(
                        "slice ({a}, {b}) left the span of Diff(f)"
                    ))
                })?
            };
            for (k, c) in coords.iter().enumerate() {
                if *c != tensor.coefficient(a, b, k) {
                    return Err(Error::VerificationFailure(format!(
                        "summed tensor disagrees at ({a}, {b}, {k})"
                    )));
                }
            }
        }
    }

    Ok(WaringTensorReport {
        dim,
        term_count,
        term_bound: (3 * d as usize + 1) * decomposition.len(),
    })
}

/// The classical four-cube identity
/// `24 x1 x2 x3 = (x1+x2+x3)^3 - (x1+x2-x3)^3 - (x1-x2+x3)^3 - (-x1+x2+x3)^3`
/// as a Waring decomposition of `x1 x2 x3`.
pub fn trilinear_waring_identity() -> (SparsePoly, Vec<(ExactScalar, LinearForm)>) {
    let f = SparsePoly::from_terms(&[(1, &[(1, 1), (2, 1), (3, 1)])]);
    let q = |a: i64, b: i64, c: i64| {
        LinearForm::from_pairs(vec![
            (1, ExactScalar::from(a)),
            (2, ExactScalar::from(b)),
            (3, ExactScalar::from(c)),
        ])
    };
    let w = |num: i64| ExactScalar::ratio(num, 24);
    let decomposition = vec![
        (w(1), q(1, 1, 1)),
        (w(-1), q(1, 1, -1)),
        (w(-1), q(1, -1, 1)),
        (w(-1), q(-1, 1, 1)),
    ];
    (f, decomposition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::poly::{apolar_inner_product, permanent};

    fn p(terms: &[(i64, &[(u32, u32)])]) -> SparsePoly {
        SparsePoly::from_terms(terms)
    }

    fn ints(vals: &[i64]) -> Vec<ExactScalar> {
        vals.iter().map(|&v| ExactScalar::from(v)).collect()
    }

    #[test]
    fn monomial_basis_of_squarefree_product() {
        let f = p(&[(1, &[(1, 1), (2, 1)])]);
        let a = apolar_monomial_basis(&f).unwrap();
        assert_eq!(a.dim(), 4);
        let names: Vec<String> = a.basis().iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "x1", "x2", "x1*x2"]);
        assert_eq!(a.top_pairing(), &ExactScalar::one());
        assert_eq!(a.degree_one(), &[1, 2]);
    }

    #[test]
    fn monomial_basis_of_powers_and_det() {
        let cube = p(&[(1, &[(1, 3)])]);
        let a = apolar_monomial_basis(&cube).unwrap();
        assert_eq!(a.dim(), 4);
        assert_eq!(a.top_pairing(), &ExactScalar::from(6));

        let det2 = generic_det_poly(2);
        let a = apolar_monomial_basis(&det2).unwrap();
        assert_eq!(a.dim(), 6);
    }

    #[test]
    fn structure_tensor_unit_slice_and_counts() {
        let f = p(&[(1, &[(1, 1), (2, 1), (3, 1)])]);
        let a = apolar_monomial_basis(&f).unwrap();
        let t = structure_tensor(&a).unwrap();
        for j in 0..a.dim() {
            for k in 0..a.dim() {
                let expect = if j == k {
                    ExactScalar::one()
                } else {
                    ExactScalar::zero()
                };
                assert_eq!(t.coefficient(0, j, k), expect);
                assert_eq!(t.coefficient(j, 0, k), expect);
            }
        }
        // disjoint subset pairs: 3^n nonzero (i, j) pairs
        assert_eq!(t.nonzero_pairs(), 27);

        let sq = p(&[(1, &[(1, 2)])]);
        let a = apolar_monomial_basis(&sq).unwrap();
        let t = structure_tensor(&a).unwrap();
        // (d1, d1, d1^2) entry is 1
        assert_eq!(t.coefficient(1, 1, 2), ExactScalar::one());
    }

    #[test]
    fn structure_tensor_is_associative() {
        for f in [
            p(&[(1, &[(1, 1), (2, 1), (3, 1)])]),
            p(&[(1, &[(1, 2)])]),
            generic_det_poly(2),
            p(&[(1, &[(1, 1), (3, 1)]), (-1, &[(2, 2)])]),
        ] {
            let a = apolar_monomial_basis(&f).unwrap();
            let t = structure_tensor(&a).unwrap();
            let unit = |i: usize| {
                let mut v = vec![ExactScalar::zero(); a.dim()];
                v[i] = ExactScalar::one();
                v
            };
            for i in 0..a.dim() {
                for j in 0..a.dim() {
                    let ij = t.product(&unit(i), &unit(j));
                    for k in 0..a.dim() {
                        let left = t.product(&ij, &unit(k));
                        let right = t.product(&unit(i), &t.product(&unit(j), &unit(k)));
                        assert_eq!(left, right, "f={f} i={i} j={j} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn multiplication_is_differentiation() {
        let f = generic_det_poly(2);
        let a = apolar_monomial_basis(&f).unwrap();
        let t = structure_tensor(&a).unwrap();
        // h1 = d1 + 2 d4, h2 = d2 - d3 as coordinate vectors
        let mut h1 = vec![ExactScalar::zero(); a.dim()];
        h1[1] = ExactScalar::one();
        h1[4] = ExactScalar::from(2);
        let mut h2 = vec![ExactScalar::zero(); a.dim()];
        h2[2] = ExactScalar::one();
        h2[3] = ExactScalar::from(-1);
        let product = t.product(&h1, &h2);
        let image = a.image_of_coordinates(&product);

        let h1_poly = p(&[(1, &[(1, 1)]), (2, &[(4, 1)])]);
        let h2_poly = p(&[(1, &[(2, 1)]), (-1, &[(3, 1)])]);
        let expect = apply_diff_operator(&h1_poly, &apply_diff_operator(&h2_poly, &f));
        assert_eq!(image, expect);
    }

    #[test]
    fn algebra_evaluates_products_and_permanents() {
        let f = p(&[(1, &[(1, 1), (2, 1)])]);
        let a = apolar_monomial_basis(&f).unwrap();
        let t = structure_tensor(&a).unwrap();
        let c = crate::circuit::parse_circuit("g1 = var 1\ng2 = mullin 1:2 g1\n").unwrap();
        assert_eq!(algebra_evaluate(&a, &t, &c).unwrap(), ExactScalar::one());

        // permanent of [[1,2],[3,4]] through A_{x1 x2}
        let mut b = CircuitBuilder::new();
        let one = b.constant(ExactScalar::one());
        let r1 = b.mul_lin(
            LinearForm::from_pairs(vec![(1, ExactScalar::from(1)), (2, ExactScalar::from(2))]),
            one,
        );
        let r2 = b.mul_lin(
            LinearForm::from_pairs(vec![(1, ExactScalar::from(3)), (2, ExactScalar::from(4))]),
            r1,
        );
        let c = b.finish(r2);
        assert_eq!(algebra_evaluate(&a, &t, &c).unwrap(), ExactScalar::from(10));
    }

    #[test]
    fn algebra_accepts_general_multiplication() {
        // (x1 x2) * (x3 x4) over A_{x1 x2 x3 x4}
        let f = p(&[(1, &[(1, 1), (2, 1), (3, 1), (4, 1)])]);
        let a = apolar_monomial_basis(&f).unwrap();
        let t = structure_tensor(&a).unwrap();
        let mut b = CircuitBuilder::new();
        let g1 = b.input(1);
        let g2 = b.mul_lin(LinearForm::single(2), g1);
        let g3 = b.input(3);
        let g4 = b.mul_lin(LinearForm::single(4), g3);
        let g5 = b.mul(g2, g4);
        let c = b.finish(g5);
        assert!(!c.is_skew());
        assert_eq!(algebra_evaluate(&a, &t, &c).unwrap(), ExactScalar::one());
        // the skew engines must reject general multiplication
        let x = crate::minor::SymbolicMatrix::new(vec![vec![LinearForm::single(1); 4]; 4])
            .unwrap();
        assert!(matches!(
            crate::minor::gendiff_evaluate(&x, &c),
            Err(Error::NonSkew)
        ));
    }

    #[test]
    fn algebra_agrees_with_gendiff_on_det() {
        let det = generic_det_poly(2);
        let a = apolar_monomial_basis(&det).unwrap();
        let t = structure_tensor(&a).unwrap();
        let x = crate::minor::SymbolicMatrix::new(vec![
            vec![LinearForm::single(1), LinearForm::single(2)],
            vec![LinearForm::single(3), LinearForm::single(4)],
        ])
        .unwrap();
        for v1 in 1..=4u32 {
            for v2 in 1..=4u32 {
                let text = format!("g1 = var {v1}\ng2 = mullin 1:{v2},2:1 g1\n");
                let c = crate::circuit::parse_circuit(&text).unwrap();
                assert_eq!(
                    algebra_evaluate(&a, &t, &c).unwrap(),
                    crate::minor::gendiff_evaluate(&x, &c).unwrap()
                );
            }
        }
    }

    #[test]
    fn subset_convolution_small_cases() {
        // unit at the empty set leaves tau unchanged
        let tau = ints(&[3, -1, 4, 1]);
        let mut unit = ints(&[0, 0, 0, 0]);
        unit[0] = ExactScalar::one();
        assert_eq!(subset_convolution_naive(&unit, &tau).unwrap(), tau);
        assert_eq!(subset_convolution_fast(&unit, &tau).unwrap(), tau);

        // n = 1 by hand
        let s = ints(&[2, 3]);
        let t = ints(&[5, 7]);
        assert_eq!(subset_convolution_naive(&s, &t).unwrap(), ints(&[10, 29]));

        assert!(subset_convolution_naive(&ints(&[1, 2, 3]), &ints(&[1, 2, 3])).is_err());
        assert!(subset_convolution_fast(&ints(&[1]), &ints(&[1, 2])).is_err());
    }

    #[test]
    fn subset_convolution_fast_equals_naive_and_algebra() {
        let n = 3u64;
        let sigma = ints(&[1, -2, 0, 3, 1, 1, -1, 2]);
        let tau = ints(&[2, 1, 1, 0, -1, 1, 2, -2]);
        let naive = subset_convolution_naive(&sigma, &tau).unwrap();
        let (fast, muls) = subset_convolution_fast_counted(&sigma, &tau).unwrap();
        assert_eq!(naive, fast);
        assert_eq!(muls, ((n + 1) * (n + 2) / 2) << n);
        assert!(muls <= ((n + 1) * (n + 1)) << n);

        // multiplication in A_{x1 x2 x3} computes the same function
        let f = p(&[(1, &[(1, 1), (2, 1), (3, 1)])]);
        let a = apolar_monomial_basis(&f).unwrap();
        let t = structure_tensor(&a).unwrap();
        let subset_monomial = |mask: usize| {
            let pairs: Vec<(u32, u32)> = (0..n as usize)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| (b as u32 + 1, 1))
                .collect();
            Monomial::from_pairs(&pairs)
        };
        let basis_of = |mask: usize| {
            a.basis()
                .iter()
                .position(|m| *m == subset_monomial(mask))
                .unwrap()
        };
        let to_coords = |vals: &[ExactScalar]| {
            let mut coords = vec![ExactScalar::zero(); a.dim()];
            for (mask, v) in vals.iter().enumerate() {
                coords[basis_of(mask)] = v.clone();
            }
            coords
        };
        let product = t.product(&to_coords(&sigma), &to_coords(&tau));
        for (mask, expect) in naive.iter().enumerate() {
            assert_eq!(&product[basis_of(mask)], expect);
        }
    }

    #[test]
    fn det_basis_product_rule() {
        let l = |rows: &[usize], cols: &[usize]| {
            DetBasisLabel::new(rows.to_vec(), cols.to_vec()).unwrap()
        };
        let (sign, label) = det_basis_product(&l(&[1], &[1]), &l(&[2], &[2])).unwrap();
        assert_eq!(sign, 1);
        assert_eq!(label, l(&[1, 2], &[1, 2]));

        assert!(det_basis_product(&l(&[1], &[1]), &l(&[1], &[2])).is_none());

        let (sign, label) = det_basis_product(&l(&[2], &[1]), &l(&[1], &[2])).unwrap();
        assert_eq!(sign, 1); // two inversions cancel
        assert_eq!(label, l(&[1, 2], &[1, 2]));

        let (sign, _) = det_basis_product(&l(&[1], &[2]), &l(&[2], &[1])).unwrap();
        assert_eq!(sign, -1);
    }

    #[test]
    fn clifford_tensor_shape_and_signs() {
        let t = clifford_structure_tensor(2).unwrap();
        assert_eq!(t.dim(), 4);
        let st = t.to_structure_tensor();
        assert_eq!(st.num_entries(), 16);
        assert!(st
            .entries()
            .iter()
            .all(|(_, _, _, c)| *c == ExactScalar::from(1) || *c == ExactScalar::from(-1)));

        // X_{1} X_{1} = +X_{}; X_{1} X_{2} = +X_{12}; X_{2} X_{1} = -X_{12}
        assert_eq!(t.product(0b01, 0b01), (1, 0));
        assert_eq!(t.product(0b01, 0b10), (1, 0b11));
        assert_eq!(t.product(0b10, 0b01), (-1, 0b11));
        assert!(matches!(clifford_structure_tensor(3), Err(Error::OddN(3))));
    }

    #[test]
    fn clifford_matrix_representation() {
        for n in [2, 4] {
            verify_clifford_iso(n).unwrap();
        }
        let images = clifford_matrix_iso(2).unwrap();
        assert_eq!(images[0], GaussianMatrix::identity(2));
        // generator squares are the identity, and the generators anticommute
        let g1 = &images[0b01];
        let g2 = &images[0b10];
        assert_eq!(g1.mul(g1), GaussianMatrix::identity(2));
        assert_eq!(g2.mul(g2), GaussianMatrix::identity(2));
        assert_eq!(g1.mul(g2), g2.mul(g1).scale(-1));
        assert!(clifford_matrix_iso(3).is_err());
        assert!(clifford_matrix_iso(6).is_err());
    }

    #[test]
    fn clifford_decomposition_at_n2() {
        let report = clifford_det_decomposition(2).unwrap();
        assert_eq!(report.dim, 6);
        assert!(report.term_count >= report.dim);
        assert!(report.term_count <= report.term_bound);
        assert_eq!(report.term_bound, 441);
        assert!(matches!(clifford_det_decomposition(3), Err(Error::OddN(3))));
    }

    #[test]
    fn waring_examples() {
        // trivial rank-1 decomposition of x1
        let f = p(&[(1, &[(1, 1)])]);
        let dec = vec![(ExactScalar::one(), LinearForm::single(1))];
        let report = waring_to_tensor(&f, &dec).unwrap();
        assert!(report.term_count <= 4);
        assert_eq!(report.dim, 2);

        // x1^2 as a single square
        let f = p(&[(1, &[(1, 2)])]);
        let dec = vec![(ExactScalar::one(), LinearForm::single(1))];
        let report = waring_to_tensor(&f, &dec).unwrap();
        assert!(report.term_count <= 7);
        assert!(report.term_count >= report.dim);

        // the four-cube identity
        let (f, dec) = trilinear_waring_identity();
        let report = waring_to_tensor(&f, &dec).unwrap();
        assert_eq!(report.term_bound, 40);
        assert!(report.term_count <= 40);
        assert!(report.term_count >= report.dim);
        assert_eq!(report.dim, 8);

        // a wrong decomposition is rejected
        let bad = vec![(ExactScalar::one(), LinearForm::single(1))];
        assert!(matches!(
            waring_to_tensor(&f, &bad),
            Err(Error::NotADecomposition(_))
        ));
    }

    #[test]
    fn dims_match_diff_span() {
        for f in [
            p(&[(1, &[(1, 1), (2, 1), (3, 1)])]),
            generic_det_poly(2),
            p(&[(1, &[(1, 1), (3, 1)]), (-1, &[(2, 2)])]),
        ] {
            let a = apolar_monomial_basis(&f).unwrap();
            assert_eq!(a.dim(), diff_span_dim(&f).unwrap());
        }
    }

    #[test]
    fn permanent_identity_through_algebra() {
        let f = p(&[(1, &[(1, 1), (2, 1), (3, 1)])]);
        let a = apolar_monomial_basis(&f).unwrap();
        let t = structure_tensor(&a).unwrap();
        let matrix = vec![ints(&[1, 2, 0]), ints(&[3, 4, 1]), ints(&[-1, 1, 2])];
        let mut b = CircuitBuilder::new();
        let mut gate = b.constant(ExactScalar::one());
        for row in &matrix {
            let form = LinearForm::from_pairs(
                row.iter()
                    .enumerate()
                    .map(|(j, c)| (j as u32 + 1, c.clone()))
                    .collect(),
            );
            gate = b.mul_lin(form, gate);
        }
        let c = b.finish(gate);
        let via_algebra = algebra_evaluate(&a, &t, &c).unwrap();
        let via_oracle = permanent(&matrix).unwrap();
        let via_inner =
            apolar_inner_product(&f, &crate::circuit::expand_circuit(&c).unwrap()).unwrap();
        assert_eq!(via_algebra, via_oracle);
        assert_eq!(via_inner, via_oracle);
    }
}
