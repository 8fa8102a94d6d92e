//! Detection problems reduced to one inner-product evaluation each.
//!
//! Every decision here follows the same Cauchy-Binet pattern: build a
//! generating circuit `g` with nonnegative coefficients whose square-free
//! monomials encode the objects sought, pair it against `det X` for a matrix
//! `X = A diag(x) A^T` whose Cauchy-Binet weights `det(A_S)^2` are strictly
//! positive, and test `<det X, g> != 0`. In exact mode the inner product is a
//! nonnegative integer, so the test is free of cancellation and the decision
//! is deterministic.

use std::collections::BTreeSet;

use crate::circuit::{
    build_mv_determinant, build_part_product_power, build_trace_power, Circuit, CircuitBuilder,
    LinearForm,
};
use crate::error::{Error, Result};
use crate::hankel::{hankel_basis_dimension, hankeldiff_evaluate, vandermonde_hankel};
use crate::minor::{gendiff_evaluate, SymbolicMatrix};
use crate::scalar::{ArithMode, ExactScalar};

/// Which engine evaluates the inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Minor-basis evaluation, `C(2d,d)`-dimensional state.
    General,
    /// Maximal-minor evaluation on the Hankel arrangement, `F(2d+1)` state.
    #[default]
    Hankel,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::General => "general",
            Engine::Hankel => "hankel",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Engine> {
        match s {
            "general" => Ok(Engine::General),
            "hankel" => Ok(Engine::Hankel),
            other => Err(Error::BadDims(format!(
                "unknown engine `{other}` (expected `general` or `hankel`)"
            ))),
        }
    }
}

/// Evaluation metadata surfaced by the CLI.
#[derive(Debug, Clone)]
pub struct EngineStats {
    pub engine: &'static str,
    pub basis_dim: u64,
    pub gates: u64,
}

/// A directed graph on vertices `1..=n`. Parallel edges collapse; loops are
/// allowed.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    n: usize,
    out: Vec<Vec<u32>>,
    inc: Vec<Vec<u32>>,
    num_edges: usize,
}

impl DirectedGraph {
    pub fn new(n: usize, edges: &[(u32, u32)]) -> Result<DirectedGraph> {
        let mut sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n + 1];
        for &(u, v) in edges {
            if u == 0 || v == 0 || u as usize > n || v as usize > n {
                return Err(Error::BadDims(format!(
                    "edge ({u}, {v}) outside vertex range 1..={n}"
                )));
            }
            sets[u as usize].insert(v);
        }
        let out: Vec<Vec<u32>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut inc: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
        for (u, outs) in out.iter().enumerate() {
            for &v in outs {
                inc[v as usize].push(u as u32);
            }
        }
        let num_edges = out.iter().map(Vec::len).sum();
        Ok(DirectedGraph {
            n,
            out,
            inc,
            num_edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn out_neighbors(&self, v: u32) -> &[u32] {
        &self.out[v as usize]
    }

    pub fn in_neighbors(&self, v: u32) -> &[u32] {
        &self.inc[v as usize]
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.out[u as usize].binary_search(&v).is_ok()
    }

    /// Edges in sorted order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.num_edges);
        for u in 1..=self.n as u32 {
            for &v in self.out_neighbors(u) {
                out.push((u, v));
            }
        }
        out
    }

    /// BFS distances to `target` along reversed edges; `dist[v]` is the
    /// length of a shortest `v -> target` path.
    pub fn reverse_distances(&self, target: u32) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n + 1];
        dist[target as usize] = Some(0);
        let mut queue = std::collections::VecDeque::from([target]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v as usize].expect("queued vertices have distances");
            for &u in self.in_neighbors(v) {
                if dist[u as usize].is_none() {
                    dist[u as usize] = Some(dv + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Forward BFS distances from `source`.
    pub fn forward_distances(&self, source: u32) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n + 1];
        dist[source as usize] = Some(0);
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v as usize].expect("queued vertices have distances");
            for &w in self.out_neighbors(v) {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// A linear representation of a matroid: columns are the ground set.
#[derive(Debug, Clone)]
pub struct MatroidInstance {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<ExactScalar>>,
}

impl MatroidInstance {
    pub fn new(entries: Vec<Vec<ExactScalar>>) -> Result<MatroidInstance> {
        let rows = entries.len();
        let cols = entries.first().map(Vec::len).unwrap_or(0);
        if rows == 0 || cols == 0 {
            return Err(Error::BadDims("matroid matrix must be nonempty".into()));
        }
        if entries.iter().any(|r| r.len() != cols) {
            return Err(Error::BadDims("matroid matrix rows of unequal length".into()));
        }
        Ok(MatroidInstance {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Vec<ExactScalar>] {
        &self.entries
    }

    /// Exact rank of the submatrix on the given 1-based columns.
    pub fn rank_of_columns(&self, cols: &[usize]) -> usize {
        let mut m: Vec<Vec<ExactScalar>> = self
            .entries
            .iter()
            .map(|row| cols.iter().map(|&j| row[j - 1].clone()).collect())
            .collect();
        let (nr, nc) = (m.len(), cols.len());
        let mut rank = 0;
        for col in 0..nc {
            let Some(pivot) = (rank..nr).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(rank, pivot);
            let inv = m[rank][col].inv().expect("nonzero pivot");
            for r in rank + 1..nr {
                if m[r][col].is_zero() {
                    continue;
                }
                let factor = &m[r][col] * &inv;
                for c in col..nc {
                    let t = &m[rank][c] * &factor;
                    m[r][c] -= &t;
                }
            }
            rank += 1;
            if rank == nr {
                break;
            }
        }
        rank
    }

    /// Whether the 1-based column set is linearly independent.
    pub fn independent(&self, cols: &[usize]) -> bool {
        self.rank_of_columns(cols) == cols.len()
    }
}

/// Evaluates `<det X, g>` for the Vandermonde-Hankel `X` on `n` variables,
/// with the chosen engine, returning the value and stats.
fn squarefree_weighted_inner(
    circuit: &Circuit,
    n: usize,
    d: usize,
    engine: Engine,
    mode: ArithMode,
) -> Result<(ExactScalar, EngineStats)> {
    let arrangement = vandermonde_hankel(n, d)?.to_mode(mode)?;
    let circuit = circuit.to_mode(mode)?;
    let gates = circuit.num_gates() as u64;
    match engine {
        Engine::Hankel => {
            let value = hankeldiff_evaluate(&arrangement, &circuit)?;
            Ok((
                value,
                EngineStats {
                    engine: "hankel",
                    basis_dim: hankel_basis_dimension(d),
                    gates,
                },
            ))
        }
        Engine::General => {
            let x = arrangement.hankel_matrix()?;
            let value = gendiff_evaluate(&x, &circuit)?;
            let b = crate::comb::Binomials::new(2 * d);
            Ok((
                value,
                EngineStats {
                    engine: "general",
                    basis_dim: b.c(2 * d, d),
                    gates,
                },
            ))
        }
    }
}

/// Whether `g` has a simple directed cycle on exactly `d` vertices:
/// `<det X, tr(A_G^d)> > 0` with `X` the Vandermonde-Hankel matrix. For
/// `d = 1` this degenerates to testing for a loop.
pub fn detect_cycle(g: &DirectedGraph, d: usize, engine: Engine) -> Result<bool> {
    detect_cycle_report(g, d, engine, ArithMode::Exact).map(|(b, _)| b)
}

pub fn detect_cycle_report(
    g: &DirectedGraph,
    d: usize,
    engine: Engine,
    mode: ArithMode,
) -> Result<(bool, EngineStats)> {
    let n = g.num_vertices();
    if d == 0 || d > n {
        return Err(Error::BadDims(format!(
            "cycle length must satisfy 1 <= d <= n = {n}, got {d}"
        )));
    }
    let circuit = build_trace_power(g, d as u32)?;
    let (value, stats) = squarefree_weighted_inner(&circuit, n, d, engine, mode)?;
    Ok((!value.is_zero(), stats))
}

/// Whether a simple `s -> t` path on exactly `d` vertices exists. The
/// generating circuit sums, over `s -> t` walks with `d` vertices, the
/// product of the vertex variables along the walk; square-free monomials are
/// exactly the simple paths.
pub fn detect_path(
    g: &DirectedGraph,
    s: u32,
    t: u32,
    d: usize,
    engine: Engine,
) -> Result<bool> {
    detect_path_report(g, s, t, d, engine, ArithMode::Exact).map(|(b, _)| b)
}

pub fn detect_path_report(
    g: &DirectedGraph,
    s: u32,
    t: u32,
    d: usize,
    engine: Engine,
    mode: ArithMode,
) -> Result<(bool, EngineStats)> {
    let n = g.num_vertices();
    if s == 0 || s as usize > n || t == 0 || t as usize > n {
        return Err(Error::BadDims(format!(
            "endpoints must lie in 1..={n}, got {s} and {t}"
        )));
    }
    if s == t {
        return Err(Error::SameEndpoints);
    }
    if d < 2 || d > n {
        return Err(Error::BadDims(format!(
            "path vertex count must satisfy 2 <= d <= n = {n}, got {d}"
        )));
    }

    let from_s = g.forward_distances(s);
    let to_t = g.reverse_distances(t);
    let mut builder = CircuitBuilder::new();
    let one = builder.constant(ExactScalar::one());
    let mut layer: Vec<Option<usize>> = vec![None; n + 1];
    if to_t[s as usize].is_some_and(|dist| dist <= d as u32 - 1) {
        layer[s as usize] = Some(builder.mul_lin(LinearForm::single(s), one));
    }
    for step in 2..=d {
        let mut next: Vec<Option<usize>> = vec![None; n + 1];
        for w in 1..=n as u32 {
            if step == d && w != t {
                continue;
            }
            // reachable in exactly `step` vertices and still able to reach t
            if from_s[w as usize].is_none() || to_t[w as usize].is_none() {
                continue;
            }
            if to_t[w as usize].unwrap() > (d - step) as u32 {
                continue;
            }
            let inflow: Vec<usize> = g
                .in_neighbors(w)
                .iter()
                .filter_map(|&i| layer[i as usize])
                .collect();
            if let Some(sum) = builder.add_chain(&inflow)? {
                next[w as usize] = Some(builder.mul_lin(LinearForm::single(w), sum));
            }
        }
        layer = next;
    }
    let output = match layer[t as usize] {
        Some(id) => id,
        None => builder.constant(ExactScalar::zero()),
    };
    let circuit = builder.finish(output);
    let (value, stats) = squarefree_weighted_inner(&circuit, n, d, engine, mode)?;
    Ok((!value.is_zero(), stats))
}

/// Whether the polynomial of the skew circuit `c` (homogeneous of degree `d`
/// over `n` variables, nonnegative coefficients caller-asserted) contains a
/// square-free monomial.
pub fn detect_squarefree(c: &Circuit, d: usize, n: usize, engine: Engine) -> Result<bool> {
    detect_squarefree_report(c, d, n, engine, ArithMode::Exact).map(|(b, _)| b)
}

pub fn detect_squarefree_report(
    c: &Circuit,
    d: usize,
    n: usize,
    engine: Engine,
    mode: ArithMode,
) -> Result<(bool, EngineStats)> {
    if (c.nvars() as usize) > n {
        return Err(Error::BadDims(format!(
            "circuit references variable {} beyond n = {n}",
            c.nvars()
        )));
    }
    match c.degree() {
        None => {
            return Ok((
                false,
                EngineStats {
                    engine: engine.name(),
                    basis_dim: 0,
                    gates: c.num_gates() as u64,
                },
            ))
        }
        Some(deg) if deg as usize != d => {
            return Err(Error::DegreeMismatch(format!(
                "circuit degree {deg}, expected {d}"
            )))
        }
        Some(_) => {}
    }
    if n < d {
        // a degree-d square-free monomial needs d distinct variables
        return Ok((
            false,
            EngineStats {
                engine: engine.name(),
                basis_dim: 0,
                gates: c.num_gates() as u64,
            },
        ));
    }
    let (value, stats) = squarefree_weighted_inner(c, n, d, engine, mode)?;
    Ok((!value.is_zero(), stats))
}

/// SING: does the span of the given `d x d` matrices contain an invertible
/// matrix? Equivalently `det X != 0` for `X = sum_i x_i A_i`, decided by
/// `<det X, det X> = sum_a c_a^2 a! > 0` over exact arithmetic.
pub fn sing_decide(mats: &[Vec<Vec<ExactScalar>>]) -> Result<bool> {
    sing_report(mats, ArithMode::Exact).map(|(b, _)| b)
}

pub fn sing_report(
    mats: &[Vec<Vec<ExactScalar>>],
    mode: ArithMode,
) -> Result<(bool, EngineStats)> {
    let Some(first) = mats.first() else {
        return Err(Error::BadDims("need at least one matrix".into()));
    };
    let d = first.len();
    for m in mats {
        if m.len() != d || m.iter().any(|r| r.len() != d) {
            return Err(Error::BadDims(format!(
                "all matrices must be {d} x {d}"
            )));
        }
    }
    let entries: Vec<Vec<LinearForm>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    LinearForm::from_pairs(
                        mats.iter()
                            .enumerate()
                            .map(|(l, a)| (l as u32 + 1, a[i][j].clone()))
                            .collect(),
                    )
                })
                .collect()
        })
        .collect();
    let x = SymbolicMatrix::new(entries)?.to_mode(mode)?;
    let circuit = build_mv_determinant(d, x.entries());
    let value = gendiff_evaluate(&x, &circuit)?;
    let b = crate::comb::Binomials::new(2 * d);
    Ok((
        !value.is_zero(),
        EngineStats {
            engine: "general",
            basis_dim: b.c(2 * d, d),
            gates: circuit.num_gates() as u64,
        },
    ))
}

/// Matroid k-parity: given `B` with `km` rows and `kn` columns representing
/// a matroid on `[kn]`, and a partition into size-`k` parts, decide whether
/// some `m` parts union to an independent set. `X = B diag(x) B^T` and
/// `g = (sum_parts prod x)^m`; Cauchy-Binet gives squared minors, so the
/// inner product is positive exactly on yes-instances.
pub fn matroid_parity_decide(b: &MatroidInstance, parts: &[Vec<u32>]) -> Result<bool> {
    matroid_parity_report(b, parts, ArithMode::Exact).map(|(v, _)| v)
}

pub fn matroid_parity_report(
    b: &MatroidInstance,
    parts: &[Vec<u32>],
    mode: ArithMode,
) -> Result<(bool, EngineStats)> {
    if parts.is_empty() || parts[0].is_empty() {
        return Err(Error::BadPartition("empty partition".into()));
    }
    let k = parts[0].len();
    if b.cols() != k * parts.len() {
        return Err(Error::BadPartition(format!(
            "partition covers {} elements but the ground set has {}",
            k * parts.len(),
            b.cols()
        )));
    }
    if b.rows() % k != 0 {
        return Err(Error::BadDims(format!(
            "row count {} is not a multiple of the part size {k}",
            b.rows()
        )));
    }
    let m = (b.rows() / k) as u32;
    let circuit = build_part_product_power(parts, m)?.to_mode(mode)?;

    let d = b.rows();
    let entries: Vec<Vec<LinearForm>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    LinearForm::from_pairs(
                        (0..b.cols())
                            .map(|l| {
                                (
                                    l as u32 + 1,
                                    &b.entries()[i][l] * &b.entries()[j][l],
                                )
                            })
                            .collect(),
                    )
                })
                .collect()
        })
        .collect();
    let x = SymbolicMatrix::new(entries)?.to_mode(mode)?;
    let value = gendiff_evaluate(&x, &circuit)?;
    let bt = crate::comb::Binomials::new(2 * d);
    Ok((
        !value.is_zero(),
        EngineStats {
            engine: "general",
            basis_dim: bt.c(2 * d, d),
            gates: circuit.num_gates() as u64,
        },
    ))
}

/// k-matroid intersection: do the matroids represented by `mats` (all
/// `m x n`) share a common independent set of size `m`? Reduces to parity on
/// the direct sum with the interleaved parts `S_i = {i, i+n, ..., i+(k-1)n}`.
pub fn matroid_intersection_decide(mats: &[MatroidInstance]) -> Result<bool> {
    matroid_intersection_report(mats, ArithMode::Exact).map(|(v, _)| v)
}

pub fn matroid_intersection_report(
    mats: &[MatroidInstance],
    mode: ArithMode,
) -> Result<(bool, EngineStats)> {
    let Some(first) = mats.first() else {
        return Err(Error::BadDims("need at least one matroid".into()));
    };
    let (m, n) = (first.rows(), first.cols());
    if mats.iter().any(|b| b.rows() != m || b.cols() != n) {
        return Err(Error::BadDims(
            "matroid representations must share dimensions".into(),
        ));
    }
    let k = mats.len();
    let mut sum = vec![vec![ExactScalar::zero(); k * n]; k * m];
    for (block, mat) in mats.iter().enumerate() {
        for i in 0..m {
            for j in 0..n {
                sum[block * m + i][block * n + j] = mat.entries()[i][j].clone();
            }
        }
    }
    let parts: Vec<Vec<u32>> = (1..=n as u32)
        .map(|i| (0..k as u32).map(|b| i + b * n as u32).collect())
        .collect();
    matroid_parity_report(&MatroidInstance::new(sum)?, &parts, mode)
}
