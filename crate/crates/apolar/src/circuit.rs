//! Arithmetic circuit IR.
//!
//! A circuit is a DAG of gates in topological order. A circuit is *skew*
//! when every multiplication is a [`Gate::MulLin`], i.e. multiplies by a
//! homogeneous linear form. The differential engines require skew circuits;
//! the apolar-algebra evaluator also accepts general [`Gate::Mul`] products.
//!
//! Every gate carries a symbolic degree: `Some(d)` for a homogeneous
//! degree-`d` value, `None` for the zero polynomial (which is homogeneous of
//! every degree). Additions of unequal degrees are rejected at construction,
//! so a well-formed circuit is homogeneous without expansion.
//!
//! The text format is line-oriented SSA:
//!
//! ```text
//! # comment
//! g1 = var 2
//! g2 = const 3/4
//! g3 = mullin 1:1,-2:3 g1
//! g4 = add g3 g2      <- rejected: degree mismatch
//! out g3
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::detect::DirectedGraph;
use crate::error::{Error, Result};
use crate::monomial::Monomial;
use crate::poly::SparsePoly;
use crate::scalar::{ArithMode, ExactScalar};

/// Default cap on the number of terms [`expand_circuit`] will materialize.
pub const EXPAND_TERM_LIMIT: usize = 1_000_000;

/// A homogeneous linear form, stored as sorted `(variable, coefficient)`
/// pairs with no explicit zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearForm {
    coeffs: Vec<(u32, ExactScalar)>,
}

impl LinearForm {
    pub fn zero() -> LinearForm {
        LinearForm::default()
    }

    pub fn single(v: u32) -> LinearForm {
        LinearForm {
            coeffs: vec![(v, ExactScalar::one())],
        }
    }

    pub fn from_pairs(pairs: Vec<(u32, ExactScalar)>) -> LinearForm {
        let mut acc: BTreeMap<u32, ExactScalar> = BTreeMap::new();
        for (v, c) in pairs {
            assert!(v >= 1, "variables are 1-based");
            let slot = acc.entry(v).or_insert_with(ExactScalar::zero);
            *slot += &c;
        }
        LinearForm {
            coeffs: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (u32, &ExactScalar)> {
        self.coeffs.iter().map(|(v, c)| (*v, c))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficient_of(&self, v: u32) -> ExactScalar {
        self.coeffs
            .binary_search_by_key(&v, |&(var, _)| var)
            .map(|i| self.coeffs[i].1.clone())
            .unwrap_or_else(|_| ExactScalar::zero())
    }

    pub fn max_var(&self) -> u32 {
        self.coeffs.last().map(|&(v, _)| v).unwrap_or(0)
    }

    pub fn scale(&self, s: &ExactScalar) -> LinearForm {
        if s.is_zero() {
            return LinearForm::zero();
        }
        LinearForm {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * s)).collect(),
        }
    }

    pub fn neg(&self) -> LinearForm {
        self.scale(&-ExactScalar::one())
    }

    pub fn add(&self, other: &LinearForm) -> LinearForm {
        let mut pairs: Vec<(u32, ExactScalar)> = self.coeffs.clone();
        pairs.extend(other.coeffs.iter().cloned());
        LinearForm::from_pairs(pairs)
    }

    pub fn to_poly(&self) -> SparsePoly {
        let mut p = SparsePoly::zero();
        for (v, c) in &self.coeffs {
            p.add_term(Monomial::var(*v), c.clone());
        }
        p
    }

    pub fn to_mode(&self, mode: ArithMode) -> Result<LinearForm> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(v, c)| Ok((*v, c.to_mode(mode)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(LinearForm {
            coeffs: coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        })
    }

    /// The `c:v,c:v` syntax used by `mullin` lines.
    pub fn to_compact(&self) -> String {
        let mut s = String::new();
        for (i, (v, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{c}:{v}");
        }
        s
    }
}

pub type GateId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    /// The variable `x_v`.
    Input(u32),
    Const(ExactScalar),
    Add(GateId, GateId),
    /// Skew multiplication by a linear form.
    MulLin(LinearForm, GateId),
    /// General multiplication. Only the apolar-algebra evaluator accepts it.
    Mul(GateId, GateId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    gates: Vec<Gate>,
    degrees: Vec<Option<u32>>,
    output: GateId,
    nvars: u32,
}

impl Circuit {
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    /// Number of multiplication gates (skew or general).
    pub fn num_mul_gates(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::MulLin(..) | Gate::Mul(..)))
            .count()
    }

    pub fn output(&self) -> GateId {
        self.output
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    /// Homogeneous degree of the output; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.degrees[self.output]
    }

    pub fn gate_degree(&self, id: GateId) -> Option<u32> {
        self.degrees[id]
    }

    pub fn is_skew(&self) -> bool {
        !self.gates.iter().any(|g| matches!(g, Gate::Mul(..)))
    }

    /// Gates reachable from the output, as a mask.
    pub fn reachable(&self) -> Vec<bool> {
        let mut mask = vec![false; self.gates.len()];
        let mut stack = vec![self.output];
        while let Some(id) = stack.pop() {
            if mask[id] {
                continue;
            }
            mask[id] = true;
            match &self.gates[id] {
                Gate::Add(a, b) | Gate::Mul(a, b) => {
                    stack.push(*a);
                    stack.push(*b);
                }
                Gate::MulLin(_, a) => stack.push(*a),
                Gate::Input(_) | Gate::Const(_) => {}
            }
        }
        mask
    }

    pub fn to_mode(&self, mode: ArithMode) -> Result<Circuit> {
        let gates = self
            .gates
            .iter()
            .map(|g| {
                Ok(match g {
                    Gate::Const(c) => Gate::Const(c.to_mode(mode)?),
                    Gate::MulLin(f, a) => Gate::MulLin(f.to_mode(mode)?, *a),
                    other => other.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Circuit {
            gates,
            degrees: self.degrees.clone(),
            output: self.output,
            nvars: self.nvars,
        })
    }

    /// Serializes to the SSA text format with dense 1-based ids.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, g) in self.gates.iter().enumerate() {
            let id = i + 1;
            match g {
                Gate::Input(v) => {
                    let _ = writeln!(s, "g{id} = var {v}");
                }
                Gate::Const(c) => {
                    let _ = writeln!(s, "g{id} = const {c}");
                }
                Gate::Add(a, b) => {
                    let _ = writeln!(s, "g{id} = add g{} g{}", a + 1, b + 1);
                }
                Gate::MulLin(f, a) => {
                    let _ = writeln!(s, "g{id} = mullin {} g{}", f.to_compact(), a + 1);
                }
                Gate::Mul(a, b) => {
                    let _ = writeln!(s, "g{id} = mul g{} g{}", a + 1, b + 1);
                }
            }
        }
        let _ = writeln!(s, "out g{}", self.output + 1);
        s
    }
}

/// Incremental circuit construction with degree propagation.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    gates: Vec<Gate>,
    degrees: Vec<Option<u32>>,
    nvars: u32,
}

impl CircuitBuilder {
    pub fn new() -> CircuitBuilder {
        CircuitBuilder::default()
    }

    fn push(&mut self, gate: Gate, degree: Option<u32>) -> GateId {
        self.gates.push(gate);
        self.degrees.push(degree);
        self.gates.len() - 1
    }

    pub fn input(&mut self, v: u32) -> GateId {
        assert!(v >= 1, "variables are 1-based");
        self.nvars = self.nvars.max(v);
        self.push(Gate::Input(v), Some(1))
    }

    pub fn constant(&mut self, c: ExactScalar) -> GateId {
        let deg = if c.is_zero() { None } else { Some(0) };
        self.push(Gate::Const(c), deg)
    }

    pub fn add(&mut self, a: GateId, b: GateId) -> Result<GateId> {
        let deg = match (self.degrees[a], self.degrees[b]) {
            (None, d) | (d, None) => d,
            (Some(x), Some(y)) if x == y => Some(x),
            (Some(x), Some(y)) => {
                return Err(Error::DegreeMismatch(format!(
                    "add of degrees {x} and {y}"
                )))
            }
        };
        Ok(self.push(Gate::Add(a, b), deg))
    }

    /// Adds a chain summing `ids`; `None` if the slice is empty.
    pub fn add_chain(&mut self, ids: &[GateId]) -> Result<Option<GateId>> {
        let mut iter = ids.iter().copied();
        let Some(mut acc) = iter.next() else {
            return Ok(None);
        };
        for id in iter {
            acc = self.add(acc, id)?;
        }
        Ok(Some(acc))
    }

    pub fn mul_lin(&mut self, form: LinearForm, a: GateId) -> GateId {
        self.nvars = self.nvars.max(form.max_var());
        let deg = if form.is_zero() {
            None
        } else {
            self.degrees[a].map(|d| d + 1)
        };
        self.push(Gate::MulLin(form, a), deg)
    }

    pub fn mul(&mut self, a: GateId, b: GateId) -> GateId {
        let deg = match (self.degrees[a], self.degrees[b]) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        };
        self.push(Gate::Mul(a, b), deg)
    }

    pub fn finish(self, output: GateId) -> Circuit {
        assert!(output < self.gates.len(), "output gate must exist");
        Circuit {
            gates: self.gates,
            degrees: self.degrees,
            output,
            nvars: self.nvars,
        }
    }
}

/// Gate-by-gate interpretation of a circuit. Engines implement this against
/// their own state representation; [`evaluate_circuit`] supplies the shared
/// driver (topological order, operand reuse, freeing after last use).
pub trait CircuitSemantics {
    type State: Clone;

    fn input(&self, var: u32) -> Result<Self::State>;
    fn constant(&self, c: &ExactScalar) -> Result<Self::State>;
    fn add(&self, a: Self::State, b: Self::State) -> Result<Self::State>;
    fn mul_lin(&self, form: &LinearForm, a: Self::State) -> Result<Self::State>;
    fn mul(&self, _a: Self::State, _b: Self::State) -> Result<Self::State> {
        Err(Error::NonSkew)
    }
}

/// Evaluates the gates reachable from the output, dropping intermediate
/// states after their last use. Deterministic: gates evaluate in id order.
pub fn evaluate_circuit<S: CircuitSemantics>(sem: &S, c: &Circuit) -> Result<S::State> {
    let reachable = c.reachable();
    let mut uses = vec![0usize; c.num_gates()];
    for (id, gate) in c.gates().iter().enumerate() {
        if !reachable[id] {
            continue;
        }
        match gate {
            Gate::Add(a, b) | Gate::Mul(a, b) => {
                uses[*a] += 1;
                uses[*b] += 1;
            }
            Gate::MulLin(_, a) => uses[*a] += 1,
            _ => {}
        }
    }
    uses[c.output()] += 1;

    let mut states: Vec<Option<S::State>> = vec![None; c.num_gates()];
    let fetch = |states: &mut Vec<Option<S::State>>, uses: &mut Vec<usize>, id: GateId| {
        uses[id] -= 1;
        if uses[id] == 0 {
            states[id].take().expect("state computed")
        } else {
            states[id].clone().expect("state computed")
        }
    };

    for (id, gate) in c.gates().iter().enumerate() {
        if !reachable[id] {
            continue;
        }
        let state = match gate {
            Gate::Input(v) => sem.input(*v)?,
            Gate::Const(s) => sem.constant(s)?,
            Gate::Add(a, b) => {
                let (sa, sb) = (
                    fetch(&mut states, &mut uses, *a),
                    fetch(&mut states, &mut uses, *b),
                );
                sem.add(sa, sb)?
            }
            Gate::MulLin(f, a) => {
                let sa = fetch(&mut states, &mut uses, *a);
                sem.mul_lin(f, sa)?
            }
            Gate::Mul(a, b) => {
                let (sa, sb) = (
                    fetch(&mut states, &mut uses, *a),
                    fetch(&mut states, &mut uses, *b),
                );
                sem.mul(sa, sb)?
            }
        };
        states[id] = Some(state);
    }
    Ok(states[c.output()].take().expect("output computed"))
}

struct PolySemantics {
    term_limit: usize,
}

impl PolySemantics {
    fn check(&self, p: SparsePoly) -> Result<SparsePoly> {
        if p.num_terms() > self.term_limit {
            return Err(Error::SizeLimit(format!(
                "expansion exceeds {} terms",
                self.term_limit
            )));
        }
        Ok(p)
    }
}

impl CircuitSemantics for PolySemantics {
    type State = SparsePoly;

    fn input(&self, var: u32) -> Result<SparsePoly> {
        Ok(SparsePoly::var(var))
    }

    fn constant(&self, c: &ExactScalar) -> Result<SparsePoly> {
        Ok(SparsePoly::constant(c.clone()))
    }

    fn add(&self, a: SparsePoly, b: SparsePoly) -> Result<SparsePoly> {
        self.check(&a + &b)
    }

    fn mul_lin(&self, form: &LinearForm, a: SparsePoly) -> Result<SparsePoly> {
        self.check(form.to_poly().mul(&a))
    }

    fn mul(&self, a: SparsePoly, b: SparsePoly) -> Result<SparsePoly> {
        self.check(a.mul(&b))
    }
}

/// Expands a circuit to the exact polynomial it computes. Oracle-scale; the
/// default cap of [`EXPAND_TERM_LIMIT`] terms yields `SizeLimit` beyond.
pub fn expand_circuit(c: &Circuit) -> Result<SparsePoly> {
    expand_circuit_with_limit(c, EXPAND_TERM_LIMIT)
}

pub fn expand_circuit_with_limit(c: &Circuit, term_limit: usize) -> Result<SparsePoly> {
    evaluate_circuit(&PolySemantics { term_limit }, c)
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parses the SSA text format. Gate ids may be arbitrary, but every operand
/// must already be defined, which forces topological order.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut builder = CircuitBuilder::new();
    let mut ids: BTreeMap<u64, GateId> = BTreeMap::new();
    let mut last: Option<GateId> = None;
    let mut out: Option<GateId> = None;

    let syntax = |line: usize, message: &str| Error::SyntaxError {
        line,
        message: message.to_string(),
    };

    let parse_ref = |ids: &BTreeMap<u64, GateId>, line: usize, tok: &str| -> Result<GateId> {
        let id_num = tok
            .strip_prefix('g')
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| syntax(line, &format!("expected gate reference, got `{tok}`")))?;
        ids.get(&id_num)
            .copied()
            .ok_or(Error::UndefinedGate { line, id: id_num })
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();

        if tokens[0] == "out" {
            if tokens.len() != 2 {
                return Err(syntax(line, "expected `out g<id>`"));
            }
            if out.is_some() {
                return Err(syntax(line, "duplicate `out` line"));
            }
            out = Some(parse_ref(&ids, line, tokens[1])?);
            continue;
        }

        // g<id> = <op> ...
        if tokens.len() < 3 || tokens[1] != "=" {
            return Err(syntax(line, "expected `g<id> = <op> ...`"));
        }
        let id_num = tokens[0]
            .strip_prefix('g')
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| syntax(line, &format!("bad gate id `{}`", tokens[0])))?;
        if ids.contains_key(&id_num) {
            return Err(Error::DuplicateGateId { line, id: id_num });
        }

        let gate = match tokens[2] {
            "var" => {
                if tokens.len() != 4 {
                    return Err(syntax(line, "expected `var <i>`"));
                }
                let v: u32 = tokens[3]
                    .parse()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| syntax(line, "variable index must be a positive integer"))?;
                builder.input(v)
            }
            "const" => {
                if tokens.len() != 4 {
                    return Err(syntax(line, "expected `const <rational>`"));
                }
                let c: ExactScalar = tokens[3]
                    .parse()
                    .map_err(|_| syntax(line, &format!("bad rational `{}`", tokens[3])))?;
                builder.constant(c)
            }
            "add" => {
                if tokens.len() != 5 {
                    return Err(syntax(line, "expected `add g<a> g<b>`"));
                }
                let a = parse_ref(&ids, line, tokens[3])?;
                let b = parse_ref(&ids, line, tokens[4])?;
                builder.add(a, b).map_err(|e| match e {
                    Error::DegreeMismatch(m) => {
                        Error::DegreeMismatch(format!("line {line}: {m}"))
                    }
                    other => other,
                })?
            }
            "mullin" => {
                if tokens.len() != 5 {
                    return Err(syntax(line, "expected `mullin <c>:<v>[,...] g<a>`"));
                }
                let mut pairs = Vec::new();
                for item in tokens[3].split(',') {
                    let (cs, vs) = item
                        .split_once(':')
                        .ok_or_else(|| syntax(line, &format!("bad form term `{item}`")))?;
                    let c: ExactScalar = cs
                        .parse()
                        .map_err(|_| syntax(line, &format!("bad coefficient `{cs}`")))?;
                    let v: u32 = vs
                        .parse()
                        .ok()
                        .filter(|&v| v >= 1)
                        .ok_or_else(|| syntax(line, &format!("bad variable `{vs}`")))?;
                    pairs.push((v, c));
                }
                let a = parse_ref(&ids, line, tokens[4])?;
                builder.mul_lin(LinearForm::from_pairs(pairs), a)
            }
            "mul" => return Err(Error::NonSkewMul { line }),
            other => return Err(syntax(line, &format!("unknown operation `{other}`"))),
        };
        ids.insert(id_num, gate);
        last = Some(gate);
    }

    let output = out
        .or(last)
        .ok_or_else(|| syntax(0, "empty circuit"))?;
    Ok(builder.finish(output))
}

// ---------------------------------------------------------------------------
// Builders for the generating polynomials of the applications
// ---------------------------------------------------------------------------

/// Skew circuit for `tr(A_G^d)`, where `A_G` has entry `(i, j)` equal to
/// `x_i` exactly when the edge `i -> j` exists. Built as a layered walk sum
/// per start vertex: each vertex's outgoing product `x_i * W(i)` is a single
/// `MulLin` gate shared by all of its out-edges, so the circuit has at most
/// `d * n^2` multiplication gates. States that cannot return to the start in
/// the remaining steps are pruned; this only removes zero summands.
pub fn build_trace_power(g: &DirectedGraph, d: u32) -> Result<Circuit> {
    if g.num_vertices() == 0 {
        return Err(Error::EmptyGraph);
    }
    assert!(d >= 1, "trace power requires d >= 1");
    let n = g.num_vertices();
    let mut builder = CircuitBuilder::new();
    let one = builder.constant(ExactScalar::one());
    let mut closed_walks: Vec<GateId> = Vec::new();

    for start in 1..=n as u32 {
        // dist_back[v] = shortest path length v -> start, or None
        let dist_back = g.reverse_distances(start);
        if dist_back[start as usize].map_or(true, |t| t > d) {
            continue; // start lies on no closed walk of length <= d
        }
        let mut layer: Vec<Option<GateId>> = vec![None; n + 1];
        layer[start as usize] = Some(one);
        for t in 1..=d {
            let remaining = d - t;
            let mut next: Vec<Vec<GateId>> = vec![Vec::new(); n + 1];
            for v in 1..=n as u32 {
                let Some(state) = layer[v as usize] else {
                    continue;
                };
                let mut product: Option<GateId> = None;
                for &w in g.out_neighbors(v) {
                    // at the final layer only the start closes the walk
                    if t == d && w != start {
                        continue;
                    }
                    if dist_back[w as usize].map_or(true, |dist| dist > remaining) {
                        continue;
                    }
                    let p = *product
                        .get_or_insert_with(|| builder.mul_lin(LinearForm::single(v), state));
                    next[w as usize].push(p);
                }
            }
            layer = vec![None; n + 1];
            for v in 1..=n {
                layer[v] = builder.add_chain(&next[v])?;
            }
        }
        if let Some(gate) = layer[start as usize] {
            closed_walks.push(gate);
        }
    }

    let output = match builder.add_chain(&closed_walks)? {
        Some(id) => id,
        None => builder.constant(ExactScalar::zero()),
    };
    let mut circuit = builder.finish(output);
    circuit.nvars = circuit.nvars.max(n as u32);
    Ok(circuit)
}

/// Skew circuit for `(sum_{S in parts} prod_{i in S} x_i)^m`, built in `m`
/// stages; each stage multiplies the previous power by one part's product
/// using a chain of single-variable multiplications.
pub fn build_part_product_power(parts: &[Vec<u32>], m: u32) -> Result<Circuit> {
    if parts.is_empty() {
        return Err(Error::BadPartition("no parts".into()));
    }
    let k = parts[0].len();
    if k == 0 {
        return Err(Error::BadPartition("empty part".into()));
    }
    let ground = k * parts.len();
    let mut seen = vec![false; ground + 1];
    for part in parts {
        if part.len() != k {
            return Err(Error::BadPartition(format!(
                "parts of unequal sizes {k} and {}",
                part.len()
            )));
        }
        for &i in part {
            if i == 0 || i as usize > ground {
                return Err(Error::BadPartition(format!(
                    "element {i} outside the ground set [{ground}]"
                )));
            }
            if seen[i as usize] {
                return Err(Error::BadPartition(format!("element {i} repeated")));
            }
            seen[i as usize] = true;
        }
    }
    assert!(m >= 1, "power must be at least 1");

    let mut builder = CircuitBuilder::new();
    let mut power = builder.constant(ExactScalar::one());
    for _ in 0..m {
        let mut stage: Vec<GateId> = Vec::with_capacity(parts.len());
        for part in parts {
            let mut chain = power;
            for &i in part {
                chain = builder.mul_lin(LinearForm::single(i), chain);
            }
            stage.push(chain);
        }
        power = builder.add_chain(&stage)?.expect("nonempty partition");
    }
    let mut circuit = builder.finish(power);
    circuit.nvars = circuit.nvars.max(ground as u32);
    Ok(circuit)
}

/// Skew circuit of size `O(d^4)` computing the determinant of a `d x d`
/// matrix of linear forms, via the closed-walk ("clow") expansion of the
/// determinant.
///
/// A clow is a closed walk whose head (start) is its strictly smallest
/// vertex; a clow sequence is a list of clows with increasing heads and `d`
/// edges in total, contributing `(-1)^{d + #clows}` times its edge-weight
/// product. Summed over all clow sequences the non-permutation terms cancel
/// and the determinant remains. The state `(head, vertex, edges used)` is one
/// gate; signs fold into negated forms so no scaling gates are needed.
pub fn build_mv_determinant(d: usize, entries: &[Vec<LinearForm>]) -> Circuit {
    assert!(d >= 1, "determinant requires d >= 1");
    assert!(entries.len() == d && entries.iter().all(|r| r.len() == d));

    let mut builder = CircuitBuilder::new();
    let one = builder.constant(ExactScalar::one());
    // state[h][u] at the current edge count; heads and vertices are 1-based
    let mut layer: Vec<Vec<Vec<GateId>>> = vec![vec![Vec::new(); d + 1]; d + 1];
    for h in 1..=d {
        layer[h][h].push(one);
    }
    let mut finals: Vec<GateId> = Vec::new();

    for t in 0..d {
        let mut next: Vec<Vec<Vec<GateId>>> = vec![vec![Vec::new(); d + 1]; d + 1];
        for h in 1..=d {
            for u in h..=d {
                let Some(state) = builder.add_chain(&layer[h][u]).expect("equal degrees") else {
                    continue;
                };
                // extend the open clow with an edge u -> v, v > h
                if t + 1 < d {
                    for v in h + 1..=d {
                        let form = &entries[u - 1][v - 1];
                        if form.is_zero() {
                            continue;
                        }
                        let gate = builder.mul_lin(form.clone(), state);
                        next[h][v].push(gate);
                    }
                }
                // close the clow with the edge u -> h; each closed clow
                // carries a factor -1, and the final closing also carries
                // the global (-1)^d
                let close = &entries[u - 1][h - 1];
                if close.is_zero() {
                    continue;
                }
                if t + 1 < d {
                    let gate = builder.mul_lin(close.neg(), state);
                    for h2 in h + 1..=d {
                        next[h2][h2].push(gate);
                    }
                } else {
                    let sign_form = if d % 2 == 0 { close.neg() } else { close.clone() };
                    finals.push(builder.mul_lin(sign_form, state));
                }
            }
        }
        layer = next;
    }

    let output = match builder.add_chain(&finals).expect("equal degrees") {
        Some(id) => id,
        None => builder.constant(ExactScalar::zero()),
    };
    builder.finish(output)
}
