//! Normal (Forney-style) factor graphs over discrete domains, single-sweep
//! sum-product, the analytic message chain of one CCSS branch and message
//! count accounting.
//!
//! Variables live on edges. An edge touches at most two nodes; an edge with
//! one end is a half-edge. A variable shared by more than two factors is
//! split into replicas tied by an equality node.

use crate::channels::FadingLink;
use crate::error::Error;
use crate::fusion::report_density;
use crate::Result;
use rand::Rng;
use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeDomain {
    Discrete(usize),
    /// Continuous variable handled by closed-form messages only.
    Analytic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Row-major table over the node's edges, last edge fastest.
    Table(Vec<f64>),
    Equality,
    /// Closed-form kernel; counted for complexity, not run by [`run_spa`].
    Analytic,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub name: String,
    pub domain: EdgeDomain,
    pub ends: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct FactorNode {
    pub name: String,
    pub edges: Vec<EdgeId>,
    pub kernel: Kernel,
}

impl FactorNode {
    pub fn is_equality(&self) -> bool {
        matches!(self.kernel, Kernel::Equality)
    }
}

#[derive(Debug, Clone, Default)]
pub struct NfgGraph {
    nodes: Vec<FactorNode>,
    edges: Vec<Edge>,
}

/// Structure summary used by the complexity accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Census {
    pub nodes: usize,
    pub edges: usize,
    pub half_edges: usize,
    pub equality_nodes: usize,
    /// degree → number of nodes with that degree.
    pub degrees: BTreeMap<usize, u64>,
}

impl NfgGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[FactorNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &FactorNode {
        &self.nodes[id.0]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn add_edge(&mut self, name: impl Into<String>, domain: EdgeDomain) -> EdgeId {
        self.edges.push(Edge {
            name: name.into(),
            domain,
            ends: Vec::new(),
        });
        EdgeId(self.edges.len() - 1)
    }

    fn attach(&mut self, name: String, edges: &[EdgeId], kernel: Kernel) -> Result<NodeId> {
        if edges.is_empty() {
            return Err(Error::Graph(format!("node {name} has no edges")));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.0 >= self.edges.len() {
                return Err(Error::Graph(format!("node {name}: unknown edge {}", e.0)));
            }
            if edges[..i].contains(e) {
                return Err(Error::Graph(format!("node {name} lists edge {} twice", self.edges[e.0].name)));
            }
            if self.edges[e.0].ends.len() >= 2 {
                return Err(Error::Graph(format!(
                    "edge {} already joins two nodes; insert an equality node",
                    self.edges[e.0].name
                )));
            }
        }
        let id = NodeId(self.nodes.len());
        for e in edges {
            self.edges[e.0].ends.push(id);
        }
        self.nodes.push(FactorNode {
            name,
            edges: edges.to_vec(),
            kernel,
        });
        Ok(id)
    }

    /// Adds a table factor. The table length must equal the product of the
    /// edge cardinalities and every entry must be finite and non-negative.
    pub fn add_factor(&mut self, name: impl Into<String>, edges: &[EdgeId], table: Vec<f64>) -> Result<NodeId> {
        let name = name.into();
        let mut size = 1usize;
        for e in edges {
            match self.edges.get(e.0).map(|x| x.domain) {
                Some(EdgeDomain::Discrete(c)) => size *= c,
                Some(EdgeDomain::Analytic) => {
                    return Err(Error::Graph(format!("table factor {name} touches an analytic edge")))
                }
                None => return Err(Error::Graph(format!("node {name}: unknown edge {}", e.0))),
            }
        }
        if table.len() != size {
            return Err(Error::Graph(format!("factor {name}: table has {} entries, expected {size}", table.len())));
        }
        if table.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Graph(format!("factor {name}: entries must be finite and non-negative")));
        }
        self.attach(name, edges, Kernel::Table(table))
    }

    pub fn add_equality(&mut self, name: impl Into<String>, edges: &[EdgeId]) -> Result<NodeId> {
        let name = name.into();
        let doms: Vec<EdgeDomain> = edges
            .iter()
            .map(|e| self.edges.get(e.0).map(|x| x.domain))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Graph(format!("equality {name}: unknown edge")))?;
        if doms.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Graph(format!("equality {name}: edge domains differ")));
        }
        self.attach(name, edges, Kernel::Equality)
    }

    pub fn add_analytic(&mut self, name: impl Into<String>, edges: &[EdgeId]) -> Result<NodeId> {
        self.attach(name.into(), edges, Kernel::Analytic)
    }

    /// Rejects dangling edges and cycles (union-find over nodes).
    pub fn check_acyclic(&self) -> Result<()> {
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            match e.ends.as_slice() {
                [] => return Err(Error::Graph(format!("edge {} is not attached", e.name))),
                [_] => {}
                [a, b] => {
                    let (ra, rb) = (find(&mut parent, a.0), find(&mut parent, b.0));
                    if ra == rb {
                        return Err(Error::Graph(format!("cycle through edge {}", e.name)));
                    }
                    parent[ra] = rb;
                }
                _ => unreachable!("attach keeps at most two ends"),
            }
        }
        Ok(())
    }

    pub fn census(&self) -> Census {
        let mut degrees = BTreeMap::new();
        for n in &self.nodes {
            *degrees.entry(n.edges.len()).or_insert(0) += 1;
        }
        Census {
            nodes: self.nodes.len(),
            edges: self.edges.len(),
            half_edges: self.edges.iter().filter(|e| e.ends.len() == 1).count(),
            equality_nodes: self.nodes.iter().filter(|n| n.is_equality()).count(),
            degrees,
        }
    }

    fn card(&self, e: EdgeId) -> Result<usize> {
        match self.edges[e.0].domain {
            EdgeDomain::Discrete(c) => Ok(c),
            EdgeDomain::Analytic => Err(Error::Graph(format!("edge {} is analytic", self.edges[e.0].name))),
        }
    }
}

/// Which way a message travels along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    EdgeToNode,
    NodeToEdge,
}

/// A normalized message over an edge domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Message {
    pub direction: Direction,
    pub edge: EdgeId,
    pub node: NodeId,
    pub values: Vec<f64>,
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// Message store for one sum-product sweep. Every node→edge message is
/// computed at most once; edge→node messages are products of stored ones.
pub struct Spa<'g> {
    graph: &'g NfgGraph,
    // (node, position within node.edges) → message slot
    slot: Vec<Vec<usize>>,
    store: Vec<Option<Vec<f64>>>,
    computed: Vec<u32>,
}

impl<'g> Spa<'g> {
    pub fn new(graph: &'g NfgGraph) -> Result<Self> {
        graph.check_acyclic()?;
        let mut slot = Vec::with_capacity(graph.nodes.len());
        let mut next = 0;
        for n in &graph.nodes {
            if matches!(n.kernel, Kernel::Analytic) {
                return Err(Error::Graph(format!("node {} has an analytic kernel", n.name)));
            }
            slot.push((next..next + n.edges.len()).collect());
            next += n.edges.len();
        }
        Ok(Self {
            graph,
            slot,
            store: vec![None; next],
            computed: vec![0; next],
        })
    }

    fn position(&self, node: NodeId, edge: EdgeId) -> Result<usize> {
        self.graph.nodes[node.0]
            .edges
            .iter()
            .position(|e| *e == edge)
            .ok_or_else(|| Error::Graph(format!("edge {} does not touch node {}", edge.0, node.0)))
    }

    fn incoming(&self, node: NodeId, edge: EdgeId) -> Result<Vec<f64>> {
        let e = &self.graph.edges[edge.0];
        let card = self.graph.card(edge)?;
        match e.ends.iter().find(|n| **n != node) {
            None => Ok(vec![1.0 / card as f64; card]),
            Some(other) => {
                let pos = self.position(*other, edge)?;
                self.store[self.slot[other.0][pos]].clone().ok_or_else(|| {
                    Error::Schedule(format!(
                        "message {} -> {} not yet available",
                        self.graph.nodes[other.0].name, e.name
                    ))
                })
            }
        }
    }

    /// Message from `edge` into `node`: the other end's node→edge message,
    /// or the unit message on a half-edge.
    pub fn message_edge_to_node(&self, edge: EdgeId, node: NodeId) -> Result<Message> {
        self.position(node, edge)?;
        Ok(Message {
            direction: Direction::EdgeToNode,
            edge,
            node,
            values: self.incoming(node, edge)?,
        })
    }

    /// Computes and stores the sum-product message from `node` to `edge`.
    pub fn message_node_to_edge(&mut self, node: NodeId, edge: EdgeId) -> Result<Message> {
        let n = &self.graph.nodes[node.0];
        let target = self.position(node, edge)?;
        let cards: Vec<usize> = n.edges.iter().map(|e| self.graph.card(*e)).collect::<Result<_>>()?;
        let inputs: Vec<Vec<f64>> = n
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| if i == target { Ok(Vec::new()) } else { self.incoming(node, *e) })
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; cards[target]];
        match &n.kernel {
            Kernel::Equality => {
                for (x, o) in out.iter_mut().enumerate() {
                    *o = inputs.iter().enumerate().filter(|(i, _)| *i != target).map(|(_, m)| m[x]).product();
                }
            }
            Kernel::Table(table) => {
                let mut idx = vec![0usize; cards.len()];
                for &f in table.iter() {
                    let mut w = f;
                    if w != 0.0 {
                        for (i, m) in inputs.iter().enumerate() {
                            if i != target {
                                w *= m[idx[i]];
                            }
                        }
                        out[idx[target]] += w;
                    }
                    for i in (0..cards.len()).rev() {
                        idx[i] += 1;
                        if idx[i] < cards[i] {
                            break;
                        }
                        idx[i] = 0;
                    }
                }
            }
            Kernel::Analytic => unreachable!("rejected in Spa::new"),
        }
        normalize(&mut out);
        let s = self.slot[node.0][target];
        self.computed[s] += 1;
        self.store[s] = Some(out.clone());
        Ok(Message {
            direction: Direction::NodeToEdge,
            edge,
            node,
            values: out,
        })
    }

    /// How many times each node→edge message was computed.
    pub fn computation_counts(&self) -> &[u32] {
        &self.computed
    }
}

/// Beliefs from one sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaResult {
    /// Normalized belief per edge, indexed by `EdgeId`.
    pub beliefs: Vec<Vec<f64>>,
    /// Number of node→edge messages computed.
    pub messages: usize,
}

/// Single natural-schedule sweep: a node→edge message fires once all its
/// inputs exist, which starts at leaves and half-edges and works inward and
/// back out.
pub fn run_spa(graph: &NfgGraph) -> Result<SpaResult> {
    let mut spa = Spa::new(graph)?;
    // pending[(node,pos)] = number of inputs still missing
    let mut pending: Vec<Vec<usize>> = Vec::with_capacity(graph.nodes.len());
    let mut queue = VecDeque::new();
    for (ni, n) in graph.nodes.iter().enumerate() {
        let internal = n.edges.iter().filter(|e| graph.edges[e.0].ends.len() == 2).count();
        let row: Vec<usize> = n
            .edges
            .iter()
            .map(|e| internal - usize::from(graph.edges[e.0].ends.len() == 2))
            .collect();
        for (p, &c) in row.iter().enumerate() {
            if c == 0 {
                queue.push_back((ni, p));
            }
        }
        pending.push(row);
    }
    let mut done = 0;
    while let Some((ni, p)) = queue.pop_front() {
        let edge = graph.nodes[ni].edges[p];
        spa.message_node_to_edge(NodeId(ni), edge)?;
        done += 1;
        // the message now feeds every other output of the far node
        if let Some(other) = graph.edges[edge.0].ends.iter().find(|n| n.0 != ni) {
            let on = &graph.nodes[other.0];
            for (q, e) in on.edges.iter().enumerate() {
                if *e != edge {
                    pending[other.0][q] -= 1;
                    if pending[other.0][q] == 0 {
                        queue.push_back((other.0, q));
                    }
                }
            }
        }
    }
    if done != spa.store.len() || spa.computed.iter().any(|&c| c != 1) {
        return Err(Error::Schedule(format!(
            "sweep computed {done} of {} messages",
            spa.store.len()
        )));
    }
    let mut beliefs = Vec::with_capacity(graph.edges.len());
    for (ei, e) in graph.edges.iter().enumerate() {
        let card = graph.card(EdgeId(ei))?;
        let mut b = vec![1.0; card];
        for n in &e.ends {
            let pos = spa.position(*n, EdgeId(ei))?;
            let m = spa.store[spa.slot[n.0][pos]].as_ref().expect("sweep complete");
            b.iter_mut().zip(m).for_each(|(x, y)| *x *= y);
        }
        normalize(&mut b);
        beliefs.push(b);
    }
    Ok(SpaResult { beliefs, messages: done })
}

/// A discrete factorization `Π_j f_j(s_j)` over variables `0..cards.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub cards: Vec<usize>,
    pub factors: Vec<(Vec<usize>, Vec<f64>)>,
}

impl Factorization {
    /// Builds the normal factor graph, inserting an equality node wherever a
    /// variable appears in more than two factors. Returns the graph and one
    /// representative edge per variable.
    pub fn to_graph(&self) -> Result<(NfgGraph, Vec<EdgeId>)> {
        let mut uses = vec![0usize; self.cards.len()];
        for (vars, _) in &self.factors {
            for &v in vars {
                *uses.get_mut(v).ok_or_else(|| Error::Graph(format!("unknown variable {v}")))? += 1;
            }
        }
        let mut g = NfgGraph::new();
        let mut rep = Vec::new();
        // per variable: queue of edges that factors should attach to
        let mut slots: Vec<Vec<EdgeId>> = Vec::new();
        for (v, (&c, &u)) in self.cards.iter().zip(&uses).enumerate() {
            match u {
                0 => return Err(Error::Graph(format!("variable x{} is in no factor", v + 1))),
                1 | 2 => {
                    let e = g.add_edge(format!("x{}", v + 1), EdgeDomain::Discrete(c));
                    rep.push(e);
                    slots.push(vec![e; u]);
                }
                _ => {
                    let reps: Vec<EdgeId> = (0..u)
                        .map(|r| g.add_edge(format!("x{}_{}", v + 1, r + 1), EdgeDomain::Discrete(c)))
                        .collect();
                    g.add_equality(format!("eq_x{}", v + 1), &reps)?;
                    rep.push(reps[0]);
                    slots.push(reps);
                }
            }
        }
        for (j, (vars, table)) in self.factors.iter().enumerate() {
            let es: Vec<EdgeId> = vars.iter().map(|&v| slots[v].pop().expect("counted above")).collect();
            g.add_factor(format!("f{}", j + 1), &es, table.clone())?;
        }
        Ok((g, rep))
    }

    /// Exhaustive marginals of the normalized product, one vector per
    /// variable. Cost is `Π cards`.
    pub fn brute_force_marginals(&self) -> Vec<Vec<f64>> {
        let n = self.cards.len();
        let mut marg: Vec<Vec<f64>> = self.cards.iter().map(|&c| vec![0.0; c]).collect();
        let mut x = vec![0usize; n];
        loop {
            let mut w = 1.0;
            for (vars, table) in &self.factors {
                let mut idx = 0;
                for &v in vars {
                    idx = idx * self.cards[v] + x[v];
                }
                w *= table[idx];
            }
            for v in 0..n {
                marg[v][x[v]] += w;
            }
            let mut i = n;
            loop {
                if i == 0 {
                    marg.iter_mut().for_each(|m| normalize(m));
                    return marg;
                }
                i -= 1;
                x[i] += 1;
                if x[i] < self.cards[i] {
                    break;
                }
                x[i] = 0;
            }
        }
    }
}

/// Random tree-structured factorization with at most `max_vars` variables
/// of cardinality `2..=max_card` and positive tables.
pub fn random_tree_factorization<R: Rng + ?Sized>(rng: &mut R, max_vars: usize, max_card: usize) -> Factorization {
    let n = rng.random_range(1..=max_vars.max(1));
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_card.max(2))).collect();
    let mut factors: Vec<Vec<usize>> = Vec::new();
    let mut used = 0;
    while used < n {
        let mut vars = Vec::new();
        if used > 0 {
            vars.push(rng.random_range(0..used));
        }
        let fresh = rng.random_range(usize::from(used == 0)..=2).min(n - used);
        vars.extend(used..used + fresh);
        used += fresh;
        factors.push(vars);
        // occasional unary evidence on an existing variable
        if used > 0 && rng.random_bool(0.3) {
            factors.push(vec![rng.random_range(0..used)]);
        }
    }
    let factors = factors
        .into_iter()
        .map(|vars| {
            let size: usize = vars.iter().map(|&v| cards[v]).product();
            let table = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
            (vars, table)
        })
        .collect();
    Factorization { cards, factors }
}

/// The seven-variable, six-factor example
/// `f_A(x1,x2,x3,x4) f_B(x1,x5) f_C(x2,x7) f_D(x4) f_E(x5) f_F(x5,x6)`
/// with the given tables (row-major, binary variables).
pub fn example_factorization(tables: [Vec<f64>; 6]) -> Factorization {
    let scopes = [vec![0, 1, 2, 3], vec![0, 4], vec![1, 6], vec![3], vec![4], vec![4, 5]];
    Factorization {
        cards: vec![2; 7],
        factors: scopes.into_iter().zip(tables).collect(),
    }
}

/// `C_FG = Σ_i i·d_i·|X|^i` from the graph's degree census.
pub fn complexity_fg(graph: &NfgGraph, card: u32) -> Result<u128> {
    complexity_from_census(&graph.census().degrees, card)
}

pub fn complexity_from_census(degrees: &BTreeMap<usize, u64>, card: u32) -> Result<u128> {
    let mut total: u128 = 0;
    for (&deg, &count) in degrees {
        let p = u32::try_from(deg)
            .ok()
            .and_then(|d| u128::from(card).checked_pow(d))
            .ok_or(Error::Overflow("complexity_fg"))?;
        let term = (deg as u128)
            .checked_mul(u128::from(count))
            .and_then(|v| v.checked_mul(p))
            .ok_or(Error::Overflow("complexity_fg"))?;
        total = total.checked_add(term).ok_or(Error::Overflow("complexity_fg"))?;
    }
    Ok(total)
}

/// `C_CN = M·|X|^M`.
pub fn complexity_explicit(m: u32, card: u32) -> Result<u128> {
    u128::from(card)
        .checked_pow(m)
        .and_then(|p| p.checked_mul(u128::from(m)))
        .ok_or(Error::Overflow("complexity_explicit"))
}

fn uniform(g: &NfgGraph, edges: &[EdgeId]) -> Vec<f64> {
    let size: usize = edges
        .iter()
        .map(|e| match g.edge(*e).domain {
            EdgeDomain::Discrete(c) => c,
            EdgeDomain::Analytic => 1,
        })
        .product();
    vec![1.0 / size as f64; size]
}

/// Discretized CCSS graph with `k` branches, every variable quantized to
/// `card` levels: `P(y|u,v) P(u|t) P(t|H,z) P(z) P(v)` per branch, the
/// hypothesis shared through an equality node when `k > 2`. Kernels are
/// uniform; the graph exists for structure and cost accounting.
pub fn ccss_graph(k: usize, card: usize) -> Result<NfgGraph> {
    if k == 0 || card == 0 {
        return Err(Error::Graph("need at least one branch and one level".into()));
    }
    let d = EdgeDomain::Discrete(card);
    let mut g = NfgGraph::new();
    let h_edges: Vec<EdgeId> = if k <= 2 {
        vec![g.add_edge("H", d); k.min(1)]
    } else {
        (1..=k).map(|i| g.add_edge(format!("H_{i}"), d)).collect()
    };
    if k > 2 {
        g.add_equality("eq_H", &h_edges)?;
    }
    for i in 1..=k {
        let h = if k <= 2 { h_edges[0] } else { h_edges[i - 1] };
        let z = g.add_edge(format!("z_{i}"), d);
        let t = g.add_edge(format!("t_{i}"), d);
        let u = g.add_edge(format!("u_{i}"), d);
        let v = g.add_edge(format!("v_{i}"), d);
        let y = g.add_edge(format!("y_{i}"), d);
        let tab = uniform(&g, &[z]);
        g.add_factor(format!("P(z_{i})"), &[z], tab)?;
        let tab = uniform(&g, &[t, h, z]);
        g.add_factor(format!("P(t_{i}|H,z_{i})"), &[t, h, z], tab)?;
        let tab = uniform(&g, &[u, t]);
        g.add_factor(format!("P(u_{i}|t_{i})"), &[u, t], tab)?;
        let tab = uniform(&g, &[v]);
        g.add_factor(format!("P(v_{i})"), &[v], tab)?;
        let tab = uniform(&g, &[y, u, v]);
        g.add_factor(format!("P(y_{i}|u_{i},v_{i})"), &[y, u, v], tab)?;
    }
    Ok(g)
}

/// Per-branch likelihood chain `P(z) - z - P(t|z) - t - P(u|t) - u - P(y|u)
/// - y - obs`, repeated for `k` independent branches.
pub fn ccss_chain_graph(k: usize, card: usize) -> Result<NfgGraph> {
    if k == 0 || card == 0 {
        return Err(Error::Graph("need at least one branch and one level".into()));
    }
    let d = EdgeDomain::Discrete(card);
    let mut g = NfgGraph::new();
    for i in 1..=k {
        let z = g.add_edge(format!("z_{i}"), d);
        let t = g.add_edge(format!("t_{i}"), d);
        let u = g.add_edge(format!("u_{i}"), d);
        let y = g.add_edge(format!("y_{i}"), d);
        let tab = uniform(&g, &[z]);
        g.add_factor(format!("P(z_{i})"), &[z], tab)?;
        let tab = uniform(&g, &[t, z]);
        g.add_factor(format!("P(t_{i}|z_{i})"), &[t, z], tab)?;
        let tab = uniform(&g, &[u, t]);
        g.add_factor(format!("P(u_{i}|t_{i})"), &[u, t], tab)?;
        let tab = uniform(&g, &[y, u]);
        g.add_factor(format!("P(y_{i}|u_{i})"), &[y, u], tab)?;
        let tab = uniform(&g, &[y]);
        g.add_factor(format!("obs_{i}"), &[y], tab)?;
    }
    Ok(g)
}

/// Closed-form messages on one CCSS branch with continuous `z, t, v, y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchMessage {
    /// Constant message: half-edge initialization and the flat prior on H.
    Unit,
    /// A prior density passed through unchanged (`P(v)` or `P(z)`).
    Prior,
    /// `P(y|u)` evaluated at the observed `y` for `u = -1, +1`.
    ReportLikelihood { minus: f64, plus: f64 },
    /// `P(y|-1) I(t < τ) + P(y|+1) I(t > τ)`.
    ThresholdGate { below: f64, above: f64 },
    /// `g(H_0), g(H_1)` for this branch.
    Hypothesis { h0: f64, h1: f64 },
}

/// The eleven branch messages in dependency order, labelled `i`..`xi`.
/// Item (iv) is computed before (v), which consumes it.
pub fn ccss_branch_messages(y: f64, pd: f64, pf: f64, link: &FadingLink) -> Result<Vec<(&'static str, BranchMessage)>> {
    let minus = report_density(y, -1, link)?;
    let plus = report_density(y, 1, link)?;
    let report = BranchMessage::ReportLikelihood { minus, plus };
    let gate = BranchMessage::ThresholdGate {
        below: minus,
        above: plus,
    };
    // Integrating the gate against P(t|H_i) leaves the tail masses of the
    // local detector: (1-pf, pf) under H0 and (1-pd, pd) under H1.
    let h0 = minus * (1.0 - pf) + plus * pf;
    let h1 = minus * (1.0 - pd) + plus * pd;
    Ok(vec![
        ("i", BranchMessage::Unit),
        ("ii", BranchMessage::Prior),
        ("iii", BranchMessage::Prior),
        ("iv", report),
        ("v", report),
        ("vi", gate),
        ("vii", gate),
        ("viii", BranchMessage::Prior),
        ("ix", BranchMessage::Prior),
        ("x", BranchMessage::Unit),
        ("xi", BranchMessage::Hypothesis { h0, h1 }),
    ])
}

/// `(g(H_0), g(H_1))` on one branch.
pub fn ccss_branch_marginal(y: f64, pd: f64, pf: f64, link: &FadingLink) -> Result<(f64, f64)> {
    match ccss_branch_messages(y, pd, pf, link)?.last() {
        Some((_, BranchMessage::Hypothesis { h0, h1 })) => Ok((*h0, *h1)),
        _ => unreachable!("the last message is the hypothesis marginal"),
    }
}

/// `ln P(y_1..K | H_i)` for both hypotheses as the accumulated product of
/// branch marginals.
pub fn ccss_log_likelihoods(ys: &[f64], branches: &[crate::fusion::BranchStats]) -> Result<(f64, f64)> {
    if ys.len() != branches.len() {
        return Err(crate::error::domain("ccss_log_likelihoods", "one report per branch required"));
    }
    let mut acc = (0.0, 0.0);
    for (y, b) in ys.iter().zip(branches) {
        let (g0, g1) = ccss_branch_marginal(*y, b.pd, b.pf, &b.link)?;
        acc.0 += g0.ln();
        acc.1 += g1.ln();
    }
    Ok(acc)
}
