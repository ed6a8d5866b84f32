//! Invasion graph, information structure, their comparison and export.
//!
//! The invasion graph (IG) is read off the sign table alone. The
//! information structure (IS) is built from the attracting equilibria of
//! every sub-community: from an admissible `I`, each set `K` obtained by
//! adding successful invaders to `I` contributes an edge to the attractor
//! of `K`. For VL-stable `A` with all equilibria hyperbolic the two graphs
//! coincide.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::Community;
use crate::equilibria::{Equilibrium, InvasionScheme, LvSystem};
use crate::error::{Error, Result};
use crate::lcp::{equilibrium_from_lcp, restricted_gass, MAX_LCP_SIZE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    IG,
    IS,
    Merged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "IG")]
    IgRule,
    #[serde(rename = "IS")]
    IsRule,
    Both,
    #[serde(rename = "ODEVerified")]
    OdeVerified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub community: Community,
    pub u_star: Vec<f64>,
    pub hyperbolic: bool,
    pub is_gass: bool,
}

impl From<&Equilibrium> for GraphNode {
    fn from(e: &Equilibrium) -> Self {
        GraphNode {
            community: e.community,
            u_star: e.u_star.clone(),
            hyperbolic: e.hyperbolic,
            is_gass: e.is_gass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: Community,
    pub dst: Community,
    pub provenance: Provenance,
    /// Number of invader sets that produced this edge (IS rule only).
    #[serde(default = "one")]
    pub multiplicity: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractorGraph {
    pub kind: GraphKind,
    /// Canonical community order.
    pub nodes: Vec<GraphNode>,
    /// Sorted by `(src, dst)` in canonical order.
    pub edges: Vec<Edge>,
    /// Self-edges or non-admissible targets dropped during construction.
    #[serde(default)]
    pub anomalies: usize,
}

impl AttractorGraph {
    pub fn node(&self, community: &Community) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.community == *community)
    }

    pub fn has_edge(&self, src: &Community, dst: &Community) -> bool {
        self.edges.iter().any(|e| e.src == *src && e.dst == *dst)
    }

    pub fn edge_pairs(&self) -> BTreeSet<(Community, Community)> {
        self.edges.iter().map(|e| (e.src, e.dst)).collect()
    }

    pub fn out_degree(&self, community: &Community) -> usize {
        self.edges.iter().filter(|e| e.src == *community).count()
    }

    pub fn in_degree(&self, community: &Community) -> usize {
        self.edges.iter().filter(|e| e.dst == *community).count()
    }

    fn sort_edges(&mut self) {
        self.edges.sort_by_key(|e| (e.src, e.dst));
    }
}

/// Edge `I → J` iff `I ≠ J`, every species of `J \ I` invades `I` and every
/// species of `I \ J` has negative rate at `J`.
pub fn build_ig(scheme: &InvasionScheme) -> AttractorGraph {
    let mut edges = Vec::new();
    for from in &scheme.rows {
        let i = from.community();
        for to in &scheme.rows {
            let j = to.community();
            if i == j {
                continue;
            }
            let invade = j.difference(i).members().all(|s| from.signs[s] == 1);
            let recede = i.difference(j).members().all(|s| to.signs[s] == -1);
            if invade && recede {
                edges.push(Edge {
                    src: i,
                    dst: j,
                    provenance: Provenance::IgRule,
                    multiplicity: 1,
                });
            }
        }
    }
    let mut g = AttractorGraph {
        kind: GraphKind::IG,
        nodes: scheme.equilibria().map(GraphNode::from).collect(),
        edges,
        anomalies: 0,
    };
    g.sort_edges();
    g
}

/// Attractor of every sub-community, keyed by the community whose open
/// face it attracts.
pub type GassMap = BTreeMap<Community, Equilibrium>;

fn check_gass_preconditions(sys: &LvSystem) -> Result<()> {
    if !sys.vl_assumed() {
        return Err(Error::PreconditionFailed(
            "attractors of sub-communities require a VL-stable interaction matrix".into(),
        ));
    }
    if sys.n() > MAX_LCP_SIZE {
        return Err(Error::TooLarge(format!("{} species", sys.n())));
    }
    Ok(())
}

fn gass_entry(sys: &LvSystem, community: Community, tol: f64) -> Result<(Community, Equilibrium)> {
    let eq = if community.is_empty() {
        equilibrium_from_lcp(sys, vec![0.0; sys.n()], tol)
    } else {
        equilibrium_from_lcp(sys, restricted_gass(sys, community, tol)?, tol)
    };
    Ok((community, eq))
}

/// Solves `LCP(-A(J), -b(J))` for all `2^n` communities `J`, smallest first.
pub fn find_gass_map(sys: &LvSystem, tol: f64) -> Result<GassMap> {
    check_gass_preconditions(sys)?;
    Community::all_subsets(sys.n())
        .into_iter()
        .map(|c| gass_entry(sys, c, tol))
        .collect()
}

/// Same map as [`find_gass_map`], solved in parallel.
pub fn find_gass_map_parallel(sys: &LvSystem, tol: f64) -> Result<GassMap> {
    check_gass_preconditions(sys)?;
    let entries: Vec<Result<(Community, Equilibrium)>> = Community::all_subsets(sys.n())
        .into_par_iter()
        .map(|c| gass_entry(sys, c, tol))
        .collect();
    entries.into_iter().collect()
}

/// For every admissible `I` with invaders `J`, an edge from `I` to the
/// attractor of each `K` with `I ⊊ K ⊆ I ∪ J`. Parallel edges from distinct
/// `K` are collapsed and counted in `multiplicity`.
pub fn build_is(sys: &LvSystem, gass_map: &GassMap, scheme: &InvasionScheme) -> Result<AttractorGraph> {
    if scheme.n != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "scheme over {} species, system over {}",
            scheme.n,
            sys.n()
        )));
    }
    let admissible: BTreeSet<Community> = scheme.communities().collect();
    let mut counts: BTreeMap<(Community, Community), usize> = BTreeMap::new();
    let mut anomalies = 0;
    for row in &scheme.rows {
        let from = row.community();
        let invaders = Community::from_mask(
            (0..scheme.n)
                .filter(|&s| row.signs[s] == 1)
                .fold(0u32, |m, s| m | (1 << s)),
        );
        for added in invaders.nonempty_subsets() {
            let k = from.union(added);
            let target = gass_map
                .get(&k)
                .ok_or_else(|| Error::InternalConsistency(format!("no attractor recorded for {k}")))?
                .community;
            if target == from || !admissible.contains(&target) {
                anomalies += 1;
                continue;
            }
            *counts.entry((from, target)).or_default() += 1;
        }
    }
    let edges = counts
        .into_iter()
        .map(|((src, dst), multiplicity)| Edge {
            src,
            dst,
            provenance: Provenance::IsRule,
            multiplicity,
        })
        .collect();
    let mut g = AttractorGraph {
        kind: GraphKind::IS,
        nodes: scheme.equilibria().map(GraphNode::from).collect(),
        edges,
        anomalies,
    };
    g.sort_edges();
    Ok(g)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphDiff {
    pub only_in_first: Vec<(Community, Community)>,
    pub only_in_second: Vec<(Community, Community)>,
    pub nodes_only_in_first: Vec<Community>,
    pub nodes_only_in_second: Vec<Community>,
}

impl GraphDiff {
    pub fn is_empty(&self) -> bool {
        self.only_in_first.is_empty()
            && self.only_in_second.is_empty()
            && self.nodes_only_in_first.is_empty()
            && self.nodes_only_in_second.is_empty()
    }
}

pub fn compare_graphs(first: &AttractorGraph, second: &AttractorGraph) -> GraphDiff {
    let e1 = first.edge_pairs();
    let e2 = second.edge_pairs();
    let n1: BTreeSet<Community> = first.nodes.iter().map(|n| n.community).collect();
    let n2: BTreeSet<Community> = second.nodes.iter().map(|n| n.community).collect();
    GraphDiff {
        only_in_first: e1.difference(&e2).copied().collect(),
        only_in_second: e2.difference(&e1).copied().collect(),
        nodes_only_in_first: n1.difference(&n2).copied().collect(),
        nodes_only_in_second: n2.difference(&n1).copied().collect(),
    }
}

/// Union of an IG and an IS with per-edge provenance.
pub fn merge_graphs(ig: &AttractorGraph, is: &AttractorGraph) -> AttractorGraph {
    let mut edges: BTreeMap<(Community, Community), Edge> = BTreeMap::new();
    for e in &ig.edges {
        edges.insert((e.src, e.dst), e.clone());
    }
    for e in &is.edges {
        edges
            .entry((e.src, e.dst))
            .and_modify(|x| {
                x.provenance = Provenance::Both;
                x.multiplicity = e.multiplicity;
            })
            .or_insert_with(|| e.clone());
    }
    let mut nodes = ig.nodes.clone();
    for n in &is.nodes {
        if !nodes.iter().any(|m| m.community == n.community) {
            nodes.push(n.clone());
        }
    }
    nodes.sort_by_key(|v| v.community);
    AttractorGraph {
        kind: GraphKind::Merged,
        nodes,
        edges: edges.into_values().collect(),
        anomalies: ig.anomalies + is.anomalies,
    }
}

/// Kahn's algorithm; among ready nodes the canonically smallest goes first.
pub fn topological_order(g: &AttractorGraph) -> Result<Vec<Community>> {
    let mut indegree: BTreeMap<Community, usize> = g.nodes.iter().map(|n| (n.community, 0)).collect();
    let mut successors: BTreeMap<Community, Vec<Community>> = BTreeMap::new();
    for e in &g.edges {
        *indegree.entry(e.dst).or_default() += 1;
        indegree.entry(e.src).or_default();
        successors.entry(e.src).or_default().push(e.dst);
    }
    let mut ready: BTreeSet<Community> = indegree.iter().filter(|(_, &d)| d == 0).map(|(c, _)| *c).collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(c) = ready.pop_first() {
        order.push(c);
        for s in successors.get(&c).into_iter().flatten() {
            let d = indegree.get_mut(s).expect("known node");
            *d -= 1;
            if *d == 0 {
                ready.insert(*s);
            }
        }
    }
    if order.len() == indegree.len() {
        return Ok(order);
    }
    let remaining: BTreeSet<Community> = indegree.iter().filter(|(_, &d)| d > 0).map(|(c, _)| *c).collect();
    Err(Error::NotADag(find_cycle(g, &remaining)))
}

/// Walks predecessors inside the unsorted remainder until a node repeats.
fn find_cycle(g: &AttractorGraph, remaining: &BTreeSet<Community>) -> Vec<Community> {
    let Some(&start) = remaining.iter().next() else {
        return Vec::new();
    };
    let mut path = vec![start];
    let mut current = start;
    loop {
        let pred = g
            .edges
            .iter()
            .find(|e| e.dst == current && remaining.contains(&e.src))
            .map(|e| e.src)
            .expect("every remaining node has a remaining predecessor");
        if let Some(pos) = path.iter().position(|&c| c == pred) {
            let mut cycle: Vec<Community> = path[pos..].to_vec();
            cycle.reverse();
            cycle.push(cycle[0]);
            return cycle;
        }
        path.push(pred);
        current = pred;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::PreconditionFailed(format!("unknown format {other:?}"))),
        }
    }
}

fn provenance_label(p: Provenance) -> &'static str {
    match p {
        Provenance::IgRule => "IG",
        Provenance::IsRule => "IS",
        Provenance::Both => "IG+IS",
        Provenance::OdeVerified => "ODE-verified",
    }
}

pub fn export_graph(g: &AttractorGraph, format: ExportFormat) -> String {
    match format {
        ExportFormat::Json => serde_json::to_string_pretty(g).expect("graph serializes") + "\n",
        ExportFormat::Dot => to_dot(g),
    }
}

pub fn graph_from_json(text: &str) -> Result<AttractorGraph> {
    serde_json::from_str(text).map_err(|e| Error::PreconditionFailed(format!("invalid graph JSON: {e}")))
}

fn to_dot(g: &AttractorGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {:?} {{", format!("{:?}", g.kind));
    out.push_str("  rankdir=BT;\n  node [shape=ellipse];\n");
    for n in &g.nodes {
        let coords: Vec<String> = n.u_star.iter().map(|v| format!("{v:.6}")).collect();
        let mut label = format!("{}\\nu* = ({})", n.community, coords.join(", "));
        let mut attrs = String::new();
        if n.is_gass {
            label.push_str("\\nGASS");
            attrs.push_str(", color=red, peripheries=2");
        }
        if !n.hyperbolic {
            label.push_str("\\nnonhyperbolic");
            attrs.push_str(", style=dashed");
        }
        let _ = writeln!(out, "  \"{}\" [label=\"{}\"{}];", n.community, label, attrs);
    }
    for e in &g.edges {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            e.src,
            e.dst,
            provenance_label(e.provenance)
        );
    }
    out.push_str("}\n");
    out
}
