//! Graphs in the multi-edge sense: a finite set of directed edges with
//! head/tail maps and an involution `inv` pairing each directed edge with
//! its reverse. An edge fixed by `inv` is a *half-loop* (degree 1); a
//! two-element orbit at a single vertex is a *whole-loop* (degree 2).
//!
//! On top of the bare graphs this module provides orderings (orientation
//! plus total orders on vertices and edges), morphisms, `B`-graph
//! structures (a structure map to a fixed base graph), injective-embedding
//! counts, and the small numeric invariants (`ord`, Euler characteristic,
//! pruning).

mod embed;
mod json;

pub use embed::{aut_count, count_embeddings, enumerate_embeddings};
pub use json::{graph_from_json, graph_to_json, ParsedGraph};

use crate::error::{Error, Result};
use num_rational::Rational64;
use std::collections::BTreeMap;

pub type VertexId = u32;
pub type DirEdgeId = u32;
pub type OrbitId = u32;

/// Immutable multigraph with an edge involution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    tail: Vec<VertexId>,
    head: Vec<VertexId>,
    inv: Vec<DirEdgeId>,
    orbit_of: Vec<OrbitId>,
    orbit_reps: Vec<DirEdgeId>,
    /// outgoing directed edges per vertex (tail = v), sorted
    out_edges: Vec<Vec<DirEdgeId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    HalfLoop,
    WholeLoop,
    Plain,
}

impl Graph {
    /// Builds and validates a graph from raw edge descriptions.
    pub fn new(
        vertex_names: Vec<String>,
        edges: Vec<(String, VertexId, VertexId, DirEdgeId)>,
    ) -> Result<Graph> {
        let nv = vertex_names.len() as u32;
        let ne = edges.len() as u32;
        let mut edge_names = Vec::with_capacity(edges.len());
        let mut tail = Vec::with_capacity(edges.len());
        let mut head = Vec::with_capacity(edges.len());
        let mut inv = Vec::with_capacity(edges.len());
        for (name, t, h, i) in edges {
            if t >= nv || h >= nv {
                return Err(Error::InvalidGraph(format!(
                    "edge {name}: dangling vertex id"
                )));
            }
            if i >= ne {
                return Err(Error::InvalidGraph(format!(
                    "edge {name}: dangling inverse id {i}"
                )));
            }
            edge_names.push(name);
            tail.push(t);
            head.push(h);
            inv.push(i);
        }
        for e in 0..edges_len(&inv) {
            let ie = inv[e as usize];
            if inv[ie as usize] != e {
                return Err(Error::InvalidGraph(format!(
                    "inv is not an involution at edge {}",
                    edge_names[e as usize]
                )));
            }
            if tail[ie as usize] != head[e as usize] {
                return Err(Error::InvalidGraph(format!(
                    "tail(inv({0})) != head({0})",
                    edge_names[e as usize]
                )));
            }
        }
        let mut orbit_of = vec![u32::MAX; inv.len()];
        let mut orbit_reps = Vec::new();
        for e in 0..inv.len() as u32 {
            if orbit_of[e as usize] == u32::MAX {
                let id = orbit_reps.len() as u32;
                orbit_of[e as usize] = id;
                orbit_of[inv[e as usize] as usize] = id;
                orbit_reps.push(e);
            }
        }
        let mut out_edges = vec![Vec::new(); vertex_names.len()];
        for e in 0..inv.len() as u32 {
            out_edges[tail[e as usize] as usize].push(e);
        }
        Ok(Graph {
            vertex_names,
            edge_names,
            tail,
            head,
            inv,
            orbit_of,
            orbit_reps,
            out_edges,
        })
    }

    /// A graph with no vertices and no edges.
    pub fn empty() -> Graph {
        Graph::new(Vec::new(), Vec::new()).unwrap()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn n_dir_edges(&self) -> usize {
        self.inv.len()
    }

    pub fn n_edges(&self) -> usize {
        self.orbit_reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_vertices() == 0 && self.n_dir_edges() == 0
    }

    #[inline]
    pub fn tail(&self, e: DirEdgeId) -> VertexId {
        self.tail[e as usize]
    }

    #[inline]
    pub fn head(&self, e: DirEdgeId) -> VertexId {
        self.head[e as usize]
    }

    #[inline]
    pub fn inv(&self, e: DirEdgeId) -> DirEdgeId {
        self.inv[e as usize]
    }

    #[inline]
    pub fn orbit(&self, e: DirEdgeId) -> OrbitId {
        self.orbit_of[e as usize]
    }

    #[inline]
    pub fn orbit_rep(&self, o: OrbitId) -> DirEdgeId {
        self.orbit_reps[o as usize]
    }

    pub fn out_edges(&self, v: VertexId) -> &[DirEdgeId] {
        &self.out_edges[v as usize]
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v as usize]
    }

    pub fn edge_name(&self, e: DirEdgeId) -> &str {
        &self.edge_names[e as usize]
    }

    pub fn vertex_id(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn dir_edge_id(&self, name: &str) -> Option<DirEdgeId> {
        self.edge_names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn is_half_loop(&self, e: DirEdgeId) -> bool {
        self.inv[e as usize] == e
    }

    pub fn edge_kind(&self, e: DirEdgeId) -> EdgeKind {
        if self.is_half_loop(e) {
            EdgeKind::HalfLoop
        } else if self.tail(e) == self.head(e) {
            EdgeKind::WholeLoop
        } else {
            EdgeKind::Plain
        }
    }

    /// Degree with the loop conventions: whole-loops count 2, half-loops 1.
    pub fn degree(&self, v: VertexId) -> usize {
        self.out_edges[v as usize].len()
    }

    /// `ord(G) = #E - #V`, counting inv-orbits.
    pub fn order_of(&self) -> i64 {
        self.n_edges() as i64 - self.n_vertices() as i64
    }

    /// `chi(G) = #V - #E^dir / 2`, exactly (half-integers for half-loops).
    pub fn euler_char(&self) -> Rational64 {
        Rational64::new(2 * self.n_vertices() as i64 - self.n_dir_edges() as i64, 2)
    }

    pub fn is_pruned(&self) -> bool {
        (0..self.n_vertices() as u32).all(|v| self.degree(v) >= 2)
    }

    /// Repeatedly removes degree-<=1 vertices and their incident edges.
    pub fn prune(&self) -> Graph {
        let mut alive_v = vec![true; self.n_vertices()];
        let mut alive_e = vec![true; self.n_dir_edges()];
        let mut deg: Vec<usize> = (0..self.n_vertices() as u32)
            .map(|v| self.degree(v))
            .collect();
        let mut queue: Vec<VertexId> = (0..self.n_vertices() as u32)
            .filter(|&v| deg[v as usize] <= 1)
            .collect();
        while let Some(v) = queue.pop() {
            if !alive_v[v as usize] {
                continue;
            }
            alive_v[v as usize] = false;
            for &e in self.out_edges(v) {
                if !alive_e[e as usize] {
                    continue;
                }
                alive_e[e as usize] = false;
                alive_e[self.inv(e) as usize] = false;
                let u = self.head(e);
                if alive_v[u as usize] {
                    // removing orbit {e, inv e}: u loses the dir edges
                    // with tail u in this orbit
                    let lost = if self.is_half_loop(e) {
                        1
                    } else if u == v {
                        0
                    } else {
                        1
                    };
                    if lost > 0 {
                        deg[u as usize] -= lost;
                        if deg[u as usize] <= 1 {
                            queue.push(u);
                        }
                    }
                }
            }
        }
        self.subgraph_from_masks(&alive_v, &alive_e).0
    }

    /// Extracts the subgraph on the given vertex/edge masks. The edge mask
    /// must be inv-closed and consistent with the vertex mask.
    pub fn subgraph_from_masks(
        &self,
        keep_v: &[bool],
        keep_e: &[bool],
    ) -> (Graph, Vec<Option<VertexId>>, Vec<Option<DirEdgeId>>) {
        let mut vmap = vec![None; self.n_vertices()];
        let mut names = Vec::new();
        for v in 0..self.n_vertices() {
            if keep_v[v] {
                vmap[v] = Some(names.len() as u32);
                names.push(self.vertex_names[v].clone());
            }
        }
        let mut emap = vec![None; self.n_dir_edges()];
        let mut next = 0u32;
        for e in 0..self.n_dir_edges() {
            if keep_e[e] {
                emap[e] = Some(next);
                next += 1;
            }
        }
        let mut edges = Vec::new();
        for e in 0..self.n_dir_edges() {
            if let Some(_new) = emap[e] {
                let t = vmap[self.tail[e] as usize].expect("edge endpoint dropped");
                let h = vmap[self.head[e] as usize].expect("edge endpoint dropped");
                let i = emap[self.inv[e] as usize].expect("edge mask not inv-closed");
                edges.push((self.edge_names[e].clone(), t, h, i));
            }
        }
        let g = Graph::new(names, edges).expect("subgraph of a valid graph is valid");
        (g, vmap, emap)
    }

    /// Connected components as vertex labels `0..count`.
    pub fn components(&self) -> (usize, Vec<u32>) {
        let mut comp = vec![u32::MAX; self.n_vertices()];
        let mut count = 0;
        for start in 0..self.n_vertices() as u32 {
            if comp[start as usize] != u32::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start as usize] = count;
            while let Some(v) = stack.pop() {
                for &e in self.out_edges(v) {
                    let u = self.head(e);
                    if comp[u as usize] == u32::MAX {
                        comp[u as usize] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        (count as usize, comp)
    }

    pub fn is_connected(&self) -> bool {
        !self.is_empty() && self.components().0 == 1
    }

    // -- small constructors used throughout the tests and the book --

    /// Cycle with `k >= 1` edges (`k = 1` gives a whole-loop).
    pub fn cycle(k: usize) -> Graph {
        assert!(k >= 1);
        let names = (0..k).map(|i| format!("v{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..k {
            let fwd = 2 * i as u32;
            edges.push((format!("c{i}"), i as u32, ((i + 1) % k) as u32, fwd + 1));
            edges.push((format!("c{i}'"), ((i + 1) % k) as u32, i as u32, fwd));
        }
        Graph::new(names, edges).unwrap()
    }

    /// Bouquet of `m` whole-loops at a single vertex (degree `2m`).
    pub fn bouquet(m: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..m {
            let fwd = 2 * i as u32;
            edges.push((format!("f{i}"), 0, 0, fwd + 1));
            edges.push((format!("f{i}'"), 0, 0, fwd));
        }
        Graph::new(vec!["v".into()], edges).unwrap()
    }

    /// Bouquet of `m` half-loops at a single vertex (degree `m`).
    pub fn half_loop_bouquet(m: usize) -> Graph {
        let edges = (0..m)
            .map(|i| (format!("h{i}"), 0, 0, i as u32))
            .collect();
        Graph::new(vec!["v".into()], edges).unwrap()
    }

    /// Two vertices joined by `m >= 3` parallel edges (`m = 3` is the theta).
    pub fn banana(m: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..m {
            let fwd = 2 * i as u32;
            edges.push((format!("s{i}"), 0, 1, fwd + 1));
            edges.push((format!("s{i}'"), 1, 0, fwd));
        }
        Graph::new(vec!["u".into(), "v".into()], edges).unwrap()
    }

    pub fn theta() -> Graph {
        Graph::banana(3)
    }

    /// Simple path with `k` edges and `k + 1` vertices.
    pub fn path(k: usize) -> Graph {
        let names = (0..=k).map(|i| format!("v{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..k {
            let fwd = 2 * i as u32;
            edges.push((format!("p{i}"), i as u32, (i + 1) as u32, fwd + 1));
            edges.push((format!("p{i}'"), (i + 1) as u32, i as u32, fwd));
        }
        Graph::new(names, edges).unwrap()
    }
}

fn edges_len(inv: &[DirEdgeId]) -> u32 {
    inv.len() as u32
}

/// Orientation plus total orders on vertices and edge orbits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphOrdering {
    /// vertex id -> rank
    pub vertex_rank: Vec<u32>,
    /// orbit id -> rank
    pub edge_rank: Vec<u32>,
    /// dir edge id -> whether it is the oriented representative of its orbit
    pub oriented: Vec<bool>,
}

impl GraphOrdering {
    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.vertex_rank.len() != g.n_vertices()
            || self.edge_rank.len() != g.n_edges()
            || self.oriented.len() != g.n_dir_edges()
        {
            return Err(Error::InvalidInput("ordering size mismatch".into()));
        }
        if !is_permutation(&self.vertex_rank) || !is_permutation(&self.edge_rank) {
            return Err(Error::InvalidInput(
                "ordering ranks are not total orders".into(),
            ));
        }
        for o in 0..g.n_edges() as u32 {
            let rep = g.orbit_rep(o);
            let pair = g.inv(rep);
            let n_oriented = self.oriented[rep as usize] as u32
                + if pair != rep {
                    self.oriented[pair as usize] as u32
                } else {
                    0
                };
            if g.is_half_loop(rep) {
                if !self.oriented[rep as usize] {
                    return Err(Error::InvalidInput(
                        "orientation must contain every half-loop".into(),
                    ));
                }
            } else if n_oriented != 1 {
                return Err(Error::InvalidInput(
                    "orientation must pick exactly one direction per edge".into(),
                ));
            }
        }
        Ok(())
    }

    /// The oriented representative of an orbit.
    pub fn oriented_rep(&self, g: &Graph, o: OrbitId) -> DirEdgeId {
        let rep = g.orbit_rep(o);
        if self.oriented[rep as usize] {
            rep
        } else {
            g.inv(rep)
        }
    }

    /// Vertex with rank 0.
    pub fn first_vertex(&self) -> VertexId {
        self.vertex_rank
            .iter()
            .position(|&r| r == 0)
            .map(|i| i as u32)
            .expect("nonempty ordering")
    }

    /// Orbit with rank `r`.
    pub fn orbit_at_rank(&self, r: u32) -> OrbitId {
        self.edge_rank
            .iter()
            .position(|&x| x == r)
            .map(|i| i as u32)
            .expect("rank in range")
    }
}

fn is_permutation(ranks: &[u32]) -> bool {
    let mut seen = vec![false; ranks.len()];
    for &r in ranks {
        if r as usize >= ranks.len() || seen[r as usize] {
            return false;
        }
        seen[r as usize] = true;
    }
    true
}

/// Graph together with an ordering (an "ordered graph").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedGraph {
    pub graph: Graph,
    pub ordering: GraphOrdering,
}

impl OrderedGraph {
    pub fn new(graph: Graph, ordering: GraphOrdering) -> Result<OrderedGraph> {
        ordering.validate(&graph)?;
        Ok(OrderedGraph { graph, ordering })
    }

    /// Identity ordering: ranks by id, orientation by lowest dir-edge id.
    pub fn with_identity_order(graph: Graph) -> OrderedGraph {
        let vertex_rank = (0..graph.n_vertices() as u32).collect();
        let edge_rank = (0..graph.n_edges() as u32).collect();
        let mut oriented = vec![false; graph.n_dir_edges()];
        for o in 0..graph.n_edges() as u32 {
            oriented[graph.orbit_rep(o) as usize] = true;
        }
        OrderedGraph {
            graph,
            ordering: GraphOrdering {
                vertex_rank,
                edge_rank,
                oriented,
            },
        }
    }

    /// Canonical structural encoding; two ordered graphs are isomorphic as
    /// ordered graphs iff their encodings are equal. Optional directed-edge
    /// labels (e.g. a `B`-structure) are folded into the encoding.
    pub fn canonical_code(&self, labels: Option<&[u32]>) -> CanonicalCode {
        let g = &self.graph;
        let ord = &self.ordering;
        let mut orbits: Vec<OrbitId> = (0..g.n_edges() as u32).collect();
        orbits.sort_by_key(|&o| ord.edge_rank[o as usize]);
        let mut rows = Vec::with_capacity(orbits.len());
        for o in orbits {
            let rep = ord.oriented_rep(g, o);
            let lab = labels.map(|l| (l[rep as usize], l[g.inv(rep) as usize]));
            rows.push((
                ord.vertex_rank[g.tail(rep) as usize],
                ord.vertex_rank[g.head(rep) as usize],
                g.is_half_loop(rep),
                lab,
            ));
        }
        CanonicalCode {
            n_vertices: g.n_vertices() as u32,
            rows,
        }
    }
}

/// Comparable canonical form of an ordered (possibly labeled) graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCode {
    pub n_vertices: u32,
    pub rows: Vec<(u32, u32, bool, Option<(u32, u32)>)>,
}

/// The unique order-respecting isomorphism between two ordered graphs, if
/// one exists: maps of vertices and directed edges from `a` into `b`.
pub fn ordered_iso(
    a: &OrderedGraph,
    b: &OrderedGraph,
    labels: Option<(&[u32], &[u32])>,
) -> Option<(Vec<VertexId>, Vec<DirEdgeId>)> {
    let (la, lb) = match labels {
        Some((x, y)) => (Some(x), Some(y)),
        None => (None, None),
    };
    if a.canonical_code(la) != b.canonical_code(lb) {
        return None;
    }
    // ranks line up, so the iso sends rank to rank
    let mut b_vertex_at_rank = vec![0u32; b.graph.n_vertices()];
    for v in 0..b.graph.n_vertices() {
        b_vertex_at_rank[b.ordering.vertex_rank[v] as usize] = v as u32;
    }
    let mut b_orbit_at_rank = vec![0u32; b.graph.n_edges()];
    for o in 0..b.graph.n_edges() {
        b_orbit_at_rank[b.ordering.edge_rank[o] as usize] = o as u32;
    }
    let vmap: Vec<VertexId> = (0..a.graph.n_vertices())
        .map(|v| b_vertex_at_rank[a.ordering.vertex_rank[v] as usize])
        .collect();
    let mut emap = vec![0u32; a.graph.n_dir_edges()];
    for o in 0..a.graph.n_edges() as u32 {
        let ar = a.ordering.oriented_rep(&a.graph, o);
        let br =
            b.ordering
                .oriented_rep(&b.graph, b_orbit_at_rank[a.ordering.edge_rank[o as usize] as usize]);
        emap[ar as usize] = br;
        emap[a.graph.inv(ar) as usize] = b.graph.inv(br);
    }
    Some((vmap, emap))
}

/// Component maps of a graph morphism (vertex map and directed-edge map).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphismData {
    pub vmap: Vec<VertexId>,
    pub emap: Vec<DirEdgeId>,
}

impl MorphismData {
    pub fn identity(g: &Graph) -> MorphismData {
        MorphismData {
            vmap: (0..g.n_vertices() as u32).collect(),
            emap: (0..g.n_dir_edges() as u32).collect(),
        }
    }

    /// Checks that (vmap, emap) intertwines heads, tails, and involutions.
    pub fn validate(&self, src: &Graph, dst: &Graph) -> Result<()> {
        if self.vmap.len() != src.n_vertices() || self.emap.len() != src.n_dir_edges() {
            return Err(Error::InvalidInput("morphism size mismatch".into()));
        }
        for &v in &self.vmap {
            if v as usize >= dst.n_vertices() {
                return Err(Error::InvalidInput("morphism vertex out of range".into()));
            }
        }
        for e in 0..src.n_dir_edges() as u32 {
            let fe = self.emap[e as usize];
            if fe as usize >= dst.n_dir_edges() {
                return Err(Error::InvalidInput("morphism edge out of range".into()));
            }
            if dst.tail(fe) != self.vmap[src.tail(e) as usize]
                || dst.head(fe) != self.vmap[src.head(e) as usize]
            {
                return Err(Error::InvalidInput(format!(
                    "morphism does not intertwine endpoints at edge {}",
                    src.edge_name(e)
                )));
            }
            if dst.inv(fe) != self.emap[src.inv(e) as usize] {
                return Err(Error::InvalidInput(format!(
                    "morphism does not intertwine involutions at edge {}",
                    src.edge_name(e)
                )));
            }
        }
        Ok(())
    }
}

/// Is the morphism etale (locally injective) / covering (locally bijective)?
///
/// At every vertex `v` of the source, the map must send the directed edges
/// with tail `v` injectively (resp. bijectively) into those with tail
/// `pi(v)`; the head condition follows via the involution.
pub fn local_fibre_kind(src: &Graph, dst: &Graph, m: &MorphismData) -> (bool, bool) {
    let mut etale = true;
    let mut covering = true;
    for v in 0..src.n_vertices() as u32 {
        let image = m.vmap[v as usize];
        let mut seen: BTreeMap<DirEdgeId, usize> = BTreeMap::new();
        for &e in src.out_edges(v) {
            *seen.entry(m.emap[e as usize]).or_insert(0) += 1;
        }
        if seen.values().any(|&c| c > 1) {
            etale = false;
            covering = false;
        }
        if seen.len() != dst.out_edges(image).len() {
            covering = false;
        }
    }
    if src.n_vertices() == 0 && dst.n_vertices() > 0 {
        covering = false;
    }
    (etale, covering)
}

pub fn is_etale(src: &Graph, dst: &Graph, m: &MorphismData) -> bool {
    local_fibre_kind(src, dst, m).0
}

pub fn is_covering(src: &Graph, dst: &Graph, m: &MorphismData) -> bool {
    local_fibre_kind(src, dst, m).1
}

/// Fibre counting functions of a `B`-graph `pi: S -> B`:
/// `a(e) = #preimages of each directed edge`, `b(v) = #preimages of each
/// vertex`. `a` is constant on inv-orbits.
pub fn fibre_counts(s: &Graph, b: &Graph, m: &MorphismData) -> (Vec<u64>, Vec<u64>) {
    let mut a = vec![0u64; b.n_dir_edges()];
    let mut bv = vec![0u64; b.n_vertices()];
    for e in 0..s.n_dir_edges() {
        a[m.emap[e] as usize] += 1;
    }
    for v in 0..s.n_vertices() {
        bv[m.vmap[v] as usize] += 1;
    }
    (a, bv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_loop_and_whole_loop_classification() {
        let half = Graph::half_loop_bouquet(1);
        assert_eq!(half.n_edges(), 1);
        assert_eq!(half.edge_kind(0), EdgeKind::HalfLoop);
        assert_eq!(half.degree(0), 1);

        let whole = Graph::bouquet(1);
        assert_eq!(whole.n_edges(), 1);
        assert_eq!(whole.edge_kind(0), EdgeKind::WholeLoop);
        assert_eq!(whole.degree(0), 2);
    }

    #[test]
    fn non_involutive_inv_rejected() {
        // inv(e) = f, inv(f) = g
        let r = Graph::new(
            vec!["v".into()],
            vec![
                ("e".into(), 0, 0, 1),
                ("f".into(), 0, 0, 2),
                ("g".into(), 0, 0, 0),
            ],
        );
        assert!(r.is_err());
    }

    #[test]
    fn order_and_euler() {
        assert_eq!(Graph::half_loop_bouquet(1).order_of(), 0);
        assert_eq!(Graph::bouquet(2).order_of(), 1);
        assert_eq!(Graph::theta().order_of(), 1);

        assert_eq!(
            Graph::half_loop_bouquet(1).euler_char(),
            Rational64::new(1, 2)
        );
        assert_eq!(Graph::cycle(3).euler_char(), Rational64::new(0, 1));
        assert_eq!(Graph::bouquet(2).euler_char(), Rational64::new(-1, 1));
    }

    #[test]
    fn ord_ge_minus_chi_with_half_loop_equality() {
        for g in [
            Graph::cycle(4),
            Graph::bouquet(3),
            Graph::theta(),
            Graph::half_loop_bouquet(3),
            Graph::path(2),
        ] {
            let ord = Rational64::from_integer(g.order_of());
            assert!(ord >= -g.euler_char());
            let has_half = (0..g.n_dir_edges() as u32).any(|e| g.is_half_loop(e));
            assert_eq!(ord == -g.euler_char(), !has_half);
        }
    }

    #[test]
    fn prune_examples() {
        let path = Graph::path(2);
        assert!(!path.is_pruned());
        assert!(path.prune().is_empty());

        let cycle = Graph::cycle(4);
        assert!(cycle.is_pruned());
        assert_eq!(cycle.prune(), cycle);

        // cycle with one pendant edge
        let mut edges = Vec::new();
        for i in 0..3 {
            let fwd = 2 * i as u32;
            edges.push((format!("c{i}"), i as u32, ((i + 1) % 3) as u32, fwd + 1));
            edges.push((format!("c{i}'"), ((i + 1) % 3) as u32, i as u32, fwd));
        }
        edges.push(("p".into(), 0, 3, 7));
        edges.push(("p'".into(), 3, 0, 6));
        let g = Graph::new(
            vec!["a".into(), "b".into(), "c".into(), "leaf".into()],
            edges,
        )
        .unwrap();
        let pruned = g.prune();
        assert_eq!(pruned.n_vertices(), 3);
        assert_eq!(pruned.n_edges(), 3);
        assert!(pruned.is_pruned());
    }

    #[test]
    fn identity_is_covering() {
        let g = Graph::theta();
        let m = MorphismData::identity(&g);
        assert!(m.validate(&g, &g).is_ok());
        assert!(is_covering(&g, &g, &m));
        assert!(is_etale(&g, &g, &m));
    }

    #[test]
    fn cycle_into_bouquet_is_etale_not_covering() {
        // cycle of length 2 mapping onto a bouquet of 2 whole-loops:
        // both cycle edges over loop f0, traversed forward
        let c = Graph::cycle(2);
        let b = Graph::bouquet(2);
        // c edges: c0: 0->1 (id 0), c0':1->0 (id 1), c1: 1->0 (id 2), c1':0->1 (id 3)
        // send c0 -> f0, c1 -> f0, so c0' -> f0', c1' -> f0'
        let f0 = b.dir_edge_id("f0").unwrap();
        let f0p = b.dir_edge_id("f0'").unwrap();
        let m = MorphismData {
            vmap: vec![0, 0],
            emap: vec![f0, f0p, f0, f0p],
        };
        m.validate(&c, &b).unwrap();
        assert!(is_etale(&c, &b, &m));
        assert!(!is_covering(&c, &b, &m));
    }

    #[test]
    fn ordered_iso_of_rotated_cycles() {
        use crate::walks;
        // two walks around a 3-cycle starting at different vertices give
        // isomorphic ordered visited subgraphs (the unique rotation)
        let g = Graph::cycle(3);
        let w1 = walks::Walk::from_edges(&g, vec![0, 2, 4]).unwrap();
        let w2 = walks::Walk::from_edges(&g, vec![2, 4, 0]).unwrap();
        let s1 = walks::visited_subgraph_ordered(&g, &w1, None).unwrap();
        let s2 = walks::visited_subgraph_ordered(&g, &w2, None).unwrap();
        let iso = ordered_iso(&s1.ordered, &s2.ordered, None);
        assert!(iso.is_some());
        // same subgraph, different orderings: not the identity on G
        assert_ne!(s1.vertex_in_host, s2.vertex_in_host);
    }

    #[test]
    fn ordered_iso_rejects_different_lengths() {
        let a = OrderedGraph::with_identity_order(Graph::cycle(3));
        let b = OrderedGraph::with_identity_order(Graph::cycle(4));
        assert!(ordered_iso(&a, &b, None).is_none());
    }

    #[test]
    fn fibre_counts_cycle_over_loop() {
        let b = Graph::bouquet(1);
        let s = Graph::cycle(4);
        // map every forward cycle edge to f0
        let f0 = b.dir_edge_id("f0").unwrap();
        let f0p = b.dir_edge_id("f0'").unwrap();
        let mut emap = vec![0u32; s.n_dir_edges()];
        for e in 0..s.n_dir_edges() as u32 {
            // forward edges have odd-even layout from Graph::cycle: even ids forward
            emap[e as usize] = if e % 2 == 0 { f0 } else { f0p };
        }
        let m = MorphismData {
            vmap: vec![0; 4],
            emap,
        };
        m.validate(&s, &b).unwrap();
        let (a, bv) = fibre_counts(&s, &b, &m);
        assert_eq!(a, vec![4, 4]);
        assert_eq!(bv, vec![4]);
    }
}
