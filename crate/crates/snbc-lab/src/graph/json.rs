//! JSON graph format:
//!
//! ```json
//! {"vertices": ["u", "v"],
//!  "dir_edges": [{"id": "a", "tail": "u", "head": "v", "inv": "a'"}, ...],
//!  "b_labels": {"a": "f0", ...},
//!  "ordering": {"orientation": ["a"], "vertex_order": ["u", "v"],
//!               "edge_order": ["a"]}}
//! ```
//!
//! A half-loop is encoded by `inv == id`. `b_labels` maps directed edges to
//! directed-edge ids of a base graph supplied separately.

use super::{Graph, GraphOrdering, MorphismData, OrderedGraph};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DirEdgeJson {
    id: String,
    tail: String,
    head: String,
    inv: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OrderingJson {
    orientation: Vec<String>,
    vertex_order: Vec<String>,
    edge_order: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<String>,
    dir_edges: Vec<DirEdgeJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_labels: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ordering: Option<OrderingJson>,
}

/// A parsed graph file. `b_labels` stays symbolic until bound to a base.
#[derive(Debug, Clone)]
pub struct ParsedGraph {
    pub graph: Graph,
    pub ordering: Option<GraphOrdering>,
    pub b_labels: Option<BTreeMap<String, String>>,
}

impl ParsedGraph {
    pub fn ordered(&self) -> Result<OrderedGraph> {
        let ordering = self
            .ordering
            .clone()
            .ok_or_else(|| Error::InvalidInput("graph file has no ordering".into()))?;
        OrderedGraph::new(self.graph.clone(), ordering)
    }

    /// Resolves symbolic `b_labels` against a base graph, returning the
    /// structure morphism. The vertex map is derived from edge labels.
    pub fn bind_base(&self, base: &Graph) -> Result<MorphismData> {
        let labels = self
            .b_labels
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("graph file has no b_labels".into()))?;
        let g = &self.graph;
        let mut emap = vec![u32::MAX; g.n_dir_edges()];
        for (edge, blabel) in labels {
            let e = g
                .dir_edge_id(edge)
                .ok_or_else(|| Error::InvalidInput(format!("b_labels: unknown edge {edge}")))?;
            let be = base.dir_edge_id(blabel).ok_or_else(|| {
                Error::InvalidInput(format!("b_labels: unknown base edge {blabel}"))
            })?;
            emap[e as usize] = be;
        }
        if emap.iter().any(|&x| x == u32::MAX) {
            return Err(Error::InvalidInput(
                "b_labels must cover every directed edge".into(),
            ));
        }
        let mut vmap = vec![u32::MAX; g.n_vertices()];
        for e in 0..g.n_dir_edges() as u32 {
            let t = g.tail(e);
            let bt = base.tail(emap[e as usize]);
            if vmap[t as usize] == u32::MAX {
                vmap[t as usize] = bt;
            } else if vmap[t as usize] != bt {
                return Err(Error::InvalidInput(format!(
                    "b_labels inconsistent at vertex {}",
                    g.vertex_name(t)
                )));
            }
        }
        if vmap.iter().any(|&x| x == u32::MAX) {
            return Err(Error::InvalidInput(
                "isolated vertices cannot be bound to the base".into(),
            ));
        }
        let m = MorphismData { vmap, emap };
        m.validate(g, base)?;
        Ok(m)
    }
}

pub fn graph_from_json(text: &str) -> Result<ParsedGraph> {
    let parsed: GraphJson = serde_json::from_str(text)?;
    let vertex_id = |name: &str| -> Result<u32> {
        parsed
            .vertices
            .iter()
            .position(|v| v == name)
            .map(|i| i as u32)
            .ok_or_else(|| Error::InvalidGraph(format!("unknown vertex {name}")))
    };
    let edge_id = |name: &str| -> Result<u32> {
        parsed
            .dir_edges
            .iter()
            .position(|e| e.id == name)
            .map(|i| i as u32)
            .ok_or_else(|| Error::InvalidGraph(format!("unknown edge {name}")))
    };
    {
        let mut seen = std::collections::HashSet::new();
        for v in &parsed.vertices {
            if !seen.insert(v) {
                return Err(Error::InvalidGraph(format!("duplicate vertex id {v}")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for e in &parsed.dir_edges {
            if !seen.insert(&e.id) {
                return Err(Error::InvalidGraph(format!("duplicate edge id {}", e.id)));
            }
        }
    }
    let mut edges = Vec::new();
    for e in &parsed.dir_edges {
        edges.push((e.id.clone(), vertex_id(&e.tail)?, vertex_id(&e.head)?, edge_id(&e.inv)?));
    }
    let graph = Graph::new(parsed.vertices.clone(), edges)?;
    let ordering = match &parsed.ordering {
        None => None,
        Some(o) => {
            if o.vertex_order.len() != graph.n_vertices() {
                return Err(Error::InvalidInput("vertex_order size mismatch".into()));
            }
            if o.edge_order.len() != graph.n_edges() {
                return Err(Error::InvalidInput("edge_order size mismatch".into()));
            }
            let mut vertex_rank = vec![u32::MAX; graph.n_vertices()];
            for (rank, name) in o.vertex_order.iter().enumerate() {
                vertex_rank[vertex_id(name)? as usize] = rank as u32;
            }
            let mut edge_rank = vec![u32::MAX; graph.n_edges()];
            for (rank, name) in o.edge_order.iter().enumerate() {
                let orbit = graph.orbit(edge_id(name)?);
                if edge_rank[orbit as usize] != u32::MAX {
                    return Err(Error::InvalidInput(
                        "edge_order names an orbit twice".into(),
                    ));
                }
                edge_rank[orbit as usize] = rank as u32;
            }
            let mut oriented = vec![false; graph.n_dir_edges()];
            for name in &o.orientation {
                oriented[edge_id(name)? as usize] = true;
            }
            let ordering = GraphOrdering {
                vertex_rank,
                edge_rank,
                oriented,
            };
            ordering.validate(&graph)?;
            Some(ordering)
        }
    };
    Ok(ParsedGraph {
        graph,
        ordering,
        b_labels: parsed.b_labels,
    })
}

pub fn graph_to_json(
    graph: &Graph,
    ordering: Option<&GraphOrdering>,
    b_labels: Option<&BTreeMap<String, String>>,
) -> String {
    let dir_edges = (0..graph.n_dir_edges() as u32)
        .map(|e| DirEdgeJson {
            id: graph.edge_name(e).to_string(),
            tail: graph.vertex_name(graph.tail(e)).to_string(),
            head: graph.vertex_name(graph.head(e)).to_string(),
            inv: graph.edge_name(graph.inv(e)).to_string(),
        })
        .collect();
    let ordering_json = ordering.map(|o| {
        let mut vertex_order = vec![String::new(); graph.n_vertices()];
        for v in 0..graph.n_vertices() as u32 {
            vertex_order[o.vertex_rank[v as usize] as usize] =
                graph.vertex_name(v).to_string();
        }
        let mut edge_order = vec![String::new(); graph.n_edges()];
        for orbit in 0..graph.n_edges() as u32 {
            edge_order[o.edge_rank[orbit as usize] as usize] =
                graph.edge_name(o.oriented_rep(graph, orbit)).to_string();
        }
        let orientation = (0..graph.n_dir_edges() as u32)
            .filter(|&e| o.oriented[e as usize])
            .map(|e| graph.edge_name(e).to_string())
            .collect();
        OrderingJson {
            orientation,
            vertex_order,
            edge_order,
        }
    });
    let json = GraphJson {
        vertices: (0..graph.n_vertices() as u32)
            .map(|v| graph.vertex_name(v).to_string())
            .collect(),
        dir_edges,
        b_labels: b_labels.cloned(),
        ordering: ordering_json,
    };
    serde_json::to_string_pretty(&json).expect("graph json serializes")
}

/// Morphism edge labels rendered back to symbolic names.
pub(crate) fn labels_to_names(
    graph: &Graph,
    base: &Graph,
    m: &MorphismData,
) -> BTreeMap<String, String> {
    (0..graph.n_dir_edges() as u32)
        .map(|e| {
            (
                graph.edge_name(e).to_string(),
                base.edge_name(m.emap[e as usize]).to_string(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_ordering() {
        let g = Graph::theta();
        let og = OrderedGraph::with_identity_order(g);
        let text = graph_to_json(&og.graph, Some(&og.ordering), None);
        let parsed = graph_from_json(&text).unwrap();
        assert_eq!(parsed.graph, og.graph);
        assert_eq!(parsed.ordering.unwrap(), og.ordering);
    }

    #[test]
    fn half_loop_round_trip() {
        let g = Graph::half_loop_bouquet(2);
        let text = graph_to_json(&g, None, None);
        let parsed = graph_from_json(&text).unwrap();
        assert_eq!(parsed.graph, g);
        assert!(parsed.graph.is_half_loop(0));
    }

    #[test]
    fn bind_base_derives_vertex_map() {
        let b = Graph::theta();
        let text = r#"{
            "vertices": ["x0", "x1"],
            "dir_edges": [
                {"id": "e", "tail": "x0", "head": "x1", "inv": "e'"},
                {"id": "e'", "tail": "x1", "head": "x0", "inv": "e"}
            ],
            "b_labels": {"e": "s0", "e'": "s0'"}
        }"#;
        let parsed = graph_from_json(text).unwrap();
        let m = parsed.bind_base(&b).unwrap();
        assert_eq!(m.vmap, vec![0, 1]);
    }
}
