//! Causal graph view of a fitted SVAR-LiNGAM model and Graphviz export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapSummary;
use crate::svar::SvarLingamModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    /// 0 for contemporaneous edges.
    pub lag: usize,
    pub weight: f64,
    pub significant: bool,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalGraph {
    /// Node names in causal order.
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
}

impl CausalGraph {
    pub fn contemporaneous(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.lag == 0)
    }

    pub fn significant(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.significant)
    }
}

/// Builds the graph from B₀..B_p. Entry (i, j) of B_h is the edge j → i at
/// lag h. Without a bootstrap summary every edge counts as significant.
pub fn to_causal_graph(model: &SvarLingamModel, summary: Option<&BootstrapSummary>, level: f64) -> CausalGraph {
    let n = model.nvars();
    let nodes: Vec<String> = model.order.iter().map(|&i| model.names[i].clone()).collect();
    let mut pos = vec![0usize; n];
    for (k, &v) in model.order.iter().enumerate() {
        pos[v] = k;
    }
    let mut edges = Vec::new();
    for (lag, bh) in model.b.iter().enumerate() {
        let mut cells: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| bh[(i, j)] != 0.0 && !(lag == 0 && i == j))
            .collect();
        cells.sort_by_key(|&(i, j)| (pos[i], pos[j]));
        for (i, j) in cells {
            let coef = summary.and_then(|s| s.get(lag, i, j));
            edges.push(Edge {
                from: model.names[j].clone(),
                to: model.names[i].clone(),
                lag,
                weight: bh[(i, j)],
                significant: coef.is_none_or(|c| c.significant_at(level)),
                stars: coef.map(|c| c.stars.clone()).unwrap_or_default(),
            });
        }
    }
    CausalGraph { nodes, edges }
}

fn dot_id(name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

/// Graphviz DOT text. Contemporaneous edges are labelled with their weight,
/// lagged edges with "t-h" and the weight; insignificant edges are dashed.
pub fn export_dot(graph: &CausalGraph, include_lagged: bool) -> String {
    let mut out = String::from("digraph svar_lingam {\n");
    for node in &graph.nodes {
        let _ = writeln!(out, "  {};", dot_id(node));
    }
    for e in &graph.edges {
        if e.lag > 0 && !include_lagged {
            continue;
        }
        let label = if e.lag == 0 {
            format!("{:.2}{}", e.weight, e.stars)
        } else {
            format!("t-{} {:.2}{}", e.lag, e.weight, e.stars)
        };
        let style = if e.significant { "" } else { ", style=dashed" };
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}\"{}];",
            dot_id(&e.from),
            dot_id(&e.to),
            label,
            style
        );
    }
    out.push_str("}\n");
    out
}
