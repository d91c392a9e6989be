// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::{Relation, Srg};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("graph has no nodes")]
    EmptyGraph,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RelationRatios {
    pub control: f64,
    pub data: f64,
    pub effect: f64,
}

impl RelationRatios {
    fn from_counts(counts: [usize; 3]) -> Self {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Self::default();
        }
        let r = |i: usize| counts[i] as f64 / total as f64;
        RelationRatios { control: r(0), data: r(1), effect: r(2) }
    }

    pub fn get(&self, rel: Relation) -> f64 {
        match rel {
            Relation::Control => self.control,
            Relation::Data => self.data,
            Relation::Effect => self.effect,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub graphs: usize,
    pub nodes: usize,
    pub edges: usize,
    pub opcode_ratios: BTreeMap<String, f64>,
    pub relation_ratios: RelationRatios,
    pub avg_path_length: f64,
}

impl GraphStats {
    pub fn top_opcodes(&self, n: usize) -> Vec<(String, f64)> {
        top_opcodes(&self.opcode_ratios, n)
    }
}

/// Highest-ratio opcodes, ties broken by name.
pub fn top_opcodes(ratios: &BTreeMap<String, f64>, n: usize) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = ratios.iter().map(|(k, v)| (k.clone(), *v)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(n);
    v
}

fn opcode_counts<'a>(graphs: impl Iterator<Item = &'a Srg>) -> (BTreeMap<String, usize>, usize) {
    let mut counts = BTreeMap::new();
    let mut total = 0;
    for g in graphs {
        for n in &g.nodes {
            *counts.entry(n.op.clone()).or_insert(0) += 1;
            total += 1;
        }
    }
    (counts, total)
}

fn relation_counts<'a>(graphs: impl Iterator<Item = &'a Srg>) -> [usize; 3] {
    let mut c = [0usize; 3];
    for g in graphs {
        for e in &g.edges {
            c[e.relation.index()] += 1;
        }
    }
    c
}

fn largest_component(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut comp = vec![usize::MAX; n];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        comp[start] = start;
        let mut i = 0;
        while i < members.len() {
            let u = members[i];
            i += 1;
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = start;
                    members.push(v);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best
}

/// Mean undirected shortest-path length over node pairs of the largest
/// weakly connected component. Zero when that component has one node.
pub fn average_path_length(g: &Srg) -> f64 {
    let n = g.nodes.len();
    let mut adj = vec![Vec::new(); n];
    for e in &g.edges {
        if e.src != e.dst {
            adj[e.src].push(e.dst);
            adj[e.dst].push(e.src);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let comp = largest_component(n, &adj);
    let k = comp.len();
    if k < 2 {
        return 0.0;
    }
    let total: u64 = comp
        .par_iter()
        .map(|&src| {
            let mut dist = vec![u32::MAX; n];
            let mut q = VecDeque::from([src]);
            dist[src] = 0;
            let mut sum = 0u64;
            while let Some(u) = q.pop_front() {
                sum += dist[u] as u64;
                for &v in &adj[u] {
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            sum
        })
        .sum();
    // every unordered pair was counted from both ends
    total as f64 / (k as f64 * (k as f64 - 1.0))
}

/// Opcode frequencies, relation ratios and average path length of one graph.
pub fn graph_stats(g: &Srg) -> Result<GraphStats, StatsError> {
    if g.nodes.is_empty() {
        return Err(StatsError::EmptyGraph);
    }
    let (counts, total) = opcode_counts(std::iter::once(g));
    Ok(GraphStats {
        graphs: 1,
        nodes: g.nodes.len(),
        edges: g.edges.len(),
        opcode_ratios: counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect(),
        relation_ratios: RelationRatios::from_counts(relation_counts(std::iter::once(g))),
        avg_path_length: average_path_length(g),
    })
}

/// Pooled statistics over several graphs: opcode and relation ratios over
/// all nodes/edges, path length averaged per graph. Empty graphs are skipped.
pub fn aggregate_stats(graphs: &[&Srg]) -> Result<GraphStats, StatsError> {
    let graphs: Vec<&Srg> = graphs.iter().copied().filter(|g| !g.nodes.is_empty()).collect();
    if graphs.is_empty() {
        return Err(StatsError::EmptyGraph);
    }
    let (counts, total) = opcode_counts(graphs.iter().copied());
    let apl: f64 = graphs.par_iter().map(|g| average_path_length(g)).sum::<f64>() / graphs.len() as f64;
    Ok(GraphStats {
        graphs: graphs.len(),
        nodes: graphs.iter().map(|g| g.nodes.len()).sum(),
        edges: graphs.iter().map(|g| g.edges.len()).sum(),
        opcode_ratios: counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect(),
        relation_ratios: RelationRatios::from_counts(relation_counts(graphs.iter().copied())),
        avg_path_length: apl,
    })
}
