//! Contacts graph of a tiling and the derived map of a planar map.
//!
//! The contacts graph has one vertex per non-degenerate square and an edge
//! whenever two closed squares intersect (corner touches count). The
//! derived map subdivides every edge once and joins a new vertex inside
//! each face to the surrounding subdivision vertices; every subdivision
//! vertex has degree four, and a map and its dual share the same derived
//! map. Squares adjacent in the contacts graph always correspond to edges
//! within distance two in the derived map.

use crate::combmap::{faces, CombinatorialMap, EdgeId, RootedMap, VertexId};
use crate::squaring::Squaring;
use crate::EPS_CONTACT;
use num_traits::Zero;
use serde::Serialize;
use std::collections::HashMap;

/// Square adjacency graph; vertex i stands for the square of
/// `square_edges[i]`.
#[derive(Debug, Clone, Serialize)]
pub struct ContactsGraph {
    pub square_edges: Vec<EdgeId>,
    pub adjacency: Vec<Vec<usize>>,
}

impl ContactsGraph {
    pub fn vertex_count(&self) -> usize {
        self.square_edges.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        let mut cnt = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    cnt += 1;
                    stack.push(w);
                }
            }
        }
        cnt == n
    }
}

/// Closed-square intersection graph over the non-degenerate squares.
/// Exact when the squaring carries exact coordinates, otherwise within a
/// coincidence tolerance. Degenerate squares are points of the boundary,
/// not members of the packing, and are excluded.
pub fn contacts_graph(s: &Squaring) -> ContactsGraph {
    match &s.exact {
        Some(e) => {
            let idx: Vec<usize> = (0..e.squares.len())
                .filter(|&i| !e.squares[i].side.is_zero())
                .collect();
            let k = idx.len();
            let mut adjacency = vec![Vec::new(); k];
            for a in 0..k {
                for b in a + 1..k {
                    let qa = &e.squares[idx[a]];
                    let qb = &e.squares[idx[b]];
                    let sep_x = (&qa.x + &qa.side) < qb.x || (&qb.x + &qb.side) < qa.x;
                    let sep_y = qa.y < (&qb.y - &qb.side) || qb.y < (&qa.y - &qa.side);
                    if !(sep_x || sep_y) {
                        adjacency[a].push(b);
                        adjacency[b].push(a);
                    }
                }
            }
            ContactsGraph {
                square_edges: idx.iter().map(|&i| e.squares[i].edge).collect(),
                adjacency,
            }
        }
        None => {
            let idx: Vec<usize> = (0..s.squares.len()).filter(|&i| !s.is_degenerate(i)).collect();
            let k = idx.len();
            let mut adjacency = vec![Vec::new(); k];
            for a in 0..k {
                for b in a + 1..k {
                    let qa = &s.squares[idx[a]];
                    let qb = &s.squares[idx[b]];
                    let sep_x =
                        qa.x + qa.side < qb.x - EPS_CONTACT || qb.x + qb.side < qa.x - EPS_CONTACT;
                    let sep_y =
                        qa.y < qb.y - qb.side - EPS_CONTACT || qb.y < qa.y - qa.side - EPS_CONTACT;
                    if !(sep_x || sep_y) {
                        adjacency[a].push(b);
                        adjacency[b].push(a);
                    }
                }
            }
            ContactsGraph {
                square_edges: idx.iter().map(|&i| s.squares[i].edge).collect(),
                adjacency,
            }
        }
    }
}

/// Derived map: primal vertices, one subdivision vertex per edge, one
/// vertex per face joined to the incident subdivision vertices.
#[derive(Debug, Clone)]
pub struct DerivedMap {
    pub map: CombinatorialMap,
    /// Derived-map vertex standing for each edge of the source map.
    pub subdivision_vertex: Vec<VertexId>,
    /// Derived-map vertex standing for each vertex of the source map.
    pub primal_vertex: Vec<VertexId>,
    /// Derived-map vertex standing for each face of the source map.
    pub facial_vertex: Vec<VertexId>,
}

pub fn derived_map(g: &RootedMap) -> DerivedMap {
    let m = &g.map;
    let n = m.dart_count();
    let fi = faces(m);
    // darts: d < n          half-edge from tail(d) toward the midpoint
    //        n + d          back from the midpoint
    //        2n + d         spoke from the midpoint of d into the face
    //                       left of d
    //        3n + d         spoke back from the face vertex
    let mut twin = vec![0; 4 * n];
    let mut next = vec![0; 4 * n];
    for d in 0..n {
        twin[d] = n + d;
        twin[n + d] = d;
        twin[2 * n + d] = 3 * n + d;
        twin[3 * n + d] = 2 * n + d;
        next[d] = m.next(d);
        // around the midpoint of {d, twin d}: back toward head, spoke into
        // the left face of twin, back toward tail, spoke into the left
        // face of d — counterclockwise
        next[n + m.twin(d)] = 2 * n + d;
        next[2 * n + d] = n + d;
        next[3 * n + d] = 3 * n + m.face_next(d);
    }
    let map = CombinatorialMap::from_permutations(twin, next)
        .expect("derived map of a sphere map is a sphere map");
    let mut subdivision_vertex = vec![0; m.edge_count()];
    let mut primal_vertex = vec![0; m.vertex_count()];
    let mut facial_vertex = vec![0; fi.face_count()];
    for d in 0..n {
        primal_vertex[m.tail(d)] = map.tail(d);
        subdivision_vertex[m.edge_of(d)] = map.tail(n + d);
        facial_vertex[fi.face_of[d]] = map.tail(3 * n + d);
    }
    DerivedMap {
        map,
        subdivision_vertex,
        primal_vertex,
        facial_vertex,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContactsDistanceReport {
    pub checked: usize,
    pub violations: Vec<(EdgeId, EdgeId)>,
    pub pass: bool,
}

/// Check that every contacts-graph adjacency joins squares whose edges are
/// within graph distance two in the derived map.
pub fn check_contacts_distance_two(r: &ContactsGraph, d: &DerivedMap) -> ContactsDistanceReport {
    let nv = d.map.vertex_count();
    let mut adj = vec![Vec::new(); nv];
    for dart in 0..d.map.dart_count() {
        adj[d.map.tail(dart)].push(d.map.head(dart));
    }
    let mut checked = 0;
    let mut violations = Vec::new();
    for i in 0..r.vertex_count() {
        for &j in &r.adjacency[i] {
            if j <= i {
                continue;
            }
            checked += 1;
            let a = d.subdivision_vertex[r.square_edges[i]];
            let b = d.subdivision_vertex[r.square_edges[j]];
            let within_two = a == b
                || adj[a].contains(&b)
                || adj[a].iter().any(|&x| adj[x].contains(&b));
            if !within_two {
                violations.push((r.square_edges[i], r.square_edges[j]));
            }
        }
    }
    ContactsDistanceReport {
        checked,
        pass: violations.is_empty(),
        violations,
    }
}

/// Number of points where exactly four squares meet. Corner coordinates
/// are matched exactly in rational mode and on a fine grid otherwise.
pub fn four_corner_count(s: &Squaring) -> usize {
    match &s.exact {
        Some(e) => {
            let mut at: HashMap<(num_rational::BigRational, num_rational::BigRational), usize> =
                HashMap::new();
            for q in &e.squares {
                if q.side.is_zero() {
                    continue;
                }
                let x1 = &q.x + &q.side;
                let y1 = &q.y - &q.side;
                for key in [
                    (q.x.clone(), q.y.clone()),
                    (x1.clone(), q.y.clone()),
                    (q.x.clone(), y1.clone()),
                    (x1, y1),
                ] {
                    *at.entry(key).or_default() += 1;
                }
            }
            at.values().filter(|&&c| c == 4).count()
        }
        None => {
            let mut at: HashMap<(i64, i64), usize> = HashMap::new();
            let snap = |v: f64| (v / EPS_CONTACT).round() as i64;
            for (i, q) in s.squares.iter().enumerate() {
                if s.is_degenerate(i) {
                    continue;
                }
                for key in [
                    (snap(q.x), snap(q.y)),
                    (snap(q.x + q.side), snap(q.y)),
                    (snap(q.x), snap(q.y - q.side)),
                    (snap(q.x + q.side), snap(q.y - q.side)),
                ] {
                    *at.entry(key).or_default() += 1;
                }
            }
            at.values().filter(|&&c| c == 4).count()
        }
    }
}
