//! Rotation-system planar maps.
//!
//! A map is stored as two permutations on darts (half-edges): `twin`
//! exchanges the two darts of an edge, `next` is the counterclockwise
//! successor around the tail vertex of a dart. Vertices are the orbits of
//! `next`, edges the orbits of `twin`, and faces the orbits of
//! `d ↦ prev[twin[d]]`, which walks the face lying to the *left* of each
//! of its darts (counterclockwise around bounded faces, clockwise around
//! the unbounded one). Clockwise contours, as needed by the closure
//! operation, are exactly the orbit of the outer face under that map.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

pub type Dart = usize;
pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("malformed rotation: {0}")]
    MalformedRotation(String),
    #[error("twin must be a fixed-point-free involution")]
    BadTwin,
    #[error("next must be a permutation on darts")]
    BadNext,
    #[error("Euler check failed: component is not a sphere map")]
    NonPlanar,
    #[error("map is not connected")]
    NotConnected,
    #[error("dart {0} out of range")]
    DartOutOfRange(Dart),
    #[error("invalid map JSON: {0}")]
    InvalidJson(String),
}

/// An immutable rotation-system map. All derived indices (vertices, edges,
/// faces are computed on demand) are fixed at construction; instances are
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinatorialMap {
    twin: Vec<Dart>,
    next: Vec<Dart>,
    prev: Vec<Dart>,
    vertex_of: Vec<VertexId>,
    vertex_count: usize,
    edge_of: Vec<EdgeId>,
    edge_count: usize,
}

impl CombinatorialMap {
    /// Build and validate a map from the two permutations.
    ///
    /// Checks that `twin` is a fixed-point-free involution, `next` a
    /// permutation, and that every connected component satisfies
    /// V - E + F = 2 (sphere embedding).
    pub fn from_permutations(twin: Vec<Dart>, next: Vec<Dart>) -> Result<Self, MapError> {
        let n = twin.len();
        if n == 0 || n % 2 != 0 || next.len() != n {
            return Err(MapError::MalformedRotation(format!(
                "dart count must be even and positive, twin has {} darts, next has {}",
                n,
                next.len()
            )));
        }
        for d in 0..n {
            if twin[d] >= n || twin[twin[d]] != d || twin[d] == d {
                return Err(MapError::BadTwin);
            }
        }
        let mut seen = vec![false; n];
        for d in 0..n {
            if next[d] >= n || seen[next[d]] {
                return Err(MapError::BadNext);
            }
            seen[next[d]] = true;
        }
        let mut prev = vec![0; n];
        for d in 0..n {
            prev[next[d]] = d;
        }
        let (vertex_of, vertex_count) = orbit_index(&next);
        let mut edge_of = vec![0; n];
        let mut edge_count = 0;
        for d in 0..n {
            if d < twin[d] {
                edge_of[d] = edge_count;
                edge_of[twin[d]] = edge_count;
                edge_count += 1;
            }
        }
        let m = CombinatorialMap {
            twin,
            next,
            prev,
            vertex_of,
            vertex_count,
            edge_of,
            edge_count,
        };
        m.check_euler()?;
        Ok(m)
    }

    /// Build a map from per-vertex counterclockwise dart orders plus the
    /// twin involution. Every dart must appear exactly once across the
    /// rotations.
    pub fn from_rotations(rotations: &[Vec<Dart>], twin: Vec<Dart>) -> Result<Self, MapError> {
        let n = twin.len();
        let mut next = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        for rot in rotations {
            for (i, &d) in rot.iter().enumerate() {
                if d >= n {
                    return Err(MapError::DartOutOfRange(d));
                }
                if seen[d] {
                    return Err(MapError::MalformedRotation(format!("dart {d} repeated")));
                }
                seen[d] = true;
                next[d] = rot[(i + 1) % rot.len()];
            }
        }
        if let Some(d) = seen.iter().position(|s| !s) {
            return Err(MapError::MalformedRotation(format!("dart {d} missing")));
        }
        Self::from_permutations(twin, next)
    }

    fn check_euler(&self) -> Result<(), MapError> {
        let n = self.dart_count();
        let (face_of, _) = orbit_index_fn(n, |d| self.face_next(d));
        // component exploration over {next, twin}
        let mut comp = vec![usize::MAX; n];
        let mut ncomp = 0;
        for d0 in 0..n {
            if comp[d0] != usize::MAX {
                continue;
            }
            let mut stack = vec![d0];
            comp[d0] = ncomp;
            while let Some(d) = stack.pop() {
                for nd in [self.next[d], self.twin[d]] {
                    if comp[nd] == usize::MAX {
                        comp[nd] = ncomp;
                        stack.push(nd);
                    }
                }
            }
            ncomp += 1;
        }
        for c in 0..ncomp {
            let mut vs = HashSet::new();
            let mut es = HashSet::new();
            let mut fs = HashSet::new();
            for d in 0..n {
                if comp[d] == c {
                    vs.insert(self.vertex_of[d]);
                    es.insert(self.edge_of[d]);
                    fs.insert(face_of[d]);
                }
            }
            if vs.len() as i64 - es.len() as i64 + fs.len() as i64 != 2 {
                return Err(MapError::NonPlanar);
            }
        }
        Ok(())
    }

    pub fn dart_count(&self) -> usize {
        self.twin.len()
    }
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }
    pub fn twin(&self, d: Dart) -> Dart {
        self.twin[d]
    }
    pub fn next(&self, d: Dart) -> Dart {
        self.next[d]
    }
    pub fn prev(&self, d: Dart) -> Dart {
        self.prev[d]
    }
    /// Next dart along the face to the left of `d`.
    pub fn face_next(&self, d: Dart) -> Dart {
        self.prev[self.twin[d]]
    }
    pub fn tail(&self, d: Dart) -> VertexId {
        self.vertex_of[d]
    }
    pub fn head(&self, d: Dart) -> VertexId {
        self.vertex_of[self.twin[d]]
    }
    pub fn edge_of(&self, d: Dart) -> EdgeId {
        self.edge_of[d]
    }
    pub fn vertex_of_darts(&self) -> &[VertexId] {
        &self.vertex_of
    }
    pub fn twin_perm(&self) -> &[Dart] {
        &self.twin
    }
    pub fn next_perm(&self) -> &[Dart] {
        &self.next
    }

    /// The two darts of edge `e`, lower dart first.
    pub fn edge_darts(&self, e: EdgeId) -> (Dart, Dart) {
        let d = self
            .edge_of
            .iter()
            .position(|&x| x == e)
            .expect("edge id in range");
        (d, self.twin[d])
    }

    /// Counterclockwise rotation at the vertex of `d`, starting from `d`.
    pub fn rotation_from(&self, d: Dart) -> Vec<Dart> {
        let mut out = vec![d];
        let mut x = self.next[d];
        while x != d {
            out.push(x);
            x = self.next[x];
        }
        out
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.vertex_of.iter().filter(|&&x| x == v).count()
    }

    /// Per-vertex rotations, each starting at the minimal dart.
    pub fn rotations(&self) -> Vec<Vec<Dart>> {
        let mut first = vec![usize::MAX; self.vertex_count];
        for d in 0..self.dart_count() {
            let v = self.vertex_of[d];
            if first[v] == usize::MAX {
                first[v] = d;
            }
        }
        first.iter().map(|&d| self.rotation_from(d)).collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.dart_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut cnt = 1;
        while let Some(d) = stack.pop() {
            for nd in [self.next[d], self.twin[d]] {
                if !seen[nd] {
                    seen[nd] = true;
                    cnt += 1;
                    stack.push(nd);
                }
            }
        }
        cnt == n
    }

    pub fn has_loop(&self) -> bool {
        (0..self.dart_count()).any(|d| self.tail(d) == self.head(d))
    }

    pub fn has_parallel_edges(&self) -> bool {
        let mut seen = HashSet::new();
        for d in 0..self.dart_count() {
            if d < self.twin[d] {
                let (a, b) = (self.tail(d), self.head(d));
                let key = (a.min(b), a.max(b));
                if !seen.insert(key) {
                    return true;
                }
            }
        }
        false
    }

    pub fn is_simple(&self) -> bool {
        !self.has_loop() && !self.has_parallel_edges()
    }

    /// Neighbors of `v` through each incident dart (with multiplicity).
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        (0..self.dart_count())
            .filter(|&d| self.tail(d) == v)
            .map(|d| self.head(d))
            .collect()
    }
}

fn orbit_index(perm: &[Dart]) -> (Vec<usize>, usize) {
    orbit_index_fn(perm.len(), |d| perm[d])
}

fn orbit_index_fn(n: usize, f: impl Fn(Dart) -> Dart) -> (Vec<usize>, usize) {
    let mut idx = vec![usize::MAX; n];
    let mut count = 0;
    for d0 in 0..n {
        if idx[d0] != usize::MAX {
            continue;
        }
        let mut d = d0;
        loop {
            idx[d] = count;
            d = f(d);
            if d == d0 {
                break;
            }
        }
        count += 1;
    }
    (idx, count)
}

/// A map with a distinguished oriented root edge, and optionally a marked
/// outer face (a dart on its boundary). The outer face is data carried from
/// construction; it is never inferred from coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedMap {
    pub map: CombinatorialMap,
    pub root_dart: Dart,
    pub outer_face_dart: Option<Dart>,
}

impl RootedMap {
    pub fn new(
        map: CombinatorialMap,
        root_dart: Dart,
        outer_face_dart: Option<Dart>,
    ) -> Result<Self, MapError> {
        if root_dart >= map.dart_count() {
            return Err(MapError::DartOutOfRange(root_dart));
        }
        if let Some(d) = outer_face_dart {
            if d >= map.dart_count() {
                return Err(MapError::DartOutOfRange(d));
            }
        }
        Ok(RootedMap {
            map,
            root_dart,
            outer_face_dart,
        })
    }

    pub fn root_tail(&self) -> VertexId {
        self.map.tail(self.root_dart)
    }
    pub fn root_head(&self) -> VertexId {
        self.map.head(self.root_dart)
    }

    /// Same map, root orientation reversed.
    pub fn with_reversed_root(&self) -> RootedMap {
        RootedMap {
            map: self.map.clone(),
            root_dart: self.map.twin(self.root_dart),
            outer_face_dart: self.outer_face_dart,
        }
    }
}

/// All face cycles of a map, each listed from its minimal dart, plus the
/// index of the unbounded face when one is marked.
#[derive(Debug, Clone)]
pub struct FaceIndex {
    pub faces: Vec<Vec<Dart>>,
    pub face_of: Vec<FaceId>,
    pub outer_face: Option<FaceId>,
}

impl FaceIndex {
    pub fn degree(&self, f: FaceId) -> usize {
        self.faces[f].len()
    }
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }
}

/// Face cycles as orbits of `d ↦ prev[twin[d]]`.
pub fn faces(m: &CombinatorialMap) -> FaceIndex {
    let n = m.dart_count();
    let (face_of, count) = orbit_index_fn(n, |d| m.face_next(d));
    let mut faces = vec![Vec::new(); count];
    let mut started = vec![false; count];
    for d in 0..n {
        let f = face_of[d];
        if !started[f] {
            started[f] = true;
            let mut x = d;
            loop {
                faces[f].push(x);
                x = m.face_next(x);
                if x == d {
                    break;
                }
            }
        }
    }
    FaceIndex {
        faces,
        face_of,
        outer_face: None,
    }
}

pub fn faces_of_rooted(m: &RootedMap) -> FaceIndex {
    let mut fi = faces(&m.map);
    fi.outer_face = m.outer_face_dart.map(|d| fi.face_of[d]);
    fi
}

/// Planar dual of a rooted map.
///
/// The dual shares the dart set: `twin` is unchanged and the dual rotation
/// is `d ↦ twin[prev[d]]`. Under this encoding the dual dart `d` points from
/// the face to the right of `d` to the face on its left, so the dual root is
/// the same dart id and its tail is the face to the right of the primal
/// root, as required. Applying `dual` twice returns the original map with
/// the root reversed (a dart rotated twice by 90° points backwards); see
/// tests.
pub fn dual(m: &RootedMap) -> RootedMap {
    let n = m.map.dart_count();
    let next = (0..n).map(|d| m.map.twin(m.map.prev(d))).collect();
    let map = CombinatorialMap::from_permutations(m.map.twin_perm().to_vec(), next)
        .expect("dual of a valid sphere map is valid");
    RootedMap {
        map,
        root_dart: m.root_dart,
        outer_face_dart: None,
    }
}

/// True iff the map is connected, simple, and stays connected after
/// removing both root endpoints (with at least one vertex left). These are
/// the preconditions for the electrical-network construction.
pub fn check_squarable(m: &RootedMap) -> bool {
    let g = &m.map;
    if !g.is_connected() || !g.is_simple() {
        return false;
    }
    let s = m.root_tail();
    let t = m.root_head();
    interior_connected(g, s, t)
}

/// Connectivity of G - {s, t}: used both by `check_squarable` and by the
/// permissive multigraph path.
pub fn interior_connected(g: &CombinatorialMap, s: VertexId, t: VertexId) -> bool {
    let nv = g.vertex_count();
    let interior: Vec<VertexId> = (0..nv).filter(|&v| v != s && v != t).collect();
    if interior.is_empty() {
        return false;
    }
    let mut adj = vec![Vec::new(); nv];
    for d in 0..g.dart_count() {
        adj[g.tail(d)].push(g.head(d));
    }
    let start = interior[0];
    let mut seen = vec![false; nv];
    seen[start] = true;
    let mut stack = vec![start];
    let mut cnt = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if w != s && w != t && !seen[w] {
                seen[w] = true;
                cnt += 1;
                stack.push(w);
            }
        }
    }
    cnt == interior.len()
}

/// Canonical byte string for a rooted map: two rooted maps have equal codes
/// iff there is a dart bijection commuting with `next` and `twin` that
/// sends one root to the other. Computed by breadth-first dart relabeling
/// from the root, so it is invariant under any relabeling of the input.
pub fn canonical_code(m: &RootedMap) -> Vec<u8> {
    code_from(&m.map, m.root_dart)
}

fn code_from(g: &CombinatorialMap, root: Dart) -> Vec<u8> {
    let n = g.dart_count();
    let mut label = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    label[root] = 0;
    order.push(root);
    let mut qi = 0;
    while qi < order.len() {
        let d = order[qi];
        qi += 1;
        for nd in [g.next(d), g.twin(d)] {
            if label[nd] == usize::MAX {
                label[nd] = order.len();
                order.push(nd);
            }
        }
    }
    debug_assert_eq!(order.len(), n, "canonical_code requires a connected map");
    let mut out = Vec::with_capacity(8 * n);
    for &d in &order {
        out.extend_from_slice(&(label[g.next(d)] as u32).to_le_bytes());
        out.extend_from_slice(&(label[g.twin(d)] as u32).to_le_bytes());
    }
    out
}

/// Canonical code of the underlying unrooted map: minimum of the rooted
/// codes over all choices of root dart.
pub fn canonical_code_unrooted(g: &CombinatorialMap) -> Vec<u8> {
    (0..g.dart_count())
        .map(|d| code_from(g, d))
        .min()
        .expect("nonempty map")
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    version: u32,
    twin: Vec<usize>,
    next: Vec<usize>,
    root_dart: usize,
    outer_face_dart: Option<usize>,
}

pub fn to_json(m: &RootedMap) -> String {
    let j = MapJson {
        version: 1,
        twin: m.map.twin_perm().to_vec(),
        next: m.map.next_perm().to_vec(),
        root_dart: m.root_dart,
        outer_face_dart: m.outer_face_dart,
    };
    serde_json::to_string_pretty(&j).expect("map serializes")
}

pub fn from_json(s: &str) -> Result<RootedMap, MapError> {
    let j: MapJson = serde_json::from_str(s).map_err(|e| MapError::InvalidJson(e.to_string()))?;
    if j.version != 1 {
        return Err(MapError::InvalidJson(format!(
            "unsupported version {}",
            j.version
        )));
    }
    let map = CombinatorialMap::from_permutations(j.twin, j.next)?;
    RootedMap::new(map, j.root_dart, j.outer_face_dart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn triangle_counts() {
        let m = fixtures::triangle();
        assert_eq!(m.map.vertex_count(), 3);
        assert_eq!(m.map.edge_count(), 3);
        let f = faces(&m.map);
        assert_eq!(f.face_count(), 2);
        assert!(f.faces.iter().all(|c| c.len() == 3));
    }

    #[test]
    fn theta_counts_and_face_degrees() {
        let m = fixtures::theta();
        assert_eq!(m.map.vertex_count(), 4);
        assert_eq!(m.map.edge_count(), 5);
        let f = faces_of_rooted(&m);
        assert_eq!(f.face_count(), 3);
        let mut degs: Vec<usize> = f.faces.iter().map(|c| c.len()).collect();
        degs.sort();
        assert_eq!(degs, vec![3, 3, 4]);
        assert_eq!(f.degree(f.outer_face.unwrap()), 4);
    }

    #[test]
    fn repeated_dart_is_malformed() {
        // triangle rotations but dart 0 listed twice
        let rot = vec![vec![0, 0], vec![1, 2], vec![3, 4], vec![5]];
        let twin = vec![1, 0, 3, 2, 5, 4];
        let err = CombinatorialMap::from_rotations(&rot, twin).unwrap_err();
        assert!(matches!(err, MapError::MalformedRotation(_)));
    }

    #[test]
    fn nonplanar_rejected() {
        // K4 with one vertex rotation flipped has genus 1
        let m = fixtures::k4();
        let mut rots = m.map.rotations();
        rots[3].swap(1, 2);
        let err = CombinatorialMap::from_rotations(&rots, m.map.twin_perm().to_vec());
        assert!(matches!(err, Err(MapError::NonPlanar)));
    }

    #[test]
    fn dual_swaps_vertices_and_faces() {
        let m = fixtures::theta();
        let d = dual(&m);
        assert_eq!(d.map.vertex_count(), 3);
        assert_eq!(d.map.edge_count(), 5);
        assert_eq!(faces(&d.map).face_count(), 4);
        // faces of the dual are in degree-preserving bijection with
        // vertices of the primal
        let mut a: Vec<usize> = faces(&d.map).faces.iter().map(|c| c.len()).collect();
        let mut b: Vec<usize> = (0..m.map.vertex_count())
            .map(|v| m.map.degree(v))
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn dual_is_involution_up_to_root_reversal() {
        for m in [
            fixtures::triangle(),
            fixtures::theta(),
            fixtures::k4(),
            fixtures::p3(),
        ] {
            let dd = dual(&dual(&m));
            assert_eq!(canonical_code(&dd), canonical_code(&m.with_reversed_root()));
        }
    }

    #[test]
    fn squarable_examples() {
        assert!(!check_squarable(&fixtures::theta()));
        assert!(check_squarable(&fixtures::p3()));
        assert!(check_squarable(&fixtures::k4()));
        // disconnected map: two separate edges
        let two = RootedMap::new(
            CombinatorialMap::from_permutations(vec![1, 0, 3, 2], vec![0, 1, 2, 3]).unwrap(),
            0,
            None,
        )
        .unwrap();
        assert!(!check_squarable(&two));
        // single edge: nothing between the poles
        let one = RootedMap::new(
            CombinatorialMap::from_permutations(vec![1, 0], vec![0, 1]).unwrap(),
            0,
            None,
        )
        .unwrap();
        assert!(!check_squarable(&one));
    }

    #[test]
    fn canonical_code_invariant_under_relabeling() {
        // relabel K4's darts by a fixed permutation and compare codes
        let m = fixtures::k4();
        let n = m.map.dart_count();
        let perm: Vec<usize> = (0..n).map(|d| (d * 5 + 3) % n).collect();
        let mut twin = vec![0; n];
        let mut next = vec![0; n];
        for d in 0..n {
            twin[perm[d]] = perm[m.map.twin(d)];
            next[perm[d]] = perm[m.map.next(d)];
        }
        let relabeled = RootedMap::new(
            CombinatorialMap::from_permutations(twin, next).unwrap(),
            perm[m.root_dart],
            None,
        )
        .unwrap();
        assert_eq!(canonical_code(&m), canonical_code(&relabeled));
        // moving the root to a non-equivalent dart changes the code (the
        // theta graph has no dart-transitive symmetry, unlike K4)
        let th = fixtures::theta();
        let moved = RootedMap::new(th.map.clone(), th.map.next(th.root_dart), None).unwrap();
        assert_ne!(canonical_code(&th), canonical_code(&moved));
    }

    #[test]
    fn two_edge_census_matches_bruteforce() {
        // all rooted maps with 2 edges: every rotation system on darts
        // {0,1,2,3} with twin (01)(23), rooted at each dart
        let twin = vec![1, 0, 3, 2];
        let mut maps = Vec::new();
        let mut perm = vec![0, 1, 2, 3];
        permutations(&mut perm, 0, &mut |p| {
            if let Ok(m) = CombinatorialMap::from_permutations(twin.clone(), p.to_vec()) {
                if m.is_connected() {
                    for root in 0..4 {
                        maps.push(RootedMap::new(m.clone(), root, None).unwrap());
                    }
                }
            }
        });
        let codes: HashSet<Vec<u8>> = maps.iter().map(canonical_code).collect();
        // brute force: explicit dart bijections commuting with both
        // permutations and preserving the root
        let mut classes: Vec<&RootedMap> = Vec::new();
        'outer: for m in &maps {
            for c in &classes {
                if brute_isomorphic(m, c) {
                    continue 'outer;
                }
            }
            classes.push(m);
        }
        assert_eq!(codes.len(), classes.len());
        assert_eq!(codes.len(), 9);
    }

    fn permutations(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permutations(v, k + 1, f);
            v.swap(k, i);
        }
    }

    fn brute_isomorphic(a: &RootedMap, b: &RootedMap) -> bool {
        let n = a.map.dart_count();
        if n != b.map.dart_count() {
            return false;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut found = false;
        permutations(&mut perm, 0, &mut |p| {
            if found {
                return;
            }
            if p[a.root_dart] != b.root_dart {
                return;
            }
            for d in 0..n {
                if p[a.map.next(d)] != b.map.next(p[d]) || p[a.map.twin(d)] != b.map.twin(p[d]) {
                    return;
                }
            }
            found = true;
        });
        found
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let m = fixtures::k4();
        let s = to_json(&m);
        let back = from_json(&s).unwrap();
        assert_eq!(m, back);
        assert!(from_json("{\"version\":1,\"twin\":[0,1],\"next\":[0,1],\"root_dart\":0,\"outer_face_dart\":null}").is_err());
    }
}
