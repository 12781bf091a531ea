//! Closure of a binary tree into a quadrangulation of a hexagon.
//!
//! The clockwise contour of a map is the orbit of its outer face under
//! `d ↦ prev[twin[d]]`; corners are visited at the tails of the orbit
//! darts. Whenever a leaf corner is followed by four corners at internal
//! vertices, the leaf is merged into the fourth one, enclosing a bounded
//! quadrilateral; the scan restarts and repeats to a fixpoint (the partial
//! closure). The surviving leaves are then identified with the vertices of
//! a hexagon drawn in the outer face, the assignment being found by
//! enumerating cyclic-order-preserving placements and keeping exactly the
//! ones in which every new bounded face has degree four.

use crate::combmap::{
    faces, CombinatorialMap, Dart, EdgeId, RootedMap,
};
use crate::treegrow::RootedBinaryTree;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosureError {
    #[error("closure needs at least one internal vertex")]
    TooSmall,
    #[error("no valid hexagon completion found (internal bug)")]
    NoCompletion,
    #[error("hexagon completion is not unique (internal bug)")]
    NonUniqueCompletion,
    #[error("map is not a quadrangulation")]
    NotQuadrangulation,
    #[error("hexagon index must be 0..=5, got {0}")]
    BadHexIndex(usize),
}

/// Where each edge of a closed map came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeProvenance {
    /// Plain tree edge, both ends where the tree put them.
    Tree,
    /// Leaf edge whose leaf end was merged into an internal vertex during
    /// the partial closure. `glued_dart` is the re-tailed dart.
    Closure { glued_dart: Dart },
    /// Leaf edge whose leaf end was identified with a hexagon vertex.
    HexGlued { glued_dart: Dart },
    /// One of the six hexagon sides.
    Hexagon,
    /// The added hexagon diagonal.
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct PartialClosure {
    pub map: RootedMap,
    pub internal_count: usize,
    pub provenance: Vec<EdgeProvenance>,
    /// Leaf darts of the surviving leaves, in contour order; first entry
    /// is the distinguished leaf.
    pub remaining_leaves: Vec<Dart>,
    pub ell0: Dart,
    scan_start: Dart,
}

#[derive(Debug, Clone)]
pub struct HexQuadrangulation {
    pub map: RootedMap,
    pub internal_count: usize,
    /// `hexagon_darts[j]` points from hexagon vertex j to j+1; vertex 0
    /// received the distinguished leaf and labels increase clockwise.
    pub hexagon_darts: [Dart; 6],
    pub provenance: Vec<EdgeProvenance>,
}

#[derive(Debug, Clone)]
pub struct DoublyRootedQuad {
    pub map: RootedMap,
    pub internal_count: usize,
    pub diagonal_dart: Dart,
    pub hexagon_darts: [Dart; 6],
    pub provenance: Vec<EdgeProvenance>,
}

/// Which root the singly-rooted quadrangulation keeps. The default keeps
/// the original tree root; the alternative re-roots at the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondRootChoice {
    #[default]
    KeepOriginal,
    UseDiagonal,
}

/// Mutable permutation pair used while rewiring rotations.
struct Surgeon {
    twin: Vec<Dart>,
    next: Vec<Dart>,
    prev: Vec<Dart>,
}

impl Surgeon {
    fn from_map(m: &CombinatorialMap) -> Self {
        let next = m.next_perm().to_vec();
        let mut prev = vec![0; next.len()];
        for (d, &n) in next.iter().enumerate() {
            prev[n] = d;
        }
        Surgeon {
            twin: m.twin_perm().to_vec(),
            next,
            prev,
        }
    }

    fn set_next(&mut self, d: Dart, to: Dart) {
        self.next[d] = to;
        self.prev[to] = d;
    }

    fn face_next(&self, d: Dart) -> Dart {
        self.prev[self.twin[d]]
    }

    fn is_leaf_dart(&self, d: Dart) -> bool {
        self.next[d] == d
    }

    fn contour(&self, start: Dart) -> Vec<Dart> {
        let mut out = vec![start];
        let mut d = self.face_next(start);
        while d != start {
            out.push(d);
            d = self.face_next(d);
        }
        out
    }

    fn face_degree(&self, d: Dart) -> usize {
        let mut deg = 1;
        let mut x = self.face_next(d);
        while x != d {
            deg += 1;
            x = self.face_next(x);
        }
        deg
    }

    fn into_map(self) -> CombinatorialMap {
        CombinatorialMap::from_permutations(self.twin, self.next)
            .expect("surgery preserves map validity")
    }
}

/// Contour-scanning partial closure. Each merge grabs the first (from the
/// scan start) leaf corner followed by four internal corners, re-tails the
/// leaf dart onto the fourth corner's vertex, and restarts the scan.
pub fn partial_closure(t: &RootedBinaryTree) -> Result<PartialClosure, ClosureError> {
    if t.internal_count == 0 {
        return Err(ClosureError::TooSmall);
    }
    let mut s = Surgeon::from_map(&t.map.map);
    let root = t.map.root_dart;
    let mut scan_start = root;
    let mut provenance = vec![EdgeProvenance::Tree; t.map.map.edge_count()];
    loop {
        let contour = s.contour(scan_start);
        let l = contour.len();
        if l < 5 {
            break;
        }
        let mut merged = false;
        for i in 0..l {
            let leaf = contour[i];
            if !s.is_leaf_dart(leaf) {
                continue;
            }
            let c: Vec<Dart> = (1..=4).map(|k| contour[(i + k) % l]).collect();
            if c.iter().any(|&d| s.is_leaf_dart(d)) {
                continue;
            }
            // merge the leaf into the vertex at the fourth corner: insert
            // its dart just before twin(c[2]) in that vertex's rotation
            let anchor = s.twin[c[2]];
            let pi = s.prev[anchor];
            s.set_next(pi, leaf);
            s.set_next(leaf, anchor);
            debug_assert_eq!(s.face_degree(leaf), 4, "merge must enclose a quad");
            provenance[leaf / 2] = EdgeProvenance::Closure { glued_dart: leaf };
            if [leaf, c[0], c[1], c[2]].contains(&scan_start) {
                scan_start = c[3];
            }
            merged = true;
            break;
        }
        if !merged {
            break;
        }
    }
    let contour = s.contour(scan_start);
    let remaining_leaves: Vec<Dart> = contour
        .iter()
        .copied()
        .filter(|&d| s.is_leaf_dart(d))
        .collect();
    assert!(
        remaining_leaves.len() >= 3,
        "at least three leaves survive the partial closure"
    );
    let ell0 = remaining_leaves[0];
    let map = RootedMap::new(s.into_map(), root, Some(scan_start)).expect("root persists");
    Ok(PartialClosure {
        map,
        internal_count: t.internal_count,
        provenance,
        remaining_leaves,
        ell0,
    scan_start,
    })
}

/// All cyclic-order-preserving hexagon assignments for the given
/// inter-leaf contour path lengths. Position 6 means "vertex 0 again,
/// after going all the way around". A placement is kept iff every face it
/// pins down has degree four; that check only involves consecutive leaves,
/// so it is applied as the positions are chosen, which prunes without
/// excluding any valid assignment.
fn completion_assignments(paths: &[usize]) -> Vec<Vec<usize>> {
    let k = paths.len();
    let mut out = Vec::new();
    let mut qs = vec![0usize];
    fn explore(qs: &mut Vec<usize>, paths: &[usize], out: &mut Vec<Vec<usize>>) {
        let k = paths.len();
        let i = qs.len();
        if i == k {
            let gap = 6 - qs[k - 1];
            if 2 + gap + paths[k - 1] == 4 {
                out.push(qs.clone());
            }
            return;
        }
        for q in qs[i - 1]..=6 {
            let gap = q - qs[i - 1];
            if 2 + gap + paths[i - 1] == 4 {
                qs.push(q);
                explore(qs, paths, out);
                qs.pop();
            }
        }
    }
    explore(&mut qs, paths, &mut out);
    let _ = k;
    out
}

/// Glue a hexagon into the outer face and identify the surviving leaves
/// with its vertices so that every bounded face has degree four. The
/// distinguished leaf goes to vertex 0, labels increase clockwise.
pub fn complete_closure(pc: &PartialClosure) -> Result<HexQuadrangulation, ClosureError> {
    let g = &pc.map.map;
    let mut s = Surgeon::from_map(g);
    let contour = s.contour(pc.scan_start);
    let l = contour.len();
    let leaf_pos: Vec<usize> = (0..l)
        .filter(|&i| s.is_leaf_dart(contour[i]))
        .collect();
    let k = leaf_pos.len();
    assert_eq!(k, pc.remaining_leaves.len());
    let paths: Vec<usize> = (0..k)
        .map(|i| {
            let a = leaf_pos[i];
            let b = leaf_pos[(i + 1) % k];
            let steps = if i + 1 == k { l + b - a } else { b - a };
            steps - 2
        })
        .collect();
    let assignments = completion_assignments(&paths);
    if assignments.is_empty() {
        return Err(ClosureError::NoCompletion);
    }
    if assignments.len() > 1 {
        return Err(ClosureError::NonUniqueCompletion);
    }
    let qs = &assignments[0];

    let base = s.twin.len();
    // edge j joins hexagon vertices j and j+1: dart base+2j points j→j+1,
    // its twin points back
    for j in 0..6 {
        s.twin.push(base + 2 * j + 1);
        s.twin.push(base + 2 * j);
        s.next.push(0);
        s.next.push(0);
        s.prev.push(0);
        s.prev.push(0);
    }
    let t_dart = |j: usize| base + 2 * j;
    let u_dart = |j: usize| base + 2 * ((j + 5) % 6) + 1;

    let mut provenance = pc.provenance.clone();
    let mut glued: Vec<Vec<Dart>> = vec![Vec::new(); 6];
    for (i, &lambda) in pc.remaining_leaves.iter().enumerate() {
        let slot = qs[i] % 6;
        glued[slot].push(lambda);
        provenance[lambda / 2] = EdgeProvenance::HexGlued { glued_dart: lambda };
    }
    // wrapped leaves (position 6) sit between u_0 and the distinguished
    // leaf in vertex 0's rotation
    let wrapped: Vec<Dart> = pc
        .remaining_leaves
        .iter()
        .enumerate()
        .filter(|&(i, _)| qs[i] == 6)
        .map(|(_, &d)| d)
        .collect();
    if !wrapped.is_empty() {
        let unwrapped: Vec<Dart> = glued[0]
            .iter()
            .copied()
            .filter(|d| !wrapped.contains(d))
            .collect();
        glued[0] = wrapped.into_iter().chain(unwrapped).collect();
    }
    for j in 0..6 {
        let mut rot = vec![u_dart(j)];
        rot.extend(&glued[j]);
        rot.push(t_dart(j));
        for w in 0..rot.len() {
            s.set_next(rot[w], rot[(w + 1) % rot.len()]);
        }
    }
    for _ in 0..6 {
        provenance.push(EdgeProvenance::Hexagon);
    }

    let map = s.into_map();
    let hex = HexQuadrangulation {
        map: RootedMap::new(map, pc.map.root_dart, Some(t_dart(0))).expect("root persists"),
        internal_count: pc.internal_count,
        hexagon_darts: [
            t_dart(0),
            t_dart(1),
            t_dart(2),
            t_dart(3),
            t_dart(4),
            t_dart(5),
        ],
        provenance,
    };
    validate_hex(&hex)?;
    Ok(hex)
}

fn validate_hex(hq: &HexQuadrangulation) -> Result<(), ClosureError> {
    let fi = faces(&hq.map.map);
    let outer = fi.face_of[hq.hexagon_darts[0]];
    for (f, cycle) in fi.faces.iter().enumerate() {
        let want = if f == outer { 6 } else { 4 };
        if cycle.len() != want {
            return Err(ClosureError::NoCompletion);
        }
    }
    if fi.face_of[hq.map.root_dart] == outer
        || fi.face_of[hq.map.map.twin(hq.map.root_dart)] == outer
    {
        return Err(ClosureError::NoCompletion);
    }
    if hq.map.map.vertex_count() != hq.internal_count + 6 {
        return Err(ClosureError::NoCompletion);
    }
    Ok(())
}

/// Insert the oriented diagonal from hexagon vertex i to i+3, splitting
/// the hexagonal face into two quadrilaterals.
pub fn add_diagonal(hq: &HexQuadrangulation, i: usize) -> Result<DoublyRootedQuad, ClosureError> {
    if i > 5 {
        return Err(ClosureError::BadHexIndex(i));
    }
    let mut s = Surgeon::from_map(&hq.map.map);
    let base = s.twin.len();
    s.twin.push(base + 1);
    s.twin.push(base);
    s.next.extend([0, 0]);
    s.prev.extend([0, 0]);
    let t = |j: usize| hq.hexagon_darts[j % 6];
    let u = |j: usize| s.twin[hq.hexagon_darts[(j + 5) % 6]];
    // the hexagonal face's corner at vertex j lies between t(j) and u(j)
    let j0 = i;
    let j1 = (i + 3) % 6;
    let u0 = u(j0);
    let u1 = u(j1);
    s.set_next(t(j0), base);
    s.set_next(base, u0);
    s.set_next(t(j1), base + 1);
    s.set_next(base + 1, u1);
    let mut provenance = hq.provenance.clone();
    provenance.push(EdgeProvenance::Diagonal);
    let map = s.into_map();
    let dq = DoublyRootedQuad {
        map: RootedMap::new(map, hq.map.root_dart, None).expect("root persists"),
        internal_count: hq.internal_count,
        diagonal_dart: base,
        hexagon_darts: hq.hexagon_darts,
        provenance,
    };
    debug_assert!(faces(&dq.map.map).faces.iter().all(|c| c.len() == 4));
    Ok(dq)
}

/// Forget the second root marking, keeping the edge. Which dart remains
/// the root is a convention, kept behind `SecondRootChoice`.
pub fn unroot_second(dq: &DoublyRootedQuad, choice: SecondRootChoice) -> RootedMap {
    let root = match choice {
        SecondRootChoice::KeepOriginal => dq.map.root_dart,
        SecondRootChoice::UseDiagonal => dq.diagonal_dart,
    };
    RootedMap::new(dq.map.map.clone(), root, None).expect("root in range")
}

/// Every four-cycle bounds a face. Decided per same-class vertex pair: a
/// pair with c ≥ 2 common neighbours sits on C(c,2) four-cycles, which
/// must all appear as face diagonals. Maps with loops or parallel edges
/// are not irreducible.
pub fn is_irreducible(q: &RootedMap) -> Result<bool, ClosureError> {
    let g = &q.map;
    let fi = faces(g);
    if fi.faces.iter().any(|c| c.len() != 4) {
        return Err(ClosureError::NotQuadrangulation);
    }
    if !g.is_simple() {
        return Ok(false);
    }
    let color = two_color(g).ok_or(ClosureError::NotQuadrangulation)?;
    let class_a = color[q.root_tail()];

    let mut facial: HashMap<(usize, usize), HashSet<(usize, usize)>> = HashMap::new();
    for cycle in &fi.faces {
        let vs: Vec<usize> = cycle.iter().map(|&d| g.tail(d)).collect();
        let (diag_a, diag_b) = if color[vs[0]] == class_a {
            ((vs[0], vs[2]), (vs[1], vs[3]))
        } else {
            ((vs[1], vs[3]), (vs[0], vs[2]))
        };
        facial
            .entry(ordered(diag_a))
            .or_default()
            .insert(ordered(diag_b));
    }

    let mut common: HashMap<(usize, usize), usize> = HashMap::new();
    for w in 0..g.vertex_count() {
        if color[w] == class_a {
            continue;
        }
        let nbrs: Vec<usize> = {
            let mut v = g.neighbors(w);
            v.sort_unstable();
            v.dedup();
            v
        };
        for i in 0..nbrs.len() {
            for j in i + 1..nbrs.len() {
                *common.entry((nbrs[i], nbrs[j])).or_default() += 1;
            }
        }
    }
    for (&pair, &c) in &common {
        if c < 2 {
            continue;
        }
        let have = facial.get(&pair).map_or(0, |s| s.len());
        if have != c * (c - 1) / 2 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn ordered(p: (usize, usize)) -> (usize, usize) {
    (p.0.min(p.1), p.0.max(p.1))
}

/// Proper 2-coloring by BFS, or None on an odd cycle.
pub fn two_color(g: &CombinatorialMap) -> Option<Vec<bool>> {
    let nv = g.vertex_count();
    let mut color = vec![None; nv];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for d in 0..g.dart_count() {
        adj[g.tail(d)].push(g.head(d));
    }
    for start in 0..nv {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(true);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                match color[w] {
                    None => {
                        color[w] = Some(!color[v].unwrap());
                        queue.push_back(w);
                    }
                    Some(c) if c == color[v].unwrap() => return None,
                    _ => {}
                }
            }
        }
    }
    Some(color.into_iter().map(|c| c.unwrap()).collect())
}

/// Undo the closure using only provenance labels: delete the hexagon,
/// detach every glued leaf dart, and compare against nothing — the caller
/// checks the canonical code. Diagonal edges must not be present.
pub fn recover_tree(hq: &HexQuadrangulation) -> RootedMap {
    let g = &hq.map.map;
    let mut s = Surgeon::from_map(g);
    for prov in &hq.provenance {
        if let EdgeProvenance::Closure { glued_dart } | EdgeProvenance::HexGlued { glued_dart } =
            prov
        {
            let lam = *glued_dart;
            let pi = s.prev[lam];
            let after = s.next[lam];
            s.set_next(pi, after);
            s.set_next(lam, lam);
        }
    }
    // hexagon darts are the trailing twelve and now only reference each
    // other; drop them
    let keep = g.dart_count() - 12;
    debug_assert!(hq
        .provenance
        .iter()
        .rev()
        .take(6)
        .all(|p| matches!(p, EdgeProvenance::Hexagon)));
    s.twin.truncate(keep);
    s.next.truncate(keep);
    let map = CombinatorialMap::from_permutations(s.twin, s.next)
        .expect("provenance undo yields the tree");
    RootedMap::new(map, hq.map.root_dart, Some(hq.map.root_dart)).expect("root persists")
}

/// Edge ids of a map built by the closure pipeline are dart-pair indices.
pub fn edge_ids(map: &CombinatorialMap) -> Vec<EdgeId> {
    (0..map.edge_count()).collect()
}
