//! The vertex/face incidence bijection between rooted maps and rooted
//! quadrangulations, and the 3-connectivity decision through it.

use crate::closure::{is_irreducible, two_color};
use crate::combmap::{faces, CombinatorialMap, Dart, RootedMap, VertexId};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TutteError {
    #[error("quadrangulation is not bipartite")]
    NotBipartite,
    #[error("map is not a quadrangulation")]
    NotQuadrangulation,
}

/// The two vertex classes of a bipartite quadrangulation; `primal` holds
/// the root tail.
#[derive(Debug, Clone)]
pub struct BipartiteClasses {
    pub primal: Vec<VertexId>,
    pub facial: Vec<VertexId>,
    pub is_primal: Vec<bool>,
}

pub fn bipartition(q: &RootedMap) -> Result<BipartiteClasses, TutteError> {
    let color = two_color(&q.map).ok_or(TutteError::NotBipartite)?;
    let s_color = color[q.root_tail()];
    let is_primal: Vec<bool> = color.iter().map(|&c| c == s_color).collect();
    Ok(BipartiteClasses {
        primal: (0..q.map.vertex_count()).filter(|&v| is_primal[v]).collect(),
        facial: (0..q.map.vertex_count()).filter(|&v| !is_primal[v]).collect(),
        is_primal,
    })
}

/// Vertex/face incidence quadrangulation of a rooted map. Each corner of
/// the input contributes one output edge joining its vertex to the vertex
/// standing for the face holding the corner; the faces of the output are
/// exactly the edges of the input. The output root points from the root
/// tail into the face lying to the right of the input root.
pub fn tutte_forward(g: &RootedMap) -> RootedMap {
    let m = &g.map;
    let n = m.dart_count();
    // dart d becomes the corner-edge through the sector [d, next d] (which
    // opens into the face left of d); darts 0..n point vertex→face,
    // darts n..2n point back
    let mut twin = vec![0; 2 * n];
    let mut next = vec![0; 2 * n];
    for d in 0..n {
        twin[d] = n + d;
        twin[n + d] = d;
        next[d] = m.next(d);
        next[n + d] = n + m.face_next(d);
    }
    let map = CombinatorialMap::from_permutations(twin, next)
        .expect("incidence quadrangulation of a sphere map is a sphere map");
    let root = m.prev(g.root_dart);
    RootedMap::new(map, root, None).expect("root in range")
}

/// Inverse of `tutte_forward`: one edge per quadrilateral face, joining
/// its two primal-class corners. Of the two faces on the root edge, the
/// face to its left supplies the output root, oriented away from the root
/// tail.
pub fn tutte_inverse(q: &RootedMap) -> Result<RootedMap, TutteError> {
    Ok(tutte_inverse_with_darts(q)?.0)
}

/// As `tutte_inverse`, also returning the quadrangulation dart that each
/// output dart came from (its sector dart at the shared tail vertex).
pub fn tutte_inverse_with_darts(q: &RootedMap) -> Result<(RootedMap, Vec<Dart>), TutteError> {
    let m = &q.map;
    let fi = faces(m);
    if fi.faces.iter().any(|c| c.len() != 4) {
        return Err(TutteError::NotQuadrangulation);
    }
    let classes = bipartition(q)?;
    let mut index = vec![usize::MAX; m.dart_count()];
    let mut pdarts: Vec<Dart> = Vec::with_capacity(m.dart_count() / 2);
    for d in 0..m.dart_count() {
        if classes.is_primal[m.tail(d)] {
            index[d] = pdarts.len();
            pdarts.push(d);
        }
    }
    let k = pdarts.len();
    let mut twin = vec![0; k];
    let mut next = vec![0; k];
    for (i, &d) in pdarts.iter().enumerate() {
        next[i] = index[m.next(d)];
        let across = m.face_next(m.face_next(d));
        debug_assert!(classes.is_primal[m.tail(across)]);
        twin[i] = index[across];
    }
    let map = CombinatorialMap::from_permutations(twin, next)
        .expect("primal diagonals of a sphere quadrangulation form a sphere map");
    let root = index[q.root_dart];
    let rooted = RootedMap::new(map, root, None).map_err(|_| TutteError::NotQuadrangulation)?;
    Ok((rooted, pdarts))
}

/// 3-connectivity via irreducibility of the incidence quadrangulation.
/// Maps with fewer than four vertices, loops, or parallel edges are not
/// 3-connected.
pub fn is_3_connected(g: &RootedMap) -> bool {
    if g.map.vertex_count() < 4 || !g.map.is_simple() {
        return false;
    }
    let q = tutte_forward(g);
    is_irreducible(&q).expect("forward image is a quadrangulation")
}

/// Independent decision by exhaustive vertex-cut enumeration.
pub fn is_3_connected_bruteforce(g: &RootedMap) -> bool {
    let m = &g.map;
    let nv = m.vertex_count();
    if nv < 4 || !m.is_simple() || !m.is_connected() {
        return false;
    }
    let mut adj = vec![Vec::new(); nv];
    for d in 0..m.dart_count() {
        adj[m.tail(d)].push(m.head(d));
    }
    let connected_without = |cut: &[usize]| -> bool {
        let alive: Vec<usize> = (0..nv).filter(|v| !cut.contains(v)).collect();
        if alive.is_empty() {
            return true;
        }
        let mut seen = vec![false; nv];
        seen[alive[0]] = true;
        let mut stack = vec![alive[0]];
        let mut cnt = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !cut.contains(&w) && !seen[w] {
                    seen[w] = true;
                    cnt += 1;
                    stack.push(w);
                }
            }
        }
        cnt == alive.len()
    };
    for u in 0..nv {
        for v in u + 1..nv {
            if !connected_without(&[u, v]) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combmap::canonical_code;
    use crate::fixtures;

    #[test]
    fn triangle_image_counts() {
        let g = fixtures::triangle();
        let q = tutte_forward(&g);
        assert_eq!(q.map.vertex_count(), 5);
        assert_eq!(faces(&q.map).face_count(), 3);
        assert!(faces(&q.map).faces.iter().all(|c| c.len() == 4));
    }

    #[test]
    fn face_count_equals_edge_count() {
        for g in [fixtures::k4(), fixtures::theta(), fixtures::p3()] {
            let q = tutte_forward(&g);
            assert_eq!(faces(&q.map).face_count(), g.map.edge_count());
        }
    }

    #[test]
    fn roundtrip_on_fixtures() {
        for g in [
            fixtures::triangle(),
            fixtures::p3(),
            fixtures::theta(),
            fixtures::k4(),
            fixtures::subdivided_bridge(),
        ] {
            let q = tutte_forward(&g);
            let back = tutte_inverse(&q).unwrap();
            assert_eq!(canonical_code(&back), canonical_code(&g));
        }
    }

    #[test]
    fn three_connectivity_examples() {
        assert!(is_3_connected(&fixtures::k4()));
        assert!(is_3_connected_bruteforce(&fixtures::k4()));
        assert!(!is_3_connected(&fixtures::p3()));
        assert!(!is_3_connected_bruteforce(&fixtures::p3()));
        assert!(!is_3_connected(&fixtures::theta()));
        assert!(!is_3_connected(&fixtures::subdivided_bridge()));
        assert!(!is_3_connected_bruteforce(&fixtures::subdivided_bridge()));
    }

    #[test]
    fn rejects_non_quadrangulation_and_checks_bipartition() {
        assert!(tutte_inverse(&fixtures::k4()).is_err());
        let q = tutte_forward(&fixtures::k4());
        let classes = bipartition(&q).unwrap();
        assert_eq!(classes.primal.len(), 4);
        assert_eq!(classes.facial.len(), 4);
    }
}
