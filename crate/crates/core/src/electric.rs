//! Harmonic potentials on a rooted map viewed as a unit-resistor network.
//!
//! The root edge is cut, the root tail is held at potential one and the
//! root head at zero. Potentials solve the Dirichlet problem on the rest
//! of the graph; the current through an edge is the potential difference
//! across it, and the total current equals both conservation forms checked
//! by the tests. The dual network carries the horizontal coordinates of
//! the eventual squaring: its normalized potentials are scaled by the
//! total current.

use crate::combmap::{
    self, dual, faces, EdgeId, FaceIndex, RootedMap, VertexId,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElectricError {
    #[error("map fails the squarability preconditions")]
    NotSquarable,
    #[error("reduced Laplacian is singular")]
    SingularSystem,
    #[error("conjugate gradient hit the iteration cap")]
    NoConvergence,
    #[error("exact solves are limited to {limit} vertices, map has {n}")]
    RationalTooLarge { n: usize, limit: usize },
    #[error("vertex {0} missing or on the boundary")]
    VertexMissing(usize),
}

pub const RATIONAL_VERTEX_LIMIT: usize = 2000;
pub const CG_RELATIVE_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Iterative,
    Rational,
}

/// A rooted map as an electrical network: unit conductance everywhere,
/// root edge excluded from conduction.
#[derive(Debug, Clone)]
pub struct Network {
    pub map: RootedMap,
    pub s: VertexId,
    pub t: VertexId,
    pub root_edge: EdgeId,
    /// Non-root incident (neighbor, edge) pairs per vertex, one entry per
    /// dart, so parallel edges keep their multiplicity.
    pub adj: Vec<Vec<(VertexId, EdgeId)>>,
    /// Vertex degrees counting the root edge.
    pub deg_with_root: Vec<usize>,
}

impl Network {
    /// Strict constructor: connected, simple, interior nonempty and
    /// connected.
    pub fn new(map: RootedMap) -> Result<Self, ElectricError> {
        if !combmap::check_squarable(&map) {
            return Err(ElectricError::NotSquarable);
        }
        Ok(Self::build(map))
    }

    /// Multigraph-tolerant constructor used when re-squaring maps
    /// reconstructed from tilings and for dual networks. Requires a
    /// connected map with a non-loop root and every non-pole vertex
    /// reachable from a pole without the root edge, which keeps the
    /// reduced system nonsingular. The interior may be empty.
    pub fn new_permissive(map: RootedMap) -> Result<Self, ElectricError> {
        if !map.map.is_connected() || map.root_tail() == map.root_head() {
            return Err(ElectricError::NotSquarable);
        }
        let net = Self::build(map);
        let nv = net.map.map.vertex_count();
        let mut seen = vec![false; nv];
        let mut stack = vec![net.s, net.t];
        seen[net.s] = true;
        seen[net.t] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &net.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|&x| !x) {
            return Err(ElectricError::SingularSystem);
        }
        Ok(net)
    }

    fn build(map: RootedMap) -> Self {
        let g = &map.map;
        let s = map.root_tail();
        let t = map.root_head();
        let root_edge = g.edge_of(map.root_dart);
        let nv = g.vertex_count();
        let mut adj = vec![Vec::new(); nv];
        let mut deg_with_root = vec![0; nv];
        for d in 0..g.dart_count() {
            deg_with_root[g.tail(d)] += 1;
            if g.edge_of(d) != root_edge {
                adj[g.tail(d)].push((g.head(d), g.edge_of(d)));
            }
        }
        Network {
            map,
            s,
            t,
            root_edge,
            adj,
            deg_with_root,
        }
    }

    pub fn interior(&self) -> Vec<VertexId> {
        (0..self.map.map.vertex_count())
            .filter(|&v| v != self.s && v != self.t)
            .collect()
    }
}

/// Solved vertex potentials, with solver metadata. `exact` is present in
/// rational mode; `values` is always filled.
#[derive(Debug, Clone, Serialize)]
pub struct Potentials {
    pub values: Vec<f64>,
    #[serde(skip)]
    pub exact: Option<Vec<BigRational>>,
    pub mode: SolveMode,
    pub solver_residual: f64,
    pub harmonic_residual: f64,
    pub iterations: usize,
}

pub fn solve_potentials(net: &Network, mode: SolveMode) -> Result<Potentials, ElectricError> {
    let nv = net.map.map.vertex_count();
    let interior = net.interior();
    let mut index = vec![usize::MAX; nv];
    for (i, &v) in interior.iter().enumerate() {
        index[v] = i;
    }
    let (values, exact, solver_residual, iterations) = match mode {
        SolveMode::Iterative => {
            let (x, res, it) = cg_solve(net, &interior, &index)?;
            (assemble(net, &interior, &x), None, res, it)
        }
        SolveMode::Rational => {
            if nv > RATIONAL_VERTEX_LIMIT {
                return Err(ElectricError::RationalTooLarge {
                    n: nv,
                    limit: RATIONAL_VERTEX_LIMIT,
                });
            }
            let x = bareiss_solve(net, &interior, &index)?;
            let xf: Vec<f64> = x.iter().map(|r| r.to_f64().unwrap()).collect();
            let mut exact = vec![BigRational::zero(); nv];
            exact[net.s] = BigRational::one();
            for (i, &v) in interior.iter().enumerate() {
                exact[v] = x[i].clone();
            }
            (assemble(net, &interior, &xf), Some(exact), 0.0, 0)
        }
    };
    let mut harmonic_residual: f64 = 0.0;
    for &v in &interior {
        let deg = net.adj[v].len() as f64;
        let mean: f64 = net.adj[v].iter().map(|&(w, _)| values[w]).sum::<f64>() / deg;
        harmonic_residual = harmonic_residual.max((values[v] - mean).abs());
    }
    assert!(
        values.iter().all(|&p| (-1e-9..=1.0 + 1e-9).contains(&p)),
        "maximum principle violated"
    );
    Ok(Potentials {
        values,
        exact,
        mode,
        solver_residual,
        harmonic_residual,
        iterations,
    })
}

fn assemble(net: &Network, interior: &[VertexId], x: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; net.map.map.vertex_count()];
    p[net.s] = 1.0;
    for (i, &v) in interior.iter().enumerate() {
        p[v] = x[i];
    }
    p
}

/// Jacobi-preconditioned conjugate gradient on the reduced Laplacian.
fn cg_solve(
    net: &Network,
    interior: &[VertexId],
    index: &[usize],
) -> Result<(Vec<f64>, f64, usize), ElectricError> {
    let k = interior.len();
    if k == 0 {
        return Ok((Vec::new(), 0.0, 0));
    }
    let diag: Vec<f64> = interior.iter().map(|&v| net.adj[v].len() as f64).collect();
    let neigh: Vec<Vec<usize>> = interior
        .iter()
        .map(|&v| {
            net.adj[v]
                .iter()
                .filter(|&&(w, _)| index[w] != usize::MAX)
                .map(|&(w, _)| index[w])
                .collect()
        })
        .collect();
    let b: Vec<f64> = interior
        .iter()
        .map(|&v| net.adj[v].iter().filter(|&&(w, _)| w == net.s).count() as f64)
        .collect();
    let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok((vec![0.0; k], 0.0, 0));
    }
    let apply = |p: &[f64], out: &mut Vec<f64>| {
        for i in 0..k {
            let mut acc = diag[i] * p[i];
            for &j in &neigh[i] {
                acc -= p[j];
            }
            out[i] = acc;
        }
    };
    let mut x = vec![0.0; k];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; k];
    let cap = 50 * net.map.map.vertex_count();
    for it in 1..=cap {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..k {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm / bnorm <= CG_RELATIVE_RESIDUAL {
            return Ok((x, rnorm / bnorm, it));
        }
        for i in 0..k {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..k {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(ElectricError::NoConvergence)
}

/// Fraction-free elimination over integers, rational back-substitution.
fn bareiss_solve(
    net: &Network,
    interior: &[VertexId],
    index: &[usize],
) -> Result<Vec<BigRational>, ElectricError> {
    let k = interior.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut a: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); k + 1]; k];
    for (i, &v) in interior.iter().enumerate() {
        a[i][i] = BigInt::from(net.adj[v].len());
        for &(w, _) in &net.adj[v] {
            if index[w] != usize::MAX {
                a[i][index[w]] -= 1;
            } else if w == net.s {
                a[i][k] += 1;
            }
        }
    }
    let mut prev = BigInt::one();
    for col in 0..k {
        if a[col][col].is_zero() {
            let swap = (col + 1..k).find(|&r| !a[r][col].is_zero());
            match swap {
                Some(r) => a.swap(col, r),
                None => return Err(ElectricError::SingularSystem),
            }
        }
        for row in col + 1..k {
            for j in col + 1..=k {
                let num = &a[row][j] * &a[col][col] - &a[row][col] * &a[col][j];
                a[row][j] = num / &prev;
            }
            a[row][col] = BigInt::zero();
        }
        prev = a[col][col].clone();
    }
    let mut x = vec![BigRational::zero(); k];
    for row in (0..k).rev() {
        let mut acc = BigRational::from(a[row][k].clone());
        for j in row + 1..k {
            acc -= BigRational::from(a[row][j].clone()) * &x[j];
        }
        x[row] = acc / BigRational::from(a[row][row].clone());
    }
    Ok(x)
}

/// Total current with both conservation forms. `value` is the current out
/// of the source through non-root edges; on simple maps it coincides with
/// the neighbor-sum form.
#[derive(Debug, Clone, Serialize)]
pub struct Lambda {
    pub value: f64,
    pub form_neighbor_sum: f64,
    pub form_degree: f64,
    #[serde(skip)]
    pub exact: Option<BigRational>,
}

pub fn total_current(net: &Network, p: &Potentials) -> Lambda {
    let form_neighbor_sum: f64 = net.adj[net.s]
        .iter()
        .filter(|&&(w, _)| w != net.t)
        .map(|&(w, _)| 1.0 - p.values[w])
        .sum();
    let form_degree: f64 = (net.deg_with_root[net.s] as f64 - 1.0)
        - net.adj[net.s]
            .iter()
            .map(|&(w, _)| p.values[w])
            .sum::<f64>();
    let exact = p.exact.as_ref().map(|pe| {
        let mut acc = BigRational::zero();
        for &(w, _) in &net.adj[net.s] {
            acc += BigRational::one() - &pe[w];
        }
        acc
    });
    Lambda {
        value: form_degree,
        form_neighbor_sum,
        form_degree,
        exact,
    }
}

/// Signed current per dart (tail potential minus head potential; zero on
/// the root edge), with the worst conservation residual over interior
/// vertices.
#[derive(Debug, Clone, Serialize)]
pub struct Flow {
    pub dart_current: Vec<f64>,
    pub kirchhoff_residual: f64,
    pub source_out: f64,
}

pub fn edge_currents(net: &Network, p: &Potentials) -> Flow {
    let g = &net.map.map;
    let mut dart_current = vec![0.0; g.dart_count()];
    for d in 0..g.dart_count() {
        if g.edge_of(d) != net.root_edge {
            dart_current[d] = p.values[g.tail(d)] - p.values[g.head(d)];
        }
    }
    let mut kirchhoff_residual: f64 = 0.0;
    for v in net.interior() {
        let net_out: f64 = net.adj[v]
            .iter()
            .map(|&(w, _)| p.values[v] - p.values[w])
            .sum();
        kirchhoff_residual = kirchhoff_residual.max(net_out.abs());
    }
    let source_out: f64 = net.adj[net.s]
        .iter()
        .map(|&(w, _)| 1.0 - p.values[w])
        .sum();
    Flow {
        dart_current,
        kirchhoff_residual,
        source_out,
    }
}

/// Potentials of the dual network, normalized and rescaled. The dual root
/// is the same dart, so the dual source is the face to the right of the
/// primal root; it is held at the total current, the face to the left at
/// zero. `x_by_face` is indexed by primal face ids.
#[derive(Debug, Clone)]
pub struct DualPotentials {
    pub dual_net: Network,
    pub xhat: Potentials,
    pub x_by_face: Vec<f64>,
    pub x_exact_by_face: Option<Vec<BigRational>>,
    pub primal_faces: FaceIndex,
}

pub fn dual_potentials(
    net: &Network,
    lambda: &Lambda,
    mode: SolveMode,
) -> Result<DualPotentials, ElectricError> {
    let dual_map = dual(&net.map);
    let dual_net = Network::new_permissive(dual_map)?;
    let xhat = solve_potentials(&dual_net, mode)?;
    let primal_faces = faces(&net.map.map);
    let g = &net.map.map;
    let mut x_by_face = vec![f64::NAN; primal_faces.face_count()];
    for d in 0..g.dart_count() {
        let f = primal_faces.face_of[g.twin(d)];
        let dv = dual_net.map.map.tail(d);
        let x = lambda.value * xhat.values[dv];
        debug_assert!(x_by_face[f].is_nan() || (x_by_face[f] - x).abs() < 1e-12);
        x_by_face[f] = x;
    }
    let x_exact_by_face = match (&xhat.exact, &lambda.exact) {
        (Some(xe), Some(le)) => {
            let mut out = vec![BigRational::zero(); primal_faces.face_count()];
            for d in 0..g.dart_count() {
                let f = primal_faces.face_of[g.twin(d)];
                out[f] = le * &xe[dual_net.map.map.tail(d)];
            }
            Some(out)
        }
        _ => None,
    };
    Ok(DualPotentials {
        dual_net,
        xhat,
        x_by_face,
        x_exact_by_face,
        primal_faces,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub walks: u64,
}

/// Empirical probability that simple random walk from `v` (root edge
/// excluded from transitions) hits the source before the sink. Walk w uses
/// ChaCha8 stream w of the given seed, so estimates are reproducible and
/// independent of scheduling.
pub fn mc_hitting_oracle(net: &Network, v: VertexId, walks: u64, seed: u64) -> McEstimate {
    if v == net.s || v == net.t {
        return McEstimate {
            estimate: if v == net.s { 1.0 } else { 0.0 },
            std_error: 0.0,
            walks,
        };
    }
    let hits: u64 = (0..walks)
        .into_par_iter()
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(w);
            let mut cur = v;
            loop {
                let nbrs = &net.adj[cur];
                cur = nbrs[rng.gen_range(0..nbrs.len())].0;
                if cur == net.s {
                    return 1u64;
                }
                if cur == net.t {
                    return 0u64;
                }
            }
        })
        .sum();
    let p = hits as f64 / walks as f64;
    McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / walks as f64).sqrt(),
        walks,
    }
}

/// How to pick the probed vertex in each map of a sequence.
#[derive(Debug, Clone)]
pub enum VertexChoice {
    /// Explicit vertex id per map.
    Fixed(Vec<VertexId>),
    /// The head of the rotation successor of the root dart: a neighbor of
    /// the source that exists in every squarable map and is preserved by
    /// local convergence of the root neighborhood.
    RootNext,
}

/// Potential at a chosen vertex across a sequence of rooted maps sharing
/// the source/sink boundary, for convergence diagnostics.
pub fn potential_convergence_probe(
    maps: &[RootedMap],
    choice: &VertexChoice,
) -> Result<Vec<f64>, ElectricError> {
    let mut out = Vec::with_capacity(maps.len());
    for (i, m) in maps.iter().enumerate() {
        let net = Network::new(m.clone())?;
        let p = solve_potentials(&net, SolveMode::Iterative)?;
        let v = match choice {
            VertexChoice::Fixed(vs) => {
                let v = *vs.get(i).ok_or(ElectricError::VertexMissing(i))?;
                if v >= p.values.len() || v == net.s || v == net.t {
                    return Err(ElectricError::VertexMissing(v));
                }
                v
            }
            VertexChoice::RootNext => m.map.head(m.map.next(m.root_dart)),
        };
        out.push(p.values[v]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn close(a: f64, b: f64, eps: f64) -> bool {
        (a - b).abs() <= eps
    }

    #[test]
    fn p3_hand_solution() {
        let net = Network::new(fixtures::p3()).unwrap();
        for mode in [SolveMode::Iterative, SolveMode::Rational] {
            let p = solve_potentials(&net, mode).unwrap();
            let a = net.interior()[0];
            assert!(close(p.values[a], 0.5, 1e-12));
            let lam = total_current(&net, &p);
            assert!(close(lam.value, 0.5, 1e-12));
            assert!(close(lam.form_neighbor_sum, lam.form_degree, 1e-12));
            let flow = edge_currents(&net, &p);
            let mags: Vec<f64> = flow
                .dart_current
                .iter()
                .map(|c| c.abs())
                .filter(|&c| c > 0.0)
                .collect();
            assert!(mags.iter().all(|&c| close(c, 0.5, 1e-12)));
            assert!(close(flow.source_out, lam.value, 1e-12));
        }
    }

    #[test]
    fn k4_hand_solution() {
        let net = Network::new(fixtures::k4()).unwrap();
        let p = solve_potentials(&net, SolveMode::Rational).unwrap();
        for &v in &net.interior() {
            assert!(close(p.values[v], 0.5, 1e-15));
        }
        let lam = total_current(&net, &p);
        assert!(close(lam.value, 1.0, 1e-12));
        assert_eq!(
            lam.exact.as_ref().unwrap(),
            &BigRational::from(BigInt::from(1))
        );
        // the a-b edge carries no current
        let flow = edge_currents(&net, &p);
        let g = &net.map.map;
        let ab = g.edge_of(10);
        let d = (0..g.dart_count()).find(|&d| g.edge_of(d) == ab).unwrap();
        assert_eq!(flow.dart_current[d], 0.0);
        assert!(flow.kirchhoff_residual < 1e-12);
    }

    #[test]
    fn modes_agree_and_duals_solve() {
        for m in [fixtures::p3(), fixtures::k4(), fixtures::subdivided_bridge()] {
            let net = Network::new(m).unwrap();
            let pi = solve_potentials(&net, SolveMode::Iterative).unwrap();
            let pr = solve_potentials(&net, SolveMode::Rational).unwrap();
            for v in 0..pi.values.len() {
                assert!(close(pi.values[v], pr.values[v], 1e-10));
            }
            assert_eq!(pr.harmonic_residual, 0.0);
            assert!(pi.harmonic_residual < 1e-10);
            let lam = total_current(&net, &pr);
            let dp = dual_potentials(&net, &lam, SolveMode::Rational).unwrap();
            // per-edge square side from dual differences equals the primal
            // current
            let g = &net.map.map;
            for d in 0..g.dart_count() {
                if g.edge_of(d) == net.root_edge {
                    continue;
                }
                let fl = dp.primal_faces.face_of[d];
                let fr = dp.primal_faces.face_of[g.twin(d)];
                let side_dual = (dp.x_by_face[fl] - dp.x_by_face[fr]).abs();
                let side_primal = (pr.values[g.tail(d)] - pr.values[g.head(d)]).abs();
                assert!(close(side_dual, side_primal, 1e-10));
            }
        }
    }

    #[test]
    fn p3_dual_extents() {
        let net = Network::new(fixtures::p3()).unwrap();
        let p = solve_potentials(&net, SolveMode::Rational).unwrap();
        let lam = total_current(&net, &p);
        let dp = dual_potentials(&net, &lam, SolveMode::Rational).unwrap();
        let mut xs: Vec<f64> = dp.x_by_face.clone();
        xs.sort_by(f64::total_cmp);
        assert!(close(xs[0], 0.0, 1e-15));
        assert!(close(xs[1], 0.5, 1e-15));
    }

    #[test]
    fn mc_oracle_matches_solver() {
        let net = Network::new(fixtures::p3()).unwrap();
        let a = net.interior()[0];
        let est = mc_hitting_oracle(&net, a, 100_000, 7);
        assert!((est.estimate - 0.5).abs() <= 3.0 * est.std_error);
        assert_eq!(mc_hitting_oracle(&net, net.s, 10, 0).estimate, 1.0);
        let net4 = Network::new(fixtures::k4()).unwrap();
        let v = net4.interior()[0];
        let est4 = mc_hitting_oracle(&net4, v, 100_000, 8);
        assert!((est4.estimate - 0.5).abs() <= 3.0 * est4.std_error);
    }

    #[test]
    fn probe_constant_sequence() {
        let maps = vec![fixtures::k4(), fixtures::k4(), fixtures::k4()];
        let seq = potential_convergence_probe(&maps, &VertexChoice::RootNext).unwrap();
        assert!(seq.windows(2).all(|w| close(w[0], w[1], 1e-12)));
        assert!(potential_convergence_probe(
            &maps,
            &VertexChoice::Fixed(vec![0, 0])
        )
        .is_err());
    }

    #[test]
    fn ladder_truncations_converge() {
        // nested family with the same boundary: successive changes of the
        // potential at the source's rail neighbor shrink to zero
        let mut values = Vec::new();
        for k in 2..=8 {
            let m = fixtures::ladder(k);
            let net = Network::new(m.clone()).unwrap();
            let p = solve_potentials(&net, SolveMode::Rational).unwrap();
            let u1 = (0..m.map.dart_count())
                .filter(|&d| m.map.tail(d) == net.s && m.map.edge_of(d) != net.root_edge)
                .map(|d| m.map.head(d))
                .next()
                .unwrap();
            values.push(p.values[u1]);
        }
        let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
        assert!(*diffs.last().unwrap() < 1e-3);
    }

    #[test]
    fn theta_is_rejected_strict_but_not_permissive() {
        assert!(matches!(
            Network::new(fixtures::theta()),
            Err(ElectricError::NotSquarable)
        ));
        assert!(Network::new_permissive(fixtures::theta()).is_ok());
    }
}
