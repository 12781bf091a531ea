//! Squared-rectangle layout of a rooted map and geometric checks on it.
//!
//! Every non-root edge becomes a square: its side is the current through
//! the edge, its top edge sits at the larger endpoint potential, and its
//! left edge at the smaller of the two dual potentials of the faces it
//! separates. The squares tile [0, λ] × [0, 1]. Horizontal primal lines
//! (one per vertex) and vertical facial lines (one per face) record where
//! squares meet.

use crate::combmap::{canonical_code, CombinatorialMap, EdgeId, FaceId, RootedMap, VertexId};

use crate::electric::{
    dual_potentials, solve_potentials, total_current, DualPotentials, ElectricError, Network,
    Potentials, SolveMode,
};
use crate::tutte::is_3_connected;
use crate::{EPS_AREA_REL, EPS_CONTACT, EPS_CURRENT};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SquaringError {
    #[error("invalid tiling: {0}")]
    InvalidTiling(String),
    #[error("invalid squaring JSON: {0}")]
    InvalidJson(String),
}

/// One square of a tiling; `(x, y)` is the top-left corner, y increasing
/// upward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub edge: EdgeId,
    pub x: f64,
    pub y: f64,
    pub side: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimalLine {
    pub vertex: VertexId,
    pub y: f64,
    pub x0: f64,
    pub x1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacialLine {
    pub face: FaceId,
    pub x: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Debug, Clone)]
pub struct ExactSquare {
    pub edge: EdgeId,
    pub x: BigRational,
    pub y: BigRational,
    pub side: BigRational,
}

#[derive(Debug, Clone, Default)]
pub struct ExactSquaring {
    pub lambda: BigRational,
    pub squares: Vec<ExactSquare>,
}

/// The full layout: rectangle width, squares, and both line families.
/// `exact` is carried when the potentials were solved exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Squaring {
    pub lambda: f64,
    pub squares: Vec<Square>,
    pub primal_lines: Vec<PrimalLine>,
    pub facial_lines: Vec<FacialLine>,
    #[serde(skip)]
    pub exact: Option<ExactSquaring>,
}

impl Squaring {
    pub fn is_degenerate(&self, i: usize) -> bool {
        match &self.exact {
            Some(e) => e.squares[i].side.is_zero(),
            None => self.squares[i].side < EPS_CURRENT,
        }
    }

    pub fn nondegenerate(&self) -> Vec<&Square> {
        (0..self.squares.len())
            .filter(|&i| !self.is_degenerate(i))
            .map(|i| &self.squares[i])
            .collect()
    }
}

/// Assemble the squaring from solved primal and dual potentials.
pub fn build_squaring(net: &Network, pot: &Potentials, dual: &DualPotentials) -> Squaring {
    let g = &net.map.map;
    let fi = &dual.primal_faces;
    let mut squares = Vec::with_capacity(g.edge_count() - 1);
    let mut exact_squares = Vec::new();
    let exact_in = pot.exact.as_ref().zip(dual.x_exact_by_face.as_ref());
    for d in 0..g.dart_count() {
        if d > g.twin(d) || g.edge_of(d) == net.root_edge {
            continue;
        }
        let (u, v) = (g.tail(d), g.head(d));
        let (fl, fr) = (fi.face_of[d], fi.face_of[g.twin(d)]);
        let side = (pot.values[u] - pot.values[v]).abs();
        let y = pot.values[u].max(pot.values[v]);
        let x = dual.x_by_face[fl].min(dual.x_by_face[fr]);
        squares.push(Square {
            edge: g.edge_of(d),
            x,
            y,
            side,
        });
        if let Some((pe, xe)) = exact_in {
            let side = (&pe[u] - &pe[v]).abs();
            let y = pe[u].clone().max(pe[v].clone());
            let x = xe[fl].clone().min(xe[fr].clone());
            exact_squares.push(ExactSquare {
                edge: g.edge_of(d),
                x,
                y,
                side,
            });
        }
    }
    let lambda_struct = total_current(net, pot);
    let lambda = lambda_struct.value;

    let mut primal_lines = Vec::with_capacity(g.vertex_count());
    let by_edge: HashMap<EdgeId, &Square> = squares.iter().map(|s| (s.edge, s)).collect();
    for v in 0..g.vertex_count() {
        let mut x0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y = 0.0;
        for d in 0..g.dart_count() {
            if g.tail(d) != v {
                continue;
            }
            y = pot.values[v];
            if g.edge_of(d) == net.root_edge {
                continue;
            }
            let s = by_edge[&g.edge_of(d)];
            x0 = x0.min(s.x);
            x1 = x1.max(s.x + s.side);
        }
        primal_lines.push(PrimalLine { vertex: v, y, x0, x1 });
    }
    let mut facial_lines = Vec::with_capacity(fi.face_count());
    for (f, cycle) in fi.faces.iter().enumerate() {
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for &d in cycle {
            if g.edge_of(d) == net.root_edge {
                continue;
            }
            let s = by_edge[&g.edge_of(d)];
            y0 = y0.min(s.y - s.side);
            y1 = y1.max(s.y);
        }
        facial_lines.push(FacialLine {
            face: f,
            x: dual.x_by_face[f],
            y0,
            y1,
        });
    }
    let exact = exact_in.map(|_| ExactSquaring {
        lambda: lambda_struct.exact.clone().expect("exact lambda"),
        squares: exact_squares,
    });
    Squaring {
        lambda,
        squares,
        primal_lines,
        facial_lines,
        exact,
    }
}

/// Solve a rooted map end to end and return the squaring (strict
/// preconditions).
pub fn square_map(g: &RootedMap, mode: SolveMode) -> Result<Squaring, ElectricError> {
    let net = Network::new(g.clone())?;
    square_network(&net, mode)
}

pub fn square_network(net: &Network, mode: SolveMode) -> Result<Squaring, ElectricError> {
    let pot = solve_potentials(net, mode)?;
    let lam = total_current(net, &pot);
    let dp = dual_potentials(net, &lam, mode)?;
    Ok(build_squaring(net, &pot, &dp))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TilingReport {
    pub max_overlap: f64,
    pub area_error: f64,
    pub coverage_deficit: f64,
    pub out_of_bounds: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Check disjointness, the area identity, and coverage of
/// [0, λ] × [0, 1].
pub fn validate_tiling(s: &Squaring) -> TilingReport {
    let rect = (0.0, s.lambda, 0.0, 1.0);
    let quads: Vec<(f64, f64, f64)> = s
        .nondegenerate()
        .iter()
        .map(|q| (q.x, q.y, q.side))
        .collect();
    let (max_overlap, coverage_deficit, out_of_bounds) = rect_tiling_errors(&quads, rect);
    let area_sum: f64 = s.squares.iter().map(|q| q.side * q.side).sum();
    let area_error = (area_sum - s.lambda).abs();
    let tolerance = EPS_AREA_REL * s.lambda;
    let pass = max_overlap <= tolerance
        && area_error <= tolerance
        && coverage_deficit <= tolerance
        && out_of_bounds <= tolerance;
    TilingReport {
        max_overlap,
        area_error,
        coverage_deficit,
        out_of_bounds,
        tolerance,
        pass,
    }
}

/// Shared tiling arithmetic: returns (max pairwise overlap area, uncovered
/// area of the rectangle, total square area outside the rectangle).
/// Coverage uses a sweep over maximal y-slabs, so it is exact up to float
/// arithmetic.
fn rect_tiling_errors(
    squares: &[(f64, f64, f64)],
    rect: (f64, f64, f64, f64),
) -> (f64, f64, f64) {
    let (rx0, rx1, ry0, ry1) = rect;
    let mut max_overlap: f64 = 0.0;
    for i in 0..squares.len() {
        for j in i + 1..squares.len() {
            let (xi, yi, si) = squares[i];
            let (xj, yj, sj) = squares[j];
            let w = (xi + si).min(xj + sj) - xi.max(xj);
            let h = yi.min(yj) - (yi - si).max(yj - sj);
            if w > 0.0 && h > 0.0 {
                max_overlap = max_overlap.max(w * h);
            }
        }
    }
    let mut ys: Vec<f64> = Vec::with_capacity(2 * squares.len() + 2);
    for &(_, y, s) in squares {
        ys.push(y);
        ys.push(y - s);
    }
    ys.push(ry0);
    ys.push(ry1);
    ys.retain(|&y| (ry0..=ry1).contains(&y));
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut covered = 0.0;
    for w in ys.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mut spans: Vec<(f64, f64)> = squares
            .iter()
            .filter(|&&(_, y, s)| y - s <= lo && hi <= y)
            .map(|&(x, _, s)| (x.max(rx0), (x + s).min(rx1)))
            .filter(|&(a, b)| b > a)
            .collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut width = 0.0;
        let mut cur: Option<(f64, f64)> = None;
        for (a, b) in spans {
            match cur {
                None => cur = Some((a, b)),
                Some((ca, cb)) => {
                    if a <= cb {
                        cur = Some((ca, cb.max(b)));
                    } else {
                        width += cb - ca;
                        cur = Some((a, b));
                    }
                }
            }
        }
        if let Some((ca, cb)) = cur {
            width += cb - ca;
        }
        covered += width * (hi - lo);
    }
    let rect_area = (rx1 - rx0) * (ry1 - ry0);
    let coverage_deficit = (rect_area - covered).max(0.0);
    let total: f64 = squares.iter().map(|&(_, _, s)| s * s).sum();
    let inside: f64 = squares
        .iter()
        .map(|&(x, y, s)| {
            let w = (x + s).min(rx1) - x.max(rx0);
            let h = y.min(ry1) - (y - s).max(ry0);
            if w > 0.0 && h > 0.0 {
                w * h
            } else {
                0.0
            }
        })
        .sum();
    let out_of_bounds = (total - inside).max(0.0);
    (max_overlap, coverage_deficit, out_of_bounds)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RotationReport {
    pub max_square_error: f64,
    pub lambda_product_error: f64,
    pub pass: bool,
}

/// Verify that the squaring of the dual equals the primal squaring rotated
/// a quarter turn counterclockwise, rescaled to height one with the bottom
/// left corner at the origin. Compared square by square; the shared dart
/// numbering of map and dual makes edge ids line up.
pub fn check_duality_rotation(
    g: &RootedMap,
    mode: SolveMode,
) -> Result<RotationReport, ElectricError> {
    let net = Network::new(g.clone())?;
    let s1 = square_network(&net, mode)?;
    let dual_net = Network::new_permissive(crate::combmap::dual(g))?;
    let s2 = square_network(&dual_net, mode)?;
    let lam = s1.lambda;
    let by_edge: HashMap<EdgeId, &Square> = s2.squares.iter().map(|q| (q.edge, q)).collect();
    let mut max_err: f64 = 0.0;
    for q in &s1.squares {
        let want_x = (1.0 - q.y) / lam;
        let want_y = (q.x + q.side) / lam;
        let want_side = q.side / lam;
        let got = by_edge[&q.edge];
        max_err = max_err
            .max((got.x - want_x).abs())
            .max((got.y - want_y).abs())
            .max((got.side - want_side).abs());
    }
    let lambda_product_error = (s1.lambda * s2.lambda - 1.0).abs();
    Ok(RotationReport {
        max_square_error: max_err,
        lambda_product_error,
        pass: max_err <= 1e-8 && lambda_product_error <= 1e-8,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LineReport {
    pub three_connected: bool,
    pub degenerate_primal: Vec<VertexId>,
    pub degenerate_facial: Vec<FaceId>,
    pub all_nondegenerate: bool,
}

/// Flag primal and facial lines of zero length. With exact potentials the
/// test is exact; otherwise a coincidence tolerance is used. For maps that
/// are not 3-connected the result is informational (degenerate lines may
/// legitimately occur).
pub fn check_nondegenerate_lines(
    g: &RootedMap,
    mode: SolveMode,
) -> Result<LineReport, ElectricError> {
    let net = Network::new(g.clone())?;
    let pot = solve_potentials(&net, mode)?;
    let lam = total_current(&net, &pot);
    let dp = dual_potentials(&net, &lam, mode)?;
    let s = build_squaring(&net, &pot, &dp);
    let mut degenerate_primal = Vec::new();
    let mut degenerate_facial = Vec::new();
    match &s.exact {
        Some(e) => {
            let gm = &g.map;
            let by_edge: HashMap<EdgeId, &ExactSquare> =
                e.squares.iter().map(|q| (q.edge, q)).collect();
            for v in 0..gm.vertex_count() {
                let mut ext: Option<(BigRational, BigRational)> = None;
                for d in 0..gm.dart_count() {
                    if gm.tail(d) != v || gm.edge_of(d) == net.root_edge {
                        continue;
                    }
                    let q = by_edge[&gm.edge_of(d)];
                    let hi = &q.x + &q.side;
                    ext = Some(match ext {
                        None => (q.x.clone(), hi),
                        Some((lo, old_hi)) => (lo.min(q.x.clone()), old_hi.max(hi)),
                    });
                }
                if let Some((lo, hi)) = ext {
                    if lo == hi {
                        degenerate_primal.push(v);
                    }
                }
            }
            for (f, cycle) in dp.primal_faces.faces.iter().enumerate() {
                let mut ext: Option<(BigRational, BigRational)> = None;
                for &d in cycle {
                    if gm.edge_of(d) == net.root_edge {
                        continue;
                    }
                    let q = by_edge[&gm.edge_of(d)];
                    let lo = &q.y - &q.side;
                    ext = Some(match ext {
                        None => (lo, q.y.clone()),
                        Some((old_lo, hi)) => (old_lo.min(lo), hi.max(q.y.clone())),
                    });
                }
                if let Some((lo, hi)) = ext {
                    if lo == hi {
                        degenerate_facial.push(f);
                    }
                }
            }
        }
        None => {
            for l in &s.primal_lines {
                if l.x1 - l.x0 < EPS_CONTACT {
                    degenerate_primal.push(l.vertex);
                }
            }
            for l in &s.facial_lines {
                if l.y1 - l.y0 < EPS_CONTACT {
                    degenerate_facial.push(l.face);
                }
            }
        }
    }
    let all = degenerate_primal.is_empty() && degenerate_facial.is_empty();
    Ok(LineReport {
        three_connected: is_3_connected(g),
        degenerate_primal,
        degenerate_facial,
        all_nondegenerate: all,
    })
}

// ---------------------------------------------------------------------
// Hausdorff distance between squarings
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Seg {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Seg {
    fn horizontal(&self) -> bool {
        self.y0 == self.y1
    }
    fn len(&self) -> f64 {
        (self.x1 - self.x0).abs() + (self.y1 - self.y0).abs()
    }
    fn dist_point(&self, px: f64, py: f64) -> f64 {
        let cx = px.clamp(self.x0.min(self.x1), self.x0.max(self.x1));
        let cy = py.clamp(self.y0.min(self.y1), self.y0.max(self.y1));
        ((px - cx) * (px - cx) + (py - cy) * (py - cy)).sqrt()
    }
}

fn squaring_segments(s: &Squaring) -> Vec<Seg> {
    let mut out = Vec::with_capacity(4 * s.squares.len());
    for (i, q) in s.squares.iter().enumerate() {
        if s.is_degenerate(i) {
            out.push(Seg {
                x0: q.x,
                y0: q.y,
                x1: q.x,
                y1: q.y,
            });
            continue;
        }
        let (x0, x1, yt, yb) = (q.x, q.x + q.side, q.y, q.y - q.side);
        out.push(Seg { x0, y0: yt, x1, y1: yt });
        out.push(Seg { x0, y0: yb, x1, y1: yb });
        out.push(Seg { x0, y0: yb, x1: x0, y1: yt });
        out.push(Seg { x0: x1, y0: yb, x1, y1: yt });
    }
    out
}

struct SegGrid {
    cell: f64,
    ox: f64,
    oy: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    segs: Vec<Seg>,
}

impl SegGrid {
    fn build(segs: Vec<Seg>) -> SegGrid {
        let ox = segs.iter().map(|s| s.x0.min(s.x1)).fold(f64::INFINITY, f64::min);
        let oy = segs.iter().map(|s| s.y0.min(s.y1)).fold(f64::INFINITY, f64::min);
        let mx = segs.iter().map(|s| s.x0.max(s.x1)).fold(f64::NEG_INFINITY, f64::max);
        let my = segs.iter().map(|s| s.y0.max(s.y1)).fold(f64::NEG_INFINITY, f64::max);
        let cell = ((mx - ox).max(my - oy) / 48.0).max(1e-9);
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, s) in segs.iter().enumerate() {
            let gx0 = (((s.x0.min(s.x1)) - ox) / cell).floor() as i64;
            let gx1 = (((s.x0.max(s.x1)) - ox) / cell).floor() as i64;
            let gy0 = (((s.y0.min(s.y1)) - oy) / cell).floor() as i64;
            let gy1 = (((s.y0.max(s.y1)) - oy) / cell).floor() as i64;
            for gx in gx0..=gx1 {
                for gy in gy0..=gy1 {
                    cells.entry((gx, gy)).or_default().push(i);
                }
            }
        }
        SegGrid {
            cell,
            ox,
            oy,
            cells,
            segs,
        }
    }

    fn nearest(&self, px: f64, py: f64) -> f64 {
        let gx = ((px - self.ox) / self.cell).floor() as i64;
        let gy = ((py - self.oy) / self.cell).floor() as i64;
        let mut best = f64::INFINITY;
        let mut ring = 0i64;
        loop {
            if best < (ring - 1).max(0) as f64 * self.cell {
                return best;
            }
            let mut any_cell = false;
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    if let Some(ids) = self.cells.get(&(gx + dx, gy + dy)) {
                        any_cell = true;
                        for &i in ids {
                            best = best.min(self.segs[i].dist_point(px, py));
                        }
                    }
                }
            }
            let _ = any_cell;
            ring += 1;
            if ring > 100_000 {
                return best;
            }
        }
    }

    /// Segments within `radius` of the axis-parallel segment `a`.
    fn near_segment(&self, a: &Seg, radius: f64) -> Vec<usize> {
        let x0 = a.x0.min(a.x1) - radius;
        let x1 = a.x0.max(a.x1) + radius;
        let y0 = a.y0.min(a.y1) - radius;
        let y1 = a.y0.max(a.y1) + radius;
        let gx0 = ((x0 - self.ox) / self.cell).floor() as i64;
        let gx1 = ((x1 - self.ox) / self.cell).floor() as i64;
        let gy0 = ((y0 - self.oy) / self.cell).floor() as i64;
        let gy1 = ((y1 - self.oy) / self.cell).floor() as i64;
        let mut out = Vec::new();
        for gx in gx0..=gx1 {
            for gy in gy0..=gy1 {
                if let Some(ids) = self.cells.get(&(gx, gy)) {
                    out.extend_from_slice(ids);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Exact Hausdorff distance between the closed segment unions of two
/// squarings.
///
/// On every segment of one side, the distance to the other side is a lower
/// envelope of convex functions of the position. Its maximum over the
/// segment is attained at an endpoint or where two envelope branches
/// cross, so it suffices to split each segment where nearest-point regimes
/// change and solve the pairwise crossover equations (quadratics) in each
/// piece. A 1-Lipschitz bound prunes pieces that cannot improve on the
/// running maximum.
pub fn hausdorff_distance(a: &Squaring, b: &Squaring) -> f64 {
    let sa = squaring_segments(a);
    let sb = squaring_segments(b);
    let ga = SegGrid::build(sa.clone());
    let gb = SegGrid::build(sb.clone());
    directed_hausdorff(&sa, &gb).max(directed_hausdorff(&sb, &ga))
}

fn directed_hausdorff(from: &[Seg], to: &SegGrid) -> f64 {
    let mut best: f64 = 0.0;
    // seed with all endpoints so pruning has traction
    for s in from {
        best = best.max(to.nearest(s.x0, s.y0));
        best = best.max(to.nearest(s.x1, s.y1));
    }
    for s in from {
        best = best.max(max_dist_on_segment(s, to, best));
    }
    best
}

/// Maximum over a segment of the distance to the union, given a running
/// lower bound.
fn max_dist_on_segment(a: &Seg, grid: &SegGrid, best_so_far: f64) -> f64 {
    let len = a.len();
    let f0 = grid.nearest(a.x0, a.y0);
    let f1 = grid.nearest(a.x1, a.y1);
    let mut best = best_so_far.max(f0).max(f1);
    if len == 0.0 {
        return best;
    }
    // ceiling of the Lipschitz tent over the whole segment
    if (f0 + f1 + len) / 2.0 <= best {
        return best;
    }
    let radius = (f0.max(f1) + len) * 1.0001 + 1e-12;
    let near = grid.near_segment(a, radius);
    let horiz = a.horizontal();
    let (base, fixed) = if horiz {
        (a.x0.min(a.x1), a.y0)
    } else {
        (a.y0.min(a.y1), a.x0)
    };
    let point = |t: f64| -> (f64, f64) {
        if horiz {
            (base + t, fixed)
        } else {
            (fixed, base + t)
        }
    };
    // split positions: projections of endpoints of parallel neighbors
    let mut cuts = vec![0.0, len];
    for &i in &near {
        let s = &grid.segs[i];
        if s.horizontal() == horiz {
            let (c0, c1) = if horiz { (s.x0, s.x1) } else { (s.y0, s.y1) };
            for c in [c0, c1] {
                let t = c - base;
                if t > 0.0 && t < len {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        let (p0x, p0y) = point(t0);
        let (p1x, p1y) = point(t1);
        let g0 = grid.nearest(p0x, p0y);
        let g1 = grid.nearest(p1x, p1y);
        best = best.max(g0).max(g1);
        if (g0 + g1 + (t1 - t0)) / 2.0 <= best {
            continue;
        }
        // quadratic coefficients of squared distance to each contender
        let reach = g0.max(g1) + (t1 - t0);
        let tm = 0.5 * (t0 + t1);
        let (pmx, pmy) = point(tm);
        let mut quads: Vec<(f64, f64, f64)> = Vec::new();
        for &i in &near {
            let s = &grid.segs[i];
            if s.dist_point(pmx, pmy) > reach + (t1 - t0) {
                continue;
            }
            if s.horizontal() == horiz {
                // within this piece the nearest point is either tracking
                // (constant offset) or pinned at an endpoint
                let (lo, hi) = if horiz {
                    (s.x0.min(s.x1), s.x0.max(s.x1))
                } else {
                    (s.y0.min(s.y1), s.y0.max(s.y1))
                };
                let moving_mid = base + tm;
                let perp = if horiz { fixed - s.y0 } else { fixed - s.x0 };
                if moving_mid >= lo && moving_mid <= hi {
                    quads.push((0.0, 0.0, perp * perp));
                } else {
                    let pin = if moving_mid < lo { lo } else { hi };
                    // |(base + t) - pin|^2 + perp^2
                    quads.push((
                        1.0,
                        2.0 * (base - pin),
                        (base - pin) * (base - pin) + perp * perp,
                    ));
                }
            } else {
                // perpendicular neighbor: nearest point is a fixed point
                let (qx, qy) = {
                    let cx = pmx.clamp(s.x0.min(s.x1), s.x0.max(s.x1));
                    let cy = pmy.clamp(s.y0.min(s.y1), s.y0.max(s.y1));
                    (cx, cy)
                };
                let (m0, q_along, q_perp) = if horiz {
                    (base, qx, fixed - qy)
                } else {
                    (base, qy, fixed - qx)
                };
                quads.push((
                    1.0,
                    2.0 * (m0 - q_along),
                    (m0 - q_along) * (m0 - q_along) + q_perp * q_perp,
                ));
            }
        }
        let mut candidates = Vec::new();
        for i in 0..quads.len() {
            for j in i + 1..quads.len() {
                let (a2, a1, a0) = quads[i];
                let (b2, b1, b0) = quads[j];
                let (c2, c1, c0) = (a2 - b2, a1 - b1, a0 - b0);
                if c2.abs() < 1e-300 {
                    if c1.abs() > 1e-300 {
                        candidates.push(-c0 / c1);
                    }
                } else {
                    let disc = c1 * c1 - 4.0 * c2 * c0;
                    if disc >= 0.0 {
                        let r = disc.sqrt();
                        candidates.push((-c1 + r) / (2.0 * c2));
                        candidates.push((-c1 - r) / (2.0 * c2));
                    }
                }
            }
        }
        for t in candidates {
            if t > t0 && t < t1 {
                let (px, py) = point(t);
                best = best.max(grid.nearest(px, py));
            }
        }
    }
    best
}

// ---------------------------------------------------------------------
// Inverse construction: map from a tiling
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MapFromSquaring {
    pub map: RootedMap,
    /// Edge id of each input square (after dropping degenerate entries).
    pub square_edges: Vec<(Square, EdgeId)>,
    pub root_edge: EdgeId,
}

/// Build the rooted map of a tiling: one vertex per maximal horizontal
/// segment, one edge per square joining the segments bordering its top and
/// bottom, plus a root edge from the top boundary to the bottom boundary.
/// Squares touching at a point lie on one maximal segment, so zero-current
/// structure cannot be recovered; re-squaring reproduces the input for
/// finite maps.
pub fn map_from_squaring(input: &[Square]) -> Result<MapFromSquaring, SquaringError> {
    let squares: Vec<Square> = input
        .iter()
        .copied()
        .filter(|q| q.side >= EPS_CURRENT)
        .collect();
    if squares.is_empty() {
        return Err(SquaringError::InvalidTiling("no squares".into()));
    }
    let rx0 = squares.iter().map(|q| q.x).fold(f64::INFINITY, f64::min);
    let rx1 = squares
        .iter()
        .map(|q| q.x + q.side)
        .fold(f64::NEG_INFINITY, f64::max);
    let ry0 = squares
        .iter()
        .map(|q| q.y - q.side)
        .fold(f64::INFINITY, f64::min);
    let ry1 = squares.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max);
    let scale = (rx1 - rx0).max(ry1 - ry0);
    let tol = EPS_CONTACT * scale.max(1.0);
    let quads: Vec<(f64, f64, f64)> = squares.iter().map(|q| (q.x, q.y, q.side)).collect();
    let (overlap, deficit, outside) = rect_tiling_errors(&quads, (rx0, rx1, ry0, ry1));
    let area_tol = EPS_AREA_REL * scale.max(1.0) * scale.max(1.0);
    if overlap > area_tol || deficit > area_tol || outside > area_tol {
        return Err(SquaringError::InvalidTiling(format!(
            "overlap {overlap:.3e}, deficit {deficit:.3e}, outside {outside:.3e}"
        )));
    }

    // cluster the horizontal border levels
    let mut levels: Vec<f64> = squares
        .iter()
        .flat_map(|q| [q.y, q.y - q.side])
        .collect();
    levels.sort_by(f64::total_cmp);
    let mut reps: Vec<f64> = Vec::new();
    for &y in &levels {
        if reps.last().map_or(true, |&r| y - r > tol) {
            reps.push(y);
        }
    }
    let level_of = |y: f64| -> usize {
        let i = reps.partition_point(|&r| r < y - tol);
        debug_assert!(i < reps.len() && (reps[i] - y).abs() <= tol);
        i
    };

    // maximal segments per level
    #[derive(Clone)]
    struct SegV {
        x0: f64,
        x1: f64,
        below: Vec<usize>,
        above: Vec<usize>,
    }
    let mut per_level: Vec<Vec<(f64, f64)>> = vec![Vec::new(); reps.len()];
    for q in &squares {
        per_level[level_of(q.y)].push((q.x, q.x + q.side));
        per_level[level_of(q.y - q.side)].push((q.x, q.x + q.side));
    }
    let mut segments: Vec<SegV> = Vec::new();
    let mut seg_ids: Vec<Vec<usize>> = Vec::new();
    for spans in per_level.iter_mut() {
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ids = Vec::new();
        let mut cur: Option<(f64, f64)> = None;
        for &(a, b) in spans.iter() {
            match cur {
                None => cur = Some((a, b)),
                Some((ca, cb)) => {
                    if a <= cb + tol {
                        cur = Some((ca, cb.max(b)));
                    } else {
                        ids.push(segments.len());
                        segments.push(SegV {
                            x0: ca,
                            x1: cb,
                            below: Vec::new(),
                            above: Vec::new(),
                        });
                        cur = Some((a, b));
                    }
                }
            }
        }
        if let Some((ca, cb)) = cur {
            ids.push(segments.len());
            segments.push(SegV {
                x0: ca,
                x1: cb,
                below: Vec::new(),
                above: Vec::new(),
            });
        }
        seg_ids.push(ids);
    }
    let mut tops = vec![0usize; squares.len()];
    let mut bottoms = vec![0usize; squares.len()];
    {
        let find_segment = |level: usize, x: f64| -> Result<usize, SquaringError> {
            seg_ids[level]
                .iter()
                .copied()
                .find(|&i| segments[i].x0 - tol <= x && x <= segments[i].x1 + tol)
                .ok_or_else(|| {
                    SquaringError::InvalidTiling("square border off any segment".into())
                })
        };
        for (i, q) in squares.iter().enumerate() {
            let cx = q.x + q.side / 2.0;
            tops[i] = find_segment(level_of(q.y), cx)?;
            bottoms[i] = find_segment(level_of(q.y - q.side), cx)?;
        }
    }
    for i in 0..squares.len() {
        segments[tops[i]].below.push(i);
        segments[bottoms[i]].above.push(i);
    }
    let top_level = reps.len() - 1;
    if seg_ids[top_level].len() != 1 || seg_ids[0].len() != 1 {
        return Err(SquaringError::InvalidTiling(
            "rectangle boundary is not a single segment".into(),
        ));
    }
    let s_vertex = seg_ids[top_level][0];
    let t_vertex = seg_ids[0][0];

    // darts: square i owns (2i, 2i+1), top to bottom first; root edge last
    let k = squares.len();
    let mut twin = Vec::with_capacity(2 * k + 2);
    for i in 0..=k {
        twin.push(2 * i + 1);
        twin.push(2 * i);
    }
    let root_dart = 2 * k;
    let mut rotations: Vec<Vec<usize>> = Vec::with_capacity(segments.len());
    for (vi, seg) in segments.iter().enumerate() {
        let mut below = seg.below.clone();
        below.sort_by(|&i, &j| squares[i].x.total_cmp(&squares[j].x));
        let mut above = seg.above.clone();
        above.sort_by(|&i, &j| squares[j].x.total_cmp(&squares[i].x));
        let mut rot: Vec<usize> = Vec::new();
        if vi == t_vertex {
            rot.push(root_dart + 1);
        }
        rot.extend(below.iter().map(|&i| 2 * i));
        if vi == s_vertex {
            rot.push(root_dart);
        }
        rot.extend(above.iter().map(|&i| 2 * i + 1));
        rotations.push(rot);
    }
    let map = CombinatorialMap::from_rotations(&rotations, twin)
        .map_err(|e| SquaringError::InvalidTiling(format!("segment map is not planar: {e}")))?;
    let rooted = RootedMap::new(map, root_dart, None).expect("root dart exists");
    Ok(MapFromSquaring {
        square_edges: squares.iter().map(|&q| (q, q.edge)).collect(),
        root_edge: k,
        map: rooted,
    })
}

// ---------------------------------------------------------------------
// Rendering and serialization
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    pub draw_lines: bool,
    pub include_degenerate: bool,
    pub fill_by_size: bool,
    pub accumulation: Option<(f64, f64)>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            draw_lines: false,
            include_degenerate: false,
            fill_by_size: true,
            accumulation: None,
        }
    }
}

const FILL_PALETTE: [&str; 6] = [
    "#d7e7f4", "#b5d3ea", "#8fbcdd", "#699fcb", "#4a7fb5", "#33608f",
];

/// Deterministic SVG rendering, aspect-true, one rect per square.
pub fn render_svg(s: &Squaring, opts: &RenderOptions) -> String {
    let mut out = String::new();
    let w = s.lambda;
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {:.9} 1\" width=\"{}\" height=\"{}\">\n",
        w,
        800,
        (800.0 / w.max(1e-9)).round() as i64
    ));
    let stroke = 0.0015 * w.max(1.0);
    let mut order: Vec<usize> = (0..s.squares.len()).collect();
    order.sort_by(|&i, &j| s.squares[i].side.total_cmp(&s.squares[j].side));
    let rank_of = |i: usize| order.iter().position(|&j| j == i).unwrap();
    for i in 0..s.squares.len() {
        let q = &s.squares[i];
        if s.is_degenerate(i) && !opts.include_degenerate {
            continue;
        }
        let fill = if opts.fill_by_size {
            let r = rank_of(i) * FILL_PALETTE.len() / s.squares.len().max(1);
            FILL_PALETTE[r.min(FILL_PALETTE.len() - 1)]
        } else {
            "#dddddd"
        };
        out.push_str(&format!(
            "<rect x=\"{:.9}\" y=\"{:.9}\" width=\"{:.9}\" height=\"{:.9}\" fill=\"{}\" stroke=\"#222222\" stroke-width=\"{:.9}\"/>\n",
            q.x,
            1.0 - q.y,
            q.side,
            q.side,
            fill,
            stroke
        ));
    }
    if opts.draw_lines {
        for l in &s.primal_lines {
            out.push_str(&format!(
                "<line x1=\"{:.9}\" y1=\"{:.9}\" x2=\"{:.9}\" y2=\"{:.9}\" stroke=\"#c0392b\" stroke-width=\"{:.9}\"/>\n",
                l.x0,
                1.0 - l.y,
                l.x1,
                1.0 - l.y,
                stroke * 1.5
            ));
        }
        for l in &s.facial_lines {
            out.push_str(&format!(
                "<line x1=\"{:.9}\" y1=\"{:.9}\" x2=\"{:.9}\" y2=\"{:.9}\" stroke=\"#27ae60\" stroke-width=\"{:.9}\"/>\n",
                l.x,
                1.0 - l.y1,
                l.x,
                1.0 - l.y0,
                stroke * 1.5
            ));
        }
    }
    if let Some((ax, ay)) = opts.accumulation {
        out.push_str(&format!(
            "<circle cx=\"{:.9}\" cy=\"{:.9}\" r=\"{:.9}\" fill=\"none\" stroke=\"#8e44ad\" stroke-width=\"{:.9}\"/>\n",
            ax,
            1.0 - ay,
            0.02 * w.max(1.0),
            stroke * 2.0
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Serialize, Deserialize)]
struct SquaringJson {
    version: u32,
    lambda: f64,
    squares: Vec<Square>,
    primal_lines: Vec<PrimalLine>,
    facial_lines: Vec<FacialLine>,
}

pub fn squaring_to_json(s: &Squaring) -> String {
    serde_json::to_string_pretty(&SquaringJson {
        version: 1,
        lambda: s.lambda,
        squares: s.squares.clone(),
        primal_lines: s.primal_lines.clone(),
        facial_lines: s.facial_lines.clone(),
    })
    .expect("squaring serializes")
}

pub fn squaring_from_json(text: &str) -> Result<Squaring, SquaringError> {
    let j: SquaringJson =
        serde_json::from_str(text).map_err(|e| SquaringError::InvalidJson(e.to_string()))?;
    if j.version != 1 {
        return Err(SquaringError::InvalidJson(format!(
            "unsupported version {}",
            j.version
        )));
    }
    Ok(Squaring {
        lambda: j.lambda,
        squares: j.squares,
        primal_lines: j.primal_lines,
        facial_lines: j.facial_lines,
        exact: None,
    })
}

/// Canonical code helper used by round-trip tests on reconstructed maps.
pub fn code_of(m: &RootedMap) -> Vec<u8> {
    canonical_code(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn close(a: f64, b: f64, eps: f64) -> bool {
        (a - b).abs() <= eps
    }

    #[test]
    fn p3_two_stacked_squares() {
        let s = square_map(&fixtures::p3(), SolveMode::Rational).unwrap();
        assert!(close(s.lambda, 0.5, 1e-15));
        assert_eq!(s.squares.len(), 2);
        let mut got: Vec<(f64, f64, f64)> =
            s.squares.iter().map(|q| (q.x, q.y, q.side)).collect();
        got.sort_by(|a, b| b.1.total_cmp(&a.1));
        assert!(close(got[0].0, 0.0, 1e-15) && close(got[0].1, 1.0, 1e-15));
        assert!(close(got[1].0, 0.0, 1e-15) && close(got[1].1, 0.5, 1e-15));
        assert!(got.iter().all(|&(_, _, s)| close(s, 0.5, 1e-15)));
        assert!(validate_tiling(&s).pass);
    }

    #[test]
    fn k4_four_squares_and_a_degenerate_one() {
        let s = square_map(&fixtures::k4(), SolveMode::Rational).unwrap();
        assert!(close(s.lambda, 1.0, 1e-15));
        assert_eq!(s.squares.len(), 5);
        let degenerate: Vec<usize> = (0..5).filter(|&i| s.is_degenerate(i)).collect();
        assert_eq!(degenerate.len(), 1);
        let d = &s.squares[degenerate[0]];
        assert!(close(d.x, 0.5, 1e-15) && close(d.y, 0.5, 1e-15));
        let report = validate_tiling(&s);
        assert!(report.pass, "{report:?}");
        // four corner-to-corner squares of side one half
        for q in s.nondegenerate() {
            assert!(close(q.side, 0.5, 1e-15));
        }
    }

    #[test]
    fn validation_flags_a_shifted_square() {
        let mut s = square_map(&fixtures::k4(), SolveMode::Iterative).unwrap();
        let idx = (0..s.squares.len()).find(|&i| !s.is_degenerate(i)).unwrap();
        s.exact = None;
        s.squares[idx].x += 0.01;
        let report = validate_tiling(&s);
        assert!(!report.pass);
        assert!(report.max_overlap > 1e-4);
    }

    #[test]
    fn duality_rotation_on_fixtures() {
        for g in [fixtures::k4(), fixtures::subdivided_bridge()] {
            let r = check_duality_rotation(&g, SolveMode::Rational).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn nondegenerate_lines_k4_and_bridge() {
        let r = check_nondegenerate_lines(&fixtures::k4(), SolveMode::Rational).unwrap();
        assert!(r.three_connected);
        assert!(r.all_nondegenerate, "{r:?}");
        let r2 =
            check_nondegenerate_lines(&fixtures::subdivided_bridge(), SolveMode::Rational).unwrap();
        assert!(!r2.three_connected);
        assert_eq!(r2.degenerate_primal.len(), 1, "{r2:?}");
    }

    #[test]
    fn hausdorff_basics() {
        let s = square_map(&fixtures::k4(), SolveMode::Iterative).unwrap();
        assert_eq!(hausdorff_distance(&s, &s), 0.0);
        let mut shifted = s.clone();
        shifted.exact = None;
        for q in shifted.squares.iter_mut() {
            q.x += 0.25;
        }
        for l in shifted.primal_lines.iter_mut() {
            l.x0 += 0.25;
            l.x1 += 0.25;
        }
        let d = hausdorff_distance(&s, &shifted);
        assert!(close(d, 0.25, 1e-12), "{d}");
        let d2 = hausdorff_distance(&shifted, &s);
        assert!(close(d, d2, 1e-12));
    }

    #[test]
    fn p3_roundtrip_through_tiling() {
        let s = square_map(&fixtures::p3(), SolveMode::Rational).unwrap();
        let back = map_from_squaring(&s.squares).unwrap();
        assert_eq!(code_of(&back.map), code_of(&fixtures::p3()));
    }

    #[test]
    fn order9_roundtrip_resquares() {
        let tiles = fixtures::order9_rectangle();
        let rec = map_from_squaring(&tiles).unwrap();
        let net = Network::new(rec.map.clone()).unwrap();
        let s = square_network(&net, SolveMode::Rational).unwrap();
        assert!(validate_tiling(&s).pass);
        assert!(close(s.lambda, 33.0 / 32.0, 1e-12));
        // edge i of the reconstructed map is input square i
        let by_edge: HashMap<usize, &Square> = s.squares.iter().map(|q| (q.edge, q)).collect();
        for (i, t) in tiles.iter().enumerate() {
            let q = by_edge[&i];
            assert!(close(q.side, t.side, 1e-8), "side of square {i}");
            assert!(close(q.x, t.x, 1e-8), "x of square {i}");
            assert!(close(q.y, t.y, 1e-8), "y of square {i}");
        }
        // and the rotation identity holds on this 2-connected example
        let r = check_duality_rotation(&rec.map, SolveMode::Rational).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn bad_tiling_is_rejected() {
        let mut tiles = fixtures::order9_rectangle();
        tiles.pop();
        assert!(map_from_squaring(&tiles).is_err());
    }

    #[test]
    fn svg_deterministic() {
        let s = square_map(&fixtures::k4(), SolveMode::Iterative).unwrap();
        let a = render_svg(&s, &RenderOptions::default());
        let b = render_svg(&s, &RenderOptions::default());
        assert_eq!(a, b);
        assert_eq!(a.matches("<rect").count(), 4);
        let all = render_svg(
            &s,
            &RenderOptions {
                include_degenerate: true,
                ..Default::default()
            },
        );
        assert_eq!(all.matches("<rect").count(), 5);
    }

    #[test]
    fn squaring_json_roundtrip() {
        let s = square_map(&fixtures::k4(), SolveMode::Iterative).unwrap();
        let text = squaring_to_json(&s);
        let back = squaring_from_json(&text).unwrap();
        assert_eq!(s.squares, back.squares);
        assert_eq!(s.lambda, back.lambda);
    }
}
