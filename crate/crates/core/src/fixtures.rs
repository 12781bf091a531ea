//! Small hand-built maps and tilings used across the test suites and as
//! CLI demo inputs. Rotations are counterclockwise; dart ids are listed in
//! the comments edge by edge (each edge owns a consecutive dart pair).

use crate::combmap::{CombinatorialMap, RootedMap};
use crate::squaring::Square;

fn build(rotations: &[Vec<usize>], twin: Vec<usize>, root: usize, outer: Option<usize>) -> RootedMap {
    let map = CombinatorialMap::from_rotations(rotations, twin).expect("fixture is a valid map");
    RootedMap::new(map, root, outer).expect("fixture root in range")
}

/// Triangle on vertices A, B, C, rooted at A→B.
/// Darts: AB=0, BA=1, BC=2, CB=3, CA=4, AC=5.
pub fn triangle() -> RootedMap {
    build(
        &[vec![0, 5], vec![1, 2], vec![4, 3]],
        vec![1, 0, 3, 2, 5, 4],
        0,
        None,
    )
}

/// Triangle s–a–t rooted at the oriented edge s→t; cutting the root leaves
/// the path s–a–t. This is the smallest squarable fixture.
/// Darts: st=0, ts=1, sa=2, as=3, at=4, ta=5.
pub fn p3() -> RootedMap {
    build(
        &[vec![0, 2], vec![3, 4], vec![1, 5]],
        vec![1, 0, 3, 2, 5, 4],
        0,
        None,
    )
}

/// Theta graph: vertices s, a, t, b with edges st, sa, at, sb, bt. Rooted at
/// s→t. Fails `check_squarable` since removing s and t isolates a from b.
/// Darts: st=0, ts=1, sa=2, as=3, at=4, ta=5, sb=6, bs=7, bt=8, tb=9.
pub fn theta() -> RootedMap {
    build(
        &[vec![0, 2, 6], vec![3, 4], vec![7, 8], vec![1, 9, 5]],
        vec![1, 0, 3, 2, 5, 4, 7, 6, 9, 8],
        0,
        Some(4),
    )
}

/// K4 on s, a, b, t rooted at s→t. The edge a–b carries no current.
/// Darts: st=0, ts=1, sa=2, as=3, sb=4, bs=5, at=6, ta=7, bt=8, tb=9,
/// ab=10, ba=11.
pub fn k4() -> RootedMap {
    build(
        &[
            vec![0, 2, 4],
            vec![1, 9, 7],
            vec![3, 6, 10],
            vec![5, 11, 8],
        ],
        vec![1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10],
        0,
        None,
    )
}

/// K4 with the zero-current edge a–b removed. Edge ids 0..4 line up with
/// the first five edges of `k4`, which makes exact tiling comparisons a
/// per-edge check.
pub fn k4_minus_ab() -> RootedMap {
    build(
        &[vec![0, 2, 4], vec![1, 9, 7], vec![3, 6], vec![5, 8]],
        vec![1, 0, 3, 2, 5, 4, 7, 6, 9, 8],
        0,
        None,
    )
}

/// A 2-connected, non-3-connected map with a degenerate line: a balanced
/// four-cycle s–x–t–y with the bridge x–y subdivided by m. By symmetry no
/// current flows through x–m or m–y, so the line of m is a single point.
/// Darts: st=0, ts=1, sx=2, xs=3, xt=4, tx=5, sy=6, ys=7, yt=8, ty=9,
/// xm=10, mx=11, my=12, ym=13.
pub fn subdivided_bridge() -> RootedMap {
    build(
        &[
            vec![0, 2, 6],
            vec![10, 3, 4],
            vec![12, 11],
            vec![7, 13, 8],
            vec![9, 5, 1],
        ],
        vec![1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10, 13, 12],
        0,
        None,
    )
}

/// Two quadrilaterals glued along their boundary (the "pillow"): the only
/// four-cycles are its two faces.
/// Darts: ux=0, xu=1, xv=2, vx=3, vy=4, yv=5, yu=6, uy=7.
pub fn pillow() -> RootedMap {
    build(
        &[vec![0, 7], vec![1, 2], vec![3, 4], vec![5, 6]],
        vec![1, 0, 3, 2, 5, 4, 7, 6],
        0,
        None,
    )
}

/// A sphere quadrangulation containing non-facial four-cycles: an outer
/// quad u–x–v–y with two extra paths u–x'–v and u–y'–v inserted in one
/// face. The pairs (u,x,v,y') and (u,x',v,y) are four-cycles that bound no
/// face.
pub fn reducible_quad() -> RootedMap {
    // darts: ux=0,xu=1, xv=2,vx=3, vy=4,yv=5, yu=6,uy=7,
    //        ux'=8,x'u=9, x'v=10,vx'=11, vy'=12,y'v=13, y'u=14,uy'=15
    build(
        &[
            vec![0, 8, 15, 7],
            vec![1, 2],
            vec![4, 12, 11, 3],
            vec![5, 6],
            vec![9, 10],
            vec![13, 14],
        ],
        vec![1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10, 13, 12, 15, 14],
        0,
        None,
    )
}

/// Ladder with k rungs beyond the root: rails u0..uk and v0..vk, rungs
/// u_i - v_i, rooted at u0 -> v0. Used for potential-convergence checks on
/// a nested family.
pub fn ladder(k: usize) -> RootedMap {
    assert!(k >= 1);
    let mut twin = Vec::new();
    let mut alloc = |twin: &mut Vec<usize>| {
        let d = twin.len();
        twin.push(d + 1);
        twin.push(d);
        d
    };
    // edge darts: root, then per i: rail_u(i), rail_v(i) for i<k, rung(i) for i>=1
    let root = alloc(&mut twin);
    let mut rail_u = Vec::new();
    let mut rail_v = Vec::new();
    let mut rung = vec![usize::MAX];
    for _ in 0..k {
        rail_u.push(alloc(&mut twin));
        rail_v.push(alloc(&mut twin));
        rung.push(alloc(&mut twin));
    }
    let mut rotations = Vec::new();
    for i in 0..=k {
        // u_i, counterclockwise: east rail, west rail, south (rung/root)
        let mut rot = Vec::new();
        if i < k {
            rot.push(rail_u[i]);
        }
        if i > 0 {
            rot.push(rail_u[i - 1] + 1);
        }
        rot.push(if i == 0 { root } else { rung[i] });
        rotations.push(rot);
    }
    for i in 0..=k {
        // v_i, counterclockwise: east rail, north (rung/root), west rail
        let mut rot = Vec::new();
        if i < k {
            rot.push(rail_v[i]);
        }
        rot.push(if i == 0 { root + 1 } else { rung[i] + 1 });
        if i > 0 {
            rot.push(rail_v[i - 1] + 1);
        }
        rotations.push(rot);
    }
    build(&rotations, twin, 0, None)
}

/// The classical order-nine squared rectangle (32 tall, 33 wide), scaled to
/// height one. Square sides 18, 15, 14, 10, 9, 8, 7, 4, 1 over 32.
pub fn order9_rectangle() -> Vec<Square> {
    let raw: [(f64, f64, f64); 9] = [
        (0.0, 32.0, 18.0),
        (18.0, 32.0, 15.0),
        (0.0, 14.0, 14.0),
        (14.0, 10.0, 10.0),
        (24.0, 9.0, 9.0),
        (25.0, 17.0, 8.0),
        (18.0, 17.0, 7.0),
        (14.0, 14.0, 4.0),
        (24.0, 10.0, 1.0),
    ];
    raw.iter()
        .enumerate()
        .map(|(i, &(x, y, s))| Square {
            edge: i,
            x: x / 32.0,
            y: y / 32.0,
            side: s / 32.0,
        })
        .collect()
}
