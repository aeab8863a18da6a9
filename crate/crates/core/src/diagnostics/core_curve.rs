//! Extraction of the soliton core, the preimage of the antipode of the vacuum.
//!
//! Every lattice cell is split into five tetrahedra (mirrored on alternate
//! cells so faces match across cells). Inside a tetrahedron `(phi1, phi2)` is
//! interpolated linearly, so its zero set is a straight segment joining the
//! zeros on two of the faces. Segments are linked through shared faces into
//! polylines, keeping only zeros where the interpolated `phi3` is negative.

use std::collections::HashMap;

use crate::lattice::{DirectorField, LatticeSpec};
use crate::vec3::{self, Vec3};

/// Perturbation applied to exactly vanishing transverse components.
const TIE_BREAK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CoreCurve {
    /// Polylines making up the curve. A closed curve is a single polyline
    /// whose last point repeats the first.
    pub segments: Vec<Vec<Vec3>>,
    pub closed: bool,
    pub length: f64,
}

impl CoreCurve {
    pub fn empty() -> Self {
        CoreCurve { segments: Vec::new(), closed: false, length: 0.0 }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Largest distance between two points of the curve.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Vec3> = self.segments.iter().flatten().copied().collect();
        let mut best: f64 = 0.0;
        for (i, &p) in pts.iter().enumerate() {
            for &q in &pts[i + 1..] {
                best = best.max(vec3::norm(vec3::sub(p, q)));
            }
        }
        best
    }

    /// A length is trusted only for a closed curve at least three lattice
    /// spacings across.
    pub fn is_reliable(&self, spacing: f64) -> bool {
        self.closed && self.diameter() >= 3.0 * spacing
    }
}

fn polyline_length(pts: &[Vec3]) -> f64 {
    pts.windows(2).map(|w| vec3::norm(vec3::sub(w[1], w[0]))).fold(0.0, |a, b| a + b)
}

/// Transverse components with the tie-break applied.
#[inline]
fn transverse(phi: Vec3) -> [f64; 2] {
    let x = if phi[0] == 0.0 { TIE_BREAK } else { phi[0] };
    let y = if phi[1] == 0.0 { TIE_BREAK } else { phi[1] };
    [x, y]
}

#[inline]
fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Zero of the linear interpolant of `(phi1, phi2)` on a triangle, if it lies
/// inside and has negative `phi3`. Vertices must be given in sorted order so
/// both tetrahedra sharing a face compute bit-identical points.
fn face_zero(spec: &LatticeSpec, phi: &DirectorField, tri: [usize; 3]) -> Option<Vec3> {
    let v = tri.map(|idx| phi.values()[idx]);
    let u = v.map(transverse);
    let e1 = [u[1][0] - u[0][0], u[1][1] - u[0][1]];
    let e2 = [u[2][0] - u[0][0], u[2][1] - u[0][1]];
    let det = cross2(e1, e2);
    if det == 0.0 {
        return None;
    }
    let rhs = [-u[0][0], -u[0][1]];
    let l1 = cross2(rhs, e2) / det;
    let l2 = cross2(e1, rhs) / det;
    if l1 < 0.0 || l2 < 0.0 || l1 + l2 > 1.0 {
        return None;
    }
    let l0 = 1.0 - l1 - l2;
    if l0 * v[0][2] + l1 * v[1][2] + l2 * v[2][2] >= 0.0 {
        return None;
    }
    let p = tri.map(|idx| spec.position(idx));
    Some([
        l0 * p[0][0] + l1 * p[1][0] + l2 * p[2][0],
        l0 * p[0][1] + l1 * p[1][1] + l2 * p[2][1],
        l0 * p[0][2] + l1 * p[1][2] + l2 * p[2][2],
    ])
}

/// Local corner offsets of a cell, indexed by `b0 + 2 b1 + 4 b2`.
const CORNERS: [[usize; 3]; 8] =
    [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1]];

/// The five tetrahedra of a cell as local corner indices. `parity` selects
/// which corner class forms the central tetrahedron.
fn cell_tets(parity: usize) -> [[usize; 4]; 5] {
    let class = |c: usize| (CORNERS[c][0] + CORNERS[c][1] + CORNERS[c][2]) % 2;
    let central: Vec<usize> = (0..8).filter(|&c| class(c) == parity).collect();
    let mut tets = [[0; 4]; 5];
    tets[0] = [central[0], central[1], central[2], central[3]];
    for (t, apex) in (0..8).filter(|&c| class(c) != parity).enumerate() {
        tets[t + 1] = [apex, apex ^ 1, apex ^ 2, apex ^ 4];
    }
    tets
}

/// Traces the core curve of `phi`.
pub fn core_curve(phi: &DirectorField) -> CoreCurve {
    let spec = *phi.spec();
    let n = spec.n_points;
    let tets = [cell_tets(0), cell_tets(1)];

    let mut points: HashMap<[usize; 3], Vec3> = HashMap::new();
    let mut adjacency: HashMap<[usize; 3], Vec<[usize; 3]>> = HashMap::new();

    for k in 0..n - 1 {
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let corner = CORNERS.map(|c| spec.index(i + c[0], j + c[1], k + c[2]));
                if corner.iter().all(|&idx| phi.values()[idx][2] >= 0.0) {
                    continue;
                }
                for tet in &tets[(i + j + k) % 2] {
                    let verts = tet.map(|c| corner[c]);
                    let mut hits: Vec<[usize; 3]> = Vec::with_capacity(2);
                    for skip in 0..4 {
                        let mut tri = [0usize; 3];
                        let mut m = 0;
                        for (q, &v) in verts.iter().enumerate() {
                            if q != skip {
                                tri[m] = v;
                                m += 1;
                            }
                        }
                        tri.sort_unstable();
                        if let Some(p) = face_zero(&spec, phi, tri) {
                            points.insert(tri, p);
                            hits.push(tri);
                        }
                    }
                    // Zero or two hits is the generic case; anything else is a
                    // degenerate touch we cannot orient, so it is dropped.
                    if hits.len() == 2 {
                        adjacency.entry(hits[0]).or_default().push(hits[1]);
                        adjacency.entry(hits[1]).or_default().push(hits[0]);
                    }
                }
            }
        }
    }

    let chains = link(&adjacency);
    let h = spec.h();
    let mut closed_loops: Vec<Vec<Vec3>> = Vec::new();
    let mut fragments: Vec<Vec<Vec3>> = Vec::new();
    for (keys, cyclic) in chains {
        let mut pts: Vec<Vec3> = keys.iter().map(|key| points[key]).collect();
        let gap = vec3::norm(vec3::sub(pts[0], pts[pts.len() - 1]));
        if cyclic || (pts.len() > 2 && gap <= 2.0 * h) {
            pts.push(pts[0]);
            closed_loops.push(pts);
        } else {
            fragments.push(pts);
        }
    }

    if let Some(best) = closed_loops
        .into_iter()
        .max_by(|a, b| polyline_length(a).total_cmp(&polyline_length(b)))
    {
        let length = polyline_length(&best);
        return CoreCurve { segments: vec![best], closed: true, length };
    }
    let length = fragments.iter().map(|f| polyline_length(f)).fold(0.0, |a, b| a + b);
    CoreCurve { segments: fragments, closed: false, length }
}

/// Splits the segment graph into chains, reporting whether each closes on
/// itself. Traversal order is fixed by sorting keys.
fn link(adjacency: &HashMap<[usize; 3], Vec<[usize; 3]>>) -> Vec<(Vec<[usize; 3]>, bool)> {
    let mut keys: Vec<[usize; 3]> = adjacency.keys().copied().collect();
    keys.sort_unstable();
    let mut visited: HashMap<[usize; 3], bool> = HashMap::new();
    let mut chains = Vec::new();

    // open chains start at their ends
    let starts = keys
        .iter()
        .filter(|k| adjacency[*k].len() == 1)
        .chain(keys.iter().filter(|k| adjacency[*k].len() != 1));
    for &start in starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut current = start;
        while let Some(&k) = adjacency[&current].iter().find(|k| !visited.contains_key(*k)) {
            visited.insert(k, true);
            chain.push(k);
            current = k;
        }
        let cyclic = chain.len() > 2 && adjacency[&current].contains(&start);
        chains.push((chain, cyclic));
    }
    chains
}
