//! Unstructured far field: skin extraction from the split near-field mesh,
//! constrained Delaunay triangulation with Ruppert-style quality refinement
//! (skin edges are hard constraints and never split), and the final hybrid
//! merge.

use crate::error::{Error, Result};
use crate::geom::{circumcenter, dist_point_segment, pt, winding_number, Point};
use crate::hocurve::elevate;
use crate::linmesh::{conformality_check, ElemKind, Element, Mesh, NodePool};
use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, HasPosition, Point2, Triangulation};
use std::collections::{BTreeMap, BTreeSet};

/// Closed chain of near-field boundary vertices; edge i runs from nodes[i]
/// to nodes[(i + 1) % len].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkinLoop {
    pub nodes: Vec<u32>,
}

impl SkinLoop {
    pub fn polygon(&self, m: &Mesh) -> Vec<Point> {
        self.nodes.iter().map(|&id| m.nodes[id as usize].p).collect()
    }
}

/// Edges with incidence 1 that are not on a wall or outer physical patch,
/// chained into closed loops.
pub fn extract_skin(m: &Mesh) -> Result<Vec<SkinLoop>> {
    let mut incidence: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut named: BTreeSet<(u32, u32)> = BTreeSet::new();
    for e in &m.elements {
        for s in 0..e.kind.vertex_count() {
            let key = e.edge_key(s);
            *incidence.entry(key).or_default() += 1;
            if let Some(p) = e.patches[s].as_deref() {
                if p.starts_with("wall:") || p.starts_with("outer") {
                    named.insert(key);
                }
            }
        }
    }
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (&(a, b), &count) in &incidence {
        if count == 1 && !named.contains(&(a, b)) {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    for (v, ns) in &mut adj {
        ns.sort_unstable();
        if ns.len() != 2 {
            return Err(Error::Geometric(format!(
                "skin is not a union of closed loops: node {v} has {} skin edges",
                ns.len()
            )));
        }
    }
    let mut loops = Vec::new();
    let mut visited: BTreeSet<u32> = BTreeSet::new();
    let starts: Vec<u32> = adj.keys().copied().collect();
    for start in starts {
        if visited.contains(&start) {
            continue;
        }
        let mut chain = vec![start];
        visited.insert(start);
        let mut prev = start;
        let mut cur = adj[&start][0];
        while cur != start {
            visited.insert(cur);
            chain.push(cur);
            let ns = &adj[&cur];
            let next = if ns[0] == prev { ns[1] } else { ns[0] };
            prev = cur;
            cur = next;
        }
        loops.push(SkinLoop { nodes: chain });
    }
    Ok(loops)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FarfieldParams {
    /// Target edge length far from the skin.
    pub h_far: f64,
    pub min_angle_deg: f64,
    /// Sizing gradation factor; the target length grows by at most this
    /// factor per unit of (normalized) distance from a skin edge.
    pub gradation: f64,
    pub node_budget: usize,
}

impl Default for FarfieldParams {
    fn default() -> Self {
        FarfieldParams {
            h_far: 1.0,
            min_angle_deg: 20.0,
            gradation: 1.3,
            node_budget: 1_000_000,
        }
    }
}

struct Seg {
    a: Point,
    b: Point,
    len: f64,
}

fn sizing(h_far: f64, gradation: f64, segs: &[Seg], p: Point) -> f64 {
    let mut h = h_far;
    for s in segs {
        let d = dist_point_segment(s.a, s.b, p);
        h = h.min(s.len + (gradation - 1.0) * d);
    }
    h.min(h_far)
}

/// Smallest interior angle of a triangle, degrees.
pub fn min_angle_deg(a: Point, b: Point, c: Point) -> f64 {
    let mut worst = f64::INFINITY;
    for (p, q, r) in [(a, b, c), (b, c, a), (c, a, b)] {
        let u = (q - p).normalized();
        let v = (r - p).normalized();
        worst = worst.min(u.dot(v).clamp(-1.0, 1.0).acos());
    }
    worst.to_degrees()
}

fn encroaches(segs: &[Seg], p: Point) -> bool {
    segs.iter().any(|s| {
        let mid = (s.a + s.b) / 2.0;
        p.dist(mid) < 0.5 * s.len * (1.0 - 1e-12)
    })
}

struct FarVertex {
    p: Point2<f64>,
}

impl HasPosition for FarVertex {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.p
    }
}

/// Constrained Delaunay triangulation of the region between the skin loops
/// and the outer rectangle, refined until every triangle either meets the
/// angle and sizing targets or is exempt (it carries a constrained edge, or
/// its circumcenter is blocked by a skin segment or lies outside the
/// domain). Skin edges are never split; outer box sides are pre-discretized
/// at the far sizing and also kept intact.
pub fn triangulate_farfield(
    near: &Mesh,
    skins: &[SkinLoop],
    outer_min: Point,
    outer_max: Point,
    prm: &FarfieldParams,
) -> Result<Mesh> {
    if !(outer_max.x > outer_min.x && outer_max.y > outer_min.y) {
        return Err(Error::Argument("degenerate outer rectangle".into()));
    }
    if prm.h_far <= 0.0 || prm.gradation < 1.0 {
        return Err(Error::Argument("invalid far-field sizing".into()));
    }
    let polys: Vec<Vec<Point>> = skins.iter().map(|s| s.polygon(near)).collect();
    for poly in &polys {
        for p in poly {
            if p.x <= outer_min.x || p.x >= outer_max.x || p.y <= outer_min.y || p.y >= outer_max.y
            {
                return Err(Error::Argument(format!(
                    "skin vertex ({}, {}) not strictly inside the outer rectangle",
                    p.x, p.y
                )));
            }
        }
    }
    let mut segs: Vec<Seg> = Vec::new();
    for poly in &polys {
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            segs.push(Seg { a, b, len: a.dist(b) });
        }
    }
    let mut cdt: ConstrainedDelaunayTriangulation<FarVertex> =
        ConstrainedDelaunayTriangulation::new();
    let ins = |cdt: &mut ConstrainedDelaunayTriangulation<FarVertex>, p: Point| {
        cdt.insert(FarVertex { p: Point2::new(p.x, p.y) })
            .map_err(|e| Error::Geometric(format!("far-field insertion failed: {e:?}")))
    };
    for poly in &polys {
        let handles: Vec<_> = poly
            .iter()
            .map(|&p| ins(&mut cdt, p))
            .collect::<Result<_>>()?;
        for i in 0..handles.len() {
            cdt.add_constraint(handles[i], handles[(i + 1) % handles.len()]);
        }
    }
    // outer boundary, pre-discretized at the far sizing
    let corners = [
        outer_min,
        pt(outer_max.x, outer_min.y),
        outer_max,
        pt(outer_min.x, outer_max.y),
    ];
    let mut box_segs: Vec<Seg> = Vec::new();
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        let k = (a.dist(b) / prm.h_far).ceil().max(1.0) as usize;
        let pts: Vec<Point> = (0..=k).map(|j| a.lerp(b, j as f64 / k as f64)).collect();
        let handles: Vec<_> = pts
            .iter()
            .map(|&p| ins(&mut cdt, p))
            .collect::<Result<_>>()?;
        for w in handles.windows(2) {
            cdt.add_constraint(w[0], w[1]);
        }
        for w in pts.windows(2) {
            box_segs.push(Seg { a: w[0], b: w[1], len: w[0].dist(w[1]) });
        }
    }
    let in_domain = |p: Point| -> bool {
        p.x > outer_min.x
            && p.x < outer_max.x
            && p.y > outer_min.y
            && p.y < outer_max.y
            && polys.iter().all(|poly| winding_number(poly, p) == 0)
    };

    // quality refinement: pass-based circumcenter insertion
    for _pass in 0..500 {
        let mut candidates: Vec<Point> = Vec::new();
        for face in cdt.inner_faces() {
            let [pa, pb, pc] = face.positions();
            let (a, b, c) = (pt(pa.x, pa.y), pt(pb.x, pb.y), pt(pc.x, pc.y));
            let centroid = (a + b + c) / 3.0;
            if !in_domain(centroid) {
                continue;
            }
            let Some(cc) = circumcenter(a, b, c) else { continue };
            let h = sizing(prm.h_far, prm.gradation, &segs, centroid);
            let longest = a.dist(b).max(b.dist(c)).max(c.dist(a));
            let bad_size = longest > 1.4 * h;
            let bad_angle = min_angle_deg(a, b, c) < prm.min_angle_deg;
            if !bad_size && !bad_angle {
                continue;
            }
            let constrained = face
                .adjacent_edges()
                .iter()
                .any(|e| cdt.is_constraint_edge(e.as_undirected().fix()));
            if constrained && !bad_size {
                continue; // angle forced by a hard constraint
            }
            if !in_domain(cc) || encroaches(&segs, cc) || encroaches(&box_segs, cc) {
                continue; // blocked: splitting would break a hard constraint
            }
            candidates.push(cc);
        }
        let mut accepted: Vec<Point> = Vec::new();
        for c in candidates {
            let h = sizing(prm.h_far, prm.gradation, &segs, c);
            if accepted.iter().all(|q| q.dist(c) > 0.5 * h) {
                accepted.push(c);
            }
        }
        if accepted.is_empty() {
            break;
        }
        for c in accepted {
            if cdt.num_vertices() >= prm.node_budget {
                return Err(Error::Resource(format!(
                    "far-field refinement exceeded the node budget of {}",
                    prm.node_budget
                )));
            }
            ins(&mut cdt, c)?;
        }
    }

    // assemble the order-1 triangle mesh
    let scale = outer_max.dist(outer_min);
    let tol = 1e-9 * scale;
    let mut nodes = Vec::with_capacity(cdt.num_vertices());
    let mut vmap: BTreeMap<usize, u32> = BTreeMap::new();
    for v in cdt.vertices() {
        let p = v.data().p;
        vmap.insert(v.fix().index(), nodes.len() as u32);
        nodes.push(crate::linmesh::Node { p: pt(p.x, p.y), assoc: None });
    }
    let on_box_side = |p: Point| -> Option<&'static str> {
        if (p.x - outer_min.x).abs() < tol {
            Some("outer-left")
        } else if (p.x - outer_max.x).abs() < tol {
            Some("outer-right")
        } else if (p.y - outer_min.y).abs() < tol {
            Some("outer-bottom")
        } else if (p.y - outer_max.y).abs() < tol {
            Some("outer-top")
        } else {
            None
        }
    };
    let mut elements = Vec::new();
    for face in cdt.inner_faces() {
        let [pa, pb, pc] = face.positions();
        let (a, b, c) = (pt(pa.x, pa.y), pt(pb.x, pb.y), pt(pc.x, pc.y));
        if !in_domain((a + b + c) / 3.0) {
            continue;
        }
        let ids: Vec<u32> = face
            .vertices()
            .iter()
            .map(|v| vmap[&v.fix().index()])
            .collect();
        let ps = [a, b, c];
        let patches = (0..3)
            .map(|s| {
                let (u, v) = (ps[s], ps[(s + 1) % 3]);
                match (on_box_side(u), on_box_side(v)) {
                    (Some(x), Some(y)) if x == y => Some(x.to_string()),
                    _ => None,
                }
            })
            .collect();
        elements.push(Element {
            id: elements.len() as u32,
            kind: ElemKind::Tri,
            order: 1,
            nodes: ids,
            block: None,
            patches,
        });
    }
    if elements.is_empty() {
        return Err(Error::Geometric("empty far-field triangulation".into()));
    }
    Ok(Mesh { nodes, elements })
}

/// Brute-force Delaunay verification for small meshes: triangles whose
/// circumcircle strictly contains another mesh node, excluding triangles
/// touching any boundary (incidence-1) edge, where only the constrained
/// Delaunay property holds. Returns None when the mesh exceeds 5000 nodes.
pub fn verify_delaunay(m: &Mesh) -> Option<Vec<u32>> {
    if m.nodes.len() > 5000 {
        return None;
    }
    let mut incidence: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for e in &m.elements {
        for s in 0..e.kind.vertex_count() {
            *incidence.entry(e.edge_key(s)).or_default() += 1;
        }
    }
    let mut scale: f64 = 0.0;
    for n in &m.nodes {
        scale = scale.max(n.p.x.abs()).max(n.p.y.abs());
    }
    let tol = 1e-10 * scale.max(1.0);
    let mut bad = Vec::new();
    for e in &m.elements {
        if e.kind != ElemKind::Tri {
            continue;
        }
        if (0..3).any(|s| incidence[&e.edge_key(s)] == 1) {
            continue;
        }
        let a = m.nodes[e.nodes[0] as usize].p;
        let b = m.nodes[e.nodes[1] as usize].p;
        let c = m.nodes[e.nodes[2] as usize].p;
        let Some(cc) = circumcenter(a, b, c) else { continue };
        let r = cc.dist(a);
        let inside = m.nodes.iter().enumerate().any(|(id, n)| {
            !e.nodes[..3].contains(&(id as u32)) && cc.dist(n.p) < r - tol
        });
        if inside {
            bad.push(e.id);
        }
    }
    Some(bad)
}

/// Weld the far-field triangulation onto the near-field mesh; far triangles
/// are order-elevated with straight (equidistant) edges so the hybrid mesh
/// is uniform-order.
pub fn merge(near: &Mesh, far: &Mesh) -> Result<Mesh> {
    let p = near.order();
    let far_hi = if far.order() == p {
        far.clone()
    } else {
        elevate(far, p)?
    };
    let mut lo = pt(f64::INFINITY, f64::INFINITY);
    let mut hi = pt(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in near.nodes.iter().chain(&far_hi.nodes) {
        lo.x = lo.x.min(n.p.x);
        lo.y = lo.y.min(n.p.y);
        hi.x = hi.x.max(n.p.x);
        hi.y = hi.y.max(n.p.y);
    }
    let tol = (1e-9 * hi.dist(lo)).max(1e-13);
    let mut pool = NodePool::new(tol);
    for n in &near.nodes {
        pool.insert(n.p, n.assoc);
    }
    if pool.nodes.len() != near.nodes.len() {
        return Err(Error::Merge("near-field mesh carries duplicate nodes".into()));
    }
    let fmap: Vec<u32> = far_hi
        .nodes
        .iter()
        .map(|n| pool.insert(n.p, n.assoc))
        .collect();
    // every skin vertex the far mesh reaches must be matched by a far node
    let mut flo = pt(f64::INFINITY, f64::INFINITY);
    let mut fhi = pt(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in &far_hi.nodes {
        flo.x = flo.x.min(n.p.x);
        flo.y = flo.y.min(n.p.y);
        fhi.x = fhi.x.max(n.p.x);
        fhi.y = fhi.y.max(n.p.y);
    }
    let matched: BTreeSet<u32> = fmap.iter().copied().collect();
    let mut missing = Vec::new();
    for lp in extract_skin(near)? {
        for id in lp.nodes {
            let p = near.nodes[id as usize].p;
            let inside = p.x > flo.x + tol
                && p.x < fhi.x - tol
                && p.y > flo.y + tol
                && p.y < fhi.y - tol;
            if inside && !matched.contains(&id) {
                missing.push(id);
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Merge(format!(
            "far field does not conform to the near skin; unmatched nodes: {missing:?}"
        )));
    }
    let mut elements = near.elements.clone();
    for e in &far_hi.elements {
        elements.push(Element {
            id: elements.len() as u32,
            kind: e.kind,
            order: e.order,
            nodes: e.nodes.iter().map(|&id| fmap[id as usize]).collect(),
            block: None,
            patches: e.patches.clone(),
        });
    }
    for (i, e) in elements.iter_mut().enumerate() {
        e.id = i as u32;
    }
    let out = Mesh { nodes: pool.nodes, elements };
    let report = conformality_check(&out);
    if !report.is_ok() {
        return Err(Error::Conformality(format!(
            "merged mesh non-conformal: {}",
            report.violations[0]
        )));
    }
    Ok(out)
}
