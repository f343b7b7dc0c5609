//! Coarse linear near-field mesh: sides first, then block sweeps. Loop
//! blocks become 1 x k strips with a single element through the thickness;
//! te-corner and junction blocks one quad each; wake columns one quad per
//! streamwise column.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::geomkit::{CurveId, Geometry};
use crate::partition::{BlockGraph, BlockKind, SideGeom};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::HashMap;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Node {
    pub p: Point,
    /// (curve, parameter) for nodes lying on boundary geometry.
    pub assoc: Option<(CurveId, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElemKind {
    Quad,
    Tri,
}

impl ElemKind {
    pub fn vertex_count(self) -> usize {
        match self {
            ElemKind::Quad => 4,
            ElemKind::Tri => 3,
        }
    }

    pub fn node_count(self, order: u8) -> usize {
        let p = order as usize;
        match self {
            ElemKind::Quad => (p + 1) * (p + 1),
            ElemKind::Tri => (p + 1) * (p + 2) / 2,
        }
    }
}

/// Canonical node ordering: vertices CCW, then the P-1 interior nodes of each
/// edge (edge i from vertex i to vertex (i+1) % nv) in edge direction, then
/// interior nodes row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Element {
    pub id: u32,
    pub kind: ElemKind,
    pub order: u8,
    pub nodes: Vec<u32>,
    pub block: Option<u32>,
    /// Patch tag per side; None for interior sides.
    pub patches: Vec<Option<String>>,
}

impl Element {
    /// Node ids along side s: start vertex, edge interior nodes, end vertex.
    pub fn side_nodes(&self, s: usize) -> Vec<u32> {
        let nv = self.kind.vertex_count();
        let p = self.order as usize;
        let mut out = Vec::with_capacity(p + 1);
        out.push(self.nodes[s]);
        for k in 0..p.saturating_sub(1) {
            out.push(self.nodes[nv + s * (p - 1) + k]);
        }
        out.push(self.nodes[(s + 1) % nv]);
        out
    }

    /// Vertex pair of side s, sorted (canonical edge key).
    pub fn edge_key(&self, s: usize) -> (u32, u32) {
        let nv = self.kind.vertex_count();
        let a = self.nodes[s];
        let b = self.nodes[(s + 1) % nv];
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<Node>,
    pub elements: Vec<Element>,
}

impl Mesh {
    pub fn order(&self) -> u8 {
        self.elements.first().map(|e| e.order).unwrap_or(1)
    }
}

/// Welding node pool: coordinates within `tol` map to one node id.
pub struct NodePool {
    pub nodes: Vec<Node>,
    grid: HashMap<(i64, i64), Vec<u32>>,
    cell: f64,
    tol: f64,
}

impl NodePool {
    pub fn new(tol: f64) -> NodePool {
        NodePool {
            nodes: Vec::new(),
            grid: HashMap::new(),
            cell: (tol * 1e3).max(1e-9),
            tol,
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Point, assoc: Option<(CurveId, f64)>) -> u32 {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        if self.nodes[id as usize].p.dist(p) <= self.tol {
                            if self.nodes[id as usize].assoc.is_none() {
                                self.nodes[id as usize].assoc = assoc;
                            }
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { p, assoc });
        self.grid.entry((kx, ky)).or_default().push(id);
        id
    }
}

/// Discretization of one block side, stored once per shared pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SideDisc {
    pub key: (u32, u8),
    /// Curve parameters for wall sides; fractions in [0, 1] otherwise.
    pub params: Vec<f64>,
    pub points: Vec<Point>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SideSet {
    map: BTreeMap<(u32, u8), SideDisc>,
    /// (block, side) -> canonical key and whether the stored order is reversed.
    alias: BTreeMap<(u32, u8), ((u32, u8), bool)>,
}

impl SideSet {
    /// Points of the side in the block's own side direction.
    pub fn points(&self, block: u32, side: u8) -> Vec<Point> {
        let (key, rev) = self.alias[&(block, side)];
        let mut pts = self.map[&key].points.clone();
        if rev {
            pts.reverse();
        }
        pts
    }

    pub fn params(&self, block: u32, side: u8) -> Vec<f64> {
        let (key, rev) = self.alias[&(block, side)];
        let mut ps = self.map[&key].params.clone();
        if rev {
            ps.reverse();
        }
        ps
    }

    pub fn interval_count(&self, block: u32, side: u8) -> usize {
        let (key, _) = self.alias[&(block, side)];
        self.map[&key].params.len() - 1
    }
}

/// Maximum tangent turn per wall interval before it is bisected.
const MAX_TURN: f64 = 25.0 * std::f64::consts::PI / 180.0;

/// Discretize all block sides. Wall sides of loop blocks are subdivided by
/// arc length (count = ceil(arc / h)) with turning-angle refinement; every
/// other side keeps a single interval (one element through the thickness).
pub fn mesh_sides(geom: &Geometry, g: &BlockGraph, h: f64) -> Result<SideSet> {
    if h <= 0.0 {
        return Err(Error::Sizing(format!("target edge length must be positive: {h}")));
    }
    let mut longest: f64 = 0.0;
    for b in &g.blocks {
        for i in 0..4 {
            longest = longest.max(b.corners[i].dist(b.corners[(i + 1) % 4]));
        }
    }
    if h > longest {
        return Err(Error::Sizing(format!(
            "target edge length {h} exceeds the longest block side {longest}"
        )));
    }
    let mut set = SideSet::default();
    for b in &g.blocks {
        for s in 0..4u8 {
            let this = (b.id, s);
            let partner = g.neighbor(b.id, s);
            if let Some(p) = partner {
                if p < this {
                    set.alias.insert(this, (p, true));
                    continue;
                }
            }
            let disc = match (&b.sides[s as usize], b.kind) {
                (SideGeom::Wall { curve, t0, t1 }, BlockKind::Loop) => {
                    let c = geom.curve(*curve);
                    let (lo, hi) = if t0 < t1 { (*t0, *t1) } else { (*t1, *t0) };
                    let arc = c.arc_length(lo, hi)?;
                    let k = ((arc / h).ceil() as usize).max(1);
                    let mut ts: Vec<f64> = (0..=k)
                        .map(|i| c.param_at_arc_fraction(lo, hi, i as f64 / k as f64))
                        .collect::<Result<_>>()?;
                    // turning-angle refinement for curved walls
                    let mut i = 0;
                    while i + 1 < ts.len() {
                        let ta = c.unit_tangent(ts[i])?;
                        let tb = c.unit_tangent(ts[i + 1])?;
                        let turn = ta.cross(tb).atan2(ta.dot(tb)).abs();
                        if turn > MAX_TURN && ts.len() < 100_000 {
                            let mid = c.param_at_arc_fraction(ts[i], ts[i + 1], 0.5)?;
                            ts.insert(i + 1, mid);
                        } else {
                            i += 1;
                        }
                    }
                    if *t0 > *t1 {
                        ts.reverse();
                    }
                    let points = ts.iter().map(|&t| c.eval(t)).collect::<Result<_>>()?;
                    SideDisc {
                        key: this,
                        params: ts,
                        points,
                    }
                }
                (SideGeom::Wall { curve, t0, t1 }, _) => {
                    let c = geom.curve(*curve);
                    SideDisc {
                        key: this,
                        params: vec![*t0, *t1],
                        points: vec![c.eval(*t0)?, c.eval(*t1)?],
                    }
                }
                _ => {
                    let a = b.corners[s as usize];
                    let bb = b.corners[(s as usize + 1) % 4];
                    SideDisc {
                        key: this,
                        params: vec![0.0, 1.0],
                        points: vec![a, bb],
                    }
                }
            };
            set.map.insert(this, disc);
            set.alias.insert(this, (this, false));
        }
    }
    Ok(set)
}

/// Fill every block with linear quads and weld the result into one mesh.
pub fn sweep_blocks(geom: &Geometry, g: &BlockGraph, sides: &SideSet) -> Result<Mesh> {
    // shared-side interval counts must agree (they do by construction since
    // shared sides are stored once; verify the pairing exists)
    for &(a, b) in &g.adjacency {
        let ka = sides.interval_count(a.0, a.1);
        let kb = sides.interval_count(b.0, b.1);
        if ka != kb {
            return Err(Error::Conformality(format!(
                "side count mismatch between block {} side {} ({ka}) and block {} side {} ({kb})",
                a.0, a.1, b.0, b.1
            )));
        }
    }
    let last_wake = g
        .blocks
        .iter()
        .filter(|b| b.kind == BlockKind::Wake)
        .max_by(|a, b| {
            a.wake_x
                .unwrap()
                .1
                .partial_cmp(&b.wake_x.unwrap().1)
                .unwrap()
        })
        .map(|b| b.id);
    let side_patch = |b: &crate::partition::Block, s: u8| -> Option<String> {
        if g.neighbor(b.id, s).is_some() {
            return None;
        }
        match &b.sides[s as usize] {
            SideGeom::Wall { curve, .. } => {
                Some(format!("wall:{}", geom.curve(*curve).entity))
            }
            _ => {
                if Some(b.id) == last_wake && s == 1 {
                    Some("wake-end".to_string())
                } else {
                    Some("skin".to_string())
                }
            }
        }
    };

    let mut pool = NodePool::new(1e-12);
    let mut elements: Vec<Element> = Vec::new();
    let push_quad =
        |pool: &mut NodePool,
         elements: &mut Vec<Element>,
         pts: [(Point, Option<(CurveId, f64)>); 4],
         block: u32,
         patches: [Option<String>; 4]| {
            let nodes = pts.map(|(p, a)| pool.insert(p, a)).to_vec();
            elements.push(Element {
                id: elements.len() as u32,
                kind: ElemKind::Quad,
                order: 1,
                nodes,
                block: Some(block),
                patches: patches.to_vec(),
            });
        };

    for b in &g.blocks {
        match b.kind {
            BlockKind::Loop => {
                let SideGeom::Wall { curve, .. } = &b.sides[0] else {
                    return Err(Error::Partition(format!(
                        "loop block {} lacks a wall side",
                        b.id
                    )));
                };
                let c = geom.curve(*curve);
                let SideGeom::Offset { dist, .. } = &b.sides[2] else {
                    return Err(Error::Partition(format!(
                        "loop block {} lacks an offset side",
                        b.id
                    )));
                };
                let ts = sides.params(b.id, 0);
                let k = ts.len() - 1;
                let wall_pts = sides.points(b.id, 0);
                let mut outer_pts: Vec<Point> = Vec::with_capacity(k + 1);
                for (i, &t) in ts.iter().enumerate() {
                    if i == 0 {
                        outer_pts.push(b.corners[3]);
                    } else if i == k {
                        outer_pts.push(b.corners[2]);
                    } else {
                        let n = c.unit_tangent(t)?.left_normal();
                        outer_pts.push(c.eval(t)? + n * *dist);
                    }
                }
                let wall_patch = side_patch(b, 0);
                let outer_patch = side_patch(b, 2);
                let left_patch = side_patch(b, 3);
                let right_patch = side_patch(b, 1);
                for i in 0..k {
                    let p3 = if i == 0 { left_patch.clone() } else { None };
                    let p1 = if i == k - 1 { right_patch.clone() } else { None };
                    push_quad(
                        &mut pool,
                        &mut elements,
                        [
                            (wall_pts[i], Some((*curve, ts[i]))),
                            (wall_pts[i + 1], Some((*curve, ts[i + 1]))),
                            (outer_pts[i + 1], None),
                            (outer_pts[i], None),
                        ],
                        b.id,
                        [wall_patch.clone(), p1, outer_patch.clone(), p3],
                    );
                }
            }
            BlockKind::TeCorner | BlockKind::Junction | BlockKind::Wake => {
                let mut assoc: [Option<(CurveId, f64)>; 4] = [None; 4];
                for s in 0..4usize {
                    if let SideGeom::Wall { curve, t0, t1 } = &b.sides[s] {
                        assoc[s] = Some((*curve, *t0));
                        assoc[(s + 1) % 4] = Some((*curve, *t1));
                    }
                }
                let patches = [
                    side_patch(b, 0),
                    side_patch(b, 1),
                    side_patch(b, 2),
                    side_patch(b, 3),
                ];
                push_quad(
                    &mut pool,
                    &mut elements,
                    [
                        (b.corners[0], assoc[0]),
                        (b.corners[1], assoc[1]),
                        (b.corners[2], assoc[2]),
                        (b.corners[3], assoc[3]),
                    ],
                    b.id,
                    patches,
                );
            }
        }
    }
    Ok(Mesh {
        nodes: pool.nodes,
        elements,
    })
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ConformalityReport {
    pub interior_edges: usize,
    pub boundary_edges: usize,
    pub violations: Vec<String>,
}

impl ConformalityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Edge-incidence, node-welding and linear-Jacobian verification.
pub fn conformality_check(m: &Mesh) -> ConformalityReport {
    let mut report = ConformalityReport::default();
    // edge incidence on vertex pairs
    let mut incidence: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for e in &m.elements {
        for s in 0..e.kind.vertex_count() {
            incidence.entry(e.edge_key(s)).or_default().push(e.id);
        }
    }
    for (key, elems) in &incidence {
        match elems.len() {
            1 => report.boundary_edges += 1,
            2 => report.interior_edges += 1,
            n => report.violations.push(format!(
                "edge ({}, {}) shared by {n} elements: {:?}",
                key.0, key.1, elems
            )),
        }
    }
    // node welding: no two distinct nodes within 1e-12
    let mut order: Vec<u32> = (0..m.nodes.len() as u32).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (m.nodes[a as usize].p, m.nodes[b as usize].p);
        pa.x.partial_cmp(&pb.x).unwrap().then(pa.y.partial_cmp(&pb.y).unwrap())
    });
    for w in order.windows(2) {
        let (a, b) = (m.nodes[w[0] as usize].p, m.nodes[w[1] as usize].p);
        if a.dist(b) <= 1e-12 {
            report
                .violations
                .push(format!("unwelded duplicate nodes {} and {}", w[0], w[1]));
        }
    }
    // positive linear Jacobians at element vertices
    for e in &m.elements {
        let nv = e.kind.vertex_count();
        for i in 0..nv {
            let a = m.nodes[e.nodes[(i + nv - 1) % nv] as usize].p;
            let b = m.nodes[e.nodes[i] as usize].p;
            let c = m.nodes[e.nodes[(i + 1) % nv] as usize].p;
            if (b - a).cross(c - b) <= 0.0 {
                report.violations.push(format!(
                    "element {} has non-positive corner Jacobian at vertex {i}",
                    e.id
                ));
            }
        }
    }
    report
}
