//! Near-field block decomposition: O/C/H rings around bodies, trailing-edge
//! corner blocks, wake columns with linear widening, and junction blocks at
//! concave wall corners.

use crate::error::{Error, Result};
use crate::geom::{dist_point_segment, pt, segment_intersection, Point};
use crate::geomkit::{CurveId, Geometry};
use crate::medial::{MedialEdge, Shell};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    O,
    C,
    H,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    Loop,
    TeCorner,
    Junction,
    Wake,
}

/// Per-side geometry attachment. Parameters are listed in side direction and
/// may decrease.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SideGeom {
    /// Side lies on a boundary curve between the two parameters.
    Wall { curve: CurveId, t0: f64, t1: f64 },
    /// Side is the offset of a curve interval at the given distance; interior
    /// nodes are exact offsets, endpoints are the block corners.
    Offset {
        curve: CurveId,
        t0: f64,
        t1: f64,
        dist: f64,
    },
    Straight,
}

/// Quadrilateral block. Side i runs from corners[i] to corners[(i+1) % 4];
/// corners are CCW. Loop blocks have side 0 on the wall and side 2 on the
/// outer shell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Block {
    pub id: u32,
    pub kind: BlockKind,
    pub corners: [Point; 4],
    pub sides: [SideGeom; 4],
    /// Streamwise x-interval for wake columns.
    pub wake_x: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WakeParams {
    /// Wake chain length (chords); after construction this is the realized
    /// length, which may be shorter than requested when a gap is enforced.
    pub length: f64,
    pub half_angle_deg: f64,
    pub columns: u32,
    /// Required clearance between the wake chain and any wall shell.
    pub gap: Option<f64>,
}

impl Default for WakeParams {
    fn default() -> Self {
        WakeParams {
            length: 2.0,
            half_angle_deg: 0.0,
            columns: 8,
            gap: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockGraph {
    pub blocks: Vec<Block>,
    /// Shared-side pairs, symmetric by construction.
    pub adjacency: Vec<((u32, u8), (u32, u8))>,
    pub topology: Topology,
    pub wake: WakeParams,
    pub thickness: f64,
}

impl BlockGraph {
    pub fn block(&self, id: u32) -> &Block {
        &self.blocks[id as usize]
    }

    /// The partner of (block, side), if the side is shared.
    pub fn neighbor(&self, block: u32, side: u8) -> Option<(u32, u8)> {
        for &(a, b) in &self.adjacency {
            if a == (block, side) {
                return Some(b);
            }
            if b == (block, side) {
                return Some(a);
            }
        }
        None
    }
}

/// Wake streamwise stations: geometric spacing with the given ratio from the
/// trailing edge, covering [x0, x0 + len] with m columns.
pub fn wake_stations(x0: f64, len: f64, m: u32, ratio: f64) -> Vec<f64> {
    let m = m.max(1) as usize;
    let first = if (ratio - 1.0).abs() < 1e-12 {
        len / m as f64
    } else {
        len * (ratio - 1.0) / (ratio.powi(m as i32) - 1.0)
    };
    let mut xs = Vec::with_capacity(m + 1);
    let mut x = x0;
    let mut step = first;
    xs.push(x);
    for _ in 0..m {
        x += step;
        xs.push(x);
        step *= ratio;
    }
    let last = xs.last_mut().unwrap();
    *last = x0 + len; // absorb accumulation error
    xs
}

struct Join {
    corner: Point,
    /// angle turned at the corner; negative = convex (fluid side), positive =
    /// concave
    turn: f64,
    n_prev: Point,
    n_next: Point,
}

fn loop_joins(geom: &Geometry, curves: &[CurveId], closed: bool) -> Result<Vec<Join>> {
    let n = curves.len();
    let count = if closed { n } else { n - 1 };
    let mut joins = Vec::with_capacity(count);
    for i in 0..count {
        let c_prev = geom.curve(curves[i]);
        let c_next = geom.curve(curves[(i + 1) % n]);
        let (_, hi) = c_prev.param_range();
        let (lo, _) = c_next.param_range();
        let corner = c_prev.eval(hi)?;
        let t_prev = c_prev.unit_tangent(hi)?;
        let t_next = c_next.unit_tangent(lo)?;
        joins.push(Join {
            corner,
            turn: t_prev.cross(t_next).atan2(t_prev.dot(t_next)),
            n_prev: t_prev.left_normal(),
            n_next: t_next.left_normal(),
        });
    }
    Ok(joins)
}

/// Skewed outer corner for O-topology: on the corner bisector at distance
/// T / cos(theta/2) so it lies on both adjacent offset lines.
fn skew_corner(j: &Join, t: f64) -> Point {
    let bis = (j.n_prev + j.n_next).normalized();
    j.corner + bis * (t / (0.5 * j.turn.abs()).cos())
}

struct Builder<'a> {
    geom: &'a Geometry,
    blocks: Vec<Block>,
}

impl Builder<'_> {
    fn push(
        &mut self,
        kind: BlockKind,
        corners: [Point; 4],
        sides: [SideGeom; 4],
        wake_x: Option<(f64, f64)>,
    ) -> Result<u32> {
        let id = self.blocks.len() as u32;
        for i in 0..4 {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            let c = corners[(i + 2) % 4];
            let e1 = b - a;
            let e2 = c - b;
            if e1.cross(e2) <= 1e-12 * e1.norm() * e2.norm() {
                return Err(Error::Partition(format!(
                    "block {id} ({kind:?}) is not strictly convex at corner {}",
                    (i + 1) % 4
                )));
            }
        }
        self.blocks.push(Block {
            id,
            kind,
            corners,
            sides,
            wake_x,
        });
        Ok(id)
    }

    /// Ring of loop blocks around a closed body loop. `kites` selects C-style
    /// corner blocks at convex joins instead of O-style skewed corners.
    /// `skip_curve` omits the strip of one curve (the TE face in H).
    fn ring(&mut self, shell: &Shell, kites: bool, skip_curve: Option<usize>) -> Result<()> {
        let curves = &shell.inner.curves;
        let t = shell.thickness;
        let n = curves.len();
        let joins = loop_joins(self.geom, curves, true)?;
        for j in &joins {
            if j.turn > 1e-9 {
                return Err(Error::Partition(format!(
                    "concave corner at ({}, {}) in a closed loop is not supported",
                    j.corner.x, j.corner.y
                )));
            }
        }
        // outer corners per strip end
        for i in 0..n {
            if skip_curve == Some(i) {
                continue;
            }
            let c = self.geom.curve(curves[i]);
            let (lo, hi) = c.param_range();
            let w0 = c.eval(lo)?;
            let w1 = c.eval(hi)?;
            let j_start = &joins[(i + n - 1) % n];
            let j_end = &joins[i];
            let s0 = if j_start.turn < -1e-9 {
                if kites {
                    w0 + j_start.n_next * t
                } else {
                    skew_corner(j_start, t)
                }
            } else {
                w0 + j_start.n_next * t
            };
            let s1 = if j_end.turn < -1e-9 {
                if kites {
                    w1 + j_end.n_prev * t
                } else {
                    skew_corner(j_end, t)
                }
            } else {
                w1 + j_end.n_prev * t
            };
            self.push(
                BlockKind::Loop,
                [w0, w1, s1, s0],
                [
                    SideGeom::Wall {
                        curve: curves[i],
                        t0: lo,
                        t1: hi,
                    },
                    SideGeom::Straight,
                    SideGeom::Offset {
                        curve: curves[i],
                        t0: hi,
                        t1: lo,
                        dist: t,
                    },
                    SideGeom::Straight,
                ],
                None,
            )?;
        }
        if kites {
            for (i, j) in joins.iter().enumerate() {
                if j.turn >= -1e-9 {
                    continue;
                }
                let wake_adjacent = skip_curve == Some(i) || skip_curve == Some((i + 1) % n);
                if wake_adjacent {
                    continue; // handled by the wake kites
                }
                let p = j.corner;
                let a = p + j.n_prev * t;
                let c = p + j.n_next * t;
                let m = skew_corner(j, t);
                self.push(
                    BlockKind::TeCorner,
                    [p, c, m, a],
                    [
                        SideGeom::Straight,
                        SideGeom::Straight,
                        SideGeom::Straight,
                        SideGeom::Straight,
                    ],
                    None,
                )?;
            }
        }
        Ok(())
    }
}

/// Distance between two segments (0 when they cross).
fn seg_seg_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segment_intersection(a, b, c, d).is_some() {
        return 0.0;
    }
    dist_point_segment(a, b, c)
        .min(dist_point_segment(a, b, d))
        .min(dist_point_segment(c, d, a))
        .min(dist_point_segment(c, d, b))
}

/// Wake outline (top chain, end face, bottom chain) for clearance testing.
fn wake_outline(p_u: Point, p_l: Point, x_end: f64, tan_a: f64) -> Vec<(Point, Point)> {
    let mid = (p_u + p_l) * 0.5;
    let half0 = p_u.dist(p_l) * 0.5;
    let w_end = half0 + (x_end - mid.x) * tan_a;
    let tr = pt(x_end, mid.y + w_end);
    let br = pt(x_end, mid.y - w_end);
    vec![(p_u, tr), (tr, br), (br, p_l)]
}

fn min_clearance(outline: &[(Point, Point)], obstacles: &[(Point, Point)]) -> f64 {
    let mut best = f64::INFINITY;
    for &(a, b) in outline {
        for &(c, d) in obstacles {
            best = best.min(seg_seg_distance(a, b, c, d));
        }
    }
    best
}

/// Build the near-field block decomposition. `shells[0]` is the primary body;
/// further shells are walls that receive a C-style ring of their own. For H
/// topology the primary loop must contain a curve with entity suffix "-te"
/// (the squared trailing-edge face).
pub fn build_topology(
    geom: &Geometry,
    shells: &[Shell],
    topology: Topology,
    wake: &WakeParams,
    junction_edges: &[MedialEdge],
) -> Result<BlockGraph> {
    let Some(primary) = shells.first() else {
        return Err(Error::Partition("no shells supplied".into()));
    };
    let t = primary.thickness;
    let mut b = Builder {
        geom,
        blocks: Vec::new(),
    };
    let mut wake_actual = WakeParams {
        length: 0.0,
        ..wake.clone()
    };

    if !primary.inner.closed {
        build_open_chain(geom, &mut b, primary, junction_edges)?;
    } else {
        match topology {
            Topology::O => b.ring(primary, false, None)?,
            Topology::C => b.ring(primary, true, None)?,
            Topology::H => {
                let te_idx = primary.inner.curves.iter().position(|&id| {
                    geom.curve(id).entity.ends_with("-te")
                });
                let Some(te_idx) = te_idx else {
                    return Err(Error::Partition(
                        "H topology requires an open trailing edge (no '-te' curve in loop)"
                            .into(),
                    ));
                };
                if wake.length <= 0.0 {
                    return Err(Error::Partition(format!(
                        "H topology requires a positive wake length, got {}",
                        wake.length
                    )));
                }
                b.ring(primary, true, Some(te_idx))?;
                wake_actual.length = build_wake(
                    geom,
                    &mut b,
                    primary,
                    te_idx,
                    wake,
                    &shells[1..],
                )?;
            }
        }
    }
    for wall_shell in &shells[1..] {
        if !wall_shell.inner.closed {
            return Err(Error::Partition("secondary shells must be closed".into()));
        }
        b.ring(wall_shell, true, None)?;
    }

    let blocks = b.blocks;
    let adjacency = derive_adjacency(&blocks)?;
    Ok(BlockGraph {
        blocks,
        adjacency,
        topology,
        wake: wake_actual,
        thickness: t,
    })
}

fn build_wake(
    geom: &Geometry,
    b: &mut Builder,
    primary: &Shell,
    te_idx: usize,
    wake: &WakeParams,
    wall_shells: &[Shell],
) -> Result<f64> {
    let curves = &primary.inner.curves;
    let n = curves.len();
    let t = primary.thickness;
    let te = geom.curve(curves[te_idx]);
    let (te_lo, te_hi) = te.param_range();
    let p_u = te.eval(te_lo)?;
    let p_l = te.eval(te_hi)?;
    let mid = (p_u + p_l) * 0.5;
    let half0 = p_u.dist(p_l) * 0.5;
    let tan_a = wake.half_angle_deg.to_radians().tan();
    if tan_a < 0.0 {
        return Err(Error::Partition(format!(
            "negative wake half-angle {}",
            wake.half_angle_deg
        )));
    }
    let x0 = mid.x;

    // clearance-driven truncation against wall shells
    let mut obstacles: Vec<(Point, Point)> = Vec::new();
    for ws in wall_shells {
        let o = &ws.outer;
        let m = o.len();
        for i in 0..m {
            obstacles.push((o[i], o[(i + 1) % m]));
        }
    }
    let mut length = wake.length;
    if let (Some(g), false) = (wake.gap, obstacles.is_empty()) {
        let clearance =
            |len: f64| min_clearance(&wake_outline(p_u, p_l, x0 + len, tan_a), &obstacles);
        if clearance(length) < g {
            let min_len = 1e-6 * wake.length;
            if clearance(min_len) < g {
                return Err(Error::Partition(format!(
                    "wake cannot keep gap {g} from wall shell (clearance {} at minimal length)",
                    clearance(min_len)
                )));
            }
            let (mut lo, mut hi) = (min_len, length);
            for _ in 0..100 {
                let mid_len = 0.5 * (lo + hi);
                if clearance(mid_len) >= g {
                    lo = mid_len;
                } else {
                    hi = mid_len;
                }
            }
            length = lo;
        }
    }

    let xs = wake_stations(x0, length, wake.columns, 1.2);
    let w_at = |x: f64| half0 + (x - x0) * tan_a;
    let m = xs.len() - 1;
    let mut first_col_id = 0;
    for j in 0..m {
        let (xa, xb) = (xs[j], xs[j + 1]);
        let (wa, wb) = (w_at(xa), w_at(xb));
        let corners = [
            pt(xa, mid.y - wa),
            pt(xb, mid.y - wb),
            pt(xb, mid.y + wb),
            pt(xa, mid.y + wa),
        ];
        let side3 = if j == 0 {
            SideGeom::Wall {
                curve: curves[te_idx],
                t0: te_lo,
                t1: te_hi,
            }
        } else {
            SideGeom::Straight
        };
        let id = b.push(
            BlockKind::Wake,
            corners,
            [
                SideGeom::Straight,
                SideGeom::Straight,
                SideGeom::Straight,
                side3,
            ],
            Some((xa, xb)),
        )?;
        if j == 0 {
            first_col_id = id;
        }
    }
    let _ = first_col_id;

    // wake corner kites bridging the body boundary layer and the wake top/bottom
    let j_up = &loop_joins(geom, curves, true)?[(te_idx + n - 1) % n]; // join upper -> te
    let j_lo = &loop_joins(geom, curves, true)?[te_idx]; // join te -> lower
    let x1 = xs[1];
    let top_dir = (pt(x1, mid.y + w_at(x1)) - p_u).normalized();
    let bot_dir = (pt(x1, mid.y - w_at(x1)) - p_l).normalized();
    let q1_u = pt(x1, mid.y + w_at(x1));
    let q2_u = q1_u + top_dir.left_normal() * t;
    let a_u = p_u + j_up.n_prev * t;
    b.push(
        BlockKind::TeCorner,
        [p_u, q1_u, q2_u, a_u],
        [
            SideGeom::Straight,
            SideGeom::Straight,
            SideGeom::Straight,
            SideGeom::Straight,
        ],
        None,
    )?;
    let q1_l = pt(x1, mid.y - w_at(x1));
    let q2_l = q1_l - bot_dir.left_normal() * t;
    let a_l = p_l + j_lo.n_next * t;
    b.push(
        BlockKind::TeCorner,
        [p_l, a_l, q2_l, q1_l],
        [
            SideGeom::Straight,
            SideGeom::Straight,
            SideGeom::Straight,
            SideGeom::Straight,
        ],
        None,
    )?;
    Ok(length)
}

/// Open wall chain (corner fixture): wall strips shortened at concave joins,
/// with a junction block spanning both boundary layers at each halo.
fn build_open_chain(
    geom: &Geometry,
    b: &mut Builder,
    shell: &Shell,
    junction_edges: &[MedialEdge],
) -> Result<()> {
    let curves = &shell.inner.curves;
    let t = shell.thickness;
    let n = curves.len();
    let joins = loop_joins(geom, curves, false)?;
    // per-curve shortened parameter range
    let mut t_start: Vec<f64> = Vec::new();
    let mut t_end: Vec<f64> = Vec::new();
    for &id in curves.iter() {
        let (lo, hi) = geom.curve(id).param_range();
        t_start.push(lo);
        t_end.push(hi);
    }
    struct Junction {
        after_curve: usize,
        p: Point,
        q_a: Point,
        q_b: Point,
        halo: Point,
        ta: f64,
        tb: f64,
    }
    let mut junctions = Vec::new();
    for (i, j) in joins.iter().enumerate() {
        if j.turn <= 1e-9 {
            continue; // smooth or convex joins need no junction block
        }
        let ca = geom.curve(curves[i]);
        let cb = geom.curve(curves[i + 1]);
        let halo = shell
            .halos
            .iter()
            .min_by(|x, y| {
                x.position
                    .dist(j.corner)
                    .partial_cmp(&y.position.dist(j.corner))
                    .unwrap()
            })
            .ok_or_else(|| {
                Error::Partition(format!(
                    "concave corner at ({}, {}) has no shell halo",
                    j.corner.x, j.corner.y
                ))
            })?;
        if !junction_edges.is_empty() {
            let near = junction_edges.iter().any(|e| {
                e.polyline
                    .iter()
                    .any(|v| v.dist(halo.position) <= 2.0 * shell.spacing + 1e-12)
            });
            if !near {
                return Err(Error::Partition(format!(
                    "no medial edge meets the shell near halo ({}, {})",
                    halo.position.x, halo.position.y
                )));
            }
        }
        let (ta, _) = ca.project(halo.position);
        let (tb, _) = cb.project(halo.position);
        t_end[i] = ta;
        t_start[i + 1] = tb;
        junctions.push(Junction {
            after_curve: i,
            p: j.corner,
            q_a: ca.eval(ta)?,
            q_b: cb.eval(tb)?,
            halo: halo.position,
            ta,
            tb,
        });
    }
    // strips
    for i in 0..n {
        let c = geom.curve(curves[i]);
        let (lo, hi) = (t_start[i], t_end[i]);
        let w0 = c.eval(lo)?;
        let w1 = c.eval(hi)?;
        let s0 = w0 + c.unit_tangent(lo)?.left_normal() * t;
        let s1 = w1 + c.unit_tangent(hi)?.left_normal() * t;
        b.push(
            BlockKind::Loop,
            [w0, w1, s1, s0],
            [
                SideGeom::Wall {
                    curve: curves[i],
                    t0: lo,
                    t1: hi,
                },
                SideGeom::Straight,
                SideGeom::Offset {
                    curve: curves[i],
                    t0: hi,
                    t1: lo,
                    dist: t,
                },
                SideGeom::Straight,
            ],
            None,
        )?;
    }
    for j in junctions {
        let ca_id = curves[j.after_curve];
        let cb_id = curves[j.after_curve + 1];
        let (_, ca_hi) = geom.curve(ca_id).param_range();
        let (cb_lo, _) = geom.curve(cb_id).param_range();
        b.push(
            BlockKind::Junction,
            [j.p, j.q_b, j.halo, j.q_a],
            [
                SideGeom::Wall {
                    curve: cb_id,
                    t0: cb_lo,
                    t1: j.tb,
                },
                SideGeom::Straight,
                SideGeom::Straight,
                SideGeom::Wall {
                    curve: ca_id,
                    t0: j.ta,
                    t1: ca_hi,
                },
            ],
            None,
        )?;
    }
    Ok(())
}

/// Derive shared-side adjacency by matching side endpoints within 1e-10.
fn derive_adjacency(blocks: &[Block]) -> Result<Vec<((u32, u8), (u32, u8))>> {
    let tol = 1e-10;
    let mut pairs = Vec::new();
    let mut matched: Vec<Option<(u32, u8)>> = vec![None; blocks.len() * 4];
    for (bi, blk) in blocks.iter().enumerate() {
        for si in 0..4usize {
            let a0 = blk.corners[si];
            let a1 = blk.corners[(si + 1) % 4];
            for (bj, other) in blocks.iter().enumerate().skip(bi) {
                for sj in 0..4usize {
                    if bi == bj && sj <= si {
                        continue;
                    }
                    let b0 = other.corners[sj];
                    let b1 = other.corners[(sj + 1) % 4];
                    if a0.dist(b1) < tol && a1.dist(b0) < tol {
                        let key_a = bi * 4 + si;
                        let key_b = bj * 4 + sj;
                        if matched[key_a].is_some() || matched[key_b].is_some() {
                            return Err(Error::Partition(format!(
                                "side shared by more than two blocks: block {bi} side {si}"
                            )));
                        }
                        matched[key_a] = Some((bj as u32, sj as u8));
                        matched[key_b] = Some((bi as u32, si as u8));
                        pairs.push(((bi as u32, si as u8), (bj as u32, sj as u8)));
                    }
                }
            }
        }
    }
    Ok(pairs)
}

/// Check all BlockGraph invariants; returns human-readable violations.
pub fn validate_blocks(geom: &Geometry, g: &BlockGraph) -> Vec<String> {
    let mut report = Vec::new();
    for blk in &g.blocks {
        for i in 0..4 {
            let a = blk.corners[i];
            let b = blk.corners[(i + 1) % 4];
            let c = blk.corners[(i + 2) % 4];
            let e1 = b - a;
            let e2 = c - b;
            if e1.cross(e2) <= 1e-12 * e1.norm() * e2.norm() {
                report.push(format!(
                    "block {} not strictly convex at corner {}",
                    blk.id,
                    (i + 1) % 4
                ));
            }
        }
        for (si, side) in blk.sides.iter().enumerate() {
            if let SideGeom::Wall { curve, t0, t1 } | SideGeom::Offset { curve, t0, t1, .. } =
                side
            {
                if curve.0 as usize >= geom.curves.len() {
                    report.push(format!(
                        "block {} side {si} references missing curve {}",
                        blk.id, curve.0
                    ));
                    continue;
                }
                let (lo, hi) = geom.curve(*curve).param_range();
                let eps = 1e-9 * (hi - lo).max(1.0);
                for t in [t0, t1] {
                    if *t < lo - eps || *t > hi + eps {
                        report.push(format!(
                            "block {} side {si} parameter {t} outside [{lo}, {hi}]",
                            blk.id
                        ));
                    }
                }
            }
        }
    }
    let mut seen: Vec<(u32, u8)> = Vec::new();
    for &(a, bside) in &g.adjacency {
        for key in [a, bside] {
            if seen.contains(&key) {
                report.push(format!(
                    "side shared by more than two blocks: block {} side {}",
                    key.0, key.1
                ));
            }
            seen.push(key);
        }
        let (ba, sa) = a;
        let (bb, sb) = bside;
        if ba as usize >= g.blocks.len() || bb as usize >= g.blocks.len() {
            report.push(format!("adjacency references missing block {ba} or {bb}"));
            continue;
        }
        let blk_a = g.block(ba);
        let blk_b = g.block(bb);
        let a0 = blk_a.corners[sa as usize];
        let a1 = blk_a.corners[(sa as usize + 1) % 4];
        let b0 = blk_b.corners[sb as usize];
        let b1 = blk_b.corners[(sb as usize + 1) % 4];
        if !(a0.dist(b1) < 1e-10 && a1.dist(b0) < 1e-10) {
            report.push(format!(
                "shared side mismatch: block {ba} side {sa} vs block {bb} side {sb}"
            ));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomkit::TrailingEdge;
    use crate::medial::{approximate_medial, build_shell};
    use crate::presets;

    fn naca_shell(t: f64) -> (Geometry, Shell) {
        let mut geom = Geometry::default();
        let body = presets::naca4(&mut geom, "0012", TrailingEdge::Open).unwrap();
        let shell = build_shell(&geom, &body.boundary, t, t / 20.0).unwrap();
        (geom, shell)
    }

    #[test]
    fn o_topology_counts() {
        let (geom, shell) = naca_shell(0.05);
        let g = build_topology(&geom, &[shell], Topology::O, &WakeParams::default(), &[])
            .unwrap();
        assert_eq!(g.blocks.len(), 3);
        assert!(g.blocks.iter().all(|b| b.kind == BlockKind::Loop));
        assert!(validate_blocks(&geom, &g).is_empty());
        // closed ring: every normal side shared
        for b in &g.blocks {
            assert!(g.neighbor(b.id, 1).is_some());
            assert!(g.neighbor(b.id, 3).is_some());
        }
    }

    #[test]
    fn c_topology_counts() {
        let (geom, shell) = naca_shell(0.05);
        let g = build_topology(&geom, &[shell], Topology::C, &WakeParams::default(), &[])
            .unwrap();
        let te_corners = g
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::TeCorner)
            .count();
        assert_eq!(te_corners, 2);
        assert_eq!(g.blocks.len(), 5);
        assert!(validate_blocks(&geom, &g).is_empty());
    }

    #[test]
    fn h_topology_counts_and_width() {
        let (geom, shell) = naca_shell(0.05);
        let wake = WakeParams {
            length: 2.0,
            half_angle_deg: 3.0,
            columns: 8,
            gap: None,
        };
        let g = build_topology(&geom, &[shell], Topology::H, &wake, &[]).unwrap();
        let wakes: Vec<&Block> = g
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Wake)
            .collect();
        assert_eq!(wakes.len(), 8);
        assert_eq!(
            g.blocks
                .iter()
                .filter(|b| b.kind == BlockKind::TeCorner)
                .count(),
            2
        );
        assert!(validate_blocks(&geom, &g).is_empty());
        // far-end cross-flow width: TE thickness + 2 L_w tan(alpha)
        let last = wakes
            .iter()
            .max_by(|a, b| {
                a.wake_x
                    .unwrap()
                    .1
                    .partial_cmp(&b.wake_x.unwrap().1)
                    .unwrap()
            })
            .unwrap();
        let width = last.corners[1].dist(last.corners[2]);
        let te_thickness = 2.0
            * crate::geomkit::naca_half_thickness(0.12, TrailingEdge::Open, 1.0);
        let expected = te_thickness + 2.0 * 2.0 * (3.0f64).to_radians().tan();
        assert!(
            (width - expected).abs() < 1e-12,
            "width {width} vs {expected}"
        );
        // widening monotone
        let mut sorted = wakes.clone();
        sorted.sort_by(|a, b| a.wake_x.unwrap().0.partial_cmp(&b.wake_x.unwrap().0).unwrap());
        for w in sorted.windows(2) {
            let w0 = w[0].corners[0].dist(w[0].corners[3]);
            let w1 = w[1].corners[0].dist(w[1].corners[3]);
            assert!(w1 >= w0 - 1e-12);
        }
    }

    #[test]
    fn h_requires_open_te() {
        let mut geom = Geometry::default();
        let body = presets::naca4(&mut geom, "0012", TrailingEdge::Closed).unwrap();
        let shell = build_shell(&geom, &body.boundary, 0.05, 0.0025).unwrap();
        let r = build_topology(&geom, &[shell], Topology::H, &WakeParams::default(), &[]);
        assert!(matches!(r, Err(Error::Partition(_))));
    }

    #[test]
    fn wake_gap_truncation() {
        let (mut geom, shell) = naca_shell(0.05);
        // wall box directly behind the wake
        let wall = presets::box_body(&mut geom, "wall", pt(2.5, -0.5), pt(3.0, 0.5)).unwrap();
        let wall_shell = build_shell(&geom, &wall.boundary, 0.05, 0.0025).unwrap();
        let g_req = 0.2;
        let wake = WakeParams {
            length: 2.0, // would reach x=3.0, into the wall shell
            half_angle_deg: 3.0,
            columns: 8,
            gap: Some(g_req),
        };
        let g = build_topology(
            &geom,
            &[shell, wall_shell.clone()],
            Topology::H,
            &wake,
            &[],
        )
        .unwrap();
        assert!(g.wake.length < 2.0);
        // realized clearance respects the gap
        let mut min_d = f64::INFINITY;
        let o = &wall_shell.outer;
        for b in g.blocks.iter().filter(|b| b.kind == BlockKind::Wake) {
            for i in 0..4 {
                let (a, c) = (b.corners[i], b.corners[(i + 1) % 4]);
                for k in 0..o.len() {
                    let (p, q) = (o[k], o[(k + 1) % o.len()]);
                    min_d = min_d.min(seg_seg_distance(a, c, p, q));
                }
            }
        }
        assert!(min_d >= g_req - 1e-9, "clearance {min_d}");
        assert!(validate_blocks(&geom, &g).is_empty());
    }

    #[test]
    fn wake_gap_impossible() {
        let (mut geom, shell) = naca_shell(0.05);
        // wall beside the trailing edge: no wake length satisfies the gap
        let wall = presets::box_body(&mut geom, "wall", pt(1.0, 0.1), pt(2.0, 0.5)).unwrap();
        let wall_shell = build_shell(&geom, &wall.boundary, 0.05, 0.0025).unwrap();
        let wake = WakeParams {
            length: 2.0,
            half_angle_deg: 3.0,
            columns: 8,
            gap: Some(0.5),
        };
        let r = build_topology(&geom, &[shell, wall_shell], Topology::H, &wake, &[]);
        assert!(matches!(r, Err(Error::Partition(_))));
    }

    #[test]
    fn corner_junction_block() {
        let mut geom = Geometry::default();
        let body = presets::corner_walls(&mut geom, 1.0).unwrap();
        let t = 0.1;
        let shell = build_shell(&geom, &body.boundary, t, t / 20.0).unwrap();
        let medial = approximate_medial(&geom, &body.boundary, t / 20.0, 3.0 * t).unwrap();
        let g = build_topology(
            &geom,
            &[shell],
            Topology::O,
            &WakeParams::default(),
            &medial,
        )
        .unwrap();
        let junctions: Vec<&Block> = g
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Junction)
            .collect();
        assert_eq!(junctions.len(), 1);
        let j = junctions[0];
        // square [0,T]^2 with the halo as outer corner
        assert!(j.corners[0].dist(pt(0.0, 0.0)) < 1e-9);
        assert!(j.corners[2].dist(pt(t, t)) <= 2.0 * t / 20.0);
        // two wall sides
        let walls = j
            .sides
            .iter()
            .filter(|s| matches!(s, SideGeom::Wall { .. }))
            .count();
        assert_eq!(walls, 2);
        // junction shares sides with both strips
        assert!(g.neighbor(j.id, 1).is_some());
        assert!(g.neighbor(j.id, 2).is_some());
        assert!(validate_blocks(&geom, &g).is_empty());
    }

    #[test]
    fn validate_flags_constructed_failures() {
        let (geom, shell) = naca_shell(0.05);
        let mut g = build_topology(&geom, &[shell], Topology::O, &WakeParams::default(), &[])
            .unwrap();
        // perturb a corner to break convexity
        let c = g.blocks[0].corners[2];
        g.blocks[0].corners[2] = g.blocks[0].corners[3].lerp(c, -0.5);
        let report = validate_blocks(&geom, &g);
        assert!(report.iter().any(|r| r.contains("convex")));
        // constructed triple-shared side
        let extra = ((0u32, 1u8), (2u32, 3u8));
        g.adjacency.push(extra);
        let report = validate_blocks(&geom, &g);
        assert!(report.iter().any(|r| r.contains("more than two")));
    }

    #[test]
    fn wake_stations_geometric() {
        let xs = wake_stations(1.0, 2.0, 8, 1.2);
        assert_eq!(xs.len(), 9);
        assert!((xs[0] - 1.0).abs() < 1e-15);
        assert!((xs[8] - 3.0).abs() < 1e-12);
        // oracle: geometric series sum
        let first = 2.0 * (1.2 - 1.0) / (1.2f64.powi(8) - 1.0);
        assert!((xs[1] - xs[0] - first).abs() < 1e-12);
        for i in 1..7 {
            let r = (xs[i + 1] - xs[i]) / (xs[i] - xs[i - 1]);
            assert!((r - 1.2).abs() < 1e-9, "ratio {r}");
        }
    }
}
