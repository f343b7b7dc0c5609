//! Near-field shell construction by boundary offsetting, halo detection at
//! shell self-intersections, and a Voronoi-of-samples approximation of the
//! medial set between distinct boundary entities.

use crate::error::{Error, Result};
use crate::geom::{pt, segment_intersection, winding_number, Point};
use crate::geomkit::{BoundaryLoop, Curve, Geometry};
use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HaloPoint {
    pub position: Point,
    pub source_entities: (String, String),
    /// Distance to both source entities; equals the shell thickness.
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Shell {
    pub inner: BoundaryLoop,
    /// Trimmed offset polyline; closed ring for closed loops, open otherwise.
    pub outer: Vec<Point>,
    /// Originating curve index (position in `inner.curves`) per outer vertex;
    /// halo/trim intersection points carry the earlier of the two sources.
    pub outer_source: Vec<usize>,
    pub thickness: f64,
    pub spacing: f64,
    pub halos: Vec<HaloPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MedialEdge {
    pub polyline: Vec<Point>,
    pub source_entities: (String, String),
    /// Per-vertex clearance (distance to both source entities).
    pub radius_profile: Vec<f64>,
}

/// One offset piece per boundary curve, before welding and trimming.
struct OffsetPiece {
    entity: String,
    curve_index: usize,
    pts: Vec<Point>,
}

/// Offset every curve of the loop by `t`, weld smooth joins, insert arcs at
/// convex corners, record self-intersections as halos, and trim interior
/// overhangs at concave corners.
pub fn build_shell(
    geom: &Geometry,
    boundary: &BoundaryLoop,
    t: f64,
    delta: f64,
) -> Result<Shell> {
    if t <= 0.0 {
        return Err(Error::Argument(format!(
            "shell thickness must be positive, got {t}"
        )));
    }
    let curves: Vec<&Curve> = boundary.curves.iter().map(|&id| geom.curve(id)).collect();
    let mut pieces = Vec::with_capacity(curves.len());
    for (i, c) in curves.iter().enumerate() {
        let (_, pts) = c.offset_samples(t, delta)?;
        if pts.len() < 2 {
            return Err(Error::Geometric(format!(
                "offset of curve '{}' collapsed",
                c.name
            )));
        }
        pieces.push(OffsetPiece {
            entity: c.entity.clone(),
            curve_index: i,
            pts,
        });
    }
    let halos = detect_halos_internal(&pieces, delta, t);

    // weld pieces into one raw polyline, inserting arcs at convex corners
    let n = pieces.len();
    let joins = if boundary.closed { n } else { n - 1 };
    let mut raw: Vec<Point> = Vec::new();
    let mut src: Vec<usize> = Vec::new();
    for (i, piece) in pieces.iter().enumerate() {
        for &p in &piece.pts {
            if raw.last().is_some_and(|q: &Point| q.dist(p) < 1e-12) {
                continue;
            }
            raw.push(p);
            src.push(piece.curve_index);
        }
        if i < joins {
            let c_prev = curves[i];
            let c_next = curves[(i + 1) % n];
            let (_, hi) = c_prev.param_range();
            let (lo, _) = c_next.param_range();
            let corner = c_prev.eval(hi)?;
            let tan_prev = c_prev.unit_tangent(hi)?;
            let tan_next = c_next.unit_tangent(lo)?;
            let turn = tan_prev.cross(tan_next).atan2(tan_prev.dot(tan_next));
            if turn < -1e-9 {
                // convex corner (fluid on the left): bridge the gap with an arc
                let a0 = tan_prev.left_normal().angle();
                let steps = ((t * turn.abs() / delta).ceil() as usize).max(1);
                for k in 1..steps {
                    let a = a0 + turn * k as f64 / steps as f64;
                    raw.push(corner + pt(a.cos(), a.sin()) * t);
                    src.push(piece.curve_index);
                }
            }
            // concave corners overlap; trimming below removes the overhang
        }
    }
    if boundary.closed && raw.len() > 1 && raw[0].dist(*raw.last().unwrap()) < 1e-12 {
        raw.pop();
        src.pop();
    }
    let (outer, outer_source) = trim_overhangs(raw, src, boundary.closed);
    let min_pts = if boundary.closed { 3 } else { 2 };
    if outer.len() < min_pts {
        return Err(Error::Geometric(format!(
            "shell outer loop collapsed (thickness {t} exceeds local medial radius)"
        )));
    }
    for piece in &pieces {
        if !outer_source.contains(&piece.curve_index) {
            return Err(Error::Geometric(format!(
                "offset of curve '{}' fully trimmed away (thickness {t} too large)",
                curves[piece.curve_index].name
            )));
        }
    }
    Ok(Shell {
        inner: boundary.clone(),
        outer,
        outer_source,
        thickness: t,
        spacing: delta,
        halos,
    })
}

/// All pairwise segment intersections between offsets of distinct entities
/// plus self-intersections within one offset, deduplicated within radius
/// 2*delta and sorted by (entity pair, x, y).
pub fn detect_halos(offsets: &[(Vec<Point>, String)], delta: f64, radius: f64) -> Vec<HaloPoint> {
    let pieces: Vec<OffsetPiece> = offsets
        .iter()
        .enumerate()
        .map(|(i, (pts, entity))| OffsetPiece {
            entity: entity.clone(),
            curve_index: i,
            pts: pts.clone(),
        })
        .collect();
    detect_halos_internal(&pieces, delta, radius)
}

fn detect_halos_internal(pieces: &[OffsetPiece], delta: f64, radius: f64) -> Vec<HaloPoint> {
    let mut raw: Vec<(String, String, Point)> = Vec::new();
    let mut push = |a: &OffsetPiece, b: &OffsetPiece, x: Point| {
        let (ea, eb) = if a.entity <= b.entity {
            (a.entity.clone(), b.entity.clone())
        } else {
            (b.entity.clone(), a.entity.clone())
        };
        raw.push((ea, eb, x));
    };
    for (pi, a) in pieces.iter().enumerate() {
        for b in pieces.iter().skip(pi) {
            let same = a.curve_index == b.curve_index;
            for i in 0..a.pts.len().saturating_sub(1) {
                let j0 = if same { i + 2 } else { 0 };
                for j in j0..b.pts.len().saturating_sub(1) {
                    if same && i == 0 && j == a.pts.len() - 2 {
                        continue; // closed-piece wrap adjacency
                    }
                    let (s0, s1, s2, s3) = (a.pts[i], a.pts[i + 1], b.pts[j], b.pts[j + 1]);
                    if let Some(x) = segment_intersection(s0, s1, s2, s3) {
                        // a touch at a vertex both polylines pass through is
                        // not a transversal crossing; the vertex pass below
                        // decides whether the polylines actually cross there
                        let at_a = x.dist(s0) < 1e-9 || x.dist(s1) < 1e-9;
                        let at_b = x.dist(s2) < 1e-9 || x.dist(s3) < 1e-9;
                        if at_a && at_b {
                            continue;
                        }
                        push(a, b, x);
                    }
                }
            }
            // vertex pass: crossings exactly at coincident interior vertices
            if !same {
                for i in 1..a.pts.len().saturating_sub(1) {
                    for j in 1..b.pts.len().saturating_sub(1) {
                        let x = a.pts[i];
                        if x.dist(b.pts[j]) >= 1e-9 {
                            continue;
                        }
                        let d1 = a.pts[i - 1] - x;
                        let d2 = a.pts[i + 1] - x;
                        let e1 = b.pts[j - 1] - x;
                        let e2 = b.pts[j + 1] - x;
                        if vertex_crossing(d1, d2, e1, e2) {
                            push(a, b, x);
                        }
                    }
                }
            }
        }
    }
    raw.sort_by(|l, r| {
        (l.0.as_str(), l.1.as_str())
            .cmp(&(r.0.as_str(), r.1.as_str()))
            .then(l.2.x.partial_cmp(&r.2.x).unwrap())
            .then(l.2.y.partial_cmp(&r.2.y).unwrap())
    });
    let mut halos: Vec<HaloPoint> = Vec::new();
    for (ea, eb, p) in raw {
        let dup = halos
            .iter()
            .any(|h| h.source_entities == (ea.clone(), eb.clone()) && h.position.dist(p) <= 2.0 * delta);
        if !dup {
            halos.push(HaloPoint {
                position: p,
                source_entities: (ea, eb),
                radius,
            });
        }
    }
    halos
}

/// Whether polyline B (arriving along -e1, leaving along e2) crosses
/// polyline A (arriving along -d1, leaving along d2) at their common vertex:
/// true when exactly one of B's directions lies inside the CCW cone d1 -> d2.
fn vertex_crossing(d1: Point, d2: Point, e1: Point, e2: Point) -> bool {
    let turn = d1.cross(d2);
    let in_cone = |v: Point| -> bool {
        if turn > 1e-30 {
            d1.cross(v) > 0.0 && d2.cross(v) < 0.0
        } else if turn < -1e-30 {
            d1.cross(v) > 0.0 || d2.cross(v) < 0.0
        } else if d1.dot(d2) < 0.0 {
            // straight through: half-plane on the left of d1
            d1.cross(v) > 0.0
        } else {
            false // cusp, no well-defined side
        }
    };
    in_cone(e1) != in_cone(e2)
}

/// Remove loops from a self-intersecting polyline by cutting from the first
/// intersecting segment pair to the intersection point. Keeps the component
/// on the offset (fluid) side; pockets beyond concave corners are discarded.
fn trim_overhangs(
    mut pts: Vec<Point>,
    mut src: Vec<usize>,
    closed: bool,
) -> (Vec<Point>, Vec<usize>) {
    loop {
        let n = pts.len();
        if n < 4 {
            return (pts, src);
        }
        // coincident vertex visits: drop the loop between them
        let mut vertex_cut: Option<(usize, usize)> = None;
        'vouter: for i in 0..n {
            for j in i + 2..n {
                if closed && i == 0 && j == n - 1 {
                    continue;
                }
                if pts[i].dist(pts[j]) < 1e-12 {
                    vertex_cut = Some((i, j));
                    break 'vouter;
                }
            }
        }
        if let Some((i, j)) = vertex_cut {
            pts.drain(i + 1..=j);
            src.drain(i + 1..=j);
            continue;
        }
        let seg_count = if closed { n } else { n - 1 };
        let mut cut: Option<(usize, usize, Point)> = None;
        'outer: for i in 0..seg_count {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            for j in i + 2..seg_count {
                if closed && i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (pts[j], pts[(j + 1) % n]);
                if let Some(x) = segment_intersection(a, b, c, d) {
                    let at_first = x.dist(a) < 1e-12 || x.dist(b) < 1e-12;
                    let at_second = x.dist(c) < 1e-12 || x.dist(d) < 1e-12;
                    if at_first && at_second {
                        continue; // touch at a shared vertex, not a crossing
                    }
                    cut = Some((i, j, x));
                    break 'outer;
                }
            }
        }
        match cut {
            None => return (pts, src),
            Some((i, j, x)) => {
                // replace the loop pts[i+1..=j] with the intersection point
                let keep_src = src[i];
                pts.splice(i + 1..=j, std::iter::once(x));
                src.splice(i + 1..=j, std::iter::once(keep_src));
            }
        }
    }
}

struct TaggedVertex {
    p: Point2<f64>,
    tag: u32,
}

impl HasPosition for TaggedVertex {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.p
    }
}

/// Boundary sample with its entity index.
pub struct BoundarySample {
    pub p: Point,
    pub entity: u32,
}

/// Sample every curve of the loop at arc spacing <= delta.
pub fn sample_boundary(
    geom: &Geometry,
    boundary: &BoundaryLoop,
    delta: f64,
) -> Result<(Vec<BoundarySample>, Vec<String>)> {
    let mut entities: Vec<String> = Vec::new();
    let mut samples = Vec::new();
    for &id in &boundary.curves {
        let c = geom.curve(id);
        let tag = match entities.iter().position(|e| e == &c.entity) {
            Some(i) => i as u32,
            None => {
                entities.push(c.entity.clone());
                entities.len() as u32 - 1
            }
        };
        let (lo, hi) = c.param_range();
        let n = ((c.total_arc_length() / delta).ceil() as usize).max(1);
        for k in 0..=n {
            let t = c.param_at_arc_fraction(lo, hi, k as f64 / n as f64)?;
            samples.push(BoundarySample {
                p: c.eval(t)?,
                entity: tag,
            });
        }
    }
    Ok((samples, entities))
}

/// Approximate the exterior medial set of the boundary: Voronoi edges (duals
/// of Delaunay edges of the boundary samples) whose two nearest sites carry
/// distinct entity tags and whose clearance is at most `t_max`.
pub fn approximate_medial(
    geom: &Geometry,
    boundary: &BoundaryLoop,
    delta: f64,
    t_max: f64,
) -> Result<Vec<MedialEdge>> {
    let (samples, entities) = sample_boundary(geom, boundary, delta)?;
    if samples.len() < 3 {
        return Err(Error::Geometric("too few boundary samples".into()));
    }
    let mut tri: DelaunayTriangulation<TaggedVertex> = DelaunayTriangulation::new();
    for s in &samples {
        tri.insert(TaggedVertex {
            p: Point2::new(s.p.x, s.p.y),
            tag: s.entity,
        })
        .map_err(|e| Error::Geometric(format!("delaunay insertion failed: {e:?}")))?;
    }
    if tri.num_inner_faces() == 0 {
        return Err(Error::Geometric(
            "degenerate (collinear) boundary sample set".into(),
        ));
    }
    // interior predicate: for a closed body loop the medial set of interest
    // lies in the fluid, i.e. outside the loop polygon
    let loop_poly: Vec<Point> = samples.iter().map(|s| s.p).collect();
    let exclude_inside = boundary.closed;
    let mut segs: Vec<(u32, u32, Point, Point, f64, f64)> = Vec::new();
    for edge in tri.undirected_edges() {
        let [va, vb] = edge.vertices();
        let (ta, tb) = (va.data().tag, vb.data().tag);
        if ta == tb {
            continue;
        }
        let d = edge.as_directed();
        let (Some(f1), Some(f2)) = (d.face().as_inner(), d.rev().face().as_inner()) else {
            continue;
        };
        let c1 = f1.circumcenter();
        let c2 = f2.circumcenter();
        let p1 = pt(c1.x, c1.y);
        let p2 = pt(c2.x, c2.y);
        let site = pt(va.position().x, va.position().y);
        let r1 = p1.dist(site);
        let r2 = p2.dist(site);
        if r1 > t_max || r2 > t_max {
            continue;
        }
        if exclude_inside
            && (winding_number(&loop_poly, p1) != 0 || winding_number(&loop_poly, p2) != 0)
        {
            continue;
        }
        if p1.dist(p2) < 1e-15 {
            continue;
        }
        let (lo_tag, hi_tag) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        segs.push((lo_tag, hi_tag, p1, p2, r1, r2));
    }
    // deterministic order before chaining
    segs.sort_by(|l, r| {
        (l.0, l.1)
            .cmp(&(r.0, r.1))
            .then(key(l.2).partial_cmp(&key(r.2)).unwrap())
            .then(key(l.3).partial_cmp(&key(r.3)).unwrap())
    });
    fn key(p: Point) -> (f64, f64) {
        (p.x, p.y)
    }
    Ok(chain_segments(segs, &entities))
}

/// Greedily chain Voronoi segments sharing endpoints into polylines,
/// grouped by source entity pair.
fn chain_segments(
    segs: Vec<(u32, u32, Point, Point, f64, f64)>,
    entities: &[String],
) -> Vec<MedialEdge> {
    let tol = 1e-9;
    let mut edges: Vec<MedialEdge> = Vec::new();
    let mut used = vec![false; segs.len()];
    for start in 0..segs.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (ta, tb, a, b, ra, rb) = segs[start];
        let mut poly = vec![a, b];
        let mut radii = vec![ra, rb];
        loop {
            let mut grew = false;
            for (i, s) in segs.iter().enumerate() {
                if used[i] || (s.0, s.1) != (ta, tb) {
                    continue;
                }
                let (p, q, rp, rq) = (s.2, s.3, s.4, s.5);
                let tail = *poly.last().unwrap();
                let head = poly[0];
                if tail.dist(p) < tol {
                    poly.push(q);
                    radii.push(rq);
                } else if tail.dist(q) < tol {
                    poly.push(p);
                    radii.push(rp);
                } else if head.dist(p) < tol {
                    poly.insert(0, q);
                    radii.insert(0, rq);
                } else if head.dist(q) < tol {
                    poly.insert(0, p);
                    radii.insert(0, rp);
                } else {
                    continue;
                }
                used[i] = true;
                grew = true;
            }
            if !grew {
                break;
            }
        }
        edges.push(MedialEdge {
            polyline: poly,
            source_entities: (
                entities[ta as usize].clone(),
                entities[tb as usize].clone(),
            ),
            radius_profile: radii,
        });
    }
    edges
}

/// Minimum distance from p to any curve of the loop.
pub fn dist_to_boundary(geom: &Geometry, boundary: &BoundaryLoop, p: Point) -> f64 {
    boundary
        .curves
        .iter()
        .map(|&id| geom.curve(id).project(p).1)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomkit::TrailingEdge;

    fn l_corner(geom: &mut Geometry, leg: f64) -> BoundaryLoop {
        let a = geom.add(Curve::segment("wall-v", "wall-vertical", pt(0.0, leg), pt(0.0, 0.0)));
        let b = geom.add(Curve::segment("wall-h", "wall-horizontal", pt(0.0, 0.0), pt(leg, 0.0)));
        BoundaryLoop {
            curves: vec![a, b],
            closed: false,
        }
    }

    fn naca_loop(geom: &mut Geometry, thickness: f64) -> BoundaryLoop {
        let upper = geom.add(Curve::naca_surface(
            "upper",
            "aerofoil-upper",
            thickness,
            TrailingEdge::Open,
            true,
        ));
        let y_te = crate::geomkit::naca_half_thickness(thickness, TrailingEdge::Open, 1.0);
        let te = geom.add(Curve::segment(
            "te",
            "aerofoil-te",
            pt(1.0, y_te),
            pt(1.0, -y_te),
        ));
        let lower = geom.add(
            Curve::naca_surface("lower", "aerofoil-lower", thickness, TrailingEdge::Open, false)
                .reversed(),
        );
        BoundaryLoop {
            curves: vec![upper, te, lower],
            closed: true,
        }
    }

    #[test]
    fn circle_shell_no_halos() {
        let mut geom = Geometry::default();
        let n = 2048;
        // clockwise circle: fluid (left side) is outside
        let pts: Vec<Point> = (0..=n)
            .map(|i| {
                let a = -std::f64::consts::TAU * i as f64 / n as f64;
                pt(a.cos(), a.sin())
            })
            .collect();
        let id = geom.add(Curve::polyline("circle", "cyl", pts));
        let lp = BoundaryLoop {
            curves: vec![id],
            closed: true,
        };
        let shell = build_shell(&geom, &lp, 0.1, 0.005).unwrap();
        assert!(shell.halos.is_empty());
        for p in &shell.outer {
            assert!((p.norm() - 1.1).abs() < 1e-4);
        }
    }

    #[test]
    fn l_corner_halo_at_bisector() {
        let mut geom = Geometry::default();
        let lp = l_corner(&mut geom, 1.0);
        let t = 0.1;
        let delta = t / 20.0;
        let shell = build_shell(&geom, &lp, t, delta).unwrap();
        assert_eq!(shell.halos.len(), 1, "halos: {:?}", shell.halos);
        let h = &shell.halos[0];
        assert!(h.position.dist(pt(t, t)) <= 2.0 * delta);
        // halo equidistance to both walls
        let da = geom.curve(lp.curves[0]).project(h.position).1;
        let db = geom.curve(lp.curves[1]).project(h.position).1;
        assert!((da - db).abs() <= 1e-6);
        // trimmed shell is simple and every vertex is >= t - delta from walls
        for p in &shell.outer {
            let d = dist_to_boundary(&geom, &lp, *p);
            assert!(d >= t - delta - 1e-12 && d <= t + 1e-8, "d = {d}");
        }
    }

    #[test]
    fn trimmed_shell_has_no_self_intersections() {
        let mut geom = Geometry::default();
        let lp = l_corner(&mut geom, 1.0);
        let shell = build_shell(&geom, &lp, 0.1, 0.005).unwrap();
        let o = &shell.outer;
        for i in 0..o.len() - 1 {
            for j in i + 2..o.len() - 1 {
                if let Some(x) = segment_intersection(o[i], o[i + 1], o[j], o[j + 1]) {
                    assert!(
                        x.dist(o[i + 1]) < 1e-9 || x.dist(o[j]) < 1e-9,
                        "proper self-intersection at {x:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn naca_shell_simple_no_halos() {
        let mut geom = Geometry::default();
        let lp = naca_loop(&mut geom, 0.12);
        let t = 0.05;
        let shell = build_shell(&geom, &lp, t, t / 20.0).unwrap();
        assert!(shell.halos.is_empty());
        // oracle: brute-force pairwise intersection scan on the trimmed ring
        let o = &shell.outer;
        let n = o.len();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let x = segment_intersection(o[i], o[(i + 1) % n], o[j], o[(j + 1) % n]);
                if let Some(x) = x {
                    assert!(
                        x.dist(o[(i + 1) % n]) < 1e-9 || x.dist(o[j]) < 1e-9,
                        "self-intersection at {x:?}"
                    );
                }
            }
        }
        for p in o {
            let d = dist_to_boundary(&geom, &lp, *p);
            assert!(d >= t - t / 20.0 - 1e-9 && d <= t + 1e-6, "d = {d}");
        }
    }

    #[test]
    fn detect_halos_parallel_offsets_disjoint() {
        let offs = vec![
            (vec![pt(0.0, 0.1), pt(1.0, 0.1)], "a".to_string()),
            (vec![pt(0.0, 0.9), pt(1.0, 0.9)], "b".to_string()),
        ];
        assert!(detect_halos(&offs, 0.01, 0.1).is_empty());
    }

    #[test]
    fn detect_halos_perpendicular() {
        let offs = vec![
            (vec![pt(0.1, 1.0), pt(0.1, 0.0)], "a".to_string()),
            (vec![pt(0.0, 0.1), pt(1.0, 0.1)], "b".to_string()),
        ];
        let h = detect_halos(&offs, 0.01, 0.1);
        assert_eq!(h.len(), 1);
        assert!(h[0].position.dist(pt(0.1, 0.1)) < 1e-12);
        assert_eq!(h[0].source_entities, ("a".to_string(), "b".to_string()));
    }

    #[test]
    fn medial_of_perpendicular_walls_is_bisector() {
        let mut geom = Geometry::default();
        let lp = l_corner(&mut geom, 1.0);
        let delta = 0.01;
        let t_max = 0.3;
        let edges = approximate_medial(&geom, &lp, delta, t_max).unwrap();
        assert!(!edges.is_empty());
        let mut checked = 0;
        for e in &edges {
            for (v, r) in e.polyline.iter().zip(&e.radius_profile) {
                let da = geom.curve(lp.curves[0]).project(*v).1;
                let db = geom.curve(lp.curves[1]).project(*v).1;
                assert!((da - db).abs() <= 2.0 * delta, "not equidistant: {da} vs {db}");
                // bisector of perpendicular walls through the origin is y = x
                assert!((v.x - v.y).abs() <= 2.0 * delta, "off bisector: {v:?}");
                assert!((da - r).abs() <= 2.0 * delta);
                checked += 1;
            }
        }
        assert!(checked > 5);
    }

    #[test]
    fn medial_of_parallel_walls_is_midline() {
        let mut geom = Geometry::default();
        let h = 0.15;
        let a = geom.add(Curve::segment("w0", "wall-bot", pt(0.0, 0.0), pt(1.0, 0.0)));
        let b = geom.add(Curve::segment("w1", "wall-top", pt(1.0, 2.0 * h), pt(0.0, 2.0 * h)));
        let lp = BoundaryLoop {
            curves: vec![a, b],
            closed: false,
        };
        let delta = 0.01;
        let edges = approximate_medial(&geom, &lp, delta, 0.25).unwrap();
        let mut count = 0;
        for e in &edges {
            if e.source_entities != ("wall-bot".to_string(), "wall-top".to_string()) {
                continue;
            }
            for (v, r) in e.polyline.iter().zip(&e.radius_profile) {
                if v.x < 0.1 || v.x > 0.9 {
                    continue; // end effects
                }
                assert!((v.y - h).abs() <= 2.0 * delta, "off midline: {v:?}");
                assert!((r - h).abs() <= 2.0 * delta);
                count += 1;
            }
        }
        assert!(count > 10);
    }

    #[test]
    fn medial_excludes_body_interior() {
        let mut geom = Geometry::default();
        let lp = naca_loop(&mut geom, 0.12);
        let edges = approximate_medial(&geom, &lp, 0.005, 0.05).unwrap();
        // upper/lower equidistant points inside the body must be filtered out
        let samples: Vec<Point> = {
            let (s, _) = sample_boundary(&geom, &lp, 0.005).unwrap();
            s.into_iter().map(|b| b.p).collect()
        };
        for e in &edges {
            for v in &e.polyline {
                assert_eq!(winding_number(&samples, *v), 0, "medial vertex inside body: {v:?}");
            }
        }
    }

    #[test]
    fn collinear_samples_fail() {
        let mut geom = Geometry::default();
        let a = geom.add(Curve::segment("w0", "a", pt(0.0, 0.0), pt(1.0, 0.0)));
        let b = geom.add(Curve::segment("w1", "b", pt(1.0, 0.0), pt(2.0, 0.0)));
        let lp = BoundaryLoop {
            curves: vec![a, b],
            closed: false,
        };
        assert!(matches!(
            approximate_medial(&geom, &lp, 0.1, 1.0),
            Err(Error::Geometric(_))
        ));
    }
}
