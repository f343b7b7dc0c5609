//! A-posteriori high-order enrichment: order elevation with shared-edge
//! registries, wall projection, spring relaxation of edge nodes (arc-length
//! equidistribution), interior Laplace smoothing, and sampled-Jacobian
//! validity verification.

use crate::error::{Error, Result};
use crate::geom::{pt, Point};
use crate::geomkit::Geometry;
use crate::linmesh::{ElemKind, Element, Mesh, Node};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Equidistant reference nodes on [-1, 1].
pub fn reference_nodes(p: u8) -> Vec<f64> {
    let p = p as usize;
    (0..=p).map(|i| -1.0 + 2.0 * i as f64 / p as f64).collect()
}

/// 1D Lagrange basis values at x for equidistant nodes of order p.
pub fn lagrange_1d(p: u8, x: f64) -> Vec<f64> {
    let xs = reference_nodes(p);
    let n = xs.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut v = 1.0;
        for j in 0..n {
            if j != i {
                v *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        out[i] = v;
    }
    out
}

/// Derivatives of the 1D Lagrange basis at x.
pub fn lagrange_1d_deriv(p: u8, x: f64) -> Vec<f64> {
    let xs = reference_nodes(p);
    let n = xs.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let mut term = 1.0 / (xs[i] - xs[k]);
            for j in 0..n {
                if j != i && j != k {
                    term *= (x - xs[j]) / (xs[i] - xs[j]);
                }
            }
            acc += term;
        }
        out[i] = acc;
    }
    out
}

/// Grid index (column i along xi, row j along eta) -> canonical node index.
pub fn grid_to_canonical(p: u8, i: usize, j: usize) -> usize {
    let p = p as usize;
    match (i, j) {
        (0, 0) => 0,
        (c, 0) if c == p => 1,
        (c, r) if c == p && r == p => 2,
        (0, r) if r == p => 3,
        (c, 0) => 4 + (c - 1),                        // edge 0, v0 -> v1
        (c, r) if c == p => 4 + (p - 1) + (r - 1),    // edge 1, v1 -> v2
        (c, r) if r == p => 4 + 2 * (p - 1) + (p - 1 - c), // edge 2, v2 -> v3
        (0, r) => 4 + 3 * (p - 1) + (p - 1 - r),      // edge 3, v3 -> v0
        (c, r) => 4 + 4 * (p - 1) + (r - 1) * (p - 1) + (c - 1), // interior row-major
    }
}

/// Tensor-product Lagrange mapping of a quad element; control nodes stored
/// row-major over the reference grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MappingChi {
    pub order: u8,
    pub grid: Vec<Point>,
}

impl MappingChi {
    pub fn from_element(mesh: &Mesh, e: &Element) -> MappingChi {
        assert_eq!(e.kind, ElemKind::Quad);
        let p = e.order as usize;
        let mut grid = vec![Point::default(); (p + 1) * (p + 1)];
        for j in 0..=p {
            for i in 0..=p {
                let c = grid_to_canonical(e.order, i, j);
                grid[j * (p + 1) + i] = mesh.nodes[e.nodes[c] as usize].p;
            }
        }
        MappingChi {
            order: e.order,
            grid,
        }
    }

    pub fn eval(&self, xi: f64, eta: f64) -> Point {
        let p = self.order as usize;
        let lx = lagrange_1d(self.order, xi);
        let ly = lagrange_1d(self.order, eta);
        let mut acc = pt(0.0, 0.0);
        for j in 0..=p {
            for i in 0..=p {
                acc = acc + self.grid[j * (p + 1) + i] * (lx[i] * ly[j]);
            }
        }
        acc
    }

    /// (d/dxi, d/deta) at a reference point.
    pub fn deriv(&self, xi: f64, eta: f64) -> (Point, Point) {
        let p = self.order as usize;
        let lx = lagrange_1d(self.order, xi);
        let ly = lagrange_1d(self.order, eta);
        let dx = lagrange_1d_deriv(self.order, xi);
        let dy = lagrange_1d_deriv(self.order, eta);
        let mut du = pt(0.0, 0.0);
        let mut dv = pt(0.0, 0.0);
        for j in 0..=p {
            for i in 0..=p {
                let g = self.grid[j * (p + 1) + i];
                du = du + g * (dx[i] * ly[j]);
                dv = dv + g * (lx[i] * dy[j]);
            }
        }
        (du, dv)
    }

    pub fn jacobian(&self, xi: f64, eta: f64) -> f64 {
        let (du, dv) = self.deriv(xi, eta);
        du.cross(dv)
    }
}

/// Total-degree Lagrange mapping of a triangle via a monomial Vandermonde
/// solve on the equidistant reference lattice (u, v >= 0, u + v <= 1).
#[derive(Clone, Debug)]
pub struct TriChi {
    pub order: u8,
    /// monomial coefficients for x(u,v) and y(u,v), exponent order (a, b)
    coeff: Vec<(Point, (u32, u32))>,
}

/// Reference lattice of a triangle in canonical ordering.
pub fn tri_reference_nodes(p: u8) -> Vec<(f64, f64)> {
    let pf = p as f64;
    let p = p as usize;
    let at = |i: usize, j: usize| (i as f64 / pf, j as f64 / pf);
    let mut out = vec![at(0, 0), at(p, 0), at(0, p)];
    for k in 1..p {
        out.push(at(k, 0)); // edge 0: v0 -> v1
    }
    for k in 1..p {
        out.push(at(p - k, k)); // edge 1: v1 -> v2
    }
    for k in 1..p {
        out.push(at(0, p - k)); // edge 2: v2 -> v0
    }
    for j in 1..p {
        for i in 1..p {
            if i + j <= p.saturating_sub(1) {
                out.push(at(i, j));
            }
        }
    }
    out
}

fn monomials(p: u8) -> Vec<(u32, u32)> {
    let mut m = Vec::new();
    for total in 0..=p as u32 {
        for a in (0..=total).rev() {
            m.push((a, total - a));
        }
    }
    m
}

/// Dense LU solve with partial pivoting; rhs columns solved in place.
fn lu_solve(a: &mut [f64], n: usize, rhs: &mut [Vec<f64>]) -> Result<()> {
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut best = col;
        for r in col + 1..n {
            if a[perm[r] * n + col].abs() > a[perm[best] * n + col].abs() {
                best = r;
            }
        }
        perm.swap(col, best);
        let pivot = a[perm[col] * n + col];
        if pivot.abs() < 1e-14 {
            return Err(Error::Geometric("singular interpolation system".into()));
        }
        for r in col + 1..n {
            let f = a[perm[r] * n + col] / pivot;
            a[perm[r] * n + col] = f;
            for c in col + 1..n {
                a[perm[r] * n + c] -= f * a[perm[col] * n + c];
            }
        }
    }
    for b in rhs.iter_mut() {
        let mut y = vec![0.0; n];
        for r in 0..n {
            let mut acc = b[perm[r]];
            for c in 0..r {
                acc -= a[perm[r] * n + c] * y[c];
            }
            y[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = y[r];
            for c in r + 1..n {
                acc -= a[perm[r] * n + c] * b[c];
            }
            b[r] = acc / a[perm[r] * n + r];
        }
    }
    Ok(())
}

impl TriChi {
    pub fn from_element(mesh: &Mesh, e: &Element) -> Result<TriChi> {
        assert_eq!(e.kind, ElemKind::Tri);
        let lattice = tri_reference_nodes(e.order);
        let mons = monomials(e.order);
        let n = mons.len();
        let mut a = vec![0.0; n * n];
        for (r, &(u, v)) in lattice.iter().enumerate() {
            for (c, &(pa, pb)) in mons.iter().enumerate() {
                a[r * n + c] = u.powi(pa as i32) * v.powi(pb as i32);
            }
        }
        let mut rhs = vec![
            e.nodes.iter().map(|&id| mesh.nodes[id as usize].p.x).collect::<Vec<f64>>(),
            e.nodes.iter().map(|&id| mesh.nodes[id as usize].p.y).collect::<Vec<f64>>(),
        ];
        lu_solve(&mut a, n, &mut rhs)?;
        let coeff = mons
            .iter()
            .enumerate()
            .map(|(i, &m)| (pt(rhs[0][i], rhs[1][i]), m))
            .collect();
        Ok(TriChi {
            order: e.order,
            coeff,
        })
    }

    pub fn jacobian(&self, u: f64, v: f64) -> f64 {
        let mut du = pt(0.0, 0.0);
        let mut dv = pt(0.0, 0.0);
        for &(c, (a, b)) in &self.coeff {
            if a > 0 {
                du = du
                    + c * (a as f64 * u.powi(a as i32 - 1) * v.powi(b as i32));
            }
            if b > 0 {
                dv = dv
                    + c * (b as f64 * u.powi(a as i32) * v.powi(b as i32 - 1));
            }
        }
        du.cross(dv)
    }
}

/// Gauss-Legendre nodes on [-1, 1] (weights unused here).
pub fn gauss_nodes(n: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n and derivative by recurrence
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs.push(-x); // ascending order
    }
    xs
}

/// Canonical edge registry: sorted vertex pair -> interior edge node ids in
/// the direction low-id -> high-id.
pub type EdgeRegistry = BTreeMap<(u32, u32), Vec<u32>>;

/// Elevate an order-1 mesh to order P. Edge nodes equidistant on straight
/// edges, interior nodes at bilinear images of the reference grid; shared
/// edges receive identical node ids.
pub fn elevate(m: &Mesh, p: u8) -> Result<Mesh> {
    if p < 1 {
        return Err(Error::Argument("order must be >= 1".into()));
    }
    if m.order() != 1 {
        return Err(Error::Argument(format!(
            "elevation expects an order-1 mesh, got order {}",
            m.order()
        )));
    }
    let mut nodes = m.nodes.clone();
    let mut registry: EdgeRegistry = BTreeMap::new();
    let mut elements = Vec::with_capacity(m.elements.len());
    let pu = p as usize;
    for e in &m.elements {
        let nv = e.kind.vertex_count();
        let mut ids = e.nodes[..nv].to_vec();
        // edge nodes
        for s in 0..nv {
            let a = e.nodes[s];
            let b = e.nodes[(s + 1) % nv];
            let key = if a < b { (a, b) } else { (b, a) };
            let edge_ids = registry.entry(key).or_insert_with(|| {
                let pa = nodes[key.0 as usize].p;
                let pb = nodes[key.1 as usize].p;
                (1..pu)
                    .map(|k| {
                        let id = nodes.len() as u32;
                        nodes.push(Node {
                            p: pa.lerp(pb, k as f64 / pu as f64),
                            assoc: None,
                        });
                        id
                    })
                    .collect()
            });
            if a < b {
                ids.extend(edge_ids.iter().copied());
            } else {
                ids.extend(edge_ids.iter().rev().copied());
            }
        }
        // interior nodes
        match e.kind {
            ElemKind::Quad => {
                let corners: Vec<Point> =
                    (0..4).map(|i| nodes[e.nodes[i] as usize].p).collect();
                let bilinear = |xi: f64, eta: f64| -> Point {
                    let n0 = 0.25 * (1.0 - xi) * (1.0 - eta);
                    let n1 = 0.25 * (1.0 + xi) * (1.0 - eta);
                    let n2 = 0.25 * (1.0 + xi) * (1.0 + eta);
                    let n3 = 0.25 * (1.0 - xi) * (1.0 + eta);
                    corners[0] * n0 + corners[1] * n1 + corners[2] * n2 + corners[3] * n3
                };
                let refs = reference_nodes(p);
                for j in 1..pu {
                    for i in 1..pu {
                        let id = nodes.len() as u32;
                        nodes.push(Node {
                            p: bilinear(refs[i], refs[j]),
                            assoc: None,
                        });
                        ids.push(id);
                    }
                }
            }
            ElemKind::Tri => {
                let corners: Vec<Point> =
                    (0..3).map(|i| nodes[e.nodes[i] as usize].p).collect();
                for j in 1..pu {
                    for i in 1..pu {
                        if i + j <= pu - 1 {
                            let (u, v) = (i as f64 / pu as f64, j as f64 / pu as f64);
                            let id = nodes.len() as u32;
                            nodes.push(Node {
                                p: corners[0] * (1.0 - u - v) + corners[1] * u + corners[2] * v,
                                assoc: None,
                            });
                            ids.push(id);
                        }
                    }
                }
            }
        }
        elements.push(Element {
            id: e.id,
            kind: e.kind,
            order: p,
            nodes: ids,
            block: e.block,
            patches: e.patches.clone(),
        });
    }
    Ok(Mesh { nodes, elements })
}

/// Curve backing a wall edge, resolved from the side patch.
fn wall_curve<'g>(
    geom: &'g Geometry,
    patch: &str,
) -> Result<(crate::geomkit::CurveId, &'g crate::geomkit::Curve)> {
    let entity = patch.trim_start_matches("wall:");
    let id = geom
        .find_by_entity(entity)
        .ok_or_else(|| Error::Geometric(format!("no curve with entity '{entity}'")))?;
    Ok((id, geom.curve(id)))
}

/// Move every high-order node of a wall edge onto its parent curve.
/// Returns the number of curving hazards (projection displacement exceeding
/// the local element thickness estimate).
pub fn project_boundary_edges(m: &mut Mesh, geom: &Geometry) -> Result<usize> {
    let mut done: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut hazards = 0usize;
    let elements = m.elements.clone();
    for e in &elements {
        for s in 0..e.kind.vertex_count() {
            let Some(patch) = e.patches[s].as_deref() else {
                continue;
            };
            if !patch.starts_with("wall:") {
                continue;
            }
            let key = e.edge_key(s);
            if !done.insert(key) {
                continue;
            }
            let (curve_id, curve) = wall_curve(geom, patch)?;
            let side = e.side_nodes(s);
            let a = m.nodes[side[0] as usize].p;
            let b = m.nodes[*side.last().unwrap() as usize].p;
            let local = a.dist(b);
            for &nid in &side[1..side.len() - 1] {
                let p0 = m.nodes[nid as usize].p;
                let (t, _) = curve.project(p0);
                let q = curve.eval(t)?;
                if p0.dist(q) > local {
                    hazards += 1;
                }
                m.nodes[nid as usize].p = q;
                m.nodes[nid as usize].assoc = Some((curve_id, t));
            }
        }
    }
    Ok(hazards)
}

/// Spring relaxation of wall edge nodes: interior nodes placed at equal
/// arc-length fractions of the edge interval (the exact minimizer of a
/// uniform spring chain measured in arc length).
pub fn relax_edge_nodes(m: &mut Mesh, geom: &Geometry) -> Result<()> {
    let mut done: BTreeSet<(u32, u32)> = BTreeSet::new();
    let elements = m.elements.clone();
    for e in &elements {
        for s in 0..e.kind.vertex_count() {
            let Some(patch) = e.patches[s].as_deref() else {
                continue;
            };
            if !patch.starts_with("wall:") {
                continue;
            }
            let key = e.edge_key(s);
            if !done.insert(key) {
                continue;
            }
            let (curve_id, curve) = wall_curve(geom, patch)?;
            let side = e.side_nodes(s);
            let param_of = |m: &Mesh, nid: u32| -> f64 {
                match m.nodes[nid as usize].assoc {
                    Some((cid, t)) if cid == curve_id => t,
                    _ => curve.project(m.nodes[nid as usize].p).0,
                }
            };
            let t0 = param_of(m, side[0]);
            let t1 = param_of(m, *side.last().unwrap());
            // monotonicity of the projected parameters (fold-over detection)
            let raw: Vec<f64> = side.iter().map(|&nid| param_of(m, nid)).collect();
            let increasing = t1 > t0;
            for w in raw.windows(2) {
                if (increasing && w[1] <= w[0]) || (!increasing && w[1] >= w[0]) {
                    return Err(Error::Relaxation(format!(
                        "non-monotone edge parameters on edge ({}, {}): {:?}",
                        key.0, key.1, raw
                    )));
                }
            }
            let (lo, hi) = if increasing { (t0, t1) } else { (t1, t0) };
            let p = side.len() - 1;
            for (k, &nid) in side.iter().enumerate().skip(1).take(p - 1) {
                let f = k as f64 / p as f64;
                let frac = if increasing { f } else { 1.0 - f };
                let t = curve.param_at_arc_fraction(lo, hi, frac)?;
                m.nodes[nid as usize].p = curve.eval(t)?;
                m.nodes[nid as usize].assoc = Some((curve_id, t));
            }
        }
    }
    Ok(())
}

/// Interior nodes of every quad solve the uniform-spring equilibrium on the
/// reference-grid 4-neighbor graph (each node the average of its neighbors),
/// with edge and vertex nodes fixed.
pub fn smooth_interior_nodes(m: &mut Mesh) -> Result<()> {
    let p = m.order() as usize;
    if p < 2 {
        return Ok(());
    }
    let updates: Vec<(u32, Point)> = m
        .elements
        .par_iter()
        .flat_map(|e| {
            if e.kind != ElemKind::Quad {
                return Vec::new();
            }
            smooth_one_quad(m, e).unwrap_or_default()
        })
        .collect();
    for (id, pos) in updates {
        m.nodes[id as usize].p = pos;
    }
    Ok(())
}

fn smooth_one_quad(m: &Mesh, e: &Element) -> Result<Vec<(u32, Point)>> {
    let p = e.order as usize;
    let n_int = (p - 1) * (p - 1);
    if n_int == 0 {
        return Ok(Vec::new());
    }
    // grid of node ids
    let gid = |i: usize, j: usize| e.nodes[grid_to_canonical(e.order, i, j)];
    let pos = |i: usize, j: usize| m.nodes[gid(i, j) as usize].p;
    let idx = |i: usize, j: usize| (j - 1) * (p - 1) + (i - 1);
    let mut a = vec![0.0; n_int * n_int];
    let mut rhs = vec![vec![0.0; n_int], vec![0.0; n_int]];
    for j in 1..p {
        for i in 1..p {
            let r = idx(i, j);
            a[r * n_int + r] = 4.0;
            for (ni, nj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                if ni == 0 || ni == p || nj == 0 || nj == p {
                    let q = pos(ni, nj);
                    rhs[0][r] += q.x;
                    rhs[1][r] += q.y;
                } else {
                    a[r * n_int + idx(ni, nj)] = -1.0;
                }
            }
        }
    }
    lu_solve(&mut a, n_int, &mut rhs)?;
    let mut out = Vec::with_capacity(n_int);
    for j in 1..p {
        for i in 1..p {
            let r = idx(i, j);
            out.push((gid(i, j), pt(rhs[0][r], rhs[1][r])));
        }
    }
    Ok(out)
}

/// Sampled determinant extrema of a quad mapping: tensor Gauss points of the
/// given count per direction plus the nodal lattice.
pub fn jacobian_range_with(chi: &MappingChi, gauss_per_dir: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let gauss = gauss_nodes(gauss_per_dir);
    let nodal = reference_nodes(chi.order);
    for set in [&gauss, &nodal] {
        for &x in set {
            for &y in set {
                let d = chi.jacobian(x, y);
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
    }
    (lo, hi)
}

/// Default sample rule: (P+3)^2 Gauss points plus the (P+1)^2 nodal points.
pub fn jacobian_range(chi: &MappingChi) -> (f64, f64) {
    jacobian_range_with(chi, chi.order as usize + 3)
}

fn tri_jacobian_range(tri: &TriChi) -> (f64, f64) {
    let n = tri.order as usize + 3;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..=n {
        for i in 0..=n - j {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            let d = tri.jacobian(u, v);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    (lo, hi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementValidity {
    pub id: u32,
    pub min_det: f64,
    pub max_det: f64,
    pub scaled: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidityReport {
    pub per_element: Vec<ElementValidity>,
    pub invalid: Vec<u32>,
    pub worst_scaled: f64,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.invalid.is_empty()
    }
}

/// Scaled-Jacobian validity over the whole mesh.
pub fn check_validity(m: &Mesh) -> Result<ValidityReport> {
    let per_element: Vec<ElementValidity> = m
        .elements
        .par_iter()
        .map(|e| {
            let (lo, hi) = match e.kind {
                ElemKind::Quad => jacobian_range(&MappingChi::from_element(m, e)),
                ElemKind::Tri => {
                    let tri = TriChi::from_element(m, e)
                        .unwrap_or(TriChi { order: e.order, coeff: Vec::new() });
                    if tri.coeff.is_empty() {
                        (-1.0, 1.0)
                    } else {
                        tri_jacobian_range(&tri)
                    }
                }
            };
            ElementValidity {
                id: e.id,
                min_det: lo,
                max_det: hi,
                scaled: if hi != 0.0 { lo / hi } else { f64::NEG_INFINITY },
            }
        })
        .collect();
    let invalid: Vec<u32> = per_element
        .iter()
        .filter(|v| v.min_det <= 0.0)
        .map(|v| v.id)
        .collect();
    let worst_scaled = per_element
        .iter()
        .map(|v| v.scaled)
        .fold(f64::INFINITY, f64::min);
    Ok(ValidityReport {
        per_element,
        invalid,
        worst_scaled,
    })
}
