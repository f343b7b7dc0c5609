//! Isoparametric splitting of the coarse curved boundary layer: layer-level
//! distributions (uniform, geometric, xi-blended for the wake), children as
//! chi-compose-f images of the parent mapping, bi-directional splits for
//! junction and corner elements, and conformal mesh-wide assembly.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::hocurve::{grid_to_canonical, reference_nodes, MappingChi};
use crate::linmesh::{conformality_check, ElemKind, Element, Mesh, NodePool};
use crate::partition::{BlockGraph, BlockKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Reference axis along which an element is subdivided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitDir {
    Xi,
    Eta,
}

/// Layer levels eta_0 = -1 < ... < eta_n = 1 with heights proportional to
/// r^k, k = 0 nearest the wall (the -1 end). r = 1 gives uniform layers.
pub fn layer_levels(n: usize, r: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Argument("layer count must be >= 1".into()));
    }
    if r <= 0.0 {
        return Err(Error::Argument(format!("progression ratio must be > 0: {r}")));
    }
    let total: f64 = (0..n).map(|k| r.powi(k as i32)).sum();
    let mut levels = Vec::with_capacity(n + 1);
    levels.push(-1.0);
    let mut acc = 0.0;
    for k in 0..n {
        acc += r.powi(k as i32);
        levels.push(-1.0 + 2.0 * acc / total);
    }
    levels[n] = 1.0;
    Ok(levels)
}

/// Progression ratio at streamwise distance x from the trailing edge:
/// linear from r_TE at the TE down to 1.0 at the wake end.
pub fn wake_ratio_profile(r_te: f64, l_w: f64, x: f64) -> Result<f64> {
    if r_te < 1.0 {
        return Err(Error::Argument(format!("wake TE ratio must be >= 1: {r_te}")));
    }
    if l_w <= 0.0 {
        return Err(Error::Argument(format!("wake length must be > 0: {l_w}")));
    }
    let slack = 1e-9 * l_w;
    if x < -slack || x > l_w + slack {
        return Err(Error::Argument(format!(
            "wake station {x} outside [0, {l_w}]"
        )));
    }
    let x = x.clamp(0.0, l_w);
    Ok(r_te + (1.0 - r_te) * x / l_w)
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.len() < 2 {
        return Err(Error::Argument("need at least two levels".into()));
    }
    if (levels[0] + 1.0).abs() > 1e-12 || (levels[levels.len() - 1] - 1.0).abs() > 1e-12 {
        return Err(Error::Argument("levels must span [-1, 1]".into()));
    }
    for w in levels.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Argument(format!(
                "non-monotone levels: {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Split a mapping along `dir` with levels blended linearly across the other
/// axis: the -1 end of the other axis uses `lv_lo`, the +1 end `lv_hi`.
/// Children are ordered from the -1 end; child control nodes are exact
/// chi-compose-f images.
pub fn split_chi_blended(
    chi: &MappingChi,
    lv_lo: &[f64],
    lv_hi: &[f64],
    dir: SplitDir,
) -> Result<Vec<MappingChi>> {
    check_levels(lv_lo)?;
    check_levels(lv_hi)?;
    if lv_lo.len() != lv_hi.len() {
        return Err(Error::Argument("blended level sets differ in length".into()));
    }
    let p = chi.order as usize;
    let refs = reference_nodes(chi.order);
    let n = lv_lo.len() - 1;
    let mut children = Vec::with_capacity(n);
    for k in 0..n {
        let mut grid = vec![Point::default(); (p + 1) * (p + 1)];
        for j in 0..=p {
            for i in 0..=p {
                let (xi, eta) = (refs[i], refs[j]);
                // blend factor taken along the axis we are NOT splitting
                let s = match dir {
                    SplitDir::Eta => 0.5 * (xi + 1.0),
                    SplitDir::Xi => 0.5 * (eta + 1.0),
                };
                let a = lv_lo[k] + (lv_hi[k] - lv_lo[k]) * s;
                let b = lv_lo[k + 1] + (lv_hi[k + 1] - lv_lo[k + 1]) * s;
                if b <= a {
                    return Err(Error::Split(format!(
                        "blended bounds cross in layer {k}: [{a}, {b}]"
                    )));
                }
                let (xs, ys) = match dir {
                    SplitDir::Eta => (xi, a + (b - a) * 0.5 * (eta + 1.0)),
                    SplitDir::Xi => (a + (b - a) * 0.5 * (xi + 1.0), eta),
                };
                grid[j * (p + 1) + i] = chi.eval(xs, ys);
            }
        }
        children.push(MappingChi {
            order: chi.order,
            grid,
        });
    }
    Ok(children)
}

/// Constant-level split along one direction.
pub fn split_element(chi: &MappingChi, levels: &[f64], dir: SplitDir) -> Result<Vec<MappingChi>> {
    split_chi_blended(chi, levels, levels, dir)
}

/// Sequential split in both directions (junction and corner elements):
/// xi split first, then eta on every intermediate child. Children ordered
/// eta-major: index k_eta * n_xi + k_xi.
pub fn split_bidirectional(
    chi: &MappingChi,
    lv_xi: &[f64],
    lv_eta: &[f64],
) -> Result<Vec<MappingChi>> {
    let cols = split_element(chi, lv_xi, SplitDir::Xi)?;
    let n_xi = cols.len();
    let n_eta = lv_eta.len() - 1;
    let mut out = vec![
        MappingChi {
            order: chi.order,
            grid: Vec::new()
        };
        n_xi * n_eta
    ];
    for (kx, col) in cols.iter().enumerate() {
        for (ke, child) in split_element(col, lv_eta, SplitDir::Eta)?.into_iter().enumerate() {
            out[ke * n_xi + kx] = child;
        }
    }
    Ok(out)
}

/// Splitting configuration; `ratio` applies to loop, corner and junction
/// elements, the wake grades from `wake_ratio_te` at the TE to 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n: usize,
    pub ratio: f64,
    pub wake_ratio_te: f64,
}

fn child_patches_eta(parent: &[Option<String>], k: usize, n: usize) -> Vec<Option<String>> {
    vec![
        if k == 0 { parent[0].clone() } else { None },
        parent[1].clone(),
        if k == n - 1 { parent[2].clone() } else { None },
        parent[3].clone(),
    ]
}

fn child_patches_xi(parent: &[Option<String>], k: usize, n: usize) -> Vec<Option<String>> {
    vec![
        parent[0].clone(),
        if k == n - 1 { parent[1].clone() } else { None },
        parent[2].clone(),
        if k == 0 { parent[3].clone() } else { None },
    ]
}

fn child_patches_bidir(
    parent: &[Option<String>],
    kx: usize,
    nx: usize,
    ke: usize,
    ne: usize,
) -> Vec<Option<String>> {
    vec![
        if ke == 0 { parent[0].clone() } else { None },
        if kx == nx - 1 { parent[1].clone() } else { None },
        if ke == ne - 1 { parent[2].clone() } else { None },
        if kx == 0 { parent[3].clone() } else { None },
    ]
}

/// Mesh-wide isoparametric split of the curved boundary layer. Loop strips
/// and wake corner kites split wall-normal; ring corner kites and junction
/// elements split in both directions (each of their shared sides borders a
/// split strip); wake columns split cross-flow with xi-blended levels from
/// the streamwise ratio profile. Conformality is re-checked afterward.
pub fn split_boundary_layer(m: &Mesh, g: &BlockGraph, spec: &SplitSpec) -> Result<Mesh> {
    let levels = layer_levels(spec.n, spec.ratio)?;
    // te-corner blocks bordering the wake split wall-normal only: their
    // streamwise side pairs with an unsplit wake-column top/bottom edge.
    // The split runs perpendicular to that shared side, graded away from it.
    let mut wake_kites: BTreeMap<u32, u8> = BTreeMap::new();
    for &((a, sa), (b, sb)) in &g.adjacency {
        let (ka, kb) = (g.blocks[a as usize].kind, g.blocks[b as usize].kind);
        if ka == BlockKind::TeCorner && kb == BlockKind::Wake {
            wake_kites.insert(a, sa);
        }
        if kb == BlockKind::TeCorner && ka == BlockKind::Wake {
            wake_kites.insert(b, sb);
        }
    }
    // levels graded from the +1 end instead of the -1 end
    let levels_rev: Vec<f64> = levels.iter().rev().map(|v| -v).collect();
    // wake extent for the ratio profile
    let wake_x: Vec<(f64, f64)> = g
        .blocks
        .iter()
        .filter(|b| b.kind == BlockKind::Wake)
        .filter_map(|b| b.wake_x)
        .collect();
    let x0 = wake_x.iter().map(|w| w.0).fold(f64::INFINITY, f64::min);
    let l_w = wake_x.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max) - x0;

    let mut lo = Point { x: f64::INFINITY, y: f64::INFINITY };
    let mut hi = Point { x: f64::NEG_INFINITY, y: f64::NEG_INFINITY };
    for nd in &m.nodes {
        lo.x = lo.x.min(nd.p.x);
        lo.y = lo.y.min(nd.p.y);
        hi.x = hi.x.max(nd.p.x);
        hi.y = hi.y.max(nd.p.y);
    }
    let tol = (1e-9 * hi.dist(lo)).max(1e-13);
    let mut pool = NodePool::new(tol);
    let mut elements: Vec<Element> = Vec::new();

    for e in &m.elements {
        let kind = e.block.map(|b| g.blocks[b as usize].kind);
        if e.kind == ElemKind::Tri || kind.is_none() {
            let nodes = e
                .nodes
                .iter()
                .map(|&id| pool.insert(m.nodes[id as usize].p, m.nodes[id as usize].assoc))
                .collect();
            elements.push(Element {
                id: elements.len() as u32,
                kind: e.kind,
                order: e.order,
                nodes,
                block: e.block,
                patches: e.patches.clone(),
            });
            continue;
        }
        let chi = MappingChi::from_element(m, e);
        let children: Vec<(MappingChi, Vec<Option<String>>)> = match kind.unwrap() {
            BlockKind::Loop => split_element(&chi, &levels, SplitDir::Eta)?
                .into_iter()
                .enumerate()
                .map(|(k, c)| (c, child_patches_eta(&e.patches, k, spec.n)))
                .collect(),
            BlockKind::TeCorner if wake_kites.contains_key(&e.block.unwrap()) => {
                // keep the wake-shared side whole: split perpendicular to it,
                // graded away from that side
                let (dir, lv, xi_dir) = match wake_kites[&e.block.unwrap()] {
                    0 => (SplitDir::Eta, &levels, false),
                    2 => (SplitDir::Eta, &levels_rev, false),
                    3 => (SplitDir::Xi, &levels, true),
                    _ => (SplitDir::Xi, &levels_rev, true),
                };
                split_element(&chi, lv, dir)?
                    .into_iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let patches = if xi_dir {
                            child_patches_xi(&e.patches, k, spec.n)
                        } else {
                            child_patches_eta(&e.patches, k, spec.n)
                        };
                        (c, patches)
                    })
                    .collect()
            }
            BlockKind::TeCorner | BlockKind::Junction => {
                split_bidirectional(&chi, &levels, &levels)?
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let (ke, kx) = (i / spec.n, i % spec.n);
                        (c, child_patches_bidir(&e.patches, kx, spec.n, ke, spec.n))
                    })
                    .collect()
            }
            BlockKind::Wake => {
                let (xa, xb) = g.blocks[e.block.unwrap() as usize].wake_x.ok_or_else(|| {
                    Error::Split(format!("wake element {} lacks a streamwise interval", e.id))
                })?;
                let lv_l = layer_levels(spec.n, wake_ratio_profile(spec.wake_ratio_te, l_w, xa - x0)?)?;
                let lv_r = layer_levels(spec.n, wake_ratio_profile(spec.wake_ratio_te, l_w, xb - x0)?)?;
                split_chi_blended(&chi, &lv_l, &lv_r, SplitDir::Eta)?
                    .into_iter()
                    .enumerate()
                    .map(|(k, c)| (c, child_patches_eta(&e.patches, k, spec.n)))
                    .collect()
            }
        };
        let p = e.order as usize;
        for (chi_c, patches) in children {
            let mut canon = vec![0u32; (p + 1) * (p + 1)];
            for j in 0..=p {
                for i in 0..=p {
                    canon[grid_to_canonical(e.order, i, j)] =
                        pool.insert(chi_c.grid[j * (p + 1) + i], None);
                }
            }
            elements.push(Element {
                id: elements.len() as u32,
                kind: ElemKind::Quad,
                order: e.order,
                nodes: canon,
                block: e.block,
                patches,
            });
        }
    }
    let out = Mesh {
        nodes: pool.nodes,
        elements,
    };
    let report = conformality_check(&out);
    if !report.is_ok() {
        return Err(Error::Conformality(format!(
            "split mesh non-conformal: {}",
            report.violations[0]
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::pt;
    use crate::geomkit::{Curve, Geometry, TrailingEdge};
    use crate::hocurve::{check_validity, elevate, project_boundary_edges, relax_edge_nodes, smooth_interior_nodes};
    use crate::linmesh::{mesh_sides, sweep_blocks, Node};
    use crate::medial::build_shell;
    use crate::partition::{build_topology, Topology, WakeParams};
    use crate::presets;

    #[test]
    fn geometric_levels_match_series() {
        let lv = layer_levels(5, 2.0).unwrap();
        // independent oracle: heights 2 * 2^k / (2^5 - 1)
        let denom = 31.0;
        let mut acc = -1.0;
        for k in 0..5 {
            acc += 2.0 * 2.0f64.powi(k) / denom;
            assert!((lv[k as usize + 1] - acc).abs() < 1e-14);
        }
        let expect = [-0.935484, -0.806452, -0.548387, -0.032258];
        for (got, want) in lv[1..5].iter().zip(expect) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        assert_eq!(lv[0], -1.0);
        assert_eq!(lv[5], 1.0);
    }

    #[test]
    fn uniform_and_degenerate_levels() {
        let lv = layer_levels(4, 1.0).unwrap();
        for (got, want) in lv.iter().zip([-1.0, -0.5, 0.0, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert_eq!(layer_levels(1, 7.3).unwrap(), vec![-1.0, 1.0]);
        assert!(matches!(layer_levels(0, 2.0), Err(Error::Argument(_))));
    }

    #[test]
    fn wake_profile_endpoints() {
        assert!((wake_ratio_profile(2.0, 2.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((wake_ratio_profile(2.0, 2.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((wake_ratio_profile(2.0, 2.0, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(wake_ratio_profile(2.0, 2.0, 2.5).is_err());
        assert!(wake_ratio_profile(0.5, 2.0, 1.0).is_err());
    }

    fn rect_chi(w: f64, t: f64, order: u8) -> MappingChi {
        let m = Mesh {
            nodes: vec![
                Node { p: pt(0.0, 0.0), assoc: None },
                Node { p: pt(w, 0.0), assoc: None },
                Node { p: pt(w, t), assoc: None },
                Node { p: pt(0.0, t), assoc: None },
            ],
            elements: vec![Element {
                id: 0,
                kind: ElemKind::Quad,
                order: 1,
                nodes: vec![0, 1, 2, 3],
                block: None,
                patches: vec![None; 4],
            }],
        };
        let hi = elevate(&m, order).unwrap();
        MappingChi::from_element(&hi, &hi.elements[0])
    }

    #[test]
    fn affine_split_heights_exact() {
        let t = 0.05;
        let chi = rect_chi(1.0, t, 3);
        let lv = layer_levels(5, 2.0).unwrap();
        let children = split_element(&chi, &lv, SplitDir::Eta).unwrap();
        assert_eq!(children.len(), 5);
        for (k, c) in children.iter().enumerate() {
            let h = c.eval(0.0, 1.0).y - c.eval(0.0, -1.0).y;
            let expect = t * 2.0f64.powi(k as i32) / 31.0;
            assert!((h - expect).abs() < 1e-12, "layer {k}: {h} vs {expect}");
        }
    }

    #[test]
    fn identity_split_reproduces_parent() {
        let chi = rect_chi(2.0, 0.3, 4);
        let children = split_element(&chi, &[-1.0, 1.0], SplitDir::Eta).unwrap();
        assert_eq!(children.len(), 1);
        for (a, b) in children[0].grid.iter().zip(&chi.grid) {
            assert!(a.dist(*b) < 1e-14);
        }
    }

    /// Independent tensor interpolation oracle: Neville's algorithm in each
    /// direction over the parent grid.
    fn neville_eval(chi: &MappingChi, xi: f64, eta: f64) -> Point {
        let p = chi.order as usize;
        let xs = reference_nodes(chi.order);
        let nev = |vals: &mut Vec<Point>, x: f64| -> Point {
            let n = vals.len();
            for lvl in 1..n {
                for i in 0..n - lvl {
                    let (xi0, xi1) = (xs[i], xs[i + lvl]);
                    vals[i] =
                        (vals[i] * (xi1 - x) + vals[i + 1] * (x - xi0)) / (xi1 - xi0);
                }
            }
            vals[0]
        };
        let mut col = Vec::with_capacity(p + 1);
        for j in 0..=p {
            let mut row: Vec<Point> =
                (0..=p).map(|i| chi.grid[j * (p + 1) + i]).collect();
            col.push(nev(&mut row, xi));
        }
        nev(&mut col, eta)
    }

    fn curved_bl_quad(order: u8) -> MappingChi {
        let mut geom = Geometry::default();
        let span = std::f64::consts::FRAC_PI_6;
        let pts: Vec<Point> = (0..=20000)
            .map(|i| {
                let a = span * i as f64 / 20000.0;
                pt(a.cos(), a.sin())
            })
            .collect();
        let id = geom.add(Curve::polyline("circle", "circle", pts));
        let end = pt(span.cos(), span.sin());
        let m = Mesh {
            nodes: vec![
                Node { p: end, assoc: Some((id, 1.0)) },
                Node { p: pt(1.0, 0.0), assoc: Some((id, 0.0)) },
                Node { p: pt(1.2, 0.0), assoc: None },
                Node { p: end * 1.2, assoc: None },
            ],
            elements: vec![Element {
                id: 0,
                kind: ElemKind::Quad,
                order: 1,
                nodes: vec![0, 1, 2, 3],
                block: None,
                patches: vec![Some("wall:circle".to_string()), None, None, None],
            }],
        };
        let mut hi = elevate(&m, order).unwrap();
        project_boundary_edges(&mut hi, &geom).unwrap();
        relax_edge_nodes(&mut hi, &geom).unwrap();
        smooth_interior_nodes(&mut hi).unwrap();
        MappingChi::from_element(&hi, &hi.elements[0])
    }

    #[test]
    fn curved_children_on_parent_surface() {
        let chi = curved_bl_quad(4);
        let lv = layer_levels(5, 2.0).unwrap();
        let children = split_element(&chi, &lv, SplitDir::Eta).unwrap();
        let refs = reference_nodes(4);
        for (k, c) in children.iter().enumerate() {
            for j in 0..=4usize {
                for i in 0..=4usize {
                    let eta = lv[k] + (lv[k + 1] - lv[k]) * 0.5 * (refs[j] + 1.0);
                    let oracle = neville_eval(&chi, refs[i], eta);
                    let got = c.grid[j * 5 + i];
                    assert!(got.dist(oracle) < 1e-12, "child {k} node ({i},{j})");
                }
            }
        }
        // validity inheritance over a shared dense sample set
        let sample = |c: &MappingChi| -> f64 {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for j in 0..=12 {
                for i in 0..=12 {
                    let d = c.jacobian(-1.0 + i as f64 / 6.0, -1.0 + j as f64 / 6.0);
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
            lo / hi
        };
        let parent_q = sample(&chi);
        for c in &children {
            assert!(sample(c) >= parent_q - 1e-9);
        }
    }

    #[test]
    fn bidirectional_count_and_corner_child() {
        let t = 0.05;
        let chi = rect_chi(t, t, 2);
        let lv = layer_levels(5, 2.0).unwrap();
        let children = split_bidirectional(&chi, &lv, &lv).unwrap();
        assert_eq!(children.len(), 25);
        let c00 = &children[0];
        let w = c00.eval(1.0, -1.0).x - c00.eval(-1.0, -1.0).x;
        let h = c00.eval(-1.0, 1.0).y - c00.eval(-1.0, -1.0).y;
        assert!((w - t / 31.0).abs() < 1e-13);
        assert!((h - t / 31.0).abs() < 1e-13);
    }

    #[test]
    fn bidirectional_split_commutes() {
        let chi = curved_bl_quad(3);
        let lv_a = layer_levels(4, 2.0).unwrap();
        let lv_b = layer_levels(3, 1.5).unwrap();
        let ab = split_bidirectional(&chi, &lv_a, &lv_b).unwrap();
        // swapped order: eta first, then xi; children indexed identically
        // (eta-major) in both orderings
        let n_xi = lv_a.len() - 1;
        let mut ba: Vec<MappingChi> = vec![
            MappingChi { order: chi.order, grid: Vec::new() };
            ab.len()
        ];
        for (ke, row) in split_element(&chi, &lv_b, SplitDir::Eta)
            .unwrap()
            .iter()
            .enumerate()
        {
            for (kx, child) in split_element(row, &lv_a, SplitDir::Xi)
                .unwrap()
                .into_iter()
                .enumerate()
            {
                ba[ke * n_xi + kx] = child;
            }
        }
        for (ca, cb) in ab.iter().zip(&ba) {
            for (pa, pb) in ca.grid.iter().zip(&cb.grid) {
                assert!(pa.dist(*pb) < 1e-13, "{pa:?} vs {pb:?}");
            }
        }
    }

    #[test]
    fn blended_edges_follow_their_ratios() {
        let chi = rect_chi(1.0, 0.05, 3);
        let lv_l = layer_levels(5, 1.6).unwrap();
        let lv_r = layer_levels(5, 1.5).unwrap();
        let children = split_chi_blended(&chi, &lv_l, &lv_r, SplitDir::Eta).unwrap();
        for (k, c) in children.iter().enumerate() {
            // fractions across the thickness at each edge
            let fl = (c.eval(-1.0, -1.0).y / 0.05) * 2.0 - 1.0;
            let fr = (c.eval(1.0, -1.0).y / 0.05) * 2.0 - 1.0;
            assert!((fl - lv_l[k]).abs() < 1e-9, "left {k}");
            assert!((fr - lv_r[k]).abs() < 1e-9, "right {k}");
        }
    }

    #[test]
    fn far_end_uniform_children() {
        let chi = rect_chi(0.2, 0.1, 2);
        let lv = layer_levels(5, 1.0).unwrap();
        let children = split_chi_blended(&chi, &lv, &lv, SplitDir::Eta).unwrap();
        for c in &children {
            let h = c.eval(0.0, 1.0).y - c.eval(0.0, -1.0).y;
            assert!((h - 0.1 / 5.0 * 2.0 / 2.0).abs() < 1e-9);
        }
    }

    fn naca_h_mesh(order: u8) -> (Geometry, crate::partition::BlockGraph, Mesh) {
        let mut geom = Geometry::default();
        let body = presets::naca4(&mut geom, "0012", TrailingEdge::Open).unwrap();
        let shell = build_shell(&geom, &body.boundary, 0.05, 0.0025).unwrap();
        let wake = WakeParams {
            length: 2.0,
            half_angle_deg: 3.0,
            columns: 8,
            gap: None,
        };
        let g = build_topology(&geom, &[shell], Topology::H, &wake, &[]).unwrap();
        let sides = mesh_sides(&geom, &g, 0.05).unwrap();
        let lin = sweep_blocks(&geom, &g, &sides).unwrap();
        let mut hi = elevate(&lin, order).unwrap();
        project_boundary_edges(&mut hi, &geom).unwrap();
        relax_edge_nodes(&mut hi, &geom).unwrap();
        smooth_interior_nodes(&mut hi).unwrap();
        (geom, g, hi)
    }

    #[test]
    fn naca_h_split_counting_and_conformality() {
        let (_, g, hi) = naca_h_mesh(3);
        let spec = SplitSpec {
            n: 5,
            ratio: 2.0,
            wake_ratio_te: 2.0,
        };
        let split = split_boundary_layer(&hi, &g, &spec).unwrap();
        // H topology: every block element splits wall-normal only
        assert_eq!(split.elements.len(), hi.elements.len() * 5);
        // wall patches survive on first-layer children only
        let wall_sides = |m: &Mesh| -> usize {
            m.elements
                .iter()
                .flat_map(|e| e.patches.iter())
                .filter(|p| p.as_deref().is_some_and(|s| s.starts_with("wall:")))
                .count()
        };
        // TE-face sub-edges are extra: the wake's first column carries the
        // TE wall on a cross-flow side, which does get subdivided
        assert_eq!(wall_sides(&split), wall_sides(&hi) + (5 - 1));
        let report = check_validity(&split).unwrap();
        assert!(report.is_valid());
    }

    #[test]
    fn corner_junction_splits_bidirectionally() {
        let mut geom = Geometry::default();
        let body = presets::corner_walls(&mut geom, 1.0).unwrap();
        let t = 0.1;
        let shell = build_shell(&geom, &body.boundary, t, 0.01).unwrap();
        let g = build_topology(
            &geom,
            &[shell],
            Topology::O,
            &WakeParams::default(),
            &[],
        )
        .unwrap();
        let sides = mesh_sides(&geom, &g, 0.3).unwrap();
        let lin = sweep_blocks(&geom, &g, &sides).unwrap();
        let mut hi = elevate(&lin, 2).unwrap();
        project_boundary_edges(&mut hi, &geom).unwrap();
        relax_edge_nodes(&mut hi, &geom).unwrap();
        smooth_interior_nodes(&mut hi).unwrap();
        let spec = SplitSpec {
            n: 4,
            ratio: 2.0,
            wake_ratio_te: 1.0,
        };
        let split = split_boundary_layer(&hi, &g, &spec).unwrap();
        let junction_children = split
            .elements
            .iter()
            .filter(|e| {
                g.blocks[e.block.unwrap() as usize].kind == BlockKind::Junction
            })
            .count();
        assert_eq!(junction_children, 16);
        let strip_parents = hi
            .elements
            .iter()
            .filter(|e| g.blocks[e.block.unwrap() as usize].kind == BlockKind::Loop)
            .count();
        assert_eq!(split.elements.len(), strip_parents * 4 + 16);
        // first-layer height oracle on a junction corner child: the corner
        // block is the [0, t]^2 square, smallest child is t/15 x t/15
        let lv = layer_levels(4, 2.0).unwrap();
        let first = t * (lv[1] + 1.0) / 2.0;
        assert!((first - t / 15.0).abs() < 1e-12);
    }

    #[test]
    fn non_monotone_levels_rejected() {
        let chi = rect_chi(1.0, 1.0, 2);
        assert!(split_element(&chi, &[-1.0, 0.5, 0.2, 1.0], SplitDir::Eta).is_err());
        assert!(split_element(&chi, &[-0.9, 0.0, 1.0], SplitDir::Eta).is_err());
    }

    #[test]
    fn naca_c_ring_kites_split_bidirectionally() {
        // open-TE section meshed as a closed C ring: the two TE corner kites
        // border split strips on both wall-normal sides, so they split n x n
        let mut geom = Geometry::default();
        let body = presets::naca4(&mut geom, "0012", TrailingEdge::Open).unwrap();
        let shell = build_shell(&geom, &body.boundary, 0.05, 0.0025).unwrap();
        let g = build_topology(&geom, &[shell], Topology::C, &WakeParams::default(), &[])
            .unwrap();
        let sides = mesh_sides(&geom, &g, 0.1).unwrap();
        let lin = sweep_blocks(&geom, &g, &sides).unwrap();
        let mut hi = elevate(&lin, 2).unwrap();
        project_boundary_edges(&mut hi, &geom).unwrap();
        relax_edge_nodes(&mut hi, &geom).unwrap();
        smooth_interior_nodes(&mut hi).unwrap();
        let spec = SplitSpec {
            n: 3,
            ratio: 2.0,
            wake_ratio_te: 1.0,
        };
        let split = split_boundary_layer(&hi, &g, &spec).unwrap();
        let kite_parents = hi
            .elements
            .iter()
            .filter(|e| g.blocks[e.block.unwrap() as usize].kind == BlockKind::TeCorner)
            .count();
        let strip_parents = hi.elements.len() - kite_parents;
        assert_eq!(split.elements.len(), strip_parents * 3 + kite_parents * 9);
        assert!(check_validity(&split).unwrap().is_valid());
    }
}
