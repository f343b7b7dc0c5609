//! Persistence: Gmsh MSH 4.1 text writer/reader for high-order hybrid
//! meshes, VTK XML output with Lagrange cells for visualization, JSON quality
//! reports, and run-spec configuration loading. All writes are atomic
//! (temp file + rename) and byte-deterministic.

use crate::error::{Error, Result};
use crate::farfield::min_angle_deg;
use crate::geom::Point;
use crate::hocurve::check_validity;
use crate::linmesh::{ElemKind, Element, Mesh, Node};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// MSH element type ids per order: (quad, tri, line).
fn msh_types(order: u8) -> Result<(u32, u32, u32)> {
    match order {
        1 => Ok((3, 2, 1)),
        2 => Ok((10, 9, 8)),
        3 => Ok((36, 21, 26)),
        4 => Ok((37, 23, 27)),
        p => Err(Error::Export(format!(
            "MSH 4.1 export supports orders 1-4, got {p}"
        ))),
    }
}

fn order_of_msh_type(t: u32) -> Option<(ElemKind, u8)> {
    match t {
        3 => Some((ElemKind::Quad, 1)),
        10 => Some((ElemKind::Quad, 2)),
        36 => Some((ElemKind::Quad, 3)),
        37 => Some((ElemKind::Quad, 4)),
        2 => Some((ElemKind::Tri, 1)),
        9 => Some((ElemKind::Tri, 2)),
        21 => Some((ElemKind::Tri, 3)),
        23 => Some((ElemKind::Tri, 4)),
        _ => None,
    }
}

/// Gmsh recursive node ordering for a quad grid of order p, as (i, j)
/// lattice coordinates: corners, edge chains in edge direction, then the
/// interior grid ordered by the same rule at order p - 2.
fn gmsh_quad_grid(p: usize) -> Vec<(usize, usize)> {
    if p == 0 {
        return vec![(0, 0)];
    }
    let mut out = vec![(0, 0), (p, 0), (p, p), (0, p)];
    for k in 1..p {
        out.push((k, 0));
    }
    for k in 1..p {
        out.push((p, k));
    }
    for k in 1..p {
        out.push((p - k, p));
    }
    for k in 1..p {
        out.push((0, p - k));
    }
    if p >= 2 {
        out.extend(
            gmsh_quad_grid(p - 2)
                .into_iter()
                .map(|(i, j)| (i + 1, j + 1)),
        );
    }
    out
}

/// Gmsh recursive ordering for a triangle lattice of order p.
fn gmsh_tri_lattice(p: usize) -> Vec<(usize, usize)> {
    if p == 0 {
        return vec![(0, 0)];
    }
    let mut out = vec![(0, 0), (p, 0), (0, p)];
    for k in 1..p {
        out.push((k, 0));
    }
    for k in 1..p {
        out.push((p - k, k));
    }
    for k in 1..p {
        out.push((0, p - k));
    }
    if p >= 3 {
        out.extend(
            gmsh_tri_lattice(p - 3)
                .into_iter()
                .map(|(i, j)| (i + 1, j + 1)),
        );
    }
    out
}

fn tri_lattice_to_canonical(p: usize, i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (c, 0) if c == p => 1,
        (0, r) if r == p => 2,
        (c, 0) => 3 + (c - 1),
        (0, r) => 3 + 2 * (p - 1) + (p - r - 1),
        (c, r) if c + r == p => 3 + (p - 1) + (r - 1),
        (c, r) => {
            // interior, row-major over the lattice
            let mut idx = 3 * p;
            for jj in 1..r {
                idx += p - 1 - jj; // count of interior nodes in row jj
            }
            idx + (c - 1)
        }
    }
}

/// Permutation taking gmsh position -> canonical node index.
fn gmsh_perm(kind: ElemKind, order: u8) -> Vec<usize> {
    let p = order as usize;
    match kind {
        ElemKind::Quad => gmsh_quad_grid(p)
            .into_iter()
            .map(|(i, j)| crate::hocurve::grid_to_canonical(order, i, j))
            .collect(),
        ElemKind::Tri => gmsh_tri_lattice(p)
            .into_iter()
            .map(|(i, j)| tri_lattice_to_canonical(p, i, j))
            .collect(),
    }
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn patch_groups(m: &Mesh) -> BTreeMap<String, Vec<(usize, usize)>> {
    let mut groups: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for (ei, e) in m.elements.iter().enumerate() {
        for s in 0..e.kind.vertex_count() {
            if let Some(p) = &e.patches[s] {
                groups.entry(p.clone()).or_default().push((ei, s));
            }
        }
    }
    groups
}

/// MSH 4.1 text writer. Physical groups: one 1D group per patch name
/// (boundary line elements of the mesh order), all 2D elements on a single
/// surface entity.
pub fn write_msh(m: &Mesh, path: &Path) -> Result<()> {
    let order = m.order();
    let (quad_t, tri_t, line_t) = msh_types(order)?;
    let groups = patch_groups(m);
    let mut s = String::new();
    s.push_str("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");

    // physical names: 1D patches then the 2D domain
    s.push_str("$PhysicalNames\n");
    let _ = writeln!(s, "{}", groups.len() + 1);
    for (k, name) in groups.keys().enumerate() {
        let _ = writeln!(s, "1 {} \"{}\"", k + 1, name);
    }
    let _ = writeln!(s, "2 {} \"domain\"", groups.len() + 1);
    s.push_str("$EndPhysicalNames\n");

    // entities: one curve per patch, one surface
    let mut lo = Point { x: f64::INFINITY, y: f64::INFINITY };
    let mut hi = Point { x: f64::NEG_INFINITY, y: f64::NEG_INFINITY };
    for n in &m.nodes {
        lo.x = lo.x.min(n.p.x);
        lo.y = lo.y.min(n.p.y);
        hi.x = hi.x.max(n.p.x);
        hi.y = hi.y.max(n.p.y);
    }
    if m.nodes.is_empty() {
        lo = Point::default();
        hi = Point::default();
    }
    s.push_str("$Entities\n");
    let _ = writeln!(s, "0 {} 1 0", groups.len());
    for k in 0..groups.len() {
        let _ = writeln!(
            s,
            "{} {} {} 0 {} {} 0 1 {} 0",
            k + 1,
            lo.x,
            lo.y,
            hi.x,
            hi.y,
            k + 1
        );
    }
    let _ = writeln!(
        s,
        "1 {} {} 0 {} {} 0 1 {} 0",
        lo.x,
        lo.y,
        hi.x,
        hi.y,
        groups.len() + 1
    );
    s.push_str("$EndEntities\n");

    // nodes: single block on the surface entity
    s.push_str("$Nodes\n");
    let _ = writeln!(s, "1 {n} 1 {n}", n = m.nodes.len());
    let _ = writeln!(s, "2 1 0 {}", m.nodes.len());
    for i in 0..m.nodes.len() {
        let _ = writeln!(s, "{}", i + 1);
    }
    for n in &m.nodes {
        let _ = writeln!(s, "{} {} 0", n.p.x, n.p.y);
    }
    s.push_str("$EndNodes\n");

    // elements: one block per patch (lines), then quads, then tris
    let quads: Vec<&Element> = m.elements.iter().filter(|e| e.kind == ElemKind::Quad).collect();
    let tris: Vec<&Element> = m.elements.iter().filter(|e| e.kind == ElemKind::Tri).collect();
    let n_line: usize = groups.values().map(|v| v.len()).sum();
    let total = n_line + quads.len() + tris.len();
    let mut blocks = 0;
    blocks += groups.values().filter(|v| !v.is_empty()).count();
    if !quads.is_empty() {
        blocks += 1;
    }
    if !tris.is_empty() {
        blocks += 1;
    }
    s.push_str("$Elements\n");
    let _ = writeln!(s, "{} {} 1 {}", blocks, total, total.max(1));
    let mut tag = 1usize;
    for (k, sides) in groups.values().enumerate() {
        let _ = writeln!(s, "1 {} {} {}", k + 1, line_t, sides.len());
        for &(ei, side) in sides {
            let nodes = m.elements[ei].side_nodes(side);
            let _ = write!(s, "{tag} {} {}", nodes[0] + 1, nodes[nodes.len() - 1] + 1);
            for &id in &nodes[1..nodes.len() - 1] {
                let _ = write!(s, " {}", id + 1);
            }
            s.push('\n');
            tag += 1;
        }
    }
    for (kind, list, t) in [(ElemKind::Quad, &quads, quad_t), (ElemKind::Tri, &tris, tri_t)] {
        if list.is_empty() {
            continue;
        }
        let perm = gmsh_perm(kind, order);
        let _ = writeln!(s, "2 1 {} {}", t, list.len());
        for e in list {
            let _ = write!(s, "{tag}");
            for &c in &perm {
                let _ = write!(s, " {}", e.nodes[c] + 1);
            }
            s.push('\n');
            tag += 1;
        }
    }
    s.push_str("$EndElements\n");
    atomic_write(path, s.as_bytes())
}

struct MshParser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> MshParser<'a> {
    fn next_line(&mut self, section: &str) -> Result<(usize, &'a str)> {
        loop {
            match self.lines.next() {
                None => {
                    return Err(Error::Parse(format!(
                        "unexpected end of file inside {section}"
                    )))
                }
                Some((i, l)) if !l.trim().is_empty() => return Ok((i + 1, l.trim())),
                _ => continue,
            }
        }
    }
}

fn parse_nums<T: std::str::FromStr>(line: &str, lineno: usize) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::Parse(format!("line {lineno}: bad number '{t}'")))
        })
        .collect()
}

/// MSH 4.1 text reader for the subset written by `write_msh`.
pub fn read_msh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    let mut p = MshParser { lines: text.lines().enumerate() };

    let (ln, header) = p.next_line("preamble")?;
    if header != "$MeshFormat" {
        return Err(Error::Parse(format!("line {ln}: expected $MeshFormat")));
    }
    let (ln, version) = p.next_line("$MeshFormat")?;
    let toks: Vec<&str> = version.split_whitespace().collect();
    if toks.first() != Some(&"4.1") || toks.get(1) != Some(&"0") {
        return Err(Error::Parse(format!(
            "line {ln}: unsupported mesh format '{version}'"
        )));
    }
    p.next_line("$MeshFormat")?; // $EndMeshFormat

    let mut phys_names: BTreeMap<u32, String> = BTreeMap::new();
    let mut entity_phys: BTreeMap<u32, u32> = BTreeMap::new();
    let mut tag_to_idx: BTreeMap<u64, u32> = BTreeMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut elements: Vec<Element> = Vec::new();
    let mut lines_raw: Vec<(u32, Vec<u32>)> = Vec::new(); // (physical, node ids)

    loop {
        let section = match p.lines.next() {
            None => break,
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => l.trim().to_string(),
        };
        match section.as_str() {
            "$PhysicalNames" => {
                let (ln, count) = p.next_line("$PhysicalNames")?;
                let n: usize = count
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {ln}: bad count")))?;
                for _ in 0..n {
                    let (ln, l) = p.next_line("$PhysicalNames")?;
                    let toks: Vec<&str> = l.splitn(3, ' ').collect();
                    if toks.len() != 3 {
                        return Err(Error::Parse(format!("line {ln}: bad physical name")));
                    }
                    let tag: u32 = toks[1]
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {ln}: bad tag")))?;
                    phys_names.insert(tag, toks[2].trim_matches('"').to_string());
                }
                p.next_line("$PhysicalNames")?; // $End
            }
            "$Entities" => {
                let (ln, l) = p.next_line("$Entities")?;
                let counts: Vec<usize> = parse_nums(l, ln)?;
                if counts.len() != 4 {
                    return Err(Error::Parse(format!("line {ln}: bad entity counts")));
                }
                for _ in 0..counts[0] {
                    p.next_line("$Entities")?;
                }
                for _ in 0..counts[1] {
                    let (ln, l) = p.next_line("$Entities")?;
                    let f: Vec<f64> = parse_nums(l, ln)?;
                    // tag, bbox(6), numPhys, phys...
                    if f.len() >= 9 && f[7] >= 1.0 {
                        entity_phys.insert(f[0] as u32, f[8] as u32);
                    }
                }
                for _ in 0..counts[2] + counts[3] {
                    p.next_line("$Entities")?;
                }
                p.next_line("$Entities")?; // $End
            }
            "$Nodes" => {
                let (ln, l) = p.next_line("$Nodes")?;
                let h: Vec<u64> = parse_nums(l, ln)?;
                if h.len() != 4 {
                    return Err(Error::Parse(format!("line {ln}: bad $Nodes header")));
                }
                for _ in 0..h[0] {
                    let (ln, l) = p.next_line("$Nodes")?;
                    let bh: Vec<i64> = parse_nums(l, ln)?;
                    if bh.len() != 4 {
                        return Err(Error::Parse(format!("line {ln}: bad node block")));
                    }
                    let n = bh[3] as usize;
                    let mut tags = Vec::with_capacity(n);
                    for _ in 0..n {
                        let (ln, l) = p.next_line("$Nodes")?;
                        let t: u64 = l
                            .parse()
                            .map_err(|_| Error::Parse(format!("line {ln}: bad node tag")))?;
                        tags.push(t);
                    }
                    for tag in tags {
                        let (ln, l) = p.next_line("$Nodes")?;
                        let c: Vec<f64> = parse_nums(l, ln)?;
                        if c.len() < 2 {
                            return Err(Error::Parse(format!("line {ln}: bad coordinates")));
                        }
                        tag_to_idx.insert(tag, nodes.len() as u32);
                        nodes.push(Node {
                            p: Point { x: c[0], y: c[1] },
                            assoc: None,
                        });
                    }
                }
                p.next_line("$Nodes")?; // $End
            }
            "$Elements" => {
                let (ln, l) = p.next_line("$Elements")?;
                let h: Vec<u64> = parse_nums(l, ln)?;
                if h.len() != 4 {
                    return Err(Error::Parse(format!("line {ln}: bad $Elements header")));
                }
                for _ in 0..h[0] {
                    let (ln, l) = p.next_line("$Elements")?;
                    let bh: Vec<u64> = parse_nums(l, ln)?;
                    if bh.len() != 4 {
                        return Err(Error::Parse(format!("line {ln}: bad element block")));
                    }
                    let (dim, ent, etype, count) =
                        (bh[0], bh[1] as u32, bh[2] as u32, bh[3] as usize);
                    for _ in 0..count {
                        let (ln, l) = p.next_line("$Elements")?;
                        let rec: Vec<u64> = parse_nums(l, ln)?;
                        let ids: Result<Vec<u32>> = rec[1..]
                            .iter()
                            .map(|t| {
                                tag_to_idx.get(t).copied().ok_or_else(|| {
                                    Error::Parse(format!("line {ln}: unknown node tag {t}"))
                                })
                            })
                            .collect();
                        let ids = ids?;
                        if dim == 1 {
                            let phys = entity_phys.get(&ent).copied().unwrap_or(0);
                            lines_raw.push((phys, ids));
                        } else if dim == 2 {
                            let (kind, order) = order_of_msh_type(etype).ok_or_else(|| {
                                Error::Parse(format!(
                                    "line {ln}: unknown element type {etype}"
                                ))
                            })?;
                            let perm = gmsh_perm(kind, order);
                            if ids.len() != perm.len() {
                                return Err(Error::Parse(format!(
                                    "line {ln}: element has {} nodes, expected {}",
                                    ids.len(),
                                    perm.len()
                                )));
                            }
                            let mut canon = vec![0u32; ids.len()];
                            for (g, &c) in perm.iter().enumerate() {
                                canon[c] = ids[g];
                            }
                            elements.push(Element {
                                id: elements.len() as u32,
                                kind,
                                order,
                                nodes: canon,
                                block: None,
                                patches: vec![None; kind.vertex_count()],
                            });
                        } else {
                            return Err(Error::Parse(format!(
                                "line {ln}: unsupported element dimension {dim}"
                            )));
                        }
                    }
                }
                p.next_line("$Elements")?; // $End
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // skip unknown sections
                loop {
                    let (_, l) = p.next_line(&section)?;
                    if l == format!("$End{}", &other[1..]) {
                        break;
                    }
                }
            }
            _ => {}
        }
    }

    // re-attach patches from boundary line elements
    let mut side_of: BTreeMap<(u32, u32), Vec<(usize, usize)>> = BTreeMap::new();
    for (ei, e) in elements.iter().enumerate() {
        for s in 0..e.kind.vertex_count() {
            side_of.entry(e.edge_key(s)).or_default().push((ei, s));
        }
    }
    for (phys, ids) in lines_raw {
        if ids.len() < 2 {
            return Err(Error::Parse("line element with fewer than 2 nodes".into()));
        }
        let (a, b) = (ids[0], ids[1]);
        let key = if a < b { (a, b) } else { (b, a) };
        let name = phys_names.get(&phys).cloned().unwrap_or_default();
        if let Some(sides) = side_of.get(&key) {
            for &(ei, s) in sides {
                elements[ei].patches[s] = Some(name.clone());
            }
        }
    }
    Ok(Mesh { nodes, elements })
}

/// VTK node ordering differs from canonical only in the direction of quad
/// edges 2 and 3 (VTK runs them in +xi / +eta, canonical in edge direction).
fn vtk_perm(kind: ElemKind, order: u8) -> Vec<usize> {
    let p = order as usize;
    let n = kind.node_count(order);
    match kind {
        ElemKind::Tri => (0..n).collect(),
        ElemKind::Quad => {
            let mut out: Vec<usize> = (0..4).collect();
            for e in 0..4usize {
                let base = 4 + e * (p - 1).max(0);
                if p < 2 {
                    continue;
                }
                if e < 2 {
                    out.extend(base..base + p - 1);
                } else {
                    out.extend((base..base + p - 1).rev());
                }
            }
            out.extend(4 + 4 * (p.saturating_sub(1))..n);
            out
        }
    }
}

/// VTK XML unstructured grid with Lagrange cells; optional per-cell scalar
/// data and debug polylines (shell or medial geometry).
pub fn write_vtk(
    m: &Mesh,
    path: &Path,
    cell_data: &[(&str, Vec<f64>)],
    debug_lines: &[Vec<Point>],
) -> Result<()> {
    for (name, vals) in cell_data {
        if vals.len() != m.elements.len() {
            return Err(Error::Export(format!(
                "cell data '{name}' has {} values for {} cells",
                vals.len(),
                m.elements.len()
            )));
        }
    }
    let mut pts: Vec<Point> = m.nodes.iter().map(|n| n.p).collect();
    let mut connectivity: Vec<usize> = Vec::new();
    let mut offsets: Vec<usize> = Vec::new();
    let mut types: Vec<u8> = Vec::new();
    for e in &m.elements {
        let perm = vtk_perm(e.kind, e.order);
        for &c in &perm {
            connectivity.push(e.nodes[c] as usize);
        }
        offsets.push(connectivity.len());
        types.push(match e.kind {
            ElemKind::Quad => 70, // VTK_LAGRANGE_QUADRILATERAL
            ElemKind::Tri => 69,  // VTK_LAGRANGE_TRIANGLE
        });
    }
    for line in debug_lines {
        let base = pts.len();
        pts.extend(line.iter().copied());
        connectivity.extend(base..base + line.len());
        offsets.push(connectivity.len());
        types.push(4); // VTK_POLY_LINE
    }
    let n_cells = types.len();
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\"?>\n");
    s.push_str("<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n");
    s.push_str("  <UnstructuredGrid>\n");
    let _ = writeln!(
        s,
        "    <Piece NumberOfPoints=\"{}\" NumberOfCells=\"{}\">",
        pts.len(),
        n_cells
    );
    s.push_str("      <Points>\n        <DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n");
    for p in &pts {
        let _ = writeln!(s, "          {} {} 0", p.x, p.y);
    }
    s.push_str("        </DataArray>\n      </Points>\n");
    s.push_str("      <Cells>\n        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n");
    for c in &connectivity {
        let _ = writeln!(s, "          {c}");
    }
    s.push_str("        </DataArray>\n        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n");
    for o in &offsets {
        let _ = writeln!(s, "          {o}");
    }
    s.push_str("        </DataArray>\n        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n");
    for t in &types {
        let _ = writeln!(s, "          {t}");
    }
    s.push_str("        </DataArray>\n      </Cells>\n");
    if !cell_data.is_empty() {
        s.push_str("      <CellData>\n");
        for (name, vals) in cell_data {
            let _ = writeln!(
                s,
                "        <DataArray type=\"Float64\" Name=\"{name}\" format=\"ascii\">"
            );
            for v in vals {
                let _ = writeln!(s, "          {v}");
            }
            // debug polylines carry no data; pad with zeros
            for _ in 0..debug_lines.len() {
                s.push_str("          0\n");
            }
            s.push_str("        </DataArray>\n");
        }
        s.push_str("      </CellData>\n");
    }
    s.push_str("    </Piece>\n  </UnstructuredGrid>\n</VTKFile>\n");
    atomic_write(path, s.as_bytes())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FirstLayer {
    pub min: Option<f64>,
    pub mean: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QualityReport {
    pub schema: u32,
    pub nodes: usize,
    pub quads: usize,
    pub tris: usize,
    pub order: u8,
    pub invalid: usize,
    pub invalid_ids: Vec<u32>,
    pub worst_element: Option<u32>,
    pub worst_scaled: f64,
    /// scaled-Jacobian histogram over [0, 1] in 10 bins; values below 0
    /// count into the first bin
    pub histogram: [usize; 10],
    pub first_layer: FirstLayer,
    pub farfield_min_angle_deg: Option<f64>,
}

/// Structured quality report: validity histogram, first-layer heights over
/// wall patches, far-field minimum angle.
pub fn quality_report(m: &Mesh) -> Result<QualityReport> {
    let validity = check_validity(m)?;
    let mut histogram = [0usize; 10];
    let mut worst: Option<(f64, u32)> = None;
    for v in &validity.per_element {
        let bin = ((v.scaled.max(0.0) * 10.0) as usize).min(9);
        histogram[bin] += 1;
        if worst.map(|(w, _)| v.scaled < w).unwrap_or(true) {
            worst = Some((v.scaled, v.id));
        }
    }
    // first-layer heights: lateral vertex distances of elements with a wall side
    let mut heights: Vec<f64> = Vec::new();
    for e in &m.elements {
        if e.kind != ElemKind::Quad {
            continue;
        }
        for s in 0..4 {
            if !e.patches[s].as_deref().is_some_and(|p| p.starts_with("wall:")) {
                continue;
            }
            let v = |k: usize| m.nodes[e.nodes[k] as usize].p;
            let h1 = v(s).dist(v((s + 3) % 4));
            let h2 = v((s + 1) % 4).dist(v((s + 2) % 4));
            heights.push(h1.min(h2));
        }
    }
    let far_min = m
        .elements
        .iter()
        .filter(|e| e.kind == ElemKind::Tri)
        .map(|e| {
            min_angle_deg(
                m.nodes[e.nodes[0] as usize].p,
                m.nodes[e.nodes[1] as usize].p,
                m.nodes[e.nodes[2] as usize].p,
            )
        })
        .fold(None, |acc: Option<f64>, a| {
            Some(acc.map_or(a, |b| b.min(a)))
        });
    Ok(QualityReport {
        schema: 1,
        nodes: m.nodes.len(),
        quads: m.elements.iter().filter(|e| e.kind == ElemKind::Quad).count(),
        tris: m.elements.iter().filter(|e| e.kind == ElemKind::Tri).count(),
        order: m.order(),
        invalid: validity.invalid.len(),
        invalid_ids: validity.invalid.clone(),
        worst_element: worst.map(|(_, id)| id),
        worst_scaled: validity.worst_scaled,
        histogram,
        first_layer: FirstLayer {
            min: heights.iter().copied().fold(None, |a, h| {
                Some(a.map_or(h, |b: f64| b.min(h)))
            }),
            mean: if heights.is_empty() {
                None
            } else {
                Some(heights.iter().sum::<f64>() / heights.len() as f64)
            },
        },
        farfield_min_angle_deg: far_min,
    })
}

// ---- run-spec configuration ----

fn default_te() -> String {
    "open".to_string()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "preset", rename_all = "lowercase")]
pub enum GeometrySpec {
    Naca {
        digits: String,
        #[serde(default = "default_te")]
        te: String,
    },
    Corner {
        leg: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub thickness: f64,
    /// boundary sampling spacing; defaults to thickness / 20
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizingSpec {
    /// wall tangential spacing; defaults to chord / 100
    #[serde(default)]
    pub h_wall: Option<f64>,
    pub h_far: f64,
}

fn default_min_angle() -> f64 {
    20.0
}

fn default_gradation() -> f64 {
    1.3
}

fn default_budget() -> usize {
    1_000_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarfieldSpec {
    #[serde(default = "default_min_angle")]
    pub min_angle_deg: f64,
    #[serde(default = "default_gradation")]
    pub gradation: f64,
    #[serde(default = "default_budget")]
    pub node_budget: usize,
}

impl Default for FarfieldSpec {
    fn default() -> Self {
        FarfieldSpec {
            min_angle_deg: default_min_angle(),
            gradation: default_gradation(),
            node_budget: default_budget(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WakeSpec {
    #[serde(default = "default_wake_length")]
    pub length: f64,
    #[serde(default)]
    pub half_angle_deg: f64,
    #[serde(default = "default_wake_columns")]
    pub columns: u32,
    #[serde(default)]
    pub gap: Option<f64>,
}

fn default_wake_length() -> f64 {
    2.0
}

fn default_wake_columns() -> u32 {
    8
}

impl Default for WakeSpec {
    fn default() -> Self {
        WakeSpec {
            length: default_wake_length(),
            half_angle_deg: 0.0,
            columns: default_wake_columns(),
            gap: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub n: usize,
    pub ratio: f64,
    #[serde(default = "default_wake_ratio")]
    pub wake_ratio_te: f64,
}

fn default_wake_ratio() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub geometry: GeometrySpec,
    pub topology: String,
    pub shell: ShellSpec,
    #[serde(default)]
    pub wake: WakeSpec,
    pub sizing: SizingSpec,
    pub order: u8,
    pub split: SplitConfig,
    #[serde(default)]
    pub farfield: FarfieldSpec,
    pub outer: OuterSpec,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.topology.as_str(), "O" | "C" | "H") {
            return Err(Error::Config(format!(
                "topology must be one of O, C, H: got '{}'",
                self.topology
            )));
        }
        if self.shell.thickness <= 0.0 {
            return Err(Error::Config("shell.thickness must be positive".into()));
        }
        if self.shell.delta.is_some_and(|d| d <= 0.0) {
            return Err(Error::Config("shell.delta must be positive".into()));
        }
        if self.sizing.h_far <= 0.0 {
            return Err(Error::Config("sizing.h_far must be positive".into()));
        }
        if self.sizing.h_wall.is_some_and(|h| h <= 0.0) {
            return Err(Error::Config("sizing.h_wall must be positive".into()));
        }
        if !(2..=10).contains(&self.order) {
            return Err(Error::Config(format!(
                "order must be in [2, 10]: got {}",
                self.order
            )));
        }
        if self.split.n == 0 {
            return Err(Error::Config("split.n must be >= 1".into()));
        }
        if self.split.ratio <= 0.0 {
            return Err(Error::Config("split.ratio must be positive".into()));
        }
        if self.split.wake_ratio_te < 1.0 {
            return Err(Error::Config("split.wake_ratio_te must be >= 1".into()));
        }
        if self.wake.length <= 0.0 {
            return Err(Error::Config("wake.length must be positive".into()));
        }
        if self.farfield.gradation < 1.0 {
            return Err(Error::Config("farfield.gradation must be >= 1".into()));
        }
        if !(self.outer.max[0] > self.outer.min[0] && self.outer.max[1] > self.outer.min[1]) {
            return Err(Error::Config("outer box is degenerate".into()));
        }
        Ok(())
    }
}

pub fn load_runspec(path: &Path) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path)?;
    let spec: RunSpec = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("run spec: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::pt;
    use crate::hocurve::elevate;

    fn sample_mesh(order: u8) -> Mesh {
        // two quads and one triangle, with wall/skin patches
        let nodes = vec![
            Node { p: pt(0.0, 0.0), assoc: None },
            Node { p: pt(1.0, 0.0), assoc: None },
            Node { p: pt(1.0, 1.0), assoc: None },
            Node { p: pt(0.0, 1.0), assoc: None },
            Node { p: pt(2.0, 0.0), assoc: None },
            Node { p: pt(2.1, 1.1), assoc: None },
            Node { p: pt(3.0, 0.5), assoc: None },
        ];
        let elements = vec![
            Element {
                id: 0,
                kind: ElemKind::Quad,
                order: 1,
                nodes: vec![0, 1, 2, 3],
                block: None,
                patches: vec![Some("wall:w".into()), None, Some("skin".into()), None],
            },
            Element {
                id: 1,
                kind: ElemKind::Quad,
                order: 1,
                nodes: vec![1, 4, 5, 2],
                block: None,
                patches: vec![Some("wall:w".into()), None, None, None],
            },
            Element {
                id: 2,
                kind: ElemKind::Tri,
                order: 1,
                nodes: vec![4, 6, 5],
                block: None,
                patches: vec![None; 3],
            },
        ];
        let m = Mesh { nodes, elements };
        if order == 1 {
            m
        } else {
            elevate(&m, order).unwrap()
        }
    }

    #[test]
    fn roundtrip_identity_orders_2_to_4() {
        let dir = tempfile::tempdir().unwrap();
        for order in [2u8, 3, 4] {
            let m = sample_mesh(order);
            let path = dir.path().join(format!("m{order}.msh"));
            write_msh(&m, &path).unwrap();
            let r = read_msh(&path).unwrap();
            assert_eq!(r.nodes.len(), m.nodes.len());
            assert_eq!(r.elements.len(), m.elements.len());
            for (a, b) in m.nodes.iter().zip(&r.nodes) {
                assert!(a.p.dist(b.p) < 1e-12);
            }
            for (a, b) in m.elements.iter().zip(&r.elements) {
                assert_eq!(a.kind, b.kind);
                assert_eq!(a.order, b.order);
                assert_eq!(a.nodes, b.nodes, "connectivity mismatch at order {order}");
                assert_eq!(a.patches, b.patches);
            }
        }
    }

    #[test]
    fn writer_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample_mesh(3);
        let p1 = dir.path().join("a.msh");
        let p2 = dir.path().join("b.msh");
        write_msh(&m, &p1).unwrap();
        write_msh(&m, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn p2_quad_uses_type_10() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = sample_mesh(2);
        m.elements.truncate(1);
        let path = dir.path().join("q.msh");
        write_msh(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("2 1 10 1"), "missing 9-node quad block");
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample_mesh(2);
        let path = dir.path().join("t.msh");
        write_msh(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut = &text[..text.len() / 2];
        let broken = dir.path().join("broken.msh");
        std::fs::write(&broken, cut).unwrap();
        assert!(matches!(read_msh(&broken), Err(Error::Parse(_))));
    }

    #[test]
    fn unknown_element_type_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n$Nodes\n1 1 1 1\n2 1 0 1\n1\n0 0 0\n$EndNodes\n$Elements\n1 1 1 1\n2 1 99 1\n1 1\n$EndElements\n";
        let path = dir.path().join("bad.msh");
        std::fs::write(&path, text).unwrap();
        let err = read_msh(&path).unwrap_err();
        assert!(matches!(err, Error::Parse(ref s) if s.contains("99")), "{err:?}");
    }

    #[test]
    fn gmsh_perm_is_a_permutation() {
        for order in [2u8, 3, 4] {
            for kind in [ElemKind::Quad, ElemKind::Tri] {
                let perm = gmsh_perm(kind, order);
                let n = kind.node_count(order);
                assert_eq!(perm.len(), n);
                let mut seen = vec![false; n];
                for &c in &perm {
                    assert!(!seen[c]);
                    seen[c] = true;
                }
            }
        }
    }

    #[test]
    fn gmsh_quad_p2_golden() {
        // 9-node quad: corners, edge midpoints, center (grid row-major
        // canonical: center is index 8)
        let perm = gmsh_perm(ElemKind::Quad, 2);
        assert_eq!(perm, vec![0, 1, 2, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn gmsh_quad_p3_golden() {
        // 16-node quad: interior 2x2 block is recursively ordered
        // (1,1) (2,1) (2,2) (1,2) = canonical 12, 13, 15, 14
        let perm = gmsh_perm(ElemKind::Quad, 3);
        assert_eq!(&perm[..12], (0..12).collect::<Vec<_>>().as_slice());
        assert_eq!(&perm[12..], &[12, 13, 15, 14]);
    }

    #[test]
    fn gmsh_quad_p4_golden() {
        // 25-node quad: 4 corners + 12 edge nodes, then the inner 3x3 grid
        // ordered corners, edges, center
        let perm = gmsh_perm(ElemKind::Quad, 4);
        assert_eq!(&perm[..16], (0..16).collect::<Vec<_>>().as_slice());
        // inner grid (i,j) in 1..=3; canonical interior index = 16 + (j-1)*3 + (i-1)
        let canon = |i: usize, j: usize| 16 + (j - 1) * 3 + (i - 1);
        assert_eq!(
            &perm[16..],
            &[
                canon(1, 1),
                canon(3, 1),
                canon(3, 3),
                canon(1, 3),
                canon(2, 1),
                canon(3, 2),
                canon(2, 3),
                canon(1, 2),
                canon(2, 2),
            ]
        );
    }

    #[test]
    fn mixed_mesh_has_two_element_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample_mesh(2);
        let path = dir.path().join("mix.msh");
        write_msh(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("2 1 10 2"), "quad block");
        assert!(text.contains("2 1 9 1"), "tri block");
    }

    #[test]
    fn unsupported_order_is_export_error() {
        let m = sample_mesh(5);
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            write_msh(&m, &dir.path().join("x.msh")),
            Err(Error::Export(_))
        ));
    }

    #[test]
    fn vtk_single_quad_cell() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = sample_mesh(2);
        m.elements.truncate(1);
        let path = dir.path().join("m.vtu");
        write_vtk(&m, &path, &[("scaled", vec![1.0])], &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("NumberOfCells=\"1\""));
        assert!(text.contains("70"));
        assert!(text.contains("Name=\"scaled\""));
    }

    #[test]
    fn vtk_empty_mesh_ok() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.vtu");
        write_vtk(&Mesh::default(), &path, &[], &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("NumberOfCells=\"0\""));
    }

    #[test]
    fn quality_report_affine_histogram() {
        let m = sample_mesh(2);
        let r = quality_report(&m).unwrap();
        assert_eq!(r.invalid, 0);
        assert_eq!(r.histogram.iter().sum::<usize>(), 3);
        // the unit quad and the straight tri are affine -> last bin
        assert!(r.histogram[9] >= 2);
        assert!(r.first_layer.min.is_some());
        assert!(r.farfield_min_angle_deg.is_some());
    }

    #[test]
    fn quality_report_flags_folded_element() {
        let mut m = sample_mesh(2);
        // fold quad 0: drag a corner across the opposite edge
        let vid = m.elements[0].nodes[2] as usize;
        m.nodes[vid].p = pt(-0.5, -0.5);
        let r = quality_report(&m).unwrap();
        assert!(r.invalid >= 1);
        assert!(r.worst_element.is_some());
    }

    #[test]
    fn runspec_minimal_defaults() {
        let text = r#"{
            "geometry": {"preset": "naca", "digits": "0012"},
            "topology": "H",
            "shell": {"thickness": 0.05},
            "sizing": {"h_far": 0.25},
            "order": 4,
            "split": {"n": 5, "ratio": 2.0, "wake_ratio_te": 2.0},
            "outer": {"min": [-2.0, -2.0], "max": [4.0, 2.0]}
        }"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        std::fs::write(&path, text).unwrap();
        let spec = load_runspec(&path).unwrap();
        assert_eq!(spec.wake.length, 2.0);
        assert_eq!(spec.farfield.min_angle_deg, 20.0);
        assert!(spec.shell.delta.is_none());
    }

    #[test]
    fn runspec_errors_name_keys() {
        let dir = tempfile::tempdir().unwrap();
        let bad_thickness = r#"{
            "geometry": {"preset": "naca", "digits": "0012"},
            "topology": "H",
            "shell": {"thickness": -1.0},
            "sizing": {"h_far": 0.25},
            "order": 4,
            "split": {"n": 5, "ratio": 2.0},
            "outer": {"min": [-2.0, -2.0], "max": [4.0, 2.0]}
        }"#;
        let path = dir.path().join("bad.json");
        std::fs::write(&path, bad_thickness).unwrap();
        let err = load_runspec(&path).unwrap_err();
        assert!(matches!(err, Error::Config(ref s) if s.contains("shell.thickness")));

        let bad_topo = bad_thickness
            .replace("-1.0", "0.05")
            .replace("\"H\"", "\"X\"");
        std::fs::write(&path, bad_topo).unwrap();
        let err = load_runspec(&path).unwrap_err();
        assert!(matches!(err, Error::Config(ref s) if s.contains("topology")));

        let unknown = bad_thickness
            .replace("-1.0", "0.05")
            .replace("\"order\": 4", "\"order\": 4, \"bogus\": 1");
        std::fs::write(&path, unknown).unwrap();
        assert!(matches!(load_runspec(&path), Err(Error::Config(_))));
    }
}
