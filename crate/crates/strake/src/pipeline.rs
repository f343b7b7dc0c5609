//! Stage orchestration: geometry construction from a run spec and the
//! linear chain partition -> linear -> curved -> split -> final, with each
//! stage's product kept so callers can persist per-stage artifacts.

use crate::error::{Error, Result};
use crate::farfield::{extract_skin, triangulate_farfield, FarfieldParams};
use crate::geom::{pt, Point};
use crate::geomkit::{Geometry, TrailingEdge};
use crate::hocurve::{
    check_validity, elevate, project_boundary_edges, relax_edge_nodes, smooth_interior_nodes,
};
use crate::isosplit::{split_boundary_layer, SplitSpec};
use crate::linmesh::{conformality_check, mesh_sides, sweep_blocks, Mesh};
use crate::medial::{approximate_medial, build_shell};
use crate::meshio::{GeometrySpec, RunSpec};
use crate::partition::{build_topology, BlockGraph, Topology, WakeParams};
use crate::presets::{self, Body};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Partition,
    Linear,
    Curved,
    Split,
    Final,
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Stage> {
        match s {
            "partition" => Ok(Stage::Partition),
            "linear" => Ok(Stage::Linear),
            "curved" => Ok(Stage::Curved),
            "split" => Ok(Stage::Split),
            "final" => Ok(Stage::Final),
            other => Err(Error::Config(format!(
                "unknown stage '{other}' (expected partition|linear|curved|split|final)"
            ))),
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Partition => "partition",
            Stage::Linear => "linear",
            Stage::Curved => "curved",
            Stage::Split => "split",
            Stage::Final => "final",
        })
    }
}

/// Everything produced up to the requested stage.
#[derive(Default)]
pub struct RunProducts {
    pub graph: Option<BlockGraph>,
    pub linear: Option<Mesh>,
    pub curved: Option<Mesh>,
    pub split: Option<Mesh>,
    pub final_mesh: Option<Mesh>,
}

pub fn build_geometry(spec: &RunSpec) -> Result<(Geometry, Body)> {
    let mut geom = Geometry::default();
    let body = match &spec.geometry {
        GeometrySpec::Naca { digits, te } => {
            let te = match te.as_str() {
                "open" => TrailingEdge::Open,
                "closed" => TrailingEdge::Closed,
                other => {
                    return Err(Error::Config(format!(
                        "geometry.te must be 'open' or 'closed', got '{other}'"
                    )))
                }
            };
            presets::naca4(&mut geom, digits, te)?
        }
        GeometrySpec::Corner { leg } => {
            if *leg <= 0.0 {
                return Err(Error::Config("geometry.leg must be positive".into()));
            }
            presets::corner_walls(&mut geom, *leg)?
        }
    };
    Ok((geom, body))
}

fn topology_of(spec: &RunSpec) -> Result<Topology> {
    match spec.topology.as_str() {
        "O" => Ok(Topology::O),
        "C" => Ok(Topology::C),
        "H" => Ok(Topology::H),
        other => Err(Error::Config(format!("topology '{other}' not recognized"))),
    }
}

pub fn run_partition(spec: &RunSpec, geom: &Geometry, body: &Body) -> Result<BlockGraph> {
    let t = spec.shell.thickness;
    let delta = spec.shell.delta.unwrap_or(t / 20.0);
    let shell = build_shell(geom, &body.boundary, t, delta)?;
    // medial edges locate junction blocks on open wall chains
    let junction_edges = if body.boundary.closed {
        Vec::new()
    } else {
        approximate_medial(geom, &body.boundary, delta, 2.0 * t)?
    };
    let wake = WakeParams {
        length: spec.wake.length,
        half_angle_deg: spec.wake.half_angle_deg,
        columns: spec.wake.columns,
        gap: spec.wake.gap,
    };
    build_topology(geom, &[shell], topology_of(spec)?, &wake, &junction_edges)
}

pub fn run_linear(spec: &RunSpec, geom: &Geometry, g: &BlockGraph) -> Result<Mesh> {
    let h_wall = spec.sizing.h_wall.unwrap_or(0.01);
    let sides = mesh_sides(geom, g, h_wall)?;
    let m = sweep_blocks(geom, g, &sides)?;
    let rep = conformality_check(&m);
    if !rep.is_ok() {
        return Err(Error::Conformality(format!(
            "linear mesh has {} violations",
            rep.violations.len()
        )));
    }
    Ok(m)
}

pub fn run_curved(spec: &RunSpec, geom: &Geometry, lin: &Mesh) -> Result<Mesh> {
    let mut hi = elevate(lin, spec.order)?;
    project_boundary_edges(&mut hi, geom)?;
    relax_edge_nodes(&mut hi, geom)?;
    smooth_interior_nodes(&mut hi)?;
    let v = check_validity(&hi)?;
    if !v.is_valid() {
        return Err(Error::Validation(format!(
            "curved mesh has {} invalid elements (worst: element {})",
            v.invalid.len(),
            v.invalid[0]
        )));
    }
    Ok(hi)
}

pub fn run_split(spec: &RunSpec, g: &BlockGraph, curved: &Mesh) -> Result<Mesh> {
    let s = SplitSpec {
        n: spec.split.n,
        ratio: spec.split.ratio,
        wake_ratio_te: spec.split.wake_ratio_te,
    };
    let m = split_boundary_layer(curved, g, &s)?;
    let v = check_validity(&m)?;
    if !v.is_valid() {
        return Err(Error::Validation(format!(
            "split mesh has {} invalid elements",
            v.invalid.len()
        )));
    }
    Ok(m)
}

pub fn run_final(spec: &RunSpec, near: &Mesh) -> Result<Mesh> {
    let skins = extract_skin(near)?;
    let prm = FarfieldParams {
        h_far: spec.sizing.h_far,
        min_angle_deg: spec.farfield.min_angle_deg,
        gradation: spec.farfield.gradation,
        node_budget: spec.farfield.node_budget,
    };
    let omin = pt(spec.outer.min[0], spec.outer.min[1]);
    let omax = pt(spec.outer.max[0], spec.outer.max[1]);
    let far = triangulate_farfield(near, &skins, omin, omax, &prm)?;
    let merged = crate::farfield::merge(near, &far)?;
    let v = check_validity(&merged)?;
    if !v.is_valid() {
        return Err(Error::Validation(format!(
            "final mesh has {} invalid elements",
            v.invalid.len()
        )));
    }
    Ok(merged)
}

/// Run the pipeline up to (and including) `stage`.
pub fn run(spec: &RunSpec, stage: Stage) -> Result<RunProducts> {
    spec.validate()?;
    let (geom, body) = build_geometry(spec)?;
    let mut out = RunProducts::default();
    let g = run_partition(spec, &geom, &body)?;
    out.graph = Some(g);
    if stage == Stage::Partition {
        return Ok(out);
    }
    let lin = run_linear(spec, &geom, out.graph.as_ref().unwrap())?;
    out.linear = Some(lin);
    if stage == Stage::Linear {
        return Ok(out);
    }
    let curved = run_curved(spec, &geom, out.linear.as_ref().unwrap())?;
    out.curved = Some(curved);
    if stage == Stage::Curved {
        return Ok(out);
    }
    let split = run_split(spec, out.graph.as_ref().unwrap(), out.curved.as_ref().unwrap())?;
    out.split = Some(split);
    if stage == Stage::Split {
        return Ok(out);
    }
    out.final_mesh = Some(run_final(spec, out.split.as_ref().unwrap())?);
    Ok(out)
}

/// Clearance between wake blocks and any obstacle is checked by the caller;
/// this helper reports the minimum distance from wake block corners to a
/// point set, used by H-topology gap validation.
pub fn wake_clearance(g: &BlockGraph, obstacles: &[Point]) -> Option<f64> {
    let mut min = None;
    for b in &g.blocks {
        if b.wake_x.is_none() {
            continue;
        }
        for c in &b.corners {
            for o in obstacles {
                let d = c.dist(*o);
                if min.map(|m: f64| d < m).unwrap_or(true) {
                    min = Some(d);
                }
            }
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naca_spec() -> RunSpec {
        serde_json::from_str(
            r#"{
            "geometry": {"preset": "naca", "digits": "0012"},
            "topology": "H",
            "shell": {"thickness": 0.05},
            "wake": {"length": 2.0, "half_angle_deg": 3.0, "columns": 8},
            "sizing": {"h_wall": 0.08, "h_far": 0.4},
            "order": 3,
            "split": {"n": 5, "ratio": 2.0, "wake_ratio_te": 2.0},
            "outer": {"min": [-2.0, -2.0], "max": [4.0, 2.0]}
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn stage_gating_stops_early() {
        let spec = naca_spec();
        let out = run(&spec, Stage::Linear).unwrap();
        assert!(out.graph.is_some());
        assert!(out.linear.is_some());
        assert!(out.curved.is_none());
        assert!(out.split.is_none());
        assert!(out.final_mesh.is_none());
    }

    #[test]
    fn full_run_produces_valid_hybrid_mesh() {
        let spec = naca_spec();
        let out = run(&spec, Stage::Final).unwrap();
        let m = out.final_mesh.unwrap();
        assert!(m.elements.iter().any(|e| e.kind == crate::linmesh::ElemKind::Tri));
        let rep = conformality_check(&m);
        assert!(rep.is_ok());
        let v = check_validity(&m).unwrap();
        assert!(v.is_valid());
    }

    #[test]
    fn invalid_topology_is_config_error() {
        let mut spec = naca_spec();
        spec.topology = "X".into();
        assert!(matches!(run(&spec, Stage::Partition), Err(Error::Config(_))));
    }
}
