use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use strake::hocurve::check_validity;
use strake::linmesh::{conformality_check, Mesh};
use strake::meshio::{atomic_write, load_runspec, quality_report, read_msh, write_msh, write_vtk};
use strake::pipeline::{run, Stage};
use strake::{Error, Result};

#[derive(Parser)]
#[command(name = "strake", about = "semi-structured high-order 2D mesh generator", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StageArg {
    Partition,
    Linear,
    Curved,
    Split,
    Final,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Stage {
        match s {
            StageArg::Partition => Stage::Partition,
            StageArg::Linear => Stage::Linear,
            StageArg::Curved => Stage::Curved,
            StageArg::Split => Stage::Split,
            StageArg::Final => Stage::Final,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Msh,
    Vtk,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the pipeline from a run spec and write per-stage artifacts
    Generate {
        runspec: PathBuf,
        #[arg(long, value_enum, default_value = "final")]
        stage: StageArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a mesh for conformality and element validity
    Validate { mesh: PathBuf },
    /// Print a JSON quality report for a mesh
    Report { mesh: PathBuf },
    /// Convert a mesh to MSH or VTK
    Export {
        mesh: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
    },
}

fn init_threads() {
    if let Ok(v) = std::env::var("STRAKE_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn write_stage_mesh(m: &Mesh, dir: &Path, stage: &str) -> Result<Vec<String>> {
    let mut files = Vec::new();
    let msh = dir.join(format!("{stage}.msh"));
    write_msh(m, &msh)?;
    files.push(format!("{stage}.msh"));
    let scaled: Vec<f64> = check_validity(m)?
        .per_element
        .iter()
        .map(|v| v.scaled)
        .collect();
    let blocks: Vec<f64> = m
        .elements
        .iter()
        .map(|e| e.block.map(|b| b as f64).unwrap_or(-1.0))
        .collect();
    let vtu = dir.join(format!("{stage}.vtu"));
    write_vtk(m, &vtu, &[("scaled_jacobian", scaled), ("block", blocks)], &[])?;
    files.push(format!("{stage}.vtu"));
    let report = quality_report(m)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Export(format!("quality report: {e}")))?;
    atomic_write(&dir.join(format!("{stage}.quality.json")), json.as_bytes())?;
    files.push(format!("{stage}.quality.json"));
    println!(
        "stage {stage}: {} nodes, {} quads, {} tris, invalid: {}",
        report.nodes, report.quads, report.tris, report.invalid
    );
    Ok(files)
}

fn cmd_generate(runspec: &Path, stage: Stage, out: &Path) -> Result<()> {
    let spec = load_runspec(runspec)?;
    let hash = {
        let bytes = std::fs::read(runspec)?;
        let mut h = Sha256::new();
        h.update(&bytes);
        format!("{:x}", h.finalize())
    };
    std::fs::create_dir_all(out)?;
    let products = run(&spec, stage)?;
    let mut artifacts: Vec<(String, Vec<String>)> = Vec::new();
    if let Some(g) = &products.graph {
        let json = serde_json::to_string_pretty(g)
            .map_err(|e| Error::Export(format!("block graph: {e}")))?;
        atomic_write(&out.join("partition.json"), json.as_bytes())?;
        println!("stage partition: {} blocks", g.blocks.len());
        artifacts.push(("partition".into(), vec!["partition.json".into()]));
    }
    for (name, m) in [
        ("linear", &products.linear),
        ("curved", &products.curved),
        ("split", &products.split),
        ("final", &products.final_mesh),
    ] {
        if let Some(m) = m {
            artifacts.push((name.into(), write_stage_mesh(m, out, name)?));
        }
    }
    let prov = serde_json::json!({
        "runspec_sha256": hash,
        "stage": stage.to_string(),
        "artifacts": artifacts.iter().map(|(s, f)| {
            serde_json::json!({"stage": s, "files": f})
        }).collect::<Vec<_>>(),
    });
    atomic_write(
        &out.join("provenance.json"),
        serde_json::to_string_pretty(&prov).unwrap().as_bytes(),
    )?;
    Ok(())
}

fn cmd_validate(mesh: &Path) -> Result<()> {
    let m = read_msh(mesh)?;
    let conf = conformality_check(&m);
    let v = check_validity(&m)?;
    println!(
        "conformality: {} interior, {} boundary, {} violations",
        conf.interior_edges,
        conf.boundary_edges,
        conf.violations.len()
    );
    println!(
        "validity: {} elements, invalid: {}, worst scaled: {:.6}",
        m.elements.len(),
        v.invalid.len(),
        v.worst_scaled
    );
    if !conf.is_ok() {
        return Err(Error::Validation(format!(
            "{} conformality violations",
            conf.violations.len()
        )));
    }
    if !v.is_valid() {
        return Err(Error::Validation(format!(
            "{} invalid elements (first: element {})",
            v.invalid.len(),
            v.invalid[0]
        )));
    }
    Ok(())
}

fn cmd_report(mesh: &Path) -> Result<()> {
    let m = read_msh(mesh)?;
    let report = quality_report(&m)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}

fn cmd_export(mesh: &Path, format: Format) -> Result<()> {
    let m = read_msh(mesh)?;
    match format {
        Format::Msh => {
            let out = mesh.with_extension("out.msh");
            write_msh(&m, &out)?;
            println!("wrote {}", out.display());
        }
        Format::Vtk => {
            let out = mesh.with_extension("vtu");
            write_vtk(&m, &out, &[], &[])?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() {
    init_threads();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Generate { runspec, stage, out } => cmd_generate(runspec, (*stage).into(), out),
        Cmd::Validate { mesh } => cmd_validate(mesh),
        Cmd::Report { mesh } => cmd_report(mesh),
        Cmd::Export { mesh, format } => cmd_export(mesh, *format),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
