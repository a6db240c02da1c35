//! Result-file writers: JSON run records and loss-free CSV plot data.

use std::io::Write;
use std::path::{Path, PathBuf};

use ddcm::bench::ErrorGrid;
use ddcm::dataset::Dataset;
use ddcm::solvers::{RunRecord, SolverKind};
use ddcm::structure::Structure;

use crate::CliError;

pub fn kind_slug(kind: SolverKind) -> &'static str {
    match kind {
        SolverKind::Adm => "adm",
        SolverKind::GoAdm => "go_adm",
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(&format!("cannot create {}", dir.display()), e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::io(&format!("cannot create {}", path.display()), e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Config(format!("cannot serialize {}: {e}", path.display())))?;
    w.write_all(b"\n")
        .map_err(|e| CliError::io("write failed", e))
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| CliError::io(&format!("cannot create {}", path.display()), e))
}

/// Writes the run record and the four plot-data CSV files for one solver
/// run. Returns the written file paths.
pub fn write_run_outputs(
    dir: &Path,
    kind: SolverKind,
    structure: &Structure,
    dataset: &Dataset,
    record: &RunRecord,
) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let slug = kind_slug(kind);
    let mut written = Vec::new();

    let record_path = dir.join(format!("run_record_{slug}.json"));
    write_json(&record_path, record)?;
    written.push(record_path);

    let objective_path = dir.join(format!("objective_{slug}.csv"));
    {
        let mut w = create(&objective_path)?;
        let io = |e| CliError::io("write failed", e);
        writeln!(
            w,
            "step,load_factor,objective,newton_iterations,adm_iterations,searches,improved,wall_seconds"
        )
        .map_err(io)?;
        for (j, s) in record.steps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                j,
                s.load_factor,
                s.objective,
                s.newton_iterations,
                s.adm_iterations,
                s.searches,
                s.improved,
                s.wall_seconds
            )
            .map_err(io)?;
        }
    }
    written.push(objective_path);

    let Some(last) = record.steps.last() else {
        return Ok(written);
    };

    let deformed_path = dir.join(format!("deformed_{slug}.csv"));
    {
        let mut w = create(&deformed_path)?;
        let io = |e| CliError::io("write failed", e);
        writeln!(w, "node,x0,y0,ux,uy,x,y").map_err(io)?;
        let dim = structure.dim();
        for node in 0..structure.n_nodes() {
            let x0 = structure.node(node)[0];
            let y0 = if dim > 1 { structure.node(node)[1] } else { 0.0 };
            let ux = last.state.u[node * dim];
            let uy = if dim > 1 {
                last.state.u[node * dim + 1]
            } else {
                0.0
            };
            writeln!(
                w,
                "{node},{x0},{y0},{ux},{uy},{},{}",
                x0 + ux,
                y0 + uy
            )
            .map_err(io)?;
        }
    }
    written.push(deformed_path);

    let stresses_path = dir.join(format!("stresses_{slug}.csv"));
    {
        let mut w = create(&stresses_path)?;
        let io = |e| CliError::io("write failed", e);
        writeln!(
            w,
            "element,strain,stress,assigned_index,assigned_strain,assigned_stress"
        )
        .map_err(io)?;
        for e in 0..structure.n_elements() {
            let j = last.assignment.index(e);
            let p = dataset.point(j);
            writeln!(
                w,
                "{e},{},{},{j},{},{}",
                last.state.e[e], last.state.s[e], p.strain, p.stress
            )
            .map_err(io)?;
        }
    }
    written.push(stresses_path);

    let overlay_path = dir.join(format!("data_overlay_{slug}.csv"));
    {
        let mut w = create(&overlay_path)?;
        let io = |e| CliError::io("write failed", e);
        writeln!(w, "index,strain,stress,assigned_elements").map_err(io)?;
        let mut counts = vec![0usize; dataset.len()];
        for &j in last.assignment.indices() {
            counts[j] += 1;
        }
        for (j, p) in dataset.points().iter().enumerate() {
            writeln!(w, "{j},{},{},{}", p.strain, p.stress, counts[j]).map_err(io)?;
        }
    }
    written.push(overlay_path);

    Ok(written)
}

/// Error grid as CSV: one row per mesh, one column per dataset size.
pub fn write_error_grid(path: &Path, grid: &ErrorGrid) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io("write failed", e);
    let header: Vec<String> = grid.n_data.iter().map(|d| format!("data_{d}")).collect();
    writeln!(w, "n_elements,{}", header.join(",")).map_err(io)?;
    for (i, row) in grid.errors.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
        writeln!(w, "{},{}", grid.n_elements[i], cells.join(",")).map_err(io)?;
    }
    Ok(())
}
