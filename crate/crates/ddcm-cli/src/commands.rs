//! Implementations of the five subcommands.

use std::ops::Range;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use ddcm::assembly::SolverConfig;
use ddcm::bench::{convergence_grid, BenchError};
use ddcm::cyclic::{rope_pipeline, synthetic_cyclic, CyclicRow, CyclicSpec, RopeError};
use ddcm::dataset::{
    add_noise, generate_linear, generate_sigmoid, make_unsymmetric, repair_with_originals,
    DataPoint, Dataset, GeneratorLaw, Provenance,
};
use ddcm::oracle::{enumerate_global, OracleError, OracleStart};
use ddcm::solvers::{solve_structure, InitMode, SolverKind};
use ddcm::structure::{BenchmarkSpec, StrainMeasure};

use crate::config::ExperimentConfig;
use crate::output::{ensure_dir, kind_slug, write_error_grid, write_json, write_run_outputs};
use crate::CliError;

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SolverArg {
    Adm,
    #[value(name = "go-adm")]
    GoAdm,
}

impl From<SolverArg> for SolverKind {
    fn from(arg: SolverArg) -> Self {
        match arg {
            SolverArg::Adm => SolverKind::Adm,
            SolverArg::GoAdm => SolverKind::GoAdm,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum InitArg {
    Random,
    StressFree,
    StructureSpecific,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum LawArg {
    Linear,
    Sigmoid,
}

fn apply_overrides(
    config: &mut SolverConfig,
    alpha: Option<u8>,
    steps: Option<usize>,
    kmax: Option<usize>,
    init: Option<InitArg>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    if let Some(alpha) = alpha {
        config.strain = StrainMeasure::from_alpha(alpha)
            .ok_or_else(|| CliError::Config(format!("alpha must be 0 or 1, got {alpha}")))?;
    }
    if let Some(steps) = steps {
        if steps == 0 {
            return Err(CliError::Config("steps must be at least 1".into()));
        }
        let target = config.load_factors.last().copied().unwrap_or(1.0);
        config.load_factors = (1..=steps)
            .map(|j| target * j as f64 / steps as f64)
            .collect();
    }
    if let Some(kmax) = kmax {
        config.k_max = kmax;
    }
    match init {
        Some(InitArg::Random) => {
            config.init = InitMode::Random {
                seed: seed.unwrap_or(0),
            }
        }
        Some(InitArg::StressFree) => config.init = InitMode::StressFree,
        Some(InitArg::StructureSpecific) => config.init = InitMode::StructureSpecific,
        None => {
            if let (Some(seed), InitMode::Random { .. }) = (seed, config.init) {
                config.init = InitMode::Random { seed };
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// generate

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Constitutive law of the generator.
    #[arg(long, value_enum, default_value = "linear")]
    pub law: LawArg,
    /// Young's modulus (Pa) for the linear law.
    #[arg(long, default_value_t = 70e9)]
    pub modulus: f64,
    /// Stress asymptote (Pa) for the sigmoid law.
    #[arg(long, default_value_t = 5e8)]
    pub s_max: f64,
    #[arg(long, default_value_t = 65)]
    pub points: usize,
    #[arg(long, default_value_t = 0.1)]
    pub strain_max: f64,
    /// Fraction of points on the positive-strain branch (unsymmetric
    /// distribution); symmetric when omitted.
    #[arg(long)]
    pub unsymmetric: Option<f64>,
    /// Gaussian noise standard deviation in normalized coordinates.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep noisy points that violate the consistency check instead of
    /// replacing them by their originals.
    #[arg(long)]
    pub no_repair: bool,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let law = match args.law {
        LawArg::Linear => GeneratorLaw::Linear {
            e_modulus: args.modulus,
        },
        LawArg::Sigmoid => GeneratorLaw::Sigmoid { s_max: args.s_max },
    };
    let clean = match args.unsymmetric {
        Some(fraction) => make_unsymmetric(law, args.points, args.strain_max, fraction),
        None => match law {
            GeneratorLaw::Linear { e_modulus } => {
                generate_linear(e_modulus, args.points, args.strain_max)
            }
            GeneratorLaw::Sigmoid { s_max } => {
                generate_sigmoid(s_max, args.points, args.strain_max)
            }
        },
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let dataset = match args.noise {
        None => clean,
        Some(sigma) => {
            let noisy = add_noise(&clean, sigma, args.seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            if args.no_repair {
                noisy
            } else {
                repair_with_originals(&noisy, &clean)
                    .map_err(|e| CliError::Config(e.to_string()))?
            }
        }
    };
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    dataset
        .write_csv_file(&args.out)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let report = dataset.check_consistency();
    println!(
        "wrote {} points to {} (consistent: {})",
        dataset.len(),
        args.out.display(),
        report.consistent
    );
    Ok(())
}

// ---------------------------------------------------------------------
// solve

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Experiment config (JSON); see docs/file_formats.md.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Run a single strategy; both when omitted (and the config names none).
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    #[arg(long)]
    pub alpha: Option<u8>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn solve(args: &SolveArgs) -> Result<(), CliError> {
    let experiment = ExperimentConfig::from_file(&args.config)?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let structure = experiment.structure.build(&base)?;
    let dataset = experiment.dataset.build(&base)?;
    let mut config = experiment.solver.to_config()?;
    apply_overrides(
        &mut config,
        args.alpha,
        args.steps,
        args.kmax,
        args.init,
        args.seed,
    )?;

    let kinds: Vec<SolverKind> = match args.solver.map(SolverKind::from).or(experiment.kind) {
        Some(kind) => vec![kind],
        None => vec![SolverKind::Adm, SolverKind::GoAdm],
    };

    let mut failed = Vec::new();
    for kind in kinds {
        let record = solve_structure(&structure, &dataset, &config, kind)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        write_run_outputs(&args.out, kind, &structure, &dataset, &record)?;
        match (&record.failure, record.final_objective()) {
            (None, Some(objective)) => println!(
                "{}: {} steps, final objective {objective:.12e}",
                kind_slug(kind),
                record.steps.len()
            ),
            _ => {
                let message = record
                    .failure
                    .as_ref()
                    .map(|f| format!("step {}: {}", f.step, f.message))
                    .unwrap_or_else(|| "no load steps".into());
                println!("{}: FAILED ({message}); partial record saved", kind_slug(kind));
                failed.push(format!("{}: {message}", kind_slug(kind)));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(failed.join("; ")))
    }
}

// ---------------------------------------------------------------------
// converge

/// Shipped study grid for the linear strain measure: the error decreases
/// along both axes on this grid.
pub const CONVERGE_ALPHA0_MESHES: &[usize] = &[2, 4, 8, 16];
pub const CONVERGE_ALPHA0_DATA: &[usize] = &[9, 17, 129, 257];
pub const CONVERGE_ALPHA0_RANGE: f64 = 1.2;
pub const CONVERGE_ALPHA0_STEPS: usize = 1;

/// Shipped study grid for the nonlinear strain measure: the error
/// plateaus across mesh refinement at fixed data.
pub const CONVERGE_ALPHA1_MESHES: &[usize] = &[8, 16, 32];
pub const CONVERGE_ALPHA1_DATA: &[usize] = &[65];
pub const CONVERGE_ALPHA1_RANGE: f64 = 1.5;
pub const CONVERGE_ALPHA1_STEPS: usize = 10;

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[arg(long, default_value_t = 0)]
    pub alpha: u8,
    #[arg(long, value_enum, default_value = "adm")]
    pub solver: SolverArg,
    /// Mesh sizes (element counts), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub meshes: Option<Vec<usize>>,
    /// Dataset sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub data: Option<Vec<usize>>,
    /// Dataset strain range as a multiple of the largest reference strain.
    #[arg(long)]
    pub range_factor: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn converge(args: &ConvergeArgs) -> Result<(), CliError> {
    let strain = StrainMeasure::from_alpha(args.alpha)
        .ok_or_else(|| CliError::Config(format!("alpha must be 0 or 1, got {}", args.alpha)))?;
    let (def_meshes, def_data, def_range, def_steps) = match strain {
        StrainMeasure::Linear => (
            CONVERGE_ALPHA0_MESHES,
            CONVERGE_ALPHA0_DATA,
            CONVERGE_ALPHA0_RANGE,
            CONVERGE_ALPHA0_STEPS,
        ),
        StrainMeasure::Nonlinear => (
            CONVERGE_ALPHA1_MESHES,
            CONVERGE_ALPHA1_DATA,
            CONVERGE_ALPHA1_RANGE,
            CONVERGE_ALPHA1_STEPS,
        ),
    };
    let meshes = args.meshes.clone().unwrap_or_else(|| def_meshes.to_vec());
    let data = args.data.clone().unwrap_or_else(|| def_data.to_vec());
    let range_factor = args.range_factor.unwrap_or(def_range);
    let steps = args.steps.unwrap_or(def_steps);

    let spec = BenchmarkSpec::aluminum_bar(strain);
    let config = SolverConfig {
        strain,
        ..SolverConfig::default()
    }
    .with_steps(steps);
    let kind = SolverKind::from(args.solver);
    let grid = convergence_grid(&spec, &meshes, &data, &config, kind, range_factor).map_err(
        |e| match e {
            BenchError::Solver(inner) => CliError::Solver(inner.to_string()),
            BenchError::StepFailed { .. } => CliError::Solver(e.to_string()),
            other => CliError::Config(other.to_string()),
        },
    )?;

    ensure_dir(&args.out)?;
    let slug = kind_slug(kind);
    let csv_path = args
        .out
        .join(format!("error_grid_alpha{}_{slug}.csv", args.alpha));
    write_error_grid(&csv_path, &grid)?;
    write_json(
        &args
            .out
            .join(format!("error_grid_alpha{}_{slug}.json", args.alpha)),
        &grid,
    )?;

    println!("relative L2 displacement errors ({slug}, alpha={}):", args.alpha);
    print!("{:>10}", "elems\\data");
    for d in &grid.n_data {
        print!("{d:>12}");
    }
    println!();
    for (i, row) in grid.errors.iter().enumerate() {
        print!("{:>10}", grid.n_elements[i]);
        for e in row {
            print!("{e:>12.4e}");
        }
        println!();
    }
    match strain {
        StrainMeasure::Linear => println!(
            "non-increasing along both axes: {}",
            grid.is_monotone_nonincreasing()
        ),
        StrainMeasure::Nonlinear => println!(
            "largest error variation across meshes at fixed data: {:.1}%",
            100.0 * grid.mesh_variation()
        ),
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

// ---------------------------------------------------------------------
// rope

#[derive(Args, Debug)]
pub struct RopeArgs {
    /// Combined test log CSV with time,force,strain columns.
    #[arg(long, conflicts_with = "synthetic")]
    pub csv: Option<PathBuf>,
    /// Loading log CSV (time,force), paired with --strain-csv.
    #[arg(long, conflicts_with_all = ["csv", "synthetic"], requires = "strain_csv")]
    pub loading_csv: Option<PathBuf>,
    /// Strain log CSV (time,strain), paired with --loading-csv.
    #[arg(long)]
    pub strain_csv: Option<PathBuf>,
    /// Use the shipped synthetic cyclic series instead of input files.
    #[arg(long)]
    pub synthetic: bool,
    /// Row ranges of the three phases, e.g. 0:40,40:80,80:120.
    #[arg(long)]
    pub splits: Option<String>,
    /// Rope length (m).
    #[arg(long, default_value_t = 17.010)]
    pub length: f64,
    #[arg(long, default_value_t = 16)]
    pub elements: usize,
    /// Cross-section area (m^2) converting force to stress.
    #[arg(long)]
    pub area: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub alpha: u8,
    #[arg(long, value_enum, default_value = "adm")]
    pub solver: SolverArg,
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Proceed even when a phase dataset fails the consistency check.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_splits(text: &str, n_rows: usize) -> Result<Vec<Range<usize>>, CliError> {
    let mut ranges = Vec::new();
    for part in text.split(',') {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("bad split {part:?}; expected start:end")))?;
        let start: usize = a
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad split start {a:?}")))?;
        let end: usize = b
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad split end {b:?}")))?;
        if start >= end || end > n_rows {
            return Err(CliError::Config(format!(
                "split {start}:{end} out of range for {n_rows} rows"
            )));
        }
        if let Some(prev) = ranges.last() {
            let prev: &Range<usize> = prev;
            if start < prev.end {
                return Err(CliError::Config(
                    "splits must be ordered and disjoint".into(),
                ));
            }
        }
        ranges.push(start..end);
    }
    if ranges.is_empty() {
        return Err(CliError::Config("at least one split is required".into()));
    }
    Ok(ranges)
}

fn read_csv_columns(
    path: &Path,
    wanted: &[&str],
) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Config(e.to_string()))?
        .clone();
    let mut indices = Vec::with_capacity(wanted.len());
    for name in wanted {
        let idx = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| CliError::Config(format!("{} lacks a {name:?} column", path.display())))?;
        indices.push(idx);
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("row {}: {e}", i + 2)))?;
        let mut row = Vec::with_capacity(indices.len());
        for &idx in &indices {
            let cell = record
                .get(idx)
                .ok_or_else(|| CliError::Config(format!("row {}: missing column", i + 2)))?;
            row.push(cell.parse::<f64>().map_err(|_| {
                CliError::Config(format!("row {}: non-numeric cell {cell:?}", i + 2))
            })?);
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn rope(args: &RopeArgs) -> Result<(), CliError> {
    ensure_dir(&args.out)?;
    let (rows, splits, area): (Vec<CyclicRow>, Vec<Range<usize>>, f64) = if args.synthetic {
        let spec = CyclicSpec {
            area: args.area.unwrap_or(CyclicSpec::default().area),
            ..CyclicSpec::default()
        };
        let series = synthetic_cyclic(&spec);
        let path = args.out.join("synthetic_series.csv");
        let file = std::fs::File::create(&path)
            .map_err(|e| CliError::io(&format!("cannot create {}", path.display()), e))?;
        series
            .write_csv(std::io::BufWriter::new(file))
            .map_err(|e| CliError::io("write failed", e))?;
        println!("wrote {}", path.display());
        let splits = series.splits.to_vec();
        (series.rows, splits, spec.area)
    } else {
        let area = args.area.ok_or_else(|| {
            CliError::Config("an --area is required to convert force to stress".into())
        })?;
        let rows: Vec<CyclicRow> = if let Some(combined) = &args.csv {
            read_csv_columns(combined, &["time", "force", "strain"])?
                .into_iter()
                .map(|r| CyclicRow {
                    time: r[0],
                    force: r[1],
                    strain: r[2],
                })
                .collect()
        } else if let (Some(loading), Some(strain)) = (&args.loading_csv, &args.strain_csv) {
            let load_rows = read_csv_columns(loading, &["time", "force"])?;
            let strain_rows = read_csv_columns(strain, &["time", "strain"])?;
            if load_rows.len() != strain_rows.len() {
                return Err(CliError::Config(format!(
                    "loading log has {} rows but strain log has {}",
                    load_rows.len(),
                    strain_rows.len()
                )));
            }
            load_rows
                .into_iter()
                .zip(strain_rows)
                .map(|(l, s)| CyclicRow {
                    time: l[0],
                    force: l[1],
                    strain: s[1],
                })
                .collect()
        } else {
            return Err(CliError::Config(
                "provide --csv, --loading-csv with --strain-csv, or --synthetic".into(),
            ));
        };
        let splits_text = args.splits.as_ref().ok_or_else(|| {
            CliError::Config("--splits is required with input files".into())
        })?;
        let splits = parse_splits(splits_text, rows.len())?;
        (rows, splits, area)
    };

    let mut phases: Vec<(Dataset, Vec<f64>)> = Vec::with_capacity(splits.len());
    for (phase, range) in splits.iter().enumerate() {
        let points: Vec<DataPoint> = rows[range.clone()]
            .iter()
            .map(|r| DataPoint::new(r.strain, r.force / area))
            .collect();
        let dataset = Dataset::new(
            points,
            Provenance::Custom {
                label: format!("cyclic phase {phase}"),
            },
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        let forces = rows[range.clone()].iter().map(|r| r.force).collect();
        phases.push((dataset, forces));
    }

    let mut config = SolverConfig::default();
    apply_overrides(&mut config, Some(args.alpha), None, args.kmax, None, None)?;
    let kind = SolverKind::from(args.solver);
    let run = rope_pipeline(
        &phases,
        args.length,
        args.elements,
        area,
        &config,
        kind,
        !args.force,
    )
    .map_err(|e| match e {
        RopeError::InconsistentDataset { .. } => CliError::Config(e.to_string()),
        RopeError::Structure(_) | RopeError::Dataset(_) => CliError::Config(e.to_string()),
        other => CliError::Solver(other.to_string()),
    })?;

    let ld_path = args.out.join("load_deflection.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&ld_path)
            .map_err(|e| CliError::io(&format!("cannot create {}", ld_path.display()), e))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "phase,step,force,end_displacement")
            .map_err(|e| CliError::io("write failed", e))?;
        let mut cursor = 0usize;
        for (phase, record) in run.records.iter().enumerate() {
            for (step, _) in record.steps.iter().enumerate() {
                let (force, deflection) = run.load_deflection[cursor];
                writeln!(w, "{phase},{step},{force},{deflection}")
                    .map_err(|e| CliError::io("write failed", e))?;
                cursor += 1;
            }
        }
    }
    let obj_path = args.out.join("objectives.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&obj_path)
            .map_err(|e| CliError::io(&format!("cannot create {}", obj_path.display()), e))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "phase,step,load_factor,objective")
            .map_err(|e| CliError::io("write failed", e))?;
        for (phase, record) in run.records.iter().enumerate() {
            for (step, s) in record.steps.iter().enumerate() {
                writeln!(w, "{phase},{step},{},{}", s.load_factor, s.objective)
                    .map_err(|e| CliError::io("write failed", e))?;
            }
        }
    }
    write_json(&args.out.join("rope_records.json"), &run.records)?;

    println!(
        "{} phases, {} load steps, hysteresis loop area {:.6e}, results consistent: {}",
        run.records.len(),
        run.load_deflection.len(),
        run.loop_area().abs(),
        run.results_consistent()
    );
    println!("wrote {}", ld_path.display());
    Ok(())
}

// ---------------------------------------------------------------------
// oracle

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Largest admissible number of enumerated assignments.
    #[arg(long, default_value_t = ddcm::oracle::DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long)]
    pub alpha: Option<u8>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(serde::Serialize)]
struct SolverSummary {
    objective: f64,
    assignment: Vec<usize>,
}

#[derive(serde::Serialize)]
struct OracleComparison {
    oracle: SolverSummary,
    oracle_evaluated: u64,
    oracle_failed: u64,
    adm: SolverSummary,
    go_adm: SolverSummary,
    /// Objective agreement within 1e-12 relative; tied objectives may
    /// still carry different assignments.
    objective_ties: Ties,
    dominance_holds: bool,
}

#[derive(serde::Serialize)]
struct Ties {
    oracle_adm: bool,
    oracle_go_adm: bool,
    adm_go_adm: bool,
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let experiment = ExperimentConfig::from_file(&args.config)?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let structure = experiment.structure.build(&base)?;
    let dataset = experiment.dataset.build(&base)?;
    let mut config = experiment.solver.to_config()?;
    apply_overrides(&mut config, args.alpha, None, args.kmax, args.init, args.seed)?;

    // The oracle solves the full target load in a single shot; the
    // iterative strategies keep their configured stepping.
    let gamma = config.load_factors.last().copied().unwrap_or(1.0);
    let load = structure.loads() * gamma;
    let oracle_result = enumerate_global(
        &structure,
        &dataset,
        &config,
        &load,
        args.budget,
        OracleStart::Zero,
    )
    .map_err(|e| match e {
        OracleError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        other => CliError::Solver(other.to_string()),
    })?;

    let mut records = Vec::new();
    for kind in [SolverKind::Adm, SolverKind::GoAdm] {
        let record = solve_structure(&structure, &dataset, &config, kind)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        if let Some(f) = &record.failure {
            return Err(CliError::Solver(format!(
                "{} failed at step {}: {}",
                kind_slug(kind),
                f.step,
                f.message
            )));
        }
        records.push(record);
    }
    let adm_last = records[0].steps.last().expect("nonempty run");
    let go_last = records[1].steps.last().expect("nonempty run");

    let comparison = OracleComparison {
        oracle: SolverSummary {
            objective: oracle_result.best_objective,
            assignment: oracle_result.best_assignment.indices().to_vec(),
        },
        oracle_evaluated: oracle_result.n_evaluated,
        oracle_failed: oracle_result.n_failed,
        adm: SolverSummary {
            objective: adm_last.objective,
            assignment: adm_last.assignment.indices().to_vec(),
        },
        go_adm: SolverSummary {
            objective: go_last.objective,
            assignment: go_last.assignment.indices().to_vec(),
        },
        objective_ties: Ties {
            oracle_adm: tied(oracle_result.best_objective, adm_last.objective),
            oracle_go_adm: tied(oracle_result.best_objective, go_last.objective),
            adm_go_adm: tied(adm_last.objective, go_last.objective),
        },
        dominance_holds: oracle_result.best_objective <= go_last.objective * (1.0 + 1e-12)
            && go_last.objective <= adm_last.objective * (1.0 + 1e-12),
    };

    ensure_dir(&args.out)?;
    let path = args.out.join("oracle_comparison.json");
    write_json(&path, &comparison)?;
    println!(
        "oracle {:.12e} ({} evaluated, {} failed) | go-adm {:.12e} | adm {:.12e} | dominance: {}",
        comparison.oracle.objective,
        comparison.oracle_evaluated,
        comparison.oracle_failed,
        comparison.go_adm.objective,
        comparison.adm.objective,
        comparison.dominance_holds
    );
    println!("wrote {}", path.display());
    Ok(())
}
