//! Material datasets of stress-strain pairs: generation, transformation,
//! ingestion, and admissibility checks.
//!
//! A [`Dataset`] is an ordered, immutable collection of [`DataPoint`]s.
//! Element assignments reference points by index, so the point order is
//! part of the dataset identity. Symmetric generators build the negative
//! branch by exact floating-point negation of the positive branch, so the
//! mirror of every generated point is present bit-exactly.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the seedable PRNG used for all random dataset operations,
/// recorded in provenance so runs can be reproduced across platforms.
pub const NOISE_RNG: &str = "chacha8";

/// A single stress-strain pair. Strain is dimensionless, stress in Pa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub strain: f64,
    pub stress: f64,
}

impl DataPoint {
    pub fn new(strain: f64, stress: f64) -> Self {
        Self { strain, stress }
    }

    /// Exact floating-point mirror `(-strain, -stress)`.
    pub fn mirrored(self) -> Self {
        Self {
            strain: -self.strain,
            stress: -self.stress,
        }
    }
}

/// Constitutive law used by the dataset generators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum GeneratorLaw {
    /// `stress = e_modulus * strain`.
    Linear { e_modulus: f64 },
    /// `stress = s_max * (2 / (1 + exp(-strain)) - 1)`.
    Sigmoid { s_max: f64 },
}

impl GeneratorLaw {
    pub fn stress(&self, strain: f64) -> f64 {
        match *self {
            GeneratorLaw::Linear { e_modulus } => e_modulus * strain,
            GeneratorLaw::Sigmoid { s_max } => s_max * (2.0 / (1.0 + (-strain).exp()) - 1.0),
        }
    }
}

/// How a dataset came to be; serialized into the header of dataset files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Linear {
        e_modulus: f64,
        n_points: usize,
        strain_max: f64,
    },
    Sigmoid {
        s_max: f64,
        n_points: usize,
        strain_max: f64,
    },
    Unsymmetric {
        #[serde(flatten)]
        law: GeneratorLaw,
        n_points: usize,
        strain_max: f64,
        fraction_positive: f64,
    },
    Noisy {
        source: Box<Provenance>,
        sigma: f64,
        seed: u64,
        rng: String,
        /// Indices replaced by their pre-noise originals during repair.
        repaired: Vec<usize>,
    },
    Csv {
        path: String,
    },
    Subset {
        source: Box<Provenance>,
        start: usize,
        end: usize,
        origin_prepended: bool,
    },
    Custom {
        label: String,
    },
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset must contain at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("symmetric generators require an odd point count (origin plus mirrored pairs), got {0}")]
    EvenPointCount(usize),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("unsymmetric split {fraction} of {n_points} points leaves a branch empty")]
    EmptyBranch { fraction: f64, n_points: usize },
    #[error("point {index} is not finite: strain={strain}, stress={stress}")]
    NonFinite {
        index: usize,
        strain: f64,
        stress: f64,
    },
    #[error("subset ranges must be ordered, disjoint, and within 0..{len}: offending range {start}..{end}")]
    BadRange { start: usize, end: usize, len: usize },
    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("csv is missing required column {0:?}")]
    MissingColumn(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pairwise monotonicity report; see [`Dataset::check_consistency`].
#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// `(i, j, magnitude)` for every pair with
    /// `(stress_i - stress_j) * (strain_i - strain_j) < -tol`; magnitude is
    /// the (positive) size of the violation.
    pub violations: Vec<(usize, usize, f64)>,
    /// Tolerance actually used for the check.
    pub tolerance: f64,
}

/// An ordered, immutable collection of stress-strain pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<DataPoint>,
    provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset from raw points, rejecting empty or non-finite input.
    pub fn new(points: Vec<DataPoint>, provenance: Provenance) -> Result<Self, DatasetError> {
        if points.is_empty() {
            return Err(DatasetError::TooFewPoints {
                required: 1,
                got: 0,
            });
        }
        for (index, p) in points.iter().enumerate() {
            if !p.strain.is_finite() || !p.stress.is_finite() {
                return Err(DatasetError::NonFinite {
                    index,
                    strain: p.strain,
                    stress: p.stress,
                });
            }
        }
        Ok(Self { points, provenance })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> DataPoint {
        self.points[index]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Least-squares slope of the data through the origin,
    /// `sum(strain * stress) / sum(strain^2)`. This is the default choice
    /// for the objective weighting constant `c`.
    pub fn least_squares_slope(&self) -> Option<f64> {
        let num: f64 = self.points.iter().map(|p| p.strain * p.stress).sum();
        let den: f64 = self.points.iter().map(|p| p.strain * p.strain).sum();
        if den > 0.0 && num > 0.0 {
            Some(num / den)
        } else {
            None
        }
    }

    /// Index of the point nearest `(0, 0)` under the `c`-weighted metric.
    pub fn nearest_to_origin(&self, c: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, p) in self.points.iter().enumerate() {
            let d = 0.5 * c * p.strain * p.strain + 0.5 / c * p.stress * p.stress;
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }

    /// Index of the exact `(0, 0)` point, if present.
    pub fn origin_index(&self) -> Option<usize> {
        self.points
            .iter()
            .position(|p| p.strain == 0.0 && p.stress == 0.0)
    }

    /// Index holding the exact mirror of point `index`, if present.
    pub fn mirror_index(&self, index: usize) -> Option<usize> {
        let target = self.points[index].mirrored();
        self.points.iter().position(|p| *p == target)
    }

    /// True if for every point the exact mirror point is also present.
    pub fn is_symmetric(&self) -> bool {
        self.points
            .iter()
            .all(|p| self.points.contains(&p.mirrored()))
    }

    /// Checks pairwise monotonicity: every pair `(i, j)` must satisfy
    /// `(stress_i - stress_j) * (strain_i - strain_j) >= -tol` with
    /// `tol = 1e-12 * max|stress| * max|strain|`.
    pub fn check_consistency(&self) -> ConsistencyReport {
        check_pairs_consistency(&self.points)
    }

    /// Splits into sub-datasets along ordered, disjoint index ranges,
    /// preserving point order. With `prepend_origin`, each sub-dataset gets
    /// an artificial `(0, 0)` point at index 0.
    pub fn split_subsets(
        &self,
        ranges: &[Range<usize>],
        prepend_origin: bool,
    ) -> Result<Vec<Dataset>, DatasetError> {
        let mut cursor = 0usize;
        for r in ranges {
            if r.start < cursor || r.end <= r.start || r.end > self.points.len() {
                return Err(DatasetError::BadRange {
                    start: r.start,
                    end: r.end,
                    len: self.points.len(),
                });
            }
            cursor = r.end;
        }
        ranges
            .iter()
            .map(|r| {
                let mut points = Vec::with_capacity(r.len() + 1);
                if prepend_origin {
                    points.push(DataPoint::new(0.0, 0.0));
                }
                points.extend_from_slice(&self.points[r.clone()]);
                Dataset::new(
                    points,
                    Provenance::Subset {
                        source: Box::new(self.provenance.clone()),
                        start: r.start,
                        end: r.end,
                        origin_prepended: prepend_origin,
                    },
                )
            })
            .collect()
    }

    /// Writes the dataset as CSV with the provenance serialized into a
    /// leading `#` comment line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), DatasetError> {
        let tag = serde_json::to_string(&self.provenance)
            .map_err(|e| DatasetError::InvalidParameter(e.to_string()))?;
        writeln!(w, "# provenance: {tag}")?;
        writeln!(w, "strain,stress")?;
        for p in &self.points {
            writeln!(w, "{},{}", p.strain, p.stress)?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<(), DatasetError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Pairwise monotonicity check over arbitrary stress-strain pairs; used
/// both for datasets and for solved per-element results.
pub fn check_pairs_consistency(points: &[DataPoint]) -> ConsistencyReport {
    let max_s = points.iter().map(|p| p.stress.abs()).fold(0.0, f64::max);
    let max_e = points.iter().map(|p| p.strain.abs()).fold(0.0, f64::max);
    let tolerance = 1e-12 * max_s * max_e;
    let mut violations = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let prod =
                (points[i].stress - points[j].stress) * (points[i].strain - points[j].strain);
            if prod < -tolerance {
                violations.push((i, j, -prod));
            }
        }
    }
    ConsistencyReport {
        consistent: violations.is_empty(),
        violations,
        tolerance,
    }
}

fn require_positive(name: &str, value: f64) -> Result<(), DatasetError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(DatasetError::InvalidParameter(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

/// Symmetric grid of `n_points` strains on `[-strain_max, strain_max]`
/// with stresses from `law`. The negative branch is the exact mirror of
/// the positive branch and the origin `(0, 0)` is always present, which
/// requires an odd `n_points`.
fn generate_symmetric(
    law: GeneratorLaw,
    n_points: usize,
    strain_max: f64,
) -> Result<Vec<DataPoint>, DatasetError> {
    require_positive("strain_max", strain_max)?;
    if n_points < 3 {
        return Err(DatasetError::TooFewPoints {
            required: 3,
            got: n_points,
        });
    }
    if n_points % 2 == 0 {
        return Err(DatasetError::EvenPointCount(n_points));
    }
    let half = n_points / 2;
    let positive: Vec<DataPoint> = (1..=half)
        .map(|i| {
            let strain = strain_max * i as f64 / half as f64;
            DataPoint::new(strain, law.stress(strain))
        })
        .collect();
    let mut points: Vec<DataPoint> = positive.iter().rev().map(|p| p.mirrored()).collect();
    points.push(DataPoint::new(0.0, 0.0));
    points.extend_from_slice(&positive);
    Ok(points)
}

/// Linear-law dataset: `n_points` equally spaced strains on
/// `[-strain_max, strain_max]` with `stress = e_modulus * strain`.
pub fn generate_linear(
    e_modulus: f64,
    n_points: usize,
    strain_max: f64,
) -> Result<Dataset, DatasetError> {
    require_positive("e_modulus", e_modulus)?;
    let points = generate_symmetric(GeneratorLaw::Linear { e_modulus }, n_points, strain_max)?;
    Dataset::new(
        points,
        Provenance::Linear {
            e_modulus,
            n_points,
            strain_max,
        },
    )
}

/// Sigmoid-law dataset: `stress = s_max * (2 / (1 + exp(-strain)) - 1)`
/// sampled on the symmetric strain grid.
pub fn generate_sigmoid(
    s_max: f64,
    n_points: usize,
    strain_max: f64,
) -> Result<Dataset, DatasetError> {
    require_positive("s_max", s_max)?;
    let points = generate_symmetric(GeneratorLaw::Sigmoid { s_max }, n_points, strain_max)?;
    Dataset::new(
        points,
        Provenance::Sigmoid {
            s_max,
            n_points,
            strain_max,
        },
    )
}

/// Unsymmetric dataset: `round(fraction_positive * n_points)` points on the
/// non-negative strain branch (including the origin), the remainder on the
/// negative branch, stresses from `law`. Points are ordered by strain.
pub fn make_unsymmetric(
    law: GeneratorLaw,
    n_points: usize,
    strain_max: f64,
    fraction_positive: f64,
) -> Result<Dataset, DatasetError> {
    require_positive("strain_max", strain_max)?;
    if !(fraction_positive > 0.0 && fraction_positive < 1.0) {
        return Err(DatasetError::InvalidParameter(format!(
            "fraction_positive must lie strictly between 0 and 1, got {fraction_positive}"
        )));
    }
    if n_points < 3 {
        return Err(DatasetError::TooFewPoints {
            required: 3,
            got: n_points,
        });
    }
    let n_pos = (fraction_positive * n_points as f64).round() as usize;
    let n_neg = n_points - n_pos;
    // The positive branch holds the origin, so it needs at least two points
    // to cover positive strains at all.
    if n_pos < 2 || n_neg == 0 {
        return Err(DatasetError::EmptyBranch {
            fraction: fraction_positive,
            n_points,
        });
    }
    let mut points = Vec::with_capacity(n_points);
    // Negative branch: n_neg strains on [-strain_max, 0), excluding 0.
    for i in 0..n_neg {
        let strain = -strain_max + strain_max * i as f64 / n_neg as f64;
        points.push(DataPoint::new(strain, law.stress(strain)));
    }
    // Positive branch: n_pos strains on [0, strain_max], including both ends.
    for i in 0..n_pos {
        let strain = strain_max * i as f64 / (n_pos - 1) as f64;
        let stress = if i == 0 { 0.0 } else { law.stress(strain) };
        points.push(DataPoint::new(strain, stress));
    }
    Dataset::new(
        points,
        Provenance::Unsymmetric {
            law,
            n_points,
            strain_max,
            fraction_positive,
        },
    )
}

/// Perturbs strains and stresses with Gaussian noise `N(0, sigma^2)` in
/// coordinates normalized to `[-1, 1]` per axis, then rescales to the
/// original ranges. Deterministic for a fixed seed; `sigma = 0` returns the
/// input bit-exactly.
pub fn add_noise(dataset: &Dataset, sigma: f64, seed: u64) -> Result<Dataset, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(DatasetError::InvalidParameter(format!(
            "sigma must be non-negative and finite, got {sigma}"
        )));
    }
    let provenance = Provenance::Noisy {
        source: Box::new(dataset.provenance.clone()),
        sigma,
        seed,
        rng: NOISE_RNG.to_string(),
        repaired: Vec::new(),
    };
    if sigma == 0.0 {
        return Dataset::new(dataset.points.clone(), provenance);
    }

    let (e_min, e_max) = min_max(dataset.points.iter().map(|p| p.strain));
    let (s_min, s_max) = min_max(dataset.points.iter().map(|p| p.stress));
    let e_span = e_max - e_min;
    let s_span = s_max - s_min;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| DatasetError::InvalidParameter(e.to_string()))?;
    let points = dataset
        .points
        .iter()
        .map(|p| {
            // One strain draw then one stress draw per point, in point order.
            let de = normal.sample(&mut rng);
            let ds = normal.sample(&mut rng);
            let strain = if e_span > 0.0 {
                let norm = 2.0 * (p.strain - e_min) / e_span - 1.0 + de;
                e_min + (norm + 1.0) / 2.0 * e_span
            } else {
                p.strain
            };
            let stress = if s_span > 0.0 {
                let norm = 2.0 * (p.stress - s_min) / s_span - 1.0 + ds;
                s_min + (norm + 1.0) / 2.0 * s_span
            } else {
                p.stress
            };
            DataPoint::new(strain, stress)
        })
        .collect();
    Dataset::new(points, provenance)
}

/// Replaces every point involved in a consistency violation by its
/// pre-noise original, repeating until the dataset is consistent. The two
/// datasets must have equal length and the original must be consistent for
/// this to terminate with a consistent result.
pub fn repair_with_originals(
    noisy: &Dataset,
    original: &Dataset,
) -> Result<Dataset, DatasetError> {
    if noisy.len() != original.len() {
        return Err(DatasetError::InvalidParameter(format!(
            "repair requires equal lengths, got {} and {}",
            noisy.len(),
            original.len()
        )));
    }
    let mut points = noisy.points.clone();
    let mut repaired: Vec<usize> = Vec::new();
    for _ in 0..=points.len() {
        let work = Dataset::new(points.clone(), noisy.provenance.clone())?;
        let report = work.check_consistency();
        if report.consistent {
            break;
        }
        for (i, j, _) in &report.violations {
            for &idx in &[*i, *j] {
                if points[idx] != original.points[idx] {
                    points[idx] = original.points[idx];
                    repaired.push(idx);
                }
            }
        }
    }
    repaired.sort_unstable();
    repaired.dedup();
    let provenance = match &noisy.provenance {
        Provenance::Noisy {
            source,
            sigma,
            seed,
            rng,
            ..
        } => Provenance::Noisy {
            source: source.clone(),
            sigma: *sigma,
            seed: *seed,
            rng: rng.clone(),
            repaired,
        },
        other => other.clone(),
    };
    Dataset::new(points, provenance)
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Column mapping for CSV ingestion. Stress is either read directly or
/// derived from a force column divided by a cross-section area.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CsvColumns {
    pub strain: String,
    #[serde(default)]
    pub stress: Option<String>,
    #[serde(default)]
    pub force: Option<String>,
    /// Cross-section area (m^2) converting force (N) to stress (Pa).
    #[serde(default)]
    pub area: Option<f64>,
}

impl CsvColumns {
    pub fn strain_stress(strain: &str, stress: &str) -> Self {
        Self {
            strain: strain.to_string(),
            stress: Some(stress.to_string()),
            force: None,
            area: None,
        }
    }

    pub fn strain_force(strain: &str, force: &str, area: f64) -> Self {
        Self {
            strain: strain.to_string(),
            stress: None,
            force: Some(force.to_string()),
            area: Some(area),
        }
    }
}

/// Reads a dataset from a headered CSV file. Lines starting with `#` are
/// treated as comments; a `# provenance: {...}` line restores the stored
/// provenance.
pub fn load_csv<P: AsRef<Path>>(path: P, columns: &CsvColumns) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let mut provenance = Provenance::Csv {
        path: path.display().to_string(),
    };

    // Peek leading comment lines for stored provenance before handing the
    // text to the csv reader (which skips comments without exposing them).
    let text = std::fs::read_to_string(path)?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(json) = rest.trim().strip_prefix("provenance:") {
                if let Ok(p) = serde_json::from_str::<Provenance>(json.trim()) {
                    provenance = p;
                }
            }
        } else {
            break;
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Csv {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let strain_idx = col(&columns.strain)?;
    let (value_idx, area) = match (&columns.stress, &columns.force) {
        (Some(stress), None) => (col(stress)?, None),
        (None, Some(force)) => {
            let area = columns.area.ok_or_else(|| {
                DatasetError::InvalidParameter(
                    "a cross-section area is required to convert force to stress".into(),
                )
            })?;
            require_positive("area", area)?;
            (col(force)?, Some(area))
        }
        _ => {
            return Err(DatasetError::InvalidParameter(
                "exactly one of a stress column or a force column must be mapped".into(),
            ))
        }
    };

    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let record = record.map_err(|e| DatasetError::Csv {
            row,
            message: e.to_string(),
        })?;
        let parse = |idx: usize| -> Result<f64, DatasetError> {
            let cell = record.get(idx).ok_or_else(|| DatasetError::Csv {
                row,
                message: format!("missing column {idx}"),
            })?;
            cell.parse::<f64>().map_err(|_| DatasetError::Csv {
                row,
                message: format!("non-numeric cell {cell:?}"),
            })
        };
        let strain = parse(strain_idx)?;
        let mut stress = parse(value_idx)?;
        if let Some(area) = area {
            stress /= area;
        }
        points.push(DataPoint::new(strain, stress));
    }
    Dataset::new(points, provenance)
}
