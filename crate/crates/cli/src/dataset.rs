//! JSON Lines datasets and point files.
//!
//! One record per line: `{"weight": w, "factors": [factor, ...]}` with
//! factor objects `{"type": "euclidean"|"positive"|"sphere"|"spd_bw",
//! "value": vector | scalar | vector | row-major matrix}`. The manifold is
//! inferred from the first record and every other record must match it.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use geomedian::linalg::{SpdMatrix, SymMatrix};
use geomedian::manifold::{FactorManifold, FactorPoint};
use geomedian::product::{ProductManifold, ProductPoint, WeightedSample};
use nalgebra::{DMatrix, DVector};

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum FactorDto {
    Euclidean(Vec<f64>),
    Positive(f64),
    Sphere(Vec<f64>),
    SpdBw(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordDto {
    pub weight: f64,
    pub factors: Vec<FactorDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointDto {
    pub factors: Vec<FactorDto>,
}

pub fn factor_to_dto(p: &FactorPoint) -> FactorDto {
    match p {
        FactorPoint::Euclidean(v) => FactorDto::Euclidean(v.iter().copied().collect()),
        FactorPoint::Positive(s) => FactorDto::Positive(*s),
        FactorPoint::Sphere(v) => FactorDto::Sphere(v.iter().copied().collect()),
        FactorPoint::Spd(m) => {
            let d = m.dim();
            let rows = (0..d)
                .map(|i| (0..d).map(|j| m.matrix()[(i, j)]).collect())
                .collect();
            FactorDto::SpdBw(rows)
        }
    }
}

pub fn dto_to_factor(dto: &FactorDto, line: Option<usize>) -> CliResult<FactorPoint> {
    match dto {
        FactorDto::Euclidean(v) => Ok(FactorPoint::Euclidean(DVector::from_column_slice(v))),
        FactorDto::Positive(s) => Ok(FactorPoint::Positive(*s)),
        FactorDto::Sphere(v) => Ok(FactorPoint::Sphere(DVector::from_column_slice(v))),
        FactorDto::SpdBw(rows) => {
            let d = rows.len();
            if d == 0 || rows.iter().any(|r| r.len() != d) {
                return Err(CliError::dataset(line, "spd_bw value must be a square matrix"));
            }
            let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
            let sym = SymMatrix::from_matrix(&m)
                .map_err(|e| CliError::dataset(line, format!("bad spd_bw matrix: {e}")))?;
            let spd = SpdMatrix::new(sym)
                .map_err(|e| CliError::dataset(line, format!("bad spd_bw matrix: {e}")))?;
            Ok(FactorPoint::Spd(spd))
        }
    }
}

/// Factor signature of a record, for manifold inference. SPD factors are
/// created without a curvature bound.
fn dto_to_manifold(dto: &FactorDto, line: Option<usize>) -> CliResult<FactorManifold> {
    let made = match dto {
        FactorDto::Euclidean(v) => FactorManifold::euclidean(v.len()),
        FactorDto::Positive(_) => Ok(FactorManifold::positive_half_line()),
        FactorDto::Sphere(v) => FactorManifold::sphere(v.len()),
        FactorDto::SpdBw(rows) => FactorManifold::spd_bures_wasserstein(rows.len()),
    };
    made.map_err(|e| CliError::dataset(line, e.to_string()))
}

/// Read a JSONL dataset, inferring the product manifold from the first
/// record. Blank lines are ignored; parse errors report the line number.
pub fn read_dataset(path: &Path) -> CliResult<(ProductManifold, WeightedSample)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::dataset(None, format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut manifold: Option<ProductManifold> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let record: RecordDto = serde_json::from_str(line)
            .map_err(|e| CliError::dataset(Some(lineno), e.to_string()))?;
        if manifold.is_none() {
            let factors = record
                .factors
                .iter()
                .map(|f| dto_to_manifold(f, Some(lineno)))
                .collect::<CliResult<Vec<_>>>()?;
            manifold = Some(
                ProductManifold::new(factors)
                    .map_err(|e| CliError::dataset(Some(lineno), e.to_string()))?,
            );
        }
        let comps = record
            .factors
            .iter()
            .map(|f| dto_to_factor(f, Some(lineno)))
            .collect::<CliResult<Vec<_>>>()?;
        let point = ProductPoint::new(comps);
        if let Some(pm) = &manifold {
            pm.validate_point(&point)
                .map_err(|e| CliError::dataset(Some(lineno), e.to_string()))?;
        }
        points.push(point);
        weights.push(record.weight);
    }
    let pm =
        manifold.ok_or_else(|| CliError::dataset(None, "dataset contains no records"))?;
    let sample = WeightedSample::new(&pm, points, weights)
        .map_err(|e| CliError::dataset(None, e.to_string()))?;
    Ok((pm, sample))
}

/// Serialize any value to JSON with every float printed at 17 significant
/// digits, guaranteeing bit-exact round trips.
pub fn to_json_17<T: Serialize>(value: &T) -> CliResult<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits17);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| CliError::internal(e.to_string()))
}

/// JSON formatter printing floats as `{:.16e}` (17 significant digits).
struct SigDigits17;

impl serde_json::ser::Formatter for SigDigits17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:e}")
    }
}

/// Write a single product point as a one-object JSON file.
pub fn write_point(path: &Path, point: &ProductPoint) -> CliResult<()> {
    let dto = PointDto {
        factors: point.components().iter().map(factor_to_dto).collect(),
    };
    let json = to_json_17(&dto)?;
    let mut f = fs::File::create(path)
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
    writeln!(f, "{json}").map_err(|e| CliError::internal(e.to_string()))
}

/// Read a point file written by `write_point`.
pub fn read_point(path: &Path) -> CliResult<ProductPoint> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::dataset(None, format!("cannot read {}: {e}", path.display())))?;
    let dto: PointDto =
        serde_json::from_str(text.trim()).map_err(|e| CliError::dataset(None, e.to_string()))?;
    let comps = dto
        .factors
        .iter()
        .map(|f| dto_to_factor(f, None))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(ProductPoint::new(comps))
}
