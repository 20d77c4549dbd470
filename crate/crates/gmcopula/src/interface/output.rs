//! On-disk formats: fit records as versioned JSON, curves and tables as
//! flat CSV. Floats are written in shortest round-trip form, so re-reading
//! a file reproduces the exact in-memory values.

use crate::dependence::{CurveSource, DependenceCurve, PrecisionEntry};
use crate::error::{Error, Result};
use crate::inference::{ComparisonRow, FitResult};
use crate::model::{CopulaSample, MixtureParameters, ThetaCandidate};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Version stamp embedded in every fit record; re-loading rejects files
/// written under a different schema.
pub const FIT_SCHEMA_VERSION: u32 = 1;

/// A fitted model in natural coordinates plus its fit summary. Wall-clock
/// time is deliberately not stored, so identical runs write identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub schema_version: u32,
    pub k: usize,
    pub d: usize,
    pub exchangeable: bool,
    pub seed: u64,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub scales: Vec<Vec<f64>>,
    pub corr_offdiag: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub n_params: usize,
    pub converged: bool,
    pub evaluations: usize,
    pub reduced: bool,
}

impl FitRecord {
    pub fn from_fit(fit: &FitResult, exchangeable: bool, seed: u64) -> Self {
        let theta = &fit.theta_hat;
        let k = theta.components();
        Self {
            schema_version: FIT_SCHEMA_VERSION,
            k,
            d: theta.dim(),
            exchangeable,
            seed,
            weights: theta.weights().to_vec(),
            means: (0..k).map(|j| theta.mean(j).to_vec()).collect(),
            scales: (0..k).map(|j| theta.scales(j).to_vec()).collect(),
            corr_offdiag: (0..k)
                .map(|j| theta.correlation(j).offdiag().to_vec())
                .collect(),
            log_likelihood: fit.log_likelihood,
            aic: fit.aic,
            n_params: fit.n_params,
            converged: fit.converged,
            evaluations: fit.evaluations,
            reduced: fit.reduced,
        }
    }

    /// Revalidates the stored coordinates as a full parameter vector.
    pub fn theta(&self) -> Result<MixtureParameters> {
        ThetaCandidate {
            weights: self.weights.clone(),
            means: self.means.clone(),
            scales: self.scales.clone(),
            corr_offdiag: self.corr_offdiag.clone(),
        }
        .validate()
        .map_err(|violation| Error::Constraint(violation.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("cannot encode fit record: {e}")))?;
        text.push('\n');
        write_text(path, &text)
    }

    /// Loads a record, checking the schema version and that the stored
    /// parameters still satisfy every model constraint.
    pub fn load(path: &Path) -> Result<(Self, MixtureParameters)> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let record: FitRecord = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: malformed fit record: {e}", path.display())))?;
        if record.schema_version != FIT_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "{}: fit record schema {} is not the supported {}",
                path.display(),
                record.schema_version,
                FIT_SCHEMA_VERSION
            )));
        }
        let theta = record.theta()?;
        Ok((record, theta))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn push_opt(line: &mut String, value: Option<f64>) {
    if let Some(v) = value {
        let _ = write!(line, "{v}");
    }
}

/// Writes a curve as CSV. The first six columns are the plotting payload;
/// `excluded` (dropped bootstrap replicates per level) and `low_replicates`
/// are carried so a re-read reproduces the curve exactly.
pub fn write_curve_csv(path: &Path, curve: &DependenceCurve) -> Result<()> {
    let mut text =
        String::from("r,estimate,band_lo,band_hi,source,defined,excluded,low_replicates\n");
    let low = u8::from(curve.low_replicates);
    for (i, &r) in curve.levels.iter().enumerate() {
        let _ = write!(text, "{r},");
        push_opt(&mut text, curve.estimates[i]);
        text.push(',');
        push_opt(&mut text, curve.band_lo[i]);
        text.push(',');
        push_opt(&mut text, curve.band_hi[i]);
        let _ = writeln!(
            text,
            ",{},{},{},{low}",
            curve.source.label(),
            u8::from(curve.estimates[i].is_some()),
            curve.excluded[i]
        );
    }
    write_text(path, &text)
}

fn parse_cell<T: std::str::FromStr>(cell: &str, row: usize, column: usize) -> Result<T> {
    cell.parse().map_err(|_| Error::Parse {
        row,
        column,
        message: format!("cannot parse {cell:?}"),
    })
}

fn parse_opt(cell: &str, row: usize, column: usize) -> Result<Option<f64>> {
    if cell.is_empty() {
        Ok(None)
    } else {
        parse_cell(cell, row, column).map(Some)
    }
}

/// Reads a curve written by [`write_curve_csv`].
pub fn read_curve_csv(path: &Path) -> Result<DependenceCurve> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("empty curve file".into()))?;
    if header.split(',').count() != 8 {
        return Err(Error::Data(format!("unexpected curve header {header:?}")));
    }
    let mut levels = Vec::new();
    let mut estimates = Vec::new();
    let mut band_lo = Vec::new();
    let mut band_hi = Vec::new();
    let mut excluded = Vec::new();
    let mut source = None;
    let mut low_replicates = false;
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 8 {
            return Err(Error::Parse {
                row,
                column: cells.len().min(8),
                message: format!("expected 8 cells, found {}", cells.len()),
            });
        }
        levels.push(parse_cell(cells[0], row, 1)?);
        let estimate = parse_opt(cells[1], row, 2)?;
        estimates.push(estimate);
        band_lo.push(parse_opt(cells[2], row, 3)?);
        band_hi.push(parse_opt(cells[3], row, 4)?);
        let here = match cells[4] {
            "model" => CurveSource::Model,
            "empirical" => CurveSource::Empirical,
            "true" => CurveSource::True,
            other => {
                return Err(Error::Parse {
                    row,
                    column: 5,
                    message: format!("unknown curve source {other:?}"),
                })
            }
        };
        if *source.get_or_insert(here) != here {
            return Err(Error::Data("mixed curve sources in one file".into()));
        }
        let defined: u8 = parse_cell(cells[5], row, 6)?;
        if (defined == 1) != estimate.is_some() {
            return Err(Error::Data(format!(
                "defined flag contradicts the estimate cell at row {row}"
            )));
        }
        excluded.push(parse_cell(cells[6], row, 7)?);
        low_replicates = parse_cell::<u8>(cells[7], row, 8)? == 1;
    }
    let source = source.ok_or_else(|| Error::Data("curve file has no data rows".into()))?;
    let mut curve = DependenceCurve::new(levels, estimates, source)?;
    curve.band_lo = band_lo;
    curve.band_hi = band_hi;
    curve.excluded = excluded;
    curve.low_replicates = low_replicates;
    Ok(curve)
}

/// Writes the model-comparison table: one row per fitted component count,
/// AIC-ascending, with AIC differences against the k = 1 fit when present.
pub fn write_comparison_csv(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut text = String::from("k,n_params,loglik,aic,delta_vs_k1\n");
    for row in rows {
        let _ = write!(
            text,
            "{},{},{},{},",
            row.k, row.n_params, row.log_likelihood, row.aic
        );
        push_opt(&mut text, row.delta_vs_k1);
        text.push('\n');
    }
    write_text(path, &text)
}

/// Writes a copula sample as CSV with `u1..ud` headers, suitable for
/// feeding straight back into the fitting pipeline.
pub fn write_sample_csv(path: &Path, sample: &CopulaSample) -> Result<()> {
    let names: Vec<String> = (1..=sample.dim()).map(|i| format!("u{i}")).collect();
    let mut text = names.join(",");
    text.push('\n');
    for t in 0..sample.rows() {
        let row = sample.row(t);
        for (i, u) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            let _ = write!(text, "{u}");
        }
        text.push('\n');
    }
    write_text(path, &text)
}

/// One joint-extreme-region probability row: ray position, level, and the
/// model and empirical estimates (empty when undefined).
pub struct AwRow {
    pub u_e: f64,
    pub w: f64,
    pub model: Option<f64>,
    pub empirical: Option<f64>,
}

pub fn write_aw_csv(path: &Path, rows: &[AwRow]) -> Result<()> {
    let mut text = String::from("ue,w,model,empirical\n");
    for row in rows {
        let _ = write!(text, "{},{},", row.u_e, row.w);
        push_opt(&mut text, row.model);
        text.push(',');
        push_opt(&mut text, row.empirical);
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn write_precision_csv(path: &Path, entries: &[PrecisionEntry]) -> Result<()> {
    let mut text = String::from("component,i,j,value,near_zero\n");
    for e in entries {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            e.component,
            e.i,
            e.j,
            e.value,
            u8::from(e.near_zero)
        );
    }
    write_text(path, &text)
}
