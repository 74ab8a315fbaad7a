//! CSV tables read and written by the pipeline.

use crate::bayes::{CalibrationSeries, EvidenceData, PosteriorDraws, CALIBRATION_YEARS};
use crate::calibrate::CalibrationRun;
use crate::econ::CeaResult;
use crate::error::DataError;
use crate::model::{HealthState, ParamId, ParameterSet, Sex, Stratum, Trajectory};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const REGISTRY_FILE: &str = "registry.csv";
pub const BINOMIAL_FILE: &str = "binomial.csv";
pub const CALIBRATION_FILE: &str = "calibration.csv";

fn csv_err(path: &Path, source: csv::Error) -> DataError {
    match source.position() {
        Some(pos) if matches!(source.kind(), csv::ErrorKind::Deserialize { .. }) => {
            DataError::Schema { path: path.display().to_string(), line: pos.line(), detail: source.to_string() }
        }
        _ => DataError::Csv { path: path.display().to_string(), source },
    }
}

fn schema(path: &Path, line: u64, detail: impl Into<String>) -> DataError {
    DataError::Schema { path: path.display().to_string(), line, detail: detail.into() }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| DataError::Io { path: path.display().to_string(), source: e })
}

/// Rows with their 1-based line numbers.
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<(u64, T)>, DataError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for rec in r.deserialize::<T>() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        out.push((out.len() as u64 + 2, rec));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegistryRow {
    pub stratum: String,
    pub partners: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialRow {
    pub parameter: String,
    pub events: u64,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub sex: String,
    pub year: usize,
    pub state: String,
    pub count: f64,
}

pub fn write_evidence(dir: &Path, e: &EvidenceData) -> Result<Vec<PathBuf>, DataError> {
    let registry: Vec<RegistryRow> = Stratum::ALL
        .iter()
        .flat_map(|st| {
            e.partner_counts[st.index()].iter().map(|&c| RegistryRow { stratum: st.code().into(), partners: c })
        })
        .collect();
    let binomial: Vec<BinomialRow> = e
        .binomial
        .iter()
        .map(|(id, &(r, n))| BinomialRow { parameter: id.name().into(), events: r, trials: n })
        .collect();
    let calibration: Vec<CalibrationRow> = e
        .calibration
        .points()
        .map(|(sex, year, hs, c)| CalibrationRow { sex: sex.name().into(), year, state: hs.name().into(), count: c })
        .collect();
    let paths = [REGISTRY_FILE, BINOMIAL_FILE, CALIBRATION_FILE].map(|f| dir.join(f));
    write_rows(&paths[0], &registry)?;
    write_rows(&paths[1], &binomial)?;
    write_rows(&paths[2], &calibration)?;
    Ok(paths.to_vec())
}

pub fn read_registry(path: &Path) -> Result<[Vec<u64>; 4], DataError> {
    let mut out: [Vec<u64>; 4] = Default::default();
    for (line, row) in read_rows::<RegistryRow>(path)? {
        let st = Stratum::parse(&row.stratum).ok_or_else(|| {
            schema(path, line, format!("unknown stratum `{}` (expected MH, ML, FH or FL)", row.stratum))
        })?;
        out[st.index()].push(row.partners);
    }
    Ok(out)
}

pub fn read_binomial(path: &Path) -> Result<BTreeMap<ParamId, (u64, u64)>, DataError> {
    let mut out = BTreeMap::new();
    for (line, row) in read_rows::<BinomialRow>(path)? {
        let id = ParamId::parse(&row.parameter)
            .ok_or_else(|| schema(path, line, format!("unknown parameter `{}`", row.parameter)))?;
        if row.events > row.trials {
            return Err(schema(path, line, format!("events {} exceed trials {}", row.events, row.trials)));
        }
        if out.insert(id, (row.events, row.trials)).is_some() {
            return Err(schema(path, line, format!("duplicate parameter `{}`", row.parameter)));
        }
    }
    Ok(out)
}

pub fn read_calibration(path: &Path) -> Result<CalibrationSeries, DataError> {
    let mut out = CalibrationSeries::zeros();
    let mut seen = [[[false; 4]; CALIBRATION_YEARS]; 2];
    for (line, row) in read_rows::<CalibrationRow>(path)? {
        let sex = Sex::parse(&row.sex).ok_or_else(|| schema(path, line, format!("unknown sex `{}`", row.sex)))?;
        let hs = HealthState::parse(&row.state)
            .filter(|h| *h != HealthState::Dead)
            .ok_or_else(|| schema(path, line, format!("unknown alive state `{}`", row.state)))?;
        if !(1..=CALIBRATION_YEARS).contains(&row.year) {
            return Err(schema(path, line, format!("year {} outside 1..={CALIBRATION_YEARS}", row.year)));
        }
        if !(row.count >= 0.0 && row.count.is_finite()) {
            return Err(schema(path, line, format!("count {} is not a nonnegative number", row.count)));
        }
        let slot = &mut seen[sex.index()][row.year - 1][hs.index()];
        if *slot {
            return Err(schema(path, line, "duplicate calibration point"));
        }
        *slot = true;
        out.set(sex, row.year, hs, row.count);
    }
    if let Some((s, y, h)) = (0..2)
        .flat_map(|s| (0..CALIBRATION_YEARS).flat_map(move |y| (0..4).map(move |h| (s, y, h))))
        .find(|&(s, y, h)| !seen[s][y][h])
    {
        return Err(schema(path, 0, format!("missing point {} year {} {}", Sex::ALL[s], y + 1, HealthState::ALIVE[h])));
    }
    Ok(out)
}

pub fn read_evidence(dir: &Path) -> Result<EvidenceData, DataError> {
    Ok(EvidenceData {
        partner_counts: read_registry(&dir.join(REGISTRY_FILE))?,
        binomial: read_binomial(&dir.join(BINOMIAL_FILE))?,
        calibration: read_calibration(&dir.join(CALIBRATION_FILE))?,
    })
}

/// Yearly count of one cell of one model's trajectory, with an optional
/// posterior band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub model: String,
    pub intervention: String,
    pub year: usize,
    pub stratum: String,
    pub state: String,
    pub mean: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

pub fn trajectory_rows(model: &str, traj: &Trajectory) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for (year, s) in traj.yearly().iter().enumerate() {
        for st in Stratum::ALL {
            for hs in HealthState::ALL {
                rows.push(TrajectoryRow {
                    model: model.into(),
                    intervention: traj.intervention.name().into(),
                    year,
                    stratum: st.code().into(),
                    state: hs.name().into(),
                    mean: s.get(st, hs),
                    lower: None,
                    upper: None,
                });
            }
        }
    }
    rows
}

/// Posterior mean and 95% band for every cell of the attached trajectories.
pub fn posterior_trajectory_rows(model: &str, draws: &PosteriorDraws) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for iv in crate::model::Intervention::ALL {
        let cells: Vec<_> = Stratum::ALL
            .iter()
            .flat_map(|&st| HealthState::ALL.map(move |hs| (st, hs)))
            .map(|(st, hs)| {
                (
                    st,
                    hs,
                    draws.mean_series(iv, st, hs),
                    draws.quantile_series(iv, st, hs, 0.025),
                    draws.quantile_series(iv, st, hs, 0.975),
                )
            })
            .collect();
        let years = cells.first().map_or(0, |c| c.2.len());
        for year in 0..years {
            for (st, hs, m, lo, hi) in &cells {
                rows.push(TrajectoryRow {
                    model: model.into(),
                    intervention: iv.name().into(),
                    year,
                    stratum: st.code().into(),
                    state: hs.name().into(),
                    mean: m[year],
                    lower: Some(lo[year]),
                    upper: Some(hi[year]),
                });
            }
        }
    }
    rows
}

fn write_parameter_table<'a>(
    path: &Path,
    lead: &[&str],
    rows: impl Iterator<Item = (Vec<String>, &'a ParameterSet, Option<f64>)>,
    trailing: Option<&str>,
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header: Vec<&str> = lead.to_vec();
    header.extend(ParamId::ALL.iter().map(|p| p.name()));
    header.extend(trailing);
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (mut rec, p, extra) in rows {
        rec.extend(ParamId::ALL.iter().map(|&id| p.get(id).to_string()));
        rec.extend(extra.map(|x| x.to_string()));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| DataError::Io { path: path.display().to_string(), source: e })
}

/// One row per kept draw: chain, iteration, then every parameter.
pub fn write_posterior_draws(path: &Path, draws: &PosteriorDraws) -> Result<(), DataError> {
    let rows =
        draws.draws.iter().enumerate().map(|(i, p)| {
            (vec![(i / draws.n_keep.max(1)).to_string(), (i % draws.n_keep.max(1)).to_string()], p, None)
        });
    write_parameter_table(path, &["chain", "iteration"], rows, None)
}

/// One row per calibration sample: index, parameters, score.
pub fn write_calibration_samples(path: &Path, run: &CalibrationRun) -> Result<(), DataError> {
    let rows = run.samples.iter().zip(&run.scores).enumerate().map(|(i, (p, q))| (vec![i.to_string()], p, Some(*q)));
    write_parameter_table(path, &["index"], rows, Some("q"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CePlaneRow {
    pub draw: usize,
    pub delta_e: f64,
    pub delta_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeacRow {
    pub k: f64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvpiRow {
    pub k: f64,
    pub per_person: f64,
    pub population: f64,
}

/// Writes `ce_plane_<tag>.csv`, `ceac_<tag>.csv` and `evpi_<tag>.csv`.
pub fn write_cea(dir: &Path, tag: &str, r: &CeaResult) -> Result<Vec<PathBuf>, DataError> {
    let plane: Vec<CePlaneRow> = r
        .delta_e
        .iter()
        .zip(&r.delta_c)
        .enumerate()
        .map(|(draw, (&delta_e, &delta_c))| CePlaneRow { draw, delta_e, delta_c })
        .collect();
    let ceac: Vec<CeacRow> = r.wtp.iter().zip(&r.ceac).map(|(&k, &probability)| CeacRow { k, probability }).collect();
    let evpi: Vec<EvpiRow> =
        r.evpi.iter().map(|p| EvpiRow { k: p.k, per_person: p.per_person, population: p.population }).collect();
    let paths = ["ce_plane", "ceac", "evpi"].map(|f| dir.join(format!("{f}_{tag}.csv")));
    write_rows(&paths[0], &plane)?;
    write_rows(&paths[1], &ceac)?;
    write_rows(&paths[2], &evpi)?;
    Ok(paths.to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcerRow {
    pub model: String,
    pub icer: Option<f64>,
    pub mean_delta_c: f64,
    pub mean_delta_e: f64,
    /// Scenario or credible range, where available.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}
