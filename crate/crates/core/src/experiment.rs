//! Parameter sweeps over (L, U, tau) with deterministic outputs.
//!
//! Grid points are grouped by (L, U) so that each group shares one basis,
//! one operator assembly and one pair of endpoint decompositions across
//! its tau values. Groups run on a worker pool; results are collected into
//! the flattened deterministic point order (L outer, U middle, tau inner),
//! so the written CSV bodies are bitwise independent of scheduling.
//! Per-point failures are recorded in the manifest without aborting the
//! rest of the sweep.

use crate::basis::{half_filled_sector, SectorBasis};
use crate::error::{CoreError, Result};
use crate::hamiltonian::HubbardParams;
use crate::heatmap::HeatmapMatrix;
use crate::pipeline::{PointContext, PointDiagnostics, PointOptions, PointResult};
use crate::propagator::PropagationConfig;
use crate::thermo::ThermoRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub l_values: Vec<usize>,
    /// U/J axis shared by L = 2..6
    pub u_values: Vec<f64>,
    /// tau*J axis shared by L = 2..6
    pub tau_values: Vec<f64>,
    pub beta: f64,
    pub amplitude: f64,
    /// run L = 8 on the full axes instead of the coarse default
    pub dense_l8: bool,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            l_values: vec![4, 6, 8],
            u_values: linspace(0.0, 12.0, 49),
            tau_values: default_tau_axis(),
            beta: 0.4,
            amplitude: 10.0,
            dense_l8: false,
        }
    }
}

/// tau = 0 plus a geometric ladder from 0.2/J to 10/J.
pub fn default_tau_axis() -> Vec<f64> {
    let mut taus = vec![0.0];
    let n = 8;
    for k in 0..n {
        let t = (0.2f64.ln() + k as f64 * (10.0f64.ln() - 0.2f64.ln()) / (n - 1) as f64).exp();
        taus.push(t);
    }
    taus
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub l: usize,
    pub u: f64,
    pub tau: f64,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.l_values.is_empty() || self.u_values.is_empty() || self.tau_values.is_empty() {
            return Err(CoreError::Config("sweep grid must be non-empty".into()));
        }
        if self.l_values.iter().any(|l| *l % 2 != 0 || *l < 2) {
            return Err(CoreError::Config(
                "sweep L values must be even and >= 2 (half filling, Sz = 0)".into(),
            ));
        }
        if !(self.beta > 0.0) {
            return Err(CoreError::Config("beta must be positive".into()));
        }
        if self.u_values.iter().chain(&self.tau_values).any(|v| *v < 0.0) {
            return Err(CoreError::Config("U and tau axes must be non-negative".into()));
        }
        Ok(())
    }

    /// Per-L axes; the default L = 8 grid is coarser (12 U points over the
    /// same span, 4 tau points) unless `dense_l8` is set.
    pub fn axes_for(&self, l: usize) -> (Vec<f64>, Vec<f64>) {
        if l >= 8 && !self.dense_l8 {
            let lo = self.u_values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = self
                .u_values
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            (linspace(lo, hi, 12), vec![0.0, 0.5, 2.5, 10.0])
        } else {
            (self.u_values.clone(), self.tau_values.clone())
        }
    }

    /// Deterministic point enumeration: L outer, U middle, tau inner.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        let mut index = 0;
        for &l in &self.l_values {
            let (us, taus) = self.axes_for(l);
            for &u in &us {
                for &tau in &taus {
                    out.push(GridPoint { index, l, u, tau });
                    index += 1;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub grid: SweepGrid,
    pub propagation: PropagationConfig,
    pub point: PointOptions,
    /// worker threads for the (L, U) group pool; 0 = all cores
    pub workers: usize,
    /// write per-point distribution stem files
    pub export_distributions: bool,
    /// per-group progress lines on stderr
    pub progress: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: SweepGrid::default(),
            propagation: PropagationConfig::default(),
            point: PointOptions::default(),
            workers: 0,
            export_distributions: false,
            progress: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PointStatus {
    Ok {
        record: ThermoRecord,
        diagnostics: PointDiagnostics,
        #[serde(skip_serializing_if = "Option::is_none")]
        distribution_file: Option<String>,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub point: GridPoint,
    #[serde(flatten)]
    pub status: PointStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SweepConfig,
    pub points: Vec<ManifestEntry>,
    /// sha256 hex digests of every file written by the sweep
    pub files: BTreeMap<String, String>,
    pub failed_count: usize,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
    }
}

/// Run the sweep, writing `records.csv`, optional `dist/point_*.csv` stem
/// files, and `manifest.json` under `out_dir`.
pub fn run_sweep(cfg: &SweepConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.grid.validate()?;
    cfg.propagation.validate()?;
    std::fs::create_dir_all(out_dir)?;
    if cfg.export_distributions {
        std::fs::create_dir_all(out_dir.join("dist"))?;
    }

    let points = cfg.grid.points();
    // shared basis per L
    let mut bases: BTreeMap<usize, Arc<SectorBasis>> = BTreeMap::new();
    for &l in &cfg.grid.l_values {
        bases.insert(l, Arc::new(half_filled_sector(l)?));
    }

    // group by (l, u) preserving the deterministic order
    let mut groups: Vec<(usize, f64, Vec<GridPoint>)> = Vec::new();
    for p in &points {
        match groups.last_mut() {
            Some((l, u, v)) if *l == p.l && *u == p.u => v.push(*p),
            _ => groups.push((p.l, p.u, vec![*p])),
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CoreError::Config(format!("worker pool: {e}")))?;

    let grid = &cfg.grid;
    let group_results: Vec<Vec<(GridPoint, std::result::Result<PointResult, String>)>> =
        pool.install(|| {
            use rayon::prelude::*;
            groups
                .par_iter()
                .map(|(l, u, pts)| {
                    let params = HubbardParams {
                        l: *l,
                        j: 1.0,
                        u: *u,
                        a: grid.amplitude,
                        beta: grid.beta,
                        tau: 0.0,
                    };
                    let ctx = PointContext::build_with_basis(&params, bases[l].clone());
                    let out: Vec<(GridPoint, std::result::Result<PointResult, String>)> = match ctx
                    {
                        Ok(ctx) => pts
                            .iter()
                            .map(|p| {
                                let r = ctx
                                    .run_tau(p.tau, &cfg.propagation, &cfg.point)
                                    .map_err(|e| e.to_string());
                                (*p, r)
                            })
                            .collect(),
                        Err(e) => {
                            let msg = e.to_string();
                            pts.iter().map(|p| (*p, Err(msg.clone()))).collect()
                        }
                    };
                    if cfg.progress {
                        eprintln!("done L={l} U={u} ({} tau points)", pts.len());
                    }
                    out
                })
                .collect()
        });

    // flatten back into point order
    let mut results: Vec<Option<(GridPoint, std::result::Result<PointResult, String>)>> =
        (0..points.len()).map(|_| None).collect();
    for group in group_results {
        for (p, r) in group {
            results[p.index] = Some((p, r));
        }
    }

    let mut files: BTreeMap<String, String> = BTreeMap::new();
    let mut entries: Vec<ManifestEntry> = Vec::new();
    let mut csv = String::new();
    csv.push_str(RECORDS_HEADER);
    csv.push('\n');
    let mut failed = 0usize;

    for slot in results.into_iter() {
        let (p, r) = slot.expect("every grid point executed");
        match r {
            Ok(res) => {
                let dist_file = if cfg.export_distributions {
                    let rel = format!("dist/point_{:05}.csv", p.index);
                    let body = distribution_csv(&res);
                    write_file(out_dir, &rel, body.as_bytes(), &mut files)?;
                    Some(rel)
                } else {
                    None
                };
                append_record_row(&mut csv, &p, &res);
                entries.push(ManifestEntry {
                    point: p,
                    status: PointStatus::Ok {
                        record: res.record,
                        diagnostics: res.diagnostics,
                        distribution_file: dist_file,
                    },
                });
            }
            Err(error) => {
                failed += 1;
                entries.push(ManifestEntry {
                    point: p,
                    status: PointStatus::Failed { error },
                });
            }
        }
    }

    write_file(out_dir, "records.csv", csv.as_bytes(), &mut files)?;

    let manifest = Manifest {
        config: cfg.clone(),
        points: entries,
        files,
        failed_count: failed,
    };
    let mut f = std::fs::File::create(out_dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok(manifest)
}

/// Column order of `records.csv`. All energies in units of J; empty cells
/// mark undefined optional quantities.
pub const RECORDS_HEADER: &str = "index,L,U_over_J,tau_J,beta_J,A_over_J,mean_W_J,var_W_J2,\
skew3_W_J3,skew_std,dF_J,sigma,sigma_over_beta_J,d_eq,d_adiab,fdr_ratio,lr_gap_J,\
jarzynski_residual,retained,discarded_weight,steps,support_size,raw_pairs,min_gap_J";

fn append_record_row(csv: &mut String, p: &GridPoint, res: &PointResult) {
    let r = &res.record;
    let d = &res.diagnostics;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        p.index,
        p.l,
        p.u,
        p.tau,
        res.params.beta,
        res.params.a,
        r.mean_work,
        r.variance,
        r.skew3,
        opt(r.skew_standardized),
        r.delta_f,
        r.sigma,
        r.sigma_over_beta,
        opt(r.d_eq),
        opt(r.d_adiab),
        opt(r.fdr_ratio),
        r.lr_gap,
        r.jarzynski_residual,
        d.retained,
        d.discarded_weight,
        d.propagation.steps,
        d.support_size,
        d.raw_pair_count,
        opt(d.min_gap),
    );
}

/// Stem file body: one (W, P) line per support point.
pub fn distribution_csv(res: &PointResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "W_J,P"
    );
    for (w, p) in res.distribution.support.iter().zip(&res.distribution.probs) {
        let _ = writeln!(s, "{w},{p}");
    }
    s
}

fn write_file(
    out_dir: &Path,
    rel: &str,
    bytes: &[u8],
    files: &mut BTreeMap<String, String>,
) -> Result<()> {
    let path: PathBuf = out_dir.join(rel);
    std::fs::write(&path, bytes)?;
    let mut h = Sha256::new();
    h.update(bytes);
    files.insert(rel.to_string(), format!("{:x}", h.finalize()));
    Ok(())
}

/// Pivot one record quantity of the manifest into a (U, tau) matrix for a
/// given L. Failed or absent points stay `None`.
pub fn extract_heatmap(manifest: &Manifest, quantity: &str, l: usize) -> Result<HeatmapMatrix> {
    let (u_values, tau_values) = manifest.config.grid.axes_for(l);
    if !manifest.config.grid.l_values.contains(&l) {
        return Err(CoreError::IncompleteSweep(format!(
            "sweep did not include L = {l}"
        )));
    }
    let mut values = vec![vec![None; u_values.len()]; tau_values.len()];
    let mut seen = 0usize;
    for e in &manifest.points {
        if e.point.l != l {
            continue;
        }
        seen += 1;
        if let PointStatus::Ok { record, diagnostics, .. } = &e.status {
            let ui = u_values.iter().position(|u| *u == e.point.u);
            let ti = tau_values.iter().position(|t| *t == e.point.tau);
            if let (Some(ui), Some(ti)) = (ui, ti) {
                values[ti][ui] = record_quantity(record, diagnostics, quantity)?;
            }
        }
    }
    if seen == 0 {
        return Err(CoreError::IncompleteSweep(format!(
            "no points for L = {l} in the manifest"
        )));
    }
    Ok(HeatmapMatrix {
        quantity: quantity.to_string(),
        l,
        u_values,
        tau_values,
        values,
    })
}

/// Record fields addressable by name in heatmaps and extrema summaries.
pub const QUANTITIES: &[&str] = &[
    "mean_work",
    "variance",
    "skew3",
    "skew_std",
    "delta_f",
    "sigma",
    "sigma_over_beta",
    "d_eq",
    "d_adiab",
    "fdr_ratio",
    "lr_gap",
    "jarzynski_residual",
    "min_gap",
];

fn record_quantity(
    r: &ThermoRecord,
    d: &PointDiagnostics,
    name: &str,
) -> Result<Option<f64>> {
    Ok(match name {
        "mean_work" => Some(r.mean_work),
        "variance" => Some(r.variance),
        "skew3" => Some(r.skew3),
        "skew_std" => r.skew_standardized,
        "delta_f" => Some(r.delta_f),
        "sigma" => Some(r.sigma),
        "sigma_over_beta" => Some(r.sigma_over_beta),
        "d_eq" => r.d_eq,
        "d_adiab" => r.d_adiab,
        "fdr_ratio" => r.fdr_ratio,
        "lr_gap" => Some(r.lr_gap),
        "jarzynski_residual" => Some(r.jarzynski_residual),
        "min_gap" => d.min_gap,
        other => {
            return Err(CoreError::Config(format!(
                "unknown quantity '{other}' (expected one of {QUANTITIES:?})"
            )))
        }
    })
}

/// (U, value) series of one quantity at fixed (L, tau), for extrema scans.
pub fn u_series(
    manifest: &Manifest,
    quantity: &str,
    l: usize,
    tau: f64,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for e in &manifest.points {
        if e.point.l != l || (e.point.tau - tau).abs() > 1e-12 {
            continue;
        }
        if let PointStatus::Ok { record, diagnostics, .. } = &e.status {
            if let Some(v) = record_quantity(record, diagnostics, quantity)? {
                out.push((e.point.u, v));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}
