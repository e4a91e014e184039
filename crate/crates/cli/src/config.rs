//! Run configuration: defaults, file formats (JSON or flat key=value),
//! and the merge with command-line overrides.
//!
//! Every key has a CLI flag of the same name; flags override file values,
//! which override the defaults. All energies are in units of J, times in
//! 1/J, beta in 1/J.

use hubwork::experiment::{linspace, SweepConfig, SweepGrid};
use hubwork::pipeline::PointOptions;
use hubwork::propagator::{PropagationConfig, Scheme};
use hubwork::HubbardParams;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // single-point physics
    pub l: usize,
    pub j: f64,
    pub u: f64,
    pub a: f64,
    pub beta: f64,
    pub tau: f64,
    // propagation
    pub scheme: String,
    pub dt: f64,
    pub tol_unitary: f64,
    pub tol_observable: f64,
    pub weight_cutoff: f64,
    pub max_refinements: u32,
    pub panel_width: usize,
    // distribution / analysis
    pub merge_tol: f64,
    pub prob_floor: f64,
    pub trace_distances: bool,
    pub gap_samples: usize,
    // sweep axes
    pub l_list: Vec<usize>,
    pub u_min: f64,
    pub u_max: f64,
    pub u_points: usize,
    pub tau_list: Vec<f64>,
    pub dense_l8: bool,
    // execution / output
    pub workers: usize,
    pub export_distributions: bool,
    pub out_dir: String,
    pub verbose: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            l: 4,
            j: 1.0,
            u: 0.0,
            a: 10.0,
            beta: 0.4,
            tau: 1.0,
            scheme: "commutator-free-4th".into(),
            dt: 0.0,
            tol_unitary: 1e-10,
            tol_observable: 1e-8,
            weight_cutoff: 1e-12,
            max_refinements: 14,
            panel_width: 128,
            merge_tol: 1e-9,
            prob_floor: 1e-14,
            trace_distances: true,
            gap_samples: 0,
            l_list: vec![4, 6, 8],
            u_min: 0.0,
            u_max: 12.0,
            u_points: 49,
            tau_list: hubwork::experiment::default_tau_axis(),
            dense_l8: false,
            workers: 0,
            export_distributions: false,
            out_dir: "out".into(),
            verbose: false,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> HubbardParams {
        HubbardParams {
            l: self.l,
            j: self.j,
            u: self.u,
            a: self.a,
            beta: self.beta,
            tau: self.tau,
        }
    }

    pub fn propagation(&self) -> Result<PropagationConfig, String> {
        Ok(PropagationConfig {
            scheme: Scheme::from_str(&self.scheme).map_err(|e| e.to_string())?,
            dt: self.dt,
            tol_unitary: self.tol_unitary,
            tol_observable: self.tol_observable,
            weight_cutoff: self.weight_cutoff,
            max_refinements: self.max_refinements,
            panel_width: self.panel_width,
        })
    }

    pub fn point_options(&self) -> PointOptions {
        PointOptions {
            merge_tol: self.merge_tol,
            prob_floor: self.prob_floor,
            trace_distances: self.trace_distances,
            gap_samples: self.gap_samples,
        }
    }

    pub fn sweep(&self) -> Result<SweepConfig, String> {
        Ok(SweepConfig {
            grid: SweepGrid {
                l_values: self.l_list.clone(),
                u_values: linspace(self.u_min, self.u_max, self.u_points),
                tau_values: self.tau_list.clone(),
                beta: self.beta,
                amplitude: self.a,
                dense_l8: self.dense_l8,
            },
            propagation: self.propagation()?,
            point: self.point_options(),
            workers: self.workers,
            export_distributions: self.export_distributions,
            progress: self.verbose,
        })
    }

    /// Load a config file; `.json` files are JSON, anything else is parsed
    /// as flat `key = value` lines (`#` comments, lists comma-separated).
    pub fn from_file(path: &Path) -> Result<RunConfig, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
        } else {
            Self::from_key_values(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
    }

    pub fn from_key_values(text: &str) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(cfg)
    }

    pub fn to_key_values(&self) -> String {
        let list_f = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let list_u = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "l = {}\nj = {}\nu = {}\na = {}\nbeta = {}\ntau = {}\nscheme = {}\ndt = {}\n\
             tol_unitary = {}\ntol_observable = {}\nweight_cutoff = {}\nmax_refinements = {}\n\
             panel_width = {}\nmerge_tol = {}\nprob_floor = {}\ntrace_distances = {}\n\
             gap_samples = {}\nl_list = {}\nu_min = {}\nu_max = {}\nu_points = {}\n\
             tau_list = {}\ndense_l8 = {}\nworkers = {}\nexport_distributions = {}\n\
             out_dir = {}\nverbose = {}\n",
            self.l,
            self.j,
            self.u,
            self.a,
            self.beta,
            self.tau,
            self.scheme,
            self.dt,
            self.tol_unitary,
            self.tol_observable,
            self.weight_cutoff,
            self.max_refinements,
            self.panel_width,
            self.merge_tol,
            self.prob_floor,
            self.trace_distances,
            self.gap_samples,
            list_u(&self.l_list),
            self.u_min,
            self.u_max,
            self.u_points,
            list_f(&self.tau_list),
            self.dense_l8,
            self.workers,
            self.export_distributions,
            self.out_dir,
            self.verbose,
        )
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e| format!("'{v}': {e}"))
        }
        fn parse_list_f(v: &str) -> Result<Vec<f64>, String> {
            v.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse::<f64>(s.trim()))
                .collect()
        }
        fn parse_list_u(v: &str) -> Result<Vec<usize>, String> {
            v.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse::<usize>(s.trim()))
                .collect()
        }
        match key {
            "l" => self.l = parse(value)?,
            "j" => self.j = parse(value)?,
            "u" => self.u = parse(value)?,
            "a" => self.a = parse(value)?,
            "beta" => self.beta = parse(value)?,
            "tau" => self.tau = parse(value)?,
            "scheme" => self.scheme = value.to_string(),
            "dt" => self.dt = parse(value)?,
            "tol_unitary" => self.tol_unitary = parse(value)?,
            "tol_observable" => self.tol_observable = parse(value)?,
            "weight_cutoff" => self.weight_cutoff = parse(value)?,
            "max_refinements" => self.max_refinements = parse(value)?,
            "panel_width" => self.panel_width = parse(value)?,
            "merge_tol" => self.merge_tol = parse(value)?,
            "prob_floor" => self.prob_floor = parse(value)?,
            "trace_distances" => self.trace_distances = parse(value)?,
            "gap_samples" => self.gap_samples = parse(value)?,
            "l_list" => self.l_list = parse_list_u(value)?,
            "u_min" => self.u_min = parse(value)?,
            "u_max" => self.u_max = parse(value)?,
            "u_points" => self.u_points = parse(value)?,
            "tau_list" => self.tau_list = parse_list_f(value)?,
            "dense_l8" => self.dense_l8 = parse(value)?,
            "workers" => self.workers = parse(value)?,
            "export_distributions" => self.export_distributions = parse(value)?,
            "out_dir" => self.out_dir = value.to_string(),
            "verbose" => self.verbose = parse(value)?,
            other => return Err(format!("unknown config key '{other}'")),
        }
        Ok(())
    }
}
