//! Reference dictionary of conductivity targets, descriptor matching and
//! Monte Carlo identification experiments.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgpt_engine::{compute_cgpt, CgptMatrix, ConductivityTarget, DEFAULT_NODES};
use crate::error::{csv_error, Error, Result};
use crate::geometry::{RigidMotion, ShapeGeometry, ShapeSpec, Vec2};
use crate::invariants::{descriptors, DescriptorPair, DEFAULT_DESCRIPTOR_ORDER};
use crate::reconstruction::{average_cgpts, build_acquisition, per_order_errors, OrderDiagnostic, Reconstructor};
use crate::sensing_sim::{add_noise_with, synthesize_msr, trial_rng, AcquisitionConfig, TargetFootprint};

/// Conductivity of homogeneous entries and of the outer coating.
pub const K_HOMOGENEOUS: f64 = 2.0;
/// Conductivity of the inner phase of coated entries.
pub const K_INNER: f64 = 4.0;
/// Inner-to-outer homothety ratio of coated entries.
pub const COATING_RATIO: f64 = 0.5;
/// Default corner smoothing width relative to the shape size.
pub const CORNER_ROUNDING: f64 = 0.05;
/// Reconstruction order used by experiments.
pub const DEFAULT_ORDER: usize = 5;
/// Errors closer than this to the best one count as a tie.
pub const TIE_TOL: f64 = 1e-8;

/// Motion applied to a dictionary entry to produce the sensed target.
pub fn experiment_motion() -> RigidMotion {
    RigidMotion::new(Vec2::zeros(), PI / 3.0, 0.5).expect("valid motion")
}

fn base_shapes() -> [(&'static str, ShapeGeometry); 5] {
    [
        ("1", ShapeGeometry::Triangle { circumradius: 1.0, corner_rounding: CORNER_ROUNDING }),
        ("2", ShapeGeometry::Ellipse { a: 1.0, b: 0.5 }),
        ("3", ShapeGeometry::Bean { scale: 1.0 }),
        ("4", ShapeGeometry::Shield { scale: 1.0, corner_rounding: CORNER_ROUNDING }),
        ("5", ShapeGeometry::TriangularShield { scale: 1.0, corner_rounding: CORNER_ROUNDING }),
    ]
}

/// The ten standard entries: `Na` homogeneous with `k = 2`, `Nb` coated
/// with `k1 = 2`, `k2 = 4` and an inner homothety of ratio 0.5.
pub fn standard_specs() -> Vec<(String, ShapeSpec)> {
    let mut out = Vec::with_capacity(10);
    for (n, g) in base_shapes() {
        out.push((format!("{n}a"), ShapeSpec::homogeneous(g.clone(), K_HOMOGENEOUS)));
        out.push((format!("{n}b"), ShapeSpec::coated(g, K_HOMOGENEOUS, K_INNER, COATING_RATIO)));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub id: String,
    pub spec: ShapeSpec,
    pub cgpt: CgptMatrix,
    pub descriptors: DescriptorPair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub order: usize,
    pub n_nodes: usize,
    pub entries: Vec<DictionaryEntry>,
}

/// Computes CGPTs and descriptors of every spec at order `order`.
pub fn build_dictionary(specs: &[(String, ShapeSpec)], order: usize, n_nodes: usize) -> Result<Dictionary> {
    if order < 2 {
        return Err(Error::InvalidOrder { order, reason: "dictionary order must be at least 2" });
    }
    let mut seen = std::collections::HashSet::new();
    for (id, spec) in specs {
        if !seen.insert(id) {
            return Err(Error::InvalidConfig(format!("duplicate dictionary id '{id}'")));
        }
        spec.validate()?;
    }
    let entries = specs
        .par_iter()
        .map(|(id, spec)| {
            let target = ConductivityTarget::from_spec(id.clone(), spec, n_nodes)?;
            let cgpt = compute_cgpt(&target, order)?;
            let descriptors = descriptors(&cgpt.to_complex(), order)?;
            log::info!("dictionary entry {id}: order {order}, {n_nodes} nodes per curve");
            Ok(DictionaryEntry { id: id.clone(), spec: spec.clone(), cgpt, descriptors })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dictionary { order, n_nodes, entries })
}

/// [`build_dictionary`] over [`standard_specs`].
pub fn build_standard_dictionary(order: usize, n_nodes: usize) -> Result<Dictionary> {
    build_dictionary(&standard_specs(), order, n_nodes)
}

impl Dictionary {
    pub fn get(&self, id: &str) -> Result<&DictionaryEntry> {
        self.entries.iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownEntry(id.to_string()))
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.entries.iter().position(|e| e.id == id).ok_or_else(|| Error::UnknownEntry(id.to_string()))
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let d: Dictionary = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if d.entries.is_empty() {
            return Err(Error::InvalidConfig(format!("dictionary {} has no entries", path.display())));
        }
        Ok(d)
    }
}

/// Outcome of matching one descriptor pair against a dictionary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchResult {
    pub ids: Vec<String>,
    pub errors: Vec<f64>,
    pub best: usize,
    /// second-best error minus best error
    pub margin: f64,
    pub tie: bool,
}

impl MatchResult {
    pub fn best_id(&self) -> &str {
        &self.ids[self.best]
    }

    pub fn best_error(&self) -> f64 {
        self.errors[self.best]
    }
}

/// Picks the smallest error; among errors within [`TIE_TOL`] of it the
/// lowest id wins and the tie flag is raised.
pub fn select(ids: Vec<String>, errors: Vec<f64>) -> MatchResult {
    let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..errors.len()).filter(|&i| errors[i] - min <= TIE_TOL).collect();
    let best = *tied.iter().min_by(|a, b| ids[**a].cmp(&ids[**b])).expect("non-empty dictionary");
    let margin = (0..errors.len())
        .filter(|&i| i != best)
        .map(|i| errors[i] - errors[best])
        .fold(f64::INFINITY, f64::min);
    MatchResult { ids, errors, best, margin, tie: tied.len() > 1 }
}

/// `e_n = sqrt(‖I1(B_n) − I1(D)‖²_F + ‖I2(B_n) − I2(D)‖²_F)` at the query's order.
pub fn match_descriptors(query: &DescriptorPair, dict: &Dictionary) -> Result<MatchResult> {
    if dict.entries.is_empty() {
        return Err(Error::InvalidConfig("empty dictionary".into()));
    }
    let errors = dict
        .entries
        .iter()
        .map(|e| query.distance(&e.descriptors.truncate(query.order)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(select(dict.ids(), errors))
}

/// How a noisy run turns per-trial errors into selections.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// argmin per trial; frequencies count selections
    #[default]
    PerTrial,
    /// argmin of the errors averaged over all trials
    MeanError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub targets: Vec<String>,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub acquisition: AcquisitionConfig,
    pub order: usize,
    pub descriptor_order: usize,
    pub motion: RigidMotion,
    pub selection: SelectionRule,
    pub n_nodes: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            targets: vec!["1a".into()],
            sigmas: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            trials: 500,
            seed: 0,
            acquisition: AcquisitionConfig::default(),
            order: DEFAULT_ORDER,
            descriptor_order: DEFAULT_DESCRIPTOR_ORDER,
            motion: experiment_motion(),
            selection: SelectionRule::PerTrial,
            n_nodes: DEFAULT_NODES,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.targets.is_empty() || self.sigmas.is_empty() {
            return Err(Error::InvalidConfig("need at least one target and one noise level".into()));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig(format!("noise level {s} must be non-negative")));
        }
        if self.descriptor_order < 2 || self.descriptor_order > self.order {
            return Err(Error::InvalidOrder { order: self.descriptor_order, reason: "descriptor order must lie in 2..=order" });
        }
        if self.acquisition.sim_order < self.order {
            return Err(Error::InvalidOrder { order: self.acquisition.sim_order, reason: "simulation order is below the reconstruction order" });
        }
        self.acquisition.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub true_id: String,
    pub sigma0: f64,
    pub selected_id: String,
    pub frequency: f64,
}

/// Sensed target: a dictionary spec moved by `motion`, its simulation-order
/// CGPTs and its footprint in the acquisition frame.
pub struct SensedTarget {
    pub id: String,
    pub target: ConductivityTarget,
    pub cgpt: CgptMatrix,
    pub footprint: TargetFootprint,
}

pub fn sense_spec(id: &str, spec: &ShapeSpec, motion: &RigidMotion, config: &AcquisitionConfig, n_nodes: usize) -> Result<SensedTarget> {
    let target = ConductivityTarget::from_spec(id, spec, n_nodes)?.apply_motion(motion);
    let cgpt = compute_cgpt(&target, config.sim_order)?;
    let footprint = TargetFootprint::of_curve(&target.outer, config.center());
    Ok(SensedTarget { id: id.to_string(), target, cgpt, footprint })
}

/// [`sense_spec`] for a dictionary entry.
pub fn sensed_target(dict: &Dictionary, id: &str, motion: &RigidMotion, config: &AcquisitionConfig, n_nodes: usize) -> Result<SensedTarget> {
    sense_spec(id, &dict.get(id)?.spec, motion, config, n_nodes)
}

/// Selection frequencies for every `(true target, σ0)` pair. Rows list every
/// dictionary id, including those never selected.
pub fn run_identification_experiment(dict: &Dictionary, config: &ExperimentConfig) -> Result<Vec<FrequencyRow>> {
    config.validate()?;
    if config.order > dict.order {
        return Err(Error::InvalidOrder { order: config.order, reason: "reconstruction order exceeds the dictionary order" });
    }
    let ids = dict.ids();
    let mut rows = Vec::new();
    for true_id in &config.targets {
        let t_index = dict.index_of(true_id)?;
        let sensed = sensed_target(dict, true_id, &config.motion, &config.acquisition, config.n_nodes)?;
        let clean = synthesize_msr(&sensed.cgpt, &config.acquisition, &sensed.footprint)?;
        let op = build_acquisition(&config.acquisition, &sensed.footprint, config.order)?;
        let solver = Reconstructor::new(&op);
        for (s_index, &sigma) in config.sigmas.iter().enumerate() {
            let trials = if sigma == 0.0 { 1 } else { config.trials };
            let results: Vec<MatchResult> = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(config.seed, t_index, s_index, trial);
                    let noisy = add_noise_with(&clean, sigma, &mut rng);
                    let rec = solver.reconstruct(&noisy.values)?;
                    let d = descriptors(&rec.cgpt.to_complex(), config.descriptor_order)?;
                    match_descriptors(&d, dict)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut counts = vec![0usize; ids.len()];
            match config.selection {
                SelectionRule::PerTrial => results.iter().for_each(|r| counts[r.best] += 1),
                SelectionRule::MeanError => {
                    let mean: Vec<f64> = (0..ids.len())
                        .map(|n| results.iter().map(|r| r.errors[n]).sum::<f64>() / trials as f64)
                        .collect();
                    counts[select(ids.clone(), mean).best] = trials;
                }
            }
            log::info!(
                "target {true_id}, sigma0 {sigma}: identification probability {:.4} over {trials} trials (seed {})",
                counts[t_index] as f64 / trials as f64,
                config.seed
            );
            for (n, id) in ids.iter().enumerate() {
                rows.push(FrequencyRow {
                    true_id: true_id.clone(),
                    sigma0: sigma,
                    selected_id: id.clone(),
                    frequency: counts[n] as f64 / trials as f64,
                });
            }
        }
    }
    Ok(rows)
}

/// Probability of selecting the true id, per `(true_id, σ0)`.
pub fn identification_probabilities(rows: &[FrequencyRow]) -> Vec<(String, f64, f64)> {
    rows.iter()
        .filter(|r| r.true_id == r.selected_id)
        .map(|r| (r.true_id.clone(), r.sigma0, r.frequency))
        .collect()
}

pub fn write_frequency_csv(path: &Path, rows: &[FrequencyRow]) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        out.serialize(r).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub target: String,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub acquisition: AcquisitionConfig,
    pub order: usize,
    pub motion: RigidMotion,
    pub n_nodes: usize,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            target: "1b".into(),
            sigmas: vec![0.0, 0.2],
            trials: 100,
            seed: 0,
            acquisition: AcquisitionConfig::default(),
            order: DEFAULT_ORDER,
            motion: experiment_motion(),
            n_nodes: DEFAULT_NODES,
        }
    }
}

/// Per-order relative error of the trial-averaged reconstructed CGPT.
pub fn run_robustness(dict: &Dictionary, config: &RobustnessConfig) -> Result<Vec<OrderDiagnostic>> {
    if config.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if config.acquisition.sim_order < config.order {
        return Err(Error::InvalidOrder { order: config.acquisition.sim_order, reason: "simulation order is below the reconstruction order" });
    }
    let t_index = dict.index_of(&config.target)?;
    let sensed = sensed_target(dict, &config.target, &config.motion, &config.acquisition, config.n_nodes)?;
    let truth = sensed.cgpt.truncate(config.order)?;
    let clean = synthesize_msr(&sensed.cgpt, &config.acquisition, &sensed.footprint)?;
    let op = build_acquisition(&config.acquisition, &sensed.footprint, config.order)?;
    let solver = Reconstructor::new(&op);
    let mut rows = Vec::new();
    for (s_index, &sigma) in config.sigmas.iter().enumerate() {
        let trials = if sigma == 0.0 { 1 } else { config.trials };
        let estimates = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(config.seed, t_index, s_index, trial);
                solver.reconstruct(&add_noise_with(&clean, sigma, &mut rng).values).map(|r| r.cgpt)
            })
            .collect::<Result<Vec<_>>>()?;
        let mean = average_cgpts(&estimates)?;
        for (k, e) in per_order_errors(&mean, &truth)?.into_iter().enumerate() {
            rows.push(OrderDiagnostic { order: k + 1, relative_error: e, sigma0: sigma, trials });
        }
    }
    Ok(rows)
}
