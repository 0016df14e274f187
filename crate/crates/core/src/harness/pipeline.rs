//! End-to-end experiment runs and their artifact index.
//!
//! Layout of an output directory:
//!
//! | path | contents |
//! |---|---|
//! | `models/init.ckpt` | the shared initialization |
//! | `synthetic.ckpt` | distilled dataset |
//! | `masks/{imp,distilled}_rNN.ckpt` | mask chosen in round `NN` |
//! | `prune_{imp,distilled}.csv` | per-round sparsity, data cost, validation metrics |
//! | `data_cost.csv` | training points used to find each mask, both families side by side |
//! | `curves/{family}_rNN_pK.ckpt` | interpolation curve for seed pair `K` |
//! | `stability.csv`, `retrain.csv` | barriers per curve; accuracy per trained endpoint |
//! | `grids/{family}_rNN.ckpt`, `landscape.csv` | loss grids and their summaries |
//! | `hessian_stats.csv` | Hessian-diagonal statistics per subnetwork |
//! | `index.json` | every file above with its SHA-256; written last |
//!
//! The dense baseline appears as family `dense`, round 0.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::checkpoint::{load_checkpoint_verified, save_checkpoint, CheckpointRecord};
use super::config::{ExperimentConfig, Stage};
use crate::data::Dataset;
use crate::distill::{distill, SyntheticDataset};
use crate::hessian::{diag_stats, hessian_diag_estimate, hessian_diag_exact, HessianMethod};
use crate::landscape::{grid_eval, plane_from_models};
use crate::nn::{evaluate, init_model, ModelState};
use crate::pruning::{apply_and_retrain, distilled_prune, imp, sparsity, PruneRunRecord, SparsityMask};
use crate::stability::{barrier_height, curve_between, stability_verdict, CurveMeta};
use crate::{digest, Error, Result};

pub const INDEX_FILE: &str = "index.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dense,
    Imp,
    Distilled,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Dense => "dense",
            Family::Imp => "imp",
            Family::Distilled => "distilled",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Family::Dense),
            "imp" => Ok(Family::Imp),
            "distilled" => Ok(Family::Distilled),
            other => Err(Error::InvalidConfig(format!("unknown mask family `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    #[serde(rename = "FAILED")]
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactIndex {
    pub name: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: Vec<ArtifactEntry>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl ArtifactIndex {
    pub fn load(output_dir: &Path) -> Result<Self> {
        let path = output_dir.join(INDEX_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::MissingArtifacts(vec![format!("{} ({e})", path.display())]))?;
        let mut index: Self =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        index.root = output_dir.to_path_buf();
        Ok(index)
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a ArtifactEntry> + 'a {
        self.artifacts.iter().filter(move |a| a.kind == kind)
    }

    pub fn resolve(&self, entry: &ArtifactEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Recomputes every listed hash; returns the paths that do not match.
    pub fn verify(&self) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for entry in &self.artifacts {
            match std::fs::read(self.resolve(entry)) {
                Ok(bytes) if digest(&bytes) == entry.sha256 => {}
                _ => bad.push(entry.path.clone()),
            }
        }
        Ok(bad)
    }

    /// `path -> sha256` for comparing runs.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.artifacts.iter().map(|a| (a.path.clone(), a.sha256.clone())).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneRow {
    pub family: Family,
    pub round: usize,
    pub sparsity: f64,
    pub pruning_points: usize,
    pub cumulative_points: usize,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataCostRow {
    pub round: usize,
    pub sparsity: f64,
    pub imp_points: usize,
    pub distilled_points: usize,
    pub imp_cumulative: usize,
    pub distilled_cumulative: usize,
    /// `distilled_points / imp_points`.
    pub ratio: f64,
    /// `ipc * classes / real training rows`.
    pub expected_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrainRow {
    pub family: Family,
    pub round: usize,
    pub sparsity: f64,
    pub seed: u64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub family: Family,
    pub round: usize,
    pub sparsity: f64,
    pub pair: usize,
    pub seed_a: u64,
    pub seed_b: u64,
    pub barrier_halfway: f64,
    pub barrier_max: f64,
    pub halfway_interpolated: bool,
    pub stable: bool,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub family: Family,
    pub round: usize,
    pub sparsity: f64,
    pub nx: usize,
    pub ny: usize,
    pub evaluations: usize,
    pub flagged: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub ref1_x: f64,
    pub ref2_x: f64,
    pub ref2_y: f64,
    pub loss_min: f64,
    pub loss_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianRow {
    pub family: Family,
    pub round: usize,
    pub sparsity: f64,
    pub method: HessianMethod,
    pub probes: usize,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub avg_magnitude: f64,
}

/// Reads one of the pipeline's CSV tables.
pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Masks of one family, keyed by round.
type Masks = BTreeMap<usize, SparsityMask>;

/// Stateful runner: each stage computes (or, with `reuse`, loads verified
/// upstream checkpoints) and registers what it writes.
pub struct Pipeline {
    cfg: ExperimentConfig,
    root: PathBuf,
    reuse: bool,
    artifacts: BTreeMap<String, ArtifactEntry>,
    data: Option<(Dataset, Dataset)>,
    init: Option<ModelState>,
    syn: Option<SyntheticDataset>,
    masks: BTreeMap<Family, Masks>,
    prune_rows: BTreeMap<Family, Vec<PruneRow>>,
    trained: BTreeMap<(Family, usize, u64), ModelState>,
}

impl Pipeline {
    /// `reuse` lets stages load upstream checkpoints whose config hash matches
    /// instead of recomputing them.
    pub fn new(cfg: ExperimentConfig, reuse: bool) -> Result<Self> {
        cfg.validate()?;
        let root = cfg.output_dir.clone();
        std::fs::create_dir_all(&root)
            .map_err(|e| Error::InvalidConfig(format!("output_dir {} is not writable: {e}", root.display())))?;
        Ok(Self {
            cfg,
            root,
            reuse,
            artifacts: BTreeMap::new(),
            data: None,
            init: None,
            syn: None,
            masks: BTreeMap::new(),
            prune_rows: BTreeMap::new(),
            trained: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    fn register(&mut self, rel: &str, kind: &str, bytes: &[u8]) {
        self.artifacts.insert(
            rel.to_string(),
            ArtifactEntry {
                path: rel.to_string(),
                kind: kind.to_string(),
                sha256: digest(bytes),
                bytes: bytes.len() as u64,
            },
        );
    }

    fn write_file(&mut self, rel: &str, kind: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes)?;
        self.register(rel, kind, bytes);
        Ok(())
    }

    fn write_record(&mut self, rel: &str, record: &CheckpointRecord) -> Result<()> {
        save_checkpoint(record, &self.root.join(rel))?;
        let bytes = std::fs::read(self.root.join(rel))?;
        self.register(rel, record.record_type.as_str(), &bytes);
        Ok(())
    }

    fn write_csv<T: Serialize>(&mut self, rel: &str, kind: &str, rows: &[T]) -> Result<()> {
        self.write_file(rel, kind, &csv_bytes(rows)?)
    }

    /// A verified upstream record, if reuse is on and one is on disk.
    fn reusable(&mut self, rel: &str, hash: &str) -> Option<CheckpointRecord> {
        if !self.reuse {
            return None;
        }
        let path = self.root.join(rel);
        let record = load_checkpoint_verified(&path, hash).ok()?;
        let bytes = std::fs::read(&path).ok()?;
        self.register(rel, record.record_type.as_str(), &bytes);
        Some(record)
    }

    fn data(&mut self) -> Result<(Dataset, Dataset)> {
        if self.data.is_none() {
            let base = std::env::current_dir()?;
            self.data = Some(self.cfg.dataset.load(&base)?);
        }
        Ok(self.data.clone().expect("loaded above"))
    }

    fn staged<T>(stage: Stage, result: Result<T>) -> Result<T> {
        result.map_err(|e| e.in_stage(stage.name()))
    }

    pub fn init_model(&mut self) -> Result<ModelState> {
        let r = self.init_inner();
        Self::staged(Stage::Init, r)
    }

    fn init_inner(&mut self) -> Result<ModelState> {
        if let Some(m) = &self.init {
            return Ok(m.clone());
        }
        let (train, _) = self.data()?;
        if train.dim != self.cfg.arch.input_dim() || train.class_count != self.cfg.arch.num_classes() {
            return Err(Error::DimensionMismatch(format!(
                "dataset (dim {}, {} classes) does not fit {}",
                train.dim,
                train.class_count,
                self.cfg.arch.describe()
            )));
        }
        let hash = self.cfg.stage_hash(Stage::Init);
        let rel = "models/init.ckpt";
        let model = match self.reusable(rel, &hash) {
            Some(rec) => rec.to_model()?,
            None => {
                let m = init_model(&self.cfg.arch, self.cfg.init_seed)?;
                self.write_record(rel, &CheckpointRecord::from_model(&m, &hash)?)?;
                m
            }
        };
        self.init = Some(model.clone());
        Ok(model)
    }

    pub fn synthetic(&mut self) -> Result<SyntheticDataset> {
        let r = self.synthetic_inner();
        Self::staged(Stage::Distill, r)
    }

    fn synthetic_inner(&mut self) -> Result<SyntheticDataset> {
        if let Some(s) = &self.syn {
            return Ok(s.clone());
        }
        let (train, _) = self.data()?;
        let hash = self.cfg.stage_hash(Stage::Distill);
        let rel = "synthetic.ckpt";
        let syn = match self.reusable(rel, &hash) {
            Some(rec) => rec.to_synthetic()?,
            None => {
                let syn = distill(&train, &self.cfg.arch, self.cfg.distill.ipc, &self.cfg.distill.config)?;
                self.write_record(rel, &CheckpointRecord::from_synthetic(&syn, &hash))?;
                syn
            }
        };
        self.syn = Some(syn.clone());
        Ok(syn)
    }

    /// Masks of `family` by round (the dense family has round 0 only).
    pub fn masks(&mut self, family: Family) -> Result<Masks> {
        let stage = match family {
            Family::Distilled => Stage::PruneDistilled,
            _ => Stage::PruneImp,
        };
        let r = self.masks_inner(family);
        Self::staged(stage, r)
    }

    fn masks_inner(&mut self, family: Family) -> Result<Masks> {
        if let Some(m) = self.masks.get(&family) {
            return Ok(m.clone());
        }
        if family == Family::Dense {
            let masks = Masks::from([(0, SparsityMask::dense(&self.cfg.arch))]);
            self.masks.insert(family, masks.clone());
            return Ok(masks);
        }
        let init = self.init_inner()?;
        let stage = if family == Family::Imp {
            Stage::PruneImp
        } else {
            Stage::PruneDistilled
        };
        let hash = self.cfg.stage_hash(stage);
        let rounds = self.cfg.prune.rounds;
        let csv_rel = format!("prune_{}.csv", family.as_str());

        if self.reuse && self.root.join(&csv_rel).exists() {
            let mut masks = Masks::new();
            for round in 1..=rounds {
                match self.reusable(&mask_path(family, round), &hash) {
                    Some(rec) => {
                        masks.insert(round, rec.to_mask()?.0);
                    }
                    None => break,
                }
            }
            if masks.len() == rounds {
                let bytes = std::fs::read(self.root.join(&csv_rel))?;
                let rows = read_rows(&self.root.join(&csv_rel))?;
                self.register(&csv_rel, "prune_records", &bytes);
                self.prune_rows.insert(family, rows);
                self.masks.insert(family, masks.clone());
                return Ok(masks);
            }
        }

        let (train, val) = self.data()?;
        let records: Vec<PruneRunRecord> = match family {
            Family::Imp => imp(&init, &train, &val, &self.cfg.prune, &self.cfg.train)?,
            _ => {
                let syn = self.synthetic_inner()?;
                distilled_prune(&init, &syn, &train, &val, &self.cfg.prune, &self.cfg.train)?
            }
        };
        let mut masks = Masks::new();
        let mut rows = Vec::with_capacity(records.len());
        for rec in &records {
            let ck = CheckpointRecord::from_mask(&rec.mask, &self.cfg.arch, &hash)?;
            self.write_record(&mask_path(family, rec.round_index), &ck)?;
            masks.insert(rec.round_index, rec.mask.clone());
            rows.push(PruneRow {
                family,
                round: rec.round_index,
                sparsity: rec.sparsity,
                pruning_points: rec.pruning_dataset_size,
                cumulative_points: rec.cumulative_dataset_size,
                val_loss: rec.trained_eval.loss,
                val_accuracy: rec.trained_eval.accuracy,
            });
        }
        self.write_csv(&csv_rel, "prune_records", &rows)?;
        self.prune_rows.insert(family, rows);
        self.masks.insert(family, masks.clone());
        Ok(masks)
    }

    /// Side-by-side data cost of the two mask families; needs both.
    pub fn data_cost(&mut self) -> Result<Vec<DataCostRow>> {
        self.masks(Family::Imp)?;
        self.masks(Family::Distilled)?;
        let (train, _) = self.data()?;
        let expected_ratio =
            (self.cfg.distill.ipc * self.cfg.arch.num_classes()) as f64 / train.len() as f64;
        let imp_rows = &self.prune_rows[&Family::Imp];
        let dis_rows = &self.prune_rows[&Family::Distilled];
        let rows: Vec<DataCostRow> = imp_rows
            .iter()
            .zip(dis_rows)
            .map(|(i, d)| DataCostRow {
                round: i.round,
                sparsity: i.sparsity,
                imp_points: i.pruning_points,
                distilled_points: d.pruning_points,
                imp_cumulative: i.cumulative_points,
                distilled_cumulative: d.cumulative_points,
                ratio: d.pruning_points as f64 / i.pruning_points as f64,
                expected_ratio,
            })
            .collect();
        self.write_csv("data_cost.csv", "data_cost", &rows)?;
        Ok(rows)
    }

    /// The masked init trained on real data under ordering `seed`, memoized.
    fn trained(&mut self, family: Family, round: usize, mask: &SparsityMask, seed: u64) -> Result<ModelState> {
        if let Some(m) = self.trained.get(&(family, round, seed)) {
            return Ok(m.clone());
        }
        let init = self.init_inner()?;
        let (train, _) = self.data()?;
        let model = apply_and_retrain(&init, mask, &train, &self.cfg.train.with_ordering_seed(seed))?.model;
        self.trained.insert((family, round, seed), model.clone());
        Ok(model)
    }

    fn all_masks(&mut self) -> Result<Vec<(Family, usize, SparsityMask)>> {
        let mut out = Vec::new();
        for family in [Family::Dense, Family::Imp, Family::Distilled] {
            for (round, mask) in self.masks(family)? {
                out.push((family, round, mask));
            }
        }
        Ok(out)
    }

    /// Instability analysis for every mask and seed pair.
    pub fn stability(&mut self) -> Result<Vec<StabilityRow>> {
        let masks = self.all_masks()?;
        let r = self.stability_inner(masks);
        Self::staged(Stage::Stability, r)
    }

    fn stability_inner(&mut self, masks: Vec<(Family, usize, SparsityMask)>) -> Result<Vec<StabilityRow>> {
        let (train, val) = self.data()?;
        let hash = self.cfg.stage_hash(Stage::Stability);
        let pairs = self.cfg.seed_pairs();
        let tolerance = self.cfg.analysis.stability_tolerance;
        let mut stab_rows = Vec::new();
        let mut retrain_rows = Vec::new();
        for (family, round, mask) in masks {
            let s = sparsity(&mask);
            for (pair, &(seed_a, seed_b)) in pairs.iter().enumerate() {
                let a = self.trained(family, round, &mask, seed_a)?;
                let b = self.trained(family, round, &mask, seed_b)?;
                let meta = CurveMeta {
                    sparsity: s,
                    seed_a,
                    seed_b,
                    dataset: train.name.clone(),
                };
                let curve = curve_between(&a, &b, &train, &val, self.cfg.analysis.num_alphas, meta)?;
                self.write_record(&curve_path(family, round, pair), &CheckpointRecord::from_curve(&curve, &hash))?;
                let verdict = stability_verdict(&curve, tolerance)?;
                stab_rows.push(StabilityRow {
                    family,
                    round,
                    sparsity: s,
                    pair,
                    seed_a,
                    seed_b,
                    barrier_halfway: verdict.barrier_halfway,
                    barrier_max: verdict.barrier_max,
                    halfway_interpolated: barrier_height(&curve).halfway_interpolated,
                    stable: verdict.stable,
                    tolerance,
                });
                for (seed, model) in [(seed_a, &a), (seed_b, &b)] {
                    let e = evaluate(model, &val)?;
                    retrain_rows.push(RetrainRow {
                        family,
                        round,
                        sparsity: s,
                        seed,
                        val_loss: e.loss,
                        val_accuracy: e.accuracy,
                    });
                }
            }
        }
        self.write_csv("stability.csv", "stability", &stab_rows)?;
        self.write_csv("retrain.csv", "retrain", &retrain_rows)?;
        Ok(stab_rows)
    }

    /// Loss grids for the dense model and the sparsest mask of each family.
    /// The plane passes through the mask trained under the first two seeds
    /// and under `landscape_seed`.
    pub fn landscape(&mut self) -> Result<Vec<LandscapeRow>> {
        let masks = self.all_masks()?;
        let r = self.landscape_inner(masks);
        Self::staged(Stage::Landscape, r)
    }

    fn landscape_inner(&mut self, masks: Vec<(Family, usize, SparsityMask)>) -> Result<Vec<LandscapeRow>> {
        let (train, _) = self.data()?;
        let hash = self.cfg.stage_hash(Stage::Landscape);
        let last = self.cfg.prune.rounds;
        let a = self.cfg.analysis.clone();
        let (s0, s1) = (self.cfg.seeds[0], self.cfg.seeds[1]);
        let mut rows = Vec::new();
        for (family, round, mask) in masks {
            if family != Family::Dense && round != last {
                continue;
            }
            let m0 = self.trained(family, round, &mask, s0)?;
            let m1 = self.trained(family, round, &mask, s1)?;
            let m2 = self.trained(family, round, &mask, a.landscape_seed)?;
            let plane = plane_from_models(&m0, &m1, &m2)?;
            let (xr, yr) = plane.default_ranges(a.grid_padding);
            let masked = (family != Family::Dense).then_some(&mask);
            let grid = grid_eval(&plane, xr, yr, a.grid_resolution, &train, masked)?;
            self.write_record(&grid_path(family, round), &CheckpointRecord::from_grid(&grid, &hash)?)?;
            let (loss_min, loss_max) = grid.min_max().unwrap_or((f64::NAN, f64::NAN));
            rows.push(LandscapeRow {
                family,
                round,
                sparsity: sparsity(&mask),
                nx: grid.resolution.0,
                ny: grid.resolution.1,
                evaluations: grid.evaluations,
                flagged: grid.flagged.len(),
                x_min: xr.0,
                x_max: xr.1,
                y_min: yr.0,
                y_max: yr.1,
                ref1_x: plane.ref_coords[1].0,
                ref2_x: plane.ref_coords[2].0,
                ref2_y: plane.ref_coords[2].1,
                loss_min,
                loss_max,
            });
        }
        self.write_csv("landscape.csv", "landscape", &rows)?;
        Ok(rows)
    }

    /// Hessian-diagonal statistics of every subnetwork trained under the
    /// first seed, over its surviving coordinates.
    pub fn hessian(&mut self) -> Result<Vec<HessianRow>> {
        let masks = self.all_masks()?;
        let r = self.hessian_inner(masks);
        Self::staged(Stage::Hessian, r)
    }

    fn hessian_inner(&mut self, masks: Vec<(Family, usize, SparsityMask)>) -> Result<Vec<HessianRow>> {
        let (train, _) = self.data()?;
        let a = self.cfg.analysis.clone();
        let batch = train.sample_batch(a.hessian_batch.min(train.len()), a.hessian_seed);
        let seed = self.cfg.seeds[0];
        let mut rows = Vec::new();
        for (family, round, mask) in masks {
            let model = self.trained(family, round, &mask, seed)?;
            let (diag, probes) = match a.hessian_method {
                HessianMethod::ExactFd => (hessian_diag_exact(&model, &batch, a.hessian_step)?, 0),
                HessianMethod::Stochastic => (
                    hessian_diag_estimate(&model, &batch, a.hessian_probes, a.hessian_seed)?,
                    a.hessian_probes,
                ),
            };
            let s = diag_stats(&diag, &mask, a.hessian_method, probes)?;
            rows.push(HessianRow {
                family,
                round,
                sparsity: sparsity(&mask),
                method: s.method,
                probes: s.probes_used,
                count: s.count,
                min: s.min,
                max: s.max,
                mean: s.mean,
                std: s.std,
                avg_magnitude: s.avg_magnitude,
            });
        }
        self.write_csv("hessian_stats.csv", "hessian_stats", &rows)?;
        Ok(rows)
    }

    /// Writes `index.json` (last) for everything registered so far. A failed
    /// run keeps its partial artifacts and is marked `FAILED`.
    /// With reuse on, entries of an earlier index whose files are unchanged on
    /// disk are carried over.
    pub fn finish<T>(mut self, outcome: Result<T>) -> Result<ArtifactIndex> {
        if self.reuse {
            if let Ok(previous) = ArtifactIndex::load(&self.root) {
                for entry in previous.artifacts {
                    let unchanged = std::fs::read(previous.root.join(&entry.path))
                        .is_ok_and(|bytes| digest(&bytes) == entry.sha256);
                    if unchanged && !self.artifacts.contains_key(&entry.path) {
                        self.artifacts.insert(entry.path.clone(), entry);
                    }
                }
            }
        }
        let (status, failed_stage, error) = match &outcome {
            Ok(_) => (RunStatus::Complete, None, None),
            Err(Error::Stage { stage, source }) => (RunStatus::Failed, Some(stage.clone()), Some(source.to_string())),
            Err(e) => (RunStatus::Failed, None, Some(e.to_string())),
        };
        let index = ArtifactIndex {
            name: self.cfg.name.clone(),
            status,
            failed_stage,
            error,
            artifacts: self.artifacts.into_values().collect(),
            root: self.root.clone(),
        };
        let text = serde_json::to_string_pretty(&index).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        std::fs::write(self.root.join(INDEX_FILE), text + "\n")?;
        outcome.map(|_| index)
    }
}

fn mask_path(family: Family, round: usize) -> String {
    format!("masks/{}_r{round:02}.ckpt", family.as_str())
}

fn curve_path(family: Family, round: usize, pair: usize) -> String {
    format!("curves/{}_r{round:02}_p{pair}.ckpt", family.as_str())
}

fn grid_path(family: Family, round: usize) -> String {
    format!("grids/{}_r{round:02}.ckpt", family.as_str())
}

/// Runs every stage from scratch and writes the index.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ArtifactIndex> {
    let mut p = Pipeline::new(cfg.clone(), false)?;
    let outcome = (|| {
        p.init_model()?;
        p.synthetic()?;
        p.data_cost()?;
        p.stability()?;
        p.landscape()?;
        p.hessian()?;
        Ok(())
    })();
    p.finish(outcome)
}
