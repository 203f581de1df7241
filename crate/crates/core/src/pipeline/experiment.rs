//! Incremental retraining, the pseudo-label baseline, and the nested
//! k-fold experiment harness.
//!
//! A run covers two domains: the unperturbed source domain supplies the
//! pretraining set and the interaction-time training data; the perturbed
//! target domain supplies the increments, test and validation sets. Every
//! retraining starts from a fresh initialization on the cumulative set, so
//! curves are deterministic and free of ordering effects.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::selflabel::{
    ball_plan_graph, build_selflabeled_dataset, resimulate_episode, train_itms, CAUSE_IDS,
    EFFECT_ID,
};
use super::{NoiseSpec, PipelineError, SelfLabeledExample};
use crate::causal::TimeLaw;
use crate::learners::{train_classifier, MlpConfig, RegressorSpec};
use crate::seed::derive_seed;
use crate::sim::{
    generate_dataset, SampleRecord, SimConfig, SplitCounts, Threshold, N_CLASSES,
};

/// Seed-stream tags for the experiment harness.
const STREAM_SOURCE_DATA: u64 = 0xe0;
const STREAM_TARGET_DATA: u64 = 0xe1;
const STREAM_NOISE: u64 = 0xe2;
const STREAM_MODEL: u64 = 0xe3;

/// A plain supervised dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn from_samples(samples: &[SampleRecord]) -> Self {
        Self {
            inputs: samples.iter().map(|s| s.task_input.clone()).collect(),
            labels: samples.iter().map(|s| s.class_label).collect(),
        }
    }

    pub fn from_selflabeled(examples: &[SelfLabeledExample]) -> Self {
        Self {
            inputs: examples.iter().map(|e| e.input.clone()).collect(),
            labels: examples.iter().map(|e| e.label).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn extend(&mut self, other: &LabeledSet) {
        self.inputs.extend(other.inputs.iter().cloned());
        self.labels.extend(other.labels.iter().cloned());
    }
}

/// Retrain on pretrain ∪ increments[..i] for i = 0..=n and report test
/// accuracy after each stage; entry 0 is the pretrain-only model.
pub fn incremental_retrain(
    config: &MlpConfig,
    pretrain: &LabeledSet,
    increments: &[LabeledSet],
    test: &LabeledSet,
    n_classes: usize,
) -> Result<Vec<f64>, PipelineError> {
    let mut cumulative = pretrain.clone();
    let mut curve = Vec::with_capacity(increments.len() + 1);
    let model = train_classifier(config, &cumulative.inputs, &cumulative.labels, n_classes)?;
    curve.push(model.evaluate(&test.inputs, &test.labels)?);
    for increment in increments {
        cumulative.extend(increment);
        let model =
            train_classifier(config, &cumulative.inputs, &cumulative.labels, n_classes)?;
        curve.push(model.evaluate(&test.inputs, &test.labels)?);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoOutcome {
    pub curve: Vec<f64>,
    /// Inputs admitted per increment (confidence above the threshold).
    pub admitted: Vec<usize>,
}

/// Confidence-threshold pseudo-labeling: each round, the current model
/// labels the round's unlabeled inputs; predictions with max probability
/// strictly above the threshold join the training pool.
pub fn pseudo_label_baseline(
    config: &MlpConfig,
    pretrain: &LabeledSet,
    unlabeled_increments: &[Vec<Vec<f64>>],
    confidence_threshold: f64,
    test: &LabeledSet,
    n_classes: usize,
) -> Result<PseudoOutcome, PipelineError> {
    if !(0.0..=1.0).contains(&confidence_threshold) {
        return Err(PipelineError::BadSpec(format!(
            "confidence threshold {confidence_threshold} not in [0, 1]"
        )));
    }
    let mut cumulative = pretrain.clone();
    let mut model =
        train_classifier(config, &cumulative.inputs, &cumulative.labels, n_classes)?;
    let mut curve = vec![model.evaluate(&test.inputs, &test.labels)?];
    let mut admitted = Vec::with_capacity(unlabeled_increments.len());
    for batch in unlabeled_increments {
        let mut taken = 0;
        for input in batch {
            let (label, probs) = model.predict(input)?;
            if probs[label] > confidence_threshold {
                cumulative.inputs.push(input.clone());
                cumulative.labels.push(label);
                taken += 1;
            }
        }
        admitted.push(taken);
        model = train_classifier(config, &cumulative.inputs, &cumulative.labels, n_classes)?;
        curve.push(model.evaluate(&test.inputs, &test.labels)?);
    }
    Ok(PseudoOutcome { curve, admitted })
}

/// Class-stratified partition into `k` disjoint folds (round-robin per
/// class); errors when a fold cannot cover every class.
pub fn stratified_folds(
    labels: &[usize],
    k: usize,
    n_classes: usize,
) -> Result<Vec<Vec<usize>>, PipelineError> {
    if k < 2 {
        return Err(PipelineError::BadSpec(format!("need k ≥ 2 folds, got {k}")));
    }
    if labels.len() / k < n_classes {
        return Err(PipelineError::FoldTooSmall {
            fold_size: labels.len() / k,
            n_classes,
        });
    }
    let mut folds = vec![Vec::new(); k];
    let mut counter = 0usize;
    for class in 0..n_classes {
        for (i, _) in labels.iter().enumerate().filter(|(_, &l)| l == class) {
            folds[counter % k].push(i);
            counter += 1;
        }
    }
    Ok(folds)
}

/// One cell of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub fold: usize,
    pub seed: u64,
    pub increment: usize,
    pub method: String,
    pub accuracy: f64,
}

/// Mean/standard deviation over folds and seeds per (method, increment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub increment: usize,
    pub mean: f64,
    pub std: f64,
    pub cells: usize,
}

pub fn aggregate_results(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, usize)> =
        rows.iter().map(|r| (r.method.clone(), r.increment)).collect();
    keys.sort();
    keys.dedup();
    keys.iter()
        .map(|(method, increment)| {
            let cells: Vec<f64> = rows
                .iter()
                .filter(|r| &r.method == method && r.increment == *increment)
                .map(|r| r.accuracy)
                .collect();
            let n = cells.len() as f64;
            let mean = cells.iter().sum::<f64>() / n;
            let var = cells.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
            AggregateRow {
                method: method.clone(),
                increment: *increment,
                mean,
                std: var.sqrt(),
                cells: cells.len(),
            }
        })
        .collect()
}

/// Full experiment description; serializable as the run specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    /// Base simulation config; the target domain adds `wind_magnitude`.
    pub sim: SimConfig,
    pub wind_magnitude: f64,
    pub pretrain: usize,
    pub increment: usize,
    pub n_increments: usize,
    pub test: usize,
    pub validation: usize,
    /// Source-domain samples for fitting the interaction-time models.
    pub itm_training: usize,
    pub mlp: MlpConfig,
    pub itm: RegressorSpec,
    pub noise: NoiseSpec,
    pub k_outer: usize,
    pub k_inner: usize,
    pub seeds: Vec<u64>,
    pub confidence_threshold: f64,
    /// Inner-fold tunable; a single candidate skips the inner search.
    pub learning_rate_candidates: Vec<f64>,
    /// Any of "slb", "fs", "pseudo".
    pub methods: Vec<String>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::desk_scale()
    }
}

impl ExperimentSpec {
    /// The desk-scale protocol: wind 0.5, 320 pretrain samples, 10
    /// increments of 120, 2 outer folds, 3 seeds.
    pub fn desk_scale() -> Self {
        let mlp = MlpConfig::desk_scale();
        Self {
            sim: SimConfig::default(),
            wind_magnitude: 0.5,
            pretrain: 320,
            increment: 120,
            n_increments: 10,
            test: 240,
            validation: 120,
            itm_training: 480,
            learning_rate_candidates: vec![mlp.learning_rate],
            mlp,
            itm: RegressorSpec::default_itm(),
            noise: NoiseSpec::clean(0),
            k_outer: 2,
            k_inner: 2,
            seeds: vec![1, 2, 3],
            confidence_threshold: 0.9,
            methods: vec!["slb".into(), "fs".into(), "pseudo".into()],
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        self.noise.validate()?;
        if self.seeds.is_empty() || self.methods.is_empty() {
            return Err(PipelineError::BadSpec("need at least one seed and method".into()));
        }
        for m in &self.methods {
            if !["slb", "fs", "pseudo"].contains(&m.as_str()) {
                return Err(PipelineError::BadSpec(format!("unknown method {m:?}")));
            }
        }
        if self.learning_rate_candidates.is_empty() {
            return Err(PipelineError::BadSpec("need a learning-rate candidate".into()));
        }
        if self.k_outer < 2 || self.k_inner < 2 {
            return Err(PipelineError::BadSpec("k_outer and k_inner must be ≥ 2".into()));
        }
        Ok(())
    }
}

fn time_law_from(times: &[f64]) -> Result<TimeLaw, PipelineError> {
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let low = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let high = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(TimeLaw::new(mean, low, high)?)
}

/// Run the nested k-fold experiment: pretrain and ITM data from the
/// wind-free source domain, increments/test/validation from the windy
/// target domain; self-labeled increments are assembled once, then every
/// (outer fold × seed × method) cell retrains independently.
pub fn nested_kfold(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, PipelineError> {
    spec.validate()?;

    let mut source_cfg = spec.sim.clone();
    source_cfg.wind_magnitude = 0.0;
    source_cfg.seed = derive_seed(spec.sim.seed, STREAM_SOURCE_DATA, 0);
    let source_counts = SplitCounts {
        pretrain: spec.pretrain,
        increment: spec.itm_training,
        n_increments: 1,
        test: N_CLASSES,
        validation: N_CLASSES,
    };
    let (source, source_manifest) =
        generate_dataset(&source_cfg, &source_counts, Threshold::Auto)?;
    let threshold = source_manifest.magnitude_threshold;

    let mut target_cfg = spec.sim.clone();
    target_cfg.wind_magnitude = spec.wind_magnitude;
    target_cfg.seed = derive_seed(spec.sim.seed, STREAM_TARGET_DATA, 0);
    let target_counts = SplitCounts {
        pretrain: N_CLASSES,
        increment: spec.increment,
        n_increments: spec.n_increments,
        test: spec.test,
        validation: spec.validation,
    };
    let (target, _) =
        generate_dataset(&target_cfg, &target_counts, Threshold::Fixed(threshold))?;

    // interaction-time models and the labeling plan, from the source domain
    let itm_set = &source.increments[0];
    let itms = train_itms(spec.itm, itm_set)?;
    let laws = (
        time_law_from(&itm_set.iter().map(|s| s.true_times.0).collect::<Vec<_>>())?,
        time_law_from(&itm_set.iter().map(|s| s.true_times.1).collect::<Vec<_>>())?,
    );
    let plan = ball_plan_graph(laws)?.build_labeling_plan(CAUSE_IDS[0], EFFECT_ID)?;

    // assemble the three increment variants once
    let mut slb_increments = Vec::with_capacity(spec.n_increments);
    let mut fs_increments = Vec::with_capacity(spec.n_increments);
    let mut unlabeled_increments = Vec::with_capacity(spec.n_increments);
    for (i, batch) in target.increments.iter().enumerate() {
        let episodes = batch
            .par_iter()
            .map(|s| resimulate_episode(&target_cfg, s.episode_seed, threshold))
            .collect::<Result<Vec<_>, _>>()?;
        let mut noise = spec.noise;
        noise.seed = derive_seed(spec.noise.seed, STREAM_NOISE, i as u64);
        let examples = build_selflabeled_dataset(
            &episodes, threshold, &plan, &itms, &noise, N_CLASSES,
        )?;
        slb_increments.push(LabeledSet::from_selflabeled(&examples));
        fs_increments.push(LabeledSet::from_samples(batch));
        unlabeled_increments.push(batch.iter().map(|s| s.task_input.clone()).collect());
    }

    let pretrain = LabeledSet::from_samples(&source.pretrain);
    let test = LabeledSet::from_samples(&target.test);
    let folds = stratified_folds(&test.labels, spec.k_outer, N_CLASSES)?;

    // inner folds pick the learning rate on validation data only
    let learning_rate = select_learning_rate(spec, &pretrain, &target.validation)?;

    let jobs: Vec<(usize, u64, String)> = spec
        .methods
        .iter()
        .flat_map(|m| {
            spec.seeds.iter().flat_map(move |&seed| {
                (0..spec.k_outer).map(move |fold| (fold, seed, m.clone()))
            })
        })
        .collect();

    let rows: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|(fold, seed, method)| {
            let eval = LabeledSet {
                inputs: folds[*fold].iter().map(|&i| test.inputs[i].clone()).collect(),
                labels: folds[*fold].iter().map(|&i| test.labels[i]).collect(),
            };
            let mut mlp = spec.mlp.clone();
            mlp.learning_rate = learning_rate;
            mlp.seed = derive_seed(*seed, STREAM_MODEL, *fold as u64);
            let curve = match method.as_str() {
                "slb" => {
                    incremental_retrain(&mlp, &pretrain, &slb_increments, &eval, N_CLASSES)?
                }
                "fs" => incremental_retrain(&mlp, &pretrain, &fs_increments, &eval, N_CLASSES)?,
                _ => {
                    pseudo_label_baseline(
                        &mlp,
                        &pretrain,
                        &unlabeled_increments,
                        spec.confidence_threshold,
                        &eval,
                        N_CLASSES,
                    )?
                    .curve
                }
            };
            Ok(curve
                .into_iter()
                .enumerate()
                .map(|(increment, accuracy)| ResultRow {
                    fold: *fold,
                    seed: *seed,
                    increment,
                    method: method.clone(),
                    accuracy,
                })
                .collect())
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Evaluate each learning-rate candidate with k-inner-fold validation on
/// the pretrain model and return the best (ties to the earlier candidate).
fn select_learning_rate(
    spec: &ExperimentSpec,
    pretrain: &LabeledSet,
    validation: &[SampleRecord],
) -> Result<f64, PipelineError> {
    if spec.learning_rate_candidates.len() == 1 {
        return Ok(spec.learning_rate_candidates[0]);
    }
    let val = LabeledSet::from_samples(validation);
    let folds = stratified_folds(&val.labels, spec.k_inner, N_CLASSES)?;
    let mut best = (f64::NEG_INFINITY, spec.learning_rate_candidates[0]);
    for &candidate in &spec.learning_rate_candidates {
        let mut mlp = spec.mlp.clone();
        mlp.learning_rate = candidate;
        mlp.seed = derive_seed(mlp.seed, STREAM_MODEL, u64::MAX);
        let model = train_classifier(&mlp, &pretrain.inputs, &pretrain.labels, N_CLASSES)?;
        let mut acc = 0.0;
        for fold in &folds {
            let inputs: Vec<Vec<f64>> = fold.iter().map(|&i| val.inputs[i].clone()).collect();
            let labels: Vec<usize> = fold.iter().map(|&i| val.labels[i]).collect();
            acc += model.evaluate(&inputs, &labels)?;
        }
        acc /= folds.len() as f64;
        if acc > best.0 {
            best = (acc, candidate);
        }
    }
    Ok(best.1)
}
