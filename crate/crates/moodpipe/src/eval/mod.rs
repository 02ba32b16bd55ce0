//! Cross-validation harness: 4 folds × 20 initializations, per-emotion
//! accuracy and probabilistic RMSE.
//!
//! Fold assignment depends only on (master seed, track count). All
//! preprocessing — discretization cuts, selection sets, standardization,
//! Platt calibration — is fitted on training rows only and applied to the
//! held-out fold through the fitted artifacts. Initialization `i` derives
//! its seed from the master seed; it reinitializes MLP weights and SMO
//! example ordering, while Naive Bayes is deterministic and computed once
//! per fold with its results replicated across initializations.

pub mod folds;
pub mod metrics;
pub mod report;

pub use folds::{kfold_split, stratified_kfold, FoldAssignment};
pub use metrics::{accuracy, rmse};
pub use report::{format_tables, reports_to_csv};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Emotion, EMOTION_COUNT};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, MatrixProvenance};
use crate::hash::derive_seed;
use crate::labeling::LabelMatrix;
use crate::learn::{train_binary, ClassifierSpec, ColumnKind, EmotionPreprocess};
use crate::preprocess::{
    cfs_select, ttest_select, CfsData, DiscretizationModel, MeritVariant, VarianceModel,
};

/// Preprocessing applied per emotion before training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preprocessing {
    Raw,
    Cfs,
    DiscrCfs,
    Ttest { p: f64 },
    DiscrTtest { p: f64 },
}

impl Preprocessing {
    pub fn label(&self) -> String {
        match self {
            Preprocessing::Raw => "raw".into(),
            Preprocessing::Cfs => "cfs".into(),
            Preprocessing::DiscrCfs => "discr+cfs".into(),
            Preprocessing::Ttest { p } => format!("ttest({p})"),
            Preprocessing::DiscrTtest { p } => format!("discr+ttest({p})"),
        }
    }

    /// Parse a label like `raw`, `cfs`, `discr+cfs`, `ttest:0.05`,
    /// `discr+ttest:0.01` (parenthesized forms also accepted).
    pub fn parse(text: &str) -> Option<Preprocessing> {
        let t = text.trim().to_lowercase();
        let p_of = |s: &str| -> Option<f64> {
            s.trim_matches(|c| c == '(' || c == ')' || c == ':').parse().ok()
        };
        if t == "raw" {
            Some(Preprocessing::Raw)
        } else if t == "cfs" {
            Some(Preprocessing::Cfs)
        } else if t == "discr+cfs" {
            Some(Preprocessing::DiscrCfs)
        } else if let Some(rest) = t.strip_prefix("discr+ttest") {
            Some(Preprocessing::DiscrTtest { p: p_of(rest)? })
        } else if let Some(rest) = t.strip_prefix("ttest") {
            Some(Preprocessing::Ttest { p: p_of(rest)? })
        } else {
            None
        }
    }
}

/// One full experiment: a (threshold, preprocessing, classifier) cell of
/// the evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub threshold: f64,
    pub preprocessing: Preprocessing,
    pub classifier: ClassifierSpec,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_inits")]
    pub initializations: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub stratified: bool,
    #[serde(default)]
    pub merit_variant: MeritVariant,
    #[serde(default)]
    pub variance_model: VarianceModel,
}

fn default_folds() -> usize {
    4
}
fn default_inits() -> usize {
    20
}

impl ExperimentPlan {
    pub fn new(threshold: f64, preprocessing: Preprocessing, classifier: ClassifierSpec) -> Self {
        ExperimentPlan {
            threshold,
            preprocessing,
            classifier,
            folds: default_folds(),
            initializations: default_inits(),
            master_seed: 0,
            stratified: false,
            merit_variant: MeritVariant::Paper,
            variance_model: VarianceModel::Welch,
        }
    }
}

/// One evaluated (emotion, fold, initialization) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub emotion: String,
    pub fold: usize,
    pub init: usize,
    pub init_seed: u64,
    pub accuracy: f64,
    pub rmse: f64,
}

/// A cell skipped with a reason instead of crashing the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub emotion: String,
    pub fold: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Population standard deviation (matching the report tables' CLASS.STD
    /// convention).
    pub std: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    if values.is_empty() {
        return MetricSummary { mean: f64::NAN, std: f64::NAN };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    MetricSummary { mean, std: var.sqrt() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionSummary {
    pub accuracy: MetricSummary,
    pub rmse: MetricSummary,
}

/// Aggregated result of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub preprocessing: String,
    pub family: String,
    pub folds: usize,
    pub initializations: usize,
    pub master_seed: u64,
    pub provenance: MatrixProvenance,
    /// Per-cell records, keyed by (emotion, fold, init) with the init seed.
    pub cells: Vec<EvalCell>,
    pub skipped: Vec<SkippedCell>,
    /// Mean/std over folds × initializations, per emotion.
    pub per_emotion: BTreeMap<String, EmotionSummary>,
    /// Mean of the nine per-emotion accuracy means (the CLASS. MEAN row).
    pub class_mean_accuracy: f64,
    /// Population std of the nine per-emotion accuracy means (CLASS. STD).
    pub class_std_accuracy: f64,
    pub class_mean_rmse: f64,
    pub class_std_rmse: f64,
    /// All nine labels simultaneously correct — reported as a bonus, not
    /// part of the reproduced protocol.
    pub subset_accuracy_nonpaper: Option<MetricSummary>,
}

/// Everything needed to train and score one emotion inside one fold.
struct EmotionContext {
    emotion: Emotion,
    train_rows: Vec<Vec<f64>>,
    train_kinds: Vec<ColumnKind>,
    train_labels: Vec<bool>,
    test_rows: Vec<Vec<f64>>,
    test_labels: Vec<bool>,
}

struct FoldContext {
    fold: usize,
    emotions: Vec<EmotionContext>,
    skipped: Vec<SkippedCell>,
    /// Number of test rows, shared across emotions under plain folds (the
    /// precondition for subset accuracy).
    test_len: Option<usize>,
}

/// Fit the plan's preprocessing for one emotion on training rows only.
fn fit_preprocess(
    plan: &ExperimentPlan,
    train: &FeatureMatrix,
    labels: &[bool],
    emotion: Emotion,
) -> Result<EmotionPreprocess> {
    match plan.preprocessing {
        Preprocessing::Raw => Ok(EmotionPreprocess::default()),
        Preprocessing::Cfs => {
            let selected = cfs_select(&CfsData::Continuous(train), labels, plan.merit_variant);
            Ok(EmotionPreprocess { discretizer: None, selected: Some(selected) })
        }
        Preprocessing::DiscrCfs => {
            let model = DiscretizationModel::fit(train, labels, emotion.name())?;
            let discrete = model.apply(train)?;
            let selected = cfs_select(&CfsData::Discrete(&discrete), labels, plan.merit_variant);
            Ok(EmotionPreprocess { discretizer: Some(model), selected: Some(selected) })
        }
        Preprocessing::Ttest { p } => {
            let selected = ttest_select(train, labels, p, plan.variance_model, emotion.name())?;
            Ok(EmotionPreprocess {
                discretizer: None,
                selected: Some(fallback_if_empty(selected, train, labels, plan.variance_model)),
            })
        }
        Preprocessing::DiscrTtest { p } => {
            let model = DiscretizationModel::fit(train, labels, emotion.name())?;
            let discrete = model.apply(train)?;
            let as_features = discrete.to_feature_matrix(&train.provenance);
            let selected =
                ttest_select(&as_features, labels, p, plan.variance_model, emotion.name())?;
            Ok(EmotionPreprocess {
                discretizer: Some(model),
                selected: Some(fallback_if_empty(
                    selected,
                    &as_features,
                    labels,
                    plan.variance_model,
                )),
            })
        }
    }
}

/// An empty t-test selection would leave the classifiers without inputs;
/// keep the single column with the smallest p-value instead.
fn fallback_if_empty(
    selected: Vec<String>,
    matrix: &FeatureMatrix,
    labels: &[bool],
    variance: VarianceModel,
) -> Vec<String> {
    use crate::preprocess::{two_sample_t, two_sided_p};
    if !selected.is_empty() {
        return selected;
    }
    let present: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let absent: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let mut best = (matrix.columns[0].clone(), f64::MAX);
    for (col, name) in matrix.columns.iter().enumerate() {
        let a: Vec<f64> = present.iter().map(|&i| matrix.rows[i][col]).collect();
        let b: Vec<f64> = absent.iter().map(|&i| matrix.rows[i][col]).collect();
        let (t, df) = two_sample_t(&a, &b, variance);
        let p = two_sided_p(t, df);
        if p < best.1 {
            best = (name.clone(), p);
        }
    }
    vec![best.0]
}

fn build_fold_context(
    plan: &ExperimentPlan,
    features: &FeatureMatrix,
    labels: &LabelMatrix,
    fold: usize,
    assignments: &[FoldAssignment],
) -> Result<FoldContext> {
    let mut emotions = Vec::new();
    let mut skipped = Vec::new();
    let mut test_len = None;

    for emotion in Emotion::ALL {
        let assignment = if plan.stratified {
            &assignments[emotion.index()]
        } else {
            &assignments[0]
        };
        let train_idx = assignment.train_indices(fold);
        let test_idx = assignment.test_indices(fold);
        if !plan.stratified {
            test_len = Some(test_idx.len());
        }

        let column = labels.column(emotion);
        let train_labels: Vec<bool> = train_idx.iter().map(|&i| column[i]).collect();
        if train_labels.iter().all(|&l| l) || train_labels.iter().all(|&l| !l) {
            skipped.push(SkippedCell {
                emotion: emotion.name().into(),
                fold,
                reason: "single class in training rows".into(),
            });
            continue;
        }

        let train_matrix = features.select_rows(&train_idx);
        let prep = match fit_preprocess(plan, &train_matrix, &train_labels, emotion) {
            Ok(p) => p,
            Err(Error::TtestTooFewRows { class, rows, .. }) => {
                skipped.push(SkippedCell {
                    emotion: emotion.name().into(),
                    fold,
                    reason: format!("t-test needs 2 rows per class; {class} has {rows}"),
                });
                continue;
            }
            Err(e) => return Err(e),
        };

        let (train_rows, train_kinds, _) = prep.transform_matrix(&train_matrix)?;
        let test_matrix = features.select_rows(&test_idx);
        let (test_rows, _, _) = prep.transform_matrix(&test_matrix)?;
        let test_labels: Vec<bool> = test_idx.iter().map(|&i| column[i]).collect();

        emotions.push(EmotionContext {
            emotion,
            train_rows,
            train_kinds,
            train_labels,
            test_rows,
            test_labels,
        });
    }

    Ok(FoldContext {
        fold,
        emotions,
        skipped,
        test_len,
    })
}

/// Metrics of one (fold, initialization) pass.
struct PassResult {
    cells: Vec<EvalCell>,
    /// Per-test-row all-correct flags; None when an emotion was skipped or
    /// folds are per-emotion.
    subset_correct: Option<Vec<bool>>,
}

fn run_pass(
    plan: &ExperimentPlan,
    ctx: &FoldContext,
    init: usize,
    init_seed: u64,
) -> Result<PassResult> {
    let spec = ClassifierSpec {
        family: plan.classifier.family,
        seed: init_seed,
    };
    let mut cells = Vec::with_capacity(ctx.emotions.len());
    let mut subset_correct = ctx
        .test_len
        .filter(|_| ctx.emotions.len() == EMOTION_COUNT)
        .map(|len| vec![true; len]);

    for e in &ctx.emotions {
        let model = train_binary(&e.train_rows, &e.train_kinds, &e.train_labels, &spec, e.emotion)?;
        let probs: Vec<f64> = e.test_rows.iter().map(|r| model.predict_proba(r)).collect();
        let preds: Vec<bool> = probs.iter().map(|&p| p >= 0.5).collect();
        let acc = accuracy(&preds, &e.test_labels)?;
        let err = rmse(&probs, &e.test_labels)?;
        if let Some(ok) = subset_correct.as_mut() {
            for (slot, (p, t)) in preds.iter().zip(&e.test_labels).enumerate() {
                if p != t {
                    ok[slot] = false;
                }
            }
        }
        cells.push(EvalCell {
            emotion: e.emotion.name().into(),
            fold: ctx.fold,
            init,
            init_seed,
            accuracy: acc,
            rmse: err,
        });
    }
    Ok(PassResult { cells, subset_correct })
}

/// Run one experiment end to end.
pub fn run_experiment(
    plan: &ExperimentPlan,
    features: &FeatureMatrix,
    labels: &LabelMatrix,
) -> Result<EvalReport> {
    if features.track_ids != labels.track_ids {
        return Err(Error::Config(
            "feature and label matrices cover different tracks".into(),
        ));
    }
    let n = features.rows.len();

    let assignments: Vec<FoldAssignment> = if plan.stratified {
        Emotion::ALL
            .iter()
            .map(|e| {
                stratified_kfold(
                    &labels.column(*e),
                    plan.folds,
                    derive_seed(plan.master_seed, "folds-strat", e.index() as u64),
                )
            })
            .collect::<Result<_>>()?
    } else {
        vec![kfold_split(
            n,
            plan.folds,
            derive_seed(plan.master_seed, "folds", n as u64),
        )?]
    };

    let contexts: Vec<FoldContext> = (0..plan.folds)
        .into_par_iter()
        .map(|fold| build_fold_context(plan, features, labels, fold, &assignments))
        .collect::<Result<_>>()?;

    let stochastic = plan.classifier.family.is_stochastic();
    let trained_inits = if stochastic { plan.initializations } else { 1 };
    let init_seeds: Vec<u64> = (0..plan.initializations)
        .map(|i| derive_seed(plan.master_seed, "init", i as u64))
        .collect();

    let pass_jobs: Vec<(usize, usize)> = (0..plan.folds)
        .flat_map(|f| (0..trained_inits).map(move |i| (f, i)))
        .collect();
    let passes: Vec<PassResult> = pass_jobs
        .par_iter()
        .map(|&(fold, init)| run_pass(plan, &contexts[fold], init, init_seeds[init]))
        .collect::<Result<_>>()?;

    // Assemble cells; a deterministic family's single pass per fold is
    // replicated across the remaining initializations (zero variance).
    let mut cells = Vec::new();
    let mut subset_rates = Vec::new();
    for (job, pass) in pass_jobs.iter().zip(&passes) {
        let replications: Vec<usize> = if stochastic {
            vec![job.1]
        } else {
            (0..plan.initializations).collect()
        };
        for &init in &replications {
            for cell in &pass.cells {
                cells.push(EvalCell {
                    init,
                    init_seed: init_seeds[init],
                    ..cell.clone()
                });
            }
            if let Some(flags) = &pass.subset_correct {
                subset_rates
                    .push(100.0 * flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64);
            }
        }
    }
    cells.sort_by(|a, b| (&a.emotion, a.fold, a.init).cmp(&(&b.emotion, b.fold, b.init)));

    let skipped: Vec<SkippedCell> = contexts.into_iter().flat_map(|c| c.skipped).collect();

    // Per-emotion summaries over folds x initializations.
    let mut per_emotion = BTreeMap::new();
    for emotion in Emotion::ALL {
        let acc: Vec<f64> = cells
            .iter()
            .filter(|c| c.emotion == emotion.name())
            .map(|c| c.accuracy)
            .collect();
        if acc.is_empty() {
            continue;
        }
        let err: Vec<f64> = cells
            .iter()
            .filter(|c| c.emotion == emotion.name())
            .map(|c| c.rmse)
            .collect();
        per_emotion.insert(
            emotion.name().to_string(),
            EmotionSummary {
                accuracy: summarize(&acc),
                rmse: summarize(&err),
            },
        );
    }

    let emotion_acc_means: Vec<f64> = per_emotion.values().map(|s| s.accuracy.mean).collect();
    let emotion_rmse_means: Vec<f64> = per_emotion.values().map(|s| s.rmse.mean).collect();
    let acc_summary = summarize(&emotion_acc_means);
    let rmse_summary = summarize(&emotion_rmse_means);

    Ok(EvalReport {
        threshold: plan.threshold,
        preprocessing: plan.preprocessing.label(),
        family: plan.classifier.family.name().to_string(),
        folds: plan.folds,
        initializations: plan.initializations,
        master_seed: plan.master_seed,
        provenance: features.provenance.clone(),
        cells,
        skipped,
        per_emotion,
        class_mean_accuracy: acc_summary.mean,
        class_std_accuracy: acc_summary.std,
        class_mean_rmse: rmse_summary.mean,
        class_std_rmse: rmse_summary.std,
        subset_accuracy_nonpaper: if subset_rates.is_empty() {
            None
        } else {
            Some(summarize(&subset_rates))
        },
    })
}
