//! Classifier families and the binary-relevance multilabel wrapper.
//!
//! Nine independent binary models, one per emotion, each carrying the
//! preprocessing fitted for it (discretization cuts, selected columns) so a
//! trained [`MultilabelModel`] can score raw feature rows directly.

pub mod mlp;
pub mod nb;
pub mod platt;
mod standardize;
pub mod svm;

pub use mlp::{mlp_train, MlpConfig, MlpModel, MlpNet};
pub use nb::{ColumnKind, NaiveBayesModel};
pub use platt::{fit_sigmoid, sigmoid_prob};
pub use standardize::Standardizer;
pub use svm::{dual_objective, smo_solve, KernelSpec, SmoSolution, SvmConfig, SvmModel};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Emotion, EMOTION_COUNT};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::hash::derive_seed;
use crate::labeling::LabelMatrix;
use crate::preprocess::DiscretizationModel;

/// Classifier family plus hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    NaiveBayes,
    SvmSmo(SvmConfig),
    Mlp(MlpConfig),
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::NaiveBayes => "naive_bayes",
            FamilySpec::SvmSmo(_) => "svm_smo",
            FamilySpec::Mlp(_) => "mlp",
        }
    }

    /// Whether training has any seed-dependent component.
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, FamilySpec::NaiveBayes)
    }
}

/// Full training specification; every stochastic component derives from
/// `seed`, so identical spec + identical data give identical models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub family: FamilySpec,
    #[serde(default)]
    pub seed: u64,
}

/// One-hot expansion of categorical (discretized-interval) columns.
///
/// Margin and gradient learners treat inputs numerically, so interval
/// indices are binarized first: arity 2 stays a single 0/1 column, arity
/// k > 2 becomes k indicators (one threshold per interval is then
/// linearly representable). Continuous columns pass through.
pub fn one_hot_row(row: &[f64], kinds: &[ColumnKind]) -> Vec<f64> {
    let mut out = Vec::with_capacity(row.len());
    for (v, kind) in row.iter().zip(kinds) {
        match kind {
            ColumnKind::Continuous | ColumnKind::Categorical { arity: 0..=2 } => out.push(*v),
            ColumnKind::Categorical { arity } => {
                let hit = (*v as usize).min(arity - 1);
                for k in 0..*arity {
                    out.push(if k == hit { 1.0 } else { 0.0 });
                }
            }
        }
    }
    out
}

fn one_hot_rows(rows: &[Vec<f64>], kinds: &[ColumnKind]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| one_hot_row(r, kinds)).collect()
}

/// One trained binary classifier. Margin/gradient families carry the
/// column kinds so categorical inputs are one-hot encoded at prediction
/// time exactly as during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinaryModel {
    NaiveBayes(NaiveBayesModel),
    Svm {
        kinds: Vec<ColumnKind>,
        model: SvmModel,
    },
    Mlp {
        kinds: Vec<ColumnKind>,
        model: MlpModel,
    },
}

impl BinaryModel {
    /// Probability of the positive class for a row already shaped for this
    /// model (after its emotion's preprocessing).
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        match self {
            BinaryModel::NaiveBayes(m) => m.predict_proba(row),
            BinaryModel::Svm { kinds, model } => model.predict_proba(&one_hot_row(row, kinds)),
            BinaryModel::Mlp { kinds, model } => model.predict_proba(&one_hot_row(row, kinds)),
        }
    }
}

/// Preprocessing bound to one emotion's model: optional discretization
/// (fitted on that emotion's training labels) followed by an optional
/// column subset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmotionPreprocess {
    pub discretizer: Option<DiscretizationModel>,
    pub selected: Option<Vec<String>>,
}

impl EmotionPreprocess {
    /// Shape a full feature matrix into the rows and column kinds the inner
    /// model consumes.
    pub fn transform_matrix(
        &self,
        matrix: &FeatureMatrix,
    ) -> Result<(Vec<Vec<f64>>, Vec<ColumnKind>, Vec<String>)> {
        let (columns, rows, kinds): (Vec<String>, Vec<Vec<f64>>, Vec<ColumnKind>) =
            match &self.discretizer {
                Some(model) => {
                    let discrete = model.apply(matrix)?;
                    let kinds = discrete
                        .arities
                        .iter()
                        .map(|&a| ColumnKind::Categorical { arity: a })
                        .collect();
                    (
                        discrete.columns.clone(),
                        discrete
                            .rows
                            .iter()
                            .map(|r| r.iter().map(|&v| v as f64).collect())
                            .collect(),
                        kinds,
                    )
                }
                None => (
                    matrix.columns.clone(),
                    matrix.rows.clone(),
                    vec![ColumnKind::Continuous; matrix.columns.len()],
                ),
            };

        match &self.selected {
            None => Ok((rows, kinds, columns)),
            Some(names) => {
                let indices: Vec<usize> = names
                    .iter()
                    .map(|n| {
                        columns
                            .iter()
                            .position(|c| c == n)
                            .ok_or_else(|| Error::MissingColumn(n.clone()))
                    })
                    .collect::<Result<_>>()?;
                let rows = rows
                    .iter()
                    .map(|r| indices.iter().map(|&i| r[i]).collect())
                    .collect();
                let kinds = indices.iter().map(|&i| kinds[i]).collect();
                Ok((rows, kinds, names.clone()))
            }
        }
    }

    /// Shape one raw feature row for the inner model. `expected` names the
    /// columns the model consumes (bound at training time); `columns` names
    /// the incoming row's layout. Errors name any missing column.
    pub fn transform_row(
        &self,
        expected: &[String],
        columns: &[String],
        row: &[f64],
    ) -> Result<Vec<f64>> {
        let lookup = |name: &String| -> Result<usize> {
            columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))
        };
        expected
            .iter()
            .map(|name| {
                let at = lookup(name)?;
                match &self.discretizer {
                    Some(model) => {
                        let col_in_model = model
                            .columns
                            .iter()
                            .position(|c| c == name)
                            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
                        Ok(model.interval_of(col_in_model, row[at]) as f64)
                    }
                    None => Ok(row[at]),
                }
            })
            .collect()
    }
}

/// One emotion's trained pipeline: preprocessing plus the binary model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionModel {
    pub emotion: Emotion,
    pub preprocess: EmotionPreprocess,
    /// Columns the inner model consumes, in order.
    pub columns: Vec<String>,
    pub model: BinaryModel,
}

/// Nine independent binary classifiers under binary relevance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilabelModel {
    pub format_version: u32,
    /// Consensus threshold of the label matrix the model was trained on.
    pub threshold: f64,
    /// Column names of the raw feature rows the model expects.
    pub feature_columns: Vec<String>,
    pub models: Vec<EmotionModel>,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Train one binary model on already-shaped rows.
pub fn train_binary(
    rows: &[Vec<f64>],
    kinds: &[ColumnKind],
    labels: &[bool],
    spec: &ClassifierSpec,
    emotion: Emotion,
) -> Result<BinaryModel> {
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::SingleClassEmotion(emotion.name().to_string()));
    }
    match &spec.family {
        FamilySpec::NaiveBayes => Ok(BinaryModel::NaiveBayes(NaiveBayesModel::train(
            rows, labels, kinds,
        )?)),
        FamilySpec::SvmSmo(config) => {
            let seed = derive_seed(spec.seed, "svm", emotion.index() as u64);
            let encoded = one_hot_rows(rows, kinds);
            Ok(BinaryModel::Svm {
                kinds: kinds.to_vec(),
                model: train_svm_calibrated(&encoded, labels, config, seed)?,
            })
        }
        FamilySpec::Mlp(config) => {
            let seed = derive_seed(spec.seed, "mlp", emotion.index() as u64);
            let encoded = one_hot_rows(rows, kinds);
            Ok(BinaryModel::Mlp {
                kinds: kinds.to_vec(),
                model: mlp_train(&encoded, labels, config, seed)?,
            })
        }
    }
}

/// SVM with Platt calibration fitted on an inner 80/20 split of the
/// training rows (falls back to training-set decision values when the
/// holdout degenerates), then refit on all rows.
pub fn train_svm_calibrated(
    rows: &[Vec<f64>],
    labels: &[bool],
    config: &SvmConfig,
    seed: u64,
) -> Result<SvmModel> {
    let standardizer = Standardizer::fit(rows);
    let z = standardizer.transform(rows);
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    let solution = smo_solve(&z, &y, config, seed)?;
    let mut model = SvmModel::from_solution(&z, &y, &solution, config.kernel, standardizer);

    // Inner split for calibration.
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "platt-split", 0));
    order.shuffle(&mut rng);
    let holdout_len = (rows.len() / 5).max(1);
    let (holdout, train) = order.split_at(holdout_len);

    // The holdout needs at least two of each class for a usable sigmoid
    // fit; otherwise calibrate on training decision values.
    let count = |idx: &[usize], value: bool| idx.iter().filter(|&&i| labels[i] == value).count();
    let holdout_ok = count(holdout, true) >= 2
        && count(holdout, false) >= 2
        && count(train, true) >= 1
        && count(train, false) >= 1;

    let (decision, calib_labels): (Vec<f64>, Vec<bool>) = if holdout_ok {
        let train_z: Vec<Vec<f64>> = train.iter().map(|&i| z[i].clone()).collect();
        let train_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let inner = smo_solve(&train_z, &train_y, config, derive_seed(seed, "platt-inner", 0))?;
        let identity = Standardizer {
            means: vec![0.0; z[0].len()],
            stds: vec![1.0; z[0].len()],
        };
        let inner_model =
            SvmModel::from_solution(&train_z, &train_y, &inner, config.kernel, identity);
        (
            holdout
                .iter()
                .map(|&i| inner_model.decision_value_standardized(&z[i]))
                .collect(),
            holdout.iter().map(|&i| labels[i]).collect(),
        )
    } else {
        // Degenerate holdout: calibrate on training decision values.
        (
            z.iter().map(|zi| model.decision_value_standardized(zi)).collect(),
            labels.to_vec(),
        )
    };

    model.platt = Some(fit_sigmoid(&decision, &calib_labels));
    Ok(model)
}

/// Binary-relevance training with no preprocessing (raw columns).
pub fn binary_relevance_train(
    features: &FeatureMatrix,
    labels: &LabelMatrix,
    spec: &ClassifierSpec,
) -> Result<MultilabelModel> {
    let raw = vec![EmotionPreprocess::default(); EMOTION_COUNT];
    binary_relevance_train_with(features, labels, spec, &raw)
}

/// Binary-relevance training with per-emotion preprocessing already fitted
/// (on these same rows or a superset — fold hygiene is the caller's job).
pub fn binary_relevance_train_with(
    features: &FeatureMatrix,
    labels: &LabelMatrix,
    spec: &ClassifierSpec,
    preprocess: &[EmotionPreprocess],
) -> Result<MultilabelModel> {
    if features.track_ids != labels.track_ids {
        return Err(Error::Config(
            "feature and label matrices cover different tracks".into(),
        ));
    }
    assert_eq!(preprocess.len(), EMOTION_COUNT);

    let mut models = Vec::with_capacity(EMOTION_COUNT);
    for emotion in Emotion::ALL {
        let prep = &preprocess[emotion.index()];
        let (rows, kinds, columns) = prep.transform_matrix(features)?;
        let truth = labels.column(emotion);
        let model = train_binary(&rows, &kinds, &truth, spec, emotion)?;
        models.push(EmotionModel {
            emotion,
            preprocess: prep.clone(),
            columns,
            model,
        });
    }

    Ok(MultilabelModel {
        format_version: MODEL_FORMAT_VERSION,
        threshold: labels.threshold,
        feature_columns: features.columns.clone(),
        models,
    })
}

/// Per-emotion probabilities and 0.5-thresholded binary predictions for one
/// raw feature row.
pub fn predict(
    model: &MultilabelModel,
    columns: &[String],
    row: &[f64],
) -> Result<([f64; EMOTION_COUNT], [bool; EMOTION_COUNT])> {
    let mut probabilities = [0.0; EMOTION_COUNT];
    let mut predictions = [false; EMOTION_COUNT];
    for emotion_model in &model.models {
        let shaped =
            emotion_model
                .preprocess
                .transform_row(&emotion_model.columns, columns, row)?;
        let p = emotion_model.model.predict_proba(&shaped);
        let i = emotion_model.emotion.index();
        probabilities[i] = p;
        predictions[i] = p >= 0.5;
    }
    Ok((probabilities, predictions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::MatrixProvenance;
    use crate::labeling::BoundaryRule;

    fn feature_matrix(n: usize, informative: impl Fn(usize) -> f64) -> FeatureMatrix {
        FeatureMatrix {
            track_ids: (1..=n as u32).collect(),
            columns: vec!["signal__mean".into(), "noise__mean".into()],
            rows: (0..n)
                .map(|i| vec![informative(i), ((i * 7919) % 13) as f64 / 13.0])
                .collect(),
            provenance: MatrixProvenance {
                corpus_hash: "t".into(),
                spec_hash: "t".into(),
                set_hash: "t".into(),
            },
        }
    }

    fn labels_from_feature(features: &FeatureMatrix) -> LabelMatrix {
        // Every emotion equals (signal >= 0.5).
        LabelMatrix {
            track_ids: features.track_ids.clone(),
            values: features
                .rows
                .iter()
                .map(|r| [r[0] >= 0.5; EMOTION_COUNT])
                .collect(),
            threshold: 0.3,
            boundary: BoundaryRule::GreaterEqual,
        }
    }

    fn specs() -> Vec<ClassifierSpec> {
        vec![
            ClassifierSpec { family: FamilySpec::NaiveBayes, seed: 1 },
            ClassifierSpec { family: FamilySpec::SvmSmo(SvmConfig::default()), seed: 1 },
            ClassifierSpec {
                family: FamilySpec::Mlp(MlpConfig { hidden: 4, epochs: 300, ..MlpConfig::default() }),
                seed: 1,
            },
        ]
    }

    #[test]
    fn emotion_equal_to_feature_trains_to_perfect_accuracy() {
        let features = feature_matrix(24, |i| (i % 2) as f64);
        let labels = labels_from_feature(&features);
        for spec in specs() {
            let model = binary_relevance_train(&features, &labels, &spec).unwrap();
            let mut correct = 0;
            for (row, truth) in features.rows.iter().zip(&labels.values) {
                let (_, preds) = predict(&model, &features.columns, row).unwrap();
                if preds == *truth {
                    correct += 1;
                }
            }
            assert_eq!(correct, features.rows.len(), "family {}", spec.family.name());
        }
    }

    #[test]
    fn single_class_emotion_names_the_emotion() {
        let features = feature_matrix(10, |i| i as f64);
        let mut labels = labels_from_feature(&features);
        for row in &mut labels.values {
            row[Emotion::Tension.index()] = false;
        }
        let err = binary_relevance_train(&features, &labels, &specs()[0]).unwrap_err();
        match err {
            Error::SingleClassEmotion(name) => assert_eq!(name, "tension"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn probabilities_in_unit_interval_and_predictions_track_half() {
        let features = feature_matrix(30, |i| ((i * 31) % 17) as f64 / 17.0);
        let labels = labels_from_feature(&features);
        for spec in specs() {
            let model = binary_relevance_train(&features, &labels, &spec).unwrap();
            for row in &features.rows {
                let (probs, preds) = predict(&model, &features.columns, row).unwrap();
                for (p, &b) in probs.iter().zip(&preds) {
                    assert!((0.0..=1.0).contains(p));
                    assert_eq!(b, *p >= 0.5);
                }
            }
        }
    }

    #[test]
    fn missing_column_is_named() {
        let features = feature_matrix(12, |i| (i % 2) as f64);
        let labels = labels_from_feature(&features);
        let model = binary_relevance_train(&features, &labels, &specs()[0]).unwrap();
        let err = predict(&model, &["wrong__mean".into(), "noise__mean".into()], &[1.0, 0.0])
            .unwrap_err();
        match err {
            Error::MissingColumn(name) => assert_eq!(name, "signal__mean"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn permuting_one_emotion_changes_only_that_model() {
        let features = feature_matrix(20, |i| ((i * 13) % 20) as f64 / 20.0);
        let mut labels = labels_from_feature(&features);
        // Vary labels per emotion so a permutation is visible.
        for (i, row) in labels.values.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().enumerate() {
                *cell = (i + k) % 3 == 0;
            }
        }
        let spec = ClassifierSpec {
            family: FamilySpec::Mlp(MlpConfig { hidden: 3, epochs: 40, ..MlpConfig::default() }),
            seed: 9,
        };
        let base = binary_relevance_train(&features, &labels, &spec).unwrap();

        let mut permuted = labels.clone();
        let k = Emotion::Calmness.index();
        let n = permuted.values.len();
        for i in 0..n {
            permuted.values[i][k] = labels.values[(i + 7) % n][k];
        }
        let retrained = binary_relevance_train(&features, &permuted, &spec).unwrap();

        for (a, b) in base.models.iter().zip(&retrained.models) {
            if a.emotion == Emotion::Calmness {
                assert_ne!(a.model, b.model, "permuted emotion must change");
            } else {
                assert_eq!(a.model, b.model, "{} must be unchanged", a.emotion);
            }
        }
    }

    #[test]
    fn model_serializes_with_format_version() {
        let features = feature_matrix(12, |i| (i % 2) as f64);
        let labels = labels_from_feature(&features);
        let model = binary_relevance_train(&features, &labels, &specs()[0]).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        assert!(json.contains("\"format_version\":1"));
        let back: MultilabelModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn classifier_spec_json_round_trip() {
        for spec in specs() {
            let json = serde_json::to_string(&spec).unwrap();
            let back: ClassifierSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(spec, back);
        }
        let json = serde_json::to_string(&specs()[1]).unwrap();
        assert!(json.contains("\"family\":\"svm_smo\""), "{json}");
    }
}
