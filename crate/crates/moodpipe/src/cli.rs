//! Command-line driver: JSON configuration with flag overrides, staged
//! artifacts with content-hash caching, and the full evaluation suite.
//!
//! Stages chain through manifests: each writes `<stage>.manifest.json`
//! recording its input hashes and output file hashes; a rerun with matching
//! hashes is a cache hit and recomputes nothing. Every artifact embeds the
//! config hash and its stage input hashes, and `report` refuses to mix
//! artifacts whose hashes disagree.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    self, annotations_to_csv, audio_path, load_annotations, validate_corpus, Emotion,
};
use crate::error::{Error, Result};
use crate::eval::{
    format_tables, report::plot_data_csv, reports_to_csv, run_experiment, EvalReport,
    ExperimentPlan, Preprocessing,
};
use crate::features::{
    extract_from_dir, matrix_from_binary, matrix_to_binary, matrix_to_csv, BaseFeatureSet,
    FeatureMatrix, FrameSpec,
};
use crate::hash::sha256_hex;
use crate::labeling::{
    apply_consensus_with, build_score_matrix, distribution_stats, labels_to_csv, plateau_candidates,
    scores_to_csv, threshold_sweep, BoundaryRule, LabelMatrix, DEFAULT_FLATNESS_TOL,
};
use crate::learn::{
    binary_relevance_train_with, ClassifierSpec, EmotionPreprocess, FamilySpec, MlpConfig,
    MultilabelModel, SvmConfig,
};
use crate::preprocess::{
    cfs_select, ttest_select, union_selection, CfsData, DiscretizationModel, MeritVariant,
    SelectionMethod, SelectionResult, VarianceModel,
};
use crate::synth::{write_corpus, SynthSpec};

/// Full pipeline configuration; serializable, hash-embedded in artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub annotations: PathBuf,
    pub audio_dir: PathBuf,
    pub output_dir: PathBuf,
    pub frame: FrameSpec,
    /// Base feature names; empty = the canonical 26-extractor set.
    pub features: Vec<String>,
    pub thresholds: Vec<f64>,
    pub strict_greater: bool,
    pub preprocessing: Vec<String>,
    pub families: Vec<String>,
    pub svm: SvmConfig,
    pub mlp: MlpConfig,
    pub folds: usize,
    pub initializations: usize,
    pub master_seed: u64,
    pub stratified: bool,
    pub merit_variant: MeritVariant,
    pub variance_model: VarianceModel,
    pub jobs: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            annotations: PathBuf::from("annotations.csv"),
            audio_dir: PathBuf::from("audio"),
            output_dir: PathBuf::from("out"),
            frame: FrameSpec::default(),
            features: Vec::new(),
            thresholds: vec![0.25, 0.30],
            strict_greater: false,
            preprocessing: vec!["raw".into(), "cfs".into(), "discr+cfs".into()],
            families: vec!["naive_bayes".into(), "svm_smo".into(), "mlp".into()],
            svm: SvmConfig::default(),
            mlp: MlpConfig::default(),
            folds: 4,
            initializations: 20,
            master_seed: 42,
            stratified: false,
            merit_variant: MeritVariant::Paper,
            variance_model: VarianceModel::Welch,
            jobs: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }

    pub fn feature_set(&self) -> Result<BaseFeatureSet> {
        if self.features.is_empty() {
            Ok(BaseFeatureSet::canonical())
        } else {
            BaseFeatureSet::from_names(&self.features)
                .ok_or_else(|| Error::Config("unknown or duplicate feature name".into()))
        }
    }

    pub fn boundary(&self) -> BoundaryRule {
        if self.strict_greater {
            BoundaryRule::StrictGreater
        } else {
            BoundaryRule::GreaterEqual
        }
    }

    pub fn preprocessing_methods(&self) -> Result<Vec<Preprocessing>> {
        self.preprocessing
            .iter()
            .map(|s| {
                Preprocessing::parse(s)
                    .ok_or_else(|| Error::Config(format!("unknown preprocessing '{s}'")))
            })
            .collect()
    }

    pub fn family_specs(&self) -> Result<Vec<FamilySpec>> {
        self.families.iter().map(|f| self.family_spec(f)).collect()
    }

    pub fn family_spec(&self, name: &str) -> Result<FamilySpec> {
        match name.trim().to_lowercase().as_str() {
            "naive_bayes" | "nb" | "bayes" => Ok(FamilySpec::NaiveBayes),
            "svm_smo" | "svm" | "smo" => Ok(FamilySpec::SvmSmo(self.svm)),
            "mlp" | "ann" => Ok(FamilySpec::Mlp(self.mlp)),
            other => Err(Error::Config(format!("unknown classifier family '{other}'"))),
        }
    }

    /// Cache directory: `MOODPIPE_CACHE` overrides the output dir.
    pub fn cache_dir(&self) -> PathBuf {
        match std::env::var_os("MOODPIPE_CACHE") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

fn format_threshold(t: f64) -> String {
    format!("{}", t * 100.0).replace('.', "_")
}

/// Per-stage manifest enabling cache hits and provenance checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    stage: String,
    config_hash: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Manifest {
    fn path(cache: &Path, stage: &str) -> PathBuf {
        cache.join(format!("{stage}.manifest.json"))
    }

    fn load(cache: &Path, stage: &str) -> Option<Manifest> {
        let text = std::fs::read_to_string(Manifest::path(cache, stage)).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn save(&self, cache: &Path) -> Result<()> {
        let path = Manifest::path(cache, &self.stage);
        write_file(&path, serde_json::to_string_pretty(self).expect("manifest serializes"))
    }

    /// True when inputs match and every recorded output still exists with
    /// the recorded content.
    fn is_fresh(&self, cache: &Path, inputs: &BTreeMap<String, String>) -> bool {
        if &self.inputs != inputs {
            return false;
        }
        self.outputs.iter().all(|(name, hash)| {
            std::fs::read(cache.join(name))
                .map(|bytes| sha256_hex(&bytes) == *hash)
                .unwrap_or(false)
        })
    }
}

fn write_file(path: &Path, content: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, content.as_ref()).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Write outputs and the stage manifest in one step.
fn finish_stage(
    cache: &Path,
    stage: &str,
    config_hash: &str,
    inputs: BTreeMap<String, String>,
    outputs: Vec<(String, Vec<u8>)>,
) -> Result<()> {
    let mut recorded = BTreeMap::new();
    for (name, bytes) in &outputs {
        write_file(&cache.join(name), bytes)?;
        recorded.insert(name.clone(), sha256_hex(bytes));
    }
    Manifest {
        stage: stage.to_string(),
        config_hash: config_hash.to_string(),
        inputs,
        outputs: recorded,
    }
    .save(cache)
}

/// JSON wrapper adding provenance to a serializable artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct WithProvenance<T> {
    config_hash: String,
    inputs: BTreeMap<String, String>,
    #[serde(flatten)]
    artifact: T,
}

// ---------------------------------------------------------------------------
// Command-line surface

#[derive(Parser, Debug)]
#[command(
    name = "moodpipe",
    about = "Multilabel music-emotion-recognition pipeline",
    version
)]
pub struct Cli {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output/cache directory.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads (default: available cores). Outputs are identical
    /// for any setting.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct IngestArgs {
    /// Annotation CSV path.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Directory of `<track_id>.wav` files.
    #[arg(long)]
    pub audio_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct LabelsArgs {
    /// Consensus threshold(s) in (0,1); default from config.
    #[arg(long = "threshold")]
    pub thresholds: Vec<f64>,
    /// Emit the threshold sweep and plateau candidates.
    #[arg(long)]
    pub sweep: bool,
    /// Validate labels with score > threshold instead of >=.
    #[arg(long)]
    pub strict_greater: bool,
}

#[derive(Args, Debug, Default)]
pub struct EvalArgs {
    /// Run the full preprocessing x classifier x threshold cross.
    #[arg(long)]
    pub paper_suite: bool,
    /// Restrict classifier families (comma-separated: nb,svm,mlp).
    #[arg(long, value_delimiter = ',')]
    pub families: Vec<String>,
    /// Restrict preprocessing methods.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Restrict thresholds.
    #[arg(long = "threshold")]
    pub thresholds: Vec<f64>,
}

#[derive(Args, Debug, Default)]
pub struct ReportArgs {
    /// Also write per-emotion bar-chart data per threshold.
    #[arg(long)]
    pub emit_plots: bool,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory to create the corpus in.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 400)]
    pub tracks: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Noiseless, separable corpus instead of the noisy default.
    #[arg(long)]
    pub clean: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate annotations against the audio directory and cache the
    /// canonical corpus.
    Ingest(IngestArgs),
    /// Compute emotion scores, consensus labels and distribution stats.
    Labels(LabelsArgs),
    /// Extract the track-level feature matrix.
    Extract,
    /// Fit discretization/selection on the full corpus (reference
    /// artifacts; evaluation refits per fold).
    Preprocess,
    /// Train final models on all rows.
    Train,
    /// Cross-validated evaluation.
    Eval(EvalArgs),
    /// Render report tables from evaluation artifacts.
    Report(ReportArgs),
    /// Ingest through report in one run.
    Pipeline(EvalArgs),
    /// Generate a synthetic test corpus.
    Synth(SynthArgs),
}

/// Entry point returning a process exit code (0 ok, 1 internal, 2 usage).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };

    let mut config = match &cli.config {
        Some(path) => match PipelineConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
        None => PipelineConfig::default(),
    };
    if let Some(dir) = &cli.output_dir {
        config.output_dir = dir.clone();
    }
    if cli.jobs.is_some() {
        config.jobs = cli.jobs;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };

    let outcome = pool.install(|| dispatch(&cli.command, &mut config));
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command, config: &mut PipelineConfig) -> Result<()> {
    match command {
        Command::Ingest(args) => {
            apply_ingest_args(config, args);
            cmd_ingest(config).map(|_| ())
        }
        Command::Labels(args) => {
            apply_labels_args(config, args);
            cmd_labels(config, args.sweep)
        }
        Command::Extract => cmd_extract(config).map(|_| ()),
        Command::Preprocess => cmd_preprocess(config),
        Command::Train => cmd_train(config),
        Command::Eval(args) => {
            cmd_eval(config, args).map(|_| ())
        }
        Command::Report(args) => cmd_report(config, args.emit_plots),
        Command::Pipeline(args) => {
            cmd_ingest(config)?;
            cmd_labels(config, true)?;
            cmd_extract(config)?;
            cmd_preprocess(config)?;
            cmd_eval(config, args)?;
            cmd_report(config, true)
        }
        Command::Synth(args) => {
            let spec = if args.clean {
                SynthSpec::separable(args.tracks, args.seed)
            } else {
                SynthSpec {
                    tracks: args.tracks,
                    ..SynthSpec::noisy_default(args.seed)
                }
            };
            write_corpus(&spec, &args.out)?;
            info!("synth corpus written to {}", args.out.display());
            Ok(())
        }
    }
}

fn apply_ingest_args(config: &mut PipelineConfig, args: &IngestArgs) {
    if let Some(a) = &args.annotations {
        config.annotations = a.clone();
    }
    if let Some(d) = &args.audio_dir {
        config.audio_dir = d.clone();
    }
}

fn apply_labels_args(config: &mut PipelineConfig, args: &LabelsArgs) {
    if !args.thresholds.is_empty() {
        config.thresholds = args.thresholds.clone();
    }
    if args.strict_greater {
        config.strict_greater = true;
    }
}

// ---------------------------------------------------------------------------
// Stages

/// Ingest: validate inputs, cache the canonical annotation CSV and the
/// corpus report.
pub fn cmd_ingest(config: &PipelineConfig) -> Result<corpus::CorpusReport> {
    if !config.audio_dir.is_dir() {
        return Err(Error::Config(format!(
            "audio dir {} does not exist",
            config.audio_dir.display()
        )));
    }
    let cache = config.cache_dir();
    let config_hash = config.config_hash();

    let annotation_bytes = read_file(&config.annotations)?;
    let mut inputs = BTreeMap::new();
    inputs.insert("annotations".into(), sha256_hex(&annotation_bytes));
    // Hash all audio content once here; later stages chain on this value.
    let table = load_annotations(&config.annotations)?;
    let mut audio_parts: Vec<(String, String)> = Vec::new();
    for &track in &table.track_ids {
        let path = audio_path(&config.audio_dir, track);
        if path.is_file() {
            audio_parts.push((track.to_string(), sha256_hex(&read_file(&path)?)));
        }
    }
    let audio_refs: Vec<(&str, &str)> = audio_parts
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    inputs.insert("audio".into(), crate::hash::combine(&audio_refs));

    if let Some(manifest) = Manifest::load(&cache, "ingest") {
        if manifest.config_hash == config_hash && manifest.is_fresh(&cache, &inputs) {
            info!("cache hit: ingest");
            let text = std::fs::read_to_string(cache.join("corpus_report.json"))
                .map_err(|e| Error::io(cache.join("corpus_report.json"), e))?;
            let wrapped: WithProvenance<corpus::CorpusReport> =
                serde_json::from_str(&text).map_err(|e| Error::Json {
                    path: "corpus_report.json".into(),
                    source: e,
                })?;
            return Ok(wrapped.artifact);
        }
    }

    let report = validate_corpus(&table, &config.audio_dir);
    if !report.missing_audio.is_empty() {
        warn!(
            "{} annotated track(s) have no audio file: {:?}...",
            report.missing_audio.len(),
            &report.missing_audio[..report.missing_audio.len().min(8)]
        );
    }

    let provenance = format!(
        "config={config_hash} annotations={} audio={}",
        inputs["annotations"], inputs["audio"]
    );
    let mut csv = format!("# {provenance}\n");
    csv.push_str(&annotations_to_csv(&table));

    let wrapped = WithProvenance {
        config_hash: config_hash.clone(),
        inputs: inputs.clone(),
        artifact: report.clone(),
    };
    finish_stage(
        &cache,
        "ingest",
        &config_hash,
        inputs,
        vec![
            ("corpus.csv".into(), csv.into_bytes()),
            (
                "corpus_report.json".into(),
                serde_json::to_vec_pretty(&wrapped).expect("report serializes"),
            ),
        ],
    )?;
    info!(
        "ingest: {} tracks, {} annotations, {} missing audio",
        report.track_count,
        report.annotation_count,
        report.missing_audio.len()
    );
    Ok(report)
}

fn require_manifest(cache: &Path, stage: &str) -> Result<Manifest> {
    Manifest::load(cache, stage).ok_or_else(|| Error::MissingArtifact(format!("{stage} manifest")))
}

fn load_corpus_table(cache: &Path) -> Result<corpus::AnnotationTable> {
    let path = cache.join("corpus.csv");
    if !path.is_file() {
        return Err(Error::MissingArtifact("corpus.csv".into()));
    }
    load_annotations(&path)
}

/// Labels: score matrix, per-threshold label matrices, distribution stats,
/// and optionally the sweep + plateau candidates.
pub fn cmd_labels(config: &PipelineConfig, sweep: bool) -> Result<()> {
    let cache = config.cache_dir();
    let config_hash = config.config_hash();
    let ingest = require_manifest(&cache, "ingest")?;

    for &t in &config.thresholds {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidThreshold(t));
        }
    }

    let corpus_csv = read_file(&cache.join("corpus.csv"))?;
    let mut inputs = BTreeMap::new();
    inputs.insert("corpus_csv".into(), sha256_hex(&corpus_csv));
    inputs.insert(
        "labeling_config".into(),
        sha256_hex(
            format!(
                "thresholds={:?};boundary={:?};sweep={sweep}",
                config.thresholds,
                config.boundary()
            )
            .as_bytes(),
        ),
    );
    inputs.insert("ingest_audio".into(), ingest.inputs["audio"].clone());

    if let Some(manifest) = Manifest::load(&cache, "labels") {
        if manifest.config_hash == config_hash && manifest.is_fresh(&cache, &inputs) {
            info!("cache hit: labels");
            return Ok(());
        }
    }

    let table = load_corpus_table(&cache)?;
    let scores = build_score_matrix(&table)?;
    let provenance = format!("config={config_hash} corpus={}", inputs["corpus_csv"]);

    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    outputs.push((
        "scores.csv".into(),
        format!("# {provenance}\n{}", scores_to_csv(&scores)).into_bytes(),
    ));

    for &threshold in &config.thresholds {
        let tag = format_threshold(threshold);
        let labels = apply_consensus_with(&scores, threshold, config.boundary())?;
        outputs.push((
            format!("labels_{tag}.csv"),
            format!("# {provenance}\n{}", labels_to_csv(&labels)).into_bytes(),
        ));
        let stats = distribution_stats(&scores, threshold)?;
        let wrapped = WithProvenance {
            config_hash: config_hash.clone(),
            inputs: inputs.clone(),
            artifact: stats,
        };
        outputs.push((
            format!("dist_stats_{tag}.json"),
            serde_json::to_vec_pretty(&wrapped).expect("stats serialize"),
        ));
        info!("labels @ {threshold}: written labels_{tag}.csv");
    }

    if sweep {
        let mut csv = format!("# {provenance}\nthreshold,mean_labels_per_track\n");
        for (t, mean) in threshold_sweep(&scores) {
            csv.push_str(&format!("{t},{mean}\n"));
        }
        outputs.push(("sweep.csv".into(), csv.into_bytes()));
        let candidates = plateau_candidates(&scores, DEFAULT_FLATNESS_TOL);
        let wrapped = WithProvenance {
            config_hash: config_hash.clone(),
            inputs: inputs.clone(),
            artifact: serde_json::json!({ "flatness_tol": DEFAULT_FLATNESS_TOL, "candidates": candidates }),
        };
        outputs.push((
            "plateaus.json".into(),
            serde_json::to_vec_pretty(&wrapped).expect("plateaus serialize"),
        ));
    }

    finish_stage(&cache, "labels", &config_hash, inputs, outputs)
}

/// Extract: feature matrix over tracks that have audio, as CSV + binary
/// cache.
pub fn cmd_extract(config: &PipelineConfig) -> Result<FeatureMatrix> {
    let cache = config.cache_dir();
    let config_hash = config.config_hash();
    let ingest = require_manifest(&cache, "ingest")?;
    let set = config.feature_set()?;
    config.frame.validate()?;

    let mut inputs = BTreeMap::new();
    inputs.insert("audio".into(), ingest.inputs["audio"].clone());
    inputs.insert("frame_spec".into(), config.frame.config_hash());
    inputs.insert("feature_set".into(), set.config_hash());

    if let Some(manifest) = Manifest::load(&cache, "extract") {
        if manifest.config_hash == config_hash && manifest.is_fresh(&cache, &inputs) {
            info!("cache hit: extract");
            return matrix_from_binary(&read_file(&cache.join("features.bin"))?);
        }
    }

    let table = load_corpus_table(&cache)?;
    let with_audio: Vec<u32> = table
        .track_ids
        .iter()
        .copied()
        .filter(|&id| audio_path(&config.audio_dir, id).is_file())
        .collect();
    if with_audio.is_empty() {
        return Err(Error::Config("no annotated track has an audio file".into()));
    }
    if with_audio.len() < table.track_ids.len() {
        warn!(
            "extracting {} of {} tracks (missing audio skipped)",
            with_audio.len(),
            table.track_ids.len()
        );
    }

    let matrix = extract_from_dir(&with_audio, &config.audio_dir, &config.frame, &set)?;
    let constant = matrix.constant_columns();
    if !constant.is_empty() {
        warn!("constant feature columns (dead extractors?): {constant:?}");
    }

    finish_stage(
        &cache,
        "extract",
        &config_hash,
        inputs,
        vec![
            ("features.bin".into(), matrix_to_binary(&matrix)),
            ("features.csv".into(), matrix_to_csv(&matrix).into_bytes()),
        ],
    )?;
    info!(
        "extract: {} tracks x {} columns",
        matrix.rows.len(),
        matrix.columns.len()
    );
    Ok(matrix)
}

/// Load the cached feature matrix, the corpus table, and the label matrix
/// for one threshold, row-aligned to the feature matrix.
fn load_aligned(
    config: &PipelineConfig,
    threshold: f64,
) -> Result<(FeatureMatrix, LabelMatrix)> {
    let cache = config.cache_dir();
    let bin = cache.join("features.bin");
    if !bin.is_file() {
        return Err(Error::MissingArtifact("feature cache (features.bin)".into()));
    }
    let matrix = matrix_from_binary(&read_file(&bin)?)?;
    let table = load_corpus_table(&cache)?;
    let scores = build_score_matrix(&table)?;
    let labels = apply_consensus_with(&scores, threshold, config.boundary())?;

    // Row-align labels to the extracted tracks.
    let indices: Vec<usize> = matrix
        .track_ids
        .iter()
        .map(|id| {
            labels
                .track_ids
                .binary_search(id)
                .map_err(|_| Error::UnknownTrack(*id))
        })
        .collect::<Result<_>>()?;
    let aligned = LabelMatrix {
        track_ids: matrix.track_ids.clone(),
        values: indices.iter().map(|&i| labels.values[i]).collect(),
        threshold: labels.threshold,
        boundary: labels.boundary,
    };
    Ok((matrix, aligned))
}

/// Fit discretization + both selection strategies per emotion on the full
/// corpus, as reference artifacts.
pub fn cmd_preprocess(config: &PipelineConfig) -> Result<()> {
    let cache = config.cache_dir();
    let config_hash = config.config_hash();
    let extract = require_manifest(&cache, "extract")?;

    let mut inputs = BTreeMap::new();
    inputs.insert(
        "features_bin".into(),
        sha256_hex(&read_file(&cache.join("features.bin"))?),
    );
    inputs.insert("extract_audio".into(), extract.inputs["audio"].clone());
    inputs.insert(
        "preprocess_config".into(),
        sha256_hex(
            format!(
                "thresholds={:?};methods={:?};merit={:?};variance={:?}",
                config.thresholds, config.preprocessing, config.merit_variant, config.variance_model
            )
            .as_bytes(),
        ),
    );

    if let Some(manifest) = Manifest::load(&cache, "preprocess") {
        if manifest.config_hash == config_hash && manifest.is_fresh(&cache, &inputs) {
            info!("cache hit: preprocess");
            return Ok(());
        }
    }

    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    for &threshold in &config.thresholds {
        let tag = format_threshold(threshold);
        let (matrix, labels) = load_aligned(config, threshold)?;

        for method in config.preprocessing_methods()? {
            let artifact = fit_reference_preprocess(config, &matrix, &labels, method)?;
            let wrapped = WithProvenance {
                config_hash: config_hash.clone(),
                inputs: inputs.clone(),
                artifact,
            };
            outputs.push((
                format!("preprocess_{tag}_{}.json", method.label().replace(['(', ')'], "_")),
                serde_json::to_vec_pretty(&wrapped).expect("selection serializes"),
            ));
        }
    }

    finish_stage(&cache, "preprocess", &config_hash, inputs, outputs)?;
    info!("preprocess: reference selection artifacts written");
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PreprocessArtifact {
    threshold: f64,
    method: String,
    /// D(A,C) per emotion per column is large; the dissimilarity of each
    /// SELECTED column against its emotion is reported instead.
    selection: Option<SelectionResult>,
    discretization: Option<Vec<DiscretizationModel>>,
    /// Reporting metric only: mean dissimilarity of selected columns.
    mean_selected_dissimilarity: Option<f64>,
}

fn fit_reference_preprocess(
    config: &PipelineConfig,
    matrix: &FeatureMatrix,
    labels: &LabelMatrix,
    method: Preprocessing,
) -> Result<PreprocessArtifact> {
    use crate::preprocess::dissimilarity;

    let mut per_emotion: Vec<(Emotion, Vec<String>)> = Vec::new();
    let mut discretizers: Vec<DiscretizationModel> = Vec::new();
    let mut dissim_values: Vec<f64> = Vec::new();

    let selection_method = match method {
        Preprocessing::Raw => None,
        Preprocessing::Cfs | Preprocessing::DiscrCfs => Some(SelectionMethod::Cfs {
            variant: config.merit_variant,
        }),
        Preprocessing::Ttest { p } | Preprocessing::DiscrTtest { p } => Some(SelectionMethod::Ttest {
            p_value: p,
            variance: config.variance_model,
        }),
    };

    for emotion in Emotion::ALL {
        let column = labels.column(emotion);
        if column.iter().all(|&l| l) || column.iter().all(|&l| !l) {
            per_emotion.push((emotion, Vec::new()));
            continue;
        }
        let selected = match method {
            Preprocessing::Raw => matrix.columns.clone(),
            Preprocessing::Cfs => {
                cfs_select(&CfsData::Continuous(matrix), &column, config.merit_variant)
            }
            Preprocessing::DiscrCfs => {
                let model = DiscretizationModel::fit(matrix, &column, emotion.name())?;
                let discrete = model.apply(matrix)?;
                let names =
                    cfs_select(&CfsData::Discrete(&discrete), &column, config.merit_variant);
                // Reporting metric: D(selected column, class).
                let class: Vec<usize> = column.iter().map(|&b| b as usize).collect();
                for name in &names {
                    let at = discrete.columns.iter().position(|c| c == name).unwrap();
                    let col: Vec<usize> = discrete.rows.iter().map(|r| r[at]).collect();
                    dissim_values.push(dissimilarity(&col, &class)?);
                }
                discretizers.push(model);
                names
            }
            Preprocessing::Ttest { p } => {
                ttest_select(matrix, &column, p, config.variance_model, emotion.name())?
            }
            Preprocessing::DiscrTtest { p } => {
                let model = DiscretizationModel::fit(matrix, &column, emotion.name())?;
                let discrete = model.apply(matrix)?;
                let as_features = discrete.to_feature_matrix(&matrix.provenance);
                let names =
                    ttest_select(&as_features, &column, p, config.variance_model, emotion.name())?;
                discretizers.push(model);
                names
            }
        };
        per_emotion.push((emotion, selected));
    }

    let selection = selection_method
        .map(|m| union_selection(&per_emotion, &matrix.columns, m));
    Ok(PreprocessArtifact {
        threshold: labels.threshold,
        method: method.label(),
        selection,
        discretization: if discretizers.is_empty() { None } else { Some(discretizers) },
        mean_selected_dissimilarity: if dissim_values.is_empty() {
            None
        } else {
            Some(dissim_values.iter().sum::<f64>() / dissim_values.len() as f64)
        },
    })
}

/// Train final models on all rows for every (threshold, method, family).
pub fn cmd_train(config: &PipelineConfig) -> Result<()> {
    let cache = config.cache_dir();
    let config_hash = config.config_hash();
    if !cache.join("features.bin").is_file() {
        return Err(Error::MissingArtifact("feature cache (features.bin)".into()));
    }
    require_manifest(&cache, "extract")?;

    let mut inputs = BTreeMap::new();
    inputs.insert(
        "features_bin".into(),
        sha256_hex(&read_file(&cache.join("features.bin"))?),
    );
    inputs.insert(
        "train_config".into(),
        sha256_hex(
            serde_json::to_string(&(
                &config.thresholds,
                &config.preprocessing,
                &config.families,
                &config.svm,
                &config.mlp,
                config.master_seed,
            ))
            .expect("serializes")
            .as_bytes(),
        ),
    );

    if let Some(manifest) = Manifest::load(&cache, "train") {
        if manifest.config_hash == config_hash && manifest.is_fresh(&cache, &inputs) {
            info!("cache hit: train");
            return Ok(());
        }
    }

    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    for &threshold in &config.thresholds {
        let tag = format_threshold(threshold);
        let (matrix, labels) = load_aligned(config, threshold)?;
        for method in config.preprocessing_methods()? {
            let preps = fit_emotion_preprocess_all(config, &matrix, &labels, method)?;
            for family in config.family_specs()? {
                let spec = ClassifierSpec {
                    family,
                    seed: config.master_seed,
                };
                let model: MultilabelModel =
                    binary_relevance_train_with(&matrix, &labels, &spec, &preps)?;
                let wrapped = WithProvenance {
                    config_hash: config_hash.clone(),
                    inputs: inputs.clone(),
                    artifact: model,
                };
                let name = format!(
                    "model_{tag}_{}_{}.json",
                    method.label().replace(['(', ')'], "_"),
                    family.name()
                );
                outputs.push((name, serde_json::to_vec_pretty(&wrapped).expect("model serializes")));
            }
        }
    }

    finish_stage(&cache, "train", &config_hash, inputs, outputs)?;
    info!("train: final models written");
    Ok(())
}

/// Fit the per-emotion preprocessing for final training (full-corpus fit).
fn fit_emotion_preprocess_all(
    config: &PipelineConfig,
    matrix: &FeatureMatrix,
    labels: &LabelMatrix,
    method: Preprocessing,
) -> Result<Vec<EmotionPreprocess>> {
    let mut result = Vec::with_capacity(9);
    for emotion in Emotion::ALL {
        let column = labels.column(emotion);
        if column.iter().all(|&l| l) || column.iter().all(|&l| !l) {
            return Err(Error::SingleClassEmotion(emotion.name().to_string()));
        }
        let prep = match method {
            Preprocessing::Raw => EmotionPreprocess::default(),
            Preprocessing::Cfs => EmotionPreprocess {
                discretizer: None,
                selected: Some(cfs_select(
                    &CfsData::Continuous(matrix),
                    &column,
                    config.merit_variant,
                )),
            },
            Preprocessing::DiscrCfs => {
                let model = DiscretizationModel::fit(matrix, &column, emotion.name())?;
                let discrete = model.apply(matrix)?;
                let names =
                    cfs_select(&CfsData::Discrete(&discrete), &column, config.merit_variant);
                EmotionPreprocess {
                    discretizer: Some(model),
                    selected: Some(names),
                }
            }
            Preprocessing::Ttest { p } => EmotionPreprocess {
                discretizer: None,
                selected: Some(ttest_select(
                    matrix,
                    &column,
                    p,
                    config.variance_model,
                    emotion.name(),
                )?),
            },
            Preprocessing::DiscrTtest { p } => {
                let model = DiscretizationModel::fit(matrix, &column, emotion.name())?;
                let discrete = model.apply(matrix)?;
                let as_features = discrete.to_feature_matrix(&matrix.provenance);
                let names =
                    ttest_select(&as_features, &column, p, config.variance_model, emotion.name())?;
                EmotionPreprocess {
                    discretizer: Some(model),
                    selected: Some(names),
                }
            }
        };
        // Guard against an empty t-test selection.
        let prep = match (&prep.selected, method) {
            (Some(sel), Preprocessing::Ttest { .. } | Preprocessing::DiscrTtest { .. })
                if sel.is_empty() =>
            {
                EmotionPreprocess {
                    selected: Some(vec![matrix.columns[0].clone()]),
                    ..prep
                }
            }
            _ => prep,
        };
        result.push(prep);
    }
    Ok(result)
}

/// The paper suite: every preprocessing x threshold (x requested families).
pub fn paper_suite_methods() -> Vec<Preprocessing> {
    vec![
        Preprocessing::Raw,
        Preprocessing::Cfs,
        Preprocessing::DiscrCfs,
        Preprocessing::Ttest { p: 0.05 },
        Preprocessing::Ttest { p: 0.01 },
        Preprocessing::DiscrTtest { p: 0.05 },
        Preprocessing::DiscrTtest { p: 0.01 },
    ]
}

/// Cross-validated evaluation; returns the reports it wrote.
pub fn cmd_eval(config: &PipelineConfig, args: &EvalArgs) -> Result<Vec<EvalReport>> {
    let cache = config.cache_dir();
    let config_hash = config.config_hash();
    if !cache.join("features.bin").is_file() {
        return Err(Error::MissingArtifact("feature cache (features.bin)".into()));
    }
    require_manifest(&cache, "extract")?;

    let methods: Vec<Preprocessing> = if args.paper_suite {
        paper_suite_methods()
    } else if !args.methods.is_empty() {
        args.methods
            .iter()
            .map(|s| {
                Preprocessing::parse(s)
                    .ok_or_else(|| Error::Config(format!("unknown preprocessing '{s}'")))
            })
            .collect::<Result<_>>()?
    } else {
        config.preprocessing_methods()?
    };
    let families: Vec<FamilySpec> = if args.families.is_empty() {
        config.family_specs()?
    } else {
        args.families
            .iter()
            .map(|f| config.family_spec(f))
            .collect::<Result<_>>()?
    };
    let thresholds: &[f64] = if args.thresholds.is_empty() {
        &config.thresholds
    } else {
        &args.thresholds
    };

    let mut inputs = BTreeMap::new();
    inputs.insert(
        "features_bin".into(),
        sha256_hex(&read_file(&cache.join("features.bin"))?),
    );
    inputs.insert(
        "eval_config".into(),
        sha256_hex(
            serde_json::to_string(&(
                thresholds,
                &methods,
                &families,
                config.folds,
                config.initializations,
                config.master_seed,
                config.stratified,
                config.merit_variant,
                config.variance_model,
                config.boundary(),
            ))
            .expect("serializes")
            .as_bytes(),
        ),
    );

    if let Some(manifest) = Manifest::load(&cache, "eval") {
        if manifest.config_hash == config_hash && manifest.is_fresh(&cache, &inputs) {
            info!("cache hit: eval");
            return load_eval_reports(&cache);
        }
    }

    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    let mut reports = Vec::new();
    for &threshold in thresholds {
        let tag = format_threshold(threshold);
        let (matrix, labels) = load_aligned(config, threshold)?;
        for &method in &methods {
            for &family in &families {
                let mut plan = ExperimentPlan::new(
                    threshold,
                    method,
                    ClassifierSpec { family, seed: config.master_seed },
                );
                plan.folds = config.folds;
                plan.initializations = config.initializations;
                plan.master_seed = config.master_seed;
                plan.stratified = config.stratified;
                plan.merit_variant = config.merit_variant;
                plan.variance_model = config.variance_model;

                info!(
                    "eval: threshold {threshold}, {}, {}",
                    method.label(),
                    family.name()
                );
                let report = run_experiment(&plan, &matrix, &labels)?;
                let name = format!(
                    "eval_{tag}_{}_{}.json",
                    method.label().replace(['(', ')'], "_"),
                    family.name()
                );
                let wrapped = WithProvenance {
                    config_hash: config_hash.clone(),
                    inputs: inputs.clone(),
                    artifact: report.clone(),
                };
                outputs.push((name, serde_json::to_vec_pretty(&wrapped).expect("report serializes")));
                reports.push(report);
            }
        }
    }

    finish_stage(&cache, "eval", &config_hash, inputs, outputs)?;
    info!("eval: {} report(s) written", reports.len());
    Ok(reports)
}

fn load_eval_reports(cache: &Path) -> Result<Vec<EvalReport>> {
    let manifest = require_manifest(cache, "eval")?;
    let mut reports = Vec::new();
    let mut hashes: Option<(String, BTreeMap<String, String>)> = None;
    for name in manifest.outputs.keys() {
        let text = std::fs::read_to_string(cache.join(name))
            .map_err(|e| Error::io(cache.join(name), e))?;
        let wrapped: WithProvenance<EvalReport> =
            serde_json::from_str(&text).map_err(|e| Error::Json {
                path: name.clone(),
                source: e,
            })?;
        match &hashes {
            None => hashes = Some((wrapped.config_hash.clone(), wrapped.inputs.clone())),
            Some((config_hash, inputs)) => {
                if config_hash != &wrapped.config_hash || inputs != &wrapped.inputs {
                    return Err(Error::HashMismatch(format!(
                        "{name} was produced by a different config/input set; rerun eval"
                    )));
                }
            }
        }
        reports.push(wrapped.artifact);
    }
    if reports.is_empty() {
        return Err(Error::MissingArtifact("eval reports".into()));
    }
    Ok(reports)
}

/// Render tables from the cached evaluation reports.
pub fn cmd_report(config: &PipelineConfig, emit_plots: bool) -> Result<()> {
    let cache = config.cache_dir();
    let config_hash = config.config_hash();
    let reports = load_eval_reports(&cache)?;

    let eval_manifest = require_manifest(&cache, "eval")?;
    let mut inputs = BTreeMap::new();
    for (name, hash) in &eval_manifest.outputs {
        inputs.insert(name.clone(), hash.clone());
    }

    if let Some(manifest) = Manifest::load(&cache, "report") {
        if manifest.config_hash == config_hash && manifest.is_fresh(&cache, &inputs) {
            info!("cache hit: report");
            return Ok(());
        }
    }

    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    let provenance = format!("# config={config_hash}\n");
    outputs.push((
        "tables.txt".into(),
        format!("{provenance}{}", format_tables(&reports)).into_bytes(),
    ));
    outputs.push((
        "report.csv".into(),
        format!("{provenance}{}", reports_to_csv(&reports)).into_bytes(),
    ));
    if emit_plots {
        let mut thresholds: Vec<f64> = reports.iter().map(|r| r.threshold).collect();
        thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        thresholds.dedup();
        for t in thresholds {
            outputs.push((
                format!("plots_{}.csv", format_threshold(t)),
                format!("{provenance}{}", plot_data_csv(&reports, t)).into_bytes(),
            ));
        }
    }

    finish_stage(&cache, "report", &config_hash, inputs, outputs)?;
    info!("report: tables.txt and report.csv written");
    Ok(())
}
