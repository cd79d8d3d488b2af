//! The six subcommands. Every command resolves its inputs fully before
//! writing anything, so a failure never leaves partial output on stdout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use aula_core::audio_io::{load_manifest, load_wav, AudioClip, Gender, Quadrant};
use aula_core::features::{gender_features, spl_series, FrameParams};
use aula_core::models::{cross_validate, gmm_train, knn_train, GmmModel, KnnModel};
use aula_core::pipeline::{
    analyze_lecture, correlate as correlate_records, differentiate_speaker, instructor_level,
    localize_noise, report_json, LectureRecord, LocalizationReport, SpeakerRole,
};
use aula_core::stats::{normal_fit, NormalFit};
use aula_core::synth::{gen_lecture_corpus, CorpusConfig, CorpusTruth, SpeechLevelPolicy};

use crate::config::CliConfig;
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct FeaturesArgs {
    /// WAV files to analyze
    #[arg(required = true, value_name = "WAV")]
    pub clips: Vec<PathBuf>,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[command(subcommand)]
    pub mode: TrainMode,
}

#[derive(Debug, clap::Subcommand)]
pub enum TrainMode {
    /// Nearest-neighbour noisy/quiet clip model from truth-labelled clips
    Noise(TrainNoiseArgs),
    /// Male and female voice models from labelled lectures
    Gender(TrainGenderArgs),
}

#[derive(Debug, clap::Args)]
pub struct TrainNoiseArgs {
    /// Corpus directory of lecture subdirectories with manifests
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// Per-clip noise labels; defaults to truth.json inside the corpus
    #[arg(long, value_name = "PATH")]
    pub truth: Option<PathBuf>,
    /// Output model file
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Cross-validation fold count
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
}

#[derive(Debug, clap::Args)]
pub struct TrainGenderArgs {
    /// Corpus directory of lecture subdirectories with manifests
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// Output file for the male voice model
    #[arg(long, value_name = "PATH")]
    pub out_male: PathBuf,
    /// Output file for the female voice model
    #[arg(long, value_name = "PATH")]
    pub out_female: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct LectureArgs {
    /// Lecture manifest JSON
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Trained noise model
    #[arg(long, value_name = "PATH")]
    pub knn: PathBuf,
    /// Trained male voice model
    #[arg(long, value_name = "PATH")]
    pub gmm_male: PathBuf,
    /// Trained female voice model
    #[arg(long, value_name = "PATH")]
    pub gmm_female: PathBuf,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct LocalizeArgs {
    /// Recording from the front-left corner microphone
    #[arg(long, value_name = "WAV")]
    pub front_left: PathBuf,
    /// Recording from the front-right corner microphone
    #[arg(long, value_name = "WAV")]
    pub front_right: PathBuf,
    /// Recording from the back-left corner microphone
    #[arg(long, value_name = "WAV")]
    pub back_left: PathBuf,
    /// Recording from the back-right corner microphone
    #[arg(long, value_name = "WAV")]
    pub back_right: PathBuf,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct CorrelateArgs {
    /// Lecture record JSON files, at least two
    #[arg(required = true, value_name = "JSON")]
    pub records: Vec<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Output corpus directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub lectures: usize,
    #[arg(long, default_value_t = 20)]
    pub clips_per_lecture: usize,
    #[arg(long, default_value_t = 10.0, value_name = "SECONDS")]
    pub clip_seconds: f64,
    #[arg(long, default_value_t = 16000, value_name = "HZ")]
    pub sample_rate: u32,
    /// Whether instructor levels track the noise condition or vary freely
    #[arg(long, value_enum, default_value_t = PolicyArg::Correlated)]
    pub speech_policy: PolicyArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PolicyArg {
    Correlated,
    Independent,
}

impl From<PolicyArg> for SpeechLevelPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Correlated => SpeechLevelPolicy::CorrelatedWithNoise,
            PolicyArg::Independent => SpeechLevelPolicy::Independent,
        }
    }
}

fn data_err(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {err}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| data_err(path, e)),
        None => {
            print!("{text}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

fn load_model<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| data_err(path, e))
}

fn write_model<T: Serialize>(path: &Path, model: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(model).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| data_err(path, e))
}

fn clip_fit(clip: &AudioClip, config: &CliConfig) -> Result<NormalFit, CliError> {
    let params = FrameParams::from_ms(clip.sample_rate, config.frame_len_ms, config.overlap)?;
    let series = spl_series(clip, params, config.calibration_offset_db)?;
    Ok(normal_fit(&series.levels)?)
}

/// Lecture subdirectories of a corpus, sorted by name.
fn lecture_dirs(corpus: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(corpus).map_err(|e| data_err(corpus, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| data_err(corpus, e))?.path();
        if path.is_dir() && path.join("manifest.json").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Data(format!(
            "no lecture manifests under {}",
            corpus.display()
        )));
    }
    Ok(dirs)
}

pub fn features(config: &CliConfig, args: &FeaturesArgs) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "clip_id".to_string(),
        "frame_index".to_string(),
        "kind".to_string(),
        "level_dba".to_string(),
        "pitch".to_string(),
    ];
    header.extend((0..11).map(|i| format!("c{i}")));
    writer
        .write_record(&header)
        .map_err(|e| CliError::Internal(e.to_string()))?;

    for path in &args.clips {
        let clip = load_wav(path)?;
        let params = FrameParams::from_ms(clip.sample_rate, config.frame_len_ms, config.overlap)?;
        let series = spl_series(&clip, params, config.calibration_offset_db)?;
        let id = path.display().to_string();
        for (frame, level) in series.levels.iter().enumerate() {
            let mut row = vec![
                id.clone(),
                frame.to_string(),
                "spl".to_string(),
                format!("{level:.6}"),
                String::new(),
            ];
            row.extend(std::iter::repeat_n(String::new(), 11));
            writer
                .write_record(&row)
                .map_err(|e| CliError::Internal(e.to_string()))?;
        }
        for (frame, vector) in gender_features(&clip, params)? {
            let values = vector.as_slice();
            let mut row = vec![
                id.clone(),
                frame.to_string(),
                "voice".to_string(),
                String::new(),
                format!("{:.6}", values[0]),
            ];
            row.extend(values[1..].iter().map(|v| format!("{v:.6}")));
            writer
                .write_record(&row)
                .map_err(|e| CliError::Internal(e.to_string()))?;
        }
    }

    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))?;
    emit(&text, args.out.as_deref())
}

pub fn train(config: &CliConfig, args: &TrainArgs) -> Result<(), CliError> {
    match &args.mode {
        TrainMode::Noise(args) => train_noise(config, args),
        TrainMode::Gender(args) => train_gender(config, args),
    }
}

#[derive(Serialize)]
struct TrainNoiseReport<'a> {
    command: &'static str,
    config: &'a CliConfig,
    model: String,
    training_clips: usize,
    cv_folds: usize,
    cv_error: f64,
}

fn train_noise(config: &CliConfig, args: &TrainNoiseArgs) -> Result<(), CliError> {
    let truth_path = args
        .truth
        .clone()
        .unwrap_or_else(|| args.corpus.join("truth.json"));
    let truth: CorpusTruth = load_model(&truth_path)?;
    if truth.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no lectures in truth file",
            truth_path.display()
        )));
    }

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (lecture_id, lecture_truth) in &truth {
        let manifest_path = args.corpus.join(lecture_id).join("manifest.json");
        let manifest = load_manifest(&manifest_path)?;
        if manifest.entries.len() != lecture_truth.clip_labels.len() {
            return Err(CliError::Data(format!(
                "{lecture_id}: manifest has {} clips but truth lists {}",
                manifest.entries.len(),
                lecture_truth.clip_labels.len()
            )));
        }
        for (entry, &label) in manifest.entries.iter().zip(&lecture_truth.clip_labels) {
            let clip = load_wav(&entry.path)?;
            let fit = clip_fit(&clip, config)?;
            points.push([fit.mean, fit.std]);
            labels.push(label);
        }
    }

    let model = knn_train(&points, &labels, config.knn_k)?;
    let cv_error = cross_validate(&points, &labels, args.folds, config.knn_k, config.seed)?;
    write_model(&args.out, &model)?;
    let report = report_json(&TrainNoiseReport {
        command: "train_noise",
        config,
        model: args.out.display().to_string(),
        training_clips: points.len(),
        cv_folds: args.folds,
        cv_error,
    });
    emit(&report, None)
}

#[derive(Serialize)]
struct TrainGenderReport<'a> {
    command: &'static str,
    config: &'a CliConfig,
    model_male: String,
    model_female: String,
    lectures_used: usize,
    male_vectors: usize,
    female_vectors: usize,
}

fn train_gender(config: &CliConfig, args: &TrainGenderArgs) -> Result<(), CliError> {
    let mut male = Vec::new();
    let mut female = Vec::new();
    let mut lectures_used = 0usize;
    for dir in lecture_dirs(&args.corpus)? {
        let manifest = load_manifest(&dir.join("manifest.json"))?;
        let gender = manifest.instructor_label.ok_or_else(|| {
            CliError::Data(format!(
                "lecture {} has no instructor label",
                manifest.lecture_id
            ))
        })?;

        let mut clips = Vec::with_capacity(manifest.entries.len());
        let mut means = Vec::with_capacity(manifest.entries.len());
        for entry in &manifest.entries {
            let clip = load_wav(&entry.path)?;
            means.push(clip_fit(&clip, config)?.mean);
            clips.push(clip);
        }
        let level = instructor_level(&means, config.instructor_bin_width_db)?;

        let bucket = match gender {
            Gender::Male => &mut male,
            Gender::Female => &mut female,
        };
        for (clip, &mean) in clips.iter().zip(&means) {
            if differentiate_speaker(mean, level, config.speaker_delta_db)? == SpeakerRole::Teacher
            {
                let params =
                    FrameParams::from_ms(clip.sample_rate, config.frame_len_ms, config.overlap)?;
                bucket.extend(gender_features(clip, params)?.into_iter().map(|(_, v)| v));
            }
        }
        lectures_used += 1;
    }

    let male_model = gmm_train(&male, config.gmm_components, config.seed)
        .map_err(|e| CliError::Data(format!("male voice model: {e}")))?;
    let female_model = gmm_train(&female, config.gmm_components, config.seed)
        .map_err(|e| CliError::Data(format!("female voice model: {e}")))?;
    write_model(&args.out_male, &male_model)?;
    write_model(&args.out_female, &female_model)?;
    let report = report_json(&TrainGenderReport {
        command: "train_gender",
        config,
        model_male: args.out_male.display().to_string(),
        model_female: args.out_female.display().to_string(),
        lectures_used,
        male_vectors: male.len(),
        female_vectors: female.len(),
    });
    emit(&report, None)
}

#[derive(Serialize)]
struct LectureReport<'a> {
    command: &'static str,
    config: &'a CliConfig,
    record: LectureRecord,
}

pub fn lecture(config: &CliConfig, args: &LectureArgs) -> Result<(), CliError> {
    let manifest = load_manifest(&args.manifest)?;
    let knn: KnnModel = load_model(&args.knn)?;
    let gmm_male: GmmModel = load_model(&args.gmm_male)?;
    let gmm_female: GmmModel = load_model(&args.gmm_female)?;
    let record = analyze_lecture(&manifest, &knn, &gmm_male, &gmm_female, &config.analysis())?;
    let report = report_json(&LectureReport {
        command: "lecture",
        config,
        record,
    });
    emit(&report, args.out.as_deref())
}

#[derive(Serialize)]
struct LocalizeReport<'a> {
    command: &'static str,
    config: &'a CliConfig,
    report: LocalizationReport,
}

pub fn localize(config: &CliConfig, args: &LocalizeArgs) -> Result<(), CliError> {
    let inputs = [
        (Quadrant::FrontLeft, &args.front_left),
        (Quadrant::FrontRight, &args.front_right),
        (Quadrant::BackLeft, &args.back_left),
        (Quadrant::BackRight, &args.back_right),
    ];
    let mut clips = Vec::with_capacity(4);
    for (quadrant, path) in inputs {
        clips.push((quadrant, load_wav(path)?));
    }
    let report = localize_noise(&clips, &config.analysis())?;
    eprintln!("verdict: {}", report.verdict.as_str());
    let text = report_json(&LocalizeReport {
        command: "localize",
        config,
        report,
    });
    emit(&text, args.out.as_deref())
}

#[derive(Serialize)]
struct CorrelateReport<'a> {
    command: &'static str,
    config: &'a CliConfig,
    report: aula_core::pipeline::CorrelationReport,
}

fn load_record(path: &Path) -> Result<LectureRecord, CliError> {
    #[derive(serde::Deserialize)]
    struct RecordDoc {
        record: LectureRecord,
    }
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    serde_json::from_str::<RecordDoc>(&text)
        .map(|doc| doc.record)
        .or_else(|_| serde_json::from_str::<LectureRecord>(&text))
        .map_err(|e| data_err(path, e))
}

pub fn correlate(config: &CliConfig, args: &CorrelateArgs) -> Result<(), CliError> {
    let mut records = Vec::with_capacity(args.records.len());
    for path in &args.records {
        records.push(load_record(path)?);
    }
    records.sort_by(|a, b| a.lecture_id.cmp(&b.lecture_id));
    let report = correlate_records(&records)?;
    let text = report_json(&CorrelateReport {
        command: "correlate",
        config,
        report,
    });
    emit(&text, args.out.as_deref())
}

#[derive(Serialize)]
struct SynthReport<'a> {
    command: &'static str,
    config: &'a CliConfig,
    corpus: &'a CorpusConfig,
    out: String,
    lectures_written: usize,
}

pub fn synth(config: &CliConfig, args: &SynthArgs) -> Result<(), CliError> {
    let corpus = CorpusConfig {
        lectures: args.lectures,
        clips_per_lecture: args.clips_per_lecture,
        clip_seconds: args.clip_seconds,
        sample_rate: args.sample_rate,
        seed: config.seed,
        calibration_offset_db: config.calibration_offset_db,
        speech_policy: args.speech_policy.into(),
    };
    let truth = gen_lecture_corpus(&corpus, &args.out)?;
    let report = report_json(&SynthReport {
        command: "synth",
        config,
        corpus: &corpus,
        out: args.out.display().to_string(),
        lectures_written: truth.len(),
    });
    emit(&report, None)
}
