//! End-to-end lecture analysis: per-clip noise verdicts, the lecture
//! noise verdict, instructor level and gender, teacher/student
//! differentiation, quadrant noise localization, and corpus-level
//! correlation statistics.

use serde::{Deserialize, Serialize};

use crate::audio_io::{load_wav, AudioClip, Gender, LectureManifest, Quadrant};
use crate::error::{Error, Result};
use crate::features::{gender_features, spl_series, FeatureVector, FrameParams};
use crate::models::{classify_gender, knn_classify, GmmModel, KnnModel, NoiseLabel};
use crate::stats::{
    chi_square_independence, diff_proportions, normal_fit, ChiSquareResult, ContingencyTable,
    NormalFit,
};

/// Analysis knobs shared by every pipeline operation, with the working
/// defaults the classifiers were tuned for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Analysis frame length, milliseconds.
    pub frame_len_ms: f64,
    /// Fractional overlap between consecutive frames in [0, 1).
    pub overlap: f64,
    /// Offset added to dBFS levels to report dBA.
    pub calibration_offset_db: f64,
    /// Frames this far below the clip's 95th-percentile level are
    /// silent, dB.
    pub silence_threshold_db: f64,
    /// A clip within this distance of the instructor level is
    /// teacher speech, dB.
    pub speaker_delta_db: f64,
    /// Histogram bin width for the instructor-level mode, dB.
    pub instructor_bin_width_db: f64,
    /// Speech below this instructor level is Low, dBA.
    pub level_low_dba: f64,
    /// Speech above this instructor level is High, dBA.
    pub level_high_dba: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            frame_len_ms: crate::features::DEFAULT_FRAME_LEN_MS,
            overlap: crate::features::DEFAULT_OVERLAP,
            calibration_offset_db: crate::features::DEFAULT_CALIBRATION_OFFSET_DB,
            silence_threshold_db: crate::features::DEFAULT_SILENCE_THRESHOLD_DB,
            speaker_delta_db: 3.0,
            instructor_bin_width_db: 2.0,
            level_low_dba: 55.0,
            level_high_dba: 65.0,
        }
    }
}

impl AnalysisConfig {
    /// Frame length and hop for a clip at the given rate.
    pub fn frame_params(&self, sample_rate: u32) -> Result<FrameParams> {
        FrameParams::from_ms(sample_rate, self.frame_len_ms, self.overlap)
    }
}

/// Who a clip's dominant speaker is, by level proximity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeakerRole {
    Teacher,
    Student,
}

/// Lecture-level noise verdict. Equal noisy and quiet counts are a
/// surfaced [`LectureNoise::Tie`], never silently resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LectureNoise {
    Noisy,
    Quiet,
    Tie,
}

/// Instructor speech-level category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeechLevel {
    Low,
    Medium,
    High,
}

impl SpeechLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            SpeechLevel::Low => "low",
            SpeechLevel::Medium => "medium",
            SpeechLevel::High => "high",
        }
    }
}

/// Everything the pipeline concluded about one clip. Role and gender
/// are `None` exactly when the clip had no voiced frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipVerdict {
    pub clip_id: String,
    pub sequence_index: u32,
    pub noise_label: NoiseLabel,
    pub spl_fit: NormalFit,
    pub mean_level_dba: f64,
    pub speaker_role: Option<SpeakerRole>,
    pub speaker_gender: Option<Gender>,
}

/// Full analysis of one lecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LectureRecord {
    pub lecture_id: String,
    pub noise_label: LectureNoise,
    pub instructor_level_dba: f64,
    pub speech_level: SpeechLevel,
    /// Majority gender over teacher-role clips; `None` on a tie or when
    /// no clip had teacher speech.
    pub instructor_gender: Option<Gender>,
    pub clips: Vec<ClipVerdict>,
}

/// Classifies one clip as noisy or quiet from the normal fit of its
/// A-weighted frame levels, returning the fit alongside the label.
pub fn classify_clip_noise(
    model: &KnnModel,
    clip: &AudioClip,
    config: &AnalysisConfig,
) -> Result<(NoiseLabel, NormalFit)> {
    let params = config.frame_params(clip.sample_rate)?;
    let series = spl_series(clip, params, config.calibration_offset_db)?;
    let fit = normal_fit(&series.levels)?;
    let label = knn_classify(model, [fit.mean, fit.std])?;
    Ok((label, fit))
}

/// Majority vote over clip labels; equal counts are a [`LectureNoise::Tie`].
pub fn classify_lecture(labels: &[NoiseLabel]) -> Result<LectureNoise> {
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let noisy = labels.iter().filter(|&&l| l == NoiseLabel::Noisy).count();
    let quiet = labels.len() - noisy;
    Ok(if noisy > quiet {
        LectureNoise::Noisy
    } else if quiet > noisy {
        LectureNoise::Quiet
    } else {
        LectureNoise::Tie
    })
}

/// The instructor's speech level: the center of the modal histogram bin
/// of the clip mean levels (bins anchored at 0 dBA; count ties go to the
/// lower bin).
pub fn instructor_level(clip_levels_dba: &[f64], bin_width_db: f64) -> Result<f64> {
    let hist = crate::stats::histogram(clip_levels_dba, bin_width_db, 0.0)?;
    let mode = hist.mode();
    Ok(hist.center(mode.index))
}

/// Labels a clip's dominant speaker: teacher speech lies within
/// `delta_db` of the instructor level (inclusive on the boundary).
pub fn differentiate_speaker(
    clip_level_dba: f64,
    instructor_level_dba: f64,
    delta_db: f64,
) -> Result<SpeakerRole> {
    if !clip_level_dba.is_finite() {
        return Err(Error::NonFinite("clip_level_dba"));
    }
    if !instructor_level_dba.is_finite() {
        return Err(Error::NonFinite("instructor_level_dba"));
    }
    if !delta_db.is_finite() {
        return Err(Error::NonFinite("delta_db"));
    }
    Ok(
        if (clip_level_dba - instructor_level_dba).abs() <= delta_db {
            SpeakerRole::Teacher
        } else {
            SpeakerRole::Student
        },
    )
}

/// Buckets an instructor level into Low / Medium / High.
pub fn speech_level(instructor_level_dba: f64, config: &AnalysisConfig) -> SpeechLevel {
    if instructor_level_dba < config.level_low_dba {
        SpeechLevel::Low
    } else if instructor_level_dba <= config.level_high_dba {
        SpeechLevel::Medium
    } else {
        SpeechLevel::High
    }
}

/// Localization verdict plus the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub verdict: Quadrant,
    /// Mean A-weighted level per quadrant, in [`Quadrant::ALL`] order.
    pub mean_levels_dba: Vec<(Quadrant, f64)>,
}

/// Margin below which two quadrant means count as tied.
pub const LOCALIZATION_TIE_EPS: f64 = 1e-9;

/// Attributes a noise source to the quadrant whose recording has the
/// highest mean A-weighted level.
///
/// Requires exactly one clip per quadrant. When the top two means agree
/// within [`LOCALIZATION_TIE_EPS`] the answer would be arbitrary, so it
/// is an [`Error::AmbiguousLocalization`] instead.
pub fn localize_noise(
    clips: &[(Quadrant, AudioClip)],
    config: &AnalysisConfig,
) -> Result<LocalizationReport> {
    if clips.len() != Quadrant::ALL.len() {
        return Err(Error::QuadrantCoverage);
    }
    let mut mean_levels_dba = Vec::with_capacity(4);
    for quadrant in Quadrant::ALL {
        let (_, clip) = clips
            .iter()
            .find(|(q, _)| *q == quadrant)
            .ok_or(Error::QuadrantCoverage)?;
        let params = config.frame_params(clip.sample_rate)?;
        let series = spl_series(clip, params, config.calibration_offset_db)?;
        let fit = normal_fit(&series.levels)?;
        mean_levels_dba.push((quadrant, fit.mean));
    }
    let (best, &(verdict, top)) = mean_levels_dba
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap();
    let runner_up = mean_levels_dba
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &(_, m))| m)
        .fold(f64::NEG_INFINITY, f64::max);
    if top - runner_up < LOCALIZATION_TIE_EPS {
        return Err(Error::AmbiguousLocalization);
    }
    Ok(LocalizationReport {
        verdict,
        mean_levels_dba,
    })
}

/// Runs the full per-lecture analysis over a manifest.
///
/// Every clip gets an SPL fit, a noise verdict and, when voiced frames
/// exist, a gender. The instructor level is the modal clip level; each
/// clip's speaker role follows from its distance to that level; the
/// instructor's gender is the majority over teacher-role clips (a tie
/// or no teacher clips leaves it unknown).
pub fn analyze_lecture(
    manifest: &LectureManifest,
    noise_model: &KnnModel,
    male_model: &GmmModel,
    female_model: &GmmModel,
    config: &AnalysisConfig,
) -> Result<LectureRecord> {
    if manifest.entries.is_empty() {
        return Err(Error::EmptyManifest);
    }

    let mut labels = Vec::with_capacity(manifest.entries.len());
    let mut fits = Vec::with_capacity(manifest.entries.len());
    let mut genders: Vec<Option<Gender>> = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let clip = load_wav(&entry.path)?;
        let (label, fit) = classify_clip_noise(noise_model, &clip, config)?;
        let params = config.frame_params(clip.sample_rate)?;
        let features: Vec<FeatureVector> = gender_features(&clip, params)?
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        genders.push(if features.is_empty() {
            None
        } else {
            Some(classify_gender(male_model, female_model, &features)?)
        });
        labels.push(label);
        fits.push(fit);
    }

    let clip_levels: Vec<f64> = fits.iter().map(|f| f.mean).collect();
    let level = instructor_level(&clip_levels, config.instructor_bin_width_db)?;

    let mut clips = Vec::with_capacity(manifest.entries.len());
    let mut male_votes = 0usize;
    let mut female_votes = 0usize;
    for (i, entry) in manifest.entries.iter().enumerate() {
        let role = match genders[i] {
            Some(_) => Some(differentiate_speaker(
                fits[i].mean,
                level,
                config.speaker_delta_db,
            )?),
            None => None,
        };
        if role == Some(SpeakerRole::Teacher) {
            match genders[i] {
                Some(Gender::Male) => male_votes += 1,
                Some(Gender::Female) => female_votes += 1,
                None => {}
            }
        }
        clips.push(ClipVerdict {
            clip_id: entry.raw_path.clone(),
            sequence_index: entry.sequence_index,
            noise_label: labels[i],
            spl_fit: fits[i],
            mean_level_dba: fits[i].mean,
            speaker_role: role,
            speaker_gender: genders[i],
        });
    }

    let instructor_gender = match male_votes.cmp(&female_votes) {
        std::cmp::Ordering::Greater => Some(Gender::Male),
        std::cmp::Ordering::Less => Some(Gender::Female),
        std::cmp::Ordering::Equal if male_votes > 0 => None,
        _ => None,
    };

    Ok(LectureRecord {
        lecture_id: manifest.lecture_id.clone(),
        noise_label: classify_lecture(&labels)?,
        instructor_level_dba: level,
        speech_level: speech_level(level, config),
        instructor_gender,
        clips,
    })
}

/// One association test: the observed table plus both statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationTest {
    /// Observed counts with noise labels on the rows.
    pub table: ContingencyTable,
    /// Independence test on the table, all-zero columns dropped first.
    pub chi_square: ChiSquareResult,
    /// First-column proportion difference, noisy row minus quiet row,
    /// on the table collapsed to 2x2 (first column versus the rest).
    pub diff_proportions: f64,
}

/// Corpus-level association between lecture noise and the instructor's
/// speech level and gender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Lectures contributing to the tables.
    pub lectures_used: usize,
    /// Lectures dropped because their noise verdict was a tie.
    pub ties_excluded: usize,
    /// Lectures dropped from the gender test for unknown gender.
    pub unknown_gender_excluded: usize,
    pub noise_vs_speech_level: AssociationTest,
    pub noise_vs_gender: AssociationTest,
}

/// Collapses a 2xC table to 2x2: first column versus everything else.
fn collapse_first_vs_rest(table: &ContingencyTable) -> Result<ContingencyTable> {
    let rest_label = table.col_labels[1..].join("+");
    ContingencyTable::new(
        table.row_labels.clone(),
        vec![table.col_labels[0].clone(), rest_label],
        table
            .counts
            .iter()
            .map(|row| vec![row[0], row[1..].iter().sum()])
            .collect(),
    )
}

fn association(table: ContingencyTable) -> Result<AssociationTest> {
    let chi_square = chi_square_independence(&table.drop_zero_columns()?)?;
    let diff = diff_proportions(&collapse_first_vs_rest(&table)?)?;
    Ok(AssociationTest {
        table,
        chi_square,
        diff_proportions: diff,
    })
}

/// Tests the association of lecture noise with speech level (2x3 table,
/// chi-square after dropping empty columns; proportion difference on the
/// Low-versus-rest collapse) and with instructor gender (2x2).
///
/// Tie lectures are excluded from both tests; lectures with unknown
/// instructor gender are excluded from the gender test only. Both
/// exclusions are reported.
pub fn correlate(records: &[LectureRecord]) -> Result<CorrelationReport> {
    if records.len() < 2 {
        return Err(Error::TooFewRecords {
            got: records.len(),
            need: 2,
        });
    }
    let decided: Vec<&LectureRecord> = records
        .iter()
        .filter(|r| r.noise_label != LectureNoise::Tie)
        .collect();
    let ties_excluded = records.len() - decided.len();

    let mut speech = vec![vec![0u64; 3]; 2];
    for r in &decided {
        let row = usize::from(r.noise_label != LectureNoise::Noisy);
        let col = match r.speech_level {
            SpeechLevel::Low => 0,
            SpeechLevel::Medium => 1,
            SpeechLevel::High => 2,
        };
        speech[row][col] += 1;
    }
    let speech_table = ContingencyTable::new(
        vec!["noisy".into(), "quiet".into()],
        vec!["low".into(), "medium".into(), "high".into()],
        speech,
    )?;

    let mut gender = vec![vec![0u64; 2]; 2];
    let mut unknown_gender_excluded = 0usize;
    for r in &decided {
        let row = usize::from(r.noise_label != LectureNoise::Noisy);
        match r.instructor_gender {
            Some(Gender::Male) => gender[row][0] += 1,
            Some(Gender::Female) => gender[row][1] += 1,
            None => unknown_gender_excluded += 1,
        }
    }
    let gender_table = ContingencyTable::new(
        vec!["noisy".into(), "quiet".into()],
        vec!["male".into(), "female".into()],
        gender,
    )?;

    Ok(CorrelationReport {
        lectures_used: decided.len(),
        ties_excluded,
        unknown_gender_excluded,
        noise_vs_speech_level: association(speech_table)?,
        noise_vs_gender: association(gender_table)?,
    })
}

/// Serializes any report as pretty JSON with every number rounded to six
/// fractional digits, the precision all reports are published at.
pub fn report_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    round_floats(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("value serializes");
    text.push('\n');
    text
}

fn round_floats(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.as_i64().is_none() && n.as_u64().is_none() {
                    let rounded = (f * 1e6).round() / 1e6;
                    if let Some(num) = serde_json::Number::from_f64(rounded) {
                        *n = num;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_floats),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}
