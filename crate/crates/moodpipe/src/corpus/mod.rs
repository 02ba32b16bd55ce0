//! Canonical data model: the nine GEMS emotions, annotation records, audio
//! clips, and corpus validation.

mod annotations;
pub mod wav;

pub use annotations::{annotations_to_csv, load_annotations, save_annotations};
pub use wav::{decode_wav, load_wav, wav_info, WavInfo};

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The nine GEMS-9 emotion terms. Ordering is fixed and stable across all
/// serializations; indices 0..9 are used everywhere a column order matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emotion {
    Amazement,
    Solemnity,
    Tenderness,
    Nostalgia,
    Calmness,
    Power,
    JoyfulActivation,
    Tension,
    Sadness,
}

/// Number of emotion labels.
pub const EMOTION_COUNT: usize = 9;

impl Emotion {
    /// All nine emotions in canonical order.
    pub const ALL: [Emotion; EMOTION_COUNT] = [
        Emotion::Amazement,
        Emotion::Solemnity,
        Emotion::Tenderness,
        Emotion::Nostalgia,
        Emotion::Calmness,
        Emotion::Power,
        Emotion::JoyfulActivation,
        Emotion::Tension,
        Emotion::Sadness,
    ];

    /// Canonical column index.
    pub fn index(self) -> usize {
        Emotion::ALL.iter().position(|&e| e == self).unwrap()
    }

    /// Canonical snake_case name used in CSV headers and JSON.
    pub fn name(self) -> &'static str {
        match self {
            Emotion::Amazement => "amazement",
            Emotion::Solemnity => "solemnity",
            Emotion::Tenderness => "tenderness",
            Emotion::Nostalgia => "nostalgia",
            Emotion::Calmness => "calmness",
            Emotion::Power => "power",
            Emotion::JoyfulActivation => "joyful_activation",
            Emotion::Tension => "tension",
            Emotion::Sadness => "sadness",
        }
    }

    /// Parse a header or cell name; accepts spaces or underscores, any case.
    pub fn parse(name: &str) -> Option<Emotion> {
        let norm = name.trim().to_lowercase().replace([' ', '-'], "_");
        Emotion::ALL.iter().copied().find(|e| e.name() == norm)
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Music genres present in the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Genre {
    Classical,
    Rock,
    Pop,
    Electronic,
}

impl Genre {
    pub const ALL: [Genre; 4] = [Genre::Classical, Genre::Rock, Genre::Pop, Genre::Electronic];

    pub fn name(self) -> &'static str {
        match self {
            Genre::Classical => "classical",
            Genre::Rock => "rock",
            Genre::Pop => "pop",
            Genre::Electronic => "electronic",
        }
    }

    pub fn parse(name: &str) -> Option<Genre> {
        let norm = name.trim().to_lowercase();
        Genre::ALL.iter().copied().find(|g| g.name() == norm)
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of emotions selected in one annotation session, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EmotionSet(u16);

impl EmotionSet {
    pub fn empty() -> Self {
        EmotionSet(0)
    }

    pub fn insert(&mut self, e: Emotion) {
        self.0 |= 1 << e.index();
    }

    pub fn contains(&self, e: Emotion) -> bool {
        self.0 & (1 << e.index()) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Emotion> + '_ {
        Emotion::ALL.into_iter().filter(|e| self.contains(*e))
    }
}

impl FromIterator<Emotion> for EmotionSet {
    fn from_iter<T: IntoIterator<Item = Emotion>>(iter: T) -> Self {
        let mut set = EmotionSet::empty();
        for e in iter {
            set.insert(e);
        }
        set
    }
}

/// One annotation session: a track, its genre, and up to three selected
/// emotions (annotators could select at most three items).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub track_id: u32,
    pub genre: Genre,
    pub selections: EmotionSet,
}

impl AnnotationRecord {
    /// Build a record, enforcing the at-most-three-selections invariant.
    pub fn new(track_id: u32, genre: Genre, selections: EmotionSet) -> Result<Self> {
        if selections.len() > 3 {
            return Err(Error::Config(format!(
                "track {track_id}: {} emotions selected in one annotation (max 3)",
                selections.len()
            )));
        }
        Ok(AnnotationRecord {
            track_id,
            genre,
            selections,
        })
    }
}

/// The full annotation table: one record per annotation session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTable {
    pub records: Vec<AnnotationRecord>,
    /// Sorted unique track ids appearing in `records`.
    pub track_ids: Vec<u32>,
}

impl AnnotationTable {
    pub fn new(records: Vec<AnnotationRecord>) -> Self {
        let mut track_ids: Vec<u32> = records.iter().map(|r| r.track_id).collect();
        track_ids.sort_unstable();
        track_ids.dedup();
        AnnotationTable { records, track_ids }
    }

    /// Records for one track.
    pub fn records_for(&self, track_id: u32) -> impl Iterator<Item = &AnnotationRecord> {
        self.records.iter().filter(move |r| r.track_id == track_id)
    }

    /// Annotation count per track, keyed by id.
    pub fn counts(&self) -> BTreeMap<u32, u32> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.track_id).or_insert(0) += 1;
        }
        counts
    }

    /// Genre of each track (first record wins; the corpus assigns one genre
    /// per track).
    pub fn genres(&self) -> BTreeMap<u32, Genre> {
        let mut genres = BTreeMap::new();
        for r in &self.records {
            genres.entry(r.track_id).or_insert(r.genre);
        }
        genres
    }
}

/// A decoded audio clip: mono samples in [-1, 1] at the file's native rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Path of the audio file for a track: `<audio_dir>/<track_id>.wav`.
pub fn audio_path(audio_dir: &Path, track_id: u32) -> PathBuf {
    audio_dir.join(format!("{track_id}.wav"))
}

/// Report produced by [`validate_corpus`]; serialized as JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusReport {
    /// Tracks annotated but lacking an audio file.
    pub missing_audio: Vec<u32>,
    /// Audio files present but never annotated.
    pub missing_annotations: Vec<u32>,
    /// Track count per genre.
    pub genre_counts: BTreeMap<String, usize>,
    pub track_count: usize,
    pub annotation_count: usize,
    /// Shortest/longest decodable clip among annotated tracks, in seconds.
    pub min_duration_seconds: Option<f64>,
    pub max_duration_seconds: Option<f64>,
    /// Sample count of the shortest clip; feeds feature-extraction truncation.
    pub min_samples: Option<usize>,
    /// Tracks whose audio file exists but cannot be decoded, with the reason.
    pub unreadable_audio: Vec<(u32, String)>,
}

/// Check the annotation table against an audio directory.
///
/// Report-only: missing or unreadable files are listed, never fatal. The
/// minimum clip length feeds the shortest-file truncation rule used by
/// feature extraction.
pub fn validate_corpus(table: &AnnotationTable, audio_dir: &Path) -> CorpusReport {
    let mut missing_audio = Vec::new();
    let mut unreadable_audio = Vec::new();
    let mut min_duration: Option<f64> = None;
    let mut max_duration: Option<f64> = None;
    let mut min_samples: Option<usize> = None;

    for &track in &table.track_ids {
        let path = audio_path(audio_dir, track);
        if !path.is_file() {
            missing_audio.push(track);
            continue;
        }
        match wav_info(&path) {
            Ok(info) => {
                let dur = info.duration_seconds();
                min_duration = Some(min_duration.map_or(dur, |d| d.min(dur)));
                max_duration = Some(max_duration.map_or(dur, |d| d.max(dur)));
                min_samples = Some(min_samples.map_or(info.frames, |s| s.min(info.frames)));
            }
            Err(e) => unreadable_audio.push((track, e.to_string())),
        }
    }

    // Audio files with no annotations.
    let mut missing_annotations = Vec::new();
    if let Ok(entries) = std::fs::read_dir(audio_dir) {
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("wav") {
                continue;
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                if let Ok(id) = stem.parse::<u32>() {
                    if table.track_ids.binary_search(&id).is_err() {
                        missing_annotations.push(id);
                    }
                }
            }
        }
    }
    missing_annotations.sort_unstable();

    let mut genre_counts: BTreeMap<String, usize> = BTreeMap::new();
    for genre in table.genres().values() {
        *genre_counts.entry(genre.name().to_string()).or_insert(0) += 1;
    }

    CorpusReport {
        missing_audio,
        missing_annotations,
        genre_counts,
        track_count: table.track_ids.len(),
        annotation_count: table.records.len(),
        min_duration_seconds: min_duration,
        max_duration_seconds: max_duration,
        min_samples,
        unreadable_audio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emotion_order_is_stable() {
        let names: Vec<&str> = Emotion::ALL.iter().map(|e| e.name()).collect();
        assert_eq!(
            names,
            [
                "amazement",
                "solemnity",
                "tenderness",
                "nostalgia",
                "calmness",
                "power",
                "joyful_activation",
                "tension",
                "sadness"
            ]
        );
        for (i, e) in Emotion::ALL.iter().enumerate() {
            assert_eq!(e.index(), i);
        }
    }

    #[test]
    fn emotion_parse_accepts_spaces() {
        assert_eq!(Emotion::parse("Joyful Activation"), Some(Emotion::JoyfulActivation));
        assert_eq!(Emotion::parse("SADNESS"), Some(Emotion::Sadness));
        assert_eq!(Emotion::parse("boredom"), None);
    }

    #[test]
    fn emotion_set_ops() {
        let set: EmotionSet = [Emotion::Amazement, Emotion::Calmness].into_iter().collect();
        assert_eq!(set.len(), 2);
        assert!(set.contains(Emotion::Amazement));
        assert!(!set.contains(Emotion::Tension));
        let back: Vec<Emotion> = set.iter().collect();
        assert_eq!(back, vec![Emotion::Amazement, Emotion::Calmness]);
    }

    #[test]
    fn record_rejects_more_than_three() {
        let four: EmotionSet = Emotion::ALL[..4].iter().copied().collect();
        assert!(AnnotationRecord::new(1, Genre::Rock, four).is_err());
        let three: EmotionSet = Emotion::ALL[..3].iter().copied().collect();
        assert!(AnnotationRecord::new(1, Genre::Rock, three).is_ok());
    }

    #[test]
    fn table_tracks_sorted_unique() {
        let rec = |id| AnnotationRecord {
            track_id: id,
            genre: Genre::Pop,
            selections: EmotionSet::empty(),
        };
        let table = AnnotationTable::new(vec![rec(5), rec(2), rec(5), rec(9)]);
        assert_eq!(table.track_ids, vec![2, 5, 9]);
        assert_eq!(table.counts()[&5], 2);
    }

    #[test]
    fn validate_missing_audio_is_set_difference() {
        let dir = tempfile::tempdir().unwrap();
        let rec = |id| AnnotationRecord {
            track_id: id,
            genre: Genre::Pop,
            selections: EmotionSet::empty(),
        };
        let table = AnnotationTable::new(vec![rec(1), rec(2)]);
        wav::write_wav_mono16(&audio_path(dir.path(), 1), &vec![0.0; 100], 8000).unwrap();
        let report = validate_corpus(&table, dir.path());
        assert_eq!(report.missing_audio, vec![2]);
        assert_eq!(report.min_samples, Some(100));
        assert_eq!(report.genre_counts["pop"], 2);
    }

    #[test]
    fn validate_empty_dir_lists_all_missing() {
        let dir = tempfile::tempdir().unwrap();
        let rec = |id| AnnotationRecord {
            track_id: id,
            genre: Genre::Rock,
            selections: EmotionSet::empty(),
        };
        let table = AnnotationTable::new(vec![rec(1), rec(2), rec(3)]);
        let report = validate_corpus(&table, dir.path());
        assert_eq!(report.missing_audio, vec![1, 2, 3]);
        assert_eq!(report.min_duration_seconds, None);
    }
}
