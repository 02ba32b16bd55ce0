//! Annotation CSV ingestion and canonical serialization.
//!
//! Expected layout: one row per annotation session with a header naming the
//! track id, genre, and the nine emotion columns (0/1 cells). Extra columns
//! such as annotator mood or demographics are ignored with a logged warning.
//! Lines starting with `#` are provenance comments and skipped.

use std::io::Write;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

use super::{AnnotationRecord, AnnotationTable, Emotion, EmotionSet, Genre, EMOTION_COUNT};

fn normalize_header(name: &str) -> String {
    name.trim().to_lowercase().replace([' ', '-'], "_")
}

struct ColumnMap {
    track_id: usize,
    genre: usize,
    emotions: [usize; EMOTION_COUNT],
}

fn map_columns(path: &Path, header: &csv::StringRecord) -> Result<ColumnMap> {
    let names: Vec<String> = header.iter().map(normalize_header).collect();
    let find = |wanted: &str| -> Result<usize> {
        names
            .iter()
            .position(|n| n == wanted)
            .ok_or_else(|| Error::MissingHeaderColumn(wanted.to_string()))
    };
    let track_id = find("track_id")?;
    let genre = find("genre")?;
    let mut emotions = [0usize; EMOTION_COUNT];
    let mut used = vec![track_id, genre];
    for (i, e) in Emotion::ALL.iter().enumerate() {
        let at = find(e.name())?;
        emotions[i] = at;
        used.push(at);
    }
    let ignored: Vec<&str> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| !used.contains(i))
        .map(|(_, n)| n)
        .collect();
    if !ignored.is_empty() {
        warn!(
            "{}: ignoring {} extra column(s): {}",
            path.display(),
            ignored.len(),
            ignored.join(", ")
        );
    }
    Ok(ColumnMap {
        track_id,
        genre,
        emotions,
    })
}

/// Load an annotation table from CSV.
///
/// Rows with all-zero emotion cells are kept: they still count toward a
/// track's total annotations. Malformed rows (non-0/1 emotion cell, unknown
/// genre, bad track id, more than three selections) are rejected with their
/// line number.
pub fn load_annotations(path: &Path) -> Result<AnnotationTable> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    // Strip provenance comment lines before handing to the CSV parser.
    let body: String = raw
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    if body.trim().is_empty() {
        return Err(Error::EmptyAnnotations {
            path: path.display().to_string(),
        });
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.display().to_string(),
            source: e,
        })?
        .clone();
    let columns = map_columns(path, &header)?;

    let malformed = |line: u64, reason: String| Error::MalformedRow {
        path: path.display().to_string(),
        line,
        reason,
    };

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        // Header occupies line 1 of the (comment-stripped) body.
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        let cell = |at: usize| -> Result<&str> {
            row.get(at)
                .ok_or_else(|| malformed(line, format!("missing column {at}")))
        };

        let track_id: u32 = cell(columns.track_id)?
            .parse()
            .map_err(|_| malformed(line, format!("bad track id '{}'", row.get(columns.track_id).unwrap_or(""))))?;
        if track_id == 0 {
            return Err(malformed(line, "track id must be positive".into()));
        }
        let genre_cell = cell(columns.genre)?;
        let genre = Genre::parse(genre_cell)
            .ok_or_else(|| malformed(line, format!("unknown genre '{genre_cell}'")))?;

        let mut selections = EmotionSet::empty();
        for (e, &at) in Emotion::ALL.iter().zip(columns.emotions.iter()) {
            match cell(at)? {
                "0" => {}
                "1" => selections.insert(*e),
                other => {
                    return Err(malformed(
                        line,
                        format!("emotion cell for '{}' must be 0 or 1, got '{other}'", e.name()),
                    ))
                }
            }
        }
        let record = AnnotationRecord::new(track_id, genre, selections)
            .map_err(|e| malformed(line, e.to_string()))?;
        records.push(record);
    }

    if records.is_empty() {
        return Err(Error::EmptyAnnotations {
            path: path.display().to_string(),
        });
    }
    Ok(AnnotationTable::new(records))
}

/// Canonical CSV bytes for a table: fixed column order, one row per record.
pub fn annotations_to_csv(table: &AnnotationTable) -> String {
    let mut out = String::from("track_id,genre");
    for e in Emotion::ALL {
        out.push(',');
        out.push_str(e.name());
    }
    out.push('\n');
    for r in &table.records {
        out.push_str(&format!("{},{}", r.track_id, r.genre.name()));
        for e in Emotion::ALL {
            out.push_str(if r.selections.contains(e) { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}

/// Write the canonical CSV form, optionally preceded by a provenance comment.
pub fn save_annotations(
    table: &AnnotationTable,
    path: &Path,
    provenance: Option<&str>,
) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    if let Some(p) = provenance {
        writeln!(file, "# {p}").map_err(|e| Error::io(path, e))?;
    }
    file.write_all(annotations_to_csv(table).as_bytes())
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}
