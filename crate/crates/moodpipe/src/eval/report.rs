//! Rendering of evaluation reports as aligned-text tables (one accuracy
//! table and one RMSE table per consensus threshold, column groups =
//! preprocessing × classifier) and as long-format CSV.

use std::collections::BTreeMap;

use super::EvalReport;

/// Emotion display order in the tables (alphabetical).
const TABLE_EMOTIONS: [&str; 9] = [
    "amazement",
    "calmness",
    "joyful_activation",
    "nostalgia",
    "power",
    "sadness",
    "solemnity",
    "tenderness",
    "tension",
];

/// Family column order and display names.
const FAMILY_ORDER: [(&str, &str); 3] = [
    ("svm_smo", "SMO"),
    ("naive_bayes", "BAY"),
    ("mlp", "MLP"),
];

const LABEL_WIDTH: usize = 19;
const ACC_CELL: usize = 9;
const RMSE_CELL: usize = 15;

fn threshold_keys(reports: &[EvalReport]) -> Vec<f64> {
    let mut keys: Vec<f64> = Vec::new();
    for r in reports {
        if !keys.iter().any(|&t| t == r.threshold) {
            keys.push(r.threshold);
        }
    }
    keys.sort_by(|a, b| b.partial_cmp(a).unwrap());
    keys
}

/// Canonical column-group order: raw, cfs, discr+cfs, then t-test variants
/// by descending p, then discretized t-test variants.
fn preprocessing_rank(label: &str) -> (u8, i64) {
    use crate::eval::Preprocessing;
    match Preprocessing::parse(label) {
        Some(Preprocessing::Raw) => (0, 0),
        Some(Preprocessing::Cfs) => (1, 0),
        Some(Preprocessing::DiscrCfs) => (2, 0),
        Some(Preprocessing::Ttest { p }) => (3, -(p * 1e6) as i64),
        Some(Preprocessing::DiscrTtest { p }) => (4, -(p * 1e6) as i64),
        None => (5, 0),
    }
}

fn preprocessing_keys(reports: &[EvalReport]) -> Vec<String> {
    let mut keys = Vec::new();
    for r in reports {
        if !keys.contains(&r.preprocessing) {
            keys.push(r.preprocessing.clone());
        }
    }
    keys.sort_by(|a, b| preprocessing_rank(a).cmp(&preprocessing_rank(b)).then(a.cmp(b)));
    keys
}

fn families_present(reports: &[EvalReport]) -> Vec<(&'static str, &'static str)> {
    FAMILY_ORDER
        .iter()
        .copied()
        .filter(|(name, _)| reports.iter().any(|r| r.family == *name))
        .collect()
}

fn pad(text: &str, width: usize) -> String {
    format!("{text:>width$}")
}

type ReportIndex<'a> = BTreeMap<(String, String), &'a EvalReport>;

fn index_reports(reports: &[EvalReport], threshold: f64) -> ReportIndex<'_> {
    reports
        .iter()
        .filter(|r| r.threshold == threshold)
        .map(|r| ((r.preprocessing.clone(), r.family.clone()), r))
        .collect()
}

fn one_table(
    title: &str,
    reports: &[EvalReport],
    threshold: f64,
    base_cell_width: usize,
    cell: impl Fn(&EvalReport, &str) -> Option<String>,
    class_rows: impl Fn(&EvalReport) -> (String, String),
) -> (String, bool) {
    let index = index_reports(reports, threshold);
    let preprocessing = preprocessing_keys(reports);
    let families = families_present(reports);
    let mut any_missing = false;

    // Group headers must fit inside their family span.
    let longest_label = preprocessing.iter().map(|p| p.len()).max().unwrap_or(0);
    let cell_width = base_cell_width.max(longest_label.div_ceil(families.len().max(1)) + 2);

    let mut out = String::new();
    out.push_str(title);
    out.push('\n');

    // Group header row (preprocessing labels spanning their families).
    let mut line = " ".repeat(LABEL_WIDTH);
    for prep in &preprocessing {
        let span = cell_width * families.len();
        let label = prep.to_uppercase();
        line.push_str(&format!("{label:>span$}"));
    }
    out.push_str(line.trim_end());
    out.push('\n');

    // Family header row.
    let mut line = " ".repeat(LABEL_WIDTH);
    for _ in &preprocessing {
        for (_, display) in &families {
            line.push_str(&pad(display, cell_width));
        }
    }
    out.push_str(line.trim_end());
    out.push('\n');

    let mut rows: Vec<(String, Vec<Option<String>>)> = Vec::new();
    for emotion in TABLE_EMOTIONS {
        let mut cells = Vec::new();
        for prep in &preprocessing {
            for (family, _) in &families {
                let value = index
                    .get(&(prep.clone(), family.to_string()))
                    .and_then(|r| cell(r, emotion));
                cells.push(value);
            }
        }
        rows.push((emotion.to_string(), cells));
    }

    for (label, cells) in &rows {
        let mut line = format!("{label:<LABEL_WIDTH$}");
        for c in cells {
            match c {
                Some(text) => line.push_str(&pad(text, cell_width)),
                None => {
                    any_missing = true;
                    line.push_str(&pad("—", cell_width));
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }

    for (label, pick) in [("CLASS. MEAN", 0usize), ("CLASS. STD", 1usize)] {
        let mut line = format!("{label:<LABEL_WIDTH$}");
        for prep in &preprocessing {
            for (family, _) in &families {
                match index.get(&(prep.clone(), family.to_string())) {
                    Some(r) => {
                        let (mean, std) = class_rows(r);
                        line.push_str(&pad(if pick == 0 { &mean } else { &std }, cell_width));
                    }
                    None => {
                        any_missing = true;
                        line.push_str(&pad("—", cell_width));
                    }
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }

    (out, any_missing)
}

/// Render accuracy and RMSE tables for every threshold present.
pub fn format_tables(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let mut any_missing = false;

    for threshold in threshold_keys(reports) {
        let pct = threshold * 100.0;
        let (table, missing) = one_table(
            &format!("Accuracy (%) — consensus @ {pct:.0}%"),
            reports,
            threshold,
            ACC_CELL,
            |r, emotion| {
                r.per_emotion
                    .get(emotion)
                    .map(|s| format!("{:.2}", s.accuracy.mean))
            },
            |r| {
                (
                    format!("{:.2}", r.class_mean_accuracy),
                    format!("{:.2}", r.class_std_accuracy),
                )
            },
        );
        out.push_str(&table);
        out.push('\n');
        any_missing |= missing;

        let (table, missing) = one_table(
            &format!("RMSE (mean ± std over folds × inits) — consensus @ {pct:.0}%"),
            reports,
            threshold,
            RMSE_CELL,
            |r, emotion| {
                r.per_emotion
                    .get(emotion)
                    .map(|s| format!("{:.2} ± {:.2}", s.rmse.mean, s.rmse.std))
            },
            |r| {
                (
                    format!("{:.2}", r.class_mean_rmse),
                    format!("{:.2}", r.class_std_rmse),
                )
            },
        );
        out.push_str(&table);
        out.push('\n');
        any_missing |= missing;
    }

    if any_missing {
        out.push_str("— : cell skipped (single-class training fold) or experiment not run.\n");
    }
    let skipped: usize = reports.iter().map(|r| r.skipped.len()).sum();
    if skipped > 0 {
        out.push_str(&format!(
            "{skipped} fold-emotion cell(s) were skipped; see the JSON reports for reasons.\n"
        ));
    }
    out.push_str(
        "Reference: the source study reports Bayes discr+cfs @30% at 88.00% mean accuracy \
         (RMSE .29 ± .07); those cells depend on its unrecoverable 476-feature toolbox \
         inventory and are reference-only here.\n",
    );
    out
}

/// Long-format CSV over all reports: one row per (emotion, metric) summary
/// plus CLASS.MEAN / CLASS.STD rows.
pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("threshold,preprocessing,family,emotion,metric,mean,std\n");
    for r in reports {
        for (emotion, s) in &r.per_emotion {
            out.push_str(&format!(
                "{},{},{},{},accuracy,{:.6},{:.6}\n",
                r.threshold, r.preprocessing, r.family, emotion, s.accuracy.mean, s.accuracy.std
            ));
            out.push_str(&format!(
                "{},{},{},{},rmse,{:.6},{:.6}\n",
                r.threshold, r.preprocessing, r.family, emotion, s.rmse.mean, s.rmse.std
            ));
        }
        out.push_str(&format!(
            "{},{},{},CLASS.MEAN,accuracy,{:.6},{:.6}\n",
            r.threshold, r.preprocessing, r.family, r.class_mean_accuracy, r.class_std_accuracy
        ));
        out.push_str(&format!(
            "{},{},{},CLASS.MEAN,rmse,{:.6},{:.6}\n",
            r.threshold, r.preprocessing, r.family, r.class_mean_rmse, r.class_std_rmse
        ));
    }
    out
}

/// Per-emotion bar-chart data (means and stds per classifier), mirroring
/// the figure layout: one CSV row per (emotion, family).
pub fn plot_data_csv(reports: &[EvalReport], threshold: f64) -> String {
    let mut out = String::from("emotion,family,preprocessing,accuracy_mean,accuracy_std\n");
    for r in reports.iter().filter(|r| r.threshold == threshold) {
        for (emotion, s) in &r.per_emotion {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6}\n",
                emotion, r.family, r.preprocessing, s.accuracy.mean, s.accuracy.std
            ));
        }
    }
    out
}
