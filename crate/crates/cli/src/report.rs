//! Renderings of the comparison table: markdown, CSV and JSON carry the
//! same values; durations show as `[min]:[sec]` in markdown and CSV and as
//! raw seconds in JSON.

use crate::{fmt_detected, fmt_duration, ComparisonTable};

pub fn to_markdown(table: &ComparisonTable) -> String {
    let mut out = String::new();
    out.push_str("| object | start | location | seed | detected P | detected S | duration P | duration S | # P | # S |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for r in &table.rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.object,
            r.start,
            r.location,
            r.seed,
            fmt_detected(r.detected_p),
            fmt_detected(r.detected_s),
            fmt_duration(r.duration_p_s),
            fmt_duration(r.duration_s_s),
            r.positions_p.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
            r.positions_s.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
        ));
    }
    let t = &table.scan_timing;
    out.push_str(&format!(
        "\nscan timing ({} steps): sequential {} s, pipelined {} s; pipeline saves {} s per room, full overlap would save {} s\n",
        t.steps, t.sequential_s, t.concurrent_s, t.pipeline_saving_s, t.idealized_full_overlap_saving_s
    ));
    out
}

pub fn to_csv(table: &ComparisonTable) -> String {
    let mut out = String::from(
        "object,start,location,seed,detected_p,detected_s,duration_p,duration_s,positions_p,positions_s\n",
    );
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.object,
            r.start,
            r.location,
            r.seed,
            fmt_detected(r.detected_p),
            fmt_detected(r.detected_s),
            fmt_duration(r.duration_p_s),
            fmt_duration(r.duration_s_s),
            r.positions_p.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
            r.positions_s.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
        ));
    }
    let t = &table.scan_timing;
    out.push_str(&format!(
        "#scan_timing,steps={},sequential_s={},concurrent_s={},pipeline_saving_s={},idealized_full_overlap_saving_s={}\n",
        t.steps, t.sequential_s, t.concurrent_s, t.pipeline_saving_s, t.idealized_full_overlap_saving_s
    ));
    out
}

pub fn to_json(table: &ComparisonTable) -> String {
    serde_json::to_string_pretty(table).expect("table serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ComparisonRow, ScanTimingReport};
    use fetchsim_core::mission::Detected;
    use fetchsim_core::nav::DurationModel;

    fn sample() -> ComparisonTable {
        ComparisonTable {
            rows: vec![ComparisonRow {
                object: "asus_box".into(),
                start: "kitchen".into(),
                location: "dining table".into(),
                seed: 20,
                detected_p: Some(Detected::Yes),
                detected_s: Some(Detected::FalsePositive),
                duration_p_s: Some(432.0),
                duration_s_s: Some(991.0),
                positions_p: Some(9),
                positions_s: Some(17),
            }],
            scan_timing: ScanTimingReport::for_model(&DurationModel::default()),
        }
    }

    #[test]
    fn formats_carry_identical_values() {
        let table = sample();
        let md = to_markdown(&table);
        let csv = to_csv(&table);
        let json = to_json(&table);
        // The markdown and CSV rows show the same rendered fields.
        for needle in ["asus_box", "kitchen", "dining table", "Y", "N*", "7:12", "16:31", "9", "17"] {
            assert!(md.contains(needle), "markdown lacks {needle}:\n{md}");
            assert!(csv.contains(needle), "csv lacks {needle}:\n{csv}");
        }
        // JSON carries raw values.
        let parsed: ComparisonTable = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, table);
        assert_eq!(parsed.rows[0].duration_p_s, Some(432.0));
    }

    #[test]
    fn timing_block_reports_both_savings() {
        let table = sample();
        for text in [to_markdown(&table), to_csv(&table)] {
            assert!(text.contains("108"));
            assert!(text.contains("64"));
            assert!(text.contains("44"));
            assert!(text.contains("48"));
        }
    }
}
