//! Text and CSV renderings of an evaluation report.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::training::{EvalReport, Tally};

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn summary(report: &EvalReport, models: usize) -> String {
    format!(
        "accuracy={:.6}\ncorrect={}\nincorrect={}\ntotal={}\nmodels={}\n",
        report.accuracy(),
        report.overall.correct,
        report.overall.incorrect(),
        report.overall.total,
        models
    )
}

/// `key,correct,incorrect,total` rows sorted by key.
pub fn tally_csv(rows: &BTreeMap<String, Tally>) -> String {
    let mut out = String::from("key,correct,incorrect,total\n");
    for (key, t) in rows {
        let _ = writeln!(out, "{},{},{},{}", csv_field(key), t.correct, t.incorrect(), t.total);
    }
    out
}

pub fn confusion_csv(report: &EvalReport) -> String {
    let mut out = String::from("gold,predicted,count\n");
    for ((gold, pred), n) in &report.confusion {
        let _ = writeln!(out, "{},{},{}", csv_field(gold), csv_field(pred), n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_and_quoting() {
        let rows = BTreeMap::from([
            ("in".to_string(), Tally { correct: 3, total: 4 }),
            ("a,b".to_string(), Tally { correct: 0, total: 1 }),
        ]);
        assert_eq!(
            tally_csv(&rows),
            "key,correct,incorrect,total\n\"a,b\",0,1,1\nin,3,1,4\n"
        );
    }

    #[test]
    fn summary_lines() {
        let r = EvalReport {
            overall: Tally { correct: 3, total: 4 },
            ..EvalReport::default()
        };
        assert_eq!(
            summary(&r, 1),
            "accuracy=0.750000\ncorrect=3\nincorrect=1\ntotal=4\nmodels=1\n"
        );
    }
}
