use std::io::Write;

use super::{summarize, ConfusionMatrix, MatchReport, StatSummary};

/// Column order of the summary table.
pub const SERIES: [&str; 6] = ["a", "b", "c", "x", "y", "z"];

/// Shortest text that reads back to the same f64.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

pub fn write_pair_csv<W: Write>(out: W, reports: &[MatchReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "id",
        "matched",
        "rel_err_a",
        "rel_err_b",
        "rel_err_c",
        "mean_abs_coord_err",
        "superpose",
        "rms_anon",
        "ged",
        "ged_exact_flag",
    ])?;
    for r in reports {
        let d = r.distances.as_ref();
        w.write_record([
            r.id.clone(),
            r.matched.to_string(),
            num(r.lattice_rel_err[0]),
            num(r.lattice_rel_err[1]),
            num(r.lattice_rel_err[2]),
            opt(r.mean_abs_coord_err()),
            opt(d.and_then(|d| d.superpose)),
            opt(d.and_then(|d| d.rms_anonymous)),
            d.map_or_else(String::new, |d| d.graph_edit.distance.to_string()),
            d.map_or_else(String::new, |d| d.graph_edit.exact.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Square matrix with 1-based atom-count labels, followed by an `undecoded`
/// line and a `diagonal_fraction` line.
pub fn write_confusion_csv<W: Write>(out: W, m: &ConfusionMatrix) -> csv::Result<()> {
    // an empty matrix has a one-column header but two-column footer lines
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(std::iter::once("original\\predicted".to_string()).chain((1..=m.size()).map(|j| j.to_string())))?;
    for (i, row) in m.counts.iter().enumerate() {
        w.write_record(std::iter::once((i + 1).to_string()).chain(row.iter().map(|c| c.to_string())))?;
    }
    let mut undecoded = vec!["undecoded".to_string(), m.undecoded.to_string()];
    undecoded.resize((m.size() + 1).max(2), String::new());
    w.write_record(&undecoded)?;
    let mut last = vec!["diagonal_fraction".to_string(), num(m.diagonal_fraction())];
    last.resize((m.size() + 1).max(2), String::new());
    w.write_record(&last)?;
    w.flush()?;
    Ok(())
}

/// Per-series summaries: lattice-length errors over every pair, coordinate
/// errors over matched pairs only, skipping components reported as absolute.
pub fn summary_series(reports: &[MatchReport]) -> [Option<StatSummary>; 6] {
    let mut series: [Vec<f64>; 6] = Default::default();
    for r in reports {
        for k in 0..3 {
            series[k].push(r.lattice_rel_err[k]);
        }
        for e in &r.coord_rel_err {
            for k in 0..3 {
                if !e.absolute[k] {
                    series[3 + k].push(e.values[k]);
                }
            }
        }
    }
    series.map(|s| summarize(&s).ok())
}

/// Box-plot table: rows `efficiency`, `upper_limit`, `lower_limit`, columns
/// a, b, c, x, y, z, values in percent. Empty cells for empty series.
pub fn write_summary_csv<W: Write>(out: W, reports: &[MatchReport]) -> csv::Result<()> {
    let stats = summary_series(reports);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("row").chain(SERIES))?;
    let rows: [(&str, fn(&StatSummary) -> f64); 3] = [
        ("efficiency", |s| s.effective_rate),
        ("upper_limit", |s| s.upper_whisker),
        ("lower_limit", |s| s.lower_whisker),
    ];
    for (name, f) in rows {
        let cells = stats.iter().map(|s| opt(s.as_ref().map(|s| 100.0 * f(s))));
        w.write_record(std::iter::once(name.to_string()).chain(cells))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{atom_count_confusion, evaluate_pair, CoordError, EvalOptions};
    use crate::fixtures::mgmno3;

    fn lattice_only(errs: &[f64]) -> Vec<MatchReport> {
        errs.iter()
            .enumerate()
            .map(|(i, &e)| MatchReport {
                id: i.to_string(),
                original_sites: 1,
                predicted_sites: 1,
                assignment: Vec::new(),
                matched: true,
                lattice_rel_err: [e, 2.0 * e, -e],
                coord_rel_err: vec![CoordError { values: [e, 0.0, 0.0], absolute: [false, true, false] }],
                distances: None,
            })
            .collect()
    }

    #[test]
    fn summary_table_whiskers() {
        // 0.01..0.09 and one outlier at 0.40; Q1 0.0325, Q3 0.0775
        let errs = [0.09, 0.01, 0.40, 0.03, 0.05, 0.02, 0.08, 0.04, 0.07, 0.06];
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &lattice_only(&errs)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rdr.headers().unwrap(), vec!["row", "a", "b", "c", "x", "y", "z"]);
        let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
        assert_eq!(&rows[0][0], "efficiency");
        let cell = |r: usize, c: usize| rows[r][c].parse::<f64>().unwrap();
        assert!((cell(0, 1) - 90.0).abs() < 1e-9);
        assert!((cell(1, 1) - 14.5).abs() < 1e-9);
        assert!((cell(2, 1) - 1.0).abs() < 1e-9);
        // b doubles every value, c negates it
        assert!((cell(1, 2) - 29.0).abs() < 1e-9);
        assert!((cell(2, 3) + 14.5).abs() < 1e-9);
        assert!((cell(1, 4) - 14.5).abs() < 1e-9);
        // every y component is absolute, so the y series is empty
        assert_eq!(&rows[0][5], "");
    }

    #[test]
    fn pair_csv_columns() {
        let s = mgmno3();
        let r = evaluate_pair("MgMnO3", &s, &s, &EvalOptions::default());
        let mut buf = Vec::new();
        write_pair_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "id,matched,rel_err_a,rel_err_b,rel_err_c,mean_abs_coord_err,superpose,rms_anon,ged,ged_exact_flag"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "MgMnO3");
        assert_eq!(row[1], "true");
        assert_eq!(row[8], "0");
        assert_eq!(row[9], "true");
    }

    #[test]
    fn confusion_csv_layout() {
        let m = atom_count_confusion(&[(2, 2), (2, 1)]);
        let mut buf = Vec::new();
        write_confusion_csv(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "original\\predicted,1,2\n1,0,0\n2,1,1\nundecoded,0,\ndiagonal_fraction,0.5,\n");
        let mut buf = Vec::new();
        write_confusion_csv(&mut buf, &atom_count_confusion(&[(1, 0)])).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "original\\predicted,1\n1,0\nundecoded,1\ndiagonal_fraction,0.0\n");
    }
}
