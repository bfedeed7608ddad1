//! Human-readable tables and figure-data files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use crate::error::{Error, Result};
use crate::ingest::Table;
use crate::netgraph::NetworkMeasure;
use crate::panelfit::{effect_percent, CoefRow, Control, FitSummary};
use crate::quarter::Quarter;
use crate::threatscan::{EventBin, ThreatEvent};

/// Format a number with a typographic minus sign.
fn signed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().any(|c| c.is_ascii_digit() && c != '0') => format!("\u{2212}{rest}"),
        Some(rest) => rest.to_string(),
        None => s,
    }
}

/// `estimate` with stars and the standard error in parentheses, e.g.
/// `−0.177*** (0.063)`.
pub fn format_cell(row: &CoefRow) -> String {
    format!("{}{} ({:.3})", signed(row.estimate, 3), row.stars, row.se)
}

/// One rendered table line.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub term: String,
    pub caption: String,
    pub coef: Option<CoefRow>,
    /// Used for footer lines without a coefficient.
    pub text: String,
}

/// Rows in table order: pre-threat bins, threat bins, entry bins, any
/// network-measure rows, controls present in the fit, then the fixed-effect
/// note, R² and N. Terms absent from the fit (dropped as collinear) are
/// skipped.
pub fn table_rows(fit: &FitSummary) -> Vec<TableRow> {
    let mut out = Vec::new();
    let mut push = |term: String, caption: String| {
        if let Some(r) = fit.get(&term) {
            out.push(TableRow {
                text: format_cell(r),
                coef: Some(r.clone()),
                term,
                caption,
            });
        }
    };
    for bin in EventBin::INDICATORS {
        push(bin.label(), bin.caption());
    }
    if let Some(m) = fit.meta("interaction").and_then(|m| m.parse::<NetworkMeasure>().ok()) {
        for bin in EventBin::INTERACTED {
            push(format!("{}:{}", bin.label(), m.name()), format!("{} x {}", bin.caption(), m.name()));
        }
        push(m.name().to_string(), "Network measure".to_string());
    }
    for c in Control::ALL {
        push(c.name().to_string(), c.caption().to_string());
    }
    let footer = |term: &str, caption: &str, text: String| TableRow {
        term: term.to_string(),
        caption: caption.to_string(),
        coef: None,
        text,
    };
    out.push(footer("fixed_effects", "Carrier-route and quarter FE", "Yes".into()));
    out.push(footer(
        "r_squared",
        "R-squared",
        fit.r_squared().map(|r| format!("{r:.3}")).unwrap_or_else(|| "n/a".into()),
    ));
    out.push(footer(
        "n",
        "N",
        fit.n().map(|n| n.to_string()).unwrap_or_else(|| "n/a".into()),
    ));
    out
}

/// Render a fit as an aligned text table and as CSV. The CSV carries full
/// precision estimates so it can be read back with [`read_table_csv`].
pub fn emit_table(fit: &FitSummary) -> Result<(String, String)> {
    let rows = table_rows(fit);
    let width = rows.iter().map(|r| r.caption.chars().count()).max().unwrap_or(0);
    let mut text = String::new();
    let outcome = fit.meta("outcome").unwrap_or("outcome");
    let _ = writeln!(text, "{:width$}  {outcome}", "");
    for r in &rows {
        let _ = writeln!(text, "{:width$}  {}", r.caption, r.text);
    }
    let se = match fit.meta("covariance") {
        Some("robust") => "Robust standard errors in parentheses.",
        _ => "Standard errors clustered by carrier-route in parentheses.",
    };
    let _ = writeln!(text, "{se} * p<0.10, ** p<0.05, *** p<0.01.");
    if let Some(dropped) = fit.meta("dropped") {
        let _ = writeln!(text, "Dropped as collinear: {}", dropped.replace(';', ", "));
    }

    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["TERM", "CAPTION", "ESTIMATE", "SE", "STARS", "CELL"])?;
    for r in &rows {
        match &r.coef {
            Some(c) => wr.write_record([
                r.term.as_str(),
                r.caption.as_str(),
                &c.estimate.to_string(),
                &c.se.to_string(),
                c.stars.as_str(),
                r.text.as_str(),
            ])?,
            None => wr.write_record([r.term.as_str(), r.caption.as_str(), "", "", "", r.text.as_str()])?,
        }
    }
    let csv = String::from_utf8(wr.into_inner().map_err(|e| Error::Parse(e.to_string()))?)
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok((text, csv))
}

/// Coefficient rows of a table CSV written by [`emit_table`].
pub fn read_table_csv<R: Read>(reader: R) -> Result<Vec<CoefRow>> {
    let mut table = Table::new("table csv", reader, &["TERM", "ESTIMATE", "SE", "STARS"], &[])?;
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row.map_err(|e| Error::Parse(format!("table csv {e}")))?;
        if row.get(1).is_empty() {
            continue;
        }
        let parse = |i: usize, name: &str| row.parse::<f64>(i, name).map_err(|e| Error::Parse(e.to_string()));
        out.push(CoefRow {
            term: row.get(0).to_string(),
            estimate: parse(1, "ESTIMATE")?,
            se: parse(2, "SE")?,
            stars: row.get(3).to_string(),
        });
    }
    Ok(out)
}

/// Event-time curve: every bin's estimate as a percentage change
/// `100(exp(b) − 1)` with a 95% band, the omitted baseline first at zero.
pub fn event_curve_csv(fit: &FitSummary) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["BIN", "ESTIMATE", "SE", "PERCENT", "PERCENT_LO95", "PERCENT_HI95"])?;
    wr.write_record(["baseline", "0", "0", "0", "0", "0"])?;
    for bin in EventBin::INDICATORS {
        let Some(r) = fit.get(&bin.label()) else {
            continue;
        };
        wr.write_record([
            bin.label(),
            r.estimate.to_string(),
            r.se.to_string(),
            effect_percent(r.estimate).to_string(),
            effect_percent(r.estimate - 1.96 * r.se).to_string(),
            effect_percent(r.estimate + 1.96 * r.se).to_string(),
        ])?;
    }
    String::from_utf8(wr.into_inner().map_err(|e| Error::Parse(e.to_string()))?)
        .map_err(|e| Error::Parse(e.to_string()))
}

/// Counts of `t0` by calendar quarter and of `te − t0` in quarters. Both
/// series are filled with zeros between their smallest and largest value.
pub fn emit_histograms(events: &[ThreatEvent]) -> (String, String) {
    let mut t0: BTreeMap<Quarter, usize> = BTreeMap::new();
    let mut gaps: BTreeMap<i64, usize> = BTreeMap::new();
    for e in events {
        *t0.entry(e.t0).or_default() += 1;
        *gaps.entry(e.te.offset_from(e.t0)).or_default() += 1;
    }
    let mut t0_csv = String::from("QUARTER,COUNT\n");
    if let (Some(&first), Some(&last)) = (t0.keys().next(), t0.keys().next_back()) {
        for q in first.range_to(last) {
            let _ = writeln!(t0_csv, "{q},{}", t0.get(&q).copied().unwrap_or(0));
        }
    }
    let mut gap_csv = String::from("QUARTERS,COUNT\n");
    if let (Some(&lo), Some(&hi)) = (gaps.keys().next(), gaps.keys().next_back()) {
        for g in lo..=hi {
            let _ = writeln!(gap_csv, "{g},{}", gaps.get(&g).copied().unwrap_or(0));
        }
    }
    (t0_csv, gap_csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::Route;
    use std::collections::BTreeSet;

    fn summary(rows: &[(&str, f64, f64)], covariance: &str) -> FitSummary {
        let mut metadata = BTreeMap::new();
        metadata.insert("outcome".to_string(), "mean_fare".to_string());
        metadata.insert("covariance".to_string(), covariance.to_string());
        metadata.insert("n".to_string(), "3157".to_string());
        metadata.insert("r_squared".to_string(), "0.91".to_string());
        FitSummary {
            metadata,
            rows: rows
                .iter()
                .map(|&(t, e, s)| CoefRow {
                    term: t.into(),
                    estimate: e,
                    se: s,
                    stars: crate::panelfit::stars(e, s).into(),
                })
                .collect(),
        }
    }

    #[test]
    fn entry_cell_renders_with_minus_and_stars() {
        let fit = summary(&[("entry0", -0.177, 0.063)], "cluster");
        let rows = table_rows(&fit);
        assert_eq!(rows[0].text, "\u{2212}0.177*** (0.063)");
        assert_eq!(signed(-0.0001, 3), "0.000");
    }

    #[test]
    fn order_and_footer() {
        let fit = summary(
            &[
                ("distance_hundreds", 0.1, 0.01),
                ("entry0", -0.177, 0.063),
                ("dual0", -0.03, 0.02),
                ("pre-8", 0.01, 0.02),
            ],
            "cluster",
        );
        let terms: Vec<String> = table_rows(&fit).into_iter().map(|r| r.term).collect();
        assert_eq!(
            terms,
            ["pre-8", "dual0", "entry0", "distance_hundreds", "fixed_effects", "r_squared", "n"]
        );
        let no_controls = summary(&[("entry0", -0.177, 0.063)], "cluster");
        assert!(table_rows(&no_controls).iter().all(|r| r.term != "distance_hundreds"));
    }

    #[test]
    fn table_csv_round_trips_estimates() {
        let fit = summary(&[("entry0", -0.17712345678901234, 0.0631), ("dual1", 1e-17, 0.5)], "robust");
        let (text, csv) = emit_table(&fit).unwrap();
        assert!(text.contains("Robust standard errors"));
        let back = read_table_csv(csv.as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        let entry = back.iter().find(|r| r.term == "entry0").unwrap();
        assert_eq!(entry.estimate, -0.17712345678901234);
        assert_eq!(back.iter().find(|r| r.term == "dual1").unwrap().estimate, 1e-17);
    }

    #[test]
    fn event_curve_uses_exponential_transform() {
        let fit = summary(&[("entry0", -0.177, 0.063)], "cluster");
        let csv = event_curve_csv(&fit).unwrap();
        let line = csv.lines().find(|l| l.starts_with("entry0")).unwrap();
        let pct: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((pct - 100.0 * ((-0.177f64).exp() - 1.0)).abs() < 1e-12);
    }

    fn event(t0: &str, te: &str) -> ThreatEvent {
        ThreatEvent {
            entrant: "WN".into(),
            route: Route::new("DEN", "SNA"),
            t_s: "1999Q1".parse().unwrap(),
            t0: t0.parse().unwrap(),
            te: te.parse().unwrap(),
            incumbents: BTreeSet::new(),
        }
    }

    #[test]
    fn histograms() {
        let evs = [event("2006Q1", "2008Q4"), event("2006Q1", "2008Q3"), event("2006Q1", "2008Q3")];
        let (t0, gaps) = emit_histograms(&evs);
        assert_eq!(t0, "QUARTER,COUNT\n2006Q1,3\n");
        assert_eq!(gaps, "QUARTERS,COUNT\n10,2\n11,1\n");
        let (t0, gaps) = emit_histograms(&[]);
        assert_eq!((t0.lines().count(), gaps.lines().count()), (1, 1));
    }
}
