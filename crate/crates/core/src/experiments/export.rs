//! CSV, JSON and SVG renderings of a [`TradeoffTable`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::tradeoff::{TradeoffRow, TradeoffTable};

type Series = (&'static str, &'static str, fn(&TradeoffRow) -> f64);

pub const CSV_HEADER: &str = "phi,lp_utility,mixing_utility,lp_ndcg,mixing_ndcg,lp_phi_star";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
    Svg,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" | "svg_line_plot" => Ok(Self::Svg),
            other => Err(format!("unknown format `{other}` (csv, json or svg)")),
        }
    }
}

/// `v` with 10 significant digits in plain decimal notation.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    // the exponent after rounding to 10 digits, so 0.99999999999 counts as 1
    let sci = format!("{v:.9e}");
    let exponent: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    let decimals = (9 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn table_to_csv(table: &TradeoffTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        let fields = [
            r.phi,
            r.lp_utility,
            r.mixing_utility,
            r.lp_ndcg,
            r.mixing_ndcg,
            r.lp_phi_star,
        ];
        let line: Vec<String> = fields.iter().map(|&v| format_sig(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn table_to_json(table: &TradeoffTable) -> String {
    serde_json::to_string_pretty(table).expect("serializable")
}

pub fn table_from_json(text: &str) -> Result<TradeoffTable> {
    let table: TradeoffTable = serde_json::from_str(text)?;
    table.validate()?;
    Ok(table)
}

/// Utility versus phi for the LP and mixing policies.
pub fn table_to_svg(table: &TradeoffTable) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;
    let values = table
        .rows
        .iter()
        .flat_map(|r| [r.lp_utility, r.mixing_utility]);
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    let px = |phi: f64| LEFT + phi * (W - LEFT - RIGHT);
    let py = |u: f64| TOP + (hi - u) / (hi - lo) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let title = match &table.metadata.genre {
        Some(g) => format!("Utility vs fairness ({g}, n = {})", table.metadata.n),
        None => format!("Utility vs fairness (n = {})", table.metadata.n),
    };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(&title)
    );
    let (x0, x1, y0, y1) = (px(0.0), px(1.0), py(lo), py(hi));
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    for i in 0..=5 {
        let phi = i as f64 / 5.0;
        let x = px(phi);
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{phi:.1}</text>"#,
            y0 + 18.0
        );
        let u = lo + (hi - lo) * i as f64 / 5.0;
        let y = py(u);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{u:.4}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">phi</text>"#,
        (x0 + x1) / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">utility</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let series: [Series; 2] = [
        ("LP", "#1f77b4", |r| r.lp_utility),
        ("OPT/TS mixing", "#d62728", |r| r.mixing_utility),
    ];
    for (i, (name, color, f)) in series.iter().enumerate() {
        let points: Vec<String> = table
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.phi), py(f(r))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            x1 - 150.0,
            x1 - 125.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            x1 - 118.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn render(table: &TradeoffTable, format: ExportFormat) -> String {
    match format {
        ExportFormat::Csv => table_to_csv(table),
        ExportFormat::Json => table_to_json(table),
        ExportFormat::Svg => table_to_svg(table),
    }
}

pub fn export_results(table: &TradeoffTable, format: ExportFormat, path: &Path) -> Result<()> {
    table.validate()?;
    fs::write(path, render(table, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::tradeoff::{TradeoffMetadata, TradeoffRow};

    fn table(rows: Vec<TradeoffRow>) -> TradeoffTable {
        TradeoffTable {
            rows,
            metadata: TradeoffMetadata {
                seed: 7,
                genre: Some("Comedy".into()),
                n: 3,
                subsample: Some(0.1),
                runs: 1,
                mc_samples: None,
            },
        }
    }

    fn row(phi: f64) -> TradeoffRow {
        TradeoffRow {
            phi,
            lp_utility: 1.5 - phi / 24.0,
            mixing_utility: 1.5 - phi / 12.0,
            lp_ndcg: 1.0 - phi / 36.0,
            mixing_ndcg: 1.0 - phi / 18.0,
            lp_phi_star: phi,
        }
    }

    #[test]
    fn empty_grid_is_header_only() {
        assert_eq!(table_to_csv(&table(vec![])), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_uses_ten_significant_digits() {
        let csv = table_to_csv(&table(vec![row(0.0), row(1.0)]));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "0,1.500000000,1.500000000,1.000000000,1.000000000,0"
        );
        assert_eq!(
            lines[2],
            "1.000000000,1.458333333,1.416666667,0.9722222222,0.9444444444,1.000000000"
        );
        assert_eq!(format_sig(-0.000123456789012), "-0.0001234567890");
        assert_eq!(format_sig(12345.678901234), "12345.67890");
        assert_eq!(format_sig(0.999999999999), "1.000000000");
        assert_eq!(format_sig(9.9999999999e-5), "0.0001000000000");
    }

    #[test]
    fn json_round_trips() {
        let t = table(vec![row(0.0), row(0.1), row(1.0 / 3.0)]);
        assert_eq!(table_from_json(&table_to_json(&t)).unwrap(), t);
    }

    #[test]
    fn svg_has_two_series() {
        let svg = table_to_svg(&table(vec![row(0.0), row(0.5), row(1.0)]));
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn formats_parse() {
        assert_eq!("CSV".parse::<ExportFormat>().unwrap(), ExportFormat::Csv);
        assert_eq!("svg".parse::<ExportFormat>().unwrap(), ExportFormat::Svg);
        assert!("xml".parse::<ExportFormat>().is_err());
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let t = table(vec![row(0.0)]);
        assert!(
            export_results(&t, ExportFormat::Csv, Path::new("/nonexistent-dir/x.csv")).is_err()
        );
    }
}
