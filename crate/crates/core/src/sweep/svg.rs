use std::fmt::Write;

use super::{ResultTable, SweepError};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

const PALETTE: [&str; 10] = [
    "#d62728", "#17becf", "#1f77b4", "#9467bd", "#e377c2", "#8c564b", "#2ca02c", "#ff7f0e", "#7f7f7f", "#bcbd22",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// Line chart of the table's `plot` column against its first column, one
/// polyline per series, with zero-crossing markers when present.
pub fn emit_svg(table: &ResultTable) -> Result<String, SweepError> {
    if table.rows.is_empty() {
        return Err(SweepError::EmptyTable);
    }
    let y_name = table.header_value("plot").unwrap_or(table.columns.last().map_or("", String::as_str));
    let y_col = table
        .column_index(y_name)
        .ok_or_else(|| SweepError::Table(format!("no column '{y_name}' to plot")))?;
    let x_name = &table.columns[0];

    let (x0, x1) = span(table.rows.iter().map(|r| r[0]));
    let (y0, y1) = span(table.rows.iter().map(|r| r[y_col]));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    for (k, v) in &table.header {
        if k != "config" {
            let _ = writeln!(s, "<!-- {}: {} -->", escape(k), escape(v).replace("--", "- -"));
        }
    }
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (x, y) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4:.4}</text>"#,
            sx(x),
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0,
            x
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{2:.2}" x2="{1}" y2="{2:.2}" stroke="black"/><text x="{3}" y="{4:.2}" text-anchor="end">{5:.4e}</text>"#,
            LEFT - 5.0,
            LEFT,
            sy(y),
            LEFT - 8.0,
            sy(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(x_name)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + ph / 2.0,
        escape(y_name)
    );

    let mut labels = table.series_labels();
    if labels.is_empty() {
        let mut ids: Vec<usize> = table.rows.iter().map(|r| r[1] as usize).collect();
        ids.dedup();
        labels = ids.into_iter().map(|id| (id, format!("series {id}"))).collect();
    }
    for (slot, (id, label)) in labels.iter().enumerate() {
        let colour = PALETTE[slot % PALETTE.len()];
        let dash = if slot >= PALETTE.len() { r#" stroke-dasharray="6 3""# } else { "" };
        let points: Vec<String> = table
            .series_rows(*id)
            .map(|r| format!("{:.2},{:.2}", sx(r[0]), sy(r[y_col])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-series="{id}" fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 14.0 * slot as f64 + 6.0;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(label)
        );
    }
    let base = if (y0..=y1).contains(&0.0) { 0.0 } else { y0 };
    for (id, x) in table.markers() {
        let _ = writeln!(
            s,
            r#"<circle class="zero-crossing" data-series="{id}" data-x="{x:.16e}" cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="black"/>"#,
            sx(x),
            sy(base)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
