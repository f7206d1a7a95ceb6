use std::fmt::Write as _;
use std::path::Path;

use super::sweep::{closed_form_rows, SweepRow};
use crate::distributions::CodeParams;
use crate::error::{Error, Result};

/// The two panels: `d′ = 16` and `d′ = 2` at `d = 32`.
pub const FIGURE2_CODES: [(u32, u32); 2] = [(5, 4), (5, 1)];

/// Last abscissa; the curves equal 1 there to within `1e-8`.
const SIGMA_END: f64 = 1.0 - 1e-9;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 44.0;

const CURVES: [(&str, &str, &str); 3] = [
    ("f2_psi0", "F²(Ψ0)", "#1b9e77"),
    ("f2_phi_tilde", "F²(Φ̃)", "#d95f02"),
    ("f2_psi", "F²(Ψ)", "#7570b3"),
];

/// Closed-form rows for both panels on `points` evenly spaced abscissae in
/// `[0, 1)`, followed by `σ_c = 1 - 1e-9`.
pub fn figure2_rows(points: usize) -> Result<Vec<SweepRow>> {
    if points < 2 {
        return Err(Error::invalid("figure needs at least two abscissae"));
    }
    let mut grid: Vec<f64> = (0..points).map(|i| i as f64 / points as f64).collect();
    grid.push(SIGMA_END);
    let codes = FIGURE2_CODES
        .iter()
        .map(|&(n, m)| CodeParams::new(n, m))
        .collect::<Result<Vec<_>>>()?;
    closed_form_rows(&codes, &grid, None)
}

fn curve_value(row: &SweepRow, key: &str) -> f64 {
    match key {
        "f2_psi0" => row.f2_psi0,
        "f2_phi_tilde" => row.f2_phi_tilde,
        _ => row.f2_psi,
    }
}

fn panel(out: &mut String, rows: &[&SweepRow], n: u32, m: u32, x0: f64) {
    let (w, h) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let sx = |s: f64| x0 + MARGIN_L + s * w;
    let sy = |f: f64| MARGIN_T + (1.0 - f) * h;
    let d_prime = 1u32 << m;
    let _ = writeln!(out, r#"<g class="panel" data-n="{n}" data-m="{m}">"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">n = {n}, m = {m} (d′ = {d_prime})</text>"#,
        x0 + MARGIN_L + w / 2.0
    );
    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{MARGIN_T}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##,
        sx(0.0)
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{y1:.1}" stroke="#444"/><text x="{x:.1}" y="{ty:.1}" text-anchor="middle" font-size="11">{t:.1}</text>"##,
            x = sx(t),
            y0 = sy(0.0),
            y1 = sy(0.0) + 5.0,
            ty = sy(0.0) + 18.0,
        );
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#444"/><text x="{tx:.1}" y="{ty:.1}" text-anchor="end" font-size="11">{t:.1}</text>"##,
            x0 = sx(0.0) - 5.0,
            x1 = sx(0.0),
            y = sy(t),
            tx = sx(0.0) - 8.0,
            ty = sy(t) + 4.0,
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">σ</text>"#,
        sx(0.5),
        PANEL_H - 6.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.1} {:.1})">F²</text>"#,
        x0 + 14.0,
        sy(0.5),
        x0 + 14.0,
        sy(0.5)
    );
    for (k, (key, label, color)) in CURVES.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(r.sigma_c), sy(curve_value(r, key))))
            .collect();
        let values: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.16e}:{:.16e}", r.sigma_c, curve_value(r, key)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="curve" data-curve="{key}" data-values="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
            values.join(" "),
            points.join(" ")
        );
        let ly = MARGIN_T + 12.0 + 16.0 * k as f64;
        let lx = sx(0.0) + w - 80.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.6"/><text x="{:.1}" y="{:.1}" font-size="11">{label}</text>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0
        );
    }
    out.push_str("</g>\n");
}

/// Standalone SVG with one panel per entry of [`FIGURE2_CODES`]. Each curve
/// carries its exact samples as `σ:F²` pairs in a `data-values` attribute.
pub fn figure2_svg(rows: &[SweepRow]) -> Result<String> {
    let width = PANEL_W * FIGURE2_CODES.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif">"#
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (i, &(n, m)) in FIGURE2_CODES.iter().enumerate() {
        let mut panel_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.n == n && r.m == m).collect();
        if panel_rows.len() < 2 {
            return Err(Error::invalid(format!(
                "figure needs at least two rows for code ({n}, {m})"
            )));
        }
        panel_rows.sort_by(|a, b| a.sigma_c.total_cmp(&b.sigma_c));
        panel(&mut out, &panel_rows, n, m, PANEL_W * i as f64);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_figure2(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, figure2_svg(rows)?).map_err(|e| Error::io(path, e))
}
