//! SVG heatmaps of results.csv: one column of panels per scenario, one row
//! per metric, n_drop across and n_feas upwards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use fastsim_core::report::ResultRow;

pub const METRICS: [&str; 3] = ["p_retain_correct", "p_proceed", "power"];

const CELL: f64 = 46.0;
const LEFT: f64 = 200.0;
const TOP: f64 = 56.0;
const GAP: f64 = 60.0;
const AXIS: f64 = 44.0;

// 0 maps to LIGHT and 1 to DARK
const LIGHT: (f64, f64, f64) = (247.0, 251.0, 255.0);
const DARK: (f64, f64, f64) = (8.0, 48.0, 107.0);

pub fn color(value: f64) -> String {
    let t = value.clamp(0.0, 1.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(LIGHT.0, DARK.0), mix(LIGHT.1, DARK.1), mix(LIGHT.2, DARK.2))
}

struct Panel<'a> {
    n_drop: Vec<u32>,
    n_feas: Vec<u32>,
    cells: BTreeMap<(u32, u32), &'a ResultRow>,
}

impl<'a> Panel<'a> {
    fn new(rows: &[&'a ResultRow]) -> Self {
        let n_drop: BTreeSet<u32> = rows.iter().map(|r| r.n_drop).collect();
        let n_feas: BTreeSet<u32> = rows.iter().map(|r| r.n_feas).collect();
        Self {
            n_drop: n_drop.into_iter().collect(),
            n_feas: n_feas.into_iter().collect(),
            cells: rows.iter().map(|r| ((r.n_drop, r.n_feas), *r)).collect(),
        }
    }

    fn width(&self) -> f64 {
        self.n_drop.len() as f64 * CELL
    }

    fn height(&self) -> f64 {
        self.n_feas.len() as f64 * CELL
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the heatmap grid. Rows must be non-empty.
pub fn render(rows: &[ResultRow]) -> String {
    let mut by_scenario: BTreeMap<u32, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        by_scenario.entry(r.scenario_id).or_default().push(r);
    }
    let panels: Vec<(u32, Panel)> = by_scenario.iter().map(|(id, rs)| (*id, Panel::new(rs))).collect();
    let col_width = panels.iter().map(|(_, p)| p.width()).fold(0.0, f64::max);
    let row_height = panels.iter().map(|(_, p)| p.height()).fold(0.0, f64::max);
    let width = LEFT + panels.len() as f64 * (col_width + GAP);
    let height = TOP + METRICS.len() as f64 * (row_height + AXIS + GAP);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    for (col, (scenario_id, panel)) in panels.iter().enumerate() {
        let x0 = LEFT + col as f64 * (col_width + GAP);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14" font-weight="bold">Scenario {scenario_id}</text>"#,
            x0 + panel.width() / 2.0,
            TOP - 28.0
        );
        for (row, metric) in METRICS.iter().enumerate() {
            let y0 = TOP + row as f64 * (row_height + AXIS + GAP);
            if col == 0 {
                let _ = writeln!(
                    svg,
                    r#"<text x="12" y="{}" font-size="13" font-weight="bold">{}</text>"#,
                    y0 + row_height / 2.0,
                    escape(metric)
                );
            }
            // n_feas increases upwards
            for (j, feas) in panel.n_feas.iter().rev().enumerate() {
                let y = y0 + j as f64 * CELL;
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{}" text-anchor="end">{feas}</text>"#,
                    x0 - 6.0,
                    y + CELL / 2.0 + 4.0
                );
                for (i, drop) in panel.n_drop.iter().enumerate() {
                    let x = x0 + i as f64 * CELL;
                    match panel.cells.get(&(*drop, *feas)).and_then(|r| r.metric(metric)) {
                        Some(v) => {
                            let ink = if v > 0.55 { "#ffffff" } else { "#000000" };
                            let _ = writeln!(
                                svg,
                                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="#ffffff"><title>{metric} n_drop={drop} n_feas={feas}: {v:.3}</title></rect>"##,
                                color(v)
                            );
                            let _ = writeln!(
                                svg,
                                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{v:.2}</text>"#,
                                x + CELL / 2.0,
                                y + CELL / 2.0 + 4.0
                            );
                        }
                        None => {
                            let _ = writeln!(
                                svg,
                                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#dddddd" stroke="#ffffff"/>"##
                            );
                        }
                    }
                }
            }
            let axis_y = y0 + panel.height();
            for (i, drop) in panel.n_drop.iter().enumerate() {
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{}" text-anchor="middle">{drop}</text>"#,
                    x0 + i as f64 * CELL + CELL / 2.0,
                    axis_y + 14.0
                );
            }
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle" font-style="italic">n_drop</text>"#,
                x0 + panel.width() / 2.0,
                axis_y + 32.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle" font-style="italic" transform="rotate(-90 {} {})">n_feas</text>"#,
                x0 - 36.0,
                y0 + panel.height() / 2.0,
                x0 - 36.0,
                y0 + panel.height() / 2.0
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
