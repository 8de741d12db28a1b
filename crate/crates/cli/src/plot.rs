//! Static SVG line plots of membrane voltage.

use std::fmt::Write;

use neurodes::sim::SimulationResult;

const WIDTH: f64 = 900.0;
const ROW: f64 = 160.0;
const MARGIN: f64 = 50.0;
const V_MIN: f64 = -100.0;
const V_MAX: f64 = 60.0;
/// Upper bound on vertices per trace; longer traces are decimated.
const MAX_POINTS: usize = 4000;

/// One panel per neuron, shared time axis, fixed voltage range.
pub fn voltage_svg(result: &SimulationResult) -> String {
    let n = result.neuron_ids.len();
    let height = MARGIN * 2.0 + ROW * n as f64;
    let t0 = result.time.first().copied().unwrap_or(0.0);
    let t1 = result.time.last().copied().unwrap_or(1.0).max(t0 + 1e-9);
    let x = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let stride = (result.time.len() / MAX_POINTS).max(1);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, id) in result.neuron_ids.iter().enumerate() {
        let top = MARGIN + ROW * k as f64;
        let y = |v: f64| top + (V_MAX - v.clamp(V_MIN, V_MAX)) / (V_MAX - V_MIN) * (ROW - 20.0);
        let _ = writeln!(svg, r#"<text x="5" y="{:.1}">n{id}</text>"#, top + 15.0);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#ccc" stroke-dasharray="4 3"/>"##,
            y(0.0),
            WIDTH - MARGIN
        );
        let mut points = String::new();
        for i in (0..result.time.len()).step_by(stride) {
            let _ = write!(points, "{:.1},{:.1} ", x(result.time[i]), y(result.voltages[k][i]));
        }
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#, points.trim_end());
    }
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{:.1}">{t0} ms</text><text x="{:.1}" y="{:.1}" text-anchor="end">{t1} ms</text>"#,
        height - 15.0,
        WIDTH - MARGIN,
        height - 15.0
    );
    svg.push_str("</svg>\n");
    svg
}
