//! Standalone SVG band plots: a shaded region between the pointwise
//! lower and upper survival curves, with the best model's curve drawn
//! step-wise on top.
//!
//! The coordinate transform is a plain affine map exposed through
//! [`x_to_px`] and [`y_to_px`], so emitted vertex coordinates can be
//! checked against the source arrays.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use survband_core::rashomon::{envelope_stats, EnvelopeStats, SurvivalEnvelope};
use survband_core::SurvivalCurve;

use crate::report::read_envelope_csv;
use crate::{CliError, Result};

pub const CANVAS_WIDTH: f64 = 800.0;
pub const CANVAS_HEIGHT: f64 = 500.0;
pub const MARGIN_LEFT: f64 = 70.0;
pub const MARGIN_RIGHT: f64 = 20.0;
pub const MARGIN_TOP: f64 = 46.0;
pub const MARGIN_BOTTOM: f64 = 56.0;

pub fn plot_width() -> f64 {
    CANVAS_WIDTH - MARGIN_LEFT - MARGIN_RIGHT
}

pub fn plot_height() -> f64 {
    CANVAS_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
}

/// Horizontal pixel for time `t` on a plot spanning [t_min, t_max].
pub fn x_to_px(t: f64, t_min: f64, t_max: f64) -> f64 {
    let span = if t_max > t_min { t_max - t_min } else { 1.0 };
    MARGIN_LEFT + (t - t_min) / span * plot_width()
}

/// Vertical pixel for survival probability `p` in [0, 1].
pub fn y_to_px(p: f64) -> f64 {
    MARGIN_TOP + (1.0 - p) * plot_height()
}

fn fmt_tick(t: f64) -> String {
    if t.fract().abs() < 1e-9 {
        format!("{}", t.round() as i64)
    } else {
        format!("{t:.1}")
    }
}

/// Renders the band as a standalone SVG document. All four slices must
/// share one non-empty length; the band polygon walks the upper values
/// left to right and the lower values back, one vertex per grid point.
pub fn render_band_svg(
    grid: &[f64],
    lower: &[f64],
    reference: &[f64],
    upper: &[f64],
    subtitle: &str,
) -> Result<String> {
    let n = grid.len();
    if n == 0 {
        return Err(CliError::Input("cannot plot an empty band".into()));
    }
    if lower.len() != n || reference.len() != n || upper.len() != n {
        return Err(CliError::Input(format!(
            "band arrays differ in length: {} grid, {} lower, {} reference, {} upper",
            n,
            lower.len(),
            reference.len(),
            upper.len()
        )));
    }
    let t_min = grid[0];
    let t_max = grid[n - 1];
    let x = |t: f64| x_to_px(t, t_min, t_max);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS_WIDTH}\" height=\"{CANVAS_HEIGHT}\" \
         viewBox=\"0 0 {CANVAS_WIDTH} {CANVAS_HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Horizontal grid lines and y-axis ticks at each quarter.
    for k in 0..=4 {
        let p = k as f64 * 0.25;
        let py = y_to_px(p);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT,
            CANVAS_WIDTH - MARGIN_RIGHT
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\" fill=\"#333333\">{p:.2}</text>\n",
            MARGIN_LEFT - 8.0,
            py + 4.0
        ));
    }
    // X-axis ticks at each quarter of the span.
    for k in 0..=4 {
        let t = t_min + (t_max - t_min) * k as f64 / 4.0;
        let px = x(t);
        let base = CANVAS_HEIGHT - MARGIN_BOTTOM;
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{base:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#444444\" stroke-width=\"1\"/>\n",
            base + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\" fill=\"#333333\">{}</text>\n",
            base + 20.0,
            fmt_tick(t)
        ));
    }

    // The band: upper boundary forward, lower boundary back.
    let mut points = String::new();
    for (i, &t) in grid.iter().enumerate() {
        points.push_str(&format!("{:.2},{:.2} ", x(t), y_to_px(upper[i])));
    }
    for (i, &t) in grid.iter().enumerate().rev() {
        points.push_str(&format!("{:.2},{:.2} ", x(t), y_to_px(lower[i])));
    }
    svg.push_str(&format!(
        "<polygon class=\"band\" points=\"{}\" fill=\"#b8b8b8\" fill-opacity=\"0.55\" stroke=\"none\"/>\n",
        points.trim_end()
    ));

    // Best model's curve, step-rendered: each value holds until the next
    // grid time, then jumps.
    let mut d = format!("M {:.2} {:.2}", x(grid[0]), y_to_px(reference[0]));
    for i in 1..n {
        d.push_str(&format!(" H {:.2} V {:.2}", x(grid[i]), y_to_px(reference[i])));
    }
    svg.push_str(&format!(
        "<path class=\"reference\" d=\"{d}\" fill=\"none\" stroke=\"#111111\" stroke-width=\"1.8\"/>\n"
    ));

    // Axes.
    let base = CANVAS_HEIGHT - MARGIN_BOTTOM;
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{MARGIN_TOP:.2}\" x2=\"{MARGIN_LEFT:.2}\" y2=\"{base:.2}\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{base:.2}\" x2=\"{:.2}\" y2=\"{base:.2}\" stroke=\"#444444\" stroke-width=\"1\"/>\n",
        CANVAS_WIDTH - MARGIN_RIGHT
    ));

    // Titles and axis labels.
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"22\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\" fill=\"#111111\">survival band across near-optimal models</text>\n",
        CANVAS_WIDTH / 2.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"40\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" fill=\"#555555\">{subtitle}</text>\n",
        CANVAS_WIDTH / 2.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" fill=\"#111111\">operating cycles</text>\n",
        MARGIN_LEFT + plot_width() / 2.0,
        CANVAS_HEIGHT - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" \
         fill=\"#111111\" transform=\"rotate(-90 18 {:.2})\">survival probability</text>\n",
        MARGIN_TOP + plot_height() / 2.0,
        MARGIN_TOP + plot_height() / 2.0
    ));

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn subtitle_for(stats: &EnvelopeStats) -> String {
    format!(
        "mean width {:.4}, max width {:.4} at t = {}",
        stats.mean_width,
        stats.max_width,
        fmt_tick(stats.argmax_time)
    )
}

/// Renders a band to an SVG file. An unwritable path is an error.
pub fn emit_plot(envelope: &SurvivalEnvelope, stats: &EnvelopeStats, path: &Path) -> Result<()> {
    let svg = render_band_svg(
        &envelope.grid,
        &envelope.lower,
        envelope.reference.probs(),
        &envelope.upper,
        &subtitle_for(stats),
    )?;
    fs::write(path, svg)
        .map_err(|e| CliError::Input(format!("cannot write plot {}: {e}", path.display())))?;
    Ok(())
}

/// Re-renders a saved envelope CSV as an SVG plot.
pub fn plot_csv_file(envelope_csv: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(envelope_csv).map_err(|e| {
        CliError::Input(format!("cannot read envelope {}: {e}", envelope_csv.display()))
    })?;
    let (grid, lower, reference, upper) = read_envelope_csv(&text)?;
    let envelope = SurvivalEnvelope {
        reference: SurvivalCurve::new(grid.clone(), reference)?,
        grid,
        lower,
        upper,
        member_curves: BTreeMap::new(),
    };
    let stats = envelope_stats(&envelope, &[])?;
    emit_plot(&envelope, &stats, out)
}
