//! Standalone SVG rendering of planar limit shapes.

use crate::CliError;

const SIZE: f64 = 480.0;

/// Closed boundary polyline through `points`, unit axes and a legend with
/// the extreme values of `mu` over the sampled directions.
pub fn shape_svg(points: &[[f64; 2]], mu_min: f64, mu_max: f64, title: &str) -> Result<Vec<u8>, CliError> {
    if points.is_empty() {
        return Err(CliError::Config("no shape points to draw".into()));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(CliError::Numeric("shape has non-finite boundary points".into()));
    }
    let extent = points.iter().map(|p| p[0].abs().max(p[1].abs())).fold(1.0, f64::max) * 1.15;
    let scale = 0.5 * SIZE / extent;
    let (cx, cy) = (0.5 * SIZE, 0.5 * SIZE);
    let map = |p: [f64; 2]| (cx + p[0] * scale, cy - p[1] * scale);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{}\" viewBox=\"0 0 {SIZE} {}\">\n",
        SIZE + 40.0,
        SIZE + 40.0
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!("<title>{}</title>\n", escape(title)));

    // unit axes with ticks at +-1
    let (x0, _) = map([-extent, 0.0]);
    let (x1, _) = map([extent, 0.0]);
    let (_, y0) = map([0.0, extent]);
    let (_, y1) = map([0.0, -extent]);
    s.push_str(&format!("<line x1=\"{x0:.2}\" y1=\"{cy:.2}\" x2=\"{x1:.2}\" y2=\"{cy:.2}\" stroke=\"#888\" stroke-width=\"1\"/>\n"));
    s.push_str(&format!("<line x1=\"{cx:.2}\" y1=\"{y0:.2}\" x2=\"{cx:.2}\" y2=\"{y1:.2}\" stroke=\"#888\" stroke-width=\"1\"/>\n"));
    for t in [-1.0, 1.0] {
        let (tx, _) = map([t, 0.0]);
        let (_, ty) = map([0.0, t]);
        s.push_str(&format!("<line x1=\"{tx:.2}\" y1=\"{:.2}\" x2=\"{tx:.2}\" y2=\"{:.2}\" stroke=\"#888\"/>\n", cy - 4.0, cy + 4.0));
        s.push_str(&format!("<line x1=\"{:.2}\" y1=\"{ty:.2}\" x2=\"{:.2}\" y2=\"{ty:.2}\" stroke=\"#888\"/>\n", cx - 4.0, cx + 4.0));
        s.push_str(&format!("<text x=\"{tx:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{t}</text>\n", cy + 16.0));
    }

    let pts: Vec<String> = points
        .iter()
        .map(|&p| {
            let (x, y) = map(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    s.push_str(&format!(
        "<polygon points=\"{}\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    ));
    s.push_str(&format!(
        "<text x=\"10\" y=\"{:.0}\" font-size=\"13\">{} | mu min {mu_min:.6} | mu max {mu_max:.6} | {} directions</text>\n",
        SIZE + 28.0,
        escape(title),
        points.len()
    ));
    s.push_str("</svg>\n");
    Ok(s.into_bytes())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
