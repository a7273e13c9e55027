//! Minimal SVG writer for log-log rate plots: axes, decade ticks, one
//! polyline with markers per series, a caption. No external dependency and
//! no timestamps, so output bytes depend only on the data.

/// One plotted series.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders a log-log scatter/line plot. Points with nonpositive
/// coordinates are dropped (they have no logarithm); an empty plot still
/// renders axes.
pub fn loglog_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|&(x, y)| x > 0.0 && y > 0.0)
        .collect();
    let (x_lo, x_hi, y_lo, y_hi) = if pts.is_empty() {
        (0.0, 1.0, 0.0, 1.0)
    } else {
        let x_lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).log10().floor();
        let mut x_hi = pts.iter().map(|p| p.0).fold(0.0f64, f64::max).log10().ceil();
        let y_lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).log10().floor();
        let mut y_hi =
            pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).log10().ceil();
        if x_hi <= x_lo {
            x_hi = x_lo + 1.0;
        }
        if y_hi <= y_lo {
            y_hi = y_lo + 1.0;
        }
        (x_lo, x_hi, y_lo, y_hi)
    };
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let sx = MARGIN + (x.log10() - x_lo) / (x_hi - x_lo) * (W - 2.0 * MARGIN);
        let sy = H - MARGIN - (y.log10() - y_lo) / (y_hi - y_lo) * (H - 2.0 * MARGIN);
        (sx, sy)
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" \
         font-size=\"14\">{title}</text>\n",
        W / 2.0
    ));
    // axes
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    ));
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN
    ));
    // decade ticks
    let mut d = x_lo;
    while d <= x_hi + 1e-9 {
        let (px, _) = to_px(10f64.powf(d), 10f64.powf(y_lo));
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{b}\" x2=\"{x}\" y2=\"{b2}\" stroke=\"black\"/>\
             <text x=\"{x}\" y=\"{ty}\" text-anchor=\"middle\" font-family=\"monospace\" \
             font-size=\"10\">1e{exp}</text>\n",
            x = fmt(px),
            b = H - MARGIN,
            b2 = H - MARGIN + 6.0,
            ty = H - MARGIN + 18.0,
            exp = d as i64
        ));
        d += 1.0;
    }
    let mut d = y_lo;
    while d <= y_hi + 1e-9 {
        let (_, py) = to_px(10f64.powf(x_lo), 10f64.powf(d));
        out.push_str(&format!(
            "<line x1=\"{m2}\" y1=\"{y}\" x2=\"{m}\" y2=\"{y}\" stroke=\"black\"/>\
             <text x=\"{tx}\" y=\"{y}\" text-anchor=\"end\" font-family=\"monospace\" \
             font-size=\"10\">1e{exp}</text>\n",
            m = MARGIN,
            m2 = MARGIN - 6.0,
            y = fmt(py),
            tx = MARGIN - 9.0,
            exp = d as i64
        ));
        d += 1.0;
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" \
         font-size=\"12\">{x_label}</text>\n",
        W / 2.0,
        H - 14.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" \
         font-size=\"12\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        H / 2.0,
        H / 2.0
    ));

    let colors = ["#1f5fa8", "#c4452c", "#2c7a3f", "#74538e"];
    for (si, s) in series.iter().enumerate() {
        let color = colors[si % colors.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|&&(x, y)| x > 0.0 && y > 0.0)
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{},{}", fmt(px), fmt(py))
            })
            .collect();
        if path.len() > 1 {
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
                 points=\"{}\"/>\n",
                path.join(" ")
            ));
        }
        for &(x, y) in s.points.iter().filter(|&&(x, y)| x > 0.0 && y > 0.0) {
            let (px, py) = to_px(x, y);
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>\n",
                fmt(px),
                fmt(py)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
             fill=\"{color}\">{}</text>\n",
            W - MARGIN - 150.0,
            MARGIN + 16.0 * (si as f64 + 1.0),
            s.label
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Linear-scale line plot used for value-function profiles.
pub fn linear_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts: Vec<(f64, f64)> =
        series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (0.0f64, 1.0f64, 0.0f64, 1.0f64);
    if !pts.is_empty() {
        x_lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        x_hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        y_lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        y_hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if x_hi - x_lo < 1e-12 {
            x_hi = x_lo + 1.0;
        }
        if y_hi - y_lo < 1e-12 {
            y_hi = y_lo + 1.0;
        }
    }
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let sx = MARGIN + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * MARGIN);
        let sy = H - MARGIN - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * MARGIN);
        (sx, sy)
    };
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" \
         font-size=\"14\">{title}</text>\n",
        W / 2.0
    ));
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    ));
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN
    ));
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let xv = x_lo + frac * (x_hi - x_lo);
        let yv = y_lo + frac * (y_hi - y_lo);
        let (px, _) = to_px(xv, y_lo);
        let (_, py) = to_px(x_lo, yv);
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" \
             font-size=\"10\">{:.3}</text>\n",
            fmt(px),
            H - MARGIN + 18.0,
            xv
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"monospace\" \
             font-size=\"10\">{:.4}</text>\n",
            MARGIN - 9.0,
            fmt(py),
            yv
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" \
         font-size=\"12\">{x_label}</text>\n",
        W / 2.0,
        H - 14.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" \
         font-size=\"12\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        H / 2.0,
        H / 2.0
    ));
    let colors = ["#1f5fa8", "#c4452c", "#2c7a3f", "#74538e"];
    for (si, s) in series.iter().enumerate() {
        let color = colors[si % colors.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{},{}", fmt(px), fmt(py))
            })
            .collect();
        if path.len() > 1 {
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
                 points=\"{}\"/>\n",
                path.join(" ")
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
             fill=\"{color}\">{}</text>\n",
            W - MARGIN - 150.0,
            MARGIN + 16.0 * (si as f64 + 1.0),
            s.label
        ));
    }
    out.push_str("</svg>\n");
    out
}
