//! Static SVG line plots: mean line plus min–max band per series, derived
//! purely from summary data so regeneration is byte-identical.

/// One plotted series (a method or schedule variant).
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub xs: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Fixed palette; GD conventionally red, RCD blue.
pub fn palette(i: usize) -> &'static str {
    const COLORS: [&str; 8] = [
        "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    ];
    COLORS[i % COLORS.len()]
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if !(hi - lo).is_finite() || hi <= lo {
        return vec![lo];
    }
    (0..=count)
        .map(|k| lo + (hi - lo) * k as f64 / count as f64)
        .collect()
}

/// Renders the series as an SVG document.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for &x in &s.xs {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
        }
        for v in s.lo.iter().chain(&s.hi).chain(&s.mean) {
            if v.is_finite() {
                ymin = ymin.min(*v);
                ymax = ymax.max(*v);
            }
        }
    }
    if !xmin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
    }
    if !ymin.is_finite() {
        ymin = 0.0;
        ymax = 1.0;
    }
    if xmax <= xmin {
        xmax = xmin + 1.0;
    }
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    let ypad = 0.05 * (ymax - ymin);
    let (ymin, ymax) = (ymin - ypad, ymax + ypad);

    let px = |x: f64| MARGIN_L + (x - xmin) / (xmax - xmin) * (W - MARGIN_L - MARGIN_R);
    let py = |y: f64| H - MARGIN_B - (y - ymin) / (ymax - ymin) * (H - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        title
    ));

    // Axes with ticks and labels.
    for t in nice_ticks(xmin, xmax, 5) {
        let x = px(t);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(x),
            fmt(MARGIN_T),
            fmt(x),
            fmt(H - MARGIN_B)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fmt(x),
            fmt(H - MARGIN_B + 16.0),
            format_tick(t)
        ));
    }
    for t in nice_ticks(ymin, ymax, 5) {
        let y = py(t);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(MARGIN_L),
            fmt(y),
            fmt(W - MARGIN_R),
            fmt(y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN_L - 6.0),
            fmt(y + 4.0),
            format_tick(t)
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_L),
        fmt(H - MARGIN_B),
        fmt(W - MARGIN_R),
        fmt(H - MARGIN_B)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(MARGIN_L),
        fmt(H - MARGIN_B)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        H - 16.0,
        xlabel
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        ylabel
    ));

    for s in series {
        if s.xs.is_empty() {
            continue;
        }
        // Min–max band.
        let mut band = String::from("<polygon points=\"");
        for (x, y) in s.xs.iter().zip(&s.hi) {
            band.push_str(&format!("{},{} ", fmt(px(*x)), fmt(py(*y))));
        }
        for (x, y) in s.xs.iter().rev().zip(s.lo.iter().rev()) {
            band.push_str(&format!("{},{} ", fmt(px(*x)), fmt(py(*y))));
        }
        band.push_str(&format!(
            "\" fill=\"{}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
            s.color
        ));
        svg.push_str(&band);
        // Mean line.
        let mut line = String::from("<polyline points=\"");
        for (x, y) in s.xs.iter().zip(&s.mean) {
            line.push_str(&format!("{},{} ", fmt(px(*x)), fmt(py(*y))));
        }
        line.push_str(&format!(
            "\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>\n",
            s.color
        ));
        svg.push_str(&line);
    }

    // Legend.
    for (k, s) in series.iter().enumerate() {
        let y = MARGIN_T + 8.0 + 18.0 * k as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            fmt(W - MARGIN_R - 130.0),
            fmt(y),
            fmt(W - MARGIN_R - 104.0),
            fmt(y),
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            fmt(W - MARGIN_R - 98.0),
            fmt(y + 4.0),
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 10000.0 || a < 0.01 {
        format!("{v:.2e}")
    } else if a >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}
