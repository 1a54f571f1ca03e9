//! Minimal hand-rolled SVG line plots.
//!
//! Output is a pure function of the plot data — no timestamps, no random
//! ids — so identical inputs render byte-identical files. The CSV next to
//! each plot remains the canonical record; the SVG is for eyeballs.

use std::path::Path;

/// Fixed palette, assigned to series by index.
const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 62.0;

/// One curve: points in data coordinates, optional symmetric error bars.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Half-length of the vertical error bar per point, if any.
    pub error_bars: Option<Vec<f64>>,
}

/// A labeled vertical reference line (user angle markers and the like).
pub struct VerticalMarker {
    pub x: f64,
    pub label: String,
    pub dashed: bool,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<VerticalMarker>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round-numbered tick positions covering `[lo, hi]` with ~`target` steps.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).abs().max(1e-300);
    let raw_step = span / target as f64;
    let magnitude = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|s| span / s <= target as f64 + 0.5)
        .unwrap_or(magnitude * 10.0);
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + step * 1e-9 {
        // Snap near-zero ticks so "-0" never appears.
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() {
            "0".to_string()
        } else {
            s
        }
    } else {
        format!("{v:e}")
    }
}

impl LinePlot {
    fn data_bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for (i, (x, y)) in s.points.iter().enumerate() {
                xs.push(*x);
                let bar = s.error_bars.as_ref().map_or(0.0, |b| b[i]);
                ys.push(y - bar);
                ys.push(y + bar);
            }
        }
        for m in &self.markers {
            xs.push(m.x);
        }
        let span = |v: &[f64]| -> (f64, f64) {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() || !hi.is_finite() {
                return (0.0, 1.0);
            }
            if lo == hi {
                return (lo - 1.0, hi + 1.0);
            }
            let pad = (hi - lo) * 0.05;
            (lo - pad, hi + pad)
        };
        (span(&xs), span(&ys))
    }

    /// Render the plot as a complete SVG document.
    pub fn render(&self) -> String {
        let ((x_lo, x_hi), (y_lo, y_hi)) = self.data_bounds();
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = move |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
        let sy = move |y: f64| MARGIN_TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"13\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        ));

        // Axes box and grid.
        out.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
             fill=\"none\" stroke=\"black\"/>\n"
        ));
        for t in ticks(x_lo, x_hi, 7) {
            let x = sx(t);
            out.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
                 stroke=\"#dddddd\"/>\n",
                MARGIN_TOP,
                MARGIN_TOP + plot_h
            ));
            out.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
                MARGIN_TOP + plot_h + 20.0,
                tick_label(t)
            ));
        }
        for t in ticks(y_lo, y_hi, 6) {
            let y = sy(t);
            out.push_str(&format!(
                "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
                 stroke=\"#dddddd\"/>\n",
                MARGIN_LEFT + plot_w
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
                MARGIN_LEFT - 8.0,
                y + 4.0,
                tick_label(t)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" \
             transform=\"rotate(-90 20 {:.1})\">{}</text>\n",
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        ));

        // Vertical markers behind the data.
        for m in &self.markers {
            let x = sx(m.x);
            let dash = if m.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            out.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{MARGIN_TOP}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
                 stroke=\"#555555\"{dash}/>\n",
                MARGIN_TOP + plot_h
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#555555\">{}</text>\n",
                x + 3.0,
                MARGIN_TOP + 14.0,
                escape(&m.label)
            ));
        }

        // Series: error bars, polyline, point dots.
        for (idx, s) in self.series.iter().enumerate() {
            let color = PALETTE[idx % PALETTE.len()];
            if let Some(bars) = &s.error_bars {
                for ((x, y), bar) in s.points.iter().zip(bars) {
                    let (px, lo, hi) = (sx(*x), sy(y - bar), sy(y + bar));
                    out.push_str(&format!(
                        "<line x1=\"{px:.2}\" y1=\"{lo:.2}\" x2=\"{px:.2}\" y2=\"{hi:.2}\" \
                         stroke=\"{color}\"/>\n"
                    ));
                    for end in [lo, hi] {
                        out.push_str(&format!(
                            "<line x1=\"{:.2}\" y1=\"{end:.2}\" x2=\"{:.2}\" y2=\"{end:.2}\" \
                             stroke=\"{color}\"/>\n",
                            px - 4.0,
                            px + 4.0
                        ));
                    }
                }
            }
            let coords: Vec<String> = s
                .points
                .iter()
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                coords.join(" ")
            ));
            if s.points.len() <= 64 {
                for (x, y) in &s.points {
                    out.push_str(&format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                        sx(*x),
                        sy(*y)
                    ));
                }
            }
            // Legend entry.
            let ly = MARGIN_TOP + 16.0 + idx as f64 * 20.0;
            let lx = WIDTH - MARGIN_RIGHT + 14.0;
            out.push_str(&format!(
                "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
                 stroke=\"{color}\" stroke-width=\"3\"/>\n",
                lx + 26.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
                lx + 32.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, self.render())
    }
}
