//! Static plot emission: gnuplot scripts over the written CSV files, or a
//! standalone SVG when the plot path ends in `.svg`.

use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

pub fn wants_svg(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("svg"))
}

fn quote(path: &Path) -> String {
    path.display().to_string().replace('\'', "''")
}

fn preamble(title: &str, output: &Path) -> String {
    format!(
        "set terminal svg size 720,480 dynamic\nset output '{}'\nset datafile separator ','\nset key outside right\nset title '{}'\n",
        quote(&output.with_extension("svg")),
        title.replace('\'', "''"),
    )
}

/// Contamination `k` against `c` (third column), plus the asymptote.
pub fn trajectory_script(csv: &Path, script: &Path, asymptote: f64, normalized: bool) -> String {
    let mut s = preamble("contamination trajectory", script);
    let x = if normalized { "c / c0" } else { "c" };
    let _ = write!(
        s,
        "set xlabel '{x}'\nset ylabel 'k = c_p / c'\nset yrange [0:1]\n\
         plot '{csv}' using 1:3 skip 1 with lines lw 2 lc rgb 'black' title 'mean field', \\\n     \
         {asymptote} with lines dt 2 lc rgb 'blue' title 'asymptote'\n",
        csv = quote(csv),
    );
    s
}

/// Final contamination over the reduction plane from long-format CSV.
pub fn sweep_script(csv: &Path, script: &Path) -> String {
    let mut s = preamble("final contamination", script);
    let _ = write!(
        s,
        "set xlabel 'R_prag'\nset ylabel 'R_comp'\nset cblabel 'k final'\nset cbrange [0:1]\n\
         set palette defined (0 '#2166ac', 0.5 '#f7f7f7', 1 '#b2182b')\n\
         plot '{csv}' using 1:2:3 skip 1 with image notitle\n",
        csv = quote(csv),
    );
    s
}

/// Mean-field curve against the ensemble band, columns `step,c_mean,k_ode,k_min,k_max`.
pub fn compare_script(csv: &Path, script: &Path, normalized: bool) -> String {
    let mut s = preamble("mean field vs Monte Carlo", script);
    let x = if normalized { "c / c0" } else { "c" };
    let _ = write!(
        s,
        "set xlabel '{x}'\nset ylabel 'k'\nset yrange [0:1]\n\
         plot '{csv}' using 2:5 skip 1 with lines lc rgb 'red' title 'max', \\\n     \
         '{csv}' using 2:4 skip 1 with lines lc rgb 'green' title 'min', \\\n     \
         '{csv}' using 2:3 skip 1 with lines lw 2 lc rgb 'black' title 'mean field'\n",
        csv = quote(csv),
    );
    s
}

/// Ensemble band from `step,c_mean,k_min,k_max,k_mean`.
pub fn envelope_script(csv: &Path, script: &Path, normalized: bool) -> String {
    let mut s = preamble("Monte Carlo envelope", script);
    let x = if normalized { "c / c0" } else { "c" };
    let _ = write!(
        s,
        "set xlabel '{x}'\nset ylabel 'k'\nset yrange [0:1]\n\
         plot '{csv}' using 2:4 skip 1 with lines lc rgb 'red' title 'max', \\\n     \
         '{csv}' using 2:3 skip 1 with lines lc rgb 'green' title 'min', \\\n     \
         '{csv}' using 2:5 skip 1 with lines dt 2 lc rgb 'gray' title 'mean'\n",
        csv = quote(csv),
    );
    s
}

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn svg_header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        MARGIN_LEFT + plot_width() / 2.0,
        escape(title)
    );
}

fn plot_width() -> f64 {
    WIDTH - MARGIN_LEFT - MARGIN_RIGHT
}

fn plot_height() -> f64 {
    HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_width() / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let cy = MARGIN_TOP + plot_height() / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="18" y="{cy}" text-anchor="middle" transform="rotate(-90 18 {cy})">{}</text>"#,
        escape(y_label)
    );
}

/// Line chart with `y` fixed to `[0, 1]`.
pub fn line_svg(plot: &LinePlot) -> String {
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in plot.series.iter().flat_map(|s| &s.points) {
        x_min = x_min.min(p.0);
        x_max = x_max.max(p.0);
    }
    if !(x_max > x_min) {
        x_min = x_min.min(0.0);
        x_max = x_min + 1.0;
    }
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_width();
    let sy = |y: f64| MARGIN_TOP + (1.0 - y.clamp(0.0, 1.0)) * plot_height();

    let mut out = String::new();
    svg_header(&mut out, &plot.title);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        plot_width(),
        plot_height()
    );
    for i in 0..=5 {
        let y = f64::from(i) / 5.0;
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_LEFT}" x2="{}" y1="{py}" y2="{py}" stroke="#dddddd"/><text x="{}" y="{}" text-anchor="end">{y:.1}</text>"##,
            MARGIN_LEFT + plot_width(),
            MARGIN_LEFT - 6.0,
            sy(y) + 4.0,
            py = sy(y),
        );
        let x = x_min + (x_max - x_min) * f64::from(i) / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            sx(x),
            MARGIN_TOP + plot_height() + 18.0,
            crate::output::format_sig((x * 100.0).round() / 100.0)
        );
    }
    for (i, s) in plot.series.iter().enumerate() {
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="2"{dash} points="{}"/>"#,
            s.color,
            path.join(" ")
        );
        let ly = MARGIN_TOP + 20.0 * i as f64 + 10.0;
        let lx = MARGIN_LEFT + plot_width() + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            s.color,
            lx + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    axis_labels(&mut out, &plot.x_label, &plot.y_label);
    out.push_str("</svg>\n");
    out
}

fn heat_color(v: f64) -> String {
    // blue (clean) through white to red (saturated)
    let v = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, t: f64| (a + (b - a) * t).round() as u8;
    let (r, g, b) = if v < 0.5 {
        let t = v / 0.5;
        (
            lerp(33.0, 247.0, t),
            lerp(102.0, 247.0, t),
            lerp(172.0, 247.0, t),
        )
    } else {
        let t = (v - 0.5) / 0.5;
        (
            lerp(247.0, 178.0, t),
            lerp(247.0, 24.0, t),
            lerp(247.0, 43.0, t),
        )
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heatmap with one cell per grid point; `values` is row-major over `x_axis`.
pub fn heatmap_svg(title: &str, x_axis: &[f64], y_axis: &[f64], values: &[f64]) -> String {
    let (nx, ny) = (x_axis.len(), y_axis.len());
    let cw = plot_width() / nx as f64;
    let ch = plot_height() / ny as f64;
    let mut out = String::new();
    svg_header(&mut out, title);
    for i in 0..nx {
        for j in 0..ny {
            let v = values[i * ny + j];
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>R_prag={} R_comp={} k={}</title></rect>"#,
                MARGIN_LEFT + i as f64 * cw,
                MARGIN_TOP + (ny - 1 - j) as f64 * ch,
                cw + 0.5,
                ch + 0.5,
                heat_color(v),
                x_axis[i],
                y_axis[j],
                crate::output::format_sig(v),
            );
        }
    }
    let ticks = |n: usize| -> Vec<usize> {
        let step = n.div_ceil(6).max(1);
        (0..n).step_by(step).collect()
    };
    for i in ticks(nx) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + (i as f64 + 0.5) * cw,
            MARGIN_TOP + plot_height() + 18.0,
            crate::output::format_sig(x_axis[i])
        );
    }
    for j in ticks(ny) {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            MARGIN_TOP + (ny as f64 - j as f64 - 0.5) * ch + 4.0,
            crate::output::format_sig(y_axis[j])
        );
    }
    let bar_x = MARGIN_LEFT + plot_width() + 30.0;
    for step in 0..50 {
        let v = 1.0 - f64::from(step) / 49.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bar_x}" y="{:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            MARGIN_TOP + f64::from(step) * plot_height() / 50.0,
            plot_height() / 50.0 + 0.5,
            heat_color(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">1</text><text x="{}" y="{}">0</text>"#,
        bar_x + 26.0,
        MARGIN_TOP + 10.0,
        bar_x + 26.0,
        MARGIN_TOP + plot_height()
    );
    axis_labels(&mut out, "R_prag", "R_comp");
    out.push_str("</svg>\n");
    out
}
