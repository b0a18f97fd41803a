//! Result serialization: deterministic CSV (17 significant digits,
//! round-trippable) and minimal self-contained SVG line plots.

use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::otoc::OtocSeries;

pub const CSV_HEADER: &str = "t,O_g,N_g,O_corr,O_th,O_g_norm,O_th_norm,sigma_corr";

/// Formats one value with 17 significant digits; round-trips through f64
/// parsing exactly. NaN marks an undefined quantity and serializes as an
/// empty field.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

/// Renders the full CSV, one row per time point, missing values empty.
pub fn render_csv(series: &OtocSeries) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(f64::NAN);
    for (i, &t) in series.times.iter().enumerate() {
        let row = [
            t,
            get(&series.o_g, i),
            get(&series.n_g, i),
            get(&series.o_corr, i),
            get(&series.o_th, i),
            get(&series.o_g_norm, i),
            get(&series.o_th_norm, i),
            get(&series.sigma_corr, i),
        ];
        let cells: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(series: &OtocSeries, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(render_csv(series).as_bytes())?;
    Ok(())
}

/// Parses a CSV produced by [`render_csv`]; empty fields come back as NaN.
pub fn parse_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidSpec("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::InvalidSpec(format!("unexpected CSV header '{header}'")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            if cell.is_empty() {
                row.push(f64::NAN);
            } else {
                row.push(cell.parse().map_err(|_| {
                    Error::InvalidSpec(format!("row {}: bad number '{cell}'", i + 2))
                })?);
            }
        }
        if row.len() != 8 {
            return Err(Error::InvalidSpec(format!(
                "row {}: expected 8 fields, got {}",
                i + 2,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One curve of a plot: points, optional symmetric 1σ band, legend label.
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub band: Option<Vec<f64>>,
    pub color: String,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub fn palette_color(i: usize) -> String {
    PALETTE[i % PALETTE.len()].to_string()
}

/// Minimal self-contained SVG line plot: axes, tick labels, legend, and
/// shaded 1σ bands. No external assets.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, curves: &[Curve]) -> String {
    let (w, h) = (640.0, 440.0);
    let (ml, mr, mt, mb) = (62.0, 16.0, 34.0, 48.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let finite = |v: f64| v.is_finite();
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for c in curves {
        for (i, &(x, y)) in c.points.iter().enumerate() {
            if finite(x) && finite(y) {
                xs.push(x);
                let b = c.band.as_ref().and_then(|b| b.get(i)).copied().unwrap_or(0.0);
                let b = if b.is_finite() { b } else { 0.0 };
                ys.push(y - b);
                ys.push(y + b);
            }
        }
    }
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let sx = move |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = move |y: f64| mt + (y1 - y) / (y1 - y0) * ph;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    );
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        w / 2.0,
        escape(title)
    ));

    // axes, ticks, grid
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let (px, py) = (sx(fx), sy(fy));
        svg.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{mt}\" x2=\"{px}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            mt + ph
        ));
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#dddddd\"/>\n",
            ml + pw
        ));
        svg.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\">{:.3}</text>\n",
            mt + ph + 16.0,
            fx
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n",
            ml - 6.0,
            py + 4.0,
            fy
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        ml + pw / 2.0,
        h - 10.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(y_label)
    ));

    // shaded bands under the lines
    for c in curves {
        if let Some(band) = &c.band {
            let mut upper = Vec::new();
            let mut lower = Vec::new();
            for (i, &(x, y)) in c.points.iter().enumerate() {
                let b = band.get(i).copied().unwrap_or(0.0);
                if x.is_finite() && y.is_finite() && b.is_finite() {
                    upper.push((sx(x), sy(y + b)));
                    lower.push((sx(x), sy(y - b)));
                }
            }
            if upper.len() > 1 {
                lower.reverse();
                let path: Vec<String> = upper
                    .iter()
                    .chain(lower.iter())
                    .map(|(x, y)| format!("{x:.2},{y:.2}"))
                    .collect();
                svg.push_str(&format!(
                    "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                    path.join(" "),
                    c.color
                ));
            }
        }
    }
    for c in curves {
        let pts: Vec<String> = c
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.len() > 1 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                pts.join(" "),
                c.color
            ));
        }
    }

    // legend
    for (i, c) in curves.iter().enumerate() {
        let y = mt + 14.0 + 16.0 * i as f64;
        let x = ml + pw - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            x + 22.0,
            c.color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            x + 28.0,
            y + 4.0,
            escape(&c.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(svg.as_bytes())?;
    Ok(())
}
