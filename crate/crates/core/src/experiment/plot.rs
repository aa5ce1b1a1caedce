//! Static SVG line plots. Output depends only on the input data, so the
//! same rows always produce byte-identical files.

use std::fmt::Write;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: [f64; 4] = [70.0, 20.0, 30.0, 50.0]; // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Linear,
    /// Both axes logarithmic.
    LogLog,
    /// Logarithmic x axis.
    LogX,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub kind: PlotKind,
    pub series: Vec<Series>,
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        let e = v.round() as i32;
        if (-3..=3).contains(&e) {
            format!("{}", 10f64.powi(e))
        } else {
            format!("1e{e}")
        }
    } else if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    } else {
        format!("{v:.1e}")
    }
}

fn nice_ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.floor() as i32, hi.ceil() as i32);
        let step = ((b - a) / 6).max(1);
        return (a..=b).step_by(step as usize).map(f64::from).filter(|t| *t >= lo - 1e-9 && *t <= hi + 1e-9).collect();
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

impl Plot {
    /// Renders the plot. Needs at least one series with two plottable points.
    pub fn to_svg(&self) -> Result<String> {
        let (lx, ly) = match self.kind {
            PlotKind::Linear => (false, false),
            PlotKind::LogLog => (true, true),
            PlotKind::LogX => (true, false),
        };
        let tx = |x: f64| if lx { x.log10() } else { x };
        let ty = |y: f64| if ly { y.log10() } else { y };
        let ok = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!lx || x > 0.0) && (!ly || y > 0.0);
        let series: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| s.points.iter().filter(|p| ok(p)).map(|&(x, y)| (tx(x), ty(y))).collect())
            .collect();
        let all: Vec<(f64, f64)> = series.iter().flatten().copied().collect();
        if all.len() < 2 || series.iter().all(|s| s.len() < 2) {
            return Err(Error::Domain(format!("plot `{}` needs at least two data points", self.title)));
        }
        let (mut x0, mut x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (mut y0, mut y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        if x1 - x0 <= 0.0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 <= 0.0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let [ml, mr, mt, mb] = MARGIN;
        let pw = WIDTH - ml - mr;
        let ph = HEIGHT - mt - mb;
        let px = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| mt + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, num(WIDTH / 2.0), escape(&self.title));
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            num(ml),
            num(mt),
            num(pw),
            num(ph)
        );
        for t in nice_ticks(x0, x1, lx) {
            let x = px(t);
            let _ = writeln!(
                s,
                r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#ddd"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"##,
                num(x),
                num(mt),
                num(mt + ph),
                num(mt + ph + 16.0),
                escape(&tick_label(t, lx))
            );
        }
        for t in nice_ticks(y0, y1, ly) {
            let y = py(t);
            let _ = writeln!(
                s,
                r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#ddd"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"##,
                num(ml),
                num(y),
                num(ml + pw),
                num(ml - 6.0),
                num(y + 4.0),
                escape(&tick_label(t, ly))
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(ml + pw / 2.0),
            num(HEIGHT - 12.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            num(mt + ph / 2.0),
            escape(&self.y_label)
        );
        for (i, (meta, pts)) in self.series.iter().zip(&series).enumerate() {
            if pts.is_empty() {
                continue;
            }
            let color = COLORS[i % COLORS.len()];
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", num(px(x)), num(py(y)))).collect();
            let dash = if meta.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                path.join(" ")
            );
            for &(x, y) in pts {
                let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="2" fill="{color}"/>"#, num(px(x)), num(py(y)));
            }
            let ly = mt + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"{dash}/><text x="{3}" y="{4}">{5}</text>"#,
                num(ml + pw - 150.0),
                num(ly),
                num(ml + pw - 130.0),
                num(ml + pw - 124.0),
                num(ly + 4.0),
                escape(&meta.label)
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Plot {
        Plot {
            title: "decay".into(),
            x_label: "R".into(),
            y_label: "residual".into(),
            kind: PlotKind::LogLog,
            series: vec![Series::new("n=4", vec![(8.0, 1e-3), (16.0, 1.25e-4), (32.0, 1.5625e-5)])],
        }
    }

    #[test]
    fn deterministic_output() {
        let a = line().to_svg().unwrap();
        let b = line().to_svg().unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("polyline"));
    }

    #[test]
    fn rejects_empty() {
        let mut p = line();
        p.series[0].points.truncate(1);
        assert!(p.to_svg().is_err());
        p.series.clear();
        assert!(p.to_svg().is_err());
        // non-positive values are dropped on log axes
        let mut p = line();
        p.series[0].points = vec![(1.0, -1.0), (2.0, 0.0)];
        assert!(p.to_svg().is_err());
    }

    #[test]
    fn ticks() {
        let t = nice_ticks(0.0, 1.0, false);
        assert_eq!(t.len(), 6);
        assert_eq!((t[0], t[5]), (0.0, 1.0));
        assert_eq!(nice_ticks(0.9, 3.1, true), vec![1.0, 2.0, 3.0]);
    }
}
