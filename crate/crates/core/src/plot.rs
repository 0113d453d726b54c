//! SVG and CSV figures built from result files.
//!
//! The Ω-plane is drawn in unscaled coordinates: `h` across, the signed
//! `d = Δ/ρ` up, so one line `h = y + κ d` is the decision boundary of both
//! sides and the accepted region lies to its right.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifier::KappaInterval;
use crate::error::{Error, Result};
use crate::files::{InstanceSummary, Payload, ResultFile};
use crate::instance::Side;
use crate::measure::{PointId, RealMeasure1D};
use crate::nestedness::{decision_of, Decision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Omega,
    Boundary,
    Cdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Svg,
    Csv,
}

impl Format {
    /// From the output file extension; anything but `.csv` is SVG.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Svg,
        }
    }
}

/// A decision boundary `h = y + κ d` in unscaled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLine {
    pub y: f64,
    pub kappa_unscaled: f64,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

const W: f64 = 640.0;
const H: f64 = 440.0;
const PAD: f64 = 56.0;

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| {
                (a.min(t), b.max(t))
            });
            let pad = if hi > lo { 0.08 * (hi - lo) } else { 0.5 };
            (lo - pad, hi + pad)
        };
        Frame {
            x: span(&mut xs.clone()),
            y: span(&mut ys.clone()),
        }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }
}

fn header(svg: &mut String, title: &str, xlabel: &str, ylabel: &str, f: &Frame) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>
<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>
"#,
        W / 2.0,
        escape(title),
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (vx, vy) = (f.x.0 + t * (f.x.1 - f.x.0), f.y.0 + t * (f.y.1 - f.y.0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.px(vx),
            H - PAD + 16.0,
            tick(vx)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            PAD - 6.0,
            f.py(vy) + 4.0,
            tick(vy)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 14.0,
        escape(xlabel)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Support points in unscaled coordinates: `(id, side, h, d, weight)`.
fn omega_points(summary: &InstanceSummary) -> Vec<(&PointId, Side, f64, f64, f64)> {
    summary
        .points
        .iter()
        .filter(|p| p.side != Side::Eq)
        .map(|p| {
            (
                &p.x,
                p.side,
                p.eta,
                p.delta / summary.d_scale,
                p.mu_plus + p.mu_minus,
            )
        })
        .collect()
}

fn color(side: Side) -> &'static str {
    match side {
        Side::Plus => "#c0392b",
        Side::Minus => "#2471a3",
        Side::Eq => "#7f8c8d",
    }
}

fn draw_points(
    svg: &mut String,
    f: &Frame,
    pts: &[(&PointId, Side, f64, f64, f64)],
    highlight: &[&PointId],
) {
    for &(id, side, h, d, _) in pts {
        if highlight.contains(&id) {
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#f5a3c7" stroke="#c2185b"/>"##,
                f.px(h),
                f.py(d)
            );
        }
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="{}"/>"#,
            f.px(h),
            f.py(d),
            color(side)
        );
    }
}

pub fn omega_svg(summary: &InstanceSummary) -> String {
    let pts = omega_points(summary);
    let f = Frame::new(
        pts.iter().map(|p| p.2),
        pts.iter().map(|p| p.3).chain([0.0]),
    );
    let mut svg = String::new();
    header(
        &mut svg,
        "Ω-measures (red: μ₊, blue: μ₋)",
        "h = η",
        "d = Δ/ρ",
        &f,
    );
    draw_points(&mut svg, &f, &pts, &[]);
    svg.push_str("</svg>\n");
    svg
}

pub fn omega_csv(summary: &InstanceSummary) -> String {
    let mut out = String::from("id,side,h,d,weight\n");
    for (id, side, h, d, w) in omega_points(summary) {
        let _ = writeln!(out, "{id},{},{h},{d},{w}", side_name(side));
    }
    out
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Plus => "plus",
        Side::Minus => "minus",
        Side::Eq => "eq",
    }
}

pub fn boundary_svg(
    summary: &InstanceSummary,
    lines: &[BoundaryLine],
    highlight: &[&PointId],
) -> String {
    let pts = omega_points(summary);
    let f = Frame::new(
        pts.iter().map(|p| p.2).chain(lines.iter().map(|l| l.y)),
        pts.iter().map(|p| p.3).chain([0.0]),
    );
    let mut svg = String::new();
    header(
        &mut svg,
        "Decision boundaries h = y + κd (accepted to the right)",
        "h = η",
        "d = Δ/ρ",
        &f,
    );
    draw_points(&mut svg, &f, &pts, highlight);
    for (k, l) in lines.iter().enumerate() {
        let (d0, d1) = f.y;
        let (x0, x1) = (
            f.px(l.y + l.kappa_unscaled * d0),
            f.px(l.y + l.kappa_unscaled * d1),
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{x0:.2}" y1="{:.2}" x2="{x1:.2}" y2="{:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
            f.py(d0),
            f.py(d1)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}">y = {}, κ = {}</text>"#,
            PAD + 6.0,
            PAD + 14.0 + 14.0 * k as f64,
            tick(l.y),
            tick(l.kappa_unscaled)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn boundary_csv(
    summary: &InstanceSummary,
    lines: &[BoundaryLine],
    highlight: &[&PointId],
) -> String {
    let mut out = String::from("kind,id,side,h,d,weight,highlighted,y,kappa_unscaled\n");
    for (id, side, h, d, w) in omega_points(summary) {
        let _ = writeln!(
            out,
            "point,{id},{},{h},{d},{w},{},,",
            side_name(side),
            highlight.contains(&id)
        );
    }
    for l in lines {
        let _ = writeln!(out, "line,,,,,,,{},{}", l.y, l.kappa_unscaled);
    }
    out
}

/// Step points `(y, F(y))` of a law on the line.
fn steps(m: &RealMeasure1D) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    m.atoms()
        .iter()
        .map(|&(y, w)| {
            acc += w;
            (y, acc)
        })
        .collect()
}

pub fn cdf_svg(m: &RealMeasure1D, title: &str) -> String {
    let s = steps(m);
    let f = Frame::new(s.iter().map(|p| p.0), [0.0, 1.0].into_iter());
    let mut svg = String::new();
    header(&mut svg, title, "y", "F(y)", &f);
    let mut path = format!("M {:.2} {:.2}", f.px(f.x.0), f.py(0.0));
    for &(y, v) in &s {
        let _ = write!(path, " H {:.2} V {:.2}", f.px(y), f.py(v));
    }
    let _ = write!(path, " H {:.2}", f.px(f.x.1));
    let _ = writeln!(
        svg,
        r#"<path d="{path}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
        color(Side::Plus)
    );
    svg.push_str("</svg>\n");
    svg
}

pub fn cdf_csv(m: &RealMeasure1D) -> String {
    let mut out = String::from("y,F\n");
    for (y, v) in steps(m) {
        let _ = writeln!(out, "{y},{v}");
    }
    out
}

/// Boundary lines at the grid points nearest to `at`, and the points rejected
/// at the smallest of them but accepted at a larger one.
fn nested_boundaries<'a>(
    r: &'a ResultFile,
    rep: &'a crate::nestedness::NestednessReport,
    at: &[f64],
) -> (Vec<BoundaryLine>, Vec<&'a PointId>) {
    let picks: Vec<&KappaInterval> = if at.is_empty() {
        vec![
            &rep.kappa_table[0],
            &rep.kappa_table[rep.kappa_table.len() - 1],
        ]
    } else {
        at.iter()
            .map(|&y| &rep.kappa_table[rep.grid.nearest(y)])
            .collect()
    };
    let lines = picks
        .iter()
        .map(|iv| BoundaryLine {
            y: iv.y,
            kappa_unscaled: iv.kappa_plus * r.instance.d_scale,
        })
        .collect();
    let mut sorted = picks.clone();
    sorted.sort_by(|a, b| a.y.total_cmp(&b.y));
    let first = sorted[0];
    let highlight = r
        .instance
        .points
        .iter()
        .filter(|pt| {
            decision_of(pt.side, pt.eta, pt.delta, first) == Decision::Reject
                && sorted[1..]
                    .iter()
                    .any(|iv| decision_of(pt.side, pt.eta, pt.delta, iv) == Decision::Accept)
        })
        .map(|pt| &pt.x)
        .collect();
    (lines, highlight)
}

/// Renders one figure from a result file.
pub fn render(r: &ResultFile, kind: PlotKind, format: Format, at: &[f64]) -> Result<String> {
    match kind {
        PlotKind::Omega => Ok(match format {
            Format::Svg => omega_svg(&r.instance),
            Format::Csv => omega_csv(&r.instance),
        }),
        PlotKind::Boundary => {
            let (lines, highlight) = match &r.payload {
                Payload::Nested(p) => nested_boundaries(r, &p.report, at),
                Payload::Classify(c) => (
                    vec![BoundaryLine {
                        y: c.y,
                        kappa_unscaled: c.kappa_unscaled,
                    }],
                    Vec::new(),
                ),
                _ => {
                    return Err(Error::Schema(
                        "boundary plots need a `nested` or `classify` result".into(),
                    ))
                }
            };
            Ok(match format {
                Format::Svg => boundary_svg(&r.instance, &lines, &highlight),
                Format::Csv => boundary_csv(&r.instance, &lines, &highlight),
            })
        }
        PlotKind::Cdf => {
            let (m, title) = match &r.payload {
                Payload::Nested(p) => match &p.regression {
                    Some(c) => (&c.cdf_f, "F(y) = μ₊(η < y + κ(y)Δ)"),
                    None => return Err(Error::NotNested),
                },
                Payload::Solve(s) => (&s.barycenter, "c.d.f. of the barycenter ν*"),
                _ => {
                    return Err(Error::Schema(
                        "cdf plots need a `nested` or `solve` result".into(),
                    ))
                }
            };
            Ok(match format {
                Format::Svg => cdf_svg(m, title),
                Format::Csv => cdf_csv(m),
            })
        }
    }
}
