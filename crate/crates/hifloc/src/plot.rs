//! SVG figures: the R-X locus diagram and predicted-versus-target fit panels.
//!
//! Output is plain SVG 1.1 written with fixed-precision number formatting, so
//! identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hifloc_core::neuralnet::TrainingReport;
use hifloc_core::relay::{ImpedanceLocus, MhoZone};

use crate::error::HarnessError;

/// Affine map from data coordinates to pixels, y pointing up in data space.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    y1: f64,
    sx: f64,
    sy: f64,
    left: f64,
    top: f64,
}

impl Frame {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (self.left + (x - self.x0) * self.sx, self.top + (self.y1 - y) * self.sy)
    }
}

fn padded(lo: f64, hi: f64, frac: f64) -> (f64, f64) {
    let span = (hi - lo).max(1e-9);
    (lo - frac * span, hi + frac * span)
}

fn header(out: &mut String, width: u32, height: u32) {
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    )
    .unwrap();
}

fn line(out: &mut String, a: (f64, f64), b: (f64, f64), style: &str) {
    writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" {style}/>"#,
        a.0, a.1, b.0, b.1
    )
    .unwrap();
}

fn text(out: &mut String, x: f64, y: f64, anchor: &str, size: u32, s: &str) {
    writeln!(
        out,
        r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="{size}">{s}</text>"#
    )
    .unwrap();
}

/// R-X diagram: axes, the mho circle and the locus polyline. The first and
/// last locus points are marked with small squares.
pub fn rx_svg(locus: &ImpedanceLocus, zone: &MhoZone, title: &str) -> String {
    let (width, height, margin) = (640.0, 560.0, 50.0);
    let c = zone.center();
    let r = zone.radius();
    let (mut rmin, mut rmax, mut xmin, mut xmax) = (c.re - r, c.re + r, c.im - r, c.im + r);
    for p in &locus.points {
        rmin = rmin.min(p.z.re);
        rmax = rmax.max(p.z.re);
        xmin = xmin.min(p.z.im);
        xmax = xmax.max(p.z.im);
    }
    let (rmin, rmax) = padded(rmin.min(0.0), rmax.max(0.0), 0.08);
    let (xmin, xmax) = padded(xmin.min(0.0), xmax.max(0.0), 0.08);
    // one scale on both axes keeps the circle round
    let s = ((width - 2.0 * margin) / (rmax - rmin)).min((height - 2.0 * margin) / (xmax - xmin));
    let f = Frame {
        x0: rmin,
        y1: xmax,
        sx: s,
        sy: s,
        left: margin,
        top: margin,
    };

    let mut out = String::new();
    header(&mut out, width as u32, height as u32);
    text(&mut out, width / 2.0, 28.0, "middle", 16, title);
    let axis = r#"stroke="black" stroke-width="1""#;
    line(&mut out, f.px(rmin, 0.0), f.px(rmax, 0.0), axis);
    line(&mut out, f.px(0.0, xmin), f.px(0.0, xmax), axis);
    let (ax, ay) = f.px(rmax, 0.0);
    text(&mut out, ax - 4.0, ay - 6.0, "end", 12, "R (ohm)");
    let (bx, by) = f.px(0.0, xmax);
    text(&mut out, bx + 6.0, by + 12.0, "start", 12, "X (ohm)");

    let (cx, cy) = f.px(c.re, c.im);
    writeln!(
        out,
        r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="#dde8f6" fill-opacity="0.6" stroke="#1f4e9a" stroke-width="1.5"/>"##,
        r * s
    )
    .unwrap();

    let mut pts = String::new();
    for (i, p) in locus.points.iter().enumerate() {
        let (x, y) = f.px(p.z.re, p.z.im);
        if i > 0 {
            pts.push(' ');
        }
        write!(pts, "{x:.2},{y:.2}").unwrap();
    }
    writeln!(
        out,
        r##"<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##
    )
    .unwrap();
    for (p, fill) in [(locus.points.first(), "#2c3e50"), (locus.points.last(), "#c0392b")] {
        if let Some(p) = p {
            let (x, y) = f.px(p.z.re, p.z.im);
            writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="{fill}"/>"#,
                x - 3.0,
                y - 3.0
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_rx_svg(locus: &ImpedanceLocus, zone: &MhoZone, title: &str, path: &Path) -> Result<(), HarnessError> {
    if locus.is_empty() {
        return Err(HarnessError::Usage("cannot plot an empty locus".into()));
    }
    fs::write(path, rx_svg(locus, zone, title)).map_err(|e| HarnessError::io(path, e))
}

/// Least-squares line `y = slope·x + intercept`. With no spread in `x` the
/// slope is 0 and the intercept is the mean of `y`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len().min(y.len());
    if n == 0 {
        return (0.0, 0.0);
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// One panel of the fit figure.
#[derive(Debug, Clone, PartialEq)]
pub struct FitPanel {
    pub title: String,
    pub targets_km: Vec<f64>,
    pub predicted_km: Vec<f64>,
}

/// Predicted against target distance, one panel per split, each with the
/// identity line (dashed) and the least-squares fit.
pub fn fit_svg(report: &TrainingReport, panels: &[FitPanel]) -> String {
    let (pw, ph, margin) = (300.0, 300.0, 55.0);
    let width = margin + panels.len() as f64 * (pw + margin);
    let height = ph + 2.0 * margin + 30.0;

    let all = panels.iter().flat_map(|p| p.targets_km.iter().chain(&p.predicted_km));
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let (lo, hi) = if lo.is_finite() {
        padded(lo, hi, 0.05)
    } else {
        (0.0, 1.0)
    };

    let mut out = String::new();
    header(&mut out, width as u32, height as u32);
    let best = report.best_record();
    text(
        &mut out,
        width / 2.0,
        24.0,
        "middle",
        15,
        &format!(
            "{}: best epoch {} of {}, train MSE {:.3e}, stop: {}",
            report.optimizer.name().to_uppercase(),
            report.best_epoch,
            report.final_record().epoch,
            best.train_mse,
            report.stop_reason.name()
        ),
    );

    for (k, panel) in panels.iter().enumerate() {
        let left = margin + k as f64 * (pw + margin);
        let top = margin;
        let s = pw / (hi - lo);
        let f = Frame {
            x0: lo,
            y1: hi,
            sx: s,
            sy: ph / (hi - lo),
            left,
            top,
        };
        writeln!(
            out,
            r#"<rect x="{left:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black" stroke-width="1"/>"#
        )
        .unwrap();
        line(
            &mut out,
            f.px(lo, lo),
            f.px(hi, hi),
            r##"stroke="#7f8c8d" stroke-width="1" stroke-dasharray="4 3""##,
        );
        for (t, p) in panel.targets_km.iter().zip(&panel.predicted_km) {
            let (x, y) = f.px(*t, *p);
            writeln!(
                out,
                r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="none" stroke="#1f4e9a"/>"##
            )
            .unwrap();
        }
        let n = panel.targets_km.len();
        let caption = if n == 0 {
            "no rows".to_string()
        } else {
            let (slope, intercept) = linear_fit(&panel.targets_km, &panel.predicted_km);
            line(
                &mut out,
                f.px(lo, slope * lo + intercept),
                f.px(hi, slope * hi + intercept),
                r##"stroke="#c0392b" stroke-width="1.5""##,
            );
            format!("fit: {slope:.4}*t + {intercept:.4}, n = {n}")
        };
        text(&mut out, left + pw / 2.0, top - 8.0, "middle", 13, &panel.title);
        text(&mut out, left + pw / 2.0, top + ph + 20.0, "middle", 11, "target (km)");
        text(&mut out, left + pw / 2.0, top + ph + 36.0, "middle", 11, &caption);
        text(&mut out, left - 8.0, top + 10.0, "end", 10, &format!("{hi:.1}"));
        text(&mut out, left - 8.0, top + ph, "end", 10, &format!("{lo:.1}"));
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_fit_svg(report: &TrainingReport, panels: &[FitPanel], path: &Path) -> Result<(), HarnessError> {
    fs::write(path, fit_svg(report, panels)).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hifloc_core::relay::LocusPoint;
    use hifloc_core::Phasor;

    fn locus(points: &[(f64, f64)]) -> ImpedanceLocus {
        ImpedanceLocus {
            points: points
                .iter()
                .enumerate()
                .map(|(i, &(r, x))| LocusPoint {
                    t_s: i as f64,
                    z: Phasor::new(r, x),
                })
                .collect(),
        }
    }

    #[test]
    fn rx_has_one_circle_and_one_polyline() {
        let zone = MhoZone::new(20.0, 80.0).unwrap();
        let svg = rx_svg(&locus(&[(200.0, 10.0), (50.0, 30.0), (2.0, 8.0)]), &zone, "test");
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(
            svg,
            rx_svg(&locus(&[(200.0, 10.0), (50.0, 30.0), (2.0, 8.0)]), &zone, "test")
        );
    }

    #[test]
    fn fit_of_identity_and_constant() {
        let x = [5.0, 10.0, 20.0, 50.0];
        let (slope, intercept) = linear_fit(&x, &x);
        assert!((slope - 1.0).abs() < 1e-12 && intercept.abs() < 1e-12);
        assert_eq!(linear_fit(&x, &[7.0; 4]).0, 0.0);
    }
}
