//! Heatmap matrices over the (U, tau) plane, extrema location, and a
//! self-contained SVG rendering.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Dense quantity matrix over the sweep axes; `values[ti][ui]` is the value
/// at (tau_values[ti], u_values[ui]), `None` marking missing points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatmapMatrix {
    pub quantity: String,
    pub l: usize,
    pub u_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl HeatmapMatrix {
    /// CSV matrix: header row of U values, one row per tau. Missing points
    /// are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("tau_J_by_U_over_J");
        for u in &self.u_values {
            let _ = write!(out, ",{u}");
        }
        out.push('\n');
        for (ti, tau) in self.tau_values.iter().enumerate() {
            let _ = write!(out, "{tau}");
            for cell in &self.values[ti] {
                match cell {
                    Some(v) => {
                        let _ = write!(out, ",{v}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Fixed-size SVG with a linear color map, axis labels and a colorbar.
    pub fn to_svg(&self) -> String {
        let (min, max) = self
            .values
            .iter()
            .flatten()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        let (min, max) = if min.is_finite() && max > min {
            (min, max)
        } else {
            (0.0, 1.0)
        };
        let (nu, nt) = (self.u_values.len(), self.tau_values.len());
        let (px, py) = (40.0_f64, 30.0_f64); // cell size
        let (ml, mt, mr, mb) = (70.0, 40.0, 90.0, 60.0); // margins
        let w = ml + nu as f64 * px + mr;
        let h = mt + nt as f64 * py + mb;
        let mut s = String::new();
        let _ = write!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
             viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        );
        let _ = write!(
            s,
            "<text x=\"{:.1}\" y=\"20\" font-size=\"14\">{} (L={})</text>\n",
            ml,
            xml_escape(&self.quantity),
            self.l
        );
        for (ti, row) in self.values.iter().enumerate() {
            for (ui, cell) in row.iter().enumerate() {
                let x = ml + ui as f64 * px;
                // tau increases upward
                let y = mt + (nt - 1 - ti) as f64 * py;
                match cell {
                    Some(v) => {
                        let t = (v - min) / (max - min);
                        let (r, g, b) = colormap(t);
                        let _ = write!(
                            s,
                            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{px:.1}\" height=\"{py:.1}\" \
                             fill=\"rgb({r},{g},{b})\"/>\n"
                        );
                    }
                    None => {
                        let _ = write!(
                            s,
                            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{px:.1}\" height=\"{py:.1}\" \
                             fill=\"none\" stroke=\"#999\" stroke-dasharray=\"2,2\"/>\n"
                        );
                    }
                }
            }
        }
        // axis ticks: U along the bottom, tau along the left
        for (ui, u) in self.u_values.iter().enumerate() {
            if nu <= 13 || ui % (nu / 13 + 1) == 0 {
                let x = ml + (ui as f64 + 0.5) * px;
                let y = mt + nt as f64 * py + 16.0;
                let _ = write!(
                    s,
                    "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"middle\">{u:.2}</text>\n"
                );
            }
        }
        for (ti, tau) in self.tau_values.iter().enumerate() {
            let x = ml - 6.0;
            let y = mt + (nt - 1 - ti) as f64 * py + 0.5 * py + 4.0;
            let _ = write!(
                s,
                "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"end\">{tau:.2}</text>\n"
            );
        }
        let _ = write!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">U/J</text>\n",
            ml + nu as f64 * px / 2.0,
            mt + nt as f64 * py + 44.0
        );
        let _ = write!(
            s,
            "<text x=\"16\" y=\"{:.1}\" transform=\"rotate(-90 16 {:.1})\" \
             text-anchor=\"middle\">tau*J</text>\n",
            mt + nt as f64 * py / 2.0,
            mt + nt as f64 * py / 2.0
        );
        // colorbar
        let cbx = ml + nu as f64 * px + 20.0;
        let cbh = nt as f64 * py;
        let nseg = 32;
        for k in 0..nseg {
            let t = (k as f64 + 0.5) / nseg as f64;
            let (r, g, b) = colormap(t);
            let y = mt + cbh * (1.0 - (k as f64 + 1.0) / nseg as f64);
            let _ = write!(
                s,
                "<rect x=\"{cbx:.1}\" y=\"{y:.1}\" width=\"16\" height=\"{:.2}\" \
                 fill=\"rgb({r},{g},{b})\"/>\n",
                cbh / nseg as f64 + 0.5
            );
        }
        let _ = write!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\">{max:.3}</text>\n",
            cbx + 20.0,
            mt + 10.0
        );
        let _ = write!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\">{min:.3}</text>\n",
            cbx + 20.0,
            mt + cbh
        );
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Blue-white-red linear map on [0, 1].
fn colormap(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (lerp(33.0, 247.0, u), lerp(102.0, 247.0, u), lerp(172.0, 247.0, u))
    } else {
        let u = (t - 0.5) / 0.5;
        (lerp(247.0, 178.0, u), lerp(247.0, 24.0, u), lerp(247.0, 43.0, u))
    };
    (r as u8, g as u8, b as u8)
}

/// Discrete extrema and zero crossings of a sampled curve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    /// (x, y) of local minima, parabolically refined
    pub minima: Vec<(f64, f64)>,
    /// (x, y) of local maxima
    pub maxima: Vec<(f64, f64)>,
    /// zero crossings by sign change, linearly interpolated
    pub zero_crossings: Vec<f64>,
}

/// Locate interior local extrema (with sub-grid parabolic refinement) and
/// zero crossings of a series sampled at ascending x.
pub fn locate_extrema(series: &[(f64, f64)]) -> Result<Extrema> {
    if series.len() < 3 {
        return Err(CoreError::InvalidParameter(format!(
            "need at least 3 points, got {}",
            series.len()
        )));
    }
    let mut out = Extrema::default();
    for i in 1..series.len() - 1 {
        let (x0, y0) = series[i - 1];
        let (x1, y1) = series[i];
        let (x2, y2) = series[i + 1];
        let is_min = y1 < y0 && y1 < y2;
        let is_max = y1 > y0 && y1 > y2;
        if is_min || is_max {
            out_push(&mut out, is_min, refine_parabolic(x0, y0, x1, y1, x2, y2));
        }
    }
    for i in 0..series.len() - 1 {
        let (x0, y0) = series[i];
        let (x1, y1) = series[i + 1];
        if y0 == 0.0 {
            if i > 0 && series[i - 1].1 * y1 < 0.0 {
                out.zero_crossings.push(x0);
            }
        } else if y0 * y1 < 0.0 {
            out.zero_crossings.push(x0 - y0 * (x1 - x0) / (y1 - y0));
        }
    }
    if series.last().map(|p| p.1) == Some(0.0) {
        // endpoint zero without a sign change is not a crossing
    }
    Ok(out)
}

fn out_push(out: &mut Extrema, is_min: bool, xy: (f64, f64)) {
    if is_min {
        out.minima.push(xy);
    } else {
        out.maxima.push(xy);
    }
}

/// Vertex of the parabola through three points (non-uniform spacing).
fn refine_parabolic(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> (f64, f64) {
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0); // half the second derivative
    if curv == 0.0 {
        return (x1, y1);
    }
    // Newton form: y = y0 + d01 (x - x0) + curv (x - x0)(x - x1)
    let xv = 0.5 * (x0 + x1 - d01 / curv);
    let yv = y0 + d01 * (xv - x0) + curv * (xv - x0) * (xv - x1);
    (xv, yv)
}
