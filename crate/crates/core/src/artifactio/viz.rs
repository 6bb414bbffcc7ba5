//! SVG rendering of words as circles: centre from the projected mean,
//! radius linear in sigma.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VizError {
    #[error("nothing to draw")]
    Empty,
    #[error("words, centres and sigmas differ in length")]
    Shape,
    #[error("sigma for {0:?} must be positive and finite")]
    BadSigma(String),
    #[error("non-finite centre for {0:?}")]
    BadCenter(String),
    #[error("canvas extent must be positive")]
    BadExtent,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Circles laid out on a square canvas of side `extent`.
#[derive(Debug, Clone, PartialEq)]
pub struct VizSpec {
    pub words: Vec<String>,
    /// Canvas coordinates, y pointing down.
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    pub extent: f64,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl VizSpec {
    /// Radius is `scale * sigma` with `scale` chosen so the median radius is
    /// 5% of the extent (reduced if the largest circle would exceed 45%).
    /// Points are scaled uniformly into the canvas, inset by the largest
    /// radius so every circle stays inside.
    pub fn layout(
        words: Vec<String>,
        points: &[[f64; 2]],
        sigmas: &[f64],
        extent: f64,
    ) -> Result<Self, VizError> {
        if words.is_empty() {
            return Err(VizError::Empty);
        }
        if points.len() != words.len() || sigmas.len() != words.len() {
            return Err(VizError::Shape);
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(VizError::BadExtent);
        }
        for (w, &s) in words.iter().zip(sigmas) {
            if !(s > 0.0) || !s.is_finite() {
                return Err(VizError::BadSigma(w.clone()));
            }
        }
        for (w, p) in words.iter().zip(points) {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(VizError::BadCenter(w.clone()));
            }
        }
        let smax = sigmas.iter().copied().fold(0.0, f64::max);
        let scale = (0.05 * extent / median(sigmas)).min(0.45 * extent / smax);
        let radii: Vec<f64> = sigmas.iter().map(|s| scale * s).collect();
        let margin = scale * smax;

        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let room = extent - 2.0 * margin;
        let k = if span > 0.0 { room / span } else { 0.0 };
        let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let centers = points
            .iter()
            .map(|p| {
                [
                    extent / 2.0 + k * (p[0] - mid[0]),
                    extent / 2.0 - k * (p[1] - mid[1]),
                ]
            })
            .collect();
        Ok(VizSpec {
            words,
            centers,
            radii,
            extent,
        })
    }

    pub fn to_svg(&self) -> String {
        let e = self.extent;
        let font = (e / 60.0).max(6.0);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{e:.0}" height="{e:.0}" viewBox="0 0 {e:.3} {e:.3}">"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{e:.3}" height="{e:.3}" fill="white"/>"#
        );
        for ((w, c), r) in self.words.iter().zip(&self.centers).zip(&self.radii) {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="#4682b4" fill-opacity="0.2" stroke="#4682b4" stroke-width="1"/>"##,
                c[0], c[1], r
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="{font:.1}" text-anchor="middle">{}</text>"#,
                c[0],
                c[1] + font / 3.0,
                escape(w)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn emit_viz(viz: &VizSpec, path: &Path) -> Result<(), VizError> {
    fs::write(path, viz.to_svg())?;
    Ok(())
}
