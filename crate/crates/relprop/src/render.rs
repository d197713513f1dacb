//! Human-inspectable artifacts from relevance maps: sign-aware heatmap
//! images (binary PPM) and token-colored HTML.
//!
//! The diverging map sends +saturation to pure red, 0 to white and
//! -saturation to pure blue, interpolating linearly per channel and clamping
//! beyond; the magnitude map sends |R| from black to red. Channel bytes
//! round half away from zero. Rendering is a pure function of (map, spec):
//! identical inputs give byte-identical files.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lrp::{MethodLabel, RelevanceMap};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMapKind {
    /// Red for positive, white at zero, blue for negative.
    DivergingSigned,
    /// Black to red over |R|.
    SequentialMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorMapSpec {
    pub kind: ColorMapKind,
    /// Max |R| mapped to full color; defaults to the map's own max |R|.
    pub saturation: Option<f64>,
}

impl ColorMapSpec {
    pub fn diverging() -> Self {
        ColorMapSpec {
            kind: ColorMapKind::DivergingSigned,
            saturation: None,
        }
    }

    pub fn magnitude() -> Self {
        ColorMapSpec {
            kind: ColorMapKind::SequentialMagnitude,
            saturation: None,
        }
    }

    fn resolve_saturation(&self, values: &[f64]) -> Result<f64> {
        let sat = match self.saturation {
            Some(s) => {
                if !s.is_finite() || s <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "saturation must be positive, got {s}"
                    )));
                }
                s
            }
            None => values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())),
        };
        Ok(sat)
    }
}

/// One value to an RGB triple. A zero saturation only happens for an
/// identically-zero map, which renders white (diverging) or black
/// (magnitude).
pub fn map_color(value: f64, saturation: f64, kind: ColorMapKind) -> [u8; 3] {
    let t = if saturation > 0.0 {
        (value.abs() / saturation).min(1.0)
    } else {
        0.0
    };
    let fade = round_half_away(255.0 * (1.0 - t));
    match kind {
        ColorMapKind::DivergingSigned => {
            if value >= 0.0 {
                [255, fade, fade]
            } else {
                [fade, fade, 255]
            }
        }
        ColorMapKind::SequentialMagnitude => [round_half_away(255.0 * t), 0, 0],
    }
}

fn round_half_away(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Collapses a relevance map to the rank-2 grid the image renderer needs:
/// rank-1 feature vectors become a one-row strip, rank-2 maps pass through,
/// and rank-3 maps sum channels with sign for LRP (cancellation is
/// information) or take the channel norm for sensitivity maps (which carry
/// no sign).
pub fn display_map(map: &RelevanceMap) -> Result<Tensor> {
    match map.values.rank() {
        1 => map.values.reshape(vec![1, map.values.len()]),
        2 => Ok(map.values.clone()),
        3 => {
            let (c, h, w) = (
                map.values.shape()[0],
                map.values.shape()[1],
                map.values.shape()[2],
            );
            let mut out = vec![0.0; h * w];
            match map.method {
                MethodLabel::Lrp { .. } => {
                    for ch in 0..c {
                        for (i, o) in out.iter_mut().enumerate() {
                            *o += map.values.get_flat(ch * h * w + i);
                        }
                    }
                }
                MethodLabel::Sensitivity { .. } => {
                    for (i, o) in out.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for ch in 0..c {
                            let v = map.values.get_flat(ch * h * w + i);
                            acc += v * v;
                        }
                        *o = acc.sqrt();
                    }
                }
            }
            Tensor::new(vec![h, w], out)
        }
        r => Err(Error::InvalidShape(format!(
            "heatmap rendering needs a map of rank 1 to 3, got rank {r}"
        ))),
    }
}

/// Writes a rank-2 map as binary PPM (P6), one image pixel per map cell.
pub fn render_heatmap_image(map: &RelevanceMap, spec: &ColorMapSpec, path: &Path) -> Result<()> {
    let grid = display_map(map)?;
    let (h, w) = (grid.shape()[0], grid.shape()[1]);
    let sat = spec.resolve_saturation(grid.data())?;

    let mut bytes = Vec::with_capacity(32 + 3 * h * w);
    bytes.extend_from_slice(format!("P6\n{w} {h}\n255\n").as_bytes());
    for v in grid.iter() {
        bytes.extend_from_slice(&map_color(v, sat, spec.kind));
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a self-contained HTML document with every token on a
/// relevance-colored background. Token text is HTML-escaped.
pub fn render_text_html(
    tokens: &[String],
    token_relevance: &[f64],
    spec: &ColorMapSpec,
    path: &Path,
) -> Result<()> {
    if tokens.len() != token_relevance.len() {
        return Err(Error::ShapeMismatch {
            context: "tokens vs relevance scores",
            left: vec![tokens.len()],
            right: vec![token_relevance.len()],
        });
    }
    let sat = spec.resolve_saturation(token_relevance)?;

    let mut html = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n\
         <title>token relevance</title>\n\
         <style>\nbody { font-family: sans-serif; line-height: 1.8; margin: 2em; }\n\
         span.tok { padding: 2px 4px; margin: 1px; border-radius: 3px; }\n</style>\n\
         </head>\n<body>\n<p>\n",
    );
    for (token, &r) in tokens.iter().zip(token_relevance) {
        let [red, green, blue] = map_color(r, sat, spec.kind);
        html.push_str(&format!(
            "<span class=\"tok\" style=\"background-color: rgb({red},{green},{blue})\" \
             title=\"{r}\">{}</span>\n",
            escape_html(token)
        ));
    }
    html.push_str("</p>\n</body>\n</html>\n");
    fs::write(path, html).map_err(|e| Error::io(path, e))
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}
