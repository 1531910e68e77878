//! Binary field files, CSV and SVG output.
//!
//! Field files (`.tfc`) start with the magic `TFC1`, then `u32 nx`, `u32 ny`, `f64 delta`,
//! `f64 x0`, `f64 y0` and a `u8` kind tag, followed by the samples in row-major order
//! (index `i` along x outermost). Complex kinds store `re, im` pairs; the weight kind stores one
//! `f64` per sample. Everything is little-endian.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gabor::{FieldKind, GaborField, TfGrid};

const MAGIC: &[u8; 4] = b"TFC1";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 * 3 + 1;
/// Largest heatmap side in pixels.
const MAX_PIXELS: usize = 200;
/// Dynamic range of the heatmaps.
const FLOOR_DB: f64 = 60.0;
const PALETTE: [&str; 8] = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#bfef45"];

/// Contents of a field file.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Complex(GaborField),
    /// Real samples such as weights or spectrograms.
    Real { grid: TfGrid, values: Array2<f64> },
}

impl FieldData {
    pub fn grid(&self) -> &TfGrid {
        match self {
            FieldData::Complex(f) => &f.grid,
            FieldData::Real { grid, .. } => grid,
        }
    }

    /// Pointwise modulus.
    pub fn modulus(&self) -> Array2<f64> {
        match self {
            FieldData::Complex(f) => f.modulus(),
            FieldData::Real { values, .. } => values.mapv(f64::abs),
        }
    }
}

fn kind_tag(kind: FieldKind) -> u8 {
    match kind {
        FieldKind::Gabor => 0,
        FieldKind::Ambiguity => 1,
        FieldKind::Generic => 2,
    }
}

fn header(grid: &TfGrid, tag: u8) -> Result<Vec<u8>> {
    let dim = |n: usize| u32::try_from(n).map_err(|_| Error::Format(format!("dimension {n} exceeds u32")));
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&dim(grid.nx)?.to_le_bytes());
    out.extend_from_slice(&dim(grid.ny)?.to_le_bytes());
    for v in [grid.delta, grid.x0, grid.y0] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(tag);
    Ok(out)
}

/// Serializes a complex field.
pub fn encode_field(field: &GaborField) -> Result<Vec<u8>> {
    let mut out = header(&field.grid, kind_tag(field.kind))?;
    out.reserve(field.values.len() * 16);
    for z in field.values.iter() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(out)
}

/// Serializes a real field (kind tag 3).
pub fn encode_real(grid: &TfGrid, values: &Array2<f64>) -> Result<Vec<u8>> {
    if values.dim() != grid.shape() {
        return Err(Error::ShapeMismatch(format!("values {:?} vs grid {:?}", values.dim(), grid.shape())));
    }
    let mut out = header(grid, 3)?;
    out.reserve(values.len() * 8);
    for v in values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    let mut buf = [0u8; 8];
    buf.copy_from_slice(&bytes[at..at + 8]);
    f64::from_le_bytes(buf)
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    let mut buf = [0u8; 4];
    buf.copy_from_slice(&bytes[at..at + 4]);
    u32::from_le_bytes(buf)
}

/// Parses a field file image.
pub fn decode(bytes: &[u8]) -> Result<FieldData> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a TFC1 field file".into()));
    }
    let nx = u32_at(bytes, 4) as usize;
    let ny = u32_at(bytes, 8) as usize;
    let grid = TfGrid::new(f64_at(bytes, 12), nx, ny, f64_at(bytes, 20), f64_at(bytes, 28))
        .map_err(|e| Error::Format(format!("bad grid header: {e}")))?;
    let tag = bytes[36];
    let body = &bytes[HEADER_LEN..];
    let width = if tag == 3 { 8 } else { 16 };
    let expected = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    if body.len() != expected {
        return Err(Error::Format(format!("expected {expected} data bytes, found {}", body.len())));
    }
    let kind = match tag {
        0 => FieldKind::Gabor,
        1 => FieldKind::Ambiguity,
        2 => FieldKind::Generic,
        3 => {
            let values = Array2::from_shape_fn((nx, ny), |(i, j)| f64_at(body, 8 * (i * ny + j)));
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format("non-finite sample".into()));
            }
            return Ok(FieldData::Real { grid, values });
        }
        other => return Err(Error::Format(format!("unknown kind tag {other}"))),
    };
    let values = Array2::from_shape_fn((nx, ny), |(i, j)| {
        let at = 16 * (i * ny + j);
        Complex64::new(f64_at(body, at), f64_at(body, at + 8))
    });
    GaborField::new(grid, values, kind)
        .map(FieldData::Complex)
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn read_field(path: &Path) -> Result<FieldData> {
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

/// `x,y,re,im` rows for a complex field, `x,y,value` for a real one.
pub fn field_csv(data: &FieldData) -> String {
    let mut out = String::new();
    match data {
        FieldData::Complex(f) => {
            out.push_str("x,y,re,im\n");
            for ((i, j), z) in f.values.indexed_iter() {
                let (x, y) = f.grid.point(i, j);
                let _ = writeln!(out, "{x},{y},{},{}", z.re, z.im);
            }
        }
        FieldData::Real { grid, values } => {
            out.push_str("x,y,value\n");
            for ((i, j), v) in values.indexed_iter() {
                let (x, y) = grid.point(i, j);
                let _ = writeln!(out, "{x},{y},{v}");
            }
        }
    }
    out
}

/// Block-maximum downsampling to at most `MAX_PIXELS` per side; returns the block size too.
fn downsample(a: &Array2<f64>) -> (Array2<f64>, usize) {
    let (nx, ny) = a.dim();
    let block = nx.max(ny).div_ceil(MAX_PIXELS).max(1);
    let (px, py) = (nx.div_ceil(block), ny.div_ceil(block));
    let out = Array2::from_shape_fn((px, py), |(u, v)| {
        let mut m = 0.0f64;
        for i in u * block..((u + 1) * block).min(nx) {
            for j in v * block..((v + 1) * block).min(ny) {
                m = m.max(a[[i, j]]);
            }
        }
        m
    });
    (out, block)
}

fn gray_level(v: f64, peak: f64) -> u8 {
    if peak <= 0.0 || v <= 0.0 {
        return 255;
    }
    let db = (20.0 * (v / peak).log10()).max(-FLOOR_DB);
    (255.0 * (-db / FLOOR_DB)).round() as u8
}

/// Log-magnitude grayscale heatmap (dark = large, 60 dB range) with `x` to the right and `y`
/// upwards. Cells whose leaf label differs from a 4-neighbour's are drawn in the leaf colour.
pub fn heatmap_svg(modulus: &Array2<f64>, grid: &TfGrid, labels: Option<&Array2<Option<usize>>>) -> String {
    let (img, block) = downsample(modulus);
    let (px, py) = img.dim();
    let peak = img.iter().fold(0.0f64, |m, &v| m.max(v));
    let scale = 3;
    let (w, h) = (px * scale, py * scale);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        out,
        "<!-- x in [{}, {}], y in [{}, {}], delta {} -->",
        grid.x0,
        grid.x_end(),
        grid.y0,
        grid.y_end(),
        grid.delta
    );
    for u in 0..px {
        for v in 0..py {
            let g = gray_level(img[[u, v]], peak);
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{scale}\" height=\"{scale}\" fill=\"rgb({g},{g},{g})\"/>",
                u * scale,
                (py - 1 - v) * scale
            );
        }
    }
    if let Some(labels) = labels {
        let (nx, ny) = labels.dim();
        let mut edge = Array2::from_elem((px, py), None);
        for ((i, j), &l) in labels.indexed_iter() {
            let Some(l) = l else { continue };
            let differs = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)]
                .into_iter()
                .any(|(a, b)| a < nx && b < ny && labels[[a, b]] != Some(l));
            if differs {
                edge[[i / block, j / block]] = Some(l);
            }
        }
        for ((u, v), l) in edge.indexed_iter() {
            if let Some(l) = l {
                let _ = writeln!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{scale}\" height=\"{scale}\" fill=\"{}\"/>",
                    u * scale,
                    (py - 1 - v) * scale,
                    PALETTE[l % PALETTE.len()]
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Polyline chart of `(x, y)` points; `log_y` plots `log10 y` (non-positive values skipped).
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], log_y: bool) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0.is_finite() && p.1.is_finite() && (!log_y || p.1 > 0.0))
        .map(|&(x, y)| (x, if log_y { y.log10() } else { y }))
        .collect();
    let (w, h, pad) = (480.0, 320.0, 50.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(out, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(out, "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>", w / 2.0);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{x_label}</text>",
        w / 2.0,
        h - 10.0
    );
    let y_name = if log_y { format!("log10 {y_label}") } else { y_label.to_string() };
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{y_name}</text>",
        h / 2.0,
        h / 2.0
    );
    let _ = writeln!(
        out,
        "<polyline points=\"{pad},{pad} {pad},{} {},{}\" fill=\"none\" stroke=\"black\"/>",
        h - pad,
        w - pad,
        h - pad
    );
    if !pts.is_empty() {
        let (x_min, x_max) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (y_min, y_max) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        let sx = |x: f64| pad + (w - 2.0 * pad) * if x_max > x_min { (x - x_min) / (x_max - x_min) } else { 0.5 };
        let sy = |y: f64| h - pad - (h - 2.0 * pad) * if y_max > y_min { (y - y_min) / (y_max - y_min) } else { 0.5 };
        let line: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"#4363d8\" stroke-width=\"2\"/>", line.join(" "));
        for &(x, y) in &pts {
            let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#4363d8\"/>", sx(x), sy(y));
        }
        let _ = writeln!(
            out,
            "<text x=\"{pad}\" y=\"{}\" font-size=\"10\">{x_min}</text><text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{x_max}</text>",
            h - pad + 14.0,
            w - pad,
            h - pad + 14.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{y_min:.3}</text><text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{y_max:.3}</text>",
            pad - 4.0,
            h - pad,
            pad - 4.0,
            pad + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
