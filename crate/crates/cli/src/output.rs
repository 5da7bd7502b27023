//! Artifact writers: CSV traces, SVG plots and JSON summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sihg::TraceRow;

use crate::{CliError, Result, OUTPUT_DIR_ENV};

pub const TRACE_COLUMNS: &str = "k,residual_sq,dist_w_sq,dist_delta_sq,elapsed_ns";

/// Flag beats environment beats config; the default is `./out`.
pub fn resolve_output_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out"))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Streams trace rows to disk so a failed run still leaves a readable prefix.
pub struct TraceCsv {
    path: PathBuf,
    out: BufWriter<File>,
    stride: usize,
    timing: bool,
    error: Option<std::io::Error>,
}

impl TraceCsv {
    pub fn create(path: PathBuf, header: &[(&str, String)], stride: usize, timing: bool) -> Result<Self> {
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut out = BufWriter::new(file);
        let mut write_header = || -> std::io::Result<()> {
            for (key, value) in header {
                writeln!(out, "#{key}={value}")?;
            }
            writeln!(out, "{TRACE_COLUMNS}")
        };
        write_header().map_err(|e| CliError::io(&path, e))?;
        Ok(Self {
            path,
            out,
            stride,
            timing,
            error: None,
        })
    }

    /// Writes rows at metric-stride iterations; I/O errors are kept until
    /// [`TraceCsv::finish`].
    pub fn row(&mut self, row: &TraceRow) {
        if self.error.is_some() || !row.k.is_multiple_of(self.stride) {
            return;
        }
        let elapsed = if self.timing { row.elapsed_ns } else { 0 };
        if let Err(e) = writeln!(
            self.out,
            "{},{},{},{},{elapsed}",
            row.k,
            opt(row.residual_sq),
            opt(row.dist_w_sq),
            opt(row.dist_delta_sq)
        ) {
            self.error = Some(e);
        }
    }

    /// Flushes; a `failure` message is appended as a `#truncated` marker.
    pub fn finish(mut self, failure: Option<&str>) -> Result<PathBuf> {
        if let Some(e) = self.error.take() {
            return Err(CliError::io(&self.path, e));
        }
        if let Some(msg) = failure {
            writeln!(self.out, "#truncated={}", msg.replace('\n', " ")).map_err(|e| CliError::io(&self.path, e))?;
        }
        self.out.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line chart of `log10(y)` against `log10(x)`; non-positive values are skipped.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let logged: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|p| p.0 > 0.0 && p.1 > 0.0 && p.1.is_finite())
                .map(|p| (p.0.log10(), p.1.log10()))
                .collect()
        })
        .collect();
    let all = logged.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n\
         <rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w / 2.0,
        escape(title),
        w - 2.0 * m,
        h - 2.0 * m
    );
    // integer decades as ticks
    for d in (x0.ceil() as i64)..=(x1.floor() as i64) {
        let x = sx(d as f64);
        svg += &format!(
            "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/>\
             <text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e{d}</text>\n",
            h - m,
            h - m + 5.0,
            h - m + 18.0
        );
    }
    for d in (y0.ceil() as i64)..=(y1.floor() as i64) {
        let y = sy(d as f64);
        svg += &format!(
            "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{m}\" y2=\"{y:.1}\" stroke=\"black\"/>\
             <text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e{d}</text>\n",
            m - 5.0,
            m - 8.0,
            y + 4.0
        );
    }
    svg += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" \
         transform=\"rotate(-90 16 {})\">{}</text>\n",
        w / 2.0,
        h - 14.0,
        escape(x_label),
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (j, (s, pts)) in series.iter().zip(&logged).enumerate() {
        let color = COLORS[j % COLORS.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            svg += &format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            );
        }
        let ly = m + 16.0 + 16.0 * j as f64;
        svg += &format!(
            "<text x=\"{}\" y=\"{ly}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{color}\">{}</text>\n",
            w - m - 8.0,
            escape(s.label)
        );
    }
    svg + "</svg>\n"
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
