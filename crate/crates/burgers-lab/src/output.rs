//! Deterministic artifact emission: CSV series, JSON summaries, JSON-lines
//! oracle reports, self-contained SVG line charts, and the run manifest.
//!
//! Everything except the manifest timestamp is a pure function of
//! (config, seeds, code version): floats are printed with Rust's shortest
//! round-trip formatting and all aggregation happens in deterministic key
//! order before anything is written.

use crate::fit::DistanceSeries;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// An artifact to be written under the output directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(name: impl Into<String>, content: String) -> Artifact {
        Artifact {
            name: name.into(),
            bytes: content.into_bytes(),
        }
    }

    pub fn json(name: impl Into<String>, value: &serde_json::Value) -> Artifact {
        let mut s = serde_json::to_string_pretty(value).expect("serializable");
        s.push('\n');
        Artifact::text(name, s)
    }
}

/// CSV of one or more distance series in long format:
/// `series,metric,t,value` rows sorted by (series, t).
pub fn series_csv(entries: &[(String, &DistanceSeries)]) -> String {
    let mut out = String::from("series,metric,t,value\n");
    for (name, series) in entries {
        let label = series.metric.label();
        for (t, v) in series.iter() {
            out.push_str(&format!("{name},{label},{t},{v}\n"));
        }
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    crate::config::hex_string(&h.finalize())
}

/// Entry of one written artifact in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// The run manifest: config hash, code version, artifact digests, and the
/// completion/validation flags. `generated_at` is the only
/// non-reproducible field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub config_hash: String,
    pub code_version: String,
    pub resolved_config: String,
    pub outputs: Vec<ManifestEntry>,
    pub complete: bool,
    pub oracle_validated: bool,
    pub generated_at: String,
}

pub fn code_version() -> String {
    format!("burgers-lab {}", env!("CARGO_PKG_VERSION"))
}

pub fn unix_timestamp() -> String {
    use std::time::{SystemTime, UNIX_EPOCH};
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("{secs}")
}

/// Drops the volatile timestamp so manifests of identical runs compare equal.
pub fn manifest_without_timestamp(manifest_json: &str) -> String {
    manifest_json
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_at\""))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Write artifacts plus manifest under `out_dir`. Returns the manifest.
pub fn write_run(
    out_dir: &Path,
    kind: &str,
    config_hash: &str,
    resolved_config: &str,
    oracle_validated: bool,
    complete: bool,
    artifacts: &[Artifact],
) -> std::io::Result<Manifest> {
    std::fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = out_dir.join(&a.name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, &a.bytes)?;
        outputs.push(ManifestEntry {
            path: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len(),
        });
    }
    let manifest = Manifest {
        kind: kind.to_string(),
        config_hash: config_hash.to_string(),
        code_version: code_version(),
        resolved_config: resolved_config.to_string(),
        outputs,
        complete,
        oracle_validated,
        generated_at: unix_timestamp(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(out_dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

/// Name of the validation stamp an oracle-check run leaves behind for its
/// configuration scope.
pub fn stamp_name(scope_hash: &str) -> String {
    format!("oracle-stamp-{scope_hash}.json")
}

/// Minimal self-contained SVG line chart; log-scale y when `log_y`.
pub fn svg_line_chart(
    title: &str,
    series: &[(String, &DistanceSeries)],
    log_y: bool,
) -> String {
    const W: f64 = 720.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

    let mut tmin = f64::INFINITY;
    let mut tmax = f64::NEG_INFINITY;
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for (_, s) in series {
        for (t, v) in s.iter() {
            let v = if log_y {
                if v <= 0.0 {
                    continue;
                }
                v.log10()
            } else {
                v
            };
            tmin = tmin.min(t);
            tmax = tmax.max(t);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
    }
    if !tmin.is_finite() || tmax <= tmin {
        tmin = 0.0;
        tmax = 1.0;
    }
    if !vmin.is_finite() || vmax <= vmin {
        vmin = 0.0;
        vmax = 1.0;
    }
    let sx = |t: f64| M + (t - tmin) / (tmax - tmin) * (W - 2.0 * M);
    let sy = |v: f64| H - M - (v - vmin) / (vmax - vmin) * (H - 2.0 * M);

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"16\">{}</text>\n",
        W / 2.0,
        xml_escape(title)
    );
    out.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - M,
        W - M,
        H - M,
        H - M
    ));
    // Axis labels: four ticks each.
    for k in 0..=4 {
        let t = tmin + (tmax - tmin) * k as f64 / 4.0;
        let v = vmin + (vmax - vmin) * k as f64 / 4.0;
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{t:.2}</text>\n",
            sx(t),
            H - M + 18.0
        ));
        let label = if log_y {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3}")
        };
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{label}</text>\n",
            M - 6.0,
            sy(v) + 4.0
        ));
    }
    for (idx, (name, s)) in series.iter().enumerate() {
        let color = palette[idx % palette.len()];
        let mut d = String::new();
        let mut started = false;
        for (t, v) in s.iter() {
            let v = if log_y {
                if v <= 0.0 {
                    continue;
                }
                v.log10()
            } else {
                v
            };
            let cmd = if started { 'L' } else { 'M' };
            d.push_str(&format!("{cmd}{:.2} {:.2} ", sx(t), sy(v)));
            started = true;
        }
        out.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            d.trim_end()
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{color}\">{}</text>\n",
            W - M + 4.0,
            M + 16.0 * idx as f64,
            xml_escape(name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
