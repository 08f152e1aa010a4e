//! File formats: channel CSVs, training CSVs, weight JSON, and output
//! bundle writing. All writers format floats with six decimal places so
//! reruns produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use vitasim::cardio::HrTrainingSample;
use vitasim::dsp::WaveformChannel;
use vitasim::neural::MlpWeights;
use vitasim::resp::RrTrainingSample;
use vitasim::scr::ScrTrainingRow;

use crate::pipeline::{RunManifest, SynthesisOutput};

/// Write a channel as `t,value` rows.
pub fn write_channel_csv(path: &Path, channel: &WaveformChannel) -> Result<()> {
    let mut out = String::with_capacity(channel.samples.len() * 18 + 16);
    out.push_str("t,value\n");
    for (i, v) in channel.samples.iter().enumerate() {
        let t = i as f64 / channel.sample_rate;
        out.push_str(&format!("{t:.6},{v:.6}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Read a `t,value` CSV back into a channel; the sample rate is inferred
/// from the first timestamp step.
pub fn read_channel_csv(path: &Path, name: &str, unit: &str) -> Result<WaveformChannel> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 2 {
            bail!("{}: expected two columns (t,value)", path.display());
        }
        times.push(record[0].parse::<f64>()?);
        values.push(record[1].parse::<f64>()?);
    }
    if values.len() < 2 {
        bail!("{}: need at least two samples", path.display());
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        bail!("{}: non-increasing timestamps", path.display());
    }
    Ok(WaveformChannel::new(name, 1.0 / dt, unit, values))
}

pub fn save_weights(path: &Path, weights: &MlpWeights) -> Result<()> {
    let json = serde_json::to_string_pretty(weights)?;
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

pub fn load_weights(path: &Path) -> Result<MlpWeights> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Write the full output bundle: one CSV per channel plus metadata JSON.
pub fn write_bundle(dir: &Path, out: &SynthesisOutput, manifest: &RunManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_channel_csv(&dir.join("ecg.csv"), &out.ecg)?;
    write_channel_csv(&dir.join("bp.csv"), &out.bp)?;
    write_channel_csv(&dir.join("resp.csv"), &out.resp)?;
    write_channel_csv(&dir.join("scr.csv"), &out.scr)?;
    let hr = WaveformChannel::new("hr", 1.0, "bpm", out.hr_series.clone());
    let rr = WaveformChannel::new("rr", 1.0, "br/min", out.rr_series.clone());
    write_channel_csv(&dir.join("hr.csv"), &hr)?;
    write_channel_csv(&dir.join("rr.csv"), &rr)?;
    let meta = serde_json::to_string_pretty(manifest)?;
    fs::write(dir.join("metadata.json"), meta)?;
    Ok(())
}

// ── Training CSVs ──────────────────────────────────────────────────────────

pub fn write_hr_csv(path: &Path, rows: &[HrTrainingSample]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "valence,arousal,delta_hr,delta_hrv")?;
    for r in rows {
        writeln!(
            f,
            "{:.6},{:.6},{:.6},{:.6}",
            r.valence, r.arousal, r.delta_hr, r.delta_hrv
        )?;
    }
    Ok(())
}

pub fn read_hr_csv(path: &Path) -> Result<Vec<HrTrainingSample>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        rows.push(HrTrainingSample {
            valence: r[0].parse()?,
            arousal: r[1].parse()?,
            delta_hr: r[2].parse()?,
            delta_hrv: r[3].parse()?,
        });
    }
    if rows.is_empty() {
        bail!("{}: no rows", path.display());
    }
    Ok(rows)
}

pub fn write_rr_csv(path: &Path, rows: &[RrTrainingSample]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "valence,arousal,delta_rr")?;
    for r in rows {
        writeln!(f, "{:.6},{:.6},{:.6}", r.valence, r.arousal, r.delta_rr)?;
    }
    Ok(())
}

pub fn read_rr_csv(path: &Path) -> Result<Vec<RrTrainingSample>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        rows.push(RrTrainingSample {
            valence: r[0].parse()?,
            arousal: r[1].parse()?,
            delta_rr: r[2].parse()?,
        });
    }
    if rows.is_empty() {
        bail!("{}: no rows", path.display());
    }
    Ok(rows)
}

const SCR_TARGET_SAMPLES: usize = 960;

pub fn write_scr_csv(path: &Path, rows: &[ScrTrainingRow]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    let mut header = String::from("valence,arousal,met,age,gender,window_start");
    for i in 0..SCR_TARGET_SAMPLES {
        header.push_str(&format!(",s{i}"));
    }
    writeln!(f, "{header}")?;
    for r in rows {
        let mut line = format!(
            "{:.6},{:.6},{:.6},{},{},{:.6}",
            r.valence,
            r.arousal,
            r.met,
            r.age,
            if r.gender_female { 1 } else { 0 },
            r.window_start_s
        );
        for v in &r.target {
            line.push_str(&format!(",{v:.6}"));
        }
        writeln!(f, "{line}")?;
    }
    Ok(())
}

pub fn read_scr_csv(path: &Path) -> Result<Vec<ScrTrainingRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        if r.len() != 6 + SCR_TARGET_SAMPLES {
            bail!(
                "{}: expected {} columns, got {}",
                path.display(),
                6 + SCR_TARGET_SAMPLES,
                r.len()
            );
        }
        let target: Result<Vec<f64>, _> = (6..r.len()).map(|i| r[i].parse::<f64>()).collect();
        rows.push(ScrTrainingRow {
            valence: r[0].parse()?,
            arousal: r[1].parse()?,
            met: r[2].parse()?,
            age: r[3].parse()?,
            gender_female: &r[4] == "1",
            window_start_s: r[5].parse()?,
            target: target?,
        });
    }
    if rows.is_empty() {
        bail!("{}: no rows", path.display());
    }
    Ok(rows)
}

// ── Correlation ────────────────────────────────────────────────────────────

/// Pearson correlation of two series after resampling the second onto the
/// first's timestamps by linear interpolation.
pub fn pearson_on_common_grid(
    t_a: &[f64],
    a: &[f64],
    t_b: &[f64],
    b: &[f64],
) -> Result<f64> {
    if t_a.len() != a.len() || t_b.len() != b.len() || a.len() < 3 || b.len() < 3 {
        bail!("series too short or mismatched");
    }
    let lo = t_a[0].max(t_b[0]);
    let hi = t_a[t_a.len() - 1].min(t_b[t_b.len() - 1]);
    if hi <= lo {
        bail!("series do not overlap in time");
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &t) in t_a.iter().enumerate() {
        if t < lo || t > hi {
            continue;
        }
        xs.push(a[i]);
        ys.push(lerp_at(t_b, b, t));
    }
    pearson(&xs, &ys)
}

fn lerp_at(ts: &[f64], vs: &[f64], t: f64) -> f64 {
    match ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => vs[i],
        Err(0) => vs[0],
        Err(i) if i >= ts.len() => vs[vs.len() - 1],
        Err(i) => {
            let frac = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
            vs[i - 1] * (1.0 - frac) + vs[i] * frac
        }
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 3 {
        bail!("need at least 3 paired samples");
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        bail!("a series is constant; correlation undefined");
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}
