//! Direction-of-change evaluation: synthesize per-emotion signals at a
//! seated activity level, extract the seven features, threshold the deltas
//! against the neutral run and compare with the expected-direction table.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use vitasim::dsp::{self, Direction};
use vitasim::resp;
use vitasim::scenario::{validate_scenario, ActionSpec, Scenario, ScenarioEvent, SubjectProfile};

use crate::config::{DirectionTable, EmotionCoords, WaveBlocks};
use crate::pipeline::{run_synthesis, SynthesisOutput, WeightSet};

/// Seated activity level used for emotion evaluation.
pub const EVAL_MET: f64 = 1.3;
/// Per-emotion run length, seconds.
pub const EVAL_DURATION_S: f64 = 180.0;
/// Settling time discarded before feature extraction, seconds. The
/// heart-rate kinetics need ~4 time constants to reach their plateau;
/// measuring across the transient would fold rate drift into the
/// variability features.
pub const EVAL_SETTLE_S: f64 = 60.0;

/// The seven scalar features of one run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FeatureSet {
    /// Mean heart rate from detected R peaks, beats/min.
    pub hr: f64,
    /// Mean 60-second SDNN of detected RR intervals, seconds.
    pub hrv: f64,
    /// Mean per-beat systolic pressure, mmHg.
    pub sbp: f64,
    /// Mean per-beat diastolic pressure, mmHg.
    pub dbp: f64,
    /// Mean per-beat ejection time, seconds.
    pub lvet: f64,
    /// Mean extracted respiratory rate, breaths/min.
    pub rr: f64,
    /// Mean skin conductance, microsiemens.
    pub scr: f64,
}

impl FeatureSet {
    pub fn get(&self, feature: &str) -> Option<f64> {
        match feature {
            "hr" => Some(self.hr),
            "hrv" => Some(self.hrv),
            "sbp" => Some(self.sbp),
            "dbp" => Some(self.dbp),
            "lvet" => Some(self.lvet),
            "rr" => Some(self.rr),
            "scr" => Some(self.scr),
            _ => None,
        }
    }
}

/// Drop the first `skip_s` seconds from every channel so features measure
/// the settled response.
pub fn trim_output(out: &SynthesisOutput, skip_s: f64) -> SynthesisOutput {
    let mut trimmed = out.clone();
    for ch in [
        &mut trimmed.ecg,
        &mut trimmed.bp,
        &mut trimmed.resp,
        &mut trimmed.scr,
    ] {
        let skip = ((skip_s * ch.sample_rate).round() as usize).min(ch.samples.len());
        ch.samples.drain(..skip);
    }
    let skip = (skip_s as usize).min(trimmed.hr_series.len());
    trimmed.hr_series.drain(..skip);
    let skip = (skip_s as usize).min(trimmed.rr_series.len());
    trimmed.rr_series.drain(..skip);
    trimmed
}

/// Extract all seven features from a synthesis output. Every feature comes
/// from the synthesized waveforms, not the commanded courses.
pub fn extract_features(out: &SynthesisOutput) -> Result<FeatureSet> {
    let peaks = dsp::detect_r_peaks(&out.ecg).context("R-peak detection")?;
    if peaks.len() < 3 {
        anyhow::bail!("too few beats detected ({})", peaks.len());
    }
    let hr = 60.0 * (peaks.len() - 1) as f64 / (peaks.last().unwrap() - peaks[0]);

    let detected_rri: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    let onsets = &peaks[..peaks.len() - 1];
    let sdnn_windows = dsp::sdnn(&detected_rri, onsets, 60.0).context("SDNN")?;
    let hrv = sdnn_windows.iter().sum::<f64>() / sdnn_windows.len() as f64;

    // shift beat boundaries back so the systolic upstroke sits inside each
    // segment rather than at its left edge
    let median_rri = {
        let mut v = detected_rri.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let bp_beats: Vec<f64> = peaks
        .iter()
        .map(|t| t - 0.15 * median_rri)
        .filter(|t| *t >= 0.0)
        .collect();
    let beat_feats = dsp::beat_pressure_features(&out.bp, &bp_beats).context("BP features")?;
    let n = beat_feats.len() as f64;
    let sbp = beat_feats.iter().map(|b| b.sbp).sum::<f64>() / n;
    let dbp = beat_feats.iter().map(|b| b.dbp).sum::<f64>() / n;
    let lvet = beat_feats.iter().map(|b| b.lvet).sum::<f64>() / n;

    let rr_est = resp::extract_rr(&out.resp).context("RR extraction")?;
    let rr = rr_est.iter().sum::<f64>() / rr_est.len() as f64;

    let scr = out.scr.samples.iter().sum::<f64>() / out.scr.samples.len() as f64;

    Ok(FeatureSet {
        hr,
        hrv,
        sbp,
        dbp,
        lvet,
        rr,
        scr,
    })
}

/// One evaluated table cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub feature: String,
    pub emotion: String,
    /// The raw cell string from the table; empty for unpopulated cells.
    pub expected: String,
    pub delta: f64,
    pub measured: Direction,
    /// None for unpopulated cells (excluded from the denominator).
    pub matched: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub cells: Vec<CellReport>,
    pub populated_cells: usize,
    pub mismatches: usize,
    pub error_rate: f64,
    /// Per-emotion features, neutral first, for inspection.
    pub features: Vec<(String, FeatureSet)>,
}

fn emotion_scenario(valence: f64, arousal: f64) -> Result<Scenario> {
    Ok(validate_scenario(Scenario::from_events(vec![ScenarioEvent {
        t_start: 0.0,
        duration: EVAL_DURATION_S,
        action: ActionSpec::Met { met: EVAL_MET },
        valence,
        arousal,
    }]))?)
}

/// Run the full direction evaluation. Per-run seeds derive from the base
/// seed plus the run index (neutral is run 0).
pub fn eval_directions(
    profile: &SubjectProfile,
    weights: &WeightSet,
    table: &DirectionTable,
    coords: &EmotionCoords,
    waves: &WaveBlocks,
    seed: u64,
) -> Result<EvalReport> {
    let neutral_coord = coords.get("neutral")?;
    let neutral_out = run_synthesis(
        profile,
        &emotion_scenario(neutral_coord.valence, neutral_coord.arousal)?,
        weights,
        seed,
        waves,
    )?;
    let neutral_features = extract_features(&trim_output(&neutral_out, EVAL_SETTLE_S))?;

    let mut features = vec![("neutral".to_string(), neutral_features)];
    for (i, emotion) in table.emotions.iter().enumerate() {
        let coord = coords.get(emotion)?;
        let out = run_synthesis(
            profile,
            &emotion_scenario(coord.valence, coord.arousal)?,
            weights,
            seed + 1 + i as u64,
            waves,
        )?;
        features.push((
            emotion.clone(),
            extract_features(&trim_output(&out, EVAL_SETTLE_S))?,
        ));
    }

    let mut cells = Vec::new();
    let mut mismatches = 0;
    let mut populated = 0;
    for feature in &table.features {
        // thresholds come from the spread of this feature's deltas across
        // all evaluated emotions
        let deltas: Vec<f64> = table
            .emotions
            .iter()
            .enumerate()
            .map(|(i, _)| {
                features[i + 1].1.get(feature).unwrap() - neutral_features.get(feature).unwrap()
            })
            .collect();
        let directions = dsp::direction_of_change(&deltas);

        for (i, emotion) in table.emotions.iter().enumerate() {
            let raw = table
                .cells
                .get(feature)
                .and_then(|row| row.get(emotion))
                .cloned()
                .unwrap_or_default();
            let expectation = table.expectation(feature, emotion);
            let matched = expectation.as_ref().map(|e| e.matches(directions[i]));
            if let Some(ok) = matched {
                populated += 1;
                if !ok {
                    mismatches += 1;
                }
            }
            cells.push(CellReport {
                feature: feature.clone(),
                emotion: emotion.clone(),
                expected: raw,
                delta: deltas[i],
                measured: directions[i],
                matched,
            });
        }
    }

    Ok(EvalReport {
        cells,
        populated_cells: populated,
        mismatches,
        error_rate: mismatches as f64 / populated.max(1) as f64,
        features,
    })
}
