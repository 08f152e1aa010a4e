//! The synthesis pipeline: one scenario in, four time-aligned physiological
//! channels out.
//!
//! Per 4 Hz control tick: sample the drive, update lactate and the
//! emotion-adjusted Karvonen demand, step the heart-rate kinetics. The
//! per-second heart-rate course then yields the RR-interval series (with
//! HRV offsets), which drives ECG and BP; the ventilation chain (with rate
//! offsets) drives respiration; and per-minute burst parameters drive the
//! skin conductance channel.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use vitasim::cardio::{self, CardioState, RriSeries};
use vitasim::dsp::WaveformChannel;
use vitasim::hemo;
use vitasim::neural::MlpWeights;
use vitasim::resp;
use vitasim::scenario::{sample_scenario, Scenario, SubjectProfile};
use vitasim::scr;

use crate::config::WaveBlocks;

/// Channel sample rates, fixed across the pipeline.
pub const ECG_RATE_HZ: f64 = 256.0;
pub const BP_RATE_HZ: f64 = 256.0;
pub const RESP_RATE_HZ: f64 = 32.0;
pub const SCR_RATE_HZ: f64 = 16.0;
pub const SKELETON_FPS: f64 = 120.0;

/// Optional trained emotion models; a missing entry disables that
/// modulation path.
#[derive(Debug, Clone, Default)]
pub struct WeightSet {
    pub hr: Option<MlpWeights>,
    pub rr: Option<MlpWeights>,
    pub scr: Option<MlpWeights>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRates {
    pub ecg_hz: f64,
    pub bp_hz: f64,
    pub resp_hz: f64,
    pub scr_hz: f64,
    pub skeleton_fps: f64,
}

impl Default for SampleRates {
    fn default() -> Self {
        Self {
            ecg_hz: ECG_RATE_HZ,
            bp_hz: BP_RATE_HZ,
            resp_hz: RESP_RATE_HZ,
            scr_hz: SCR_RATE_HZ,
            skeleton_fps: SKELETON_FPS,
        }
    }
}

/// Everything needed to reproduce a run, recorded verbatim into the output
/// metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub profile: SubjectProfile,
    pub scenario: Scenario,
    pub sample_rates: SampleRates,
    pub seed: u64,
    pub version: String,
    /// SHA-256 of each weight file used, keyed by task name.
    pub weight_digests: BTreeMap<String, String>,
}

/// All synthesized channels plus the intermediate course data useful for
/// evaluation.
#[derive(Debug, Clone)]
pub struct SynthesisOutput {
    pub ecg: WaveformChannel,
    pub bp: WaveformChannel,
    pub resp: WaveformChannel,
    pub scr: WaveformChannel,
    /// Commanded heart rate, one value per second.
    pub hr_series: Vec<f64>,
    /// Commanded respiratory rate, one value per second.
    pub rr_series: Vec<f64>,
    pub rri: RriSeries,
}

/// Run the full pipeline. Deterministic in (profile, scenario, weights,
/// seed): identical inputs give bit-identical outputs. The scenario must
/// already be validated and resolved; durations round up to whole seconds.
pub fn run_synthesis(
    profile: &SubjectProfile,
    scenario: &Scenario,
    weights: &WeightSet,
    seed: u64,
    waves: &WaveBlocks,
) -> Result<SynthesisOutput> {
    profile.validate()?;
    let duration_s = scenario.total_duration.ceil().max(1.0) as usize;
    let (hr_min, hr_max) = vitasim::scenario::hr_bounds(profile);

    // 4 Hz control loop over the timeline
    let dt = 1.0 / cardio::CONTROL_RATE_HZ;
    let mut state = CardioState {
        hr: profile.hr_rest,
        v: 0.0,
        lactate: 0.0,
        t: 0.0,
    };
    let mut hr_series = Vec::with_capacity(duration_s);
    let mut dhrv_series = Vec::with_capacity(duration_s);
    let mut valence_series = Vec::with_capacity(duration_s);
    let mut arousal_series = Vec::with_capacity(duration_s);
    let mut met_series = Vec::with_capacity(duration_s);

    for tick in 0..duration_s * cardio::CONTROL_RATE_HZ as usize {
        let t = tick as f64 * dt;
        let drive = sample_scenario(scenario, t.min(scenario.total_duration))
            .context("sampling scenario")?;
        let i_p = cardio::exercise_intensity(drive.velocity, profile.lambda)?;
        let i_l = cardio::lactate_intensity(i_p);
        let delta = match &weights.hr {
            Some(w) => cardio::emotion_hr_delta(w, drive.valence, drive.arousal)?,
            None => cardio::EmotionDelta {
                delta_hr: 0.0,
                delta_hrv: 0.0,
            },
        };
        let demand = (cardio::karvonen_demand(profile, i_p.min(1.0)) + delta.delta_hr)
            .clamp(hr_min + 0.5, hr_max);
        state.v = drive.velocity;
        state.lactate = i_l;
        if tick % cardio::CONTROL_RATE_HZ as usize == 0 {
            hr_series.push(state.hr);
            dhrv_series.push(delta.delta_hrv);
            valence_series.push(drive.valence);
            arousal_series.push(drive.arousal);
            met_series.push(drive.met);
        }
        state = cardio::step_hr_kinetics(&state, demand, dt, profile);
    }

    // beat-by-beat intervals; the run seed replaces the profile seed so the
    // CLI --seed flag alone reshuffles the variability
    let mut seeded_profile = profile.clone();
    seeded_profile.seed = seed;
    let rri = cardio::build_rri_series(&hr_series, &dhrv_series, &seeded_profile);

    // ventilation chain and respiration
    let resp_params = resp::RespParams::default();
    let mut rr_series = Vec::with_capacity(duration_s);
    for s in 0..duration_s {
        let base = resp::ventilation_for_hr(hr_series[s], profile, &resp_params).rr;
        let delta = match &weights.rr {
            Some(w) => resp::emotion_rr_delta(w, valence_series[s], arousal_series[s])?,
            None => 0.0,
        };
        rr_series.push((base + delta).clamp(resp::RR_MIN, resp::RR_MAX));
    }
    let f2_series: Vec<f64> = rr_series.iter().map(|rr| rr / 60.0).collect();
    let resp_channel = resp::synthesize_resp(&rr_series, RESP_RATE_HZ, seed ^ 0x5245_5350);

    // ECG and BP from the shared interval series
    let ecg = hemo::synthesize_ecg(&rri, &f2_series, ECG_RATE_HZ, &waves.ecg);
    let mut bp = hemo::synthesize_bp(&rri, BP_RATE_HZ, &waves.bp);
    let bp_len = (duration_s as f64 * BP_RATE_HZ) as usize;
    bp.samples.resize(bp_len, *bp.samples.last().unwrap_or(&0.0));

    // skin conductance: one burst window per minute
    let mut windows = Vec::new();
    let mut w_start = 0.0;
    while w_start < duration_s as f64 {
        let sec = (w_start as usize).min(duration_s - 1);
        let set = match &weights.scr {
            Some(w) => scr::theta_from_context(
                w,
                valence_series[sec],
                arousal_series[sec],
                met_series[sec],
                profile.age,
                profile.gender == vitasim::scenario::Gender::Female,
                w_start,
            )?,
            None => rest_bursts(),
        };
        windows.push((w_start, set));
        w_start += scr::WINDOW_S;
    }
    let scr_channel = scr::synthesize_scr_windows(
        &windows,
        duration_s as f64,
        SCR_RATE_HZ,
        scr::BASELINE_US,
    );

    Ok(SynthesisOutput {
        ecg,
        bp,
        resp: resp_channel,
        scr: scr_channel,
        hr_series,
        rr_series,
        rri,
    })
}

/// Burst pattern used when no trained SCR model is supplied: a modest,
/// evenly spaced sudomotor tone.
fn rest_bursts() -> scr::BurstSet {
    let bursts = (0..scr::BURSTS_PER_WINDOW)
        .map(|k| scr::Burst {
            tau: 3.0 + 6.0 * k as f64,
            amplitude: 0.5,
        })
        .collect();
    scr::BurstSet::new(bursts).expect("static rest bursts are valid")
}
