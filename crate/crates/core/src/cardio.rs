//! Heart-rate kinetics driven by movement and emotion, and the RR-interval
//! series feeding the ECG and blood-pressure models.
//!
//! The kinetics are a saturating first-order pull toward a demand rate,
//! with boundary factors freezing the dynamics at the subject's minimum and
//! maximum heart rate and a lactate term accelerating drift at high
//! exercise intensity.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::dsp;
use crate::neural::{self, MlpWeights};
use crate::resp;
use crate::scenario::{hr_bounds, SubjectProfile};

/// Base kinetics gain, 1/s. Sized so a constant demand anywhere in the
/// working range settles within 1 bpm inside 300 s.
pub const KINETICS_GAIN: f64 = 0.08;
/// Lactate acceleration coefficient in `k = k0 * (1 + c * I_l)`.
pub const LACTATE_COEFF: f64 = 1.0;
/// Control-loop rate for kinetics and emotion updates, Hz.
pub const CONTROL_RATE_HZ: f64 = 4.0;
/// Resting RR-interval variability (SDNN), seconds.
pub const BASELINE_SDNN_S: f64 = 0.03;
/// Emotion-model output spans: sigmoid outputs map to +-span.
pub const DELTA_HR_SPAN: f64 = 30.0;
pub const DELTA_HRV_SPAN: f64 = 0.06;

/// Instantaneous cardiovascular state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardioState {
    /// Current heart rate, beats/min.
    pub hr: f64,
    /// Movement speed, m/s.
    pub v: f64,
    /// Blood-lactate intensity, dimensionless.
    pub lactate: f64,
    /// Simulation time, seconds.
    pub t: f64,
}

/// Beat onsets and the RR interval starting at each onset.
#[derive(Debug, Clone, PartialEq)]
pub struct RriSeries {
    /// Seconds per beat.
    pub rri: Vec<f64>,
    /// Beat start times, strictly increasing; `onsets[k] + rri[k] =
    /// onsets[k+1]`.
    pub onsets: Vec<f64>,
}

impl RriSeries {
    pub fn len(&self) -> usize {
        self.rri.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rri.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        match (self.onsets.last(), self.rri.last()) {
            (Some(t), Some(r)) => t + r,
            _ => 0.0,
        }
    }
}

/// Emotion-driven offsets to heart rate and its variability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmotionDelta {
    /// Beats/min.
    pub delta_hr: f64,
    /// SDNN change, seconds.
    pub delta_hrv: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum CardioError {
    #[error("lambda must be positive, got {0}")]
    LambdaZero(f64),
    #[error("weights are untrained or have the wrong shape")]
    Untrained,
}

/// Exercise intensity `I_p = v / v'_max`, where `v'_max = 40 sqrt(lambda)`
/// is the subject's maximum achievable velocity. Clamped to [0, 1.5].
pub fn exercise_intensity(v: f64, lambda: f64) -> Result<f64, CardioError> {
    if lambda <= 0.0 {
        return Err(CardioError::LambdaZero(lambda));
    }
    let v_max = 40.0 * lambda.sqrt();
    Ok((v.max(0.0) / v_max).clamp(0.0, 1.5))
}

/// Blood-lactate intensity `I_l = I_p - arctan(I_p)`, monotone
/// nondecreasing and zero at rest.
pub fn lactate_intensity(i_p: f64) -> f64 {
    let x = i_p.max(0.0);
    x - x.atan()
}

/// Heart-rate demand for an exercise intensity in [0, 1]:
/// resting rate plus the intensity fraction of heart-rate reserve.
pub fn karvonen_demand(profile: &SubjectProfile, intensity: f64) -> f64 {
    let (_, hr_max) = hr_bounds(profile);
    profile.hr_rest + intensity * (hr_max - profile.hr_rest)
}

pub fn decode_delta_hr(y: f64) -> f64 {
    (y - 0.5) * 2.0 * DELTA_HR_SPAN
}

pub fn encode_delta_hr(delta: f64) -> f64 {
    0.5 + 0.5 * delta / DELTA_HR_SPAN
}

pub fn decode_delta_hrv(y: f64) -> f64 {
    (y - 0.5) * 2.0 * DELTA_HRV_SPAN
}

pub fn encode_delta_hrv(delta: f64) -> f64 {
    0.5 + 0.5 * delta / DELTA_HRV_SPAN
}

/// Emotion offsets from the trained valence/arousal model.
pub fn emotion_hr_delta(
    weights: &MlpWeights,
    valence: f64,
    arousal: f64,
) -> Result<EmotionDelta, CardioError> {
    let c = &weights.config;
    if c.input_dim != 2 || c.output_dim != 2 {
        return Err(CardioError::Untrained);
    }
    let input = [(valence - 1.0) / 8.0, (arousal - 1.0) / 8.0];
    let out = neural::forward(weights, &input).map_err(|_| CardioError::Untrained)?;
    Ok(EmotionDelta {
        delta_hr: decode_delta_hr(out[0]),
        delta_hrv: decode_delta_hrv(out[1]),
    })
}

/// One row of the emotion-to-heart training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrTrainingSample {
    pub valence: f64,
    pub arousal: f64,
    pub delta_hr: f64,
    pub delta_hrv: f64,
}

/// Train the 2-10-2 emotion model. Deterministic per seed.
pub fn train_emotion_hr(samples: &[HrTrainingSample], seed: u64) -> Result<MlpWeights, CardioError> {
    let config = neural::MlpConfig {
        input_dim: 2,
        hidden_dim: 10,
        output_dim: 2,
        output_activation: neural::OutputActivation::Sigmoid,
        seed,
    };
    let train = neural::TrainConfig {
        learning_rate: 0.01,
        minibatch_size: 64,
        epochs: 6000,
        l2_penalty: 1e-5,
        dropout_rate: 0.0,
        seed,
        ..neural::TrainConfig::default()
    };
    let dataset: Vec<(Vec<f64>, Vec<f64>)> = samples
        .iter()
        .map(|s| {
            (
                vec![(s.valence - 1.0) / 8.0, (s.arousal - 1.0) / 8.0],
                vec![encode_delta_hr(s.delta_hr), encode_delta_hrv(s.delta_hrv)],
            )
        })
        .collect();
    neural::train_adam(&config, &train, &dataset).map_err(|_| CardioError::Untrained)
}

fn hr_derivative(hr: f64, demand: f64, k: f64, hr_min: f64, hr_rest: f64, hr_max: f64) -> f64 {
    let g_min = ((hr - hr_min) / (hr_rest - hr_min)).clamp(0.0, 1.0);
    let g_max = ((hr_max - hr) / (hr_max - hr_rest)).clamp(0.0, 1.0);
    k * (demand - hr) * g_min * g_max
}

/// Advance the heart-rate kinetics by one RK4 step of length `dt` seconds.
///
/// `dHR/dt = k (demand - HR) g_min(HR) g_max(HR)` with
/// `g_min = (HR - HR_min)/(HR_rest - HR_min)` and
/// `g_max = (HR_max - HR)/(HR_max - HR_rest)`, both clamped to [0, 1], and
/// `k = k0 (1 + c I_l)` so lactate speeds the response. The result is
/// clamped to the profile's heart-rate bounds.
pub fn step_hr_kinetics(
    state: &CardioState,
    demand: f64,
    dt: f64,
    profile: &SubjectProfile,
) -> CardioState {
    let (hr_min, hr_max) = hr_bounds(profile);
    let hr_rest = profile.hr_rest;
    let k = KINETICS_GAIN * (1.0 + LACTATE_COEFF * state.lactate.max(0.0));
    let f = |hr: f64| hr_derivative(hr, demand, k, hr_min, hr_rest, hr_max);
    let k1 = f(state.hr);
    let k2 = f(state.hr + 0.5 * dt * k1);
    let k3 = f(state.hr + 0.5 * dt * k2);
    let k4 = f(state.hr + dt * k3);
    let hr = (state.hr + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(hr_min, hr_max);
    CardioState {
        hr,
        v: state.v,
        lactate: state.lactate,
        t: state.t + dt,
    }
}

/// Beat-by-beat RR intervals for a per-second heart-rate course, with
/// band-limited variability whose windowed SDNN tracks
/// `BASELINE_SDNN_S + delta_hrv(t)` (clamped at zero). Deterministic per
/// profile seed.
pub fn build_rri_series(
    hr_series: &[f64],
    delta_hrv_series: &[f64],
    profile: &SubjectProfile,
) -> RriSeries {
    build_rri_series_opts(hr_series, delta_hrv_series, profile, BASELINE_SDNN_S)
}

/// [`build_rri_series`] with an explicit baseline SDNN (zero disables
/// variability entirely).
pub fn build_rri_series_opts(
    hr_series: &[f64],
    delta_hrv_series: &[f64],
    profile: &SubjectProfile,
    baseline_sdnn: f64,
) -> RriSeries {
    let duration = hr_series.len() as f64;
    if duration <= 0.0 {
        return RriSeries {
            rri: Vec::new(),
            onsets: Vec::new(),
        };
    }
    let (hr_min, hr_max) = hr_bounds(profile);
    let (rri_lo, rri_hi) = (60.0 / hr_max, 60.0 / hr_min);

    // HF spectral peak at the respiratory frequency the mean rate implies
    let mean_hr = hr_series.iter().sum::<f64>() / hr_series.len() as f64;
    let resp_hz = (resp::ventilation_for_hr(mean_hr, profile, &resp::RespParams::default()).rr
        / 60.0)
        .clamp(0.12, 0.45);
    let noise = tachogram_noise(duration, resp_hz, profile.seed);

    let mut rri = Vec::new();
    let mut onsets = Vec::new();
    let mut t = 0.0;
    while t < duration {
        let hr = resp::sample_series(hr_series, t).clamp(hr_min, hr_max);
        let sigma = (baseline_sdnn + resp::sample_series(delta_hrv_series, t)).max(0.0);
        let z = sample_noise(&noise, t);
        let interval = (60.0 / hr + sigma * z).clamp(rri_lo, rri_hi);
        onsets.push(t);
        rri.push(interval);
        t += interval;
    }
    RriSeries { rri, onsets }
}

const NOISE_RATE_HZ: f64 = 4.0;

fn sample_noise(noise: &[f64], t: f64) -> f64 {
    if noise.is_empty() {
        return 0.0;
    }
    let idx = ((t * NOISE_RATE_HZ).round() as usize).min(noise.len() - 1);
    noise[idx]
}

/// Unit-variance band-limited noise from a bimodal RR power spectrum:
/// Gaussian lobes at 0.1 Hz (half weight) and the respiratory frequency,
/// both 0.01 Hz wide, realized with seeded random phases and z-scored over
/// the run.
fn tachogram_noise(duration_s: f64, resp_hz: f64, seed: u64) -> Vec<f64> {
    let n = ((duration_s * NOISE_RATE_HZ).ceil() as usize).max(8);
    let padded = n.next_power_of_two();
    let df = NOISE_RATE_HZ / padded as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7261_7465);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); padded];
    let lobe = |f: f64, center: f64| (-((f - center) * (f - center)) / (2.0 * 0.01 * 0.01)).exp();
    for k in 1..padded / 2 {
        let f = k as f64 * df;
        let power = 0.5 * lobe(f, 0.1) + lobe(f, resp_hz);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let c = Complex64::from_polar(power.sqrt(), phase);
        spectrum[k] = c;
        spectrum[padded - k] = c.conj();
    }
    let mut noise = dsp::idft_real(&spectrum);
    noise.truncate(n);
    // z-score so the variability scale is exactly the requested sigma
    let mean = noise.iter().sum::<f64>() / noise.len() as f64;
    let var = noise.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / noise.len() as f64;
    if var > 0.0 {
        let inv = 1.0 / var.sqrt();
        for v in &mut noise {
            *v = (*v - mean) * inv;
        }
    }
    noise
}
