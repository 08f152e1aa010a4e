//! Respiratory chain: oxygen-uptake estimation from heart rate, alveolar
//! ventilation, the work-rate-optimal breathing frequency, emotion-driven
//! rate offsets, respiration waveform synthesis and rate extraction.
//!
//! Unit conventions: VO2/VCO2 are carried in L/min and converted to mL/min
//! inside [`alveolar_ventilation`]; the work-rate optimum operates on L/s
//! with dead space in liters and yields breaths/s, reported as breaths/min.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsp::{self, WaveformChannel};
use crate::neural::{self, MlpWeights};
use crate::scenario::{Gender, SubjectProfile};

/// Arterial CO2 partial pressure, mmHg; effectively constant during mild to
/// moderate exercise.
pub const P_ACO2_MMHG: f64 = 40.0;
/// Resting oxygen-uptake floor, L/min.
pub const VO2_FLOOR_LMIN: f64 = 0.25;
/// Physiological respiratory-rate clamp, breaths/min.
pub const RR_MIN: f64 = 4.0;
pub const RR_MAX: f64 = 60.0;
/// Emotion offset span: MLP outputs map to [-span, +span] breaths/min.
pub const DELTA_RR_SPAN: f64 = 8.0;
/// Extraction band, Hz.
pub const RR_BAND_LO_HZ: f64 = 0.1;
pub const RR_BAND_HI_HZ: f64 = 0.9;

/// Mechanical lung constants for the work-rate criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct RespParams {
    /// Lung elastance K'.
    pub elastance: f64,
    /// Air viscosity factor K''.
    pub viscosity: f64,
    /// Arterial CO2 partial pressure, mmHg.
    pub p_aco2: f64,
}

impl Default for RespParams {
    fn default() -> Self {
        Self {
            elastance: 5.1,
            viscosity: 4.52,
            p_aco2: P_ACO2_MMHG,
        }
    }
}

/// Snapshot of the ventilation chain at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VentilationState {
    /// Oxygen uptake, L/min.
    pub vo2: f64,
    /// CO2 output, L/min (taken equal to VO2).
    pub vco2: f64,
    /// Alveolar ventilation, L/min.
    pub va: f64,
    /// Dead-space volume, liters.
    pub vd: f64,
    /// Respiratory rate, breaths/min.
    pub rr: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum RespError {
    #[error("signal too short: need at least {need} s, got {got:.2} s")]
    TooShort { need: f64, got: f64 },
    #[error("weights are untrained or have the wrong shape")]
    Untrained,
    #[error(transparent)]
    Dsp(#[from] dsp::DspError),
}

/// Age/gender maximum oxygen uptake, L/min, shifted by the profile offset
/// and floored at 0.5.
pub fn vo2max(age: u32, gender: Gender, offset: f64) -> f64 {
    let base = match gender {
        Gender::Male => 4.2 - 0.032 * age as f64,
        Gender::Female => 2.6 - 0.014 * age as f64,
    };
    (base + offset).max(0.5)
}

/// Oxygen uptake predicted from the heart-rate fraction of maximum,
/// floored at the resting value.
pub fn vo2_from_hr(hr: f64, hr_max: f64, vo2max: f64) -> f64 {
    (vo2max * (hr / hr_max - 0.3718) / 0.6463).max(VO2_FLOOR_LMIN)
}

/// Alveolar ventilation in L/min from CO2 output in L/min.
pub fn alveolar_ventilation(vco2_lmin: f64, p_aco2_mmhg: f64) -> f64 {
    0.868 * (vco2_lmin * 1000.0) / p_aco2_mmhg
}

/// Dead-space volume in liters for an alveolar ventilation given in L/s.
fn dead_space_l(va_ls: f64) -> f64 {
    0.1698 * va_ls + 0.1587
}

/// Breathing frequency minimizing average respiratory work rate, clamped
/// to [4, 60] breaths/min.
///
/// The radical collapses to `K' V_D` at zero ventilation, so the raw
/// optimum is 0 there and the clamp floor applies.
pub fn optimal_rr(va_lmin: f64, params: &RespParams) -> f64 {
    let va = (va_lmin / 60.0).max(0.0);
    let vd = dead_space_l(va);
    let kp = params.elastance;
    let kpp = params.viscosity;
    let root = (kp * kp * vd * vd + 32.0 * kp * kpp * vd * va).sqrt();
    let f_bps = (-kp * vd + root) / (16.0 * kpp * vd);
    (f_bps * 60.0).clamp(RR_MIN, RR_MAX)
}

/// Full chain from heart rate to the ventilation snapshot.
pub fn ventilation_for_hr(hr: f64, profile: &SubjectProfile, params: &RespParams) -> VentilationState {
    let (_, hr_max) = crate::scenario::hr_bounds(profile);
    let vmax = vo2max(profile.age, profile.gender, profile.vo2max_offset);
    let vo2 = vo2_from_hr(hr, hr_max, vmax);
    let vco2 = vo2;
    let va = alveolar_ventilation(vco2, params.p_aco2);
    let vd = dead_space_l(va / 60.0);
    let rr = optimal_rr(va, params);
    VentilationState { vo2, vco2, va, vd, rr }
}

/// Emotion offset to the respiratory rate, breaths/min.
pub fn emotion_rr_delta(weights: &MlpWeights, valence: f64, arousal: f64) -> Result<f64, RespError> {
    let c = &weights.config;
    if c.input_dim != 2 || c.output_dim != 1 {
        return Err(RespError::Untrained);
    }
    let input = [(valence - 1.0) / 8.0, (arousal - 1.0) / 8.0];
    let out = neural::forward(weights, &input).map_err(|_| RespError::Untrained)?;
    Ok(decode_delta_rr(out[0]))
}

/// Map a sigmoid output in (0,1) to a rate offset in breaths/min.
pub fn decode_delta_rr(y: f64) -> f64 {
    (y - 0.5) * 2.0 * DELTA_RR_SPAN
}

/// Inverse of [`decode_delta_rr`], for training-target construction.
pub fn encode_delta_rr(delta: f64) -> f64 {
    0.5 + 0.5 * delta / DELTA_RR_SPAN
}

/// One row of the emotion-to-rate training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrTrainingSample {
    pub valence: f64,
    pub arousal: f64,
    pub delta_rr: f64,
}

/// Train the 2-6-1 emotion model. Deterministic per seed.
pub fn train_emotion_rr(samples: &[RrTrainingSample], seed: u64) -> Result<MlpWeights, RespError> {
    let config = neural::MlpConfig {
        input_dim: 2,
        hidden_dim: 6,
        output_dim: 1,
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
                vec![encode_delta_rr(s.delta_rr)],
            )
        })
        .collect();
    neural::train_adam(&config, &train, &dataset).map_err(|_| RespError::Untrained)
}

/// Continuous-phase respiration waveform for a per-second rate series.
///
/// The oscillator integrates `2*pi*rr(t)/60`, so rate steps never produce
/// phase discontinuities. A seeded sub-band drift (two slow sinusoids well
/// below the 0.1 Hz extraction band) adds mild realism without disturbing
/// rate extraction.
pub fn synthesize_resp(rr_series: &[f64], sample_rate: f64, seed: u64) -> WaveformChannel {
    let n = (rr_series.len() as f64 * sample_rate).round() as usize;
    let mut samples = Vec::with_capacity(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drift_f1 = 0.015 + rng.gen_range(0.0..0.01);
    let drift_f2 = 0.04 + rng.gen_range(0.0..0.01);
    let drift_p1 = rng.gen_range(0.0..std::f64::consts::TAU);
    let drift_p2 = rng.gen_range(0.0..std::f64::consts::TAU);

    let mut phase: f64 = 0.0;
    let dt = 1.0 / sample_rate;
    for i in 0..n {
        let t = i as f64 * dt;
        let rr = sample_series(rr_series, t);
        samples.push(
            phase.sin()
                + 0.15 * (std::f64::consts::TAU * drift_f1 * t + drift_p1).sin()
                + 0.05 * (std::f64::consts::TAU * drift_f2 * t + drift_p2).sin(),
        );
        phase += std::f64::consts::TAU * rr / 60.0 * dt;
    }
    WaveformChannel::new("resp", sample_rate, "au", samples)
}

/// Linear interpolation into a per-second series, holding the last value.
pub(crate) fn sample_series(series: &[f64], t: f64) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let pos = t.max(0.0);
    let i = pos.floor() as usize;
    if i + 1 >= series.len() {
        return *series.last().unwrap();
    }
    let frac = pos - i as f64;
    series[i] * (1.0 - frac) + series[i + 1] * frac
}

/// Respiratory rate series (breaths/min) from a respiration signal.
///
/// The signal is detrended and ideal-bandpass filtered to [0.1, 0.9] Hz
/// once, then scanned by sliding windows (1 s hop). Resolving the 0.1 Hz
/// band edge needs 2/0.1 = 20 s of context, so the analysis window is
/// 20 s (or the whole signal when shorter); each window reports its
/// refined dominant frequency.
pub fn extract_rr(signal: &WaveformChannel) -> Result<Vec<f64>, RespError> {
    let fs = signal.sample_rate;
    let dur = signal.duration_s();
    if dur < 6.0 {
        return Err(RespError::TooShort { need: 6.0, got: dur });
    }
    let filtered = dsp::detrend_bandpass(&signal.samples, fs, RR_BAND_LO_HZ, RR_BAND_HI_HZ)?;
    let window = ((2.0 / RR_BAND_LO_HZ) * fs).round() as usize;
    let window = window.min(filtered.len());
    let hop = fs.round().max(1.0) as usize;
    let mut out = Vec::new();
    let mut start = 0;
    while start + window <= filtered.len() {
        let f = dsp::dominant_frequency_refined(
            &filtered[start..start + window],
            fs,
            RR_BAND_LO_HZ,
            RR_BAND_HI_HZ,
        )?;
        out.push(f * 60.0);
        start += hop;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Gender;

    fn profile() -> SubjectProfile {
        SubjectProfile {
            age: 30,
            gender: Gender::Male,
            lambda: 0.8,
            hr_rest: 70.0,
            hr_min_override: None,
            vo2max_offset: 0.0,
            seed: 9,
        }
    }

    #[test]
    fn vo2max_examples() {
        assert!((vo2max(25, Gender::Male, 0.0) - 3.4).abs() < 1e-12);
        assert!((vo2max(50, Gender::Female, 0.0) - 1.9).abs() < 1e-12);
        assert!((vo2max(25, Gender::Male, 0.4) - 3.8).abs() < 1e-12);
    }

    #[test]
    fn vo2_from_hr_examples() {
        let vmax = 3.0;
        let at_max = vo2_from_hr(180.0, 180.0, vmax);
        assert!((at_max - vmax * (1.0 - 0.3718) / 0.6463).abs() < 1e-12);
        // zero numerator clamps to the floor
        assert_eq!(vo2_from_hr(0.3718 * 180.0, 180.0, vmax), VO2_FLOOR_LMIN);
        assert_eq!(vo2_from_hr(40.0, 180.0, vmax), VO2_FLOOR_LMIN);
    }

    #[test]
    fn alveolar_ventilation_examples() {
        assert!((alveolar_ventilation(0.2, 40.0) - 4.34).abs() < 1e-12);
        assert!((alveolar_ventilation(0.4, 40.0) - 8.68).abs() < 1e-12);
        assert!(
            (alveolar_ventilation(0.2, 80.0) - 2.17).abs() < 1e-12,
            "doubling pressure halves ventilation"
        );
    }

    #[test]
    fn optimal_rr_zero_ventilation_clamps_to_floor() {
        assert_eq!(optimal_rr(0.0, &RespParams::default()), RR_MIN);
    }

    #[test]
    fn optimal_rr_golden_value() {
        // frozen from a 40-digit evaluation of the closed form at 5 L/min
        let f = optimal_rr(5.0, &RespParams::default());
        assert!((f - 11.976611512599239).abs() < 1e-9, "{f}");
        let f1 = optimal_rr(1.0, &RespParams::default());
        assert!((f1 - 4.152836122266351).abs() < 1e-9, "{f1}");
        let f10 = optimal_rr(10.0, &RespParams::default());
        assert!((f10 - 17.458369620231288).abs() < 1e-9, "{f10}");
    }

    #[test]
    fn optimal_rr_monotone_in_ventilation() {
        let p = RespParams::default();
        let mut prev = 0.0;
        for va10 in 10..=300 {
            let f = optimal_rr(va10 as f64 / 10.0, &p);
            assert!(f >= prev, "not monotone at va {}", va10 as f64 / 10.0);
            prev = f;
        }
        assert!(prev <= RR_MAX);
    }

    #[test]
    fn rr_monotone_in_met_through_full_chain() {
        // MET -> velocity -> intensity -> Karvonen demand -> VO2 -> VA -> f
        let p = profile();
        let params = RespParams::default();
        let mut prev = 0.0;
        for met in 1..=10 {
            let v = crate::scenario::velocity_from_met(met as f64);
            let ip = crate::cardio::exercise_intensity(v, p.lambda).unwrap();
            let demand = crate::cardio::karvonen_demand(&p, ip.min(1.0));
            let rr = ventilation_for_hr(demand, &p, &params).rr;
            assert!(rr >= prev - 1e-12, "MET {met}: {rr} < {prev}");
            prev = rr;
        }
    }

    #[test]
    fn synthesized_tone_has_commanded_frequency() {
        let rr = vec![12.0; 60];
        let ch = synthesize_resp(&rr, 32.0, 4);
        assert_eq!(ch.samples.len(), 60 * 32);
        let filt = dsp::detrend_bandpass(&ch.samples, 32.0, 0.1, 0.9).unwrap();
        let f = dsp::dominant_frequency_refined(&filt, 32.0, 0.1, 0.9).unwrap();
        assert!((f - 0.2).abs() < 0.005, "{f}");
    }

    #[test]
    fn zero_duration_gives_empty_channel() {
        let ch = synthesize_resp(&[], 32.0, 0);
        assert!(ch.samples.is_empty());
    }

    #[test]
    fn rate_step_keeps_phase_continuous() {
        let mut rr = vec![12.0; 30];
        rr.extend(vec![24.0; 30]);
        let ch = synthesize_resp(&rr, 32.0, 7);
        // max slope of sin phase at 24 br/min = 0.4 Hz: 2*pi*0.4/32 per
        // sample, plus drift; a jump discontinuity would far exceed it
        let bound = std::f64::consts::TAU * 0.45 / 32.0 + 0.02;
        for w in ch.samples.windows(2) {
            assert!((w[1] - w[0]).abs() < bound, "jump {}", (w[1] - w[0]).abs());
        }
    }

    #[test]
    fn extract_rr_pure_tone() {
        let fs = 32.0;
        let n = (60.0 * fs) as usize;
        let x: Vec<f64> = (0..n)
            .map(|i| (std::f64::consts::TAU * 0.25 * i as f64 / fs).sin())
            .collect();
        let ch = WaveformChannel::new("resp", fs, "au", x);
        let est = extract_rr(&ch).unwrap();
        let median = median(&est);
        assert!((median - 15.0).abs() < 0.1, "{median}");
    }

    #[test]
    fn extract_rr_detrends_linear_drift() {
        let fs = 32.0;
        let n = (60.0 * fs) as usize;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (std::f64::consts::TAU * 0.25 * t).sin() + 0.05 * t
            })
            .collect();
        let ch = WaveformChannel::new("resp", fs, "au", x);
        let est = extract_rr(&ch).unwrap();
        assert!((median(&est) - 15.0).abs() < 0.1);
    }

    #[test]
    fn extract_rr_rejects_out_of_band_tone() {
        let fs = 32.0;
        let n = (60.0 * fs) as usize;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (std::f64::consts::TAU * 0.25 * t).sin()
                    + 3.0 * (std::f64::consts::TAU * 2.0 * t).sin()
            })
            .collect();
        let ch = WaveformChannel::new("resp", fs, "au", x);
        let est = extract_rr(&ch).unwrap();
        assert!((median(&est) - 15.0).abs() < 0.1);
    }

    #[test]
    fn extract_rr_too_short() {
        let ch = WaveformChannel::new("resp", 32.0, "au", vec![0.0; 32]);
        assert!(matches!(extract_rr(&ch), Err(RespError::TooShort { .. })));
    }

    #[test]
    fn round_trip_recovers_commanded_rates() {
        for &rr in &[8.0, 12.0, 20.0, 30.0] {
            let series = vec![rr; 120];
            let ch = synthesize_resp(&series, 32.0, 11);
            let est = extract_rr(&ch).unwrap();
            let med = median(&est);
            assert!((med - rr).abs() <= 0.5, "rr {rr}: extracted {med}");
        }
    }

    fn median(xs: &[f64]) -> f64 {
        let mut v = xs.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    }

    #[test]
    fn emotion_delta_learns_signs() {
        let mut samples = Vec::new();
        // neutral pinned to zero, one up-emotion, one down-emotion
        for i in 0..30 {
            let jitter = (i as f64 / 30.0 - 0.5) * 0.4;
            samples.push(RrTrainingSample { valence: 5.0 + jitter, arousal: 5.0 - jitter, delta_rr: 0.0 });
            samples.push(RrTrainingSample { valence: 2.0 + jitter, arousal: 7.5 - jitter, delta_rr: 4.0 });
            samples.push(RrTrainingSample { valence: 7.5 + jitter, arousal: 3.0 - jitter, delta_rr: -3.0 });
        }
        let w = train_emotion_rr(&samples, 17).unwrap();
        let neutral = emotion_rr_delta(&w, 5.0, 5.0).unwrap();
        assert!(neutral.abs() <= 0.5, "neutral {neutral}");
        assert!(emotion_rr_delta(&w, 2.0, 7.5).unwrap() > 1.0);
        assert!(emotion_rr_delta(&w, 7.5, 3.0).unwrap() < -1.0);
    }

    #[test]
    fn emotion_delta_rejects_wrong_shape() {
        let w = neural::init_weights(&neural::MlpConfig {
            input_dim: 3,
            hidden_dim: 6,
            output_dim: 1,
            output_activation: neural::OutputActivation::Sigmoid,
            seed: 0,
        });
        assert_eq!(emotion_rr_delta(&w, 5.0, 5.0), Err(RespError::Untrained));
    }
}
