//! Skin-conductance synthesis: a fixed Gaussian-smoothed biexponential
//! response function convolved with a sudomotor drive of Gaussian bursts.
//!
//! Burst parameters for each 60-second window come either from explicit
//! [`BurstSet`]s or from a context MLP (valence, arousal, MET, age, gender,
//! time), trained end to end against target SCR windows by backpropagating
//! the waveform error through the convolution and the burst mixture.

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::dsp::{self, WaveformChannel};
use crate::neural::{self, MlpWeights};

/// Burst count per 60-second window produced by the context model.
pub const BURSTS_PER_WINDOW: usize = 10;
/// Hard physiological cap on sudomotor bursts per minute.
pub const MAX_BURSTS_PER_MIN: usize = 30;
/// Burst amplitude ceiling, microsiemens.
pub const A_MAX_US: f64 = 2.0;
/// Tonic skin-conductance baseline, microsiemens.
pub const BASELINE_US: f64 = 2.0;
/// SCR channel sample rate, Hz.
pub const SCR_SAMPLE_RATE_HZ: f64 = 16.0;
/// Window length for burst generation and training, seconds.
pub const WINDOW_S: f64 = 60.0;

/// Response-function shape constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseFunctionParams {
    /// Peak latency of the Gaussian kernel, seconds.
    pub t0: f64,
    /// Rise-time width of the Gaussian kernel, seconds.
    pub sigma2: f64,
    /// Fast decay rate, 1/s.
    pub lambda1: f64,
    /// Slow decay rate, 1/s.
    pub lambda2: f64,
}

impl Default for ResponseFunctionParams {
    fn default() -> Self {
        Self {
            t0: 3.0745,
            sigma2: 0.7013,
            lambda1: 0.3176,
            lambda2: 0.0708,
        }
    }
}

/// One sudomotor burst: firing-peak time within its window and amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Burst {
    /// Seconds from window start, in [0, 60).
    pub tau: f64,
    /// Microsiemens, nonnegative.
    pub amplitude: f64,
}

/// Bursts for one 60-second window.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstSet {
    /// Sorted by tau.
    pub bursts: Vec<Burst>,
    /// Burst width, seconds.
    pub sigma1: f64,
}

impl BurstSet {
    pub fn new(mut bursts: Vec<Burst>) -> Result<Self, ScrError> {
        bursts.sort_by(|a, b| a.tau.partial_cmp(&b.tau).unwrap());
        let set = BurstSet {
            bursts,
            sigma1: 0.3,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), ScrError> {
        if self.bursts.len() > MAX_BURSTS_PER_MIN {
            return Err(ScrError::TooManyBursts(self.bursts.len()));
        }
        for b in &self.bursts {
            if !(0.0..WINDOW_S).contains(&b.tau) || b.amplitude < 0.0 {
                return Err(ScrError::BadBurst {
                    tau: b.tau,
                    amplitude: b.amplitude,
                });
            }
        }
        if self.bursts.windows(2).any(|w| w[0].tau > w[1].tau) {
            return Err(ScrError::Unsorted);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScrError {
    #[error("{0} bursts exceed the 30 bursts/min cap")]
    TooManyBursts(usize),
    #[error("burst (tau {tau}, amplitude {amplitude}) out of range")]
    BadBurst { tau: f64, amplitude: f64 },
    #[error("bursts are not sorted by tau")]
    Unsorted,
    #[error("weights are untrained or have the wrong shape")]
    Untrained,
    #[error("empty training set")]
    EmptyDataset,
}

// ── Response function and drive ────────────────────────────────────────────

/// Sampled response function `h = N (x) E`: the discrete convolution of a
/// Gaussian centered at `t0` with the causal biexponential
/// `exp(-l1 t) + exp(-l2 t)`, scaled by the sample period so values track
/// the continuous convolution. Cover at least ~30 s for the slow tail.
pub fn response_function(duration_s: f64, sample_rate: f64, params: &ResponseFunctionParams) -> Vec<f64> {
    let n = (duration_s * sample_rate).round() as usize;
    let dt = 1.0 / sample_rate;
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * params.sigma2);
    let gauss: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt - params.t0;
            norm * (-t * t / (2.0 * params.sigma2 * params.sigma2)).exp()
        })
        .collect();
    let biexp: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            (-params.lambda1 * t).exp() + (-params.lambda2 * t).exp()
        })
        .collect();
    let mut h = fft_convolve(&gauss, &biexp);
    h.truncate(n);
    for v in &mut h {
        *v *= dt;
    }
    h
}

/// Sudomotor drive: the burst Gaussian mixture sampled on the output grid.
pub fn sudomotor_drive(bursts: &BurstSet, duration_s: f64, sample_rate: f64) -> Vec<f64> {
    let n = (duration_s * sample_rate).round() as usize;
    let dt = 1.0 / sample_rate;
    let two_s2 = 2.0 * bursts.sigma1 * bursts.sigma1;
    (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            bursts
                .bursts
                .iter()
                .map(|b| b.amplitude * (-((t - b.tau) * (t - b.tau)) / two_s2).exp())
                .sum()
        })
        .collect()
}

/// FFT-based linear convolution (full length `a.len() + b.len() - 1`).
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let padded = out_len.next_power_of_two();
    let mut fa: Vec<f64> = a.to_vec();
    fa.resize(padded, 0.0);
    let mut fb: Vec<f64> = b.to_vec();
    fb.resize(padded, 0.0);
    let sa = dsp::dft(&fa);
    let sb = dsp::dft(&fb);
    let product: Vec<Complex64> = sa.iter().zip(&sb).map(|(x, y)| x * y).collect();
    let mut out = dsp::idft_real(&product);
    out.truncate(out_len);
    out
}

/// Direct O(N^2) convolution; the independent check for the FFT path.
pub fn direct_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Skin-conductance channel for one window of bursts:
/// `baseline + h (x) u`, truncated to the duration; never dips below the
/// baseline.
pub fn synthesize_scr(
    bursts: &BurstSet,
    duration_s: f64,
    sample_rate: f64,
    baseline_us: f64,
) -> Result<WaveformChannel, ScrError> {
    bursts.validate()?;
    Ok(synthesize_scr_windows(
        &[(0.0, bursts.clone())],
        duration_s,
        sample_rate,
        baseline_us,
    ))
}

/// Stitch multiple windows into one channel. Each entry places its bursts
/// at `window_start + tau`; a single convolution over the full span carries
/// response tails across window boundaries.
pub fn synthesize_scr_windows(
    windows: &[(f64, BurstSet)],
    duration_s: f64,
    sample_rate: f64,
    baseline_us: f64,
) -> WaveformChannel {
    let n = (duration_s * sample_rate).round() as usize;
    let dt = 1.0 / sample_rate;
    let mut drive = vec![0.0; n];
    for (start, set) in windows {
        let two_s2 = 2.0 * set.sigma1 * set.sigma1;
        for b in &set.bursts {
            let center = start + b.tau;
            for (i, d) in drive.iter_mut().enumerate() {
                let t = i as f64 * dt;
                *d += b.amplitude * (-((t - center) * (t - center)) / two_s2).exp();
            }
        }
    }
    let h = response_function(duration_s.max(40.0), sample_rate, &ResponseFunctionParams::default());
    let mut conv = fft_convolve(&h, &drive);
    conv.truncate(n);
    let samples: Vec<f64> = conv
        .iter()
        .map(|&v| baseline_us + (v * dt).max(0.0))
        .collect();
    WaveformChannel::new("scr", sample_rate, "uS", samples)
}

// ── Context model ──────────────────────────────────────────────────────────

/// Normalized context features for the burst model.
pub fn context_features(
    valence: f64,
    arousal: f64,
    met: f64,
    age: u32,
    gender_female: bool,
    window_start_s: f64,
) -> Vec<f64> {
    vec![
        (valence - 1.0) / 8.0,
        (arousal - 1.0) / 8.0,
        (met / 12.0).clamp(0.0, 1.0),
        (age as f64 / 100.0).clamp(0.0, 1.0),
        if gender_female { 1.0 } else { 0.0 },
        (window_start_s.rem_euclid(3600.0)) / 3600.0,
    ]
}

/// Burst parameters for a 60-second window from the trained context model:
/// 2n sigmoid outputs map to n burst times `tau = 60 s_i` (sorted) and
/// n amplitudes `a = A_MAX s'_i`.
pub fn theta_from_context(
    weights: &MlpWeights,
    valence: f64,
    arousal: f64,
    met: f64,
    age: u32,
    gender_female: bool,
    window_start_s: f64,
) -> Result<BurstSet, ScrError> {
    let c = &weights.config;
    if c.input_dim != 6 || c.output_dim != 2 * BURSTS_PER_WINDOW {
        return Err(ScrError::Untrained);
    }
    let input = context_features(valence, arousal, met, age, gender_female, window_start_s);
    let out = neural::forward(weights, &input).map_err(|_| ScrError::Untrained)?;
    let bursts: Vec<Burst> = (0..BURSTS_PER_WINDOW)
        .map(|i| Burst {
            tau: (WINDOW_S * out[i]).min(WINDOW_S - 1e-9),
            amplitude: A_MAX_US * out[BURSTS_PER_WINDOW + i],
        })
        .collect();
    BurstSet::new(bursts)
}

/// One training row: context plus the target phasic SCR window
/// (60 s x 16 Hz = 960 samples, baseline excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct ScrTrainingRow {
    pub valence: f64,
    pub arousal: f64,
    pub met: f64,
    pub age: u32,
    pub gender_female: bool,
    pub window_start_s: f64,
    pub target: Vec<f64>,
}

/// SCR training configuration; the defaults are the emotion-mode settings
/// (learning rate 0.001, minibatch 100).
#[derive(Debug, Clone)]
pub struct ScrTrainConfig {
    pub learning_rate: f64,
    pub minibatch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ScrTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            minibatch_size: 100,
            epochs: 150,
            seed: 0,
        }
    }
}

/// Action-mode training settings (learning rate 0.0001, minibatch 500).
pub fn scr_action_mode(seed: u64) -> ScrTrainConfig {
    ScrTrainConfig {
        learning_rate: 1e-4,
        minibatch_size: 500,
        epochs: 400,
        seed,
    }
}

/// Train the 6-128-20 context model end to end: the MLP's sigmoid outputs
/// render to an SCR window through the burst mixture and response-function
/// convolution, and the squared waveform error backpropagates through both.
/// Deterministic per seed.
pub fn train_scr(rows: &[ScrTrainingRow], cfg: &ScrTrainConfig) -> Result<MlpWeights, ScrError> {
    use rand::Rng;
    use rand::SeedableRng;

    if rows.is_empty() {
        return Err(ScrError::EmptyDataset);
    }
    let n_samples = (WINDOW_S * SCR_SAMPLE_RATE_HZ) as usize;
    for row in rows {
        if row.target.len() != n_samples {
            return Err(ScrError::Untrained);
        }
    }

    let config = neural::MlpConfig {
        input_dim: 6,
        hidden_dim: 128,
        output_dim: 2 * BURSTS_PER_WINDOW,
        output_activation: neural::OutputActivation::Sigmoid,
        seed: cfg.seed,
    };
    let mut weights = neural::init_weights(&config);
    let mut adam = neural::AdamState::new(
        config.hidden_dim * config.input_dim
            + config.hidden_dim
            + config.output_dim * config.hidden_dim
            + config.output_dim,
        neural::ADAM_BETA1,
        neural::ADAM_BETA2,
    );
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);

    let dt = 1.0 / SCR_SAMPLE_RATE_HZ;
    let h = response_function(WINDOW_S, SCR_SAMPLE_RATE_HZ, &ResponseFunctionParams::default());
    let sigma1 = 0.3f64;
    let two_s2 = 2.0 * sigma1 * sigma1;
    let times: Vec<f64> = (0..n_samples).map(|i| i as f64 * dt).collect();

    let inputs: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| context_features(r.valence, r.arousal, r.met, r.age, r.gender_female, r.window_start_s))
        .collect();

    let mut order: Vec<usize> = (0..rows.len()).collect();
    for _ in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(cfg.minibatch_size.max(1)) {
            let mut grads = neural::Gradients::zeros(&config);
            for &idx in chunk {
                let row = &rows[idx];
                let cache = neural::forward_with_cache(&weights, &inputs[idx])
                    .map_err(|_| ScrError::Untrained)?;
                // render the predicted window
                let taus: Vec<f64> = (0..BURSTS_PER_WINDOW).map(|k| WINDOW_S * cache.output[k]).collect();
                let amps: Vec<f64> =
                    (0..BURSTS_PER_WINDOW).map(|k| A_MAX_US * cache.output[BURSTS_PER_WINDOW + k]).collect();
                let mut drive = vec![0.0; n_samples];
                for k in 0..BURSTS_PER_WINDOW {
                    for (i, d) in drive.iter_mut().enumerate() {
                        let dtau = times[i] - taus[k];
                        *d += amps[k] * (-dtau * dtau / two_s2).exp();
                    }
                }
                let mut predicted = fft_convolve(&h, &drive);
                predicted.truncate(n_samples);
                for v in &mut predicted {
                    *v *= dt;
                }

                // residual and its correlation with h: dL/du[m] = 2 dt q[m]
                let residual: Vec<f64> = predicted.iter().zip(&row.target).map(|(p, t)| p - t).collect();
                let mut rev: Vec<f64> = residual.clone();
                rev.reverse();
                let mut corr = fft_convolve(&rev, &h);
                corr.truncate(n_samples + h.len() - 1);
                // q[m] = sum_n r[n] h[n-m] = conv(rev(r), h)[n_samples-1-m]
                let q = |m: usize| corr[n_samples - 1 - m];

                let mut output_grad = vec![0.0; 2 * BURSTS_PER_WINDOW];
                for k in 0..BURSTS_PER_WINDOW {
                    let mut g_amp = 0.0;
                    let mut g_tau = 0.0;
                    for (m, &t) in times.iter().enumerate() {
                        let dtau = t - taus[k];
                        let gauss = (-dtau * dtau / two_s2).exp();
                        let w = 2.0 * dt * q(m);
                        g_amp += w * gauss;
                        g_tau += w * amps[k] * gauss * dtau / (sigma1 * sigma1);
                    }
                    output_grad[k] = g_tau * WINDOW_S / chunk.len() as f64;
                    output_grad[BURSTS_PER_WINDOW + k] = g_amp * A_MAX_US / chunk.len() as f64;
                }
                neural::accumulate_gradients(&weights, &inputs[idx], &cache, &output_grad, None, &mut grads);
            }
            neural::adam_step(&mut weights, &mut grads, &mut adam, cfg.learning_rate, 0.0);
        }
    }
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn response_function_is_nonnegative_with_expected_peak() {
        let h = response_function(40.0, 16.0, &ResponseFunctionParams::default());
        assert!(h.iter().all(|&v| v >= 0.0));
        let argmax = h.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        let t_peak = argmax as f64 / 16.0;
        // numeric argmax of the stated form sits near 4.25 s
        assert!((3.8..=4.8).contains(&t_peak), "peak at {t_peak} s");
    }

    #[test]
    fn response_function_matches_direct_convolution() {
        let p = ResponseFunctionParams::default();
        let fs = 4.0;
        let n = (40.0 * fs) as usize;
        let dt = 1.0 / fs;
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * p.sigma2);
        let gauss: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt - p.t0;
                norm * (-t * t / (2.0 * p.sigma2 * p.sigma2)).exp()
            })
            .collect();
        let biexp: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                (-p.lambda1 * t).exp() + (-p.lambda2 * t).exp()
            })
            .collect();
        let direct: Vec<f64> = direct_convolve(&gauss, &biexp)[..n]
            .iter()
            .map(|v| v * dt)
            .collect();
        let h = response_function(40.0, fs, &p);
        let scale = direct.iter().cloned().fold(0.0f64, f64::max);
        for (a, b) in h.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn drive_of_empty_burst_set_is_zero() {
        let set = BurstSet::new(vec![]).unwrap();
        let u = sudomotor_drive(&set, 60.0, 16.0);
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_burst_peaks_at_its_time() {
        let set = BurstSet::new(vec![Burst { tau: 30.0, amplitude: 1.0 }]).unwrap();
        let u = sudomotor_drive(&set, 60.0, 16.0);
        let argmax = u.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        assert_eq!(argmax, 30 * 16);
        assert!((u[argmax] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_bursts_sum_hand_value() {
        let set = BurstSet::new(vec![
            Burst { tau: 30.0, amplitude: 1.0 },
            Burst { tau: 30.3, amplitude: 1.0 },
        ])
        .unwrap();
        // 20 Hz grid puts a sample exactly at t = 30.15, midway between the
        // two equal bursts 0.15 s away on each side
        let u = sudomotor_drive(&set, 60.0, 20.0);
        let idx = (30.15_f64 * 20.0).round() as usize;
        let expect = 2.0 * (-(0.15f64 * 0.15) / (2.0 * 0.09)).exp();
        assert!((u[idx] - expect).abs() < 1e-12, "{} vs {}", u[idx], expect);
    }

    #[test]
    fn zero_bursts_give_flat_baseline() {
        let set = BurstSet::new(vec![]).unwrap();
        let ch = synthesize_scr(&set, 60.0, 16.0, 2.0).unwrap();
        assert!(ch.samples.iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn amplitude_doubling_doubles_phasic_part() {
        let set1 = BurstSet::new(vec![
            Burst { tau: 10.0, amplitude: 0.5 },
            Burst { tau: 35.0, amplitude: 1.0 },
        ])
        .unwrap();
        let set2 = BurstSet::new(vec![
            Burst { tau: 10.0, amplitude: 1.0 },
            Burst { tau: 35.0, amplitude: 2.0 },
        ])
        .unwrap();
        let a = synthesize_scr(&set1, 60.0, 16.0, 2.0).unwrap();
        let b = synthesize_scr(&set2, 60.0, 16.0, 2.0).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!(((y - 2.0) - 2.0 * (x - 2.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn scr_never_dips_below_baseline() {
        let set = BurstSet::new(vec![Burst { tau: 5.0, amplitude: 2.0 }]).unwrap();
        let ch = synthesize_scr(&set, 120.0, 16.0, 2.0).unwrap();
        assert!(ch.samples.iter().all(|&v| v >= 2.0));
    }

    #[test]
    fn fft_matches_direct_convolution_on_random_bursts() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let n_bursts = rng.gen_range(1..=10);
            let bursts: Vec<Burst> = (0..n_bursts)
                .map(|_| Burst {
                    tau: rng.gen_range(0.0..60.0),
                    amplitude: rng.gen_range(0.0..2.0),
                })
                .collect();
            let set = BurstSet::new(bursts).unwrap();
            let fs = 8.0;
            let u = sudomotor_drive(&set, 60.0, fs);
            let h = response_function(40.0, fs, &ResponseFunctionParams::default());
            let fast = fft_convolve(&h, &u);
            let slow = direct_convolve(&h, &u);
            let scale = slow.iter().cloned().fold(1e-12f64, f64::max);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn shift_covariance() {
        // delaying every burst by delta shifts the phasic output by delta
        let fs = 16.0;
        let base = BurstSet::new(vec![
            Burst { tau: 5.0, amplitude: 1.0 },
            Burst { tau: 12.0, amplitude: 0.7 },
        ])
        .unwrap();
        let delta = 4.0;
        let shifted = BurstSet::new(
            base.bursts
                .iter()
                .map(|b| Burst { tau: b.tau + delta, amplitude: b.amplitude })
                .collect(),
        )
        .unwrap();
        let a = synthesize_scr(&base, 80.0, fs, 0.0).unwrap();
        let b = synthesize_scr(&shifted, 80.0, fs, 0.0).unwrap();
        let k = (delta * fs) as usize;
        for i in 0..a.samples.len() - k {
            assert!(
                (a.samples[i] - b.samples[i + k]).abs() < 1e-9,
                "mismatch at {i}"
            );
        }
    }

    #[test]
    fn burst_validation() {
        assert!(matches!(
            BurstSet::new(vec![Burst { tau: 61.0, amplitude: 1.0 }]),
            Err(ScrError::BadBurst { .. })
        ));
        assert!(matches!(
            BurstSet::new(vec![Burst { tau: 1.0, amplitude: -0.1 }]),
            Err(ScrError::BadBurst { .. })
        ));
        let too_many: Vec<Burst> = (0..31)
            .map(|i| Burst { tau: i as f64, amplitude: 0.1 })
            .collect();
        assert!(matches!(
            BurstSet::new(too_many),
            Err(ScrError::TooManyBursts(31))
        ));
    }

    #[test]
    fn windows_stitch_without_discontinuity() {
        let w1 = BurstSet::new(vec![Burst { tau: 58.0, amplitude: 1.5 }]).unwrap();
        let w2 = BurstSet::new(vec![Burst { tau: 2.0, amplitude: 1.0 }]).unwrap();
        let ch = synthesize_scr_windows(&[(0.0, w1), (60.0, w2)], 120.0, 16.0, 2.0);
        // a burst near the boundary must decay smoothly into the next window
        let boundary = (60.0 * 16.0) as usize;
        assert!(ch.samples[boundary] > 2.1, "tail carried: {}", ch.samples[boundary]);
        let max_jump = ch
            .samples
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0f64, f64::max);
        assert!(max_jump < 0.2, "jump {max_jump}");
    }

    fn quick_cfg(seed: u64) -> ScrTrainConfig {
        ScrTrainConfig {
            learning_rate: 0.002,
            minibatch_size: 16,
            epochs: 60,
            seed,
        }
    }

    fn training_row(valence: f64, arousal: f64, level: f64, seed: u64) -> ScrTrainingRow {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bursts: Vec<Burst> = (0..BURSTS_PER_WINDOW)
            .map(|k| Burst {
                tau: (6.0 * k as f64 + 3.0 + rng.gen_range(-1.5..1.5)).clamp(0.0, 59.9),
                amplitude: level * rng.gen_range(0.8..1.2),
            })
            .collect();
        let set = BurstSet::new(bursts).unwrap();
        let ch = synthesize_scr(&set, WINDOW_S, SCR_SAMPLE_RATE_HZ, 0.0).unwrap();
        ScrTrainingRow {
            valence,
            arousal,
            met: 1.3,
            age: 30,
            gender_female: false,
            window_start_s: (seed % 60) as f64 * 60.0,
            target: ch.samples,
        }
    }

    #[test]
    fn end_to_end_training_orders_levels() {
        // anger-like contexts carry strong bursts, sad-like weak ones;
        // after training the predicted mean SCR must order the same way
        let mut rows = Vec::new();
        for i in 0..24 {
            rows.push(training_row(2.0, 8.0, 1.4, 100 + i)); // high
            rows.push(training_row(5.0, 5.0, 0.6, 200 + i)); // neutral
            rows.push(training_row(2.5, 2.5, 0.15, 300 + i)); // low
        }
        let w = train_scr(&rows, &quick_cfg(9)).unwrap();
        let mean_for = |v: f64, a: f64| -> f64 {
            let set = theta_from_context(&w, v, a, 1.3, 30, false, 0.0).unwrap();
            let ch = synthesize_scr(&set, WINDOW_S, SCR_SAMPLE_RATE_HZ, 0.0).unwrap();
            ch.samples.iter().sum::<f64>() / ch.samples.len() as f64
        };
        let high = mean_for(2.0, 8.0);
        let neutral = mean_for(5.0, 5.0);
        let low = mean_for(2.5, 2.5);
        assert!(high > neutral, "high {high} !> neutral {neutral}");
        assert!(low < neutral, "low {low} !< neutral {neutral}");
    }

    #[test]
    fn context_model_output_contract() {
        let w = neural::init_weights(&neural::MlpConfig {
            input_dim: 6,
            hidden_dim: 128,
            output_dim: 20,
            output_activation: neural::OutputActivation::Sigmoid,
            seed: 4,
        });
        let set = theta_from_context(&w, 5.0, 5.0, 1.3, 30, false, 120.0).unwrap();
        assert_eq!(set.bursts.len(), BURSTS_PER_WINDOW);
        for b in &set.bursts {
            assert!((0.0..WINDOW_S).contains(&b.tau));
            assert!((0.0..=A_MAX_US).contains(&b.amplitude));
        }
        for pair in set.bursts.windows(2) {
            assert!(pair[0].tau <= pair[1].tau);
        }
        // determinism
        let again = theta_from_context(&w, 5.0, 5.0, 1.3, 30, false, 120.0).unwrap();
        assert_eq!(set, again);
    }

    #[test]
    fn wrong_shape_weights_rejected() {
        let w = neural::init_weights(&neural::MlpConfig {
            input_dim: 6,
            hidden_dim: 16,
            output_dim: 4,
            output_activation: neural::OutputActivation::Sigmoid,
            seed: 0,
        });
        assert_eq!(
            theta_from_context(&w, 5.0, 5.0, 1.0, 30, false, 0.0),
            Err(ScrError::Untrained)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        // any valid burst set keeps SCR at or above baseline and the
        // 30/min cap holds across stitched windows
        #[test]
        fn scr_stays_above_baseline(
            taus in proptest::collection::vec(0.0f64..60.0, 1..12),
            amps in proptest::collection::vec(0.0f64..2.0, 12),
        ) {
            let bursts: Vec<Burst> = taus
                .iter()
                .zip(&amps)
                .map(|(&tau, &amplitude)| Burst { tau, amplitude })
                .collect();
            let set = BurstSet::new(bursts).unwrap();
            prop_assert!(set.bursts.len() <= MAX_BURSTS_PER_MIN);
            let ch = synthesize_scr(&set, 90.0, 8.0, 2.0).unwrap();
            for v in &ch.samples {
                prop_assert!(*v >= 2.0);
            }
        }
    }
}
