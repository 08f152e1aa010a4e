//! Shared signal processing: Fourier transforms, filtering, peak and beat
//! feature detection, windowed statistics, and direction-of-change scoring.
//!
//! Everything here is deterministic and stateless; the same inputs always
//! produce the same outputs.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

/// A uniformly sampled signal.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WaveformChannel {
    pub name: String,
    /// Samples per second.
    pub sample_rate: f64,
    pub unit: String,
    pub samples: Vec<f64>,
}

impl WaveformChannel {
    pub fn new(name: &str, sample_rate: f64, unit: &str, samples: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            sample_rate,
            unit: unit.to_string(),
            samples,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Direction of a feature change relative to baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    None,
}

/// Which windowed feature set to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureVariant {
    Six,
    Thirteen,
}

impl FeatureVariant {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            FeatureVariant::Six => SIX_NAMES,
            FeatureVariant::Thirteen => THIRTEEN_NAMES,
        }
    }

    pub fn len(self) -> usize {
        self.names().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

const SIX_NAMES: &[&str] = &[
    "mean",
    "std",
    "mean_abs_d1",
    "mean_abs_d2",
    "mean_abs_d1_norm",
    "mean_abs_d2_norm",
];

const THIRTEEN_NAMES: &[&str] = &[
    "mean",
    "std",
    "mean_abs_d1",
    "mean_abs_d2",
    "mean_abs_d1_norm",
    "mean_abs_d2_norm",
    "median",
    "min",
    "max",
    "range",
    "variance",
    "skewness",
    "kurtosis",
];

/// One window's worth of extracted features. Value order matches
/// [`FeatureVariant::names`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub variant: FeatureVariant,
    pub values: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("signal too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("invalid band [{lo}, {hi}] Hz for sample rate {sample_rate} Hz")]
    Band { lo: f64, hi: f64, sample_rate: f64 },
    #[error("spectrum is zero everywhere in the requested band")]
    AllZero,
    #[error("no beats detected")]
    NoBeats,
    #[error("need at least {need} beats, got {got}")]
    TooFewBeats { need: usize, got: usize },
}

// ── Fourier transforms ─────────────────────────────────────────────────────

/// Forward discrete Fourier transform of a real signal.
pub fn dft(signal: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    if buf.len() > 1 {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

/// Inverse discrete Fourier transform, normalized by 1/N.
pub fn idft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = spectrum.len();
    let mut buf = spectrum.to_vec();
    if n > 1 {
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    }
    let scale = 1.0 / n as f64;
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

/// Inverse transform keeping only the real part.
pub fn idft_real(spectrum: &[Complex64]) -> Vec<f64> {
    idft(spectrum).iter().map(|c| c.re).collect()
}

// ── Detrend and bandpass ───────────────────────────────────────────────────

/// Remove the least-squares linear trend from a signal.
pub fn detrend(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    if n < 2 {
        return signal.to_vec();
    }
    // closed-form simple linear regression on index
    let nf = n as f64;
    let mean_t = (nf - 1.0) / 2.0;
    let mean_x = signal.iter().sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &x) in signal.iter().enumerate() {
        let dt = i as f64 - mean_t;
        num += dt * (x - mean_x);
        den += dt * dt;
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    signal
        .iter()
        .enumerate()
        .map(|(i, &x)| x - (mean_x + slope * (i as f64 - mean_t)))
        .collect()
}

/// Linear detrend followed by an ideal FFT-domain bandpass keeping
/// frequencies in [lo, hi] Hz inclusive.
pub fn detrend_bandpass(
    signal: &[f64],
    sample_rate: f64,
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>, DspError> {
    if !(lo >= 0.0 && lo < hi && hi < sample_rate / 2.0) {
        return Err(DspError::Band {
            lo,
            hi,
            sample_rate,
        });
    }
    let flat = detrend(signal);
    let n = flat.len();
    if n < 2 {
        return Ok(flat);
    }
    let mut spec = dft(&flat);
    for (k, v) in spec.iter_mut().enumerate() {
        let f = bin_frequency(k, n, sample_rate).abs();
        if f < lo || f > hi {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    Ok(idft_real(&spec))
}

/// Signed frequency of DFT bin `k` for an `n`-point transform.
fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    let k = k as f64;
    let n = n as f64;
    if k <= n / 2.0 {
        k * sample_rate / n
    } else {
        (k - n) * sample_rate / n
    }
}

// ── Dominant frequency ─────────────────────────────────────────────────────

/// Argmax of the magnitude spectrum over the in-band DFT bins.
///
/// Ties (magnitudes equal within 1e-9 relative) resolve toward the lower
/// frequency. The caller should supply at least `2/lo` seconds of signal for
/// the band edge to be resolvable.
pub fn dominant_frequency(
    signal: &[f64],
    sample_rate: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, DspError> {
    if !(lo >= 0.0 && lo < hi && hi <= sample_rate / 2.0) {
        return Err(DspError::Band {
            lo,
            hi,
            sample_rate,
        });
    }
    let spec = dft(signal);
    let n = signal.len();
    let mut best: Option<(usize, f64)> = None;
    for k in 1..=n / 2 {
        let f = k as f64 * sample_rate / n as f64;
        if f < lo || f > hi {
            continue;
        }
        let mag = spec[k].norm();
        match best {
            None => best = Some((k, mag)),
            Some((_, m)) if mag > m * (1.0 + 1e-9) => best = Some((k, mag)),
            _ => {}
        }
    }
    let (k, mag) = best.ok_or(DspError::AllZero)?;
    if mag == 0.0 {
        return Err(DspError::AllZero);
    }
    Ok(k as f64 * sample_rate / n as f64)
}

/// Sub-bin dominant-frequency estimate.
///
/// Hann-windows the signal, locates the coarse in-band argmax (same tie rule
/// as [`dominant_frequency`]), then searches a 32x zero-padded spectrum
/// within one coarse bin of it and polishes with parabolic interpolation.
/// Used where bin resolution is too coarse, e.g. respiratory-rate tracking.
pub fn dominant_frequency_refined(
    signal: &[f64],
    sample_rate: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, DspError> {
    let n = signal.len();
    if n < 4 {
        return Err(DspError::TooShort { need: 4, got: n });
    }
    if !(lo >= 0.0 && lo < hi && hi <= sample_rate / 2.0) {
        return Err(DspError::Band {
            lo,
            hi,
            sample_rate,
        });
    }
    // periodic Hann so exact-bin tones leak symmetrically
    let windowed: Vec<f64> = signal
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            x * (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        })
        .collect();

    let coarse = dominant_frequency(&windowed, sample_rate, lo, hi)?;
    let df_coarse = sample_rate / n as f64;

    let mut padded = windowed;
    let target = (n * 32).next_power_of_two();
    padded.resize(target, 0.0);
    let spec = dft(&padded);
    let dfp = sample_rate / target as f64;

    let lo2 = (coarse - df_coarse).max(lo);
    let hi2 = (coarse + df_coarse).min(hi);
    let k_lo = (lo2 / dfp).ceil() as usize;
    let k_hi = ((hi2 / dfp).floor() as usize).min(target / 2);
    let mut best_k = k_lo;
    let mut best_m = -1.0;
    for k in k_lo..=k_hi {
        let m = spec[k].norm();
        if m > best_m {
            best_m = m;
            best_k = k;
        }
    }
    if best_m <= 0.0 {
        return Err(DspError::AllZero);
    }
    // parabolic refinement on the padded grid
    let mut freq = best_k as f64 * dfp;
    if best_k > 0 && best_k + 1 <= target / 2 {
        let a = spec[best_k - 1].norm();
        let b = spec[best_k].norm();
        let c = spec[best_k + 1].norm();
        let den = a - 2.0 * b + c;
        if den.abs() > 0.0 {
            let delta = 0.5 * (a - c) / den;
            if delta.abs() <= 1.0 {
                freq = (best_k as f64 + delta) * dfp;
            }
        }
    }
    Ok(freq.clamp(lo, hi))
}

// ── R-peak detection ───────────────────────────────────────────────────────

/// Detect R peaks in a clean synthesized ECG.
///
/// Local maxima above an adaptive threshold (60th percentile plus half the
/// headroom to the global maximum) with a 0.25 s refractory period. Peak
/// times are invariant to positive affine amplitude transforms.
pub fn detect_r_peaks(ecg: &WaveformChannel) -> Result<Vec<f64>, DspError> {
    let x = &ecg.samples;
    if x.len() < 3 {
        return Err(DspError::NoBeats);
    }
    let p60 = percentile(x, 0.60);
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = p60 + 0.5 * (max - p60);
    let refractory = (0.25 * ecg.sample_rate).round() as usize;

    let mut peaks: Vec<usize> = Vec::new();
    for i in 1..x.len() - 1 {
        if x[i] <= threshold || x[i] < x[i - 1] || x[i] < x[i + 1] {
            continue;
        }
        // strict max on at least one side avoids plateaus double-firing
        if x[i] == x[i - 1] && x[i] == x[i + 1] {
            continue;
        }
        match peaks.last() {
            Some(&last) if i - last < refractory => {
                if x[i] > x[last] {
                    *peaks.last_mut().unwrap() = i;
                }
            }
            _ => peaks.push(i),
        }
    }
    if peaks.is_empty() {
        return Err(DspError::NoBeats);
    }
    Ok(peaks.iter().map(|&i| i as f64 / ecg.sample_rate).collect())
}

/// Linear-interpolation percentile (q in [0,1]) of a sample set.
fn percentile(x: &[f64], q: f64) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

// ── Per-beat blood-pressure features ───────────────────────────────────────

/// Per-beat pressure landmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatPressure {
    /// Systolic pressure: per-beat maximum.
    pub sbp: f64,
    /// Diastolic pressure: per-beat minimum.
    pub dbp: f64,
    /// Left ventricular ejection time, seconds.
    pub lvet: f64,
    /// True when no dicrotic notch was found and the 0.37*RRI fallback
    /// was used.
    pub degraded: bool,
}

/// Extract SBP, DBP and LVET for each beat interval `[beats[k], beats[k+1])`.
///
/// LVET runs from the pressure foot to the dicrotic notch. The foot is the
/// upstroke crossing of DBP + 10% pulse pressure before the systolic peak
/// (an argmin definition is unstable when diastole is non-monotone); the
/// notch is the most prominent interior local minimum after the peak.
pub fn beat_pressure_features(
    bp: &WaveformChannel,
    beats: &[f64],
) -> Result<Vec<BeatPressure>, DspError> {
    if beats.len() < 2 {
        return Err(DspError::TooFewBeats {
            need: 2,
            got: beats.len(),
        });
    }
    let fs = bp.sample_rate;
    let mut out = Vec::with_capacity(beats.len() - 1);
    for w in beats.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let i0 = (t0 * fs).round() as usize;
        let i1 = ((t1 * fs).round() as usize).min(bp.samples.len());
        if i1 <= i0 + 2 {
            continue;
        }
        let seg = &bp.samples[i0..i1];
        let rri = t1 - t0;

        let mut sbp = f64::NEG_INFINITY;
        let mut dbp = f64::INFINITY;
        let mut peak = 0;
        for (i, &v) in seg.iter().enumerate() {
            if v > sbp {
                sbp = v;
                peak = i;
            }
            if v < dbp {
                dbp = v;
            }
        }

        // foot: walk back from the systolic peak to the 10% pulse-pressure
        // crossing
        let foot_level = dbp + 0.1 * (sbp - dbp);
        let mut foot = 0;
        for i in (0..peak).rev() {
            if seg[i] <= foot_level {
                foot = i;
                break;
            }
        }

        // notch: most prominent interior local minimum after the peak
        let mut notch: Option<(usize, f64)> = None;
        for i in (peak + 1).max(1)..seg.len() - 1 {
            if seg[i] < seg[i - 1] && seg[i] <= seg[i + 1] {
                let left_max = seg[peak..i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let right_max = seg[i..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let prominence = left_max.min(right_max) - seg[i];
                if notch.map_or(true, |(_, p)| prominence > p) {
                    notch = Some((i, prominence));
                }
            }
        }

        let (lvet, degraded) = match notch {
            Some((i, _)) => ((i - foot) as f64 / fs, false),
            None => (0.37 * rri, true),
        };
        out.push(BeatPressure {
            sbp,
            dbp,
            lvet,
            degraded,
        });
    }
    if out.is_empty() {
        return Err(DspError::TooFewBeats { need: 2, got: 1 });
    }
    Ok(out)
}

// ── RR-interval statistics ─────────────────────────────────────────────────

/// Per-window SDNN: population standard deviation of the RR intervals whose
/// onsets fall in each consecutive `window_s` span. Every complete window
/// must contain at least two beats.
pub fn sdnn(rri: &[f64], onsets: &[f64], window_s: f64) -> Result<Vec<f64>, DspError> {
    if rri.len() < 2 || rri.len() != onsets.len() {
        return Err(DspError::TooFewBeats {
            need: 2,
            got: rri.len(),
        });
    }
    let total = onsets.last().unwrap() + rri.last().unwrap();
    let n_windows = (total / window_s).floor().max(1.0) as usize;
    let mut out = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let t0 = w as f64 * window_s;
        let t1 = t0 + window_s;
        let vals: Vec<f64> = onsets
            .iter()
            .zip(rri)
            .filter(|(&t, _)| t >= t0 && t < t1)
            .map(|(_, &r)| r)
            .collect();
        if vals.len() < 2 {
            return Err(DspError::TooFewBeats {
                need: 2,
                got: vals.len(),
            });
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        out.push(var.sqrt());
    }
    Ok(out)
}

// ── Windowed feature vectors ───────────────────────────────────────────────

/// Extract a feature vector from each 6-second window with 50% overlap.
pub fn window_feature_vector(
    signal: &WaveformChannel,
    variant: FeatureVariant,
) -> Result<Vec<FeatureVector>, DspError> {
    let w = (6.0 * signal.sample_rate).round() as usize;
    let hop = w / 2;
    if signal.samples.len() < w {
        return Err(DspError::TooShort {
            need: w,
            got: signal.samples.len(),
        });
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + w <= signal.samples.len() {
        out.push(feature_vector(&signal.samples[start..start + w], variant));
        start += hop;
    }
    Ok(out)
}

fn feature_vector(x: &[f64], variant: FeatureVariant) -> FeatureVector {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();

    let mean_abs_d1 = mean_abs_diff(x, 1);
    let mean_abs_d2 = mean_abs_diff(x, 2);
    // normalized = z-scored window; zero-variance windows normalize to zero
    let (d1n, d2n) = if std > 0.0 {
        (mean_abs_d1 / std, mean_abs_d2 / std)
    } else {
        (0.0, 0.0)
    };

    let mut values = vec![mean, std, mean_abs_d1, mean_abs_d2, d1n, d2n];
    if variant == FeatureVariant::Thirteen {
        let mut sorted = x.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
        };
        let min = sorted[0];
        let max = sorted[sorted.len() - 1];
        let (skew, kurt) = if std > 0.0 {
            let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
            let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
            (m3 / std.powi(3), m4 / (var * var) - 3.0)
        } else {
            (0.0, 0.0)
        };
        values.extend_from_slice(&[median, min, max, max - min, var, skew, kurt]);
    }
    FeatureVector { variant, values }
}

fn mean_abs_diff(x: &[f64], lag: usize) -> f64 {
    if x.len() <= lag {
        return 0.0;
    }
    let m = x.len() - lag;
    (0..m).map(|i| (x[i + lag] - x[i]).abs()).sum::<f64>() / m as f64
}

// ── Direction of change ────────────────────────────────────────────────────

/// Classify each delta against thresholds of 10% of the maximum and minimum
/// delta: up above `0.1*max`, down below `0.1*min`, otherwise none. Exact
/// threshold ties classify as none.
pub fn direction_of_change(deltas: &[f64]) -> Vec<Direction> {
    if deltas.is_empty() {
        return Vec::new();
    }
    let max = deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let up_thr = 0.1 * max;
    let down_thr = 0.1 * min;
    deltas
        .iter()
        .map(|&d| {
            if d > up_thr && d > 0.0 {
                Direction::Up
            } else if d < down_thr && d < 0.0 {
                Direction::Down
            } else {
                Direction::None
            }
        })
        .collect()
}
