//! ECG and blood-pressure waveforms from a 3-D limit-cycle model.
//!
//! The trajectory circles an attracting unit limit cycle in the (x, y)
//! plane, one revolution per heartbeat; P/Q/R/S/T deflections are Gaussian
//! impulses on the z axis anchored at fixed angles. The angular velocity
//! follows the commanded RR interval beat by beat, so the same series
//! drives ECG and BP in lockstep.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::cardio::RriSeries;
use crate::dsp::WaveformChannel;

/// ECG display range before baseline wander is added, mV.
pub const ECG_RANGE_MV: (f64, f64) = (-0.4, 1.2);
/// BP rescale window, seconds.
pub const BP_WINDOW_S: f64 = 60.0;

/// Gaussian wave anchors for one signal: angles (radians), amplitudes and
/// widths for P, Q, R, S, T in order, plus the baseline-wander amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub theta: [f64; 5],
    pub a: [f64; 5],
    pub b: [f64; 5],
    /// Baseline wander amplitude, mV (zero disables wander).
    pub baseline_mv: f64,
}

impl WaveParams {
    /// The ECG parameter block.
    pub fn ecg() -> Self {
        WaveParams {
            theta: [-PI / 3.0, -PI / 12.0, 0.0, PI / 12.0, PI / 3.0],
            a: [1.2, -5.0, 30.0, -7.5, 0.75],
            b: [0.25, 0.1, 0.1, 0.1, 0.4],
            baseline_mv: 0.15,
        }
    }

    /// The BP parameter block; no P/Q deflections and no wander.
    pub fn bp() -> Self {
        WaveParams {
            theta: [-5.0 * PI / 12.0, -PI / 36.0, 0.0, PI / 18.0, 4.0 * PI / 9.0],
            a: [0.0, 0.0, 0.45, 0.25, 0.45],
            b: [0.25, 0.1, 0.3, 0.5, 0.3],
            baseline_mv: 0.0,
        }
    }
}

/// A point on the model trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum HemoError {
    #[error("trajectory at the origin: the phase angle is undefined")]
    Origin,
    #[error("bounds must satisfy lo < hi, got [{lo}, {hi}]")]
    Bounds { lo: f64, hi: f64 },
}

/// Wrap an angle difference into (-pi, pi].
fn wrap_angle(d: f64) -> f64 {
    let mut w = (d + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w += TAU;
    }
    w
}

/// Time derivatives of the trajectory:
/// `dx = a x - w y`, `dy = a y + w x` with `a = 1 - sqrt(x^2 + y^2)`, and
/// `dz = -sum_i a_i dtheta_i exp(-dtheta_i^2 / 2 b_i^2) - (z - z0)` with
/// `dtheta_i = (theta - theta_i)` wrapped to (-pi, pi].
pub fn dyn_derivatives(
    state: &TrajState,
    omega: f64,
    z0: f64,
    params: &WaveParams,
) -> Result<(f64, f64, f64), HemoError> {
    if state.x == 0.0 && state.y == 0.0 {
        return Err(HemoError::Origin);
    }
    let r = (state.x * state.x + state.y * state.y).sqrt();
    let alpha = 1.0 - r;
    let theta = state.y.atan2(state.x);
    let mut dz = -(state.z - z0);
    for i in 0..5 {
        let d = wrap_angle(theta - params.theta[i]);
        dz -= params.a[i] * d * (-d * d / (2.0 * params.b[i] * params.b[i])).exp();
    }
    Ok((
        alpha * state.x - omega * state.y,
        alpha * state.y + omega * state.x,
        dz,
    ))
}

fn rk4_step(state: &TrajState, omega: f64, params: &WaveParams, dt: f64) -> TrajState {
    let f = |s: &TrajState| dyn_derivatives(s, omega, 0.0, params).unwrap_or((0.0, 0.0, 0.0));
    let k1 = f(state);
    let s2 = TrajState {
        x: state.x + 0.5 * dt * k1.0,
        y: state.y + 0.5 * dt * k1.1,
        z: state.z + 0.5 * dt * k1.2,
    };
    let k2 = f(&s2);
    let s3 = TrajState {
        x: state.x + 0.5 * dt * k2.0,
        y: state.y + 0.5 * dt * k2.1,
        z: state.z + 0.5 * dt * k2.2,
    };
    let k3 = f(&s3);
    let s4 = TrajState {
        x: state.x + dt * k3.0,
        y: state.y + dt * k3.1,
        z: state.z + dt * k3.2,
    };
    let k4 = f(&s4);
    TrajState {
        x: state.x + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y: state.y + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        z: state.z + dt / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
    }
}

/// Integrate the z trace at `sample_rate` for `duration_s`, one revolution
/// per RR interval. Internal step is half the sample period; output is
/// decimated back to the sample rate. The angular velocity switches to the
/// next beat's value each time a revolution completes.
fn integrate_z(rri: &RriSeries, sample_rate: f64, params: &WaveParams, duration_s: f64) -> Vec<f64> {
    let n = (duration_s * sample_rate).round() as usize;
    let dt = 1.0 / (2.0 * sample_rate);
    let mut state = TrajState { x: -1.0, y: 0.0, z: 0.0 };
    let mut beat = 0usize;
    let current_rri = |k: usize| -> f64 {
        if rri.rri.is_empty() {
            1.0
        } else {
            rri.rri[k.min(rri.rri.len() - 1)]
        }
    };
    let mut omega = TAU / current_rri(0);
    let mut travelled = 0.0;
    let mut prev_theta = state.y.atan2(state.x);
    let mut out = Vec::with_capacity(n);
    for i in 0..2 * n {
        state = rk4_step(&state, omega, params, dt);
        let theta = state.y.atan2(state.x);
        travelled += wrap_angle(theta - prev_theta);
        prev_theta = theta;
        if travelled >= TAU {
            travelled -= TAU;
            beat += 1;
            omega = TAU / current_rri(beat);
        }
        if i % 2 == 1 {
            out.push(state.z);
        }
    }
    out
}

/// Affine map of a signal's [min, max] onto [lo, hi]; a constant signal
/// maps to the midpoint.
pub fn rescale(signal: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>, HemoError> {
    if !(lo < hi) {
        return Err(HemoError::Bounds { lo, hi });
    }
    let min = signal.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = signal.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if signal.is_empty() {
        return Ok(Vec::new());
    }
    if max - min <= 0.0 {
        return Ok(vec![(lo + hi) / 2.0; signal.len()]);
    }
    let scale = (hi - lo) / (max - min);
    Ok(signal.iter().map(|&v| lo + (v - min) * scale).collect())
}

/// Synthesize an ECG channel in mV.
///
/// The z trace is rescaled to the fixed display range and respiratory
/// baseline wander `A sin(phi(t))` with `dphi/dt = 2 pi f2(t)` is added on
/// top. `resp_freq_series` is per-second instantaneous respiratory
/// frequency in Hz and also fixes the output duration.
pub fn synthesize_ecg(
    rri: &RriSeries,
    resp_freq_series: &[f64],
    sample_rate: f64,
    params: &WaveParams,
) -> WaveformChannel {
    let duration = resp_freq_series.len() as f64;
    let z = integrate_z(rri, sample_rate, params, duration);
    let mut samples = rescale(&z, ECG_RANGE_MV.0, ECG_RANGE_MV.1).unwrap_or(z);
    let dt = 1.0 / sample_rate;
    let mut phase: f64 = 0.0;
    for (i, s) in samples.iter_mut().enumerate() {
        *s += params.baseline_mv * phase.sin();
        let f2 = crate::resp::sample_series(resp_freq_series, i as f64 * dt);
        phase += TAU * f2 * dt;
    }
    WaveformChannel::new("ecg", sample_rate, "mV", samples)
}

/// Synthesize a blood-pressure channel in mmHg.
///
/// The same integrator runs the BP parameter block; each 60 s window of the
/// z trace is rescaled to `[110 - 30 m, 200 - 80 m]` where `m` is the mean
/// RR interval inside that window, coupling pressure inversely to rate.
pub fn synthesize_bp(rri: &RriSeries, sample_rate: f64, params: &WaveParams) -> WaveformChannel {
    let duration = rri.total_duration();
    let z = integrate_z(rri, sample_rate, params, duration);
    let n = z.len();
    let window = (BP_WINDOW_S * sample_rate).round() as usize;
    let mut samples = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let end = (start + window).min(n);
        let (t0, t1) = (start as f64 / sample_rate, end as f64 / sample_rate);
        let mean_rri = mean_rri_in(rri, t0, t1);
        let lo = 110.0 - 30.0 * mean_rri;
        let hi = 200.0 - 80.0 * mean_rri;
        let scaled = rescale(&z[start..end], lo.min(hi - 1.0), hi).unwrap();
        samples[start..end].copy_from_slice(&scaled);
        start = end;
    }
    WaveformChannel::new("bp", sample_rate, "mmHg", samples)
}

fn mean_rri_in(rri: &RriSeries, t0: f64, t1: f64) -> f64 {
    let vals: Vec<f64> = rri
        .onsets
        .iter()
        .zip(&rri.rri)
        .filter(|(&t, _)| t >= t0 && t < t1)
        .map(|(_, &r)| r)
        .collect();
    if vals.is_empty() {
        1.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp;

    fn constant_rri(interval: f64, duration: f64) -> RriSeries {
        let mut onsets = Vec::new();
        let mut rri = Vec::new();
        let mut t = 0.0;
        while t < duration {
            onsets.push(t);
            rri.push(interval);
            t += interval;
        }
        RriSeries { rri, onsets }
    }

    #[test]
    fn derivative_on_limit_cycle() {
        // (1, 0): alpha = 0, so dx = 0, dy = omega
        let s = TrajState { x: 1.0, y: 0.0, z: 0.3 };
        let p = WaveParams::ecg();
        let (dx, dy, _) = dyn_derivatives(&s, TAU, 0.3, &p).unwrap();
        assert!(dx.abs() < 1e-12);
        assert!((dy - TAU).abs() < 1e-12);
    }

    #[test]
    fn derivative_pure_relaxation() {
        let mut p = WaveParams::ecg();
        p.a = [0.0; 5];
        let s = TrajState { x: 1.0, y: 0.0, z: 1.0 };
        let (_, _, dz) = dyn_derivatives(&s, TAU, 0.0, &p).unwrap();
        assert!((dz - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_term_by_term_oracle() {
        let s = TrajState { x: 1.0, y: 0.0, z: 0.0 };
        let p = WaveParams::ecg();
        let (_, _, dz) = dyn_derivatives(&s, TAU, 0.0, &p).unwrap();
        // direct summation at theta = 0
        let mut expect = 0.0;
        for i in 0..5 {
            let d = {
                let raw: f64 = -p.theta[i];
                (raw + PI).rem_euclid(TAU) - PI
            };
            expect -= p.a[i] * d * (-d * d / (2.0 * p.b[i] * p.b[i])).exp();
        }
        assert!((dz - expect).abs() < 1e-12, "{dz} vs {expect}");
    }

    #[test]
    fn origin_is_rejected() {
        let s = TrajState { x: 0.0, y: 0.0, z: 0.0 };
        assert_eq!(
            dyn_derivatives(&s, TAU, 0.0, &WaveParams::ecg()),
            Err(HemoError::Origin)
        );
    }

    #[test]
    fn rescale_ramp_and_constant() {
        let ramp: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let out = rescale(&ramp, -1.0, 3.0).unwrap();
        assert!((out[0] - (-1.0)).abs() < 1e-12);
        assert!((out[10] - 3.0).abs() < 1e-12);
        for (i, v) in out.iter().enumerate() {
            assert!((v - (-1.0 + 0.4 * i as f64)).abs() < 1e-12);
        }
        let flat = rescale(&[7.0; 5], 0.0, 2.0).unwrap();
        assert_eq!(flat, vec![1.0; 5]);
        assert!(matches!(rescale(&[1.0], 2.0, 1.0), Err(HemoError::Bounds { .. })));
    }

    #[test]
    fn ecg_beat_count_matches_commanded() {
        let rri = constant_rri(1.0, 62.0);
        let f2 = vec![0.25; 60];
        let ecg = synthesize_ecg(&rri, &f2, 256.0, &WaveParams::ecg());
        assert_eq!(ecg.samples.len(), 60 * 256);
        let peaks = dsp::detect_r_peaks(&ecg).unwrap();
        assert!(
            (peaks.len() as i64 - 60).abs() <= 1,
            "{} peaks detected",
            peaks.len()
        );
    }

    #[test]
    fn r_is_per_beat_max_and_s_is_min() {
        let rri = constant_rri(1.0, 12.0);
        let f2 = vec![0.0; 10];
        let mut params = WaveParams::ecg();
        params.baseline_mv = 0.0;
        let ecg = synthesize_ecg(&rri, &f2, 256.0, &params);
        // beats start at theta = pi; R (theta 0) sits mid-beat, S just after
        for beat in 3..9 {
            let seg = &ecg.samples[beat * 256..(beat + 1) * 256];
            let argmax = seg.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            let argmin = seg.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            let theta_max = -PI + TAU * argmax as f64 / 256.0;
            let theta_min = -PI + TAU * argmin as f64 / 256.0;
            assert!(theta_max.abs() < 0.1, "R at theta {theta_max}");
            assert!((theta_min - PI / 12.0).abs() < 0.1, "S at theta {theta_min}");
        }
    }

    #[test]
    fn zeroed_waves_leave_pure_baseline_wander() {
        let rri = constant_rri(1.0, 42.0);
        let f2 = vec![0.25; 40];
        let mut params = WaveParams::ecg();
        params.a = [0.0; 5];
        let ecg = synthesize_ecg(&rri, &f2, 256.0, &params);
        // z stays 0, rescale maps it to the range midpoint, wander on top
        let mid = (ECG_RANGE_MV.0 + ECG_RANGE_MV.1) / 2.0;
        let max = ecg.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = ecg.samples.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((max - min - 0.3).abs() < 1e-3, "peak-to-peak {}", max - min);
        assert!(((max + min) / 2.0 - mid).abs() < 1e-3);
        // dominant frequency of the wander is f2
        let f = dsp::dominant_frequency_refined(&ecg.samples, 256.0, 0.05, 2.0).unwrap();
        assert!((f - 0.25).abs() < 0.01, "{f}");
    }

    #[test]
    fn limit_cycle_attracts_radius() {
        // the logistic radial dynamics reach 1 +- 0.01 within 5 s from any
        // start in [0.5, 2] (analytically ~4.6 s from r = 0.5)
        let p = WaveParams::ecg();
        for r0 in [0.5, 0.8, 1.3, 2.0] {
            let mut s = TrajState { x: r0, y: 0.0, z: 0.0 };
            let dt = 1.0 / 512.0;
            for _ in 0..(5.0 / dt) as usize {
                s = rk4_step(&s, TAU, &p, dt);
            }
            let r = (s.x * s.x + s.y * s.y).sqrt();
            assert!((r - 1.0).abs() <= 0.01, "r0={r0}: r={r}");
        }
    }

    #[test]
    fn bp_scaling_range_at_unit_rri() {
        let rri = constant_rri(1.0, 60.0);
        let bp = synthesize_bp(&rri, 256.0, &WaveParams::bp());
        let beats: Vec<f64> = (0..59).map(|i| i as f64 + 0.5).collect();
        let feats = dsp::beat_pressure_features(&bp, &beats).unwrap();
        let mean_sbp = feats.iter().map(|f| f.sbp).sum::<f64>() / feats.len() as f64;
        let mean_dbp = feats.iter().map(|f| f.dbp).sum::<f64>() / feats.len() as f64;
        assert!((mean_sbp - 120.0).abs() < 5.0, "SBP {mean_sbp}");
        assert!((mean_dbp - 80.0).abs() < 5.0, "DBP {mean_dbp}");
        for f in &feats {
            assert!(f.sbp <= 120.0 + 1e-9 && f.dbp >= 80.0 - 1e-9);
        }
    }

    #[test]
    fn bp_pulse_period_matches_commanded_rri() {
        let rri = constant_rri(0.8, 40.0);
        let bp = synthesize_bp(&rri, 256.0, &WaveParams::bp());
        let peaks = dsp::detect_r_peaks(&bp).unwrap();
        let intervals: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
        for iv in &intervals[1..intervals.len() - 1] {
            assert!((iv - 0.8).abs() <= 1.0 / 256.0 + 1e-9, "interval {iv}");
        }
    }

    #[test]
    fn no_nan_under_jittery_rri() {
        let mut rri = Vec::new();
        let mut onsets = Vec::new();
        let mut t = 0.0;
        for i in 0..120 {
            let r = 0.4 + 0.05 * ((i * 7919) % 13) as f64;
            onsets.push(t);
            rri.push(r);
            t += r;
        }
        let series = RriSeries { rri, onsets };
        let f2 = vec![0.3; 60];
        let ecg = synthesize_ecg(&series, &f2, 256.0, &WaveParams::ecg());
        let bp = synthesize_bp(&series, 256.0, &WaveParams::bp());
        assert!(ecg.samples.iter().all(|v| v.is_finite()));
        assert!(bp.samples.iter().all(|v| v.is_finite()));
    }
}
