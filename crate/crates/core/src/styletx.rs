//! Spectral-domain style transfer between motion clips.
//!
//! Per rotation channel, the magnitude difference between a style source and
//! a style reference is added to the target's magnitude spectrum, weighted by
//! the target's own normalized magnitude; target phases are kept and the
//! imaginary residue of the reconstruction is discarded. Root translation
//! channels pass through untouched so locomotion is not distorted.

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::bvh::MotionClip;
use crate::dsp;

/// Magnitude/phase view of one channel's spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpectrum {
    pub magnitudes: Vec<f64>,
    /// Radians.
    pub phases: Vec<f64>,
}

impl ChannelSpectrum {
    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StyleError {
    #[error("signal too short: need at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("clips do not share a skeleton/channel layout")]
    SkeletonMismatch,
    #[error("clip has no frames")]
    EmptyClip,
}

/// Discrete Fourier magnitude and phase of a real signal.
pub fn channel_spectrum(signal: &[f64]) -> Result<ChannelSpectrum, StyleError> {
    if signal.len() < 2 {
        return Err(StyleError::TooShort(signal.len()));
    }
    let spec = dsp::dft(signal);
    Ok(ChannelSpectrum {
        magnitudes: spec.iter().map(|c| c.norm()).collect(),
        phases: spec.iter().map(|c| c.arg()).collect(),
    })
}

/// Stylized magnitudes for one channel: `R' = max(0, R + s(R_s - R_r))`
/// with `s = R / max(R)` (zero when the channel is silent).
fn stylize_magnitudes(target: &[f64], source: &[f64], reference: &[f64]) -> Vec<f64> {
    let max = target.iter().cloned().fold(0.0f64, f64::max);
    target
        .iter()
        .zip(source)
        .zip(reference)
        .map(|((&r, &rs), &rr)| {
            let s = if max > 0.0 { r / max } else { 0.0 };
            (r + s * (rs - rr)).max(0.0)
        })
        .collect()
}

/// Transfer the style delta between `style_source` and `style_reference`
/// onto `target`.
///
/// `style_source` and `style_reference` must depict the same action;
/// `style_reference` shares the target's style. All three clips must share
/// one skeleton layout. Channels are aligned by zero-padding to a common
/// power-of-two length; the output keeps the target's frame count and
/// frame time.
pub fn transfer_style(
    target: &MotionClip,
    style_source: &MotionClip,
    style_reference: &MotionClip,
) -> Result<MotionClip, StyleError> {
    if !target.skeleton.layout_matches(&style_source.skeleton)
        || !target.skeleton.layout_matches(&style_reference.skeleton)
    {
        return Err(StyleError::SkeletonMismatch);
    }
    if target.frames.is_empty() || style_source.frames.is_empty() || style_reference.frames.is_empty()
    {
        return Err(StyleError::EmptyClip);
    }

    let n_target = target.frames.len();
    let padded = n_target
        .max(style_source.frames.len())
        .max(style_reference.frames.len())
        .next_power_of_two()
        .max(2);

    // per-joint channel kinds in flat channel order
    let mut is_position = Vec::with_capacity(target.skeleton.channel_count());
    for joint in &target.skeleton.joints {
        for ch in &joint.channels {
            is_position.push(ch.is_position());
        }
    }

    let mut out_frames = vec![vec![0.0; is_position.len()]; n_target];
    for (c, &pass_through) in is_position.iter().enumerate() {
        if pass_through {
            for (f, row) in out_frames.iter_mut().enumerate() {
                row[c] = target.frames[f][c];
            }
            continue;
        }
        let series = |clip: &MotionClip| -> Vec<f64> {
            let mut x: Vec<f64> = clip.frames.iter().map(|row| row[c]).collect();
            x.resize(padded, 0.0);
            x
        };
        let spec_t = dsp::dft(&series(target));
        let spec_s = dsp::dft(&series(style_source));
        let spec_r = dsp::dft(&series(style_reference));

        let mag_t: Vec<f64> = spec_t.iter().map(|v| v.norm()).collect();
        let mag_s: Vec<f64> = spec_s.iter().map(|v| v.norm()).collect();
        let mag_r: Vec<f64> = spec_r.iter().map(|v| v.norm()).collect();
        let stylized = stylize_magnitudes(&mag_t, &mag_s, &mag_r);

        let rebuilt: Vec<Complex64> = stylized
            .iter()
            .zip(&spec_t)
            .map(|(&m, orig)| Complex64::from_polar(m, orig.arg()))
            .collect();
        let time = dsp::idft_real(&rebuilt);
        for (f, row) in out_frames.iter_mut().enumerate() {
            row[c] = time[f];
        }
    }

    Ok(MotionClip {
        skeleton: target.skeleton.clone(),
        frame_time: target.frame_time,
        frames: out_frames,
    })
}
