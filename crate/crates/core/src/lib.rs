//! Deterministic synthesis of synchronized skeletal motion and physiological
//! signals (ECG, blood pressure, respiration, skin conductance) driven by a
//! timeline of actions and emotions.
//!
//! The crate is organized around the signal chain:
//!
//! - [`scenario`]: subject profiles and action/emotion timelines
//! - [`bvh`]: motion-capture parsing, forward kinematics, MET estimation
//! - [`styletx`]: spectral emotion style transfer between motion clips
//! - [`neural`]: the small MLP + Adam trainer the emotion models share
//! - [`cardio`]: heart-rate kinetics and RR-interval generation
//! - [`hemo`]: the limit-cycle waveform model producing ECG and BP
//! - [`resp`]: respiratory-rate chain and respiration waveforms
//! - [`scr`]: skin-conductance synthesis from sudomotor bursts
//! - [`dsp`]: shared filtering, spectral and feature-extraction utilities
//!
//! All randomness flows through explicit seeds; identical inputs produce
//! identical outputs, bit for bit.

pub mod bvh;
pub mod cardio;
pub mod dsp;
pub mod hemo;
pub mod neural;
pub mod resp;
pub mod scenario;
pub mod scr;
pub mod styletx;
