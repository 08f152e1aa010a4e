//! Synthetic training-set construction from the direction table.
//!
//! Benchmark affect datasets are not redistributable, so training data is
//! manufactured instead: for each emotion with a populated cell, samples
//! are drawn around its coordinate with delta signs taken from the table
//! and magnitudes from the configured ranges. Neutral rows pin all deltas
//! to zero.

use anyhow::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vitasim::cardio::HrTrainingSample;
use vitasim::dsp::Direction;
use vitasim::resp::RrTrainingSample;
use vitasim::scr::{self, Burst, BurstSet, ScrTrainingRow};

use crate::config::{DirectionTable, EmotionCoords, Magnitudes};

/// The three generated datasets.
#[derive(Debug, Clone)]
pub struct TrainingBundles {
    pub hr: Vec<HrTrainingSample>,
    pub rr: Vec<RrTrainingSample>,
    pub scr: Vec<ScrTrainingRow>,
}

/// Evaluation context the emotion-mode SCR rows are generated under:
/// seated activity, one fixed synthetic subject.
pub const SCR_CONTEXT_MET: f64 = 1.3;
pub const SCR_CONTEXT_AGE: u32 = 30;

fn draw(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] >= range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..range[1])
    }
}

fn signed(dir: Direction, magnitude: f64) -> f64 {
    match dir {
        Direction::Up => magnitude,
        Direction::Down => -magnitude,
        Direction::None => 0.0,
    }
}

/// Stable per-cell sign choice for "both" entries, derived from the seed so
/// the whole dataset teaches one consistent direction.
fn pick_up(seed: u64, feature: &str, emotion: &str) -> bool {
    let mut h: u64 = seed ^ 0x9e37_79b9_7f4a_7c15;
    for b in feature.bytes().chain(emotion.bytes()) {
        h = h.wrapping_mul(0x100_0000_01b3).wrapping_add(b as u64);
    }
    h & 1 == 0
}

/// Generate all three training sets. Deterministic per seed.
pub fn make_training_set(
    table: &DirectionTable,
    coords: &EmotionCoords,
    magnitudes: &Magnitudes,
    seed: u64,
) -> Result<TrainingBundles> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = magnitudes.coordinate_jitter;
    let neutral = coords.get("neutral")?;

    let mut hr = Vec::new();
    let mut rr = Vec::new();
    let mut scr_rows = Vec::new();

    let mut emotions = table.emotions.clone();
    emotions.push("neutral".to_string());

    let mut window_index = 0u64;
    for emotion in &emotions {
        let is_neutral = emotion == "neutral";
        let coord = if is_neutral { neutral } else { coords.get(emotion)? };
        let rows = if is_neutral {
            magnitudes.rows_per_emotion * magnitudes.neutral_row_multiplier
        } else {
            magnitudes.rows_per_emotion
        };

        let hr_cell = table.expectation("hr", emotion);
        let hrv_cell = table.expectation("hrv", emotion);
        let rr_cell = table.expectation("rr", emotion);
        let scr_cell = table.expectation("scr", emotion);

        for _ in 0..rows {
            let v = (coord.valence + rng.gen_range(-jitter..=jitter)).clamp(1.0, 9.0);
            let a = (coord.arousal + rng.gen_range(-jitter..=jitter)).clamp(1.0, 9.0);

            // heart task rows: any emotion with an HR or HRV cell, plus
            // neutral; unpopulated outputs train toward zero
            if is_neutral || hr_cell.is_some() || hrv_cell.is_some() {
                let delta_hr = match &hr_cell {
                    Some(c) if !is_neutral => signed(
                        c.training_direction(pick_up(seed, "hr", emotion)),
                        draw(&mut rng, magnitudes.delta_hr_bpm),
                    ),
                    _ => 0.0,
                };
                let delta_hrv = match &hrv_cell {
                    Some(c) if !is_neutral => signed(
                        c.training_direction(pick_up(seed, "hrv", emotion)),
                        draw(&mut rng, magnitudes.delta_hrv_s),
                    ),
                    _ => 0.0,
                };
                hr.push(HrTrainingSample {
                    valence: v,
                    arousal: a,
                    delta_hr,
                    delta_hrv,
                });
            }

            if is_neutral || rr_cell.is_some() {
                let delta_rr = match &rr_cell {
                    Some(c) if !is_neutral => signed(
                        c.training_direction(pick_up(seed, "rr", emotion)),
                        draw(&mut rng, magnitudes.delta_rr_bpm),
                    ),
                    _ => 0.0,
                };
                rr.push(RrTrainingSample {
                    valence: v,
                    arousal: a,
                    delta_rr,
                });
            }

            if is_neutral || scr_cell.is_some() {
                let amp_range = match &scr_cell {
                    Some(c) if !is_neutral => {
                        match c.training_direction(pick_up(seed, "scr", emotion)) {
                            Direction::Up => magnitudes.scr_up_us,
                            Direction::Down => magnitudes.scr_down_us,
                            Direction::None => magnitudes.scr_neutral_us,
                        }
                    }
                    _ => magnitudes.scr_neutral_us,
                };
                scr_rows.push(scr_target_row(
                    v,
                    a,
                    amp_range,
                    window_index,
                    &mut rng,
                ));
                window_index += 1;
            }
        }
    }

    Ok(TrainingBundles {
        hr,
        rr,
        scr: scr_rows,
    })
}

/// Render one target SCR window: ten bursts on a jittered 6-second grid
/// with per-burst amplitudes from the level range (phasic only, baseline
/// excluded per the documented CSV schema).
fn scr_target_row(
    valence: f64,
    arousal: f64,
    amp_range: [f64; 2],
    window_index: u64,
    rng: &mut ChaCha8Rng,
) -> ScrTrainingRow {
    let bursts: Vec<Burst> = (0..scr::BURSTS_PER_WINDOW)
        .map(|k| Burst {
            tau: (3.0 + 6.0 * k as f64 + rng.gen_range(-1.5..1.5)).clamp(0.0, scr::WINDOW_S - 0.1),
            amplitude: draw(rng, amp_range),
        })
        .collect();
    let set = BurstSet::new(bursts).expect("generated bursts are in range");
    let channel = scr::synthesize_scr(&set, scr::WINDOW_S, scr::SCR_SAMPLE_RATE_HZ, 0.0)
        .expect("valid burst set");
    ScrTrainingRow {
        valence,
        arousal,
        met: SCR_CONTEXT_MET,
        age: SCR_CONTEXT_AGE,
        gender_female: false,
        window_start_s: (window_index % 60) as f64 * 60.0,
        target: channel.samples,
    }
}
