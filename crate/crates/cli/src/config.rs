//! Configuration files: the expected-direction table, emotion coordinates,
//! training-set magnitude ranges, and the waveform parameter blocks.
//!
//! Defaults are embedded from `data/`; every file can be overridden on the
//! command line. Emotion coordinates in particular are editable user data,
//! not ground truth.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vitasim::dsp::Direction;
use vitasim::hemo::WaveParams;

pub const DEFAULT_DIRECTION_TABLE: &str = include_str!("../data/direction_table.json");
pub const DEFAULT_EMOTION_COORDS: &str = include_str!("../data/emotion_coords.json");
pub const DEFAULT_MAGNITUDES: &str = include_str!("../data/magnitudes.json");
pub const DEFAULT_MET_TABLE: &str = include_str!("../data/met_table.json");
pub const DEFAULT_WAVE_PARAMS: &str = include_str!("../data/wave_params.json");

/// What a table cell allows: one or more acceptable directions, optionally
/// marked tentative (parenthesized in the source table; matched the same
/// way, the flag is informative).
#[derive(Debug, Clone, PartialEq)]
pub struct CellExpectation {
    pub directions: Vec<Direction>,
    pub tentative: bool,
}

impl CellExpectation {
    /// Parse the cell grammar: `up`, `down`, `none`, `both` (= up|down),
    /// alternatives joined with `|`, optional surrounding parentheses for
    /// tentative entries. Empty strings mean "no data".
    pub fn parse(cell: &str) -> Result<Option<CellExpectation>> {
        let trimmed = cell.trim();
        if trimmed.is_empty() {
            return Ok(None);
        }
        let (body, tentative) = match trimmed.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
            Some(inner) => (inner, true),
            None => (trimmed, false),
        };
        let mut directions = Vec::new();
        for token in body.split('|') {
            match token.trim() {
                "up" => directions.push(Direction::Up),
                "down" => directions.push(Direction::Down),
                "none" => directions.push(Direction::None),
                "both" => {
                    directions.push(Direction::Up);
                    directions.push(Direction::Down);
                }
                other => bail!("unknown direction token {other:?} in cell {cell:?}"),
            }
        }
        Ok(Some(CellExpectation { directions, tentative }))
    }

    pub fn matches(&self, measured: Direction) -> bool {
        self.directions.contains(&measured)
    }

    /// The direction the synthetic training set teaches for this cell.
    /// Multi-direction cells ("both") pick a sign with the caller-provided
    /// chooser so the pick is stable per dataset seed.
    pub fn training_direction(&self, pick_up: bool) -> Direction {
        if self.directions.len() == 1 {
            self.directions[0]
        } else if self.directions.contains(&Direction::Up) && self.directions.contains(&Direction::Down)
        {
            if pick_up {
                Direction::Up
            } else {
                Direction::Down
            }
        } else {
            // mixed with none, e.g. "up|none": teach the directional option
            *self
                .directions
                .iter()
                .find(|d| **d != Direction::None)
                .unwrap_or(&Direction::None)
        }
    }
}

/// Expected response directions per signal feature and emotion.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct DirectionTable {
    pub features: Vec<String>,
    pub emotions: Vec<String>,
    /// feature -> emotion -> cell string; absent entries are empty cells.
    pub cells: BTreeMap<String, BTreeMap<String, String>>,
}

impl DirectionTable {
    pub fn parse(json: &str) -> Result<Self> {
        let table: DirectionTable = serde_json::from_str(json).context("direction table JSON")?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        const KNOWN: [&str; 7] = ["hr", "hrv", "sbp", "dbp", "lvet", "rr", "scr"];
        if self.emotions.is_empty() {
            bail!("direction table lists no emotions");
        }
        for f in &self.features {
            if !KNOWN.contains(&f.as_str()) {
                bail!("unknown feature {f:?} (expected one of {KNOWN:?})");
            }
        }
        for (feature, row) in &self.cells {
            if !self.features.contains(feature) {
                bail!("cells reference undeclared feature {feature:?}");
            }
            for (emotion, cell) in row {
                if !self.emotions.contains(emotion) {
                    bail!("cells reference undeclared emotion {emotion:?}");
                }
                CellExpectation::parse(cell)?;
            }
        }
        Ok(())
    }

    pub fn expectation(&self, feature: &str, emotion: &str) -> Option<CellExpectation> {
        let cell = self.cells.get(feature)?.get(emotion)?;
        CellExpectation::parse(cell).ok().flatten()
    }

    /// Count of non-empty cells: the denominator of the match rate.
    pub fn populated_cells(&self) -> usize {
        self.features
            .iter()
            .flat_map(|f| self.emotions.iter().map(move |e| (f, e)))
            .filter(|(f, e)| self.expectation(f, e).is_some())
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
pub struct Coord {
    pub valence: f64,
    pub arousal: f64,
}

/// Valence/arousal coordinates per emotion name, on the 1-9 scale.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(transparent)]
pub struct EmotionCoords {
    pub coords: BTreeMap<String, Coord>,
}

impl EmotionCoords {
    pub fn parse(json: &str) -> Result<Self> {
        let coords: EmotionCoords = serde_json::from_str(json).context("emotion coordinates JSON")?;
        for (name, c) in &coords.coords {
            if !(1.0..=9.0).contains(&c.valence) || !(1.0..=9.0).contains(&c.arousal) {
                bail!("coordinates for {name:?} leave the 1-9 scale: {c:?}");
            }
        }
        Ok(coords)
    }

    pub fn get(&self, emotion: &str) -> Result<Coord> {
        self.coords
            .get(emotion)
            .copied()
            .with_context(|| format!("no coordinates configured for emotion {emotion:?}"))
    }
}

/// Magnitude ranges the synthetic training sets draw from.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Magnitudes {
    pub delta_hr_bpm: [f64; 2],
    pub delta_hrv_s: [f64; 2],
    pub delta_rr_bpm: [f64; 2],
    pub scr_up_us: [f64; 2],
    pub scr_down_us: [f64; 2],
    pub scr_neutral_us: [f64; 2],
    pub coordinate_jitter: f64,
    pub rows_per_emotion: usize,
    pub neutral_row_multiplier: usize,
}

impl Magnitudes {
    pub fn parse(json: &str) -> Result<Self> {
        let m: Magnitudes = serde_json::from_str(json).context("magnitudes JSON")?;
        for range in [
            m.delta_hr_bpm,
            m.delta_hrv_s,
            m.delta_rr_bpm,
            m.scr_up_us,
            m.scr_down_us,
            m.scr_neutral_us,
        ] {
            if !(range[0] >= 0.0 && range[0] <= range[1]) {
                bail!("magnitude range {range:?} is not ordered and nonnegative");
            }
        }
        Ok(m)
    }
}

/// ECG and BP parameter blocks, loadable as one JSON document.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct WaveBlocks {
    pub ecg: WaveParams,
    pub bp: WaveParams,
}

impl WaveBlocks {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).context("wave parameter JSON")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_parses_with_63_cells() {
        let t = DirectionTable::parse(DEFAULT_DIRECTION_TABLE).unwrap();
        assert_eq!(t.features.len(), 7);
        assert_eq!(t.emotions.len(), 13);
        assert_eq!(t.populated_cells(), 63);
    }

    #[test]
    fn default_coords_cover_table_emotions_and_neutral() {
        let t = DirectionTable::parse(DEFAULT_DIRECTION_TABLE).unwrap();
        let c = EmotionCoords::parse(DEFAULT_EMOTION_COORDS).unwrap();
        for e in &t.emotions {
            c.get(e).unwrap();
        }
        c.get("neutral").unwrap();
    }

    #[test]
    fn cell_grammar() {
        let up = CellExpectation::parse("up").unwrap().unwrap();
        assert_eq!(up.directions, vec![Direction::Up]);
        assert!(!up.tentative);

        let tentative = CellExpectation::parse("(down)").unwrap().unwrap();
        assert_eq!(tentative.directions, vec![Direction::Down]);
        assert!(tentative.tentative);

        let both = CellExpectation::parse("both").unwrap().unwrap();
        assert!(both.matches(Direction::Up) && both.matches(Direction::Down));
        assert!(!both.matches(Direction::None));

        let up_or_none = CellExpectation::parse("up|none").unwrap().unwrap();
        assert!(up_or_none.matches(Direction::Up));
        assert!(up_or_none.matches(Direction::None));
        assert_eq!(up_or_none.training_direction(false), Direction::Up);

        assert!(CellExpectation::parse("").unwrap().is_none());
        assert!(CellExpectation::parse("sideways").is_err());
    }

    #[test]
    fn default_magnitudes_and_waves_parse() {
        Magnitudes::parse(DEFAULT_MAGNITUDES).unwrap();
        let w = WaveBlocks::parse(DEFAULT_WAVE_PARAMS).unwrap();
        let built_in = WaveParams::ecg();
        for i in 0..5 {
            assert!((w.ecg.theta[i] - built_in.theta[i]).abs() < 1e-12);
            assert_eq!(w.ecg.a[i], built_in.a[i]);
            assert_eq!(w.ecg.b[i], built_in.b[i]);
        }
        let bp = WaveParams::bp();
        for i in 0..5 {
            assert!((w.bp.theta[i] - bp.theta[i]).abs() < 1e-12);
        }
    }
}
