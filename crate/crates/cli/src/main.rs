//! Command-line interface. Exit codes: 0 success, 1 input validation
//! error, 2 runtime error.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use vitasim::dsp::FeatureVariant;
use vitasim::scenario::{validate_scenario, Scenario, ScenarioEvent, SubjectProfile};
use vitasim::{bvh, cardio, resp, scr, styletx};

use vitasim_cli::config::{
    DirectionTable, EmotionCoords, Magnitudes, WaveBlocks, DEFAULT_DIRECTION_TABLE,
    DEFAULT_EMOTION_COORDS, DEFAULT_MAGNITUDES, DEFAULT_MET_TABLE, DEFAULT_WAVE_PARAMS,
};
use vitasim_cli::datagen::make_training_set;
use vitasim_cli::evaldir::eval_directions;
use vitasim_cli::fileio;
use vitasim_cli::pipeline::{run_synthesis, RunManifest, SampleRates, WeightSet};

#[derive(Parser)]
#[command(
    name = "vitasim",
    version,
    about = "Synthesize synchronized physiological signals and stylized skeletal motion from action/emotion timelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Hr,
    Rr,
    Scr,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    #[value(name = "6")]
    Six,
    #[value(name = "13")]
    Thirteen,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize ECG, BP, respiration and SCR channels for a scenario.
    Synth {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run seed; defaults to the profile seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory holding hr.json / rr.json / scr.json trained weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Action label -> MET table (JSON); defaults to the built-in table.
        #[arg(long)]
        met_table: Option<PathBuf>,
        /// ECG/BP wave parameter file; defaults to the built-in blocks.
        #[arg(long)]
        wave_params: Option<PathBuf>,
    },
    /// Spectral emotion style transfer between BVH clips.
    Style {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        style_source: PathBuf,
        #[arg(long = "style-ref")]
        style_ref: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one of the emotion models from a CSV dataset.
    Train {
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate the synthetic training CSVs from the direction table.
    MakeData {
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        coords: Option<PathBuf>,
        #[arg(long)]
        magnitudes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Synthesize per-emotion signals and score feature directions against
    /// the expected-direction table.
    EvalDirections {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        coords: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Subject profile; defaults to a 30-year-old male, resting 64 bpm.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract windowed feature vectors from a channel CSV.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        variant: Variant,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pearson correlation between two (t,value) CSV series.
    Correlate {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

struct Failure {
    code: i32,
    error: anyhow::Error,
}

fn validation(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

fn runtime(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn main() {
    let cli = Cli::parse();
    if let Err(f) = dispatch(cli) {
        eprintln!("error: {:#}", f.error);
        std::process::exit(f.code);
    }
}

fn load_or_default<T>(
    path: &Option<PathBuf>,
    default: &str,
    parse: impl Fn(&str) -> Result<T>,
) -> Result<T> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse(&text)
        }
        None => parse(default),
    }
}

fn load_profile(path: &Path) -> Result<SubjectProfile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let profile: SubjectProfile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    profile.validate()?;
    Ok(profile)
}

fn load_scenario(path: &Path, met_table: &bvh::MetTable) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let events: Vec<ScenarioEvent> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let scenario = Scenario::from_events(events).resolve(met_table)?;
    Ok(validate_scenario(scenario)?)
}

fn load_weight_set(dir: &Path) -> Result<(WeightSet, std::collections::BTreeMap<String, String>)> {
    let mut set = WeightSet::default();
    let mut digests = std::collections::BTreeMap::new();
    for task in ["hr", "rr", "scr"] {
        let path = dir.join(format!("{task}.json"));
        if path.exists() {
            let w = fileio::load_weights(&path)?;
            digests.insert(task.to_string(), fileio::sha256_hex(&path)?);
            match task {
                "hr" => set.hr = Some(w),
                "rr" => set.rr = Some(w),
                _ => set.scr = Some(w),
            }
        }
    }
    Ok((set, digests))
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth {
            profile,
            scenario,
            out,
            seed,
            weights,
            met_table,
            wave_params,
        } => {
            let profile = load_profile(&profile).map_err(validation)?;
            let table = load_or_default(&met_table, DEFAULT_MET_TABLE, |t| {
                let table: bvh::MetTable = serde_json::from_str(t).context("MET table JSON")?;
                table.validate()?;
                Ok(table)
            })
            .map_err(validation)?;
            let scenario = load_scenario(&scenario, &table).map_err(validation)?;
            let waves = load_or_default(&wave_params, DEFAULT_WAVE_PARAMS, WaveBlocks::parse)
                .map_err(validation)?;
            let (weight_set, digests) = match &weights {
                Some(dir) => load_weight_set(dir).map_err(validation)?,
                None => (WeightSet::default(), Default::default()),
            };
            let seed = seed.unwrap_or(profile.seed);

            let output =
                run_synthesis(&profile, &scenario, &weight_set, seed, &waves).map_err(runtime)?;
            let manifest = RunManifest {
                profile,
                scenario,
                sample_rates: SampleRates::default(),
                seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                weight_digests: digests,
            };
            fileio::write_bundle(&out, &output, &manifest).map_err(runtime)?;
            println!("wrote bundle to {}", out.display());
            Ok(())
        }

        Command::Style {
            target,
            style_source,
            style_ref,
            out,
        } => {
            let load = |p: &Path| -> Result<bvh::MotionClip> {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(bvh::parse_bvh(&text)?)
            };
            let target_clip = load(&target).map_err(validation)?;
            let source_clip = load(&style_source).map_err(validation)?;
            let ref_clip = load(&style_ref).map_err(validation)?;
            let stylized = styletx::transfer_style(&target_clip, &source_clip, &ref_clip)
                .map_err(|e| validation(e.into()))?;
            fs::write(&out, bvh::write_bvh(&stylized))
                .with_context(|| format!("writing {}", out.display()))
                .map_err(runtime)?;
            println!("wrote stylized clip to {}", out.display());
            Ok(())
        }

        Command::Train {
            task,
            data,
            out,
            seed,
        } => {
            let weights = match task {
                Task::Hr => {
                    let rows = fileio::read_hr_csv(&data).map_err(validation)?;
                    cardio::train_emotion_hr(&rows, seed).map_err(|e| runtime(e.into()))?
                }
                Task::Rr => {
                    let rows = fileio::read_rr_csv(&data).map_err(validation)?;
                    resp::train_emotion_rr(&rows, seed).map_err(|e| runtime(e.into()))?
                }
                Task::Scr => {
                    let rows = fileio::read_scr_csv(&data).map_err(validation)?;
                    let cfg = scr::ScrTrainConfig {
                        seed,
                        ..scr::ScrTrainConfig::default()
                    };
                    scr::train_scr(&rows, &cfg).map_err(|e| runtime(e.into()))?
                }
            };
            fileio::save_weights(&out, &weights).map_err(runtime)?;
            println!("wrote weights to {}", out.display());
            Ok(())
        }

        Command::MakeData {
            table,
            coords,
            magnitudes,
            out,
            seed,
        } => {
            let table = load_or_default(&table, DEFAULT_DIRECTION_TABLE, DirectionTable::parse)
                .map_err(validation)?;
            let coords = load_or_default(&coords, DEFAULT_EMOTION_COORDS, EmotionCoords::parse)
                .map_err(validation)?;
            let magnitudes = load_or_default(&magnitudes, DEFAULT_MAGNITUDES, Magnitudes::parse)
                .map_err(validation)?;
            let bundles =
                make_training_set(&table, &coords, &magnitudes, seed).map_err(runtime)?;
            fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))
                .map_err(runtime)?;
            fileio::write_hr_csv(&out.join("hr.csv"), &bundles.hr).map_err(runtime)?;
            fileio::write_rr_csv(&out.join("rr.csv"), &bundles.rr).map_err(runtime)?;
            fileio::write_scr_csv(&out.join("scr.csv"), &bundles.scr).map_err(runtime)?;
            println!(
                "wrote {} HR rows, {} RR rows, {} SCR rows to {}",
                bundles.hr.len(),
                bundles.rr.len(),
                bundles.scr.len(),
                out.display()
            );
            Ok(())
        }

        Command::EvalDirections {
            weights,
            table,
            coords,
            report,
            profile,
            seed,
        } => {
            let table = load_or_default(&table, DEFAULT_DIRECTION_TABLE, DirectionTable::parse)
                .map_err(validation)?;
            let coords = load_or_default(&coords, DEFAULT_EMOTION_COORDS, EmotionCoords::parse)
                .map_err(validation)?;
            let waves = WaveBlocks::parse(DEFAULT_WAVE_PARAMS).map_err(validation)?;
            let profile = match &profile {
                Some(p) => load_profile(p).map_err(validation)?,
                None => default_eval_profile(),
            };
            let (weight_set, _) = load_weight_set(&weights).map_err(validation)?;
            if weight_set.hr.is_none() || weight_set.rr.is_none() || weight_set.scr.is_none() {
                return Err(validation(anyhow::anyhow!(
                    "weights directory {} must contain hr.json, rr.json and scr.json",
                    weights.display()
                )));
            }

            let result = eval_directions(&profile, &weight_set, &table, &coords, &waves, seed)
                .map_err(runtime)?;
            let json = serde_json::to_string_pretty(&result)
                .context("serializing report")
                .map_err(runtime)?;
            fs::write(&report, json)
                .with_context(|| format!("writing {}", report.display()))
                .map_err(runtime)?;
            for cell in result.cells.iter().filter(|c| c.matched == Some(false)) {
                println!(
                    "mismatch: {}/{} expected {} measured {:?} (delta {:+.4})",
                    cell.feature, cell.emotion, cell.expected, cell.measured, cell.delta
                );
            }
            println!(
                "{} of {} cells matched, error rate {:.2}%",
                result.populated_cells - result.mismatches,
                result.populated_cells,
                100.0 * result.error_rate
            );
            Ok(())
        }

        Command::Features {
            input,
            variant,
            out,
        } => {
            let channel =
                fileio::read_channel_csv(&input, "signal", "au").map_err(validation)?;
            let variant = match variant {
                Variant::Six => FeatureVariant::Six,
                Variant::Thirteen => FeatureVariant::Thirteen,
            };
            let vectors = vitasim::dsp::window_feature_vector(&channel, variant)
                .map_err(|e| runtime(e.into()))?;
            let mut text = String::from("t_start");
            for name in variant.names() {
                text.push(',');
                text.push_str(name);
            }
            text.push('\n');
            for (i, fv) in vectors.iter().enumerate() {
                text.push_str(&format!("{:.6}", i as f64 * 3.0));
                for v in &fv.values {
                    text.push_str(&format!(",{v:.6}"));
                }
                text.push('\n');
            }
            fs::write(&out, text)
                .with_context(|| format!("writing {}", out.display()))
                .map_err(runtime)?;
            println!("wrote {} windows to {}", vectors.len(), out.display());
            Ok(())
        }

        Command::Correlate { a, b } => {
            let ca = fileio::read_channel_csv(&a, "a", "au").map_err(validation)?;
            let cb = fileio::read_channel_csv(&b, "b", "au").map_err(validation)?;
            let t_a: Vec<f64> = (0..ca.samples.len())
                .map(|i| i as f64 / ca.sample_rate)
                .collect();
            let t_b: Vec<f64> = (0..cb.samples.len())
                .map(|i| i as f64 / cb.sample_rate)
                .collect();
            let r = fileio::pearson_on_common_grid(&t_a, &ca.samples, &t_b, &cb.samples)
                .map_err(runtime)?;
            println!("pearson_r = {r:.6}");
            Ok(())
        }
    }
}

/// Built-in evaluation subject, documented in the README.
fn default_eval_profile() -> SubjectProfile {
    SubjectProfile {
        age: 30,
        gender: vitasim::scenario::Gender::Male,
        lambda: 0.7,
        hr_rest: 64.0,
        hr_min_override: None,
        vo2max_offset: 0.0,
        seed: 1,
    }
}
