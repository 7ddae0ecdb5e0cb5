//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gesture_forge::config::{load_config_file, ModeSelection, PartialConfig, RunConfig};
use gesture_forge::pipeline::{
    run_cluster_dump, run_detect_dump, run_evaluate, run_gesture_dump, run_ingest_check,
    write_text_output, StageOutcome, EXIT_FATAL,
};
use gesture_forge::report::{report_to_json, summary_csv};
use gesture_forge::synth::{generate_cohort, CohortConfig};

#[derive(Parser)]
#[command(
    name = "gesture-forge",
    about = "Segment AU intensity traces into events, cluster them into facial gestures, and rank stimulus-locked responses",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every pipeline stage; each maps onto a config-file
/// key and overrides it when given.
#[derive(Args)]
struct PipelineArgs {
    /// Directory of per-subject AU trace CSV files
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Stimulus schedule CSV (subject_id,stimulus_index,time_s)
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// key=value config file; CLI flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frame confidence below this marks the frame invalid
    #[arg(long)]
    confidence_floor: Option<f64>,
    /// Reject traces with a smaller fraction of valid frames
    #[arg(long)]
    min_valid_fraction: Option<f64>,
    /// Smoothed intensity at or above this counts as active
    #[arg(long)]
    activation_threshold: Option<f64>,
    /// Discard events shorter than this many frames
    #[arg(long)]
    min_duration_frames: Option<usize>,
    /// Odd moving-average width in frames
    #[arg(long)]
    smoothing_window: Option<usize>,
    /// Message damping in [0.5, 1.0)
    #[arg(long)]
    damping: Option<f64>,
    /// Exemplar preference; omit for the median off-diagonal similarity.
    /// More negative values merge more events per gesture
    #[arg(long, allow_negative_numbers = true)]
    preference: Option<f64>,
    /// Maximum message-passing iterations
    #[arg(long)]
    max_iter: Option<usize>,
    /// Iterations the exemplar set must hold to declare convergence
    #[arg(long)]
    convergence_iter: Option<usize>,
    /// Worker threads (0 = automatic); GESTURE_FORGE_THREADS overrides
    #[arg(long)]
    threads: Option<usize>,
}

impl PipelineArgs {
    fn to_partial(&self) -> PartialConfig {
        PartialConfig {
            traces_dir: self.traces.clone(),
            schedule_path: self.schedule.clone(),
            confidence_floor: self.confidence_floor,
            min_valid_fraction: self.min_valid_fraction,
            activation_threshold: self.activation_threshold,
            min_duration_frames: self.min_duration_frames,
            smoothing_window: self.smoothing_window,
            damping: self.damping,
            preference: self.preference,
            max_iter: self.max_iter,
            convergence_iter: self.convergence_iter,
            threads: self.threads,
            ..PartialConfig::default()
        }
    }

    /// defaults < config file < CLI flags.
    fn resolve(&self) -> Result<RunConfig, String> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            let file = load_config_file(path).map_err(|e| e.to_string())?;
            file.apply_to(&mut config);
        }
        self.to_partial().apply_to(&mut config);
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate traces (and optionally the schedule) without
    /// running the pipeline
    IngestCheck {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Segment AU channels into events and dump them as CSV
    Detect {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster events into gestures and dump assignments as CSV
    Cluster {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Also dump per-iteration convergence diagnostics
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Run the full pipeline and report ranking metrics
    Evaluate {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Evaluation mode
        #[arg(long, value_parser = parse_mode)]
        mode: Option<ModeSelection>,
        /// One-sided response window after each stimulus, seconds
        #[arg(long)]
        window: Option<f64>,
        /// Extra comma-separated Top-k cutoffs, e.g. 2,10,20
        #[arg(long, value_delimiter = ',')]
        topk_list: Option<Vec<usize>>,
        /// Write the JSON report here
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Write the one-row-per-mode CSV summary here
        #[arg(long)]
        summary_out: Option<PathBuf>,
        /// Also dump featurized gestures as CSV
        #[arg(long)]
        dump_gestures: Option<PathBuf>,
    },
    /// Generate a seeded synthetic cohort in the ingest formats
    Synth {
        /// Number of subjects
        #[arg(long)]
        subjects: usize,
        /// Master seed; per-subject seeds derive from it
        #[arg(long)]
        seed: u64,
        /// Output directory (traces/, schedule.csv, ground_truth.json)
        #[arg(long)]
        out: PathBuf,
        /// Frames per second
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        /// Trace length in seconds
        #[arg(long, default_value_t = 300.0)]
        length: f64,
        /// Comma-separated stimulus times in seconds
        #[arg(long, default_value = "20,60,100", value_delimiter = ',')]
        stimuli: Vec<f64>,
        /// AUs per subject response template
        #[arg(long, default_value_t = 4)]
        template_aus: usize,
        /// Distractor gestures per subject
        #[arg(long, default_value_t = 40)]
        distractors: usize,
        /// Gaussian sigma for response onset jitter, seconds
        #[arg(long, default_value_t = 0.0)]
        time_jitter: f64,
        /// Gaussian sigma for response apex intensity jitter
        #[arg(long, default_value_t = 0.0)]
        intensity_jitter: f64,
        /// Let distractors land inside response windows (flinches)
        #[arg(long)]
        allow_flinches: bool,
    },
}

fn parse_mode(text: &str) -> Result<ModeSelection, String> {
    ModeSelection::parse(text).ok_or_else(|| format!("expected sd, si, or both, got '{text}'"))
}

fn print_stage(outcome: &StageOutcome) {
    for line in &outcome.lines {
        println!("{line}");
    }
    if !outcome.failures.is_empty() {
        eprintln!("{} subject(s) failed", outcome.failures.len());
    }
}

fn fatal(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_FATAL as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::IngestCheck { pipeline } => {
            let config = match pipeline.resolve() {
                Ok(c) => c,
                Err(e) => return fatal(e),
            };
            let check_schedule = config.schedule_path.as_os_str().len() > 0;
            match run_ingest_check(&config, check_schedule) {
                Ok(outcome) => {
                    print_stage(&outcome);
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => fatal(e),
            }
        }
        Command::Detect { pipeline, out } => {
            let config = match pipeline.resolve() {
                Ok(c) => c,
                Err(e) => return fatal(e),
            };
            match run_detect_dump(&config, &out) {
                Ok(outcome) => {
                    print_stage(&outcome);
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => fatal(e),
            }
        }
        Command::Cluster { pipeline, out, diagnostics } => {
            let config = match pipeline.resolve() {
                Ok(c) => c,
                Err(e) => return fatal(e),
            };
            match run_cluster_dump(&config, &out, diagnostics.as_deref()) {
                Ok(outcome) => {
                    print_stage(&outcome);
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => fatal(e),
            }
        }
        Command::Evaluate {
            pipeline,
            mode,
            window,
            topk_list,
            report_out,
            summary_out,
            dump_gestures,
        } => {
            let mut config = match pipeline.resolve() {
                Ok(c) => c,
                Err(e) => return fatal(e),
            };
            let overrides = PartialConfig {
                mode,
                response_window: window,
                topk_list,
                report_out,
                summary_out,
                ..PartialConfig::default()
            };
            overrides.apply_to(&mut config);

            if let Some(path) = &dump_gestures {
                if let Err(e) = run_gesture_dump(&config, path) {
                    return fatal(e);
                }
            }
            match run_evaluate(&config) {
                Ok(outcome) => {
                    if config.report_out.is_none() {
                        if let Err(e) =
                            write_text_output(None, &report_to_json(&outcome.report))
                        {
                            return fatal(e);
                        }
                    }
                    // The summary always lands somewhere visible.
                    if config.summary_out.is_none() {
                        print!("{}", summary_csv(&outcome.report));
                    }
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => fatal(e),
            }
        }
        Command::Synth {
            subjects,
            seed,
            out,
            fps,
            length,
            stimuli,
            template_aus,
            distractors,
            time_jitter,
            intensity_jitter,
            allow_flinches,
        } => {
            let config = CohortConfig {
                subjects,
                fps,
                length_s: length,
                stimulus_times: stimuli,
                template_au_count: template_aus,
                time_jitter_s: time_jitter,
                intensity_jitter,
                distractor_count: distractors,
                avoid_response_windows: !allow_flinches,
            };
            match generate_cohort(&config, seed, &out) {
                Ok(manifest) => {
                    println!(
                        "wrote {} subjects to {} (schedule: {}, ground truth: {})",
                        manifest.subject_ids.len(),
                        manifest.trace_dir.display(),
                        manifest.schedule_path.display(),
                        manifest.ground_truth_path.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fatal(e),
            }
        }
    }
}
