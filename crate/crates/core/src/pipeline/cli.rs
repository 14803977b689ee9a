//! Command-line front end. Exit codes: 0 success, 2 invalid input, 3 infeasible
//! placement, 4 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::commands::*;
use super::config::{pick, PipelineConfig};
use super::formats::{BetaListDoc, Versioned};
use crate::body::ShapeParams;
use crate::error::{Error, Result};
use crate::fit::{FitConfig, Objective};
use crate::placement::{CmaConfig, PlacementOutcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "scanrig", version, about = "Fit, retarget, animate and place scanned humans")]
pub struct Cli {
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the body model to a scan and a 3D skeleton or multi-view keypoints.
    Fit(FitArgs),
    /// Unpose and reshape a fitted scan into rigged assets, one per shape.
    Retarget(RetargetArgs),
    /// Pose a rigged asset with an animation clip.
    Animate(AnimateArgs),
    /// Place animated assets in a scene without collisions.
    Place(PlaceArgs),
    /// Compare a mesh with a reference (V2V, Chamfer, inside fraction).
    Eval(EvalArgs),
    /// Write the demo body, a synthetic scan bundle, clips and a scene.
    Generate(GenerateArgs),
    /// Run every stage on synthetic data.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Scan mesh (OBJ).
    #[arg(long)]
    pub scan: Option<PathBuf>,
    /// Body model (JSON); the built-in demo body when omitted.
    #[arg(long)]
    pub body: Option<PathBuf>,
    /// Cameras and 2D keypoints (JSON), triangulated into a skeleton.
    #[arg(long)]
    pub keypoints: Option<PathBuf>,
    /// 3D skeleton (JSON); takes precedence over --keypoints.
    #[arg(long)]
    pub skeleton: Option<PathBuf>,
    /// Mesh with the body topology to report V2V against.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Stop after the joints-only stage.
    #[arg(long)]
    pub joints_only: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pipeline config (JSON); its values override flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RetargetArgs {
    #[arg(long)]
    pub scan: Option<PathBuf>,
    /// fit.json written by `scanrig fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub body: Option<PathBuf>,
    /// Shape list (JSON with a `betas` array); otherwise shapes are sampled.
    #[arg(long)]
    pub betas: Option<PathBuf>,
    /// Number of sampled shapes.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// Standard deviation of sampled shapes.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnimateArgs {
    /// Asset directory written by `scanrig retarget`.
    #[arg(long)]
    pub asset: PathBuf,
    #[arg(long)]
    pub clip: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlaceArgs {
    /// Scene (JSON).
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// ASSET_DIR=CLIP pair; repeat for every subject.
    #[arg(long = "sequence", value_parser = parse_pair)]
    pub sequences: Vec<(PathBuf, PathBuf)>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_generations: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    /// Fail unless V2V can be computed.
    #[arg(long)]
    pub v2v: bool,
    /// Metrics file (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of reshaped assets.
    #[arg(long, default_value_t = 4)]
    pub assets: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(PathBuf, PathBuf), String> {
    let (a, c) = s
        .split_once('=')
        .ok_or_else(|| format!("expected ASSET_DIR=CLIP, got {s:?}"))?;
    Ok((PathBuf::from(a), PathBuf::from(c)))
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) | Error::DegenerateRotation(_) => EXIT_NUMERICAL,
        _ => EXIT_INVALID,
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::read(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn required(value: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    value.ok_or_else(|| Error::InvalidArgument(format!("{flag} is required")))
}

fn read_betas(path: &Path, dim: usize) -> Result<Vec<ShapeParams>> {
    let doc = BetaListDoc::read(path)?;
    doc.betas
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            if b.len() != dim {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    field: format!("betas[{i}]"),
                    msg: format!("expected {dim} values, found {}", b.len()),
                });
            }
            Ok(ShapeParams { beta: b })
        })
        .collect()
}

/// Run a parsed command; returns the process exit code and prints a summary.
pub fn run(cli: Cli) -> u8 {
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Fit(a) => {
            let cfg = load_config(&a.config)?;
            let mut fit = cfg.fit.clone().unwrap_or_default();
            if a.joints_only && cfg.fit.is_none() {
                fit.objective = Objective::JointsOnly;
            }
            let inputs = FitInputs {
                scan: required(pick(&cfg.scan, a.scan), "--scan")?,
                body: pick(&cfg.body, a.body),
                keypoints: pick(&cfg.keypoints, a.keypoints),
                skeleton: pick(&cfg.skeleton, a.skeleton),
                reference: a.reference,
                out: required(pick(&cfg.output_dir, a.out), "--out")?,
                config: fit,
            };
            let doc = run_fit(&inputs)?;
            let r = &doc.result;
            println!(
                "fit: {} outer iterations, objective {:.6}, inside {:.1}%, chamfer to scan {:.2} mm",
                r.outer_iterations,
                r.final_terms.total,
                100.0 * r.inside_fraction(),
                r.chamfer_to_scan_mm
            );
            if let Some(v) = doc.reference_v2v_mm {
                println!("V2V to reference: {v:.2} mm");
            }
            println!("wrote {}", inputs.out.display());
            Ok(EXIT_OK)
        }
        Command::Retarget(a) => {
            let cfg = load_config(&a.config)?;
            let scan = required(pick(&cfg.scan, a.scan), "--scan")?;
            let out = required(pick(&cfg.output_dir, a.out), "--out")?;
            let body_path = pick(&cfg.body, a.body);
            let dim = load_body(body_path.as_deref())?.num_shapes();
            let betas = match &a.betas {
                Some(p) => read_betas(p, dim)?,
                None => sample_betas(
                    cfg.shape_samples.unwrap_or(a.samples),
                    cfg.shape_scale.unwrap_or(a.scale),
                    dim,
                    cfg.seed.unwrap_or(a.seed),
                )?,
            };
            let manifest = run_retarget(&scan, &a.fit, body_path.as_deref(), &betas, &out)?;
            let ok = manifest.assets.iter().all(|x| x.weights_stochastic);
            println!(
                "retarget: {} assets, weight rows stochastic: {ok}, reconstruction error {:.3e} m",
                manifest.assets.len(),
                manifest.reconstruction_error
            );
            Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
        }
        Command::Animate(a) => {
            let index = run_animate(&a.asset, &a.clip, &a.out)?;
            println!("animate: {} frames at {} fps", index.frames.len(), index.fps);
            Ok(EXIT_OK)
        }
        Command::Place(a) => {
            let cfg = load_config(&a.config)?;
            let scene = required(pick(&cfg.scene, a.scene), "--scene")?;
            let out = required(pick(&cfg.output_dir, a.out), "--out")?;
            let mut cma = cfg.cma.clone().unwrap_or_else(|| CmaConfig {
                seed: a.seed,
                ..CmaConfig::default()
            });
            if cfg.cma.is_none() {
                if let Some(g) = a.max_generations {
                    cma.max_generations = g;
                }
            }
            if let Some(s) = cfg.seed {
                cma.seed = s;
            }
            let (doc, path) = run_place(&scene, &a.sequences, &cma, &out)?;
            match &doc.outcome {
                PlacementOutcome::Success(p) => {
                    println!("place: zero loss after {} generations, verified", p.generations);
                    Ok(EXIT_OK)
                }
                PlacementOutcome::Infeasible(f) => {
                    eprintln!(
                        "place: no feasible placement (best loss {} = {} collisions + {} out of bounds); report at {}",
                        f.best_loss.total,
                        f.best_loss.collisions,
                        f.best_loss.out_of_bounds,
                        path.display()
                    );
                    Ok(EXIT_INFEASIBLE)
                }
            }
        }
        Command::Eval(a) => {
            let m = run_eval(&a.mesh, &a.reference, a.v2v, &a.out)?;
            match m.v2v_mm {
                Some(v) => println!("V2V {v:.3} mm, Chamfer {:.3} mm, inside {:.1}%", m.chamfer_mm, 100.0 * m.inside_fraction),
                None => println!("Chamfer {:.3} mm, inside {:.1}%", m.chamfer_mm, 100.0 * m.inside_fraction),
            }
            Ok(EXIT_OK)
        }
        Command::Generate(a) => {
            run_generate(&a.out, a.seed)?;
            println!("wrote synthetic inputs to {}", a.out.display());
            Ok(EXIT_OK)
        }
        Command::Demo(a) => {
            let cfg = load_config(&a.config)?;
            let out = required(pick(&cfg.output_dir, a.out), "--out")?;
            let mut opts = DemoOptions::new(out, cfg.seed.unwrap_or(a.seed));
            opts.assets = cfg.shape_samples.unwrap_or(a.assets);
            if let Some(s) = cfg.shape_scale {
                opts.shape_scale = s;
            }
            opts.fit = cfg.fit.clone().unwrap_or_else(FitConfig::default);
            if let Some(c) = &cfg.cma {
                opts.cma = c.clone();
            }
            let report = run_demo(&opts)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            println!(
                "demo: fit V2V {:.2} mm, inside {:.1}%, placement loss {}",
                report.fit_v2v_mm,
                100.0 * report.fit_inside_fraction,
                report.placement.total
            );
            if report.all_passed() {
                Ok(EXIT_OK)
            } else if report.placement.total > 0 {
                Ok(EXIT_INFEASIBLE)
            } else {
                Ok(EXIT_NUMERICAL)
            }
        }
    }
}
