use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use cgpt::cgpt_engine::{compute_cgpt_about, CgptMatrix, ConductivityTarget, ExpansionCenter, DEFAULT_NODES};
use cgpt::dictionary::{
    build_dictionary, identification_probabilities, match_descriptors, run_identification_experiment, run_robustness,
    sense_spec, standard_specs, write_frequency_csv, Dictionary, ExperimentConfig, RobustnessConfig, SelectionRule,
    DEFAULT_ORDER,
};
use cgpt::geometry::{RigidMotion, ShapeSpec, Vec2};
use cgpt::invariants::{descriptors, DescriptorPair, DEFAULT_DESCRIPTOR_ORDER};
use cgpt::reconstruction::{build_acquisition, reconstruct_cgpt, write_diagnostics_csv};
use cgpt::sensing_sim::{
    add_noise, synthesize_msr, AcquisitionConfig, LayoutMode, MsrMatrix, ReceptorLayout, DEFAULT_HALF_ANGLE,
};
use cgpt::{Error, Result};

#[derive(Parser)]
#[command(name = "cgpt", version, about = "CGPT computation, electro-sensing simulation and dictionary classification")]
struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "CGPT_THREADS")]
    threads: Option<usize>,

    /// Log progress, condition numbers and seeds
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute CGPTs and descriptors of dictionary shapes and write them as JSON
    BuildDict {
        /// Comma-separated entry ids (default: all ten standard entries)
        #[arg(long, value_delimiter = ',')]
        shapes: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nq: usize,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        /// Truncate stored descriptors to this order
        #[arg(long, alias = "orders")]
        descriptor_order: Option<usize>,
        #[arg(long, default_value = "dictionary.json")]
        out: PathBuf,
    },
    /// CGPTs of one standard shape, optionally moved
    Cgpt {
        #[arg(long, default_value = "1a")]
        shapes: String,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nq: usize,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[command(flatten)]
        motion: MotionArgs,
        /// Output JSON (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize the MSR matrix of a moved dictionary shape
    Simulate {
        #[arg(long, default_value = "1a")]
        shapes: String,
        /// Dictionary file to take the shape from (standard entries when absent)
        #[arg(long)]
        dict: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nq: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        motion: MotionArgs,
        #[command(flatten)]
        acquisition: AcquisitionArgs,
        #[arg(long, default_value = "msr.csv")]
        out: PathBuf,
    },
    /// Least-squares CGPTs from an MSR file and its JSON sidecar
    Reconstruct {
        #[arg(long)]
        msr: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Match the descriptors of a CGPT file against a dictionary
    Match {
        #[arg(long)]
        dict: PathBuf,
        /// JSON written by `cgpt` or `reconstruct`
        #[arg(long)]
        cgpt: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DESCRIPTOR_ORDER)]
        order: usize,
    },
    /// Monte Carlo identification frequencies
    Experiment {
        #[arg(long)]
        dict: PathBuf,
        /// True targets, comma-separated
        #[arg(long, alias = "target", value_delimiter = ',', default_value = "1a")]
        shapes: Vec<String>,
        /// Relative noise levels σ0, comma-separated
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_DESCRIPTOR_ORDER)]
        descriptor_order: usize,
        /// Select by the trial-averaged error instead of per trial
        #[arg(long)]
        mean_error: bool,
        /// Quadrature nodes for the sensed target (default: the dictionary's)
        #[arg(long)]
        nq: Option<usize>,
        #[command(flatten)]
        motion: MotionArgs,
        #[command(flatten)]
        acquisition: AcquisitionArgs,
        #[arg(long, default_value = "frequencies.csv")]
        out: PathBuf,
    },
    /// Per-order reconstruction error of trial-averaged CGPTs
    Robustness {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long, alias = "target", default_value = "1b")]
        shapes: String,
        #[arg(long, value_delimiter = ',', default_value = "0,0.2")]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        /// Quadrature nodes for the sensed target (default: the dictionary's)
        #[arg(long)]
        nq: Option<usize>,
        #[command(flatten)]
        motion: MotionArgs,
        #[command(flatten)]
        acquisition: AcquisitionArgs,
        #[arg(long, default_value = "robustness.csv")]
        out: PathBuf,
    },
}

/// `x ↦ z + s·R(θ)x`; unset fields take the command's default motion.
#[derive(Args)]
struct MotionArgs {
    /// Scale factor s (default 0.5, or 1 for `cgpt`)
    #[arg(long)]
    scale: Option<f64>,
    /// Rotation angle in radians (default π/3, or 0 for `cgpt`)
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    zx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    zy: f64,
}

impl MotionArgs {
    fn resolve(&self, default_scale: f64, default_theta: f64) -> Result<RigidMotion> {
        RigidMotion::new(
            Vec2::new(self.zx, self.zy),
            self.theta.unwrap_or(default_theta),
            self.scale.unwrap_or(default_scale),
        )
    }

    /// The sensed target of the identification experiments: s = 0.5, θ = π/3.
    fn experiment(&self) -> Result<RigidMotion> {
        self.resolve(0.5, PI / 3.0)
    }
}

#[derive(Args)]
struct AcquisitionArgs {
    #[arg(long, default_value_t = 500)]
    positions: usize,
    #[arg(long, default_value_t = 512)]
    receptors: usize,
    /// 100 positions × 128 receptors
    #[arg(long)]
    desk: bool,
    #[arg(long, default_value_t = 1.5)]
    orbit_factor: f64,
    #[arg(long, default_value_t = DEFAULT_HALF_ANGLE)]
    half_angle: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    radial_offset: f64,
    /// One fixed receptor ring instead of receptors carried by the fish
    #[arg(long)]
    stationary: bool,
    #[arg(long, default_value_t = 8)]
    sim_order: usize,
}

impl AcquisitionArgs {
    fn config(&self, center: Vec2, seed: u64) -> AcquisitionConfig {
        let (n_positions, n_receptors) = if self.desk { (100, 128) } else { (self.positions, self.receptors) };
        AcquisitionConfig {
            n_positions,
            n_receptors,
            orbit_radius_factor: self.orbit_factor,
            target_center: [center.x, center.y],
            receptor_layout: ReceptorLayout {
                half_angle: self.half_angle,
                radial_offset: self.radial_offset,
                mode: if self.stationary { LayoutMode::Stationary } else { LayoutMode::Attached },
            },
            sim_order: self.sim_order,
            seed,
            ..Default::default()
        }
    }
}

/// CGPTs in the JSON exchanged between `cgpt`, `reconstruct` and `match`.
#[derive(Serialize, Deserialize)]
struct CgptRecord {
    id: Option<String>,
    cgpt: CgptMatrix,
    descriptors: Option<DescriptorPair>,
    condition: f64,
}

fn lookup_spec(id: &str, dict: Option<&Path>) -> Result<ShapeSpec> {
    match dict {
        Some(path) => Ok(Dictionary::load(path)?.get(id)?.spec.clone()),
        None => standard_specs()
            .into_iter()
            .find(|(sid, _)| sid == id)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::UnknownEntry(id.to_string())),
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn record(id: Option<String>, cgpt: CgptMatrix, condition: f64) -> CgptRecord {
    let descriptors = descriptors(&cgpt.to_complex(), DEFAULT_DESCRIPTOR_ORDER)
        .map_err(|e| log::warn!("descriptors unavailable: {e}"))
        .ok();
    CgptRecord { id, cgpt, descriptors, condition }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::BuildDict { shapes, nq, order, descriptor_order, out } => {
            let specs: Vec<(String, ShapeSpec)> = if shapes.is_empty() {
                standard_specs()
            } else {
                shapes.iter().map(|id| lookup_spec(id, None).map(|s| (id.clone(), s))).collect::<Result<_>>()?
            };
            let mut dict = build_dictionary(&specs, order, nq)?;
            if let Some(k) = descriptor_order {
                for e in &mut dict.entries {
                    e.descriptors = e.descriptors.truncate(k)?;
                }
            }
            dict.save(&out)?;
            println!("wrote {} entries (order {order}, {nq} nodes) to {}", dict.entries.len(), out.display());
        }
        Command::Cgpt { shapes, nq, order, motion, out } => {
            let spec = lookup_spec(&shapes, None)?;
            let target = ConductivityTarget::from_spec(shapes.clone(), &spec, nq)?.apply_motion(&motion.resolve(1.0, 0.0)?);
            let (cgpt, diag) = compute_cgpt_about(&target, order, ExpansionCenter::Centroid)?;
            log::info!("{shapes}: condition {:.3e}, residual {:.2e}", diag.condition, diag.relative_residual);
            write_json(&record(Some(shapes), cgpt, diag.condition), out.as_deref())?;
        }
        Command::Simulate { shapes, dict, nq, sigma, seed, motion, acquisition, out } => {
            if sigma < 0.0 {
                return Err(Error::InvalidConfig(format!("noise level {sigma} must be non-negative")));
            }
            let motion = motion.experiment()?;
            let config = acquisition.config(motion.translation_vec(), seed);
            let sensed = sense_spec(&shapes, &lookup_spec(&shapes, dict.as_deref())?, &motion, &config, nq)?;
            let clean = synthesize_msr(&sensed.cgpt, &config, &sensed.footprint)?;
            let msr = add_noise(&clean, sigma, seed);
            msr.save(&out)?;
            println!(
                "wrote {}×{} MSR of {shapes} (sigma0 {sigma}, seed {seed}) to {}",
                msr.values.nrows(),
                msr.values.ncols(),
                out.display()
            );
        }
        Command::Reconstruct { msr, order, out } => {
            let msr = MsrMatrix::load(&msr)?;
            let op = build_acquisition(&msr.config, &msr.footprint, order)?;
            let rec = reconstruct_cgpt(&msr.values, &op)?;
            log::info!("reconstruction rank {}, condition {:.3e}", rec.rank, rec.condition);
            write_json(&record(None, rec.cgpt, rec.condition), out.as_deref())?;
        }
        Command::Match { dict, cgpt, order } => {
            let dict = Dictionary::load(&dict)?;
            let rec: CgptRecord = serde_json::from_str(&std::fs::read_to_string(&cgpt)?)?;
            let query = descriptors(&rec.cgpt.to_complex(), order)?;
            let result = match_descriptors(&query, &dict)?;
            write_json(&result, None)?;
        }
        Command::Experiment {
            dict,
            shapes,
            sigma,
            trials,
            seed,
            order,
            descriptor_order,
            mean_error,
            nq,
            motion,
            acquisition,
            out,
        } => {
            let dict = load_dictionary(&dict)?;
            let motion = motion.experiment()?;
            let config = ExperimentConfig {
                targets: shapes,
                sigmas: sigma,
                trials,
                seed,
                acquisition: acquisition.config(motion.translation_vec(), seed),
                order,
                descriptor_order,
                motion,
                selection: if mean_error { SelectionRule::MeanError } else { SelectionRule::PerTrial },
                n_nodes: nq.unwrap_or(dict.n_nodes),
            };
            let rows = run_identification_experiment(&dict, &config)?;
            write_frequency_csv(&out, &rows)?;
            for (id, s, p) in identification_probabilities(&rows) {
                println!("target {id}  sigma0 {s}  identification probability {p}");
            }
        }
        Command::Robustness { dict, shapes, sigma, trials, seed, order, nq, motion, acquisition, out } => {
            let dict = load_dictionary(&dict)?;
            let motion = motion.experiment()?;
            let config = RobustnessConfig {
                target: shapes,
                sigmas: sigma,
                trials,
                seed,
                acquisition: acquisition.config(motion.translation_vec(), seed),
                order,
                motion,
                n_nodes: nq.unwrap_or(dict.n_nodes),
            };
            let rows = run_robustness(&dict, &config)?;
            write_diagnostics_csv(&out, &rows)?;
            for r in &rows {
                println!("sigma0 {}  order {}  relative error {:.3e}", r.sigma0, r.order, r.relative_error);
            }
        }
    }
    Ok(())
}

fn load_dictionary(path: &Path) -> Result<Dictionary> {
    if !path.exists() {
        return Err(Error::InvalidConfig(format!(
            "dictionary {} not found; create it with `cgpt build-dict --out {}`",
            path.display(),
            path.display()
        )));
    }
    Dictionary::load(path)
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not set thread count: {e}");
        }
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
