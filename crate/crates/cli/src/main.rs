use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use masks_core::ensemble::{masks, ExternalSource, VerificationOutcome};
use masks_core::knowledge::{ckc, parse_point_lines, ImageShape, InputPoint, PerturbationSpec};
use masks_core::kripke::{announce, satisfies, KripkeModel};
use masks_core::mnist::load_mnist;
use masks_core::model_text::{parse_model, write_model};
use masks_core::nn::{load_weights, MlpNetwork};
use masks_core::parser::parse;
use masks_core::product::{product_with_cap, DEFAULT_WORLD_CAP};
use masks_core::reduction::{reduce, PowerSetModel};
use masks_core::{run_experiment, Formula, WorldId};

/// Epistemic model checking and knowledge aggregation for classifier
/// ensembles.
///
/// Set MASKS_THREADS to cap the number of worker threads (0 = automatic).
#[derive(Parser)]
#[command(name = "masks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula at one world of a model; prints true or false.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        world: String,
        #[arg(long)]
        formula: String,
    },
    /// Announce formulas in order and print the updated model.
    Announce {
        #[arg(long)]
        model: PathBuf,
        /// Repeat to announce several formulas; order is significant.
        #[arg(long, required = true)]
        formula: Vec<String>,
    },
    /// Print the reduced model of a power-set model.
    Reduce {
        #[arg(long)]
        model: PathBuf,
    },
    /// Print the product of two or more models, optionally after announcements.
    Product {
        /// Factor models, first factor most significant.
        #[arg(long = "model", required = true, num_args = 1)]
        models: Vec<PathBuf>,
        #[arg(long)]
        announce: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_WORLD_CAP)]
        max_worlds: usize,
    },
    /// Print the classes one network produces over the perturbation set.
    Ckc {
        /// Weight file in MASKSNN1 format.
        #[arg(long)]
        net: PathBuf,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Aggregate the knowledge of every network in a directory.
    ///
    /// Exit code 0 means verified, 2 candidates left, 3 inconsistent.
    Verify {
        /// Directory of *.masksnn weight files, used in file name order.
        #[arg(long)]
        nets: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// External knowledge to announce after the ensemble; order is
        /// significant.
        #[arg(long)]
        external: Vec<String>,
    },
    /// Run the ensemble over an MNIST test set and write the CSV report.
    Experiment {
        #[arg(long)]
        nets: PathBuf,
        #[arg(long)]
        mnist_images: PathBuf,
        #[arg(long)]
        mnist_labels: PathBuf,
        #[arg(long, required = true)]
        perturb: Vec<String>,
        /// Increasing ensemble sizes, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        agents: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only use the first N items of the test set.
        #[arg(long)]
        limit: Option<usize>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// File with one comma-separated point.
    #[arg(long)]
    input: PathBuf,
    /// `affine:LO:HI:STEPS[:axis][:interp]`, `eps:EPS:METRIC:STEPS` or
    /// `file:PATH`; repeat to combine.
    #[arg(long, required = true)]
    perturb: Vec<String>,
    /// Image shape as HxW; 784 features default to 28x28.
    #[arg(long, value_parser = parse_shape)]
    shape: Option<ImageShape>,
}

impl InputArgs {
    fn load(&self) -> Result<(InputPoint, PerturbationSpec)> {
        let text = read(&self.input)?;
        let mut points = parse_point_lines(&text).with_context(|| format!("reading {}", self.input.display()))?;
        if points.len() != 1 {
            bail!("{}: expected exactly one point, found {}", self.input.display(), points.len());
        }
        let features = points.pop().unwrap();
        let shape = self.shape.or_else(|| {
            (features.len() == 784).then_some(ImageShape {
                height: 28,
                width: 28,
            })
        });
        let x0 = match shape {
            Some(shape) => InputPoint::image(features, shape)?,
            None => InputPoint::new(features)?,
        };
        Ok((x0, PerturbationSpec::from_args(&self.perturb)?))
    }
}

fn parse_shape(s: &str) -> Result<ImageShape, String> {
    let (h, w) = s.split_once('x').ok_or("expected HxW")?;
    let dim = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad dimension {v:?}"));
    Ok(ImageShape {
        height: dim(h)?,
        width: dim(w)?,
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<KripkeModel> {
    parse_model(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn formula(text: &str) -> Result<Formula> {
    parse(text).with_context(|| format!("formula {text:?}"))
}

fn load_net(path: &Path) -> Result<MlpNetwork> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_weights(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn load_nets(dir: &Path) -> Result<Vec<MlpNetwork>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "masksnn"));
    paths.sort();
    if paths.is_empty() {
        bail!("no .masksnn files in {}", dir.display());
    }
    paths.iter().map(|p| load_net(p)).collect()
}

fn announce_all(mut model: KripkeModel, formulas: &[String]) -> Result<KripkeModel> {
    for text in formulas {
        model = announce(&model, &formula(text)?)?;
    }
    Ok(model)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Check {
            model,
            world,
            formula: f,
        } => {
            let m = load_model(&model)?;
            let w = WorldId::new(world)?;
            println!("{}", satisfies(&m, &w, &formula(&f)?)?);
        }
        Command::Announce { model, formula } => {
            print!("{}", write_model(&announce_all(load_model(&model)?, &formula)?));
        }
        Command::Reduce { model } => {
            let full = PowerSetModel::from_model(load_model(&model)?)?;
            print!("{}", write_model(reduce(&full)?.model()));
        }
        Command::Product {
            models,
            announce,
            max_worlds,
        } => {
            let factors = models.iter().map(|p| load_model(p)).collect::<Result<Vec<_>>>()?;
            let joint = product_with_cap(&factors, max_worlds)?;
            print!("{}", write_model(&announce_all(joint.into_model(), &announce)?));
        }
        Command::Ckc { net, input } => {
            let net = load_net(&net)?;
            let (x0, spec) = input.load()?;
            let k = ckc(&net, &x0, &spec)?;
            println!("{}", if k.robust { "robust" } else { "not robust" });
            for c in &k.classes {
                println!("{c}");
            }
        }
        Command::Verify { nets, input, external } => {
            let nets = load_nets(&nets)?;
            let (x0, spec) = input.load()?;
            let sources = external
                .iter()
                .enumerate()
                .map(|(i, text)| Ok(ExternalSource::new(format!("external {}", i + 1), formula(text)?)))
                .collect::<Result<Vec<_>>>()?;
            let (outcome, survivors) = masks(&nets, &x0, &spec, &sources)?;
            println!("{outcome}");
            for c in &survivors {
                println!("{c}");
            }
            return Ok(ExitCode::from(match outcome {
                VerificationOutcome::Verified(_) => 0,
                VerificationOutcome::Candidates(_) => 2,
                VerificationOutcome::Inconsistent => 3,
            }));
        }
        Command::Experiment {
            nets,
            mnist_images,
            mnist_labels,
            perturb,
            agents,
            seed,
            limit,
            out,
        } => {
            let nets = load_nets(&nets)?;
            let mut data = load_mnist(&mnist_images, &mnist_labels)?;
            if let Some(n) = limit {
                data = data.truncate(n);
            }
            let spec = PerturbationSpec::from_args(&perturb)?;
            let csv = run_experiment(&nets, &data, &spec, &agents, seed)?.to_csv();
            match out {
                Some(path) => fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
