mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use tracklet_refine::connector::connect_logged;
use tracklet_refine::formats::write_mot;
use tracklet_refine::metrics::{evaluate, DEFAULT_IOU_MIN};
use tracklet_refine::splitter::split_all;
use tracklet_refine::synth::{
    generate, inject_cutoff_from, inject_mixup, Provenance, ScenarioParams,
};
use tracklet_refine::{refine, RefineConfig, RefineSummary, TrackSet};

use io::{
    load_boxes, load_sequence, paired_inputs, sibling, store_sequence, write_atomic, Failure,
};

#[derive(Parser, Debug)]
#[command(
    name = "trackrefine",
    version,
    about = "Split and reconnect tracklets by appearance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split tracklets whose appearance forms several clusters.
    Split(StageArgs),
    /// Merge tracklets that share an identity.
    Connect(StageArgs),
    /// Split, then connect.
    Refine(StageArgs),
    /// Score predicted tracks against ground truth.
    Eval(EvalArgs),
    /// Write a synthetic scenario with known identities.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Human,
    Machine,
}

#[derive(Args, Debug)]
struct StageArgs {
    /// Tracking file (MOT text).
    #[arg(
        long = "in",
        value_name = "FILE",
        required_unless_present = "in_dir",
        conflicts_with = "in_dir"
    )]
    input: Option<PathBuf>,

    /// Embedding file [default: input with `.emb` extension]
    #[arg(long, value_name = "FILE", requires = "input")]
    emb: Option<PathBuf>,

    /// Output tracking file; embeddings go to its `.emb` sibling.
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "out_dir",
        conflicts_with = "out_dir"
    )]
    out: Option<PathBuf>,

    /// Process every `*.txt` with a sibling `*.emb` in this directory.
    #[arg(long, value_name = "DIR", requires = "out_dir")]
    in_dir: Option<PathBuf>,

    #[arg(long, value_name = "DIR", requires = "in_dir")]
    out_dir: Option<PathBuf>,

    #[command(flatten)]
    params: ParamArgs,

    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Minimum neighbors (self included) for a core point.
    #[arg(long, default_value_t = 5)]
    min_samples: usize,

    /// Neighborhood radius in cosine distance.
    #[arg(long, default_value_t = 0.6)]
    eps: f64,

    /// Most pieces a tracklet may be split into.
    #[arg(long, default_value_t = 3)]
    max_clusters: usize,

    /// Merge threshold on tracklet distance.
    #[arg(long, default_value_t = 0.4)]
    alpha: f64,

    /// Spatial gate as a fraction of the scene extent.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,

    /// Skip the splitter in `refine`.
    #[arg(long)]
    no_split: bool,

    /// Disable the spatial gate.
    #[arg(long)]
    no_spatial: bool,
}

impl ParamArgs {
    fn config(&self) -> Result<RefineConfig, Failure> {
        RefineConfig::new(
            self.min_samples,
            self.eps,
            self.max_clusters,
            self.alpha,
            self.beta,
        )
        .map(|c| c.with_split(!self.no_split).with_spatial(!self.no_spatial))
        .map_err(|e| Failure::from_core("arguments", e))
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    gt: PathBuf,

    #[arg(long, value_name = "FILE")]
    pred: PathBuf,

    /// Minimum IoU for a ground-truth/prediction match.
    #[arg(long, default_value_t = DEFAULT_IOU_MIN)]
    iou_min: f64,

    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Sequence name used for file stems [default: synth-<seed>]
    #[arg(long)]
    name: Option<String>,

    #[arg(long, default_value_t = 10)]
    identities: usize,

    #[arg(long, default_value_t = 200)]
    frames: u32,

    #[arg(long, default_value_t = 32)]
    dim: usize,

    /// Largest angular perturbation of an embedding, degrees.
    #[arg(long, default_value_t = 10.0)]
    noise_angle: f64,

    /// Smallest angle between identity prototypes, degrees.
    #[arg(long, default_value_t = 90.0)]
    min_angle: f64,

    #[arg(long, default_value_t = 1920.0)]
    field_width: f64,

    #[arg(long, default_value_t = 1080.0)]
    field_height: f64,

    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Per-observation probability of cutting a track.
    #[arg(long, default_value_t = 0.05)]
    cut_rate: f64,

    /// Per-frame probability of swapping two tracks.
    #[arg(long, default_value_t = 0.0)]
    swap_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Split,
    Connect,
    Refine,
}

impl Stage {
    fn run(
        self,
        ts: &TrackSet,
        cfg: &RefineConfig,
    ) -> tracklet_refine::Result<(TrackSet, RefineSummary)> {
        match self {
            Stage::Refine => refine(ts, cfg),
            Stage::Split => {
                let split = split_all(ts, cfg)?;
                let summary = RefineSummary {
                    input: ts.len(),
                    after_split: split.len(),
                    after_connect: split.len(),
                    merges: 0,
                };
                Ok((split, summary))
            }
            Stage::Connect => {
                let (connected, steps) = connect_logged(ts, cfg)?;
                let summary = RefineSummary {
                    input: ts.len(),
                    after_split: ts.len(),
                    after_connect: connected.len(),
                    merges: steps.len(),
                };
                Ok((connected, summary))
            }
        }
    }
}

fn report(stage: Stage, name: &str, s: &RefineSummary, format: Format) -> String {
    match format {
        Format::Machine => {
            let mut out = format!("sequence={name}\ninput={}\n", s.input);
            if stage != Stage::Connect {
                out += &format!("after_split={}\n", s.after_split);
            }
            if stage != Stage::Split {
                out += &format!("after_connect={}\nmerges={}\n", s.after_connect, s.merges);
            }
            out
        }
        Format::Human => match stage {
            Stage::Split => format!(
                "{name}: {} tracklets, {} after split\n",
                s.input, s.after_split
            ),
            Stage::Connect => format!(
                "{name}: {} tracklets, {} after connect ({} merges)\n",
                s.input, s.after_connect, s.merges
            ),
            Stage::Refine => format!(
                "{name}: {} tracklets, {} after split, {} after connect ({} merges)\n",
                s.input, s.after_split, s.after_connect, s.merges
            ),
        },
    }
}

fn process_one(
    stage: Stage,
    cfg: &RefineConfig,
    txt: &Path,
    emb: &Path,
    out: &Path,
    format: Format,
) -> Result<String, Failure> {
    let ts = load_sequence(txt, emb)?;
    let (result, summary) = stage
        .run(&ts, cfg)
        .map_err(|e| Failure::from_core(txt.display(), e))?;
    store_sequence(&result, out)?;
    Ok(report(stage, ts.sequence_name(), &summary, format))
}

fn cmd_stage(stage: Stage, args: &StageArgs) -> Result<(), Failure> {
    let cfg = args.params.config()?;
    if let (Some(input), Some(out)) = (&args.input, &args.out) {
        let emb = args.emb.clone().unwrap_or_else(|| sibling(input, "emb"));
        print!(
            "{}",
            process_one(stage, &cfg, input, &emb, out, args.format)?
        );
        return Ok(());
    }
    let (Some(in_dir), Some(out_dir)) = (&args.in_dir, &args.out_dir) else {
        return Err(Failure::Config(
            "need --in/--out or --in-dir/--out-dir".into(),
        ));
    };
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Failure::Data(format!("{}: {e}", out_dir.display())))?;
    let inputs = paired_inputs(in_dir)?;
    let results: Vec<_> = inputs
        .par_iter()
        .map(|(txt, emb)| {
            let out = out_dir.join(txt.file_name().expect("listed files have names"));
            process_one(stage, &cfg, txt, emb, &out, args.format)
        })
        .collect();
    let total = results.len();
    let mut failed = 0;
    let mut code = 0;
    for r in results {
        match r {
            Ok(line) => print!("{line}"),
            Err(f) => {
                eprintln!("error: {f}");
                failed += 1;
                code = code.max(f.exit_code());
            }
        }
    }
    let message = format!("{failed} of {total} sequences failed");
    match code {
        0 => Ok(()),
        1 => Err(Failure::Data(message)),
        _ => Err(Failure::Config(message)),
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&args.iou_min) {
        return Err(Failure::Config(format!(
            "--iou-min {} outside [0, 1]",
            args.iou_min
        )));
    }
    let gt = load_boxes(&args.gt)?;
    let pred = load_boxes(&args.pred)?;
    let r = evaluate(&gt, &pred, args.iou_min);
    match args.format {
        Format::Human => println!("{r}"),
        Format::Machine => print!("{}", r.to_machine()),
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let params = ScenarioParams {
        num_identities: args.identities,
        frames: args.frames,
        embed_dim: args.dim,
        noise_angle_max: args.noise_angle.to_radians(),
        min_prototype_angle: args.min_angle.to_radians(),
        field_width: args.field_width,
        field_height: args.field_height,
        rng_seed: args.seed,
    };
    let synth_err = |e| Failure::from_core("synth", e);
    let gt = generate(&params).map_err(synth_err)?;
    let (mixed, prov) = if args.swap_rate > 0.0 {
        inject_mixup(&gt, args.swap_rate, args.seed.wrapping_add(1)).map_err(synth_err)?
    } else {
        (gt.clone(), Provenance::identity(&gt))
    };
    let (corrupted, prov) =
        inject_cutoff_from(&mixed, &prov, args.cut_rate, args.seed.wrapping_add(2))
            .map_err(synth_err)?;

    let name = args
        .name
        .clone()
        .unwrap_or_else(|| format!("synth-{}", args.seed));
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::Data(format!("{}: {e}", args.out_dir.display())))?;
    let stem = args.out_dir.join(&name);
    let txt = stem.with_extension("txt");
    store_sequence(&corrupted, &txt)?;
    write_atomic(
        &args.out_dir.join(format!("{name}.gt.txt")),
        write_mot(&gt).as_bytes(),
    )?;
    write_atomic(
        &args.out_dir.join(format!("{name}.prov")),
        prov.to_sidecar().as_bytes(),
    )?;
    println!(
        "{name}: {} identities, {} tracklets, {} observations",
        gt.len(),
        corrupted.len(),
        corrupted.observation_count()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Split(a) => cmd_stage(Stage::Split, a),
        Command::Connect(a) => cmd_stage(Stage::Connect, a),
        Command::Refine(a) => cmd_stage(Stage::Refine, a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
