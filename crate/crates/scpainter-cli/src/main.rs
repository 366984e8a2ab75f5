use clap::{Parser, Subcommand};

use scpainter_cli::commands::{
    cmd_build_pairs, cmd_eval, cmd_render_traj, cmd_sample, cmd_synth_scene, cmd_train_toy,
    cmd_unproject, BuildPairsOpts, EvalOpts, RenderTrajOpts, SampleOpts, SynthSceneOpts,
    TrainToyOpts, UnprojectOpts,
};
use scpainter_cli::exit_code_for;

/// Geometric conditioning pipeline for joint 3D asset insertion and
/// novel view synthesis: point-cloud and splat rendering, conditioning
/// bundles, training pairs, and a toy diffusion harness.
#[derive(Parser)]
#[command(name = "scpainter", version, about)]
struct Cli {
    /// Worker threads for rendering (defaults to the CPU count).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a procedural test scene.
    SynthScene(SynthSceneOpts),
    /// Unproject depth frames to point clouds (PLY).
    Unproject(UnprojectOpts),
    /// Render a laterally shifted trajectory to a conditioning bundle.
    RenderTraj(RenderTrajOpts),
    /// Build training pairs from a scene.
    BuildPairs(BuildPairsOpts),
    /// Train the toy denoiser on built pairs.
    TrainToy(TrainToyOpts),
    /// Sample frames from a checkpoint and a bundle.
    Sample(SampleOpts),
    /// Score generated frames against ground truth.
    Eval(EvalOpts),
}

fn main() {
    // Verbosity via SCPAINTER_LOG (error/warn/info/debug/trace).
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCPAINTER_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not configure {jobs} worker threads: {e}");
        }
    }

    let result = match &cli.command {
        Command::SynthScene(o) => cmd_synth_scene(o).map(|_| ()),
        Command::Unproject(o) => cmd_unproject(o).map(|_| ()),
        Command::RenderTraj(o) => cmd_render_traj(o).map(|_| ()),
        Command::BuildPairs(o) => cmd_build_pairs(o).map(|_| ()),
        Command::TrainToy(o) => cmd_train_toy(o).map(|_| ()),
        Command::Sample(o) => cmd_sample(o).map(|_| ()),
        Command::Eval(o) => cmd_eval(o).map(|_| ()),
    };

    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code_for(&e));
    }
}
