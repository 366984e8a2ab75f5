//! Subcommand implementations. Each is a plain function over a clap
//! `Args` struct; `main` only parses and dispatches.

mod build_pairs;
mod eval;
mod render_traj;
mod sample;
mod synth_scene;
mod train_toy;
mod unproject;

pub use build_pairs::{cmd_build_pairs, BuildPairsOpts, PairKind};
pub use eval::{cmd_eval, EvalOpts};
pub use render_traj::{cmd_render_traj, RenderTrajOpts};
pub use sample::{cmd_sample, SampleOpts};
pub use synth_scene::{cmd_synth_scene, SynthSceneOpts};
pub use train_toy::{cmd_train_toy, TrainToyOpts};
pub use unproject::{cmd_unproject, UnprojectOpts};

use std::str::FromStr;

use scpainter_core::{Error, Result};

/// Half-open frame range `a..b`, or a single index `n` meaning `n..n+1`.
/// An empty range (`a..a`) is allowed and selects nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRange {
    pub start: usize,
    pub end: usize,
}

impl FrameRange {
    pub fn indices(&self, n_frames: usize) -> Result<Vec<usize>> {
        if self.start > self.end {
            return Err(Error::invalid(
                "frame range",
                format!("{}..{} is reversed", self.start, self.end),
            ));
        }
        if self.end > n_frames {
            return Err(Error::invalid(
                "frame range",
                format!("{}..{} exceeds the {} scene frames", self.start, self.end, n_frames),
            ));
        }
        Ok((self.start..self.end).collect())
    }

    pub fn full(n_frames: usize) -> FrameRange {
        FrameRange {
            start: 0,
            end: n_frames,
        }
    }
}

impl FromStr for FrameRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if let Some((a, b)) = s.split_once("..") {
            let start = a.parse().map_err(|_| format!("bad range start '{a}'"))?;
            let end = b.parse().map_err(|_| format!("bad range end '{b}'"))?;
            Ok(FrameRange { start, end })
        } else {
            let idx: usize = s.parse().map_err(|_| format!("bad frame index '{s}'"))?;
            Ok(FrameRange {
                start: idx,
                end: idx + 1,
            })
        }
    }
}
