use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;

use scpainter_core::conditioning::load_bundle;
use scpainter_core::{imageio, Error, Result};

use crate::lock::OutputLock;
use crate::metrics::{psnr, FrameMetric, MetricsReport};

/// Compare generated frames against ground truth; writes `report.json`
/// and `report.csv`.
#[derive(Debug, Args)]
pub struct EvalOpts {
    /// Directory of generated PNG frames.
    #[arg(long)]
    pub generated: PathBuf,
    /// Directory of ground-truth PNG frames.
    #[arg(long)]
    pub truth: PathBuf,
    /// Optional bundle directory for coverage statistics.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn sorted_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("png") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn cmd_eval(opts: &EvalOpts) -> Result<MetricsReport> {
    let started = Instant::now();
    let generated = sorted_pngs(&opts.generated)?;
    let truth = sorted_pngs(&opts.truth)?;
    if generated.is_empty() || truth.is_empty() {
        return Err(Error::invalid(
            "eval inputs",
            format!(
                "no PNG frames: {} generated, {} ground truth",
                generated.len(),
                truth.len()
            ),
        ));
    }
    if generated.len() != truth.len() {
        return Err(Error::invalid(
            "eval inputs",
            format!("frame count mismatch: {} vs {}", generated.len(), truth.len()),
        ));
    }

    let mut frames = Vec::with_capacity(generated.len());
    for (i, (g, t)) in generated.iter().zip(&truth).enumerate() {
        let a = imageio::load_rgb(g)?;
        let b = imageio::load_rgb(t)?;
        let p = psnr(&a, &b)?;
        frames.push(FrameMetric {
            frame: i,
            psnr_db: p,
            exact: p.is_none(),
        });
    }
    let mut report = MetricsReport::from_frames(frames, started.elapsed().as_secs_f64() * 1e3);

    if let Some(bundle_dir) = &opts.bundle {
        let bundle = load_bundle(bundle_dir)?;
        let n = bundle.coverage.len() as f64;
        report.mean_coverage = Some(bundle.coverage.iter().map(|&v| v as f64).sum::<f64>() / n);
        report.asset_pixel_fraction =
            Some(bundle.ma_binary.iter().map(|&v| v as f64).sum::<f64>() / n);
    }

    let _lock = OutputLock::acquire(&opts.out)?;
    let json_path = opts.out.join("report.json");
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::malformed(&json_path, e.to_string()))?;
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    let csv_path = opts.out.join("report.csv");
    std::fs::write(&csv_path, report.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
    log::info!(
        "evaluated {} frames (mean PSNR {:?} dB) -> {}",
        report.n_frames,
        report.mean_psnr_db,
        json_path.display()
    );
    Ok(report)
}
