//! Finite-difference gradient sweeps and end-to-end diffusion checks.

use ndarray::{Array1, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use scpainter_core::conditioning::LatentTensor;
use scpainter_core::dataset::synth::{synth_scene, SynthSceneSpec};
use scpainter_core::dataset::{build_insertion_pair, EMBED_DIM};
use scpainter_core::diffusion::denoiser::{
    batch_loss, loss_and_gradients, BatchItem, DenoiserParams, IN_CHANNELS,
};
use scpainter_core::diffusion::{add_noise, sample_latent, train, NoiseSchedule, TrainConfig};
use scpainter_core::diffusion::sampler::TrueNoiseOracle;
use scpainter_core::diffusion::SAMPLER_TAU_MAX;

fn gaussian_latent(shape: (usize, usize, usize, usize), seed: u64) -> LatentTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.0 * shape.1 * shape.2 * shape.3;
    let data: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    LatentTensor::new(Array4::from_shape_vec(shape, data).unwrap()).unwrap()
}

fn probe_batch() -> Vec<BatchItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut embed_vec: Array1<f64> = Array1::from_vec(
        (0..EMBED_DIM).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
    );
    let norm = embed_vec.dot(&embed_vec).sqrt();
    embed_vec /= norm;
    vec![
        BatchItem {
            x_in: gaussian_latent((2, IN_CHANNELS, 4, 4), 1),
            tau: 0.31,
            embed: embed_vec.clone(),
            target: gaussian_latent((2, 8, 4, 4), 2),
        },
        BatchItem {
            x_in: gaussian_latent((2, IN_CHANNELS, 4, 4), 3),
            tau: 0.87,
            embed: embed_vec,
            target: gaussian_latent((2, 8, 4, 4), 4),
        },
    ]
}

#[test]
fn every_parameter_gradient_matches_central_differences() {
    // The full sweep: every one of the ~6.5k parameters is perturbed by
    // +-1e-4 and the analytic gradient must agree with the central
    // difference to 1e-4 relative error.
    let params = DenoiserParams::init(2025);
    let batch = probe_batch();
    let (_, grads) = loss_and_gradients(&params, &batch).unwrap();
    let flat_g = grads.to_flat();
    let flat_p = params.to_flat();
    let h = 1e-4;
    let n = flat_p.len();
    assert_eq!(n, DenoiserParams::n_params());

    let mut worst: (f64, usize) = (0.0, 0);
    for i in 0..n {
        let mut plus = flat_p.clone();
        plus[i] += h;
        let mut minus = flat_p.clone();
        minus[i] -= h;
        let lp = batch_loss(&DenoiserParams::from_flat(&plus).unwrap(), &batch).unwrap();
        let lm = batch_loss(&DenoiserParams::from_flat(&minus).unwrap(), &batch).unwrap();
        let numeric = (lp - lm) / (2.0 * h);
        let analytic = flat_g[i];
        let denom = analytic.abs().max(numeric.abs()).max(1e-10);
        let rel = ((numeric - analytic) / denom).abs();
        if rel > worst.0 {
            worst = (rel, i);
        }
        assert!(
            rel < 1e-4,
            "parameter {i}: analytic {analytic}, numeric {numeric}, rel {rel}"
        );
    }
    println!("gradient sweep: {} parameters, worst relative error {:.3e} at index {}", n, worst.0, worst.1);
}

#[test]
fn directional_derivative_matches_gradient() {
    // Random directions in parameter space: the loss slope along d must
    // equal g . d.
    let params = DenoiserParams::init(77);
    let batch = probe_batch();
    let (_, grads) = loss_and_gradients(&params, &batch).unwrap();
    let g = grads.to_flat();
    let p = params.to_flat();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let h = 1e-5;
    for _ in 0..5 {
        let mut d: Vec<f64> = (0..p.len()).map(|_| rng.sample(StandardNormal)).collect();
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut d {
            *x /= norm;
        }
        let plus: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a - h * b).collect();
        let lp = batch_loss(&DenoiserParams::from_flat(&plus).unwrap(), &batch).unwrap();
        let lm = batch_loss(&DenoiserParams::from_flat(&minus).unwrap(), &batch).unwrap();
        let numeric = (lp - lm) / (2.0 * h);
        let analytic: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let denom = analytic.abs().max(numeric.abs()).max(1e-10);
        assert!(
            ((numeric - analytic) / denom).abs() < 1e-5,
            "directional derivative {numeric} vs gradient projection {analytic}"
        );
    }
}

#[test]
fn oracle_sampler_error_stays_below_tolerance_as_steps_grow() {
    let shape = (1, 8, 8, 8);
    let x0 = gaussian_latent(shape, 10);
    let eps = gaussian_latent(shape, 11);
    let cond = gaussian_latent(shape, 12);
    let embed = Array1::zeros(EMBED_DIM);
    let z_start = add_noise(&x0, SAMPLER_TAU_MAX, &eps).unwrap();
    let oracle = TrueNoiseOracle { eps };
    let mut errs = Vec::new();
    for steps in [1usize, 4, 16] {
        let z = sample_latent(&oracle, &cond, &embed, steps, z_start.clone()).unwrap();
        let max_err = z
            .data
            .iter()
            .zip(x0.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-5, "steps {steps}: {max_err}");
        errs.push(max_err);
    }
    println!("oracle sampler max errors at 1/4/16 steps: {errs:?}");
}

#[test]
fn short_training_run_reduces_loss_on_synthetic_pair() {
    // A cheap convergence smoke (the full 500-iteration criterion runs in
    // the acceptance suite): 120 iterations on a 32x32 insertion pair
    // should already show a clear downward trend.
    let mut spec = SynthSceneSpec::canonical();
    spec.width = 32;
    spec.height = 32;
    spec.focal = 32.0;
    spec.n_frames = 2;
    let scene = synth_scene(&spec, 33).unwrap();
    let pair = build_insertion_pair(&scene, 0, 0).unwrap();
    let cfg = TrainConfig {
        iterations: 120,
        batch_size: 2,
        seed: 5,
        ..TrainConfig::default()
    };
    let out = train(&[pair], &cfg).unwrap();
    let first: f64 = out.losses[..20].iter().sum::<f64>() / 20.0;
    let last: f64 = out.losses[out.losses.len() - 20..].iter().sum::<f64>() / 20.0;
    assert!(
        last < first,
        "no loss reduction: first-20 mean {first}, last-20 mean {last}"
    );
}

#[test]
fn schedule_boundaries_and_sampler_grid_are_consistent() {
    let sched = NoiseSchedule;
    // The sampler's final grid point is exactly tau = 0.
    for steps in [1usize, 3, 7] {
        let tau_last = SAMPLER_TAU_MAX * (steps - steps) as f64 / steps as f64;
        assert_eq!(tau_last, 0.0);
    }
    assert!(sched.alpha(SAMPLER_TAU_MAX) > 1e-4, "grid top must stay numerically usable");
}
