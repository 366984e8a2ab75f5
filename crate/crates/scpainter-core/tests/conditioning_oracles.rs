//! Conditioning-tensor oracles: identity-trajectory fidelity, the
//! depth-merge rule, and exact mask algebra on random tensors.

use ndarray::{Array4, s};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use scpainter_core::conditioning::{
    assemble_diffusion_input, assemble_encoder_input, composite_masks, downsample_mask,
    mask_latent, render_joint, LatentTensor, Trajectory,
};
use scpainter_core::dataset::synth::{synth_scene, SynthSceneSpec};
use scpainter_core::geometry::unproject;

fn random_binary_mask(rng: &mut StdRng, t: usize, h: usize, w: usize) -> Array4<f32> {
    Array4::from_shape_fn((t, 1, h, w), |_| if rng.random::<f32>() < 0.4 { 1.0 } else { 0.0 })
}

#[test]
fn identity_trajectory_reproduces_source_frames() {
    // Rendering a frame's own cloud into its own camera is the identity
    // on valid pixels, and coverage equals the validity mask, exactly.
    let spec = SynthSceneSpec {
        with_asset: false,
        ..SynthSceneSpec::canonical()
    };
    let scene = synth_scene(&spec, 11).unwrap();
    for frame in scene.frames.iter().take(3) {
        let cloud = unproject(frame);
        let traj = Trajectory::new(vec![(frame.intrinsics, frame.pose)]).unwrap();
        let bundle = render_joint(&cloud, &[], &traj).unwrap();
        let validity = frame.validity_mask();
        for v in 0..frame.height() {
            for u in 0..frame.width() {
                assert_eq!(bundle.coverage[(0, 0, v, u)], validity[(v, u)]);
                if validity[(v, u)] > 0.0 {
                    for c in 0..3 {
                        assert_eq!(bundle.i[(0, c, v, u)], frame.image[(c, v, u)]);
                    }
                }
            }
        }
        // No assets: the asset mask is empty everywhere.
        assert_eq!(bundle.ma.sum(), 0.0);
    }
}

#[test]
fn mask_algebra_matches_oracles_on_random_tensors() {
    let mut rng = StdRng::seed_from_u64(71);
    for _ in 0..100 {
        let (t, h, w) = (2usize, 16usize, 16usize);
        let a = random_binary_mask(&mut rng, t, h, w);
        let b = random_binary_mask(&mut rng, t, h, w);

        // composite == boolean OR, elementwise.
        let composite = composite_masks(&a, &b).unwrap();
        for (idx, v) in composite.indexed_iter() {
            let expected = if a[idx] > 0.5 || b[idx] > 0.5 { 1.0 } else { 0.0 };
            assert_eq!(*v, expected);
        }

        // downsample == blockwise any().
        let down = downsample_mask(&a).unwrap();
        assert_eq!(down.dim(), (t, 1, 2, 2));
        for ti in 0..t {
            for bv in 0..2 {
                for bu in 0..2 {
                    let mut any = false;
                    for dv in 0..8 {
                        for du in 0..8 {
                            if a[(ti, 0, bv * 8 + dv, bu * 8 + du)] > 0.5 {
                                any = true;
                            }
                        }
                    }
                    assert_eq!(down[(ti, 0, bv, bu)] > 0.5, any);
                }
            }
        }

        // mask_latent == elementwise product, broadcast over channels.
        let z = LatentTensor::new(Array4::from_shape_fn((t, 3, 2, 2), |_| {
            rng.random_range(-2.0..2.0f64)
        }))
        .unwrap();
        let masked = mask_latent(&z, &down).unwrap();
        for ((ti, c, v, u), val) in masked.data.indexed_iter() {
            let expected = z.data[(ti, c, v, u)] * down[(ti, 0, v, u)] as f64;
            assert_eq!(*val, expected);
        }
    }
}

#[test]
fn composited_coverage_is_monotone() {
    let mut rng = StdRng::seed_from_u64(72);
    for _ in 0..20 {
        let a = random_binary_mask(&mut rng, 1, 8, 8);
        let b = random_binary_mask(&mut rng, 1, 8, 8);
        let c = composite_masks(&a, &b).unwrap();
        for idx in a.indexed_iter().map(|(i, _)| i) {
            assert!(c[idx] >= a[idx]);
            assert!(c[idx] >= b[idx]);
        }
    }
}

#[test]
fn downsampled_mask_covers_every_source_pixel() {
    // Nearest-neighbor upsampling of the max-pooled mask must cover every
    // on pixel of the original: no covered content may be zeroed at
    // latent resolution.
    let mut rng = StdRng::seed_from_u64(73);
    for _ in 0..20 {
        let m = random_binary_mask(&mut rng, 1, 32, 24);
        let down = downsample_mask(&m).unwrap();
        for ((_, _, v, u), val) in m.indexed_iter() {
            if *val > 0.5 {
                assert!(down[(0, 0, v / 8, u / 8)] > 0.5, "pixel ({u},{v}) lost");
            }
        }
    }
}

#[test]
fn encoder_input_slices_recover_inputs() {
    let mut rng = StdRng::seed_from_u64(74);
    let i = Array4::from_shape_fn((2, 3, 16, 16), |_| rng.random::<f32>());
    let ma = Array4::from_shape_fn((2, 1, 16, 16), |_| rng.random::<f32>());
    let x = assemble_encoder_input(&i, &ma).unwrap();
    assert_eq!(x.slice(s![.., 0..3, .., ..]), i);
    assert_eq!(x.slice(s![.., 3..4, .., ..]), ma);

    let zero_ma = Array4::<f32>::zeros((2, 1, 16, 16));
    let x0 = assemble_encoder_input(&i, &zero_ma).unwrap();
    assert_eq!(x0.slice(s![.., 3, .., ..]).sum(), 0.0);
}

#[test]
fn diffusion_input_channel_order_against_index_oracle() {
    let mut rng = StdRng::seed_from_u64(75);
    let cm = 3usize;
    let cn = 2usize;
    let zm = LatentTensor::new(Array4::from_shape_fn((1, cm, 4, 4), |_| {
        rng.random_range(-1.0..1.0f64)
    }))
    .unwrap();
    let zn = LatentTensor::new(Array4::from_shape_fn((1, cn, 4, 4), |_| {
        rng.random_range(-1.0..1.0f64)
    }))
    .unwrap();
    let x = assemble_diffusion_input(&zm, &zn).unwrap();
    for ((t, c, v, u), val) in x.data.indexed_iter() {
        let expected = if c < cm {
            zm.data[(t, c, v, u)]
        } else {
            zn.data[(t, c - cm, v, u)]
        };
        assert_eq!(*val, expected);
    }
}

#[test]
fn asset_mask_threshold_consistency_on_rendered_bundle() {
    // On a real render, ma_binary must be exactly the 0.5 threshold of ma
    // and stay inside coverage.
    let scene = synth_scene(&SynthSceneSpec::canonical(), 21).unwrap();
    let frame = &scene.frames[0];
    let cloud = unproject(frame);
    let splats = scene.aligned_splats_at(0).unwrap();
    let traj = Trajectory::new(vec![(frame.intrinsics, frame.pose)]).unwrap();
    let bundle = render_joint(&cloud, &splats, &traj).unwrap();
    assert!(bundle.ma.iter().any(|&a| a > 0.5), "asset should be visible");
    for ((t, _, v, u), ma) in bundle.ma.indexed_iter() {
        let bin = bundle.ma_binary[(t, 0, v, u)];
        assert_eq!(bin > 0.5, *ma >= 0.5);
        if bin > 0.5 {
            assert_eq!(bundle.coverage[(t, 0, v, u)], 1.0);
        }
    }
}
