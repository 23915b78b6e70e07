use pointpca::cloud::{fuse_duplicates, PointCloud};
use pointpca::comparison::Method;
use pointpca::layout::FeatureLayout;
use pointpca::pipeline::{compute_predictors, PipelineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn textured_patch(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let mut pts = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random_range(0.0..1.0);
        let y: f64 = rng.random_range(0.0..1.0);
        pts.push([x, y, 0.2 * (3.0 * x).sin() * y]);
        colors.push([
            f64::from(rng.random_range(0..=255_u8)),
            f64::from(rng.random_range(0..=255_u8)),
            f64::from(rng.random_range(0..=255_u8)),
        ]);
    }
    PointCloud::new(pts, Some(colors)).unwrap()
}

fn jitter(rng: &mut ChaCha8Rng, cloud: &PointCloud, sigma: f64) -> PointCloud {
    let noise = Normal::new(0.0, sigma).unwrap();
    let (pts, colors) = cloud.clone().into_parts();
    let pts = pts
        .into_iter()
        .map(|p| p.map(|c| c + noise.sample(rng)))
        .collect();
    PointCloud::new(pts, colors).unwrap()
}

fn config(method: Method) -> PipelineConfig {
    PipelineConfig {
        radius: Some(0.15),
        k: 12,
        method,
        ..PipelineConfig::default()
    }
}

#[test]
fn identity_is_zero_for_distance_methods() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cloud = textured_patch(&mut rng, 300);
    for method in [Method::Ad, Method::Sd, Method::Rd1, Method::Rd3] {
        let out = compute_predictors(&cloud, &cloud, &config(method)).unwrap();
        assert_eq!(out.symmetric.values, vec![0.0; 32], "{method}");
    }
}

#[test]
fn swapping_arguments_keeps_symmetric_predictors() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..5 {
        let a = textured_patch(&mut rng, 200);
        let b = jitter(&mut rng, &a, 0.01);
        for method in [Method::Rd1, Method::Ad, Method::Rd2] {
            let ab = compute_predictors(&a, &b, &config(method)).unwrap();
            let ba = compute_predictors(&b, &a, &config(method)).unwrap();
            assert_eq!(ab.symmetric.values, ba.symmetric.values);
            assert_eq!(
                ab.distorted_to_reference.values,
                ba.reference_to_distorted.values
            );
        }
    }
}

#[test]
fn rd1_predictors_lie_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for sigma in [0.001, 0.01, 0.05] {
        let a = textured_patch(&mut rng, 250);
        let b = jitter(&mut rng, &a, sigma);
        let out = compute_predictors(&a, &b, &config(Method::Rd1)).unwrap();
        assert!(out.symmetric.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn duplicated_points_do_not_change_the_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let a = textured_patch(&mut rng, 200);
    let (mut pts, colors) = a.clone().into_parts();
    let mut colors = colors.unwrap();
    for i in [3, 50, 50, 199] {
        pts.push(pts[i]);
        colors.push(colors[i]);
    }
    let dup = PointCloud::new(pts, Some(colors)).unwrap();
    assert_eq!(fuse_duplicates(&dup), a);
    let out = compute_predictors(&a, &dup, &config(Method::Rd1)).unwrap();
    assert_eq!(out.symmetric.values, vec![0.0; 32]);
}

#[test]
fn radius_follows_the_reference_extent() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let a = textured_patch(&mut rng, 200);
    let scaled = a.map_positions(|p| p.map(|c| 10.0 * c)).unwrap();
    let cfg = PipelineConfig {
        radius_factor: 0.1,
        k: 10,
        ..PipelineConfig::default()
    };
    let small = compute_predictors(&a, &a, &cfg).unwrap();
    let large = compute_predictors(&scaled, &scaled, &cfg).unwrap();
    assert!((large.radius - 10.0 * small.radius).abs() < 1e-12);
    assert!((small.radius - 0.1 * small.reference_extent.max_side).abs() < 1e-15);
}

#[test]
fn uniform_scaling_leaves_scale_free_predictors_unchanged() {
    // Ratios of eigenvalues, parallelity and luminance do not depend on scale.
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let a = textured_patch(&mut rng, 200);
    let b = jitter(&mut rng, &a, 0.01);
    let s = 7.5;
    let a2 = a.map_positions(|p| p.map(|c| s * c)).unwrap();
    let b2 = b.map_positions(|p| p.map(|c| s * c)).unwrap();
    let cfg = PipelineConfig {
        radius_factor: 0.15,
        k: 12,
        ..PipelineConfig::default()
    };
    let p1 = compute_predictors(&a, &b, &cfg).unwrap();
    let p2 = compute_predictors(&a2, &b2, &cfg).unwrap();
    let layout = FeatureLayout::LUMINANCE;
    for j in 0..32 {
        let d = layout.feature(j).1;
        if matches!(d, 4..=7 | 9 | 10 | 12..=15) {
            assert!(
                (p1.symmetric.values[j] - p2.symmetric.values[j]).abs() < 1e-6,
                "{}",
                layout.feature_name(j)
            );
        }
    }
}
