use pointpca::cloud::{fuse_duplicates, Point3, PointCloud};
use pointpca::spatial::{correspondence, SpatialIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn d2(a: &Point3, b: &Point3) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

/// Every point ranked by (squared distance, index), nearest first.
fn brute_ranking(points: &[Point3], q: &Point3) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (d2(p, q), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, grid: bool) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            if grid {
                // Coarse lattice values produce many exact distance ties.
                [0, 1, 2].map(|_| f64::from(rng.random_range(0..6_i32)) * 0.5)
            } else {
                [0, 1, 2].map(|_| rng.random_range(-1.0..1.0))
            }
        })
        .collect()
}

#[test]
fn knn_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..60 {
        let n = rng.random_range(1..400);
        let points = random_points(&mut rng, n, trial % 2 == 0);
        let index = SpatialIndex::from_points(&points).unwrap();
        for _ in 0..20 {
            let q = random_points(&mut rng, 1, trial % 3 == 0)[0];
            let k = rng.random_range(1..40);
            let got: Vec<usize> = index.knn(&q, k).iter().map(|n| n.index).collect();
            let want: Vec<usize> = brute_ranking(&points, &q)
                .iter()
                .take(k)
                .map(|e| e.1)
                .collect();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn radius_search_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..60 {
        let n = rng.random_range(1..400);
        let points = random_points(&mut rng, n, trial % 2 == 0);
        let index = SpatialIndex::from_points(&points).unwrap();
        for _ in 0..20 {
            let q = points[rng.random_range(0..n)];
            let r: f64 = if trial % 2 == 0 {
                0.5
            } else {
                rng.random_range(0.0..0.6)
            };
            let got: Vec<usize> = index.within_radius(&q, r).iter().map(|n| n.index).collect();
            let want: Vec<usize> = brute_ranking(&points, &q)
                .into_iter()
                .filter(|e| e.0 <= r * r)
                .map(|e| e.1)
                .collect();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn correspondence_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for trial in 0..40 {
        let grid = trial % 2 == 0;
        let (na, nb) = (rng.random_range(1..200), rng.random_range(1..200));
        let a = random_points(&mut rng, na, grid);
        let b = random_points(&mut rng, nb, grid);
        let cloud_b = PointCloud::from_positions(b.clone()).unwrap();
        let index_a = SpatialIndex::from_points(&a).unwrap();
        let corr = correspondence(&cloud_b, &index_a);
        for (i, q) in b.iter().enumerate() {
            assert_eq!(corr.get(i), brute_ranking(&a, q)[0].1);
        }
    }
}

#[test]
fn fusion_matches_grouping_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..30 {
        let n = rng.random_range(1..300);
        let positions = random_points(&mut rng, n, true);
        let colors: Vec<[f64; 3]> = (0..n)
            .map(|_| [0, 1, 2].map(|_| f64::from(rng.random_range(0..=255_u8))))
            .collect();
        let cloud = PointCloud::new(positions.clone(), Some(colors.clone())).unwrap();
        let fused = fuse_duplicates(&cloud);

        let mut unique: Vec<Point3> = Vec::new();
        for p in &positions {
            if !unique.contains(p) {
                unique.push(*p);
            }
        }
        assert_eq!(fused.positions(), unique.as_slice());
        for (u, c) in unique.iter().zip(fused.colors().unwrap()) {
            let members: Vec<&[f64; 3]> = positions
                .iter()
                .zip(&colors)
                .filter(|(p, _)| *p == u)
                .map(|(_, c)| c)
                .collect();
            for ch in 0..3 {
                let mean = members.iter().map(|m| m[ch]).sum::<f64>() / members.len() as f64;
                assert!((c[ch] - mean).abs() < 1e-12);
            }
        }
        assert_eq!(fuse_duplicates(&fused), fused);
    }
}
