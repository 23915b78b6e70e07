use pointpca::cloud::{load_ply, read_ply, save_ply, write_ply, PlyFormat, PointCloud};
use pointpca::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, colored: bool) -> PointCloud {
    let pts = (0..n)
        .map(|_| [0, 1, 2].map(|_| rng.random_range(-1e3..1e3)))
        .collect();
    let colors = colored.then(|| {
        (0..n)
            .map(|_| [0, 1, 2].map(|_| f64::from(rng.random_range(0..=255_u8))))
            .collect()
    });
    PointCloud::new(pts, colors).unwrap()
}

#[test]
fn round_trips_through_files() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let dir = tempfile::tempdir().unwrap();
    for (i, format) in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian]
        .into_iter()
        .enumerate()
    {
        for colored in [true, false] {
            let cloud = random_cloud(&mut rng, 257, colored);
            let path = dir.path().join(format!("c{i}{colored}.ply"));
            save_ply(&cloud, &path, format).unwrap();
            assert_eq!(load_ply(&path).unwrap(), cloud);
        }
    }
}

#[test]
fn reads_float_vertices_with_extra_properties() {
    let mut bytes = b"ply\nformat binary_little_endian 1.0\ncomment made by hand\n\
element vertex 2\nproperty float x\nproperty float y\nproperty float z\n\
property float nx\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n\
element face 0\nproperty list uchar int vertex_indices\nend_header\n"
        .to_vec();
    for (p, c) in [
        ([1.5_f32, -2.0, 0.25], [10_u8, 20, 30]),
        ([0.0, 0.0, 1.0], [255, 0, 7]),
    ] {
        for v in p {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&9.0_f32.to_le_bytes());
        bytes.extend_from_slice(&c);
    }
    let cloud = read_ply(&bytes).unwrap();
    assert_eq!(cloud.positions(), &[[1.5, -2.0, 0.25], [0.0, 0.0, 1.0]]);
    assert_eq!(
        cloud.colors().unwrap(),
        &[[10.0, 20.0, 30.0], [255.0, 0.0, 7.0]]
    );
}

#[test]
fn rejects_malformed_input() {
    assert!(matches!(read_ply(b"plx\n"), Err(Error::PlyHeader(_))));
    let short = b"ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 1 1\n";
    assert!(read_ply(short).is_err());
    let int_xyz = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty int x\nproperty int y\nproperty int z\nend_header\n0 0 0\n";
    assert!(matches!(read_ply(int_xyz), Err(Error::PlyProperty { .. })));
    let mut out = Vec::new();
    write_ply(
        &random_cloud(&mut ChaCha8Rng::seed_from_u64(1), 3, true),
        PlyFormat::Ascii,
        &mut out,
    )
    .unwrap();
    assert!(read_ply(&out).is_ok());
    assert!(matches!(
        load_ply("/nonexistent/cloud.ply"),
        Err(Error::Io { .. })
    ));
}
