use std::path::PathBuf;
use std::time::Instant;

use artidet::image::load_image;
use artidet::kernels::{delta_e00, fsim, msssim, pixelwise_msssim, ssim, ssim_map};
use artidet::Plane;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn luma(name: &str) -> Plane {
    let img = load_image(data_dir().join("natural").join(name)).unwrap();
    img.plane(0).clone()
}

fn natural_pairs() -> Vec<(String, String, f64)> {
    let text = std::fs::read_to_string(data_dir().join("natural/fsim_reference.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn ciede2000_conformance_pairs() {
    let text = std::fs::read_to_string(data_dir().join("ciede2000_pairs.csv")).unwrap();
    let mut n = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.trim().parse().unwrap()).collect();
        let got = delta_e00([v[0], v[1], v[2]], [v[3], v[4], v[5]]);
        assert!((got - v[6]).abs() < 1e-4, "pair {n}: {got} vs {}", v[6]);
        let back = delta_e00([v[3], v[4], v[5]], [v[0], v[1], v[2]]);
        assert!((back - v[6]).abs() < 1e-4, "pair {n} reversed");
        n += 1;
    }
    assert_eq!(n, 34);
}

#[test]
fn fsim_matches_reference_on_natural_images() {
    let start = Instant::now();
    let pairs = natural_pairs();
    assert_eq!(pairs.len(), 20);
    for (name, distortion, want) in pairs {
        let a = luma(&format!("{name}_ref.png"));
        let b = luma(&format!("{name}_{distortion}.png"));
        let got = fsim(&a, &b).unwrap();
        assert!((got - want).abs() < 0.01, "{name}/{distortion}: {got} vs {want}");
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn ssim_map_mean_equals_scalar() {
    for (name, distortion, _) in natural_pairs() {
        let a = luma(&format!("{name}_ref.png"));
        let b = luma(&format!("{name}_{distortion}.png"));
        let s = ssim(&a, &b).unwrap();
        let m = ssim_map(&a, &b).unwrap().mean();
        assert!((s - m).abs() < 1e-6, "{name}/{distortion}");
        assert!(s < 1.0 && s > 0.0);
    }
}

#[test]
fn msssim_drops_under_blur() {
    // Heavier blur lowers both the scalar and the pixel-wise multi-scale score.
    let a = luma("camera_ref.png");
    let b = luma("camera_blur.png");
    assert_eq!(msssim(&a, &a).unwrap(), 1.0);
    let s = msssim(&a, &b).unwrap();
    assert!(s < 1.0);
    let map = pixelwise_msssim(&a, &b).unwrap();
    assert!(map.map.mean() < 1.0);
    assert!(map.map.min() >= 0.0 && map.map.max() <= 1.0);
}
