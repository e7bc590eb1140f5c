#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use esbmix::parallel::stream_rng;
use rand_distr::{Distribution, StandardNormal};

pub const MEANS: [f64; 3] = [-6.0, 0.0, 6.0];
pub const WEIGHTS: [f64; 3] = [0.3, 0.4, 0.3];

/// 200 draws from `0.3 N(-6, 1) + 0.4 N(0, 1) + 0.3 N(6, 1)`, 60/80/60 per
/// component.
pub fn three_normals() -> Vec<f64> {
    let mut rng = stream_rng(2024, 0);
    let mut out = Vec::with_capacity(200);
    for (m, n) in MEANS.iter().zip([60, 80, 60]) {
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            out.push(m + z);
        }
    }
    out
}

pub fn three_normals_density(x: f64) -> f64 {
    MEANS
        .iter()
        .zip(WEIGHTS)
        .map(|(m, w)| w * (-(x - m).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt())
        .sum()
}

/// 300 points, 75 around each of `(+-5, +-5)` with standard deviation 0.8,
/// and the generating component of each.
pub fn four_blobs() -> (Vec<[f64; 2]>, Vec<usize>) {
    let centres = [[-5.0, -5.0], [-5.0, 5.0], [5.0, -5.0], [5.0, 5.0]];
    let mut rng = stream_rng(2025, 0);
    let mut points = Vec::with_capacity(300);
    let mut truth = Vec::with_capacity(300);
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..75 {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            points.push([centre[0] + 0.8 * a, centre[1] + 0.8 * b]);
            truth.push(c);
        }
    }
    (points, truth)
}

pub fn write_rows<const D: usize>(path: &Path, rows: &[[f64; D]]) {
    let mut f = std::fs::File::create(path).unwrap();
    for r in rows {
        let line: Vec<String> = r.iter().map(f64::to_string).collect();
        writeln!(f, "{}", line.join(",")).unwrap();
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) {
    std::fs::write(path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
}
