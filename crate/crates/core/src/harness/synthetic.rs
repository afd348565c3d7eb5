//! Seeded synthetic classification data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::harness::libsvm::LibsvmDataset;
use crate::objectives::LabelSet;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `m` samples `a = S g` with `g ~ N(0, I_d)`, labelled `±1` by a planted
/// logistic model `P(c = +1) = σ(⟨g, w⟩ + b)`.
///
/// `S` is diagonal with scales decaying geometrically from 1 to `scale_min`,
/// so `scale_min < 1` makes the problem ill-conditioned the way raw
/// features of mixed units are.
pub fn synthetic_dataset(m: usize, d: usize, scale_min: f64, seed: u64) -> Result<LibsvmDataset> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "synthetic data needs m, d >= 1, got m = {m}, d = {d}"
        )));
    }
    if !(scale_min > 0.0 && scale_min <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "scale_min must lie in (0, 1], got {scale_min}"
        )));
    }
    let scales: Vec<f64> = (0..d)
        .map(|j| scale_min.powf(if d > 1 { j as f64 / (d - 1) as f64 } else { 0.0 }))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 3.0 / (d as f64).sqrt();
    let w: Vec<f64> = (0..d)
        .map(|_| scale * normal(&mut rng))
        .collect();
    let bias = 0.5 * normal(&mut rng);
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let g: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
        let z: f64 = g.iter().zip(&w).map(|(g, w)| g * w).sum::<f64>() + bias;
        let p = 1.0 / (1.0 + (-z).exp());
        labels.push(if rng.random_bool(p) { 1.0 } else { -1.0 });
        rows.push(g.iter().zip(&scales).map(|(g, s)| g * s).enumerate().collect());
    }
    Ok(LibsvmDataset {
        rows,
        labels,
        label_set: LabelSet::PlusMinusOne,
        dim: d,
    })
}
