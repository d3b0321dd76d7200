use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelShape {
    /// Gaussian whose per-axis variance matches a uniform disc of the same radius.
    #[default]
    Gaussian,
    Disc,
}

/// Square, normalized point-spread kernel of side `2 * half + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub half: usize,
    pub weights: Vec<f64>,
}

impl Kernel {
    pub fn new(shape: KernelShape, radius_px: f64) -> Self {
        if !(radius_px > 0.0) {
            return Self::identity();
        }
        match shape {
            KernelShape::Gaussian => Self::gaussian(radius_px / std::f64::consts::SQRT_2),
            KernelShape::Disc => Self::disc(radius_px),
        }
    }

    pub fn identity() -> Self {
        Self {
            half: 0,
            weights: vec![1.0],
        }
    }

    pub fn size(&self) -> usize {
        2 * self.half + 1
    }

    fn gaussian(sigma: f64) -> Self {
        let half = (3.0 * sigma).ceil() as usize;
        let n = 2 * half + 1;
        let two_var = 2.0 * sigma * sigma;
        let mut weights = Vec::with_capacity(n * n);
        for y in 0..n {
            let dy = y as f64 - half as f64;
            for x in 0..n {
                let dx = x as f64 - half as f64;
                weights.push((-(dx * dx + dy * dy) / two_var).exp());
            }
        }
        Self::normalized(half, weights)
    }

    fn disc(radius: f64) -> Self {
        let half = radius.floor() as usize;
        let n = 2 * half + 1;
        let r2 = radius * radius;
        let mut weights = Vec::with_capacity(n * n);
        for y in 0..n {
            let dy = y as f64 - half as f64;
            for x in 0..n {
                let dx = x as f64 - half as f64;
                weights.push(if dx * dx + dy * dy <= r2 { 1.0 } else { 0.0 });
            }
        }
        Self::normalized(half, weights)
    }

    fn normalized(half: usize, mut weights: Vec<f64>) -> Self {
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        Self { half, weights }
    }
}
