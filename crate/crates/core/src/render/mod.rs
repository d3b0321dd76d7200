//! Offline presbyopic-blur rendering.
//!
//! Each pixel gets the lens power the controller would settle on for that
//! pixel's depth, the virtual eye turns it into residual defocus, and the
//! defocus sets a circle-of-confusion radius. Output pixels gather their
//! neighbourhood through a normalized kernel of that radius, clamping at the
//! image edges.

mod io;
mod kernel;

pub use io::{read_depth, read_depth_csv, read_image, write_depth_pgm16, write_image};
pub use kernel::{Kernel, KernelShape};

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{bucket, steady_command, ControllerConfig, Region};
use crate::device::eye::EyeModel;
use crate::error::{Error, Result};
use crate::optics::{AgeMode, Diopter};
use crate::wearer::WearerProfile;

/// Interleaved image, 1 (gray) or 3 (RGB) channels, values on a 0..=255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::validation(format!(
                "unsupported channel count {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::validation(
                "raster data length does not match dimensions",
            ));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Rounded and clamped to 8 bits.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn from_u8(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            bytes.iter().map(|&b| b as f64).collect(),
        )
    }
}

/// Per-pixel scene depth in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub depth_mm: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, depth_mm: Vec<f64>) -> Result<Self> {
        if depth_mm.len() != width * height {
            return Err(Error::validation(
                "depth map length does not match dimensions",
            ));
        }
        if let Some(bad) = depth_mm.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::validation(format!("depth {bad} mm is not positive")));
        }
        Ok(Self {
            width,
            height,
            depth_mm,
        })
    }

    pub fn uniform(width: usize, height: usize, depth_mm: f64) -> Result<Self> {
        Self::new(width, height, vec![depth_mm; width * height])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderParams {
    pub pupil_mm: f64,
    /// Pixels of blur radius per diopter per millimeter of pupil.
    pub px_per_d_mm: f64,
    pub kernel: KernelShape,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            pupil_mm: 4.0,
            px_per_d_mm: 2.0,
            kernel: KernelShape::Gaussian,
        }
    }
}

impl RenderParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pupil_mm > 0.0) || !(self.px_per_d_mm > 0.0) {
            return Err(Error::validation(
                "render pupil_mm and px_per_d_mm must be > 0",
            ));
        }
        Ok(())
    }
}

/// Settled controller state that decides per-depth lens power.
#[derive(Debug, Clone)]
pub struct ControllerSnapshot {
    pub cfg: ControllerConfig,
    pub mode: AgeMode,
    pub wearer: WearerProfile,
    pub temp_c: f64,
}

impl ControllerSnapshot {
    pub fn new(cfg: ControllerConfig, mode: AgeMode, wearer: WearerProfile) -> Self {
        Self {
            cfg,
            mode,
            wearer,
            temp_c: 25.0,
        }
    }

    /// Region and left-lens power the controller holds for a target at `depth_mm`.
    pub fn lens_for_depth(&self, depth_mm: f64) -> Result<(Region, Diopter)> {
        let mm = bucket(
            depth_mm.floor().min(u32::MAX as f64) as u32,
            self.cfg.debounce_bucket_mm,
        );
        let (region, left, _) =
            steady_command(mm, self.mode, &self.wearer, self.temp_c, &self.cfg)?;
        let delivered = crate::device::pushup::delivered_power(left, self.temp_c, &self.cfg);
        Ok((region, delivered))
    }
}

/// Circle-of-confusion radius in pixels.
pub fn coc_radius(defocus_d: Diopter, params: &RenderParams) -> f64 {
    debug_assert!(defocus_d.0 >= 0.0);
    defocus_d.0 * params.pupil_mm * params.px_per_d_mm
}

/// Blur radius for every pixel of `depth`, row-major.
pub fn radius_map(
    depth: &DepthImage,
    eye: &EyeModel,
    snapshot: &ControllerSnapshot,
    params: &RenderParams,
) -> Result<Vec<f64>> {
    depth
        .depth_mm
        .iter()
        .map(|&d| {
            let (_, power) = snapshot.lens_for_depth(d)?;
            let defocus = eye.defocus_through(power, d / 1000.0)?;
            Ok(coc_radius(defocus, params))
        })
        .collect()
}

pub fn render(
    image: &Raster,
    depth: &DepthImage,
    eye: &EyeModel,
    snapshot: &ControllerSnapshot,
    params: &RenderParams,
) -> Result<Raster> {
    if image.width != depth.width || image.height != depth.height {
        return Err(Error::validation(format!(
            "image is {}x{} but depth map is {}x{}",
            image.width, image.height, depth.width, depth.height
        )));
    }
    params.validate()?;
    eye.validate()?;
    let radii = radius_map(depth, eye, snapshot, params)?;
    Ok(convolve_variable(image, &radii, params.kernel))
}

/// Spatially varying gather convolution with clamp-to-edge sampling.
pub fn convolve_variable(image: &Raster, radii: &[f64], shape: KernelShape) -> Raster {
    assert_eq!(radii.len(), image.width * image.height);
    let mut kernels: HashMap<u64, Kernel> = HashMap::new();
    for &r in radii {
        if r > 0.0 {
            kernels
                .entry(r.to_bits())
                .or_insert_with(|| Kernel::new(shape, r));
        }
    }

    let (w, h, ch) = (image.width, image.height, image.channels);
    let mut out = vec![0.0; image.data.len()];
    out.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let r = radii[y * w + x];
            let px = &mut row[x * ch..(x + 1) * ch];
            if r <= 0.0 {
                px.copy_from_slice(&image.data[(y * w + x) * ch..(y * w + x + 1) * ch]);
                continue;
            }
            let k = &kernels[&r.to_bits()];
            let half = k.half as isize;
            let mut acc = [0.0f64; 3];
            for (dy, krow) in k.weights.chunks(k.size()).enumerate() {
                let sy = (y as isize + dy as isize - half).clamp(0, h as isize - 1) as usize;
                for (dx, &wgt) in krow.iter().enumerate() {
                    if wgt == 0.0 {
                        continue;
                    }
                    let sx = (x as isize + dx as isize - half).clamp(0, w as isize - 1) as usize;
                    let base = (sy * w + sx) * ch;
                    for (a, v) in acc.iter_mut().zip(&image.data[base..base + ch]) {
                        *a += wgt * v;
                    }
                }
            }
            px.copy_from_slice(&acc[..ch]);
        }
    });
    Raster {
        width: w,
        height: h,
        channels: ch,
        data: out,
    }
}
