//! Binary PGM/PPM images and depth maps (16-bit PGM in mm, or a CSV grid).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use super::{DepthImage, Raster};
use crate::error::{Error, Result};

fn load_pnm(path: &Path) -> Result<DynamicImage> {
    let reader = BufReader::new(File::open(path)?);
    Ok(image::load(reader, ImageFormat::Pnm)?)
}

/// Reads an 8-bit PGM (gray) or PPM (RGB) file.
pub fn read_image(path: impl AsRef<Path>) -> Result<Raster> {
    let img = load_pnm(path.as_ref())?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => Raster::from_u8(w, h, 1, buf.as_raw()),
        DynamicImage::ImageRgb8(buf) => Raster::from_u8(w, h, 3, buf.as_raw()),
        other => Err(Error::validation(format!(
            "expected 8-bit gray or RGB image, got {:?}",
            other.color()
        ))),
    }
}

/// Writes a raster as binary PGM (1 channel) or PPM (3 channels), 8 bits.
pub fn write_image(path: impl AsRef<Path>, raster: &Raster) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    let (subtype, color) = match raster.channels {
        1 => (
            PnmSubtype::Graymap(SampleEncoding::Binary),
            ExtendedColorType::L8,
        ),
        3 => (
            PnmSubtype::Pixmap(SampleEncoding::Binary),
            ExtendedColorType::Rgb8,
        ),
        n => return Err(Error::validation(format!("cannot write {n}-channel image"))),
    };
    PnmEncoder::new(out).with_subtype(subtype).write_image(
        &raster.to_u8(),
        raster.width as u32,
        raster.height as u32,
        color,
    )?;
    Ok(())
}

/// Reads a depth map: `.csv` as a comma-separated grid, anything else as a
/// 16-bit (or 8-bit) PGM holding millimeters.
pub fn read_depth(path: impl AsRef<Path>) -> Result<DepthImage> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        return read_depth_csv(File::open(path)?);
    }
    let img = load_pnm(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let depth = match img {
        DynamicImage::ImageLuma16(buf) => buf.as_raw().iter().map(|&v| v as f64).collect(),
        DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&v| v as f64).collect(),
        other => {
            return Err(Error::validation(format!(
                "depth map must be single-channel, got {:?}",
                other.color()
            )))
        }
    };
    DepthImage::new(w, h, depth)
}

/// Depth grid in mm, one image row per CSV line.
pub fn read_depth_csv<R: Read>(reader: R) -> Result<DepthImage> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut width = None;
    let mut depth = Vec::new();
    let mut height = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if *width.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::Parse {
                line,
                message: "ragged depth row".into(),
            });
        }
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|e| Error::Parse {
                line,
                message: format!("depth `{field}`: {e}"),
            })?;
            depth.push(v);
        }
        height += 1;
    }
    DepthImage::new(width.unwrap_or(0), height, depth)
}

/// Writes a 16-bit binary PGM depth map, rounding to whole millimeters.
pub fn write_depth_pgm16(path: impl AsRef<Path>, depth: &DepthImage) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n65535\n", depth.width, depth.height)?;
    for &d in &depth.depth_mm {
        out.write_all(&(d.round().clamp(1.0, 65535.0) as u16).to_be_bytes())?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_round_trip() {
        let dir = tempdir();
        for ch in [1, 3] {
            let data: Vec<f64> = (0..5 * 4 * ch).map(|i| (i * 11 % 256) as f64).collect();
            let r = Raster::new(5, 4, ch, data).unwrap();
            let p = dir.join(format!("img{ch}.pnm"));
            write_image(&p, &r).unwrap();
            assert_eq!(read_image(&p).unwrap(), r);
        }
    }

    #[test]
    fn depth_pgm16_round_trip() {
        let dir = tempdir();
        let d = DepthImage::new(3, 2, vec![100.0, 250.0, 1000.0, 4000.0, 65535.0, 1.0]).unwrap();
        let p = dir.join("depth.pgm");
        write_depth_pgm16(&p, &d).unwrap();
        assert_eq!(read_depth(&p).unwrap(), d);
    }

    #[test]
    fn depth_csv() {
        let d = read_depth_csv("100,200\n300,400\n500,600\n".as_bytes()).unwrap();
        assert_eq!((d.width, d.height), (2, 3));
        assert_eq!(d.depth_mm[5], 600.0);
        assert!(read_depth_csv("100,200\n300\n".as_bytes()).is_err());
        assert!(read_depth_csv("100,x\n".as_bytes()).is_err());
        assert!(read_depth_csv("100,0\n".as_bytes()).is_err());
    }

    fn tempdir() -> std::path::PathBuf {
        let p = std::env::temp_dir().join(format!(
            "agelens-io-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&p).unwrap();
        p
    }
}
