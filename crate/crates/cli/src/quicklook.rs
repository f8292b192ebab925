//! 8-bit PGM quick-look of an image magnitude in dB.

use std::io::Write;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use mimosar::SarImage;

use crate::CliError;

/// Map `|I|` to gray levels: the peak is white and everything
/// `dynamic_range_db` or more below it is black. Image rows run along y,
/// columns along x.
pub fn gray_levels(img: &SarImage, dynamic_range_db: f64) -> Vec<u8> {
    let mag = img.magnitude();
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    mag.iter()
        .map(|&a| {
            if peak <= 0.0 || a <= 0.0 {
                return 0;
            }
            let db = 20.0 * (a / peak).log10();
            let t = ((db + dynamic_range_db) / dynamic_range_db).clamp(0.0, 1.0);
            (t * 255.0).round() as u8
        })
        .collect()
}

pub fn write_pgm<W: Write>(out: W, img: &SarImage, dynamic_range_db: f64) -> Result<(), CliError> {
    let levels = gray_levels(img, dynamic_range_db);
    PnmEncoder::new(out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&levels, img.grid.nx as u32, img.grid.ny as u32, ExtendedColorType::L8)
        .map_err(|e| CliError::Io(format!("quick-look: {e}")))
}
