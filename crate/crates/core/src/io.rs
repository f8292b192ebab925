//! Binary interchange formats. All fields are little-endian.
//!
//! Data cube (`SRCC`):
//!
//! ```text
//! magic "SRCC" | version u32 | N u32 | M u32 | bins u32
//! first-bin range f64 | bin spacing f64 | PRI f64 | wavelength f64
//! (re f32, im f32) samples, nested (m, n, bin) with m slowest
//! ```
//!
//! Image or image stack (`SIMG`):
//!
//! ```text
//! magic "SIMG" | version u32 | kind u32 (0 image, 1 stack) | M u32 | ny u32 | nx u32
//! x0 f64 | dx f64 | y0 f64 | dy f64 | height f64
//! tau f64 x M (stacks only)
//! (re f32, im f32) pixels, row-major (y rows, x columns), m slowest
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex32;

use crate::error::{Error, Result};
use crate::geometry::GroundGrid;
use crate::signal_sim::DataCube;
use crate::tdbp::{ImageStack, SarImage};

pub const CUBE_MAGIC: &[u8; 4] = b"SRCC";
pub const IMAGE_MAGIC: &[u8; 4] = b"SIMG";
pub const VERSION: u32 = 1;

const KIND_IMAGE: u32 = 0;
const KIND_STACK: u32 = 1;

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_samples<W: Write>(w: &mut W, s: &[Complex32]) -> Result<()> {
    let mut buf = Vec::with_capacity(s.len() * 8);
    for v in s {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn get_samples<R: Read>(r: &mut R, count: usize) -> Result<Vec<Complex32>> {
    let mut buf = vec![0u8; count.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?];
    r.read_exact(&mut buf).map_err(truncated)?;
    let out = buf
        .chunks_exact(8)
        .map(|c| {
            Complex32::new(
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
            )
        })
        .collect();
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(out)
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        e.into()
    }
}

fn check_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    if &b != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&b),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

fn dim(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} does not fit in u32")))
}

pub fn write_cube<W: Write>(w: &mut W, cube: &DataCube) -> Result<()> {
    w.write_all(CUBE_MAGIC)?;
    put_u32(w, VERSION)?;
    put_u32(w, dim(cube.elements)?)?;
    put_u32(w, dim(cube.pulses)?)?;
    put_u32(w, dim(cube.num_bins)?)?;
    put_f64(w, cube.first_bin_range)?;
    put_f64(w, cube.bin_spacing)?;
    put_f64(w, cube.pri)?;
    put_f64(w, cube.wavelength)?;
    put_samples(w, cube.samples())
}

pub fn read_cube<R: Read>(r: &mut R) -> Result<DataCube> {
    check_magic(r, CUBE_MAGIC)?;
    let elements = get_u32(r)? as usize;
    let pulses = get_u32(r)? as usize;
    let bins = get_u32(r)? as usize;
    let first = get_f64(r)?;
    let spacing = get_f64(r)?;
    let pri = get_f64(r)?;
    let wavelength = get_f64(r)?;
    let samples = get_samples(r, bins * elements * pulses)?;
    DataCube::from_samples(first, spacing, bins, elements, pulses, pri, wavelength, samples)
}

fn write_grid_header<W: Write>(w: &mut W, kind: u32, pulses: usize, g: &GroundGrid) -> Result<()> {
    w.write_all(IMAGE_MAGIC)?;
    put_u32(w, VERSION)?;
    put_u32(w, kind)?;
    put_u32(w, dim(pulses)?)?;
    put_u32(w, dim(g.ny)?)?;
    put_u32(w, dim(g.nx)?)?;
    for v in [g.x0, g.dx, g.y0, g.dy, g.height] {
        put_f64(w, v)?;
    }
    Ok(())
}

fn read_grid_header<R: Read>(r: &mut R) -> Result<(u32, usize, GroundGrid)> {
    check_magic(r, IMAGE_MAGIC)?;
    let kind = get_u32(r)?;
    let pulses = get_u32(r)? as usize;
    let ny = get_u32(r)? as usize;
    let nx = get_u32(r)? as usize;
    let x0 = get_f64(r)?;
    let dx = get_f64(r)?;
    let y0 = get_f64(r)?;
    let dy = get_f64(r)?;
    let height = get_f64(r)?;
    let grid = GroundGrid::new(x0, dx, nx, y0, dy, ny, height).map_err(|e| Error::Format(e.to_string()))?;
    Ok((kind, pulses, grid))
}

pub fn write_image<W: Write>(w: &mut W, img: &SarImage) -> Result<()> {
    write_grid_header(w, KIND_IMAGE, 1, &img.grid)?;
    put_samples(w, img.data())
}

pub fn read_image<R: Read>(r: &mut R) -> Result<SarImage> {
    let (kind, pulses, grid) = read_grid_header(r)?;
    if kind != KIND_IMAGE || pulses != 1 {
        return Err(Error::Format("file holds an image stack, not an image".into()));
    }
    SarImage::from_data(grid, get_samples(r, grid.len())?)
}

pub fn write_stack<W: Write>(w: &mut W, stack: &ImageStack) -> Result<()> {
    write_grid_header(w, KIND_STACK, stack.pulses(), &stack.grid)?;
    for t in &stack.tau {
        put_f64(w, *t)?;
    }
    put_samples(w, stack.data())
}

pub fn read_stack<R: Read>(r: &mut R) -> Result<ImageStack> {
    let (kind, pulses, grid) = read_grid_header(r)?;
    if kind != KIND_STACK {
        return Err(Error::Format("file holds a single image, not a stack".into()));
    }
    let tau = (0..pulses).map(|_| get_f64(r)).collect::<Result<Vec<_>>>()?;
    ImageStack::from_data(grid, tau, get_samples(r, grid.len() * pulses)?)
}

pub fn save_cube(path: &Path, cube: &DataCube) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_cube(&mut w, cube)?;
    w.flush()?;
    Ok(())
}

pub fn load_cube(path: &Path) -> Result<DataCube> {
    read_cube(&mut BufReader::new(File::open(path)?))
}

pub fn save_image(path: &Path, img: &SarImage) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_image(&mut w, img)?;
    w.flush()?;
    Ok(())
}

pub fn load_image(path: &Path) -> Result<SarImage> {
    read_image(&mut BufReader::new(File::open(path)?))
}

pub fn save_stack(path: &Path, stack: &ImageStack) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_stack(&mut w, stack)?;
    w.flush()?;
    Ok(())
}

pub fn load_stack(path: &Path) -> Result<ImageStack> {
    read_stack(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cube_from(samples: Vec<Complex32>, bins: usize, n: usize, m: usize) -> DataCube {
        DataCube::from_samples(1.5, 0.025, bins, n, m, 1e-3, 0.004, samples).unwrap()
    }

    #[test]
    fn cube_header_layout() {
        let cube = cube_from(vec![Complex32::new(1.0, -2.0); 6], 3, 2, 1);
        let mut buf = Vec::new();
        write_cube(&mut buf, &cube).unwrap();
        assert_eq!(&buf[0..4], b"SRCC");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[16..20].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(buf[20..28].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(buf[44..52].try_into().unwrap()), 0.004);
        assert_eq!(buf.len(), 52 + 6 * 8);
        assert_eq!(f32::from_le_bytes(buf[52..56].try_into().unwrap()), 1.0);
        assert_eq!(f32::from_le_bytes(buf[56..60].try_into().unwrap()), -2.0);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let cube = cube_from(vec![Complex32::new(0.5, 0.5); 4], 2, 2, 1);
        let mut buf = Vec::new();
        write_cube(&mut buf, &cube).unwrap();
        assert!(read_cube(&mut &buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_cube(&mut &extra[..]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_cube(&mut &bad[..]).is_err());
        assert!(read_image(&mut &buf[..]).is_err());
    }

    #[test]
    fn image_and_stack_kinds_are_distinct() {
        let g = GroundGrid::new(5.0, 0.05, 3, -1.0, 0.05, 2, 0.0).unwrap();
        let img = SarImage::from_data(g, vec![Complex32::new(1.0, 0.0); 6]).unwrap();
        let mut buf = Vec::new();
        write_image(&mut buf, &img).unwrap();
        assert_eq!(&buf[0..4], b"SIMG");
        assert!(read_stack(&mut &buf[..]).is_err());
        assert_eq!(read_image(&mut &buf[..]).unwrap(), img);
    }

    proptest! {
        #[test]
        fn cube_round_trip_is_bit_exact(
            raw in proptest::collection::vec(any::<(f32, f32)>().prop_filter("finite", |(a, b)| a.is_finite() && b.is_finite()), 24)
        ) {
            let cube = cube_from(raw.iter().map(|&(a, b)| Complex32::new(a, b)).collect(), 4, 3, 2);
            let mut buf = Vec::new();
            write_cube(&mut buf, &cube).unwrap();
            let back = read_cube(&mut &buf[..]).unwrap();
            let mut again = Vec::new();
            write_cube(&mut again, &back).unwrap();
            prop_assert_eq!(buf, again);
        }

        #[test]
        fn stack_round_trip_is_bit_exact(
            raw in proptest::collection::vec((-1e3f32..1e3, -1e3f32..1e3), 12),
        ) {
            let g = GroundGrid::new(5.0, 0.05, 3, -1.0, 0.05, 2, 0.25).unwrap();
            let stack = ImageStack::from_data(g, vec![-0.001, 0.001], raw.iter().map(|&(a, b)| Complex32::new(a, b)).collect()).unwrap();
            let mut buf = Vec::new();
            write_stack(&mut buf, &stack).unwrap();
            let back = read_stack(&mut &buf[..]).unwrap();
            prop_assert_eq!(back.data(), stack.data());
            prop_assert_eq!(&back.tau, &stack.tau);
            prop_assert_eq!(back.grid, stack.grid);
        }
    }
}
