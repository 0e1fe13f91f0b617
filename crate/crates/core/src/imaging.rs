//! Grayscale quantization of encoding matrices, region grids, RGB fusion,
//! area-filter downscaling and PNG output.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encodings::{EncodingKind, EncodingMatrix};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("{kind} entry {value} at ({row}, {col}) is outside its legal range")]
    EncodingRange { kind: &'static str, row: usize, col: usize, value: f64 },
    #[error("grid shape mismatch: {0}")]
    GridShape(String),
    #[error("channel shape mismatch: {0}")]
    ChannelShape(String),
    #[error("unsupported resize from {from_h}x{from_w} to {to_h}x{to_w}")]
    UnsupportedResize { from_h: usize, from_w: usize, to_h: usize, to_w: usize },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("PNG encoding failed: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error("PNG decoding failed: {0}")]
    PngDecode(#[from] png::DecodingError),
}

/// 8-bit single-channel image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if height == 0 || width == 0 || pixels.len() != height * width {
            return Err(ImagingError::InvalidImage(format!("{height}x{width} image with {} pixels", pixels.len())));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: u8) -> Result<Self, ImagingError> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Copies out the `height x width` rectangle whose top-left corner is
    /// `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<GrayImage, ImagingError> {
        if top + height > self.height || left + width > self.width {
            return Err(ImagingError::InvalidImage(format!(
                "crop {height}x{width} at ({top}, {left}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut pixels = Vec::with_capacity(height * width);
        for r in top..top + height {
            let start = r * self.width + left;
            pixels.extend_from_slice(&self.pixels[start..start + width]);
        }
        GrayImage::new(height, width, pixels)
    }
}

/// Planar 8-bit RGB image. Channel 0 is red, 1 green, 2 blue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    planes: [Vec<u8>; 3],
}

impl RgbImage {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn plane(&self, channel: usize) -> &[u8] {
        &self.planes[channel]
    }

    /// Extracts one channel as a grayscale image.
    pub fn channel(&self, channel: usize) -> GrayImage {
        GrayImage { height: self.height, width: self.width, pixels: self.planes[channel].clone() }
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = row * self.width + col;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }

    /// Interleaved `RGBRGB...` bytes, row-major.
    pub fn to_interleaved(&self) -> Vec<u8> {
        let n = self.height * self.width;
        let mut out = Vec::with_capacity(n * 3);
        for i in 0..n {
            out.extend([self.planes[0][i], self.planes[1][i], self.planes[2][i]]);
        }
        out
    }

    pub fn from_interleaved(height: usize, width: usize, data: &[u8]) -> Result<Self, ImagingError> {
        if height == 0 || width == 0 || data.len() != height * width * 3 {
            return Err(ImagingError::InvalidImage(format!("{height}x{width} RGB image with {} bytes", data.len())));
        }
        let mut planes = [Vec::new(), Vec::new(), Vec::new()];
        for (c, plane) in planes.iter_mut().enumerate() {
            *plane = data.iter().skip(c).step_by(3).copied().collect();
        }
        Ok(Self { height, width, planes })
    }
}

/// Arrangement of per-region tiles into one grid image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
    pub tile_height: usize,
    pub tile_width: usize,
}

impl Default for GridLayout {
    fn default() -> Self {
        Self { rows: 3, cols: 4, tile_height: 500, tile_width: 500 }
    }
}

impl GridLayout {
    pub fn tile_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn height(&self) -> usize {
        self.rows * self.tile_height
    }

    pub fn width(&self) -> usize {
        self.cols * self.tile_width
    }

    /// Top-left pixel of tile `k` (row-major placement).
    pub fn tile_origin(&self, k: usize) -> (usize, usize) {
        ((k / self.cols) * self.tile_height, (k % self.cols) * self.tile_width)
    }
}

/// Quantizes a GASF/GADF value in `[-1, 1]` to `round((v + 1) / 2 * 255)`.
pub fn quantize_unit(v: f64) -> u8 {
    // f64::round is half-away-from-zero.
    ((v + 1.0) / 2.0 * 255.0).round() as u8
}

/// Maps an encoding matrix to an 8-bit image: GASF/GADF via the affine
/// `[-1, 1] → [0, 255]` map, RP via `0 → 0`, `1 → 255`.
pub fn matrix_to_gray(matrix: &EncodingMatrix) -> Result<GrayImage, ImagingError> {
    let n = matrix.size();
    let kind = matrix.kind();
    let mut pixels = Vec::with_capacity(n * n);
    for (idx, &v) in matrix.entries().iter().enumerate() {
        let px = match kind {
            EncodingKind::Gasf | EncodingKind::Gadf if (-1.0..=1.0).contains(&v) => quantize_unit(v),
            EncodingKind::Rp if v == 0.0 => 0,
            EncodingKind::Rp if v == 1.0 => 255,
            _ => return Err(ImagingError::EncodingRange { kind: kind.name(), row: idx / n, col: idx % n, value: v }),
        };
        pixels.push(px);
    }
    GrayImage::new(n, n, pixels)
}

/// Places `tiles` into a `rows x cols` grid; tile `k` lands in grid row
/// `k / cols`, column `k % cols`.
pub fn compose_grid(tiles: &[GrayImage], layout: &GridLayout) -> Result<GrayImage, ImagingError> {
    if tiles.len() != layout.tile_count() || tiles.is_empty() {
        return Err(ImagingError::GridShape(format!(
            "{}x{} layout needs {} tiles, got {}",
            layout.rows,
            layout.cols,
            layout.tile_count(),
            tiles.len()
        )));
    }
    if let Some((k, t)) =
        tiles.iter().enumerate().find(|(_, t)| t.height != layout.tile_height || t.width != layout.tile_width)
    {
        return Err(ImagingError::GridShape(format!(
            "tile {k} is {}x{}, layout expects {}x{}",
            t.height, t.width, layout.tile_height, layout.tile_width
        )));
    }
    let (height, width) = (layout.height(), layout.width());
    let mut pixels = vec![0u8; height * width];
    for (k, tile) in tiles.iter().enumerate() {
        let (top, left) = layout.tile_origin(k);
        for r in 0..tile.height {
            let dst = (top + r) * width + left;
            pixels[dst..dst + tile.width].copy_from_slice(&tile.pixels[r * tile.width..(r + 1) * tile.width]);
        }
    }
    GrayImage::new(height, width, pixels)
}

/// Stacks three grayscale planes into one RGB image, in argument order.
pub fn fuse_rgb(red: GrayImage, green: GrayImage, blue: GrayImage) -> Result<RgbImage, ImagingError> {
    let dims = (red.height, red.width);
    for (name, img) in [("green", &green), ("blue", &blue)] {
        if (img.height, img.width) != dims {
            return Err(ImagingError::ChannelShape(format!(
                "{name} is {}x{}, red is {}x{}",
                img.height, img.width, dims.0, dims.1
            )));
        }
    }
    Ok(RgbImage { height: dims.0, width: dims.1, planes: [red.pixels, green.pixels, blue.pixels] })
}

/// For each output index, the source indices its footprint overlaps and the
/// overlap length. Lengths are in units of `1/dst` of a source pixel, so an
/// output footprint always totals `src` units.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, u64)>> {
    (0..dst)
        .map(|o| {
            let lo = o * src;
            let hi = (o + 1) * src;
            let first = lo / dst;
            let last = (hi - 1) / dst;
            (first..=last)
                .map(|s| {
                    let s_lo = s * dst;
                    let s_hi = (s + 1) * dst;
                    (s, (hi.min(s_hi) - lo.max(s_lo)) as u64)
                })
                .collect()
        })
        .collect()
}

fn resize_plane(
    plane: &[u8],
    src_h: usize,
    src_w: usize,
    wy: &[Vec<(usize, u64)>],
    wx: &[Vec<(usize, u64)>],
) -> Vec<u8> {
    let dst_w = wx.len();
    // Horizontal pass; each sum carries an implicit factor of src_w.
    let mut rows = vec![0u64; src_h * dst_w];
    for y in 0..src_h {
        let src_row = &plane[y * src_w..(y + 1) * src_w];
        for (ox, taps) in wx.iter().enumerate() {
            rows[y * dst_w + ox] = taps.iter().map(|&(s, w)| w * src_row[s] as u64).sum();
        }
    }
    let denom = (src_h * src_w) as u64;
    let mut out = Vec::with_capacity(wy.len() * dst_w);
    for taps in wy {
        for ox in 0..dst_w {
            let sum: u64 = taps.iter().map(|&(s, w)| w * rows[s * dst_w + ox]).sum();
            // Exact rational mean, rounded half up (values are non-negative).
            out.push(((2 * sum + denom) / (2 * denom)).min(255) as u8);
        }
    }
    out
}

/// Box/area-filter downscale. Every output pixel is the coverage-weighted
/// mean of the source pixels under its footprint. Aspect ratio is not
/// preserved. The arithmetic is exact integer, so results are bit-stable.
pub fn resize_area(image: &RgbImage, out_height: usize, out_width: usize) -> Result<RgbImage, ImagingError> {
    if out_height == 0 || out_width == 0 || out_height > image.height || out_width > image.width {
        return Err(ImagingError::UnsupportedResize {
            from_h: image.height,
            from_w: image.width,
            to_h: out_height,
            to_w: out_width,
        });
    }
    if out_height == image.height && out_width == image.width {
        return Ok(image.clone());
    }
    let wy = area_weights(image.height, out_height);
    let wx = area_weights(image.width, out_width);
    let planes = [0, 1, 2].map(|c| resize_plane(&image.planes[c], image.height, image.width, &wy, &wx));
    Ok(RgbImage { height: out_height, width: out_width, planes })
}

/// Encodes as an 8-bit RGB PNG without alpha. Encoder settings are fixed
/// (zlib level 9, adaptive filtering, no ancillary chunks), so identical
/// images give identical bytes.
pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>, ImagingError> {
    let mut buf = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut buf, image.width as u32, image.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_deflate_compression(png::DeflateCompression::Level(9));
        encoder.set_filter(png::Filter::Adaptive);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(&image.to_interleaved())?;
        writer.finish()?;
    }
    Ok(buf)
}

/// Decodes an 8-bit RGB PNG.
pub fn decode_png(bytes: &[u8]) -> Result<RgbImage, ImagingError> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info()?;
    let size = reader.output_buffer_size().ok_or_else(|| ImagingError::InvalidImage("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(ImagingError::InvalidImage(format!(
            "expected 8-bit RGB, found {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    buf.truncate(info.buffer_size());
    RgbImage::from_interleaved(info.height as usize, info.width as usize, &buf)
}

/// First 8 bytes of the SHA-256 of `bytes`, big-endian.
pub fn content_hash(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(head)
}

/// Result of writing one PNG.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WrittenPng {
    pub checksum: u64,
    pub bytes: u64,
}

/// Encodes and writes `image` to `path`, returning its content hash.
pub fn write_png(image: &RgbImage, path: &Path) -> Result<u64, ImagingError> {
    write_png_sized(image, path).map(|w| w.checksum)
}

/// Like [`write_png`] but also reports the file size.
pub fn write_png_sized(image: &RgbImage, path: &Path) -> Result<WrittenPng, ImagingError> {
    let bytes = encode_png(image)?;
    fs::write(path, &bytes).map_err(|source| ImagingError::Io { path: path.to_path_buf(), source })?;
    Ok(WrittenPng { checksum: content_hash(&bytes), bytes: bytes.len() as u64 })
}
