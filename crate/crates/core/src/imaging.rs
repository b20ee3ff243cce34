//! Raster operations used by the pipeline: decoding, contrast enhancement,
//! skew estimation, rotation and word cropping.
//!
//! Angles are in degrees, positive counter-clockwise as the page is viewed
//! (image rows grow downwards).

use std::io::Cursor;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use thiserror::Error;

use crate::doc_model::BBox;

pub const WHITE: u8 = 255;
/// Pixels darker than this count as foreground when binarizing.
pub const BINARIZE_THRESHOLD: u8 = 128;
pub const DEFAULT_SKEW_RANGE: f64 = 15.0;
pub const DEFAULT_SKEW_STEP: f64 = 0.5;
pub const DEFAULT_PAD_PIXELS: u32 = 10;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corrupt or unsupported image: {0}")]
    Format(String),
    #[error("invalid raster: {0}")]
    Invalid(String),
    #[error("box ({},{},{},{}) outside {width}x{height} image", .bbox.x0, .bbox.y0, .bbox.x1, .bbox.y1)]
    Geometry { bbox: BBox, width: u32, height: u32 },
    #[error("skew search parameters out of range: range {range}, step {step}")]
    SkewParams { range: f64, step: f64 },
    #[error("enhancement failed: {0}")]
    EnhancementFailed(String),
}

/// 8-bit grayscale raster, row-major, 0 = black, 255 = white.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RasterImage({}x{})", self.width, self.height)
    }
}

impl RasterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Invalid(format!("zero dimension {width}x{height}")));
        }
        if pixels.len() as u64 != width as u64 * height as u64 {
            return Err(ImageError::Invalid(format!(
                "{} pixels for {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self { width, height, pixels: vec![value; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = value;
    }

    /// Dimensions plus 64-bit FNV-1a of the pixel bytes, e.g. `"640x480:af63bd4c8601b7df"`.
    pub fn fingerprint(&self) -> String {
        format!("{}x{}:{:016x}", self.width, self.height, fnv1a64(&self.pixels))
    }

    /// Binary PGM (P5, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_pgm())
            .map_err(|source| ImageError::Io { path: path.display().to_string(), source })
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Integer luminance approximation used for colour inputs.
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    ((77 * r as u32 + 150 * g as u32 + 29 * b as u32) / 256) as u8
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage, ImageError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)
        .map_err(|source| ImageError::Io { path: path.display().to_string(), source })?;
    decode_image(&bytes)
}

/// Decodes PGM (P5) or PNG bytes, sniffing the format from the magic number.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage, ImageError> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(bytes)
    } else if bytes.is_empty() {
        Err(ImageError::Format("empty file".into()))
    } else {
        Err(ImageError::Format("unrecognized magic number".into()))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<RasterImage, ImageError> {
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Format("truncated PGM header".into()))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(ImageError::Format(format!("PGM maxval {maxval} unsupported")));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(ImageError::Format("missing separator after PGM header".into()));
    }
    pos += 1;
    let n = width as usize * height as usize;
    let data = bytes
        .get(pos..pos + n)
        .ok_or_else(|| ImageError::Format("truncated PGM raster".into()))?;
    RasterImage::new(width, height, data.to_vec())
}

fn decode_png(bytes: &[u8]) -> Result<RasterImage, ImageError> {
    let fmt = |e: png::DecodingError| ImageError::Format(e.to_string());
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(fmt)?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(fmt)?;
    let data = &buf[..info.buffer_size()];
    let pixels: Vec<u8> = match info.color_type {
        png::ColorType::Grayscale => data.to_vec(),
        png::ColorType::GrayscaleAlpha => data.chunks_exact(2).map(|p| p[0]).collect(),
        png::ColorType::Rgb => data.chunks_exact(3).map(|p| luminance(p[0], p[1], p[2])).collect(),
        png::ColorType::Rgba => data.chunks_exact(4).map(|p| luminance(p[0], p[1], p[2])).collect(),
        png::ColorType::Indexed => {
            return Err(ImageError::Format("indexed PNG not expanded".into()));
        }
    };
    RasterImage::new(info.width, info.height, pixels)
}

/// Value at the given quantile using the nearest-rank definition.
fn percentile(histogram: &[u64; 256], total: u64, q: f64) -> u8 {
    let rank = ((q * total as f64).ceil() as u64).max(1);
    let mut seen = 0;
    for (value, &count) in histogram.iter().enumerate() {
        seen += count;
        if seen >= rank {
            return value as u8;
        }
    }
    255
}

/// Linear stretch mapping the 2nd percentile to 0 and the 98th to 255.
pub fn contrast_stretch(img: &RasterImage) -> RasterImage {
    let mut histogram = [0u64; 256];
    for &p in &img.pixels {
        histogram[p as usize] += 1;
    }
    let total = img.pixels.len() as u64;
    let lo = percentile(&histogram, total, 0.02) as f64;
    let hi = percentile(&histogram, total, 0.98) as f64;
    if hi <= lo {
        return img.clone();
    }
    let pixels = img
        .pixels
        .iter()
        .map(|&p| ((p as f64 - lo) * 255.0 / (hi - lo)).round().clamp(0.0, 255.0) as u8)
        .collect();
    RasterImage { pixels, ..*img }
}

/// 3×3 median filter with edge replication.
pub fn median3x3(img: &RasterImage) -> RasterImage {
    let (w, h) = (img.width as i64, img.height as i64);
    let mut out = Vec::with_capacity(img.pixels.len());
    let mut window = [0u8; 9];
    for y in 0..h {
        for x in 0..w {
            let mut k = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let sx = (x + dx).clamp(0, w - 1);
                    let sy = (y + dy).clamp(0, h - 1);
                    window[k] = img.pixels[(sy * w + sx) as usize];
                    k += 1;
                }
            }
            window.sort_unstable();
            out.push(window[4]);
        }
    }
    RasterImage { pixels: out, ..*img }
}

/// Built-in enhancement: percentile contrast stretch then median filtering.
pub fn enhance(img: &RasterImage) -> RasterImage {
    median3x3(&contrast_stretch(img))
}

/// Round-trips the image through an external command. `argv` may contain
/// `{in}` and `{out}` placeholders, both PGM paths.
pub fn enhance_external(
    img: &RasterImage,
    argv: &[String],
    timeout: Duration,
) -> Result<RasterImage, ImageError> {
    let failed = |msg: String| ImageError::EnhancementFailed(msg);
    let (program, args) = argv.split_first().ok_or_else(|| failed("empty command".into()))?;
    let dir = tempfile::tempdir().map_err(|e| failed(e.to_string()))?;
    let input = dir.path().join("in.pgm");
    let output = dir.path().join("out.pgm");
    img.save_pgm(&input)?;
    let subst = |s: &str| {
        s.replace("{in}", &input.to_string_lossy()).replace("{out}", &output.to_string_lossy())
    };
    let mut cmd = Command::new(subst(program));
    cmd.args(args.iter().map(|a| subst(a)));
    let run = crate::recognizers::run_with_timeout(cmd, timeout).map_err(|e| failed(e.to_string()))?;
    if !run.status.success() {
        return Err(failed(format!("{program} exited with {}", run.status)));
    }
    load_image(&output)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewEstimate {
    /// Rotation that straightens the page, in (-45, 45].
    pub angle_degrees: f64,
    /// Variance of the horizontal projection profile at that angle.
    pub score: f64,
}

fn foreground_points(img: &RasterImage) -> Vec<(f64, f64)> {
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let mut pts = Vec::new();
    for y in 0..img.height {
        for x in 0..img.width {
            if img.get(x, y) < BINARIZE_THRESHOLD {
                pts.push((x as f64 - cx, y as f64 - cy));
            }
        }
    }
    pts
}

/// Variance of row counts after rotating the foreground by `angle` degrees.
fn profile_variance(points: &[(f64, f64)], angle: f64) -> f64 {
    let (s, c) = angle.to_radians().sin_cos();
    let rows: Vec<i64> = points.iter().map(|&(x, y)| (-x * s + y * c).floor() as i64).collect();
    let (Some(&min), Some(&max)) = (rows.iter().min(), rows.iter().max()) else {
        return 0.0;
    };
    let mut counts = vec![0f64; (max - min + 1) as usize];
    for r in rows {
        counts[(r - min) as usize] += 1.0;
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    counts.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

fn check_skew_params(range: f64, step: f64) -> Result<(), ImageError> {
    if !(step > 0.0 && step <= range && range <= 45.0) {
        return Err(ImageError::SkewParams { range, step });
    }
    Ok(())
}

/// Candidate angles `k * step` within `[-range, range]`, excluding -45.
fn skew_grid(range: f64, step: f64) -> Vec<f64> {
    let n = (range / step + 1e-9).floor() as i64;
    (-n..=n).map(|k| k as f64 * step).filter(|&a| a > -45.0).collect()
}

/// Projection-profile objective over the search grid, as `(angle, score)` pairs.
pub fn skew_profile(
    img: &RasterImage,
    search_range_degrees: f64,
    step_degrees: f64,
) -> Result<Vec<(f64, f64)>, ImageError> {
    check_skew_params(search_range_degrees, step_degrees)?;
    let points = foreground_points(img);
    Ok(skew_grid(search_range_degrees, step_degrees)
        .into_iter()
        .map(|a| (a, profile_variance(&points, a)))
        .collect())
}

/// Finds the rotation maximizing the variance of the horizontal projection
/// profile of the binarized page. Ties go to the angle closest to zero.
pub fn estimate_skew(
    img: &RasterImage,
    search_range_degrees: f64,
    step_degrees: f64,
) -> Result<SkewEstimate, ImageError> {
    let profile = skew_profile(img, search_range_degrees, step_degrees)?;
    let mut best = SkewEstimate { angle_degrees: 0.0, score: 0.0 };
    for (angle, score) in profile {
        let better = score > best.score
            || (score == best.score && score > 0.0 && angle.abs() < best.angle_degrees.abs());
        if better {
            best = SkewEstimate { angle_degrees: angle, score };
        }
    }
    Ok(best)
}

/// Cardinal angle in {0, 90, 180, 270} if `angle` is one (mod 360).
fn cardinal(angle: f64) -> Option<u32> {
    let a = angle.rem_euclid(360.0);
    [0u32, 90, 180, 270, 360]
        .into_iter()
        .find(|&c| (a - c as f64).abs() < 1e-9)
        .map(|c| c % 360)
}

/// Rotates counter-clockwise by `angle_degrees`. Cardinal angles permute
/// pixels exactly; other angles use bilinear sampling on an enlarged white
/// canvas.
pub fn rotate(img: &RasterImage, angle_degrees: f64) -> RasterImage {
    match cardinal(angle_degrees) {
        Some(0) => img.clone(),
        Some(90) => rotate_cardinal(img, 90),
        Some(180) => rotate_cardinal(img, 180),
        Some(270) => rotate_cardinal(img, 270),
        _ => rotate_bilinear(img, angle_degrees),
    }
}

fn rotate_cardinal(img: &RasterImage, angle: u32) -> RasterImage {
    let (w, h) = (img.width, img.height);
    let (ow, oh) = if angle == 180 { (w, h) } else { (h, w) };
    let mut out = RasterImage::filled(ow, oh, WHITE);
    for y in 0..h {
        for x in 0..w {
            let (ox, oy) = match angle {
                90 => (y, w - 1 - x),
                180 => (w - 1 - x, h - 1 - y),
                _ => (h - 1 - y, x),
            };
            out.set(ox, oy, img.get(x, y));
        }
    }
    out
}

fn rotate_bilinear(img: &RasterImage, angle: f64) -> RasterImage {
    let (s, c) = angle.to_radians().sin_cos();
    let (w, h) = (img.width as f64, img.height as f64);
    let ow = ((w * c.abs() + h * s.abs()) - 1e-6).ceil().max(1.0) as u32;
    let oh = ((w * s.abs() + h * c.abs()) - 1e-6).ceil().max(1.0) as u32;
    let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let (ocx, ocy) = ((ow as f64 - 1.0) / 2.0, (oh as f64 - 1.0) / 2.0);
    let sample = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= img.width as i64 || y >= img.height as i64 {
            WHITE as f64
        } else {
            img.get(x as u32, y as u32) as f64
        }
    };
    let mut out = RasterImage::filled(ow, oh, WHITE);
    for oy in 0..oh {
        for ox in 0..ow {
            let (rx, ry) = (ox as f64 - ocx, oy as f64 - ocy);
            // inverse of (x, y) -> (x c + y s, -x s + y c)
            let sx = rx * c - ry * s + cx;
            let sy = rx * s + ry * c + cy;
            if sx <= -1.0 || sy <= -1.0 || sx >= w || sy >= h {
                continue;
            }
            let (x0, y0) = (sx.floor() as i64, sy.floor() as i64);
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let top = sample(x0, y0) * (1.0 - fx) + sample(x0 + 1, y0) * fx;
            let bottom = sample(x0, y0 + 1) * (1.0 - fx) + sample(x0 + 1, y0 + 1) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            out.set(ox, oy, v.round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

/// Crops `bbox` and surrounds it with a white ring `pad_pixels` wide.
pub fn crop_word(img: &RasterImage, bbox: &BBox, pad_pixels: u32) -> Result<RasterImage, ImageError> {
    if bbox.x0 >= bbox.x1 || bbox.y0 >= bbox.y1 || bbox.x1 > img.width || bbox.y1 > img.height {
        return Err(ImageError::Geometry { bbox: *bbox, width: img.width, height: img.height });
    }
    let ow = bbox.width() + 2 * pad_pixels;
    let oh = bbox.height() + 2 * pad_pixels;
    let mut out = RasterImage::filled(ow, oh, WHITE);
    for y in bbox.y0..bbox.y1 {
        for x in bbox.x0..bbox.x1 {
            out.set(x - bbox.x0 + pad_pixels, y - bbox.y0 + pad_pixels, img.get(x, y));
        }
    }
    Ok(out)
}

/// Clamps `bbox` to the image; `None` if nothing remains.
pub fn clamp_box(img: &RasterImage, bbox: &BBox) -> Option<BBox> {
    BBox::new(bbox.x0, bbox.y0, bbox.x1.min(img.width), bbox.y1.min(img.height)).ok()
}

/// White page with `count` black horizontal bars `thickness` rows tall.
pub fn striped_page(width: u32, height: u32, count: u32, thickness: u32) -> RasterImage {
    let mut img = RasterImage::filled(width, height, WHITE);
    let pitch = height / (count + 1);
    let margin = width / 8;
    for i in 1..=count {
        let top = i * pitch;
        for y in top..(top + thickness).min(height) {
            for x in margin..width - margin {
                img.set(x, y, 0);
            }
        }
    }
    img
}
