//! Image applications driven through a simulated multiplier: sharpening and
//! smoothing kernels, PGM I/O, window-wise structural similarity against the
//! exact pipeline, and paired energy accounting.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::Multiplier;
use crate::error::{Error, PgmError};

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, Error> {
        if pixels.len() != width * height {
            return Err(Error::Model(format!(
                "pixel buffer has {} entries, expected {}",
                pixels.len(),
                width * height
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Border-replicated access for out-of-range coordinates.
    fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }
}

/// Load a PGM image (ASCII `P2` or binary `P5`, maxval 255).
pub fn load_pgm(path: &Path) -> Result<GrayImage, PgmError> {
    let data = std::fs::read(path)?;
    parse_pgm(&data)
}

fn parse_pgm(data: &[u8]) -> Result<GrayImage, PgmError> {
    let magic = data.get(..2).ok_or_else(|| {
        PgmError::MalformedHeader("file shorter than the magic number".into())
    })?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(PgmError::MalformedHeader(format!(
                "unsupported magic `{}`",
                String::from_utf8_lossy(other)
            )))
        }
    };

    // Header tokenizer: whitespace-separated integers with `#` comments.
    let mut pos = 2usize;
    let mut next_token = |data: &[u8]| -> Result<u32, PgmError> {
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(PgmError::MalformedHeader(format!(
                "expected integer at byte {start}"
            )));
        }
        std::str::from_utf8(&data[start..pos])
            .expect("digits are ASCII")
            .parse::<u32>()
            .map_err(|e| PgmError::MalformedHeader(e.to_string()))
    };

    let width = next_token(data)? as usize;
    let height = next_token(data)? as usize;
    let maxval = next_token(data)?;
    if maxval != 255 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader("zero image dimension".into()));
    }
    let expected = width * height;

    let pixels = if binary {
        // Exactly one whitespace byte separates the header from the payload.
        if pos >= data.len() || !data[pos].is_ascii_whitespace() {
            return Err(PgmError::MalformedHeader(
                "missing separator before binary payload".into(),
            ));
        }
        pos += 1;
        let payload = &data[pos..];
        if payload.len() < expected {
            return Err(PgmError::TruncatedPayload {
                expected,
                found: payload.len(),
            });
        }
        payload[..expected].to_vec()
    } else {
        let mut pixels = Vec::with_capacity(expected);
        for _ in 0..expected {
            let v = match next_token(data) {
                Ok(v) => v,
                Err(PgmError::MalformedHeader(_)) => {
                    return Err(PgmError::TruncatedPayload {
                        expected,
                        found: pixels.len(),
                    })
                }
                Err(e) => return Err(e),
            };
            if v > 255 {
                return Err(PgmError::MalformedHeader(format!(
                    "ASCII sample {v} exceeds maxval 255"
                )));
            }
            pixels.push(v as u8);
        }
        pixels
    };

    Ok(GrayImage { width, height, pixels })
}

/// Save as binary `P5`, maxval 255. Lossless round-trip with [`load_pgm`].
pub fn save_pgm(image: &GrayImage, path: &Path) -> Result<(), PgmError> {
    let mut out = Vec::with_capacity(image.pixels.len() + 32);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", image.width, image.height).as_bytes());
    out.extend_from_slice(&image.pixels);
    std::fs::write(path, out)?;
    Ok(())
}

/// A 3×3 integer kernel with a positive divisor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kernel3 {
    pub coeffs: [[i32; 3]; 3],
    pub divisor: u32,
}

impl Kernel3 {
    pub fn validate(&self) -> Result<(), Error> {
        if self.divisor == 0 {
            return Err(Error::Model("kernel divisor must be positive".into()));
        }
        for row in &self.coeffs {
            for &c in row {
                if c.unsigned_abs() > 255 {
                    return Err(Error::KernelRange(c));
                }
            }
        }
        Ok(())
    }
}

/// The two applications and their default kernels.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum App {
    Sharpen,
    Smooth,
}

impl App {
    pub fn name(self) -> &'static str {
        match self {
            App::Sharpen => "sharpen",
            App::Smooth => "smooth",
        }
    }
}

impl fmt::Display for App {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Configurable application kernels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub sharpen: Kernel3,
    pub smooth: Kernel3,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            sharpen: Kernel3 {
                coeffs: [[0, -1, 0], [-1, 5, -1], [0, -1, 0]],
                divisor: 1,
            },
            smooth: Kernel3 {
                coeffs: [[1, 1, 1], [1, 1, 1], [1, 1, 1]],
                divisor: 9,
            },
        }
    }
}

impl KernelConfig {
    pub fn kernel(&self, app: App) -> &Kernel3 {
        match app {
            App::Sharpen => &self.sharpen,
            App::Smooth => &self.smooth,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.sharpen.validate()?;
        self.smooth.validate()
    }
}

/// 3×3 convolution with border replication. Each product is formed as
/// `sign(coeff) × mul(|coeff|, pixel)` so the hardware only multiplies
/// unsigned 8-bit values; accumulation is exact, division rounds to nearest
/// (half away from zero), and the result saturates to [0, 255].
pub fn convolve(
    image: &GrayImage,
    kernel: &Kernel3,
    mul: &mut dyn Multiplier,
) -> Result<GrayImage, Error> {
    kernel.validate()?;
    let div = kernel.divisor as i64;
    let mut out = Vec::with_capacity(image.pixels.len());
    for y in 0..image.height as isize {
        for x in 0..image.width as isize {
            let mut acc = 0i64;
            for (dy, row) in kernel.coeffs.iter().enumerate() {
                for (dx, &coeff) in row.iter().enumerate() {
                    if coeff == 0 {
                        continue;
                    }
                    let px = image.get_clamped(x + dx as isize - 1, y + dy as isize - 1);
                    let product = mul.mul(coeff.unsigned_abs(), px as u32) as i64;
                    acc += if coeff < 0 { -product } else { product };
                }
            }
            let rounded = if acc >= 0 {
                (acc + div / 2) / div
            } else {
                (acc - div / 2) / div
            };
            out.push(rounded.clamp(0, 255) as u8);
        }
    }
    GrayImage::new(image.width, image.height, out)
}

/// Mean SSIM over all 8×8 windows (stride 1), standard stabilizers
/// C1 = (0.01·255)², C2 = (0.03·255)². Symmetric in its arguments; 1.0 for
/// identical images.
pub fn mssim(reference: &GrayImage, test: &GrayImage) -> Result<f64, Error> {
    const WINDOW: usize = 8;
    if reference.width != test.width || reference.height != test.height {
        return Err(Error::DimensionMismatch(
            reference.width,
            reference.height,
            test.width,
            test.height,
        ));
    }
    if reference.width < WINDOW || reference.height < WINDOW {
        return Err(Error::WindowTooLarge(reference.width, reference.height, WINDOW));
    }
    let c1 = (0.01f64 * 255.0) * (0.01 * 255.0);
    let c2 = (0.03f64 * 255.0) * (0.03 * 255.0);
    let area = (WINDOW * WINDOW) as f64;

    let mut total = 0.0f64;
    let mut windows = 0u64;
    for y0 in 0..=reference.height - WINDOW {
        for x0 in 0..=reference.width - WINDOW {
            // Integer accumulators keep the window sums exact.
            let mut sx = 0u64;
            let mut sy = 0u64;
            let mut sxx = 0u64;
            let mut syy = 0u64;
            let mut sxy = 0u64;
            for y in y0..y0 + WINDOW {
                for x in x0..x0 + WINDOW {
                    let px = reference.get(x, y) as u64;
                    let py = test.get(x, y) as u64;
                    sx += px;
                    sy += py;
                    sxx += px * px;
                    syy += py * py;
                    sxy += px * py;
                }
            }
            let mx = sx as f64 / area;
            let my = sy as f64 / area;
            let vx = sxx as f64 / area - mx * mx;
            let vy = syy as f64 / area - my * my;
            let cov = sxy as f64 / area - mx * my;
            let ssim = ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            total += ssim;
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

/// Result of one application run against one configuration.
#[derive(Clone, Debug, Serialize)]
pub struct AppReport {
    pub app: App,
    /// MSSIM against the exact-multiplier pipeline, clamped to be
    /// non-negative for reporting.
    pub mssim: f64,
    /// Raw MSSIM before clamping (can be marginally below zero for
    /// pathological inputs).
    pub mssim_raw: f64,
    pub clamped: bool,
    pub energy_reduction_pct: f64,
    pub multiplier_mode: String,
}

/// The processed images alongside the report.
pub struct AppRun {
    pub report: AppReport,
    pub output: GrayImage,
    pub reference: GrayImage,
}

/// Run one application through the configured approximate multiplier and
/// score it against the exact pipeline on the same image. `exact_mul` must be
/// the exact-baseline engine of the same (n, k) so the energy comparison is
/// paired.
pub fn run_app(
    app: App,
    image: &GrayImage,
    kernels: &KernelConfig,
    approx_mul: &mut dyn Multiplier,
    exact_mul: &mut dyn Multiplier,
) -> Result<AppRun, Error> {
    let kernel = kernels.kernel(app);
    let approx_before = approx_mul.energy();
    let output = convolve(image, kernel, approx_mul)?;
    let approx_energy = approx_mul.energy() - approx_before;
    let exact_before = exact_mul.energy();
    let reference = convolve(image, kernel, exact_mul)?;
    let exact_energy = exact_mul.energy() - exact_before;

    let raw = mssim(&reference, &output)?;
    let energy_reduction_pct = if exact_energy > 0.0 {
        (1.0 - approx_energy / exact_energy) * 100.0
    } else {
        0.0
    };
    Ok(AppRun {
        report: AppReport {
            app,
            mssim: raw.max(0.0),
            mssim_raw: raw,
            clamped: raw < 0.0,
            energy_reduction_pct,
            multiplier_mode: approx_mul.mode_name().to_string(),
        },
        output,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ExactMultiplier;

    fn constant(width: usize, height: usize, value: u8) -> GrayImage {
        GrayImage::new(width, height, vec![value; width * height]).unwrap()
    }

    fn seeded(width: usize, height: usize, seed: u64) -> GrayImage {
        let mut x = seed | 1;
        let pixels = (0..width * height)
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                (x & 0xff) as u8
            })
            .collect();
        GrayImage::new(width, height, pixels).unwrap()
    }

    #[test]
    fn pgm_round_trip() {
        let img = seeded(31, 17, 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        save_pgm(&img, &path).unwrap();
        let back = load_pgm(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_ascii_parses_with_comments() {
        let text = b"P2\n# a comment\n3 2\n255\n0 1 2\n# another\n250 251 252\n";
        let img = parse_pgm(text).unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.pixels, vec![0, 1, 2, 250, 251, 252]);
    }

    #[test]
    fn pgm_distinct_diagnostics() {
        assert!(matches!(
            parse_pgm(b"P6\n1 1\n255\n\0"),
            Err(PgmError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_pgm(b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0"),
            Err(PgmError::UnsupportedMaxval(65535))
        ));
        assert!(matches!(
            parse_pgm(b"P5\n4 4\n255\n\0\0\0"),
            Err(PgmError::TruncatedPayload { expected: 16, found: 3 })
        ));
        assert!(matches!(
            parse_pgm(b"P2\n2 2\n255\n1 2 3"),
            Err(PgmError::TruncatedPayload { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn identity_kernel_is_identity() {
        let img = seeded(20, 20, 7);
        let kernel = Kernel3 { coeffs: [[0, 0, 0], [0, 1, 0], [0, 0, 0]], divisor: 1 };
        let out = convolve(&img, &kernel, &mut ExactMultiplier).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn box_kernel_preserves_constants() {
        let img = constant(16, 16, 100);
        let out = convolve(&img, &KernelConfig::default().smooth, &mut ExactMultiplier).unwrap();
        assert_eq!(out, img);
        let sharpened =
            convolve(&img, &KernelConfig::default().sharpen, &mut ExactMultiplier).unwrap();
        assert_eq!(sharpened, img, "sharpen kernel sums to one");
    }

    #[test]
    fn convolve_rejects_wide_coefficients() {
        let img = constant(8, 8, 1);
        let kernel = Kernel3 { coeffs: [[256, 0, 0], [0, 0, 0], [0, 0, 0]], divisor: 1 };
        assert!(matches!(
            convolve(&img, &kernel, &mut ExactMultiplier),
            Err(Error::KernelRange(256))
        ));
    }

    #[test]
    fn mssim_identity_symmetry_and_closed_form() {
        let img = seeded(32, 32, 11);
        assert_eq!(mssim(&img, &img).unwrap(), 1.0);

        let other = seeded(32, 32, 13);
        let ab = mssim(&img, &other).unwrap();
        let ba = mssim(&other, &img).unwrap();
        assert_eq!(ab, ba);

        // Two constant images: zero variances collapse SSIM to the
        // luminance term (2·μx·μy + C1)/(μx² + μy² + C1).
        let a = constant(16, 16, 100);
        let b = constant(16, 16, 104);
        let got = mssim(&a, &b).unwrap();
        let c1 = 6.5025;
        let expect = (2.0 * 100.0 * 104.0 + c1) / (100.0f64 * 100.0 + 104.0 * 104.0 + c1);
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 0.9992316005244806).abs() < 1e-12);
    }

    #[test]
    fn mssim_dimension_checks() {
        let a = constant(16, 16, 0);
        let b = constant(16, 8, 0);
        assert!(matches!(mssim(&a, &b), Err(Error::DimensionMismatch(..))));
        let tiny = constant(4, 4, 0);
        assert!(matches!(mssim(&tiny, &tiny), Err(Error::WindowTooLarge(..))));
    }

    #[test]
    fn exact_convolution_matches_independent_oracle() {
        // Straightforward re-implementation with plain arithmetic.
        fn oracle(img: &GrayImage, kernel: &Kernel3) -> GrayImage {
            let div = kernel.divisor as i64;
            let mut out = Vec::new();
            for y in 0..img.height as isize {
                for x in 0..img.width as isize {
                    let mut acc = 0i64;
                    for dy in -1..=1isize {
                        for dx in -1..=1isize {
                            let c = kernel.coeffs[(dy + 1) as usize][(dx + 1) as usize] as i64;
                            acc += c * img.get_clamped(x + dx, y + dy) as i64;
                        }
                    }
                    let r = if acc >= 0 { (acc + div / 2) / div } else { (acc - div / 2) / div };
                    out.push(r.clamp(0, 255) as u8);
                }
            }
            GrayImage::new(img.width, img.height, out).unwrap()
        }

        let img = seeded(40, 25, 3);
        for kernel in [
            KernelConfig::default().sharpen,
            KernelConfig::default().smooth,
            Kernel3 { coeffs: [[-2, 3, -2], [3, 5, 3], [-2, 3, -2]], divisor: 9 },
        ] {
            let got = convolve(&img, &kernel, &mut ExactMultiplier).unwrap();
            assert_eq!(got, oracle(&img, &kernel));
        }
    }
}
