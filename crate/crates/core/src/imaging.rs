//! Grayscale images, patch matrices and image quality metrics.
//!
//! Patches are vectorized row by row and scanned left to right, top to
//! bottom. When the stride does not tile the image exactly, only the region
//! covered by whole patches is used; pixels outside it assemble to 0.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::{s, Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::{CMatrix, Complex64, Error, Result};

pub const PSNR_CAP_DB: f64 = 200.0;
pub const SSIM_WINDOW: usize = 8;
const PEAK: f64 = 1.0;
const SSIM_C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
const SSIM_C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    /// `height × width`, values in `[0, 1]`.
    pixels: Array2<f64>,
}

impl GrayImage {
    /// Wraps pixel values, clamping them into `[0, 1]`.
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Image("non-finite pixel value".into()));
        }
        Ok(Self {
            pixels: pixels.mapv(|v| v.clamp(0.0, 1.0)),
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            pixels: Array2::zeros((height, width)),
        }
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.pixels
    }

    /// Binary PGM (P5, maxval 255); pixel = byte / 255.
    pub fn read_pgm(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_pgm(&bytes)
    }

    pub fn decode_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Image("truncated PGM header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        if token()? != "P5" {
            return Err(Error::Image("only binary PGM (P5) is supported".into()));
        }
        let parse = |t: String| {
            t.parse::<usize>()
                .map_err(|_| Error::Image(format!("bad PGM header field {t:?}")))
        };
        let width = parse(token()?)?;
        let height = parse(token()?)?;
        let maxval = parse(token()?)?;
        if maxval != 255 {
            return Err(Error::Image(format!("PGM maxval {maxval} unsupported, need 255")));
        }
        // exactly one whitespace byte separates header and raster
        let start = pos + 1;
        let need = width * height;
        if bytes.len() < start + need {
            return Err(Error::Image("truncated PGM raster".into()));
        }
        let raster = &bytes[start..start + need];
        let pixels = Array2::from_shape_fn((height, width), |(r, c)| f64::from(raster[r * width + c]) / 255.0);
        Ok(Self { pixels })
    }

    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width(), self.height()).into_bytes();
        out.extend(self.pixels.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.encode_pgm()).map_err(|e| Error::io(path, e))
    }

    /// PNG input, converted to gray with BT.601 luma weights.
    #[cfg(feature = "png")]
    pub fn read_png(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        let pixels = Array2::from_shape_fn((h as usize, w as usize), |(r, c)| {
            let p = rgb.get_pixel(c as u32, r as u32).0;
            (0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])) / 255.0
        });
        Ok(Self { pixels })
    }

    /// Dispatches on the extension: `.pgm`, or `.png` with the `png` feature.
    pub fn load(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("pgm") => Self::read_pgm(path),
            #[cfg(feature = "png")]
            Some("png") => Self::read_png(path),
            _ => Err(Error::Image(format!("unsupported image format: {}", path.display()))),
        }
    }

    /// Writes PGM, or PNG when the path ends in `.png` and the feature is on.
    pub fn save(&self, path: &Path) -> Result<()> {
        #[cfg(feature = "png")]
        if path.extension().and_then(|e| e.to_str()) == Some("png") {
            let (w, h) = (self.width() as u32, self.height() as u32);
            let raw: Vec<u8> = self.pixels.iter().map(|&v| (v * 255.0).round() as u8).collect();
            let buf = image::GrayImage::from_raw(w, h, raw).expect("buffer sized to image");
            return buf
                .save(path)
                .map_err(|e| Error::Image(format!("{}: {e}", path.display())));
        }
        self.write_pgm(path)
    }
}

/// Patch geometry plus the `N × P` patch matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGrid {
    pub patch_w: usize,
    pub patch_h: usize,
    pub stride: usize,
    /// Patches per row and per column of the grid.
    pub across: usize,
    pub down: usize,
    pub patch_matrix: CMatrix,
}

impl PatchGrid {
    pub fn patch_len(&self) -> usize {
        self.patch_w * self.patch_h
    }

    pub fn patch_count(&self) -> usize {
        self.across * self.down
    }

    /// Same layout with a different patch matrix (e.g. a reconstruction).
    pub fn with_matrix(&self, patch_matrix: CMatrix) -> Result<Self> {
        if patch_matrix.dim() != (self.patch_len(), self.patch_count()) {
            return Err(Error::dims(
                "patch matrix columns",
                self.patch_count(),
                patch_matrix.ncols(),
            ));
        }
        Ok(Self {
            patch_matrix,
            ..self.clone()
        })
    }

    fn origin(&self, p: usize) -> (usize, usize) {
        ((p / self.across) * self.stride, (p % self.across) * self.stride)
    }
}

/// Exact non-overlapping tiling of an image, used to move complex data
/// between image columns (`height × width`) and the patch matrix
/// (`patch_w·patch_h × P`, same order as [`extract_patches`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TileLayout {
    pub width: usize,
    pub height: usize,
    pub patch_w: usize,
    pub patch_h: usize,
}

impl TileLayout {
    pub fn new(width: usize, height: usize, patch_w: usize, patch_h: usize) -> Result<Self> {
        if patch_w == 0 || patch_h == 0 || !width.is_multiple_of(patch_w) || !height.is_multiple_of(patch_h) {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height} image is not tiled exactly by {patch_w}x{patch_h} patches"
            )));
        }
        Ok(Self {
            width,
            height,
            patch_w,
            patch_h,
        })
    }

    pub fn patch_len(&self) -> usize {
        self.patch_w * self.patch_h
    }

    pub fn patch_count(&self) -> usize {
        (self.width / self.patch_w) * (self.height / self.patch_h)
    }

    /// `(row, col)` in the image of element `i` of patch `p`.
    fn locate(&self, p: usize, i: usize) -> (usize, usize) {
        let across = self.width / self.patch_w;
        let (r0, c0) = ((p / across) * self.patch_h, (p % across) * self.patch_w);
        (r0 + i / self.patch_w, c0 + i % self.patch_w)
    }

    /// Patch matrix to image matrix.
    pub fn to_image(&self, patches: ndarray::ArrayView2<Complex64>) -> Result<CMatrix> {
        if patches.dim() != (self.patch_len(), self.patch_count()) {
            return Err(Error::dims("tiled patch matrix", self.patch_count(), patches.ncols()));
        }
        let mut out = CMatrix::zeros((self.height, self.width));
        for ((i, p), &v) in patches.indexed_iter() {
            out[self.locate(p, i)] = v;
        }
        Ok(out)
    }

    /// Image matrix to patch matrix.
    pub fn to_patches(&self, image: ndarray::ArrayView2<Complex64>) -> Result<CMatrix> {
        if image.dim() != (self.height, self.width) {
            return Err(Error::dims("tiled image rows", self.height, image.nrows()));
        }
        Ok(CMatrix::from_shape_fn(
            (self.patch_len(), self.patch_count()),
            |(i, p)| image[self.locate(p, i)],
        ))
    }
}

pub fn extract_patches(img: &GrayImage, patch_w: usize, patch_h: usize, stride: usize) -> Result<PatchGrid> {
    if stride == 0 || patch_w == 0 || patch_h == 0 {
        return Err(Error::InvalidArgument("patch size and stride must be >= 1".into()));
    }
    if patch_w > img.width() || patch_h > img.height() {
        return Err(Error::InvalidArgument(format!(
            "{patch_w}x{patch_h} patch larger than {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let across = (img.width() - patch_w) / stride + 1;
    let down = (img.height() - patch_h) / stride + 1;
    let mut grid = PatchGrid {
        patch_w,
        patch_h,
        stride,
        across,
        down,
        patch_matrix: CMatrix::zeros((patch_w * patch_h, across * down)),
    };
    for p in 0..across * down {
        let (r0, c0) = grid.origin(p);
        let block = img.pixels.slice(s![r0..r0 + patch_h, c0..c0 + patch_w]);
        for (dst, &v) in grid.patch_matrix.column_mut(p).iter_mut().zip(block.iter()) {
            *dst = Complex64::new(v, 0.0);
        }
    }
    Ok(grid)
}

/// Per-pixel average of the real parts of covering patches, clamped to `[0, 1]`.
pub fn assemble_patches(grid: &PatchGrid, width: usize, height: usize) -> Result<GrayImage> {
    let need_w = (grid.across - 1) * grid.stride + grid.patch_w;
    let need_h = (grid.down - 1) * grid.stride + grid.patch_h;
    if need_w > width
        || need_h > height
        || (width - grid.patch_w) / grid.stride + 1 != grid.across
        || (height - grid.patch_h) / grid.stride + 1 != grid.down
    {
        return Err(Error::InvalidArgument(format!(
            "patch grid {}x{} does not match {width}x{height} image",
            grid.across, grid.down
        )));
    }
    if grid.patch_matrix.dim() != (grid.patch_len(), grid.patch_count()) {
        return Err(Error::dims("patch matrix", grid.patch_len(), grid.patch_matrix.nrows()));
    }
    let mut sum = Array2::<f64>::zeros((height, width));
    let mut count = Array2::<u32>::zeros((height, width));
    for p in 0..grid.patch_count() {
        let (r0, c0) = grid.origin(p);
        let col = grid.patch_matrix.column(p);
        for i in 0..grid.patch_h {
            for j in 0..grid.patch_w {
                sum[(r0 + i, c0 + j)] += col[i * grid.patch_w + j].re;
                count[(r0 + i, c0 + j)] += 1;
            }
        }
    }
    ndarray::Zip::from(&mut sum).and(&count).for_each(|s, &c| {
        *s = if c > 0 {
            (*s / f64::from(c)).clamp(0.0, 1.0)
        } else {
            0.0
        };
    });
    Ok(GrayImage { pixels: sum })
}

/// Global rotation that brings `x` closest to real with a nonnegative sum:
/// `e^{−jθ}` with `θ = arg(Σ x²)/2`, negated if the rotated sum is negative.
pub fn real_alignment(x: ArrayView1<Complex64>) -> Complex64 {
    let s: Complex64 = x.iter().map(|v| v * v).sum();
    let rot = Complex64::from_polar(1.0, -s.arg() / 2.0);
    if x.iter().map(|v| (v * rot).re).sum::<f64>() < 0.0 {
        -rot
    } else {
        rot
    }
}

/// `x` rotated by [`real_alignment`].
pub fn align_to_real(x: ArrayView1<Complex64>) -> ndarray::Array1<Complex64> {
    let rot = real_alignment(x);
    x.mapv(|v| v * rot)
}

/// Rotates each column of `targets` by the real alignment of the same
/// column of `reference`.
pub fn align_columns_like(reference: &CMatrix, targets: &CMatrix) -> Result<CMatrix> {
    if reference.dim() != targets.dim() {
        return Err(Error::dims("aligned columns", reference.ncols(), targets.ncols()));
    }
    let mut out = targets.clone();
    for (mut dst, src) in out.axis_iter_mut(Axis(1)).zip(reference.axis_iter(Axis(1))) {
        let rot = real_alignment(src);
        dst.mapv_inplace(|v| v * rot);
    }
    Ok(out)
}

fn check_same(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.pixels.dim() != b.pixels.dim() {
        return Err(Error::InvalidArgument(format!(
            "image sizes differ: {:?} vs {:?}",
            a.pixels.dim(),
            b.pixels.dim()
        )));
    }
    Ok(())
}

/// `10·log10(1/MSE)`; identical images give `+∞`.
pub fn psnr(recon: &GrayImage, reference: &GrayImage) -> Result<f64> {
    check_same(recon, reference)?;
    let mse = recon
        .pixels
        .iter()
        .zip(reference.pixels.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / recon.pixels.len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    })
}

/// PSNR clipped to [`PSNR_CAP_DB`] for reports.
pub fn capped_psnr(db: f64) -> f64 {
    db.min(PSNR_CAP_DB)
}

/// Mean SSIM over all 8×8 windows at stride 1 with a uniform window and
/// population statistics.
pub fn ssim(recon: &GrayImage, reference: &GrayImage) -> Result<f64> {
    check_same(recon, reference)?;
    let (h, w) = recon.pixels.dim();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels"
        )));
    }
    let (a, b) = (&recon.pixels, &reference.pixels);
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let row_sums: Vec<f64> = (0..=h - SSIM_WINDOW)
        .into_par_iter()
        .map(|r| {
            (0..=w - SSIM_WINDOW)
                .map(|c| {
                    let wa = a.slice(s![r..r + SSIM_WINDOW, c..c + SSIM_WINDOW]);
                    let wb = b.slice(s![r..r + SSIM_WINDOW, c..c + SSIM_WINDOW]);
                    let ma = wa.sum() / n;
                    let mb = wb.sum() / n;
                    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                    for (x, y) in wa.iter().zip(wb.iter()) {
                        let (dx, dy) = (x - ma, y - mb);
                        va += dx * dx;
                        vb += dy * dy;
                        cov += dx * dy;
                    }
                    let (va, vb, cov) = (va / n, vb / n, cov / n);
                    ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                        / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2))
                })
                .sum::<f64>()
        })
        .collect();
    let windows = ((h - SSIM_WINDOW + 1) * (w - SSIM_WINDOW + 1)) as f64;
    Ok(row_sums.iter().sum::<f64>() / windows)
}
