//! Preprocessing chain for scanned numeral images.
//!
//! Takes a raw grayscale scan and produces the two binary artifacts the
//! feature extractor works on: a filled, size-normalized image and its
//! one-pixel-wide skeleton. Steps: Otsu binarization, polarity inversion,
//! speck removal plus morphological closing, bounding-box crop,
//! nearest-neighbor resize to 40x30, and Zhang-Suen thinning.

use std::path::Path;

use crate::error::{Error, Result};

/// Normalized glyph height in rows.
pub const NORM_HEIGHT: usize = 40;
/// Normalized glyph width in columns.
pub const NORM_WIDTH: usize = 30;

/// Default minimum 8-connected component size kept by `denoise`.
pub const DEFAULT_MIN_COMPONENT_SIZE: usize = 5;

/// Rectangular 8-bit intensity raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        assert_eq!(pixels.len(), width * height, "pixel buffer size mismatch");
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Decodes a PNG or PGM (P2/P5) file. Color inputs are reduced to
    /// grayscale by averaging the three channels.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::image(path, e))?;
        let rgb = img.to_rgb8();
        let (w, h) = (rgb.width() as usize, rgb.height() as usize);
        let pixels = rgb
            .pixels()
            .map(|p| ((p.0[0] as u16 + p.0[1] as u16 + p.0[2] as u16) / 3) as u8)
            .collect();
        Ok(GrayImage::new(w, h, pixels))
    }
}

/// Rectangular {0,1} raster, row-major. 1 means ink once polarity has been
/// fixed by `invert`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        assert_eq!(pixels.len(), width * height, "pixel buffer size mismatch");
        assert!(pixels.iter().all(|&p| p <= 1), "pixels must be 0 or 1");
        BinaryImage {
            width,
            height,
            pixels,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        BinaryImage::new(width, height, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        debug_assert!(value <= 1);
        self.pixels[row * self.width + col] = value;
    }

    /// Bounds-checked read with signed coordinates; out-of-frame reads 0.
    #[inline]
    pub fn at(&self, row: isize, col: isize) -> u8 {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            0
        } else {
            self.pixels[row as usize * self.width + col as usize]
        }
    }

    pub fn ink_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// Writes as an 8-bit grayscale file (ink = 0, background = 255),
    /// PNG or PGM by extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let buf: Vec<u8> = self
            .pixels
            .iter()
            .map(|&p| if p == 1 { 0u8 } else { 255u8 })
            .collect();
        let img =
            image::GrayImage::from_raw(self.width as u32, self.height as u32, buf).expect("size");
        img.save(path).map_err(|e| Error::image(path, e))
    }
}

/// Neighbor connectivity for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

const NEIGHBORS_4: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Labels connected components of `value`-pixels. Returns a row-major label
/// map (0 = not part of any component, components numbered from 1) and the
/// component count.
pub fn label_components(
    img: &BinaryImage,
    value: u8,
    connectivity: Connectivity,
) -> (Vec<u32>, u32) {
    let (w, h) = (img.width, img.height);
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let offsets: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &NEIGHBORS_4,
        Connectivity::Eight => &NEIGHBORS_8,
    };
    let mut stack = Vec::new();
    for start in 0..w * h {
        if img.pixels[start] != value || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (r, c) = ((idx / w) as isize, (idx % w) as isize);
            for &(dr, dc) in offsets {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                    continue;
                }
                let nidx = nr as usize * w + nc as usize;
                if img.pixels[nidx] == value && labels[nidx] == 0 {
                    labels[nidx] = next;
                    stack.push(nidx);
                }
            }
        }
    }
    (labels, next)
}

/// Otsu thresholding: picks the threshold maximizing between-class variance
/// of the intensity histogram; output pixel = 1 iff intensity > t*.
pub fn binarize(img: &GrayImage) -> Result<BinaryImage> {
    let mut hist = [0u64; 256];
    for &p in &img.pixels {
        hist[p as usize] += 1;
    }
    let total = img.pixels.len() as f64;
    let sum_total: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &n)| v as f64 * n as f64)
        .sum();

    let mut best_t = None;
    let mut best_var = 0.0f64;
    let mut w0 = 0.0f64;
    let mut sum0 = 0.0f64;
    for t in 0..256usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_total - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best_t = Some(t as u8);
        }
    }
    let t = best_t.ok_or(Error::DegenerateImage)?;
    let pixels = img.pixels.iter().map(|&p| (p > t) as u8).collect();
    Ok(BinaryImage::new(img.width, img.height, pixels))
}

/// Flips every pixel; used to make ink 1 on dark-on-light scans.
pub fn invert(img: &BinaryImage) -> BinaryImage {
    let pixels = img.pixels.iter().map(|&p| 1 - p).collect();
    BinaryImage::new(img.width, img.height, pixels)
}

fn dilate3x3(img: &BinaryImage) -> BinaryImage {
    let mut out = BinaryImage::zeros(img.width, img.height);
    for r in 0..img.height as isize {
        for c in 0..img.width as isize {
            let mut any = 0;
            'scan: for dr in -1..=1 {
                for dc in -1..=1 {
                    if img.at(r + dr, c + dc) == 1 {
                        any = 1;
                        break 'scan;
                    }
                }
            }
            out.set(r as usize, c as usize, any);
        }
    }
    out
}

/// Removes 8-connected ink components smaller than `min_component_size`,
/// then closes (3x3 dilate followed by 3x3 erode) to smooth stroke edges
/// and fill pinholes.
///
/// Erosion after dilation treats out-of-frame pixels as ink so that the
/// closing never removes original foreground at the image border.
pub fn denoise(img: &BinaryImage, min_component_size: usize) -> BinaryImage {
    assert!(min_component_size >= 1);
    let (labels, count) = label_components(img, 1, Connectivity::Eight);
    let mut sizes = vec![0usize; count as usize + 1];
    for &l in &labels {
        sizes[l as usize] += 1;
    }
    let mut kept = img.clone();
    for (idx, &l) in labels.iter().enumerate() {
        if l != 0 && sizes[l as usize] < min_component_size {
            kept.pixels[idx] = 0;
        }
    }
    let closed = erode_border_ink(&dilate3x3(&kept));
    // Union with survivors: closing is extensive on its input.
    let mut out = closed;
    for (o, &k) in out.pixels.iter_mut().zip(kept.pixels.iter()) {
        if k == 1 {
            *o = 1;
        }
    }
    out
}

/// 3x3 erosion that treats pixels outside the frame as ink.
fn erode_border_ink(img: &BinaryImage) -> BinaryImage {
    let mut out = BinaryImage::zeros(img.width, img.height);
    for r in 0..img.height as isize {
        for c in 0..img.width as isize {
            let mut all = 1;
            'scan: for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    let in_frame = nr >= 0
                        && nc >= 0
                        && (nr as usize) < img.height
                        && (nc as usize) < img.width;
                    if in_frame && img.at(nr, nc) == 0 {
                        all = 0;
                        break 'scan;
                    }
                }
            }
            out.set(r as usize, c as usize, all);
        }
    }
    out
}

/// Crops to the minimal axis-aligned rectangle containing all ink.
pub fn crop_to_content(img: &BinaryImage) -> Result<BinaryImage> {
    let mut min_r = usize::MAX;
    let mut max_r = 0usize;
    let mut min_c = usize::MAX;
    let mut max_c = 0usize;
    for r in 0..img.height {
        for c in 0..img.width {
            if img.get(r, c) == 1 {
                min_r = min_r.min(r);
                max_r = max_r.max(r);
                min_c = min_c.min(c);
                max_c = max_c.max(c);
            }
        }
    }
    if min_r == usize::MAX {
        return Err(Error::BlankInput);
    }
    let (h, w) = (max_r - min_r + 1, max_c - min_c + 1);
    let mut out = BinaryImage::zeros(w, h);
    for r in 0..h {
        for c in 0..w {
            out.set(r, c, img.get(min_r + r, min_c + c));
        }
    }
    Ok(out)
}

/// Resamples a cropped glyph to the standard 40x30 frame by nearest-neighbor
/// coordinate mapping: output (r,c) reads input (floor(r*H/40), floor(c*W/30)).
pub fn normalize(img: &BinaryImage) -> Result<BinaryImage> {
    if img.ink_count() == 0 {
        return Err(Error::BlankInput);
    }
    let (h, w) = (img.height, img.width);
    let mut out = BinaryImage::zeros(NORM_WIDTH, NORM_HEIGHT);
    for r in 0..NORM_HEIGHT {
        for c in 0..NORM_WIDTH {
            let sr = r * h / NORM_HEIGHT;
            let sc = c * w / NORM_WIDTH;
            out.set(r, c, img.get(sr, sc));
        }
    }
    // Heavy downsampling can miss every ink pixel of a sparse glyph; keep
    // the output non-blank by projecting one ink pixel forward.
    if out.ink_count() == 0 {
        'outer: for r in 0..h {
            for c in 0..w {
                if img.get(r, c) == 1 {
                    out.set(
                        (r * NORM_HEIGHT / h).min(NORM_HEIGHT - 1),
                        (c * NORM_WIDTH / w).min(NORM_WIDTH - 1),
                        1,
                    );
                    break 'outer;
                }
            }
        }
    }
    Ok(out)
}

/// Neighbor ring in Zhang-Suen order P2..P9: N, NE, E, SE, S, SW, W, NW.
#[inline]
fn ring(img: &BinaryImage, r: isize, c: isize) -> [u8; 8] {
    [
        img.at(r - 1, c),
        img.at(r - 1, c + 1),
        img.at(r, c + 1),
        img.at(r + 1, c + 1),
        img.at(r + 1, c),
        img.at(r + 1, c - 1),
        img.at(r, c - 1),
        img.at(r - 1, c - 1),
    ]
}

/// 0->1 transitions around the ring.
#[inline]
fn transitions(n: &[u8; 8]) -> u32 {
    (0..8).filter(|&i| n[i] == 0 && n[(i + 1) % 8] == 1).count() as u32
}

/// One Zhang-Suen subiteration. Deletions are applied sequentially in
/// raster order with the conditions re-checked against the updated image:
/// the one-transition condition then guarantees every single deletion
/// keeps the foreground 8-connected, where the classical parallel update
/// can erase an isolated 2x2 block entirely.
fn zhang_suen_pass(img: &mut BinaryImage, second: bool) -> bool {
    let mut changed = false;
    for r in 0..img.height as isize {
        for c in 0..img.width as isize {
            if img.at(r, c) != 1 {
                continue;
            }
            let n = ring(img, r, c);
            let b: u32 = n.iter().map(|&v| v as u32).sum();
            if !(2..=6).contains(&b) || transitions(&n) != 1 {
                continue;
            }
            // n[0]=N, n[2]=E, n[4]=S, n[6]=W
            let (c1, c2) = if !second {
                (n[0] * n[2] * n[4], n[2] * n[4] * n[6])
            } else {
                (n[0] * n[2] * n[6], n[0] * n[4] * n[6])
            };
            if c1 == 0 && c2 == 0 {
                img.set(r as usize, c as usize, 0);
                changed = true;
            }
        }
    }
    changed
}

/// Clears redundant pixels of remaining 2x2 ink blocks. Only deletes a pixel
/// when it is a simple point (one ring transition, more than one neighbor),
/// so connectivity is preserved. Sequential in raster order.
fn collapse_squares(img: &mut BinaryImage) -> bool {
    let mut changed = false;
    for r in 0..img.height as isize {
        for c in 0..img.width as isize {
            if img.at(r, c) != 1 {
                continue;
            }
            let in_square = (img.at(r, c + 1) == 1
                && img.at(r + 1, c) == 1
                && img.at(r + 1, c + 1) == 1)
                || (img.at(r, c - 1) == 1 && img.at(r + 1, c - 1) == 1 && img.at(r + 1, c) == 1)
                || (img.at(r - 1, c) == 1 && img.at(r - 1, c + 1) == 1 && img.at(r, c + 1) == 1)
                || (img.at(r - 1, c - 1) == 1 && img.at(r - 1, c) == 1 && img.at(r, c - 1) == 1);
            if !in_square {
                continue;
            }
            let n = ring(img, r, c);
            let b: u32 = n.iter().map(|&v| v as u32).sum();
            if b > 1 && transitions(&n) == 1 {
                img.set(r as usize, c as usize, 0);
                changed = true;
            }
        }
    }
    changed
}

/// Zhang-Suen thinning iterated to fixpoint, with a square-collapse cleanup
/// folded into the loop so the result has no 2x2 all-ink block.
pub fn thin(img: &BinaryImage) -> BinaryImage {
    let mut out = img.clone();
    loop {
        let mut changed = zhang_suen_pass(&mut out, false);
        changed |= zhang_suen_pass(&mut out, true);
        changed |= collapse_squares(&mut out);
        if !changed {
            break;
        }
    }
    out
}

/// The two binary artifacts feature extraction consumes, both 40x30.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessedNumeral {
    pub filled: BinaryImage,
    pub skeleton: BinaryImage,
}

/// Full chain: binarize -> invert -> denoise -> crop -> normalize, then thin.
pub fn preprocess(img: &GrayImage) -> Result<PreprocessedNumeral> {
    preprocess_with(img, DEFAULT_MIN_COMPONENT_SIZE)
}

pub fn preprocess_with(img: &GrayImage, min_component_size: usize) -> Result<PreprocessedNumeral> {
    let binary = binarize(img)?;
    let inked = invert(&binary);
    let clean = denoise(&inked, min_component_size);
    let cropped = crop_to_content(&clean)?;
    let filled = normalize(&cropped)?;
    let skeleton = thin(&filled);
    Ok(PreprocessedNumeral { filled, skeleton })
}
