//! 24×24 grayscale glyph images and their local second-moment statistics.
//!
//! Images show one character (digit or capital letter) drawn from a built-in
//! 5×7 dot font, upscaled to a 14-pixel-tall bitmap, rotated by a small
//! angle with bilinear interpolation — which is what produces the gray
//! levels — and placed at an integer offset from the frame center. A
//! placement is valid only when the rotated glyph, including the one-pixel
//! interpolation halo, stays fully inside the frame; the seeded sampler
//! redraws rotation and offset until a valid placement is found.
//!
//! For correlation estimation the frame splits into sixteen 6×6 subgrids.
//! [`subgrid_correlation`] averages the outer product of a subgrid's pixels
//! over a corpus with a fixed binary reduction tree, so the result is
//! bit-identical no matter how the corpus generation was scheduled, and
//! rescales it to unit trace.

use std::f64::consts::PI;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::mat::{Mat, SymMatrix};
use crate::rng::{rng, substream};

/// Frame side length in pixels.
pub const GLYPH_FRAME: usize = 24;

/// Side length of one correlation subgrid.
pub const SUBGRID_SIDE: usize = 6;

/// Number of subgrids per frame (a 4×4 tiling).
pub const SUBGRID_COUNT: usize = 16;

/// Characters the font covers, in label order.
pub const GLYPH_LABELS: [char; 36] = [
    '0', '1', '2', '3', '4', '5', '6', '7', '8', '9', 'A', 'B', 'C', 'D',
    'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'N', 'O', 'P', 'Q', 'R',
    'S', 'T', 'U', 'V', 'W', 'X', 'Y', 'Z',
];

/// Placement draws allowed before the sampler gives up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100;

/// Largest rotation magnitude the sampler draws, in degrees.
pub const ROTATION_MAX_DEG: f64 = 30.0;

/// Largest offset magnitude the sampler draws, in pixels, per axis.
pub const OFFSET_MAX_PX: i32 = 4;

const FONT_H: usize = 7;
const FONT_W: usize = 5;
const SCALE: usize = 2; // 5×7 dots → 10×14 pixels, ~14 px tall

/// One rendered frame plus the placement that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphImage {
    /// Row-major pixel values in `[0, 1]`, length 576.
    pub pixels: Vec<f64>,
    /// The character drawn.
    pub label: char,
    /// Rotation applied, degrees.
    pub rotation_deg: f64,
    /// Offset applied, pixels, as `(rows down, columns right)`.
    pub offset_px: (i32, i32),
}

impl GlyphImage {
    /// Pixel value at `(row, col)`.
    pub fn pixel(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * GLYPH_FRAME + col]
    }

    /// Number of pixels strictly brighter than `threshold`.
    pub fn bright_count(&self, threshold: f64) -> usize {
        self.pixels.iter().filter(|p| **p > threshold).count()
    }

    /// The pixels of subgrid `index` (0..16, row-major over the 4×4
    /// tiling), rasterized row-major into 36 coordinates.
    pub fn subgrid_vector(&self, index: usize) -> Result<Vec<f64>> {
        if index >= SUBGRID_COUNT {
            return Err(Error::InvalidInput(format!(
                "subgrid index {index} out of range 0..{SUBGRID_COUNT}"
            )));
        }
        let r0 = (index / 4) * SUBGRID_SIDE;
        let c0 = (index % 4) * SUBGRID_SIDE;
        let mut out = Vec::with_capacity(SUBGRID_SIDE * SUBGRID_SIDE);
        for r in 0..SUBGRID_SIDE {
            for c in 0..SUBGRID_SIDE {
                out.push(self.pixel(r0 + r, c0 + c));
            }
        }
        Ok(out)
    }

    /// CSV row: the label, then all 576 pixels row-major.
    pub fn to_csv_row(&self) -> String {
        let mut fields = Vec::with_capacity(1 + self.pixels.len());
        fields.push(self.label.to_string());
        for p in &self.pixels {
            fields.push(crate::textio::fmt_g12(*p));
        }
        crate::textio::csv_line(&fields)
    }
}

/// Dot rows of one font character, 5 bits each, top row first.
fn font_rows(label: char) -> Option<[u8; FONT_H]> {
    let rows = match label {
        '0' => [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110],
        '1' => [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
        '2' => [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111],
        '3' => [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110],
        '4' => [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010],
        '5' => [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110],
        '6' => [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110],
        '7' => [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000],
        '8' => [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110],
        '9' => [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100],
        'A' => [0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001],
        'B' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110],
        'C' => [0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110],
        'D' => [0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100],
        'E' => [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111],
        'F' => [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000],
        'G' => [0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111],
        'H' => [0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001],
        'I' => [0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
        'J' => [0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100],
        'K' => [0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001],
        'L' => [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111],
        'M' => [0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001],
        'N' => [0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001],
        'O' => [0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110],
        'P' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000],
        'Q' => [0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101],
        'R' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001],
        'S' => [0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110],
        'T' => [0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100],
        'U' => [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110],
        'V' => [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100],
        'W' => [0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010],
        'X' => [0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001],
        'Y' => [0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100],
        'Z' => [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111],
        _ => return None,
    };
    Some(rows)
}

const SRC_H: usize = FONT_H * SCALE;
const SRC_W: usize = FONT_W * SCALE;

/// The glyph as a crisp 14×10 bitmap (each dot a 2×2 block of ones).
fn upscaled_bitmap(label: char) -> Option<[[f64; SRC_W]; SRC_H]> {
    let rows = font_rows(label)?;
    let mut src = [[0.0; SRC_W]; SRC_H];
    for (di, bits) in rows.iter().enumerate() {
        for dj in 0..FONT_W {
            if bits >> (FONT_W - 1 - dj) & 1 == 1 {
                for a in 0..SCALE {
                    for b in 0..SCALE {
                        src[di * SCALE + a][dj * SCALE + b] = 1.0;
                    }
                }
            }
        }
    }
    Some(src)
}

/// Tight row/column extent of the nonzero bitmap region.
fn bitmap_extent(src: &[[f64; SRC_W]; SRC_H]) -> (f64, f64, f64, f64) {
    let (mut i0, mut i1, mut j0, mut j1) =
        (SRC_H as f64, -1.0f64, SRC_W as f64, -1.0f64);
    for (i, row) in src.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                i0 = i0.min(i as f64);
                i1 = i1.max(i as f64);
                j0 = j0.min(j as f64);
                j1 = j1.max(j as f64);
            }
        }
    }
    (i0, i1, j0, j1)
}

fn bilinear(src: &[[f64; SRC_W]; SRC_H], i: f64, j: f64) -> f64 {
    let i0 = i.floor();
    let j0 = j.floor();
    let di = i - i0;
    let dj = j - j0;
    let mut acc = 0.0;
    for (si, wi) in [(i0 as i64, 1.0 - di), (i0 as i64 + 1, di)] {
        for (sj, wj) in [(j0 as i64, 1.0 - dj), (j0 as i64 + 1, dj)] {
            if wi == 0.0 || wj == 0.0 {
                continue;
            }
            if (0..SRC_H as i64).contains(&si) && (0..SRC_W as i64).contains(&sj) {
                acc += wi * wj * src[si as usize][sj as usize];
            }
        }
    }
    acc
}

/// Draw `label` rotated by `rotation_deg` about its center and shifted by
/// `offset_px` pixels from the frame center.
///
/// Rotation uses bilinear interpolation on the upscaled bitmap; at a whole
/// number of turns and zero offset the output reproduces the bitmap
/// exactly. Fails with [`Error::Placement`] when the rotated glyph,
/// including the one-pixel interpolation halo, would not fit entirely
/// inside the frame.
pub fn render_glyph(
    label: char,
    rotation_deg: f64,
    offset_px: (i32, i32),
) -> Result<GlyphImage> {
    if !rotation_deg.is_finite() {
        return Err(Error::InvalidInput(format!(
            "rotation must be finite, got {rotation_deg}"
        )));
    }
    let src = upscaled_bitmap(label).ok_or_else(|| {
        Error::InvalidInput(format!(
            "no glyph for {label:?}; supported labels are 0-9 and A-Z"
        ))
    })?;
    let theta = rotation_deg * PI / 180.0;
    let (cos, sin) = (theta.cos(), theta.sin());
    let src_c = ((SRC_H as f64 - 1.0) / 2.0, (SRC_W as f64 - 1.0) / 2.0);
    let frame_c = (GLYPH_FRAME as f64 - 1.0) / 2.0;
    let place_c = (
        frame_c + offset_px.0 as f64,
        frame_c + offset_px.1 as f64,
    );

    // Forward-map the halo-expanded corners of the dot bounding box; every
    // pixel the interpolation can touch lies inside their rotated
    // rectangle, so corners inside [-1/2, frame - 1/2] guarantee no loss.
    let (i0, i1, j0, j1) = bitmap_extent(&src);
    for ci in [i0 - 1.0, i1 + 1.0] {
        for cj in [j0 - 1.0, j1 + 1.0] {
            let (di, dj) = (ci - src_c.0, cj - src_c.1);
            let r = cos * di - sin * dj + place_c.0;
            let c = sin * di + cos * dj + place_c.1;
            let lim = GLYPH_FRAME as f64 - 0.501;
            if !(-0.499..=lim).contains(&r) || !(-0.499..=lim).contains(&c) {
                return Err(Error::Placement(format!(
                    "glyph {label:?} at {rotation_deg} deg, offset \
                     {offset_px:?} does not fit inside the frame"
                )));
            }
        }
    }

    let mut pixels = vec![0.0; GLYPH_FRAME * GLYPH_FRAME];
    for r in 0..GLYPH_FRAME {
        for c in 0..GLYPH_FRAME {
            let (dr, dc) = (r as f64 - place_c.0, c as f64 - place_c.1);
            // Inverse rotation maps frame coordinates back onto the bitmap.
            let i = cos * dr + sin * dc + src_c.0;
            let j = -sin * dr + cos * dc + src_c.1;
            pixels[r * GLYPH_FRAME + c] = bilinear(&src, i, j).clamp(0.0, 1.0);
        }
    }
    Ok(GlyphImage {
        pixels,
        label,
        rotation_deg,
        offset_px,
    })
}

/// Draw a uniformly random label and redraw rotation and offset until the
/// glyph fits, with at most [`MAX_PLACEMENT_ATTEMPTS`] tries.
pub fn sample_glyph(seed: u64) -> Result<GlyphImage> {
    let mut r = rng(seed);
    let label = GLYPH_LABELS[r.random_range(0..GLYPH_LABELS.len())];
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let rotation = r.random_range(-ROTATION_MAX_DEG..=ROTATION_MAX_DEG);
        let offset = (
            r.random_range(-OFFSET_MAX_PX..=OFFSET_MAX_PX),
            r.random_range(-OFFSET_MAX_PX..=OFFSET_MAX_PX),
        );
        match render_glyph(label, rotation, offset) {
            Ok(img) => return Ok(img),
            Err(Error::Placement(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Placement(format!(
        "no valid placement for glyph {label:?} in {MAX_PLACEMENT_ATTEMPTS} attempts"
    )))
}

/// Generate `n` independent images; item `i` uses sub-stream `i` of `seed`,
/// so any scheduling of the work reproduces the same corpus.
pub fn glyph_corpus(n: usize, seed: u64) -> Result<Vec<GlyphImage>> {
    (0..n).map(|i| sample_glyph(substream(seed, i as u64))).collect()
}

/// Serialize a corpus, one [`GlyphImage::to_csv_row`] per line.
pub fn corpus_to_csv(images: &[GlyphImage]) -> String {
    images.iter().map(|g| g.to_csv_row()).collect()
}

/// Sum of outer products `a aᵀ` over `images`, combined with a fixed
/// binary tree so the result does not depend on how callers might chunk
/// the work.
fn outer_sum(images: &[GlyphImage], index: usize) -> Result<Vec<f64>> {
    let d = SUBGRID_SIDE * SUBGRID_SIDE;
    if images.len() == 1 {
        let a = images[0].subgrid_vector(index)?;
        let mut out = vec![0.0; d * d];
        for j in 0..d {
            for k in 0..d {
                out[j * d + k] = a[j] * a[k];
            }
        }
        return Ok(out);
    }
    let mid = images.len() / 2;
    let left = outer_sum(&images[..mid], index)?;
    let right = outer_sum(&images[mid..], index)?;
    Ok(left.iter().zip(&right).map(|(x, y)| x + y).collect())
}

/// Empirical second-moment matrix of subgrid `index` over a corpus,
/// rescaled to unit trace.
///
/// The matrix is an average of outer products, hence symmetric positive
/// semidefinite up to roundoff.
pub fn subgrid_correlation(images: &[GlyphImage], index: usize) -> Result<SymMatrix> {
    if images.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two images to average, got {}",
            images.len()
        )));
    }
    let d = SUBGRID_SIDE * SUBGRID_SIDE;
    let sum = outer_sum(images, index)?;
    let trace: f64 = (0..d).map(|j| sum[j * d + j]).sum();
    if trace <= 0.0 {
        return Err(Error::Domain(
            "subgrid is identically zero across the corpus".into(),
        ));
    }
    let m = Mat::from_fn(d, d, |j, k| sum[j * d + k] / trace);
    SymMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::sym_eig;

    #[test]
    fn upright_render_reproduces_the_bitmap() {
        let img = render_glyph('A', 0.0, (0, 0)).unwrap();
        assert_eq!(img.pixels.len(), GLYPH_FRAME * GLYPH_FRAME);
        // Integer-aligned bilinear sampling is exact: every pixel is 0 or 1
        // and the lit area is the dot count times the 2×2 upscale block.
        let dots: u32 = font_rows('A')
            .unwrap()
            .iter()
            .map(|b| b.count_ones())
            .sum();
        let mut lit = 0;
        for p in &img.pixels {
            assert!(*p == 0.0 || *p == 1.0, "pixel {p}");
            if *p == 1.0 {
                lit += 1;
            }
        }
        assert_eq!(lit, (dots as usize) * SCALE * SCALE);
        // The bitmap lands centered: rows 5..19, columns 7..17.
        for (idx, p) in img.pixels.iter().enumerate() {
            let (r, c) = (idx / GLYPH_FRAME, idx % GLYPH_FRAME);
            if *p > 0.0 {
                assert!((5..19).contains(&r) && (7..17).contains(&c));
            }
        }
    }

    #[test]
    fn full_turn_matches_upright() {
        for label in ['0', 'Q', 'Z'] {
            let a = render_glyph(label, 0.0, (1, -2)).unwrap();
            let b = render_glyph(label, 360.0, (1, -2)).unwrap();
            let worst = a
                .pixels
                .iter()
                .zip(&b.pixels)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
;
            assert!(worst <= 0.05, "{label}: max pixel difference {worst}");
        }
    }

    #[test]
    fn every_label_renders_and_bad_requests_fail() {
        for label in GLYPH_LABELS {
            let img = render_glyph(label, 0.0, (0, 0)).unwrap();
            assert!(img.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
            assert!(img.bright_count(0.1) >= 20, "label {label} nearly empty");
        }
        assert!(matches!(
            render_glyph('a', 0.0, (0, 0)),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            render_glyph('0', f64::NAN, (0, 0)),
            Err(Error::InvalidInput(_))
        ));
        // An offset this large pushes the glyph through the frame edge.
        assert!(matches!(
            render_glyph('0', 0.0, (0, 12)),
            Err(Error::Placement(_))
        ));
        assert!(matches!(
            render_glyph('W', 30.0, (4, 8)),
            Err(Error::Placement(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_in_bounds() {
        let a = sample_glyph(11).unwrap();
        let b = sample_glyph(11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_glyph(12).unwrap());
        assert!(a.rotation_deg.abs() <= ROTATION_MAX_DEG);
        assert!(a.offset_px.0.abs() <= OFFSET_MAX_PX);
        assert!(a.offset_px.1.abs() <= OFFSET_MAX_PX);
        let corpus = glyph_corpus(5, 99).unwrap();
        assert_eq!(corpus[3], sample_glyph(substream(99, 3)).unwrap());
    }

    #[test]
    fn corpus_brightness_sits_in_the_expected_band() {
        let corpus = glyph_corpus(2080, 2026).unwrap();
        let mean = corpus
            .iter()
            .map(|g| g.bright_count(0.1) as f64)
            .sum::<f64>()
            / corpus.len() as f64;
        assert!(
            (60.0..=110.0).contains(&mean),
            "mean bright-pixel count {mean:.1}"
        );
        for g in corpus.iter().take(50) {
            assert!(g.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
        }
        // CSV shape: label plus 576 pixel fields per row.
        let csv = corpus_to_csv(&corpus[..2]);
        let mut lines = csv.lines();
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 577);
        assert_eq!(
            first.split(',').next().unwrap(),
            corpus[0].label.to_string()
        );
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn constant_images_give_the_flat_rank_one_correlation() {
        let ones = GlyphImage {
            pixels: vec![1.0; GLYPH_FRAME * GLYPH_FRAME],
            label: '0',
            rotation_deg: 0.0,
            offset_px: (0, 0),
        };
        let corr = subgrid_correlation(&[ones.clone(), ones], 7).unwrap();
        for j in 0..36 {
            for k in 0..36 {
                assert!((corr[(j, k)] - 1.0 / 36.0).abs() <= 1e-12);
            }
        }
        let eig = sym_eig(&corr).unwrap();
        assert!((eig.values[0] - 1.0).abs() <= 1e-9);
        assert!(eig.values[35].abs() <= 1e-9);
    }

    #[test]
    fn independent_pixels_give_a_near_diagonal_correlation() {
        use rand::Rng as _;
        let mut r = rng(31);
        let images: Vec<GlyphImage> = (0..10_000)
            .map(|_| GlyphImage {
                pixels: (0..GLYPH_FRAME * GLYPH_FRAME)
                    .map(|_| r.random_range(0.0..1.0))
                    .collect(),
                label: '0',
                rotation_deg: 0.0,
                offset_px: (0, 0),
            })
            .collect();
        let corr = subgrid_correlation(&images, 0).unwrap();
        let trace: f64 = (0..36).map(|j| corr[(j, j)]).sum();
        assert!((trace - 1.0).abs() <= 1e-12);
        for j in 0..36 {
            for k in 0..36 {
                if j != k {
                    // Uniform pixels on [0,1] leave a mean-squared floor of
                    // (1/4)/12 ≈ 0.021 after trace normalization; the spec
                    // point is that nothing exceeds the diagonal band.
                    assert!(corr[(j, k)].abs() < 0.03, "({j},{k}) {}", corr[(j, k)]);
                }
            }
        }
    }

    #[test]
    fn central_subgrids_carry_structured_correlation() {
        let corpus = glyph_corpus(2080, 2026).unwrap();
        for index in [5usize, 6, 9, 10] {
            let corr = subgrid_correlation(&corpus, index).unwrap();
            let eig = sym_eig(&corr).unwrap();
            assert!(
                eig.values[35] >= -1e-12,
                "subgrid {index}: negative eigenvalue {}",
                eig.values[35]
            );
            let ratio = eig.values[0] / eig.values[35].max(1e-300);
            assert!(
                ratio > 10.0,
                "subgrid {index}: eigenvalue spread {ratio} too flat"
            );
        }
    }

    #[test]
    fn correlation_input_validation() {
        let img = render_glyph('5', 10.0, (1, 1)).unwrap();
        assert!(subgrid_correlation(&[img.clone()], 0).is_err());
        assert!(subgrid_correlation(&[img.clone(), img.clone()], 16).is_err());
        assert!(img.subgrid_vector(16).is_err());
        let zero = GlyphImage {
            pixels: vec![0.0; GLYPH_FRAME * GLYPH_FRAME],
            label: '0',
            rotation_deg: 0.0,
            offset_px: (0, 0),
        };
        assert!(subgrid_correlation(&[zero.clone(), zero], 0).is_err());
    }
}
