//! Fixed-geometry rasterization of (un)diacritized text.
//!
//! Every base character occupies one cell of `advance_width` pixels;
//! diacritics are zero-advance overlays inside the cell. A word therefore
//! renders to the same dimensions with or without its marks.

mod glyphs;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use glyphs::{Bitmap, BuiltinFace, GlyphProvider, BUILTIN_FACE_ID};

use crate::script::{is_hebrew_letter, is_hebrew_mark, Mark, Word};

/// Side of a square patch.
pub const PATCH: usize = 16;
/// Flattened patch length.
pub const PATCH_DIM: usize = PATCH * PATCH;
/// Longest instance, in patches.
pub const MAX_PATCHES: usize = 529;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("instance needs {needed} patches, limit is {limit}")]
    TooWide { needed: usize, limit: usize },
    #[error("no glyph for U+{0:04X}")]
    MissingGlyph(u32),
    #[error("combining mark U+{0:04X} has no base character")]
    OrphanMark(u32),
    #[error("invalid render config: {0}")]
    BadConfig(String),
    #[error("image is {height}x{width}; both sides must be multiples of {PATCH}")]
    BadDimensions { height: usize, width: usize },
    #[error("failed to write image: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub cell_height: usize,
    pub advance_width: usize,
    pub max_patches: usize,
    pub glyph_source: String,
    /// Fail on characters the glyph provider does not cover instead of
    /// drawing a replacement box.
    pub strict: bool,
    /// Mirror whole instances horizontally after rendering.
    pub mirror: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            cell_height: PATCH,
            advance_width: PATCH,
            max_patches: MAX_PATCHES,
            glyph_source: BUILTIN_FACE_ID.to_string(),
            strict: false,
            mirror: false,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), RenderError> {
        for (name, v) in [("cell_height", self.cell_height), ("advance_width", self.advance_width)] {
            if v == 0 || v % PATCH != 0 {
                return Err(RenderError::BadConfig(format!("{name} = {v} is not a positive multiple of {PATCH}")));
            }
        }
        if self.advance_width < self.cell_height {
            return Err(RenderError::BadConfig("advance_width must be at least cell_height".into()));
        }
        if self.max_patches == 0 {
            return Err(RenderError::BadConfig("max_patches must be positive".into()));
        }
        Ok(())
    }

    fn patches_per_cell(&self) -> usize {
        (self.cell_height / PATCH) * (self.advance_width / PATCH)
    }
}

/// Grayscale raster: white background 1.0, ink 0.0.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
    /// Holds digits or Latin text, whose reading order the whole-instance
    /// mirror reverses.
    pub has_ltr_runs: bool,
    /// Cells were dropped to respect `max_patches`.
    pub truncated: bool,
}

impl RenderedImage {
    pub fn blank(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            pixels: vec![1.0; height * width],
            has_ltr_runs: false,
            truncated: false,
        }
    }

    /// Builds an image from row-major pixels.
    pub fn from_pixels(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self, RenderError> {
        if pixels.len() != height * width || !height.is_multiple_of(PATCH) || !width.is_multiple_of(PATCH) {
            return Err(RenderError::BadDimensions { height, width });
        }
        Ok(Self {
            height,
            width,
            pixels,
            has_ltr_runs: false,
            truncated: false,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * self.width + col] = v;
    }

    pub fn patch_count(&self) -> usize {
        (self.height / PATCH) * (self.width / PATCH)
    }

    /// Horizontal flip: column `c` becomes `width - 1 - c`.
    pub fn mirror(&self) -> Self {
        let mut out = self.clone();
        for r in 0..self.height {
            let row = &mut out.pixels[r * self.width..(r + 1) * self.width];
            row.reverse();
        }
        out
    }

    /// Row-major 16x16 blocks, each flattened row-major.
    pub fn patches(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.patch_count());
        for pr in 0..self.height / PATCH {
            for pc in 0..self.width / PATCH {
                let mut patch = Vec::with_capacity(PATCH_DIM);
                for r in 0..PATCH {
                    let start = (pr * PATCH + r) * self.width + pc * PATCH;
                    patch.extend_from_slice(&self.pixels[start..start + PATCH]);
                }
                out.push(patch);
            }
        }
        out
    }

    /// Inverse of [`RenderedImage::patches`].
    pub fn from_patches(height: usize, width: usize, patches: &[Vec<f64>]) -> Result<Self, RenderError> {
        let mut img = Self::blank(height, width);
        if !height.is_multiple_of(PATCH) || !width.is_multiple_of(PATCH) || patches.len() != img.patch_count() {
            return Err(RenderError::BadDimensions { height, width });
        }
        let per_row = width / PATCH;
        for (i, patch) in patches.iter().enumerate() {
            let (pr, pc) = (i / per_row, i % per_row);
            for r in 0..PATCH {
                for c in 0..PATCH {
                    img.set(pr * PATCH + r, pc * PATCH + c, patch[r * PATCH + c]);
                }
            }
        }
        Ok(img)
    }

    /// 8-bit grayscale bytes, row-major.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_gray8());
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), RenderError> {
        let io = |e: String| RenderError::Io(e);
        let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png {
            let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.to_gray8())
                .ok_or_else(|| io("buffer size".into()))?;
            img.save(path).map_err(|e| io(e.to_string()))
        } else {
            let mut f = std::fs::File::create(path).map_err(|e| io(e.to_string()))?;
            f.write_all(&self.to_pgm()).map_err(|e| io(e.to_string()))
        }
    }
}

struct Cell {
    base: char,
    marks: Vec<Mark>,
}

fn split_cells(text: &str, strict: bool) -> Result<Vec<Cell>, RenderError> {
    let mut cells: Vec<Cell> = Vec::new();
    for ch in text.nfd() {
        if is_hebrew_mark(ch) {
            let cell = cells.last_mut().ok_or(RenderError::OrphanMark(ch as u32))?;
            match Mark::new(ch) {
                Some(m) => {
                    if !cell.marks.contains(&m) {
                        cell.marks.push(m)
                    }
                }
                None if strict => return Err(RenderError::MissingGlyph(ch as u32)),
                None => {}
            }
        } else {
            cells.push(Cell { base: ch, marks: Vec::new() });
        }
    }
    Ok(cells)
}

/// Renders text in logical order, left to right, one cell per base
/// character. Fails with `TooWide` beyond `max_patches`.
pub fn render_text(text: &str, config: &RenderConfig) -> Result<RenderedImage, RenderError> {
    render_text_with(&BuiltinFace, text, config)
}

pub fn render_text_with(face: &dyn GlyphProvider, text: &str, config: &RenderConfig) -> Result<RenderedImage, RenderError> {
    config.validate()?;
    let cells = split_cells(text, config.strict)?;
    let needed = cells.len() * config.patches_per_cell();
    if needed > config.max_patches {
        return Err(RenderError::TooWide {
            needed,
            limit: config.max_patches,
        });
    }
    draw(face, &cells, config)
}

/// Renders a whole instance (a sentence line or a candidate word): cells
/// past `max_patches` are dropped with a warning, and the result is mirrored
/// when `config.mirror` is set.
pub fn render_instance(text: &str, config: &RenderConfig) -> Result<RenderedImage, RenderError> {
    config.validate()?;
    let mut cells = split_cells(text, config.strict)?;
    let limit = config.max_patches / config.patches_per_cell();
    let truncated = cells.len() > limit;
    if truncated {
        log::warn!("instance of {} cells truncated to {limit}", cells.len());
        cells.truncate(limit);
    }
    let mut img = draw(&BuiltinFace, &cells, config)?;
    img.truncated = truncated;
    Ok(if config.mirror { img.mirror() } else { img })
}

/// Candidate image of a word, mirrored when the config asks for it.
pub fn render_word(word: &Word, config: &RenderConfig) -> Result<RenderedImage, RenderError> {
    let img = render_text(&word.to_text(), config)?;
    Ok(if config.mirror { img.mirror() } else { img })
}

fn draw(face: &dyn GlyphProvider, cells: &[Cell], config: &RenderConfig) -> Result<RenderedImage, RenderError> {
    let scale = config.cell_height / PATCH;
    let pad = (config.advance_width - config.cell_height) / 2;
    let width = cells.len().max(1) * config.advance_width;
    let mut img = RenderedImage::blank(config.cell_height, width);
    for (i, cell) in cells.iter().enumerate() {
        if cell.base.is_ascii_alphanumeric() {
            img.has_ltr_runs = true;
        }
        let base = match face.base(cell.base) {
            Some(bm) => bm,
            None if config.strict => return Err(RenderError::MissingGlyph(cell.base as u32)),
            None => face.replacement(),
        };
        let x0 = i * config.advance_width + pad;
        let mut stamp = |bm: &Bitmap| {
            for (r, c) in bm.ink() {
                for dy in 0..scale {
                    for dx in 0..scale {
                        img.set(r * scale + dy, x0 + c * scale + dx, 0.0);
                    }
                }
            }
        };
        stamp(&base);
        if is_hebrew_letter(cell.base) {
            for m in &cell.marks {
                stamp(&face.mark(*m));
            }
        }
    }
    Ok(img)
}

/// Free-function form of [`RenderedImage::mirror`].
pub fn mirror_rtl(image: &RenderedImage) -> RenderedImage {
    image.mirror()
}

/// Free-function form of [`RenderedImage::patches`].
pub fn patchify(image: &RenderedImage) -> Vec<Vec<f64>> {
    image.patches()
}
