//! The built-in 16-pixel bitmap face.
//!
//! Letter and symbol bodies are 8x9 bitmaps placed at rows 3..12, columns
//! 4..12 of the 16x16 cell. Rows 0..3 hold the above-base marks (holam,
//! shin dot, sin dot) and rows 12..16 the below-base vowels, so marks never
//! collide with letter ink. Dagesh sits at the cell centre, which every
//! letter leaves at least partly open.

use crate::script::{self, Mark};

pub const CELL: usize = 16;

const BODY_ROW: usize = 3;
const BODY_COL: usize = 4;

/// A unit-scale 16x16 ink mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bitmap(pub [[bool; CELL]; CELL]);

impl Bitmap {
    pub const BLANK: Bitmap = Bitmap([[false; CELL]; CELL]);

    pub fn ink(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..CELL).flat_map(move |r| (0..CELL).filter(move |&c| self.0[r][c]).map(move |c| (r, c)))
    }

    fn from_body(rows: &[&str; 9]) -> Bitmap {
        let mut bm = Bitmap::BLANK;
        for (r, line) in rows.iter().enumerate() {
            debug_assert_eq!(line.len(), 8);
            for (c, ch) in line.bytes().enumerate() {
                if ch == b'#' {
                    bm.0[BODY_ROW + r][BODY_COL + c] = true;
                }
            }
        }
        bm
    }

    fn from_points(points: &[(usize, usize)]) -> Bitmap {
        let mut bm = Bitmap::BLANK;
        for &(r, c) in points {
            bm.0[r][c] = true;
        }
        bm
    }
}

/// Source of glyph bitmaps for the renderer. Alternative providers (for
/// instance a real font rasterizer) can stand behind the same interface.
pub trait GlyphProvider: Sync {
    fn id(&self) -> &str;
    /// Body bitmap of a base character, `None` when not covered.
    fn base(&self, ch: char) -> Option<Bitmap>;
    /// Overlay bitmap of an in-scope mark.
    fn mark(&self, mark: Mark) -> Bitmap;
    /// Drawn for characters the provider does not cover.
    fn replacement(&self) -> Bitmap;
}

/// The embedded reference face.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinFace;

pub const BUILTIN_FACE_ID: &str = "builtin-16";

impl GlyphProvider for BuiltinFace {
    fn id(&self) -> &str {
        BUILTIN_FACE_ID
    }

    fn base(&self, ch: char) -> Option<Bitmap> {
        if ch.is_whitespace() {
            return Some(Bitmap::BLANK);
        }
        body(ch).map(Bitmap::from_body)
    }

    fn mark(&self, mark: Mark) -> Bitmap {
        Bitmap::from_points(&mark_points(mark.as_char()))
    }

    fn replacement(&self) -> Bitmap {
        Bitmap::from_body(&[
            "########", "#......#", "#......#", "#......#", "#......#", "#......#", "#......#", "#......#", "########",
        ])
    }
}

fn bar(row: usize, from: usize, to: usize) -> impl Iterator<Item = (usize, usize)> {
    (from..=to).map(move |c| (row, c))
}

fn mark_points(ch: char) -> Vec<(usize, usize)> {
    let sheva_right = [(13, 10), (15, 10)];
    match ch {
        script::SHEVA => vec![(13, 8), (15, 8)],
        script::HATAF_SEGOL => {
            let mut v = vec![(13, 4), (13, 6), (15, 5)];
            v.extend(sheva_right);
            v
        }
        script::HATAF_PATAH => bar(13, 3, 6).chain(sheva_right).collect(),
        script::HATAF_QAMATS => bar(13, 3, 6).chain([(14, 5), (15, 5)]).chain(sheva_right).collect(),
        script::HIRIQ => vec![(14, 8)],
        script::TSERE => vec![(14, 6), (14, 10)],
        script::SEGOL => vec![(13, 6), (13, 10), (15, 8)],
        script::PATAH => bar(13, 5, 11).collect(),
        script::QAMATS => bar(13, 5, 11).chain([(14, 8), (15, 8)]).collect(),
        script::QAMATS_QATAN => bar(13, 5, 11).chain([(14, 8), (15, 7), (15, 9)]).collect(),
        script::QUBUTS => vec![(13, 5), (14, 8), (15, 11)],
        script::HOLAM => vec![(1, 7), (1, 8)],
        script::DAGESH => vec![(7, 7), (7, 8), (8, 7), (8, 8)],
        script::SHIN_DOT => vec![(1, 12), (1, 13), (2, 12), (2, 13)],
        script::SIN_DOT => vec![(1, 2), (1, 3), (2, 2), (2, 3)],
        other => unreachable!("U+{:04X} is not an inventory mark", other as u32),
    }
}

#[rustfmt::skip]
fn body(ch: char) -> Option<&'static [&'static str; 9]> {
    Some(match ch {
        '\u{05D0}' => &["........", ".#....#.", ".##...#.", "..##..#.", "...##...", "..#.##..", "..#..##.", "..#...#.", "........"],
        '\u{05D1}' => &["........", ".#####..", "......#.", "......#.", "......#.", "......#.", "......#.", ".#######", "........"],
        '\u{05D2}' => &["........", "..###...", "....#...", "....#...", "....#...", "...##...", "..#.#...", ".#..#...", "........"],
        '\u{05D3}' => &["........", ".#######", ".....#..", ".....#..", ".....#..", ".....#..", ".....#..", ".....#..", "........"],
        '\u{05D4}' => &["........", ".######.", "......#.", "......#.", ".#....#.", ".#....#.", ".#....#.", ".#....#.", "........"],
        '\u{05D5}' => &["........", "...##...", "....#...", "....#...", "....#...", "....#...", "....#...", "....#...", "........"],
        '\u{05D6}' => &["........", "..####..", "....#...", "....#...", "....#...", "....#...", "....#...", "....#...", "........"],
        '\u{05D7}' => &["........", ".######.", ".#....#.", ".#....#.", ".#....#.", ".#....#.", ".#....#.", ".#....#.", "........"],
        '\u{05D8}' => &["........", ".#..##..", ".#.#..#.", ".#....#.", ".#....#.", ".#....#.", ".#....#.", ".######.", "........"],
        '\u{05D9}' => &["........", "...##...", "....#...", "...#....", "........", "........", "........", "........", "........"],
        '\u{05DA}' => &["........", ".######.", "......#.", "......#.", "......#.", "......#.", "......#.", "......#.", "......#."],
        '\u{05DB}' => &["........", ".#####..", "......#.", "......#.", "......#.", "......#.", "......#.", ".#####..", "........"],
        '\u{05DC}' => &[".#......", ".#......", ".######.", "......#.", "......#.", ".....#..", "....#...", "...#....", "........"],
        '\u{05DD}' => &["........", ".######.", ".#....#.", ".#....#.", ".#....#.", ".#....#.", ".#....#.", ".######.", "........"],
        '\u{05DE}' => &["........", ".#.###..", "..#...#.", ".#....#.", ".#....#.", ".#....#.", ".#....#.", ".#..###.", "........"],
        '\u{05DF}' => &["........", "...##...", "....#...", "....#...", "....#...", "....#...", "....#...", "....#...", "....#..."],
        '\u{05E0}' => &["........", "..##....", "....#...", "....#...", "....#...", "....#...", "....#...", "..###...", "........"],
        '\u{05E1}' => &["........", ".######.", ".#....#.", ".#....#.", ".#....#.", ".#....#.", "..#..#..", "...##...", "........"],
        '\u{05E2}' => &["........", ".#....#.", ".#....#.", "..#...#.", "...#..#.", "....#.#.", ".....##.", ".######.", "........"],
        '\u{05E3}' => &["........", ".######.", ".#....#.", ".##...#.", "......#.", "......#.", "......#.", "......#.", "......#."],
        '\u{05E4}' => &["........", ".######.", ".#....#.", ".##...#.", "......#.", "......#.", "......#.", ".######.", "........"],
        '\u{05E5}' => &["........", ".#....#.", "..#...#.", "...#..#.", "....###.", "....#...", "....#...", "....#...", "....#..."],
        '\u{05E6}' => &["........", ".#....#.", "..#...#.", "...#..#.", "....##..", ".....#..", "......#.", ".######.", "........"],
        '\u{05E7}' => &["........", ".######.", "......#.", "......#.", ".#....#.", ".#...#..", ".#......", ".#......", ".#......"],
        '\u{05E8}' => &["........", ".#####..", "......#.", "......#.", "......#.", "......#.", "......#.", "......#.", "........"],
        '\u{05E9}' => &["........", ".#..#..#", ".#..#..#", ".#..#..#", ".#..#..#", ".#.#..#.", ".##..#..", ".####...", "........"],
        '\u{05EA}' => &["........", "..######", "...#...#", "...#...#", "...#...#", "...#...#", "...#...#", ".###...#", "........"],
        '0' => &["........", "..####..", ".#....#.", ".#...##.", ".#..#.#.", ".#.#..#.", ".##...#.", "..####..", "........"],
        '1' => &["........", "...##...", "..#.#...", "....#...", "....#...", "....#...", "....#...", "..#####.", "........"],
        '2' => &["........", "..####..", ".#....#.", "......#.", "....##..", "..##....", ".#......", ".######.", "........"],
        '3' => &["........", "..####..", ".#....#.", "......#.", "...###..", "......#.", ".#....#.", "..####..", "........"],
        '4' => &["........", "....##..", "...#.#..", "..#..#..", ".#...#..", ".######.", ".....#..", ".....#..", "........"],
        '5' => &["........", ".######.", ".#......", ".#####..", "......#.", "......#.", ".#....#.", "..####..", "........"],
        '6' => &["........", "..####..", ".#......", ".#......", ".#####..", ".#....#.", ".#....#.", "..####..", "........"],
        '7' => &["........", ".######.", "......#.", ".....#..", "....#...", "...#....", "...#....", "...#....", "........"],
        '8' => &["........", "..####..", ".#....#.", ".#....#.", "..####..", ".#....#.", ".#....#.", "..####..", "........"],
        '9' => &["........", "..####..", ".#....#.", ".#....#.", "..#####.", "......#.", "......#.", "..####..", "........"],
        '.' => &["........", "........", "........", "........", "........", "........", "...##...", "...##...", "........"],
        ',' => &["........", "........", "........", "........", "........", "........", "...##...", "....#...", "...#...."],
        '-' => &["........", "........", "........", "........", ".######.", "........", "........", "........", "........"],
        '\u{05BE}' => &["........", ".######.", "........", "........", "........", "........", "........", "........", "........"],
        ':' => &["........", "........", "...##...", "...##...", "........", "........", "...##...", "...##...", "........"],
        ';' => &["........", "........", "...##...", "...##...", "........", "........", "...##...", "....#...", "...#...."],
        '?' => &["........", "..####..", ".#....#.", ".....#..", "....#...", "....#...", "........", "....#...", "........"],
        '!' => &["........", "...##...", "...##...", "...##...", "...##...", "........", "........", "...##...", "........"],
        '(' => &["........", "....#...", "...#....", "..#.....", "..#.....", "..#.....", "...#....", "....#...", "........"],
        ')' => &["........", "...#....", "....#...", ".....#..", ".....#..", ".....#..", "....#...", "...#....", "........"],
        '"' | '\u{05F4}' => &["........", "..#.#...", "..#.#...", "........", "........", "........", "........", "........", "........"],
        '\'' | '\u{05F3}' => &["........", "...#....", "...#....", "........", "........", "........", "........", "........", "........"],
        _ => return None,
    })
}
