//! Shared helpers for integration tests: synthetic glyph rendering and
//! dataset tree generation.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

pub const CANVAS: usize = 64;
pub const BG: u8 = 235;
pub const INK: u8 = 25;

pub struct Canvas {
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn new() -> Self {
        Canvas {
            pixels: vec![BG; CANVAS * CANVAS],
        }
    }

    pub fn dot(&mut self, r: isize, c: isize) {
        if (0..CANVAS as isize).contains(&r) && (0..CANVAS as isize).contains(&c) {
            self.pixels[r as usize * CANVAS + c as usize] = INK;
        }
    }

    pub fn disk(&mut self, cr: f64, cc: f64, radius: f64) {
        self.ring(cr, cc, 0.0, radius);
    }

    pub fn ring(&mut self, cr: f64, cc: f64, inner: f64, outer: f64) {
        for r in 0..CANVAS {
            for c in 0..CANVAS {
                let d = ((r as f64 - cr).powi(2) + (c as f64 - cc).powi(2)).sqrt();
                if d >= inner && d <= outer {
                    self.dot(r as isize, c as isize);
                }
            }
        }
    }

    pub fn rect(&mut self, r0: isize, c0: isize, h: isize, w: isize) {
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                self.dot(r, c);
            }
        }
    }

    /// Thick line from (r0,c0) to (r1,c1).
    pub fn line(&mut self, r0: f64, c0: f64, r1: f64, c1: f64, thickness: f64) {
        let steps = ((r1 - r0).abs().max((c1 - c0).abs()) * 2.0).ceil() as usize + 1;
        let half = thickness / 2.0;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let r = r0 + t * (r1 - r0);
            let c = c0 + t * (c1 - c0);
            let lo = (-half).floor() as isize;
            let hi = half.ceil() as isize;
            for dr in lo..=hi {
                for dc in lo..=hi {
                    if ((dr * dr + dc * dc) as f64).sqrt() <= half {
                        self.dot(r.round() as isize + dr, c.round() as isize + dc);
                    }
                }
            }
        }
    }
}

/// Renders one jittered instance of glyph class 0-9.
pub fn render_glyph(class: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut canvas = Canvas::new();
    let jr = rng.random_range(-4..=4) as f64;
    let jc = rng.random_range(-4..=4) as f64;
    let (cr, cc) = (32.0 + jr, 32.0 + jc);
    let scale = 1.0 + rng.random_range(-15..=15) as f64 / 100.0;
    let thick = rng.random_range(3..=5) as f64;
    match class {
        0 => canvas.disk(cr, cc, 14.0 * scale),
        1 => canvas.ring(cr, cc, 16.0 * scale - thick, 16.0 * scale),
        2 => {
            let h = 18.0 * scale;
            canvas.line(cr - h, cc, cr + h, cc, thick);
        }
        3 => {
            let w = 18.0 * scale;
            canvas.line(cr, cc - w, cr, cc + w, thick);
        }
        4 => {
            let a = 15.0 * scale;
            canvas.line(cr - a, cc, cr + a, cc, thick);
            canvas.line(cr, cc - a, cr, cc + a, thick);
        }
        5 => {
            let a = 13.0 * scale;
            canvas.line(cr - a, cc - a, cr + a, cc + a, thick);
            canvas.line(cr - a, cc + a, cr + a, cc - a, thick);
        }
        6 => {
            let a = 16.0 * scale;
            canvas.line(cr - a, cc - 8.0, cr + a, cc - 8.0, thick);
            canvas.line(cr + a, cc - 8.0, cr + a, cc + 10.0 * scale, thick);
        }
        7 => {
            let a = 14.0 * scale;
            canvas.line(cr - a, cc - a, cr - a, cc + a, thick);
            canvas.line(cr - a, cc, cr + a, cc, thick);
        }
        8 => {
            let r = 9.0 * scale;
            canvas.ring(cr - r, cc, r - thick, r);
            canvas.ring(cr + r, cc, r - thick, r);
        }
        9 => {
            let h = (10.0 * scale) as isize;
            let w = (16.0 * scale) as isize;
            canvas.rect(cr as isize - h, cc as isize - w, 2 * h, 2 * w);
        }
        _ => panic!("class out of range"),
    }
    canvas.pixels
}

/// Writes a binary PGM (P5) file.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) {
    let mut f = fs::File::create(path).unwrap();
    write!(f, "P5\n{width} {height}\n255\n").unwrap();
    f.write_all(pixels).unwrap();
}

/// Builds a dataset tree root/<class>/<index>.pgm with `per_class` jittered
/// instances of each glyph.
pub fn make_dataset(root: &Path, per_class: usize, rng: &mut ChaCha8Rng) {
    for class in 0..10 {
        let dir = root.join(class.to_string());
        fs::create_dir_all(&dir).unwrap();
        for i in 0..per_class {
            let pixels = render_glyph(class, rng);
            write_pgm(&dir.join(format!("{i:03}.pgm")), CANVAS, CANVAS, &pixels);
        }
    }
}
