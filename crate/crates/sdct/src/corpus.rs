//! Built-in synthetic grayscale evaluation corpus.
//!
//! Four deterministic 128x128 images covering the content classes the
//! comparison methodology needs: smooth natural-like structure, geometric
//! edges, strongly oriented texture, and a mixture. A light noise floor
//! keeps every block generic (no exactly-zero transform pairs).

use crate::image::GrayImage;

pub const CORPUS_SIZE: usize = 128;

struct Noise(u64);

impl Noise {
    fn next(&mut self) -> f64 {
        // xorshift64*
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        let v = self.0.wrapping_mul(0x2545F4914F6CDD1D);
        (v >> 11) as f64 / (1u64 << 53) as f64
    }

    fn signed(&mut self, amp: f64) -> f64 {
        (self.next() * 2.0 - 1.0) * amp
    }
}

fn render(seed: u64, f: impl Fn(f64, f64) -> f64) -> GrayImage {
    let n = CORPUS_SIZE;
    let mut noise = Noise(seed | 1);
    let samples = (0..n * n)
        .map(|i| {
            let (r, c) = ((i / n) as f64, (i % n) as f64);
            (f(r, c) + noise.signed(2.0)).clamp(0.0, 255.0)
        })
        .collect();
    GrayImage::new(n, n, samples).unwrap()
}

/// Smooth blobs and slow gradients, the "natural smooth" class.
pub fn smooth_blobs() -> GrayImage {
    let blobs = [
        (34.0, 40.0, 24.0, 95.0),
        (90.0, 70.0, 30.0, -70.0),
        (60.0, 104.0, 18.0, 60.0),
        (110.0, 20.0, 22.0, -45.0),
        (18.0, 100.0, 14.0, 50.0),
    ];
    render(11, move |r, c| {
        let mut v = 120.0 + 0.25 * r + 0.1 * c;
        for (br, bc, sigma, amp) in blobs {
            let d2 = (r - br) * (r - br) + (c - bc) * (c - bc);
            v += amp * (-d2 / (2.0 * sigma * sigma)).exp();
        }
        v
    })
}

/// Geometric scene with edges at several orientations.
pub fn house_scene() -> GrayImage {
    render(23, |r, c| {
        // sky gradient
        let mut v = 200.0 - 0.45 * r;
        // roof: two diagonal edges meeting at the ridge
        let ridge = (c - 64.0).abs() * 0.9 + 30.0;
        if r > ridge && r < 62.0 {
            v = 95.0 + 0.2 * c;
        }
        // facade
        if (30.0..98.0).contains(&c) && r >= 62.0 {
            v = 150.0 - 0.15 * r;
            // windows
            let wc = ((c - 30.0) / 23.0) as i32 % 2;
            let wr = ((r - 62.0) / 22.0) as i32 % 2;
            if wc == 1 && wr == 1 {
                v = 55.0;
            }
        }
        // ground with a soft diagonal path
        if r >= 104.0 {
            v = 110.0 + 0.3 * c - 0.5 * (r - 104.0);
            if (c - (r - 104.0) * 2.2 - 20.0).abs() < 6.0 {
                v += 35.0;
            }
        }
        v
    })
}

/// Strongly oriented pattern whose direction drifts across the frame; the
/// wavelength is long enough that small blocks see little more than a
/// gradient while large blocks capture whole oblique stripes.
pub fn oriented_texture() -> GrayImage {
    render(37, |r, c| {
        // dominant ~30 degree orientation, slowly rotating
        let swirl = 0.003 * (r - 64.0);
        let (s, co) = (0.55 + swirl).sin_cos();
        let u = co * c + s * r;
        let base = 128.0 + 75.0 * (u * 0.21).sin();
        // weaker oblique component at a coarser scale
        let w = ((0.3 * c - 0.9 * r) * 0.11).sin();
        base + 22.0 * w
    })
}

/// Mixed content: smooth background, long oriented strokes, a coarse
/// textured patch.
pub fn mixed_scene() -> GrayImage {
    render(53, |r, c| {
        let mut v = 150.0 - 0.3 * r + 20.0 * ((c / 40.0).sin());
        // oriented strokes at -60 degrees, widely spaced
        let t = 0.866 * c - 0.5 * r;
        if (t / 26.0).fract().abs() < 0.14 && r < 70.0 {
            v = 60.0 + 0.4 * c;
        }
        // textured patch bottom right
        if r > 80.0 && c > 60.0 {
            v = 120.0
                + 45.0 * ((0.8 * r + 0.45 * c) * 0.23).sin() * ((0.3 * c - 0.5 * r) * 0.17).cos();
        }
        v
    })
}

/// The full corpus with stable names.
pub fn builtin_corpus() -> Vec<(&'static str, GrayImage)> {
    vec![
        ("smooth-blobs", smooth_blobs()),
        ("house-scene", house_scene()),
        ("oriented-texture", oriented_texture()),
        ("mixed-scene", mixed_scene()),
    ]
}

/// Extracts `count` n x n blocks from the corpus images, scanning in raster
/// order across images.
pub fn natural_blocks(n: usize, count: usize) -> Vec<Vec<f64>> {
    let corpus = builtin_corpus();
    let mut blocks = Vec::with_capacity(count);
    'outer: for (_, img) in &corpus {
        let bx = img.width / n;
        let by = img.height / n;
        for b in 0..bx * by {
            let (row, col) = (b / bx * n, b % bx * n);
            let mut s = Vec::with_capacity(n * n);
            for r in 0..n {
                let off = (row + r) * img.width + col;
                s.extend_from_slice(&img.samples[off..off + n]);
            }
            blocks.push(s);
            if blocks.len() == count {
                break 'outer;
            }
        }
    }
    blocks
}
