//! Desk-scale invariant suites behind `sdct selftest`.
//!
//! Each suite re-derives its expected values independently of the code path
//! it checks; any failure exits with the invariant-failure code.

use sdct::bt::{deserialize_tree, serialize_tree, SubbandTree};
use sdct::codec::{
    decode_image, encode_image, Algorithm, ArithFlavor, EncoderConfig, SampleFormat,
};
use sdct::dct::grid_laplacian;
use sdct::error::SdctError;
use sdct::intdct::{forward_integer, inverse_integer, IntDctTable};
use sdct::pairs::grid_eigenvalues;
use sdct::rd::{AngleRateMode, RdParams};
use sdct::transform::{build_sdct, AngleVector, SdctContext};
use std::f64::consts::PI;
use std::path::Path;

struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545F4914F6CDD1D)
    }

    fn angle(&mut self, q: usize) -> f64 {
        (self.next() % q as u64) as f64 * PI / q as f64
    }

    fn sample(&mut self) -> f64 {
        (self.next() % 256) as f64
    }
}

type Suite = fn(&SelftestEnv) -> Result<(), String>;

pub struct SelftestEnv {
    tables: Vec<IntDctTable>,
}

fn orthogonality(_env: &SelftestEnv) -> Result<(), String> {
    let mut rng = Rng(101);
    for n in [4usize, 8] {
        let ctx = SdctContext::new(n).map_err(|e| e.to_string())?;
        for trial in 0..25 {
            let angles = AngleVector::new(n, (0..ctx.pair_count()).map(|_| rng.angle(8)).collect())
                .map_err(|e| e.to_string())?;
            let basis = build_sdct(&ctx, &angles).map_err(|e| e.to_string())?;
            let residual = basis.gram_residual();
            if residual > 1e-10 {
                return Err(format!(
                    "n={n} trial {trial}: Gram residual {residual:.2e} > 1e-10"
                ));
            }
        }
    }
    Ok(())
}

fn eigen_consistency(_env: &SelftestEnv) -> Result<(), String> {
    let mut rng = Rng(202);
    for n in [4usize, 8] {
        let ctx = SdctContext::new(n).map_err(|e| e.to_string())?;
        let lap = grid_laplacian(n).map_err(|e| e.to_string())?;
        let evs = grid_eigenvalues(n).map_err(|e| e.to_string())?;
        let size = n * n;
        for _ in 0..5 {
            let angles = AngleVector::new(n, (0..ctx.pair_count()).map(|_| rng.angle(8)).collect())
                .map_err(|e| e.to_string())?;
            let basis = build_sdct(&ctx, &angles).map_err(|e| e.to_string())?;
            for i in 0..size {
                let v = basis.column(i);
                for r in 0..size {
                    let lv: f64 = (0..size).map(|c| lap[r * size + c] * v[c]).sum();
                    if (lv - evs[i] * v[r]).abs() > 1e-8 {
                        return Err(format!(
                            "n={n}: column {i} eigen-residual {:.2e} > 1e-8",
                            (lv - evs[i] * v[r]).abs()
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn transform_round_trip(env: &SelftestEnv) -> Result<(), String> {
    let mut rng = Rng(303);
    for n in [4usize, 8] {
        let ctx = SdctContext::new(n).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let x: Vec<f64> = (0..n * n).map(|_| rng.sample()).collect();
            let angles = AngleVector::new(n, (0..ctx.pair_count()).map(|_| rng.angle(8)).collect())
                .map_err(|e| e.to_string())?;
            let c = ctx.forward(&angles, &x).map_err(|e| e.to_string())?;
            let back = ctx.inverse(&angles, &c).map_err(|e| e.to_string())?;
            for (a, b) in x.iter().zip(&back) {
                if (a - b).abs() > 1e-9 {
                    return Err(format!("n={n}: round-trip error {:.2e}", (a - b).abs()));
                }
            }
        }
    }
    // integer tables: zero-rotation identity and bounded round-trip error
    for table in &env.tables {
        let n = table.n;
        let ctx = SdctContext::new(n).map_err(|e| e.to_string())?;
        let x: Vec<i64> = (0..n * n).map(|_| (rng.next() % 256) as i64).collect();
        let zero = AngleVector::zero(n);
        let plain = sdct::intdct::forward_int_2d(table, &x).map_err(|e| e.to_string())?;
        let rotated = forward_integer(table, &ctx.pairs, &zero, &x).map_err(|e| e.to_string())?;
        if plain != rotated {
            return Err(format!(
                "n={n}: integer path at theta=0 differs from integer DCT"
            ));
        }
        for trial in 0..10 {
            let x: Vec<i64> = (0..n * n).map(|_| (rng.next() % 256) as i64).collect();
            let angles = AngleVector::new(n, (0..ctx.pair_count()).map(|_| rng.angle(8)).collect())
                .map_err(|e| e.to_string())?;
            let c = forward_integer(table, &ctx.pairs, &angles, &x).map_err(|e| e.to_string())?;
            let back =
                inverse_integer(table, &ctx.pairs, &angles, &c).map_err(|e| e.to_string())?;
            let worst = x
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .max()
                .unwrap_or(0);
            if worst > 6 {
                return Err(format!(
                    "n={n} trial {trial}: integer round-trip error {worst} > 6"
                ));
            }
        }
    }
    Ok(())
}

fn am_monotonicity(_env: &SelftestEnv) -> Result<(), String> {
    let mut rng = Rng(404);
    let ctx = SdctContext::new(4).map_err(|e| e.to_string())?;
    for trial in 0..40 {
        let x: Vec<f64> = (0..16).map(|_| rng.sample()).collect();
        let params = RdParams::new(
            1.0 + (trial % 7) as f64,
            6.0,
            8,
            1.0 + (trial % 5) as f64,
            AngleRateMode::AmIndexed,
        )
        .map_err(|e| e.to_string())?;
        let init = AngleVector::constant(4, rng.angle(8));
        let state = sdct::am::run_sdct_am(&ctx, &x, &params, &init).map_err(|e| e.to_string())?;
        if !state.converged {
            return Err(format!("trial {trial}: AM hit the sweep cap"));
        }
        for w in state.j_history.windows(2) {
            if w[1].j > w[0].j {
                return Err(format!(
                    "trial {trial}: J increased {} -> {}",
                    w[0].j, w[1].j
                ));
            }
        }
    }
    Ok(())
}

fn tree_serializer(_env: &SelftestEnv) -> Result<(), String> {
    let mut rng = Rng(505);
    for p in [6usize, 28, 120] {
        for _ in 0..200 {
            // random tree via random split decisions
            let mut ranges = vec![(0usize, p)];
            for _ in 0..sdct::bt::max_split_levels(p) {
                for (start, end) in ranges.clone() {
                    if end - start >= 2 && rng.next() % 2 == 0 {
                        let pos = ranges.iter().position(|r| *r == (start, end)).unwrap();
                        let mid = start + (end - start) / 2;
                        ranges.splice(pos..=pos, [(start, mid), (mid, end)]);
                    }
                }
            }
            let tree = SubbandTree::from_subbands(p, &ranges).map_err(|e| e.to_string())?;
            let bits = serialize_tree(&tree);
            if bits.len() != 2 * tree.leaf_count() - 1 {
                return Err(format!(
                    "p={p}: {} bits for {} leaves",
                    bits.len(),
                    tree.leaf_count()
                ));
            }
            let back = deserialize_tree(&bits, p).map_err(|e| e.to_string())?;
            if back != tree {
                return Err(format!("p={p}: tree round trip mismatch"));
            }
        }
    }
    Ok(())
}

fn codec_round_trip(env: &SelftestEnv) -> Result<(), String> {
    let corpus = sdct::corpus::builtin_corpus();
    let (name, image) = &corpus[0];
    let flavors: Vec<ArithFlavor> = if env.tables.iter().any(|t| t.n == 8) {
        vec![ArithFlavor::Float, ArithFlavor::Integer]
    } else {
        vec![ArithFlavor::Float]
    };
    for flavor in flavors {
        for algorithm in [Algorithm::DctOnly, Algorithm::Sdct1, Algorithm::SdctAm] {
            let cfg = EncoderConfig {
                algorithm,
                block_size: 8,
                coeff_step: 12.0,
                lambda: 0.85 * 144.0 * 0.5,
                q_theta: 8,
                flavor,
                sample_format: SampleFormat::Pgm8,
            };
            let out = encode_image(image, &cfg).map_err(|e| e.to_string())?;
            let decoded = decode_image(&out.bytes).map_err(|e| e.to_string())?;
            for (a, b) in out.reconstruction.samples.iter().zip(&decoded.samples) {
                if a.to_bits() != b.to_bits() {
                    return Err(format!(
                        "{name} {algorithm:?} {flavor:?}: decoder output differs from encoder reconstruction"
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn run(int_table: Option<&Path>) -> Result<u8, SdctError> {
    let tables = match int_table {
        Some(path) => vec![IntDctTable::from_file(path)?],
        None => [8usize, 16, 32]
            .iter()
            .map(|&n| IntDctTable::builtin(n))
            .collect::<Result<_, _>>()?,
    };
    let env = SelftestEnv { tables };
    let suites: [(&str, Suite); 6] = [
        ("orthogonality", orthogonality),
        ("eigen-consistency", eigen_consistency),
        ("transform round-trip", transform_round_trip),
        ("AM monotonicity", am_monotonicity),
        ("tree serializer", tree_serializer),
        ("codec round-trip", codec_round_trip),
    ];
    let mut failures = 0;
    for (name, suite) in suites {
        match suite(&env) {
            Ok(()) => println!("selftest {name}: ok"),
            Err(msg) => {
                println!("selftest {name}: FAILED: {msg}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} suite(s) failed");
        return Ok(super::EXIT_INVARIANT);
    }
    println!("all suites passed");
    Ok(0)
}
