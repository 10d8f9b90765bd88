//! End-to-end CLI tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sdct() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdct"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sdct-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_test_pgm(dir: &Path) -> PathBuf {
    let (name, img) = &sdct::corpus::builtin_corpus()[1];
    let path = dir.join(format!("{name}.pgm"));
    std::fs::write(&path, sdct::image::write_pgm(img)).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn encode_decode_round_trip() {
    let dir = tmpdir("roundtrip");
    let input = write_test_pgm(&dir);
    let stream = dir.join("out.sdc");
    let recon = dir.join("recon.pgm");

    let out = run(sdct()
        .args([
            "encode",
            "--algorithm",
            "sdct-bt",
            "--n",
            "16",
            "--step",
            "12",
        ])
        .arg(&input)
        .arg(&stream));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("bpp"), "missing stats: {stdout}");
    assert!(stdout.contains("psnr"), "missing psnr: {stdout}");
    assert!(
        stdout.contains("mean subbands"),
        "missing subband stat: {stdout}"
    );

    let out = run(sdct().arg("decode").arg(&stream).arg(&recon));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let decoded = sdct::image::read_pgm(&std::fs::read(&recon).unwrap()).unwrap();
    assert_eq!((decoded.width, decoded.height), (128, 128));

    // analyze prints a complete bit accounting
    let out = run(sdct().arg("analyze").arg(&stream));
    assert!(out.status.success());
    let o = String::from_utf8_lossy(&out.stdout);
    assert!(o.contains("algorithm: sdct-bt"));
    assert!(o.contains("total:"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn integer_flavor_round_trip() {
    let dir = tmpdir("integer");
    let input = write_test_pgm(&dir);
    let stream = dir.join("out.sdc");
    let recon = dir.join("recon.pgm");
    let out = run(sdct()
        .args(["encode", "--algorithm", "sdct1", "--n", "8", "--step", "16", "--integer"])
        .arg(&input)
        .arg(&stream));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("integer"));
    let out = run(sdct().arg("decode").arg(&stream).arg(&recon));
    assert!(out.status.success());
    let out = run(sdct().arg("analyze").arg(&stream));
    assert!(String::from_utf8_lossy(&out.stdout).contains("flavor: integer"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn res16_round_trip() {
    let dir = tmpdir("res16");
    let samples: Vec<f64> = (0..64 * 48).map(|i| ((i % 97) as f64) - 48.0).collect();
    let residual = sdct::image::GrayImage::new(64, 48, samples).unwrap();
    let input = dir.join("plane.res16");
    std::fs::write(&input, sdct::image::write_res16(&residual)).unwrap();
    let stream = dir.join("plane.sdc");
    let recon = dir.join("recon.res16");

    let out = run(sdct()
        .args(["encode", "--algorithm", "dct", "--n", "8", "--step", "4"])
        .arg(&input)
        .arg(&stream));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run(sdct().arg("decode").arg(&stream).arg(&recon));
    assert!(out.status.success());
    let decoded = sdct::image::read_res16(&std::fs::read(&recon).unwrap()).unwrap();
    assert_eq!((decoded.width, decoded.height), (64, 48));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes() {
    let dir = tmpdir("exitcodes");
    let input = write_test_pgm(&dir);
    let stream = dir.join("out.sdc");

    // usage: invalid block size
    let out = run(sdct()
        .args(["encode", "--n", "12"])
        .arg(&input)
        .arg(&stream));
    assert_eq!(
        out.status.code(),
        Some(1),
        "invalid --n must be usage error"
    );

    // usage: unknown algorithm
    let out = run(sdct()
        .args(["encode", "--algorithm", "zigzag"])
        .arg(&input)
        .arg(&stream));
    assert_eq!(out.status.code(), Some(1));

    // I/O: missing input
    let out = run(sdct()
        .arg("encode")
        .arg(dir.join("missing.pgm"))
        .arg(&stream));
    assert_eq!(out.status.code(), Some(2));

    // format: not a bitstream
    let garbage = dir.join("garbage.sdc");
    std::fs::write(&garbage, b"not a stream at all").unwrap();
    let out = run(sdct().arg("decode").arg(&garbage).arg(dir.join("x.pgm")));
    assert_eq!(out.status.code(), Some(3));

    // format: truncated bitstream
    let out = run(sdct()
        .args(["encode", "--algorithm", "dct", "--step", "20"])
        .arg(&input)
        .arg(&stream));
    assert!(out.status.success());
    let bytes = std::fs::read(&stream).unwrap();
    let cut = dir.join("cut.sdc");
    std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
    let out = run(sdct().arg("decode").arg(&cut).arg(dir.join("y.pgm")));
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn selftest_passes_and_detects_faults() {
    let out = run(sdct().args(["selftest", "--threads", "2"]));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("all suites passed"));

    // fault injection: a structurally valid but wrong table must trip the
    // round-trip suite
    let dir = tmpdir("selftest");
    let mut table = String::from("n 8\n");
    for k in 0..8 {
        let row: Vec<String> = (0..8)
            .map(|j| {
                if k == 1 && j == 0 {
                    "999".into()
                } else {
                    format!("{}", 64 - (k as i64 * j as i64) % 40)
                }
            })
            .collect();
        table.push_str(&row.join(" "));
        table.push('\n');
    }
    let path = dir.join("bad_table.txt");
    std::fs::write(&path, table).unwrap();
    let out = run(sdct().arg("selftest").arg("--int-table").arg(&path));
    assert_eq!(
        out.status.code(),
        Some(4),
        "corrupted table must fail the suites"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_emits_csv_and_bd_summary() {
    let dir = tmpdir("sweep");
    let csv = dir.join("points.csv");
    let bd = dir.join("bd.csv");
    let plot = dir.join("curves.dat");
    // tiny corpus: one image, two algorithms, 4 steps at n=8
    let img_dir = dir.join("corpus");
    std::fs::create_dir_all(&img_dir).unwrap();
    let (name, img) = &sdct::corpus::builtin_corpus()[2];
    std::fs::write(
        img_dir.join(format!("{name}.pgm")),
        sdct::image::write_pgm(img),
    )
    .unwrap();

    let out = run(sdct()
        .args([
            "sweep",
            "--algorithms",
            "dct,sdct1",
            "--n",
            "8",
            "--steps",
            "12,24,48,96",
        ])
        .arg("--corpus")
        .arg(&img_dir)
        .arg("--csv")
        .arg(&csv)
        .arg("--bd-csv")
        .arg(&bd)
        .arg("--plot")
        .arg(&plot));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    // header + 4 dct points + 4 sdct1 points + 4 baseline rows
    assert!(csv_text.lines().count() >= 9, "{csv_text}");
    assert!(csv_text.contains("sdct1"));
    let bd_text = std::fs::read_to_string(&bd).unwrap();
    assert_eq!(bd_text.lines().count(), 2, "{bd_text}"); // header + one row
    assert!(bd_text.contains("oriented-texture"));
    let plot_text = std::fs::read_to_string(&plot).unwrap();
    assert!(plot_text.contains("# bpp psnr_db ssim"));

    // empty corpus directory is an error
    let empty = dir.join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = run(sdct().arg("sweep").arg("--corpus").arg(&empty));
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}
