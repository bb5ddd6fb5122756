//! End-to-end tests of the `chaoscope` binary.

use std::path::Path;
use std::process::{Command, Output};

use chaoscope::cli::io;
use chaoscope::compression::synthetic;
use chaoscope::dynamics::{integrate, IntegratorConfig, StateVector};
use chaoscope::systems::{LorenzParams, System};

fn run(dir: &Path, args: &[&str], key: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chaoscope"));
    cmd.args(args).current_dir(dir).env_remove("CHAOSCOPE_KEY");
    if let Some(k) = key {
        cmd.env("CHAOSCOPE_KEY", k);
    }
    cmd.output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_fixture(dir: &Path) {
    let pgm = io::gray_pgm(&synthetic::blurred_checkerboard(32, 8));
    std::fs::write(dir.join("in.pgm"), pgm).unwrap();
}

#[test]
fn simulate_lorenz_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["simulate", "--system", "lorenz", "--span", "0:10", "--out", "l.csv"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let text = std::fs::read_to_string(dir.path().join("l.csv")).unwrap();
    let (header, rows) = io::parse_csv(&text).unwrap();
    assert_eq!(header, ["t", "x0", "x1", "x2"]);

    let field = System::Lorenz(LorenzParams::CLASSIC).field().unwrap();
    let start = StateVector::from_slice(&[15.0, 20.0, 30.0]).unwrap();
    let traj = integrate(field, &start, 0.0, 10.0, &IntegratorConfig::with_tolerances(1e-6, 1e-6)).unwrap();
    assert_eq!(rows.len(), traj.steps() + 1);
    for (row, (t, s)) in rows.iter().zip(traj.times().iter().zip(traj.states())) {
        assert_eq!(row[0], *t);
        assert_eq!(&row[1..], s.as_slice());
    }
}

#[test]
fn negative_span_and_parameter_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--system", "linear1d", "--param", "a=-0.5", "--span", "-1:2", "--out", "s.csv"],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (_, rows) = io::parse_csv(&std::fs::read_to_string(dir.path().join("s.csv")).unwrap()).unwrap();
    assert_eq!(rows[0][0], -1.0);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 2.0);
    assert!((last[1] - (-1.5f64).exp()).abs() < 1e-4);
}

#[test]
fn mandelbrot_default_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["mandelbrot", "--out", "m.pgm"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let bytes = std::fs::read(dir.path().join("m.pgm")).unwrap();
    let header = b"P5\n721 601\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    assert_eq!(bytes.len(), header.len() + 721 * 601);
}

#[test]
fn unknown_system_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["simulate", "--system", "nosuch", "--out", "x.csv"], None);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert_eq!(msg.trim_end().lines().count(), 1, "{msg}");
    assert!(msg.contains("nosuch"));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn invalid_arguments_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["simulate", "--system", "lorenz", "--rel-tol", "-1", "--out", "x"],
        &["simulate", "--system", "lorenz", "--span", "5:1", "--out", "x"],
        &["iterate", "--system", "lorenz", "--out", "x"],
        &["mandelbrot", "--nmax", "0", "--out", "x"],
        &["bifurcate", "--mu-range", "3:5", "--out", "x"],
    ];
    for args in cases {
        let out = run(dir.path(), args, None);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert_eq!(stderr(&out).trim_end().lines().count(), 1, "{args:?}");
        assert!(!dir.path().join("x").exists(), "{args:?}");
    }
}

#[test]
fn runtime_failure_names_operation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--system", "linear1d", "--param", "a=50", "--span", "0:100", "--out", "x.csv"],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("simulate failed"), "{}", stderr(&out));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn missing_subcommand_and_version() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &[], None).status.code(), Some(2));
    let version = run(dir.path(), &["--version"], None);
    assert_eq!(version.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&version.stdout).starts_with("chaoscope "));
}

#[test]
fn encrypt_decrypt_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let msg = b"a short message to encrypt";
    std::fs::write(dir.path().join("m.txt"), msg).unwrap();

    let out = run(dir.path(), &["encrypt", "--mu", "3.9", "--x0", "0.2", "--input", "m.txt", "--out", "m.chx"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let sealed = std::fs::read(dir.path().join("m.chx")).unwrap();
    assert_eq!(&sealed[..4], b"CHX1");

    let out = run(dir.path(), &["decrypt", "--input", "m.chx", "--out", "back.txt"], Some("3.9,0.2"));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(std::fs::read(dir.path().join("back.txt")).unwrap(), msg);

    let out =
        run(dir.path(), &["decrypt", "--mu", "3.9", "--x0", "0.21", "--input", "m.chx", "--out", "bad.txt"], None);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(std::fs::read(dir.path().join("bad.txt")).unwrap(), msg);
}

#[test]
fn key_must_be_complete() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.txt"), b"x").unwrap();
    let none = run(dir.path(), &["encrypt", "--input", "m.txt", "--out", "m.chx"], None);
    assert_eq!(none.status.code(), Some(2));
    let half = run(dir.path(), &["encrypt", "--mu", "3.9", "--input", "m.txt", "--out", "m.chx"], None);
    assert_eq!(half.status.code(), Some(2));
    let bad = run(dir.path(), &["encrypt", "--input", "m.txt", "--out", "m.chx"], Some("3.2,0.2"));
    assert_eq!(bad.status.code(), Some(2));
    assert!(!dir.path().join("m.chx").exists());
}

#[test]
fn compress_decompress_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = run(
        dir.path(),
        &["compress", "--input", "in.pgm", "--out", "c.fic", "--range-size", "4", "--domain-step", "4"],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run(dir.path(), &["decompress", "--input", "c.fic", "--out", "d.pgm"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let original = io::read_pgm(&dir.path().join("in.pgm")).unwrap();
    let decoded = io::read_pgm(&dir.path().join("d.pgm")).unwrap();
    assert!(chaoscope::compression::psnr(&original, &decoded).unwrap() >= 25.0);

    let bad = run(dir.path(), &["compress", "--input", "in.pgm", "--out", "e.fic", "--range-size", "5"], None);
    assert_eq!(bad.status.code(), Some(2));
    assert!(!dir.path().join("e.fic").exists());
}

#[test]
fn ifs_then_boxdim() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["ifs", "--size", "256", "--depth", "7", "--out", "s.pgm"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run(dir.path(), &["boxdim", "--input", "s.pgm", "--max-exp", "7"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let dim: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((dim - 1.585).abs() < 0.08, "{dim}");

    let out = run(dir.path(), &["simdim", "--copies", "3", "--ratio", "0.5"], None);
    let sim: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((sim - 3f64.ln() / 2f64.ln()).abs() < 1e-12);
}

#[test]
fn equilibria_listing_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["equilibria", "--system", "lorenz"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (_, rows) = io::parse_csv(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(rows.len(), 3);
    let c = (8.0f64 / 3.0 * 27.0).sqrt();
    assert!(rows.iter().any(|r| (r[0] - c).abs() < 1e-12 && (r[2] - 27.0).abs() < 1e-12));

    let check = |point: &str| {
        let out = run(dir.path(), &["equilibria", "--system", "lorenz", "--check", point], None);
        String::from_utf8_lossy(&out.stdout).trim().to_string()
    };
    assert_eq!(check("0,0,0"), "true");
    assert_eq!(check("1,1,1"), "false");
}

#[test]
fn cobweb_and_iterate_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        run(dir.path(), &["iterate", "--system", "henon", "--n", "50", "--discard", "10", "--out", "h.csv"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = io::parse_csv(&std::fs::read_to_string(dir.path().join("h.csv")).unwrap()).unwrap();
    assert_eq!(header, ["n", "x0", "x1"]);
    assert!(!rows.is_empty() && rows[0][0] >= 10.0);

    let out = run(dir.path(), &["cobweb", "--n", "20", "--out", "c.csv", "--curve", "f.csv"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("f.csv").exists());
}
