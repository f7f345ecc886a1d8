#![allow(dead_code)]

use confound_bounds::rng::streams;
use confound_bounds::simulation::{generate, DgpConfig};
use confound_bounds::StreamRng;
use confound_bounds_cli::io::number;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_confound-bounds");

/// Writes `n` synthetic rows as `y,a,x1,x2` and returns the file path.
pub fn synthetic_csv(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let dgp = DgpConfig::new(0.05, n, seed).unwrap();
    let (data, _) = generate(&dgp, &mut StreamRng::new(seed, streams::SIMULATION).generator()).unwrap();
    let x = data.covariates();
    let mut text = String::from("y,a,x1,x2\n");
    for i in 0..n {
        text.push_str(&format!(
            "{},{},{},{}\n",
            data.outcome()[i],
            data.treatment()[i],
            number(x[[i, 0]]),
            number(x[[i, 1]])
        ));
    }
    let path = dir.join("data.csv");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

/// `analyze` on `input` into `out` with a small bootstrap.
pub fn analyze(input: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--outcome",
        "y",
        "--treatment",
        "a",
        "--covariates",
        "x1,x2",
        "--bootstrap",
        "200",
        "--seed",
        "11",
        "--out-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

pub fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}
