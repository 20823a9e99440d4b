#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_saliency-tubes"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn saliency-tubes")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Emits the reference fixture into `dir` through `selftest --fixture`.
pub fn fixture(dir: &Path) -> PathBuf {
    let fx = dir.join("fixture");
    let out = run(&["selftest", "--fixture", s(&fx)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    fx.join("manifest.json")
}
