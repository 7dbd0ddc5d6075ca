//! Golden CLI invocations shared by the CLI tests and the acceptance run.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// File stem under `tests/golden` and the arguments after `zii`.
pub const GOLDEN: &[(&str, &[&str])] = &[
    ("mask-d1", &["mask", "--degree", "1"]),
    ("mask-d2-report", &["mask", "--degree", "2", "--format", "report"]),
    ("mask-d2-svg", &["mask", "--degree", "2", "--format", "svg"]),
    (
        "matrix-product-exponential-d2",
        &["matrix", "--spec", "specs/product-exponential.toml", "--degree", "2"],
    ),
    (
        "inverse-product-exponential-d1",
        &["inverse", "--spec", "specs/product-exponential.toml", "--degree", "1"],
    ),
    (
        "inverse-product-exponential-d2",
        &["inverse", "--spec", "specs/product-exponential.toml", "--degree", "2"],
    ),
    (
        "inverse-bilinear-box-d1",
        &["inverse", "--spec", "specs/bilinear-box.toml", "--degree", "1"],
    ),
    (
        "equations-sum-power-exp-d1",
        &["equations", "--spec", "specs/sum-power-exp.toml", "--degree", "1"],
    ),
    (
        "equations-bilinear-box-d1",
        &["equations", "--spec", "specs/bilinear-box.toml", "--degree", "1"],
    ),
    (
        "equations-bilinear-box-d1-json",
        &[
            "equations",
            "--spec",
            "specs/bilinear-box.toml",
            "--degree",
            "1",
            "--format",
            "json",
        ],
    ),
    (
        "equations-disk-quadratic-d1",
        &["equations", "--spec", "specs/disk-quadratic.toml", "--degree", "1"],
    ),
    (
        "equations-disk-quadratic-d2",
        &["equations", "--spec", "specs/disk-quadratic.toml", "--degree", "2"],
    ),
    (
        "equations-gamma-shapes-d1",
        &["equations", "--spec", "specs/gamma-shapes.toml", "--degree", "1"],
    ),
    (
        "collapse-sum-power-exp",
        &["collapse", "--spec", "specs/sum-power-exp.toml", "--max-degree", "3"],
    ),
    (
        "collapse-bilinear-box",
        &["collapse", "--spec", "specs/bilinear-box.toml", "--max-degree", "2"],
    ),
    (
        "collapse-disk-quadratic",
        &["collapse", "--spec", "specs/disk-quadratic.toml", "--max-degree", "3"],
    ),
    (
        "check-sum-power-exp-ell0",
        &[
            "check",
            "--spec",
            "specs/sum-power-exp.toml",
            "--at",
            "ell=0",
            "--degree",
            "2",
        ],
    ),
    (
        "check-bilinear-box-rank1",
        &[
            "check",
            "--spec",
            "specs/bilinear-box.toml",
            "--at",
            "a00=1,a10=2,a01=3,a11=6",
            "--degree",
            "3",
        ],
    ),
    (
        "check-kibble-gamma",
        &[
            "check",
            "--spec",
            "specs/kibble-gamma.toml",
            "--at",
            "s1=1,s2=1,rho=1/2",
            "--degree",
            "2",
        ],
    ),
    (
        "render-disk-quadratic",
        &["render", "--spec", "specs/disk-quadratic.toml"],
    ),
];

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.out"))
}

/// Runs the binary from the workspace root.
pub fn zii(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zii"));
    cmd.args(args).current_dir(workspace_root());
    match threads {
        Some(t) => cmd.env("ZII_THREADS", t),
        None => cmd.env_remove("ZII_THREADS"),
    };
    cmd.output().expect("binary runs")
}
