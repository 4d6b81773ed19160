#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// The `divlab` binary, run from the crate directory so that relative data
/// paths in the golden configs resolve.
pub fn divlab(threads: Option<usize>) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_divlab"));
    c.current_dir(manifest_dir());
    match threads {
        Some(t) => c.env("DIVLAB_THREADS", t.to_string()),
        None => c.env_remove("DIVLAB_THREADS"),
    };
    c
}

pub fn golden_configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(manifest_dir().join("tests/golden/configs"))
        .expect("golden configs directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

pub fn run_config(config: &Path, threads: usize, out: &Path) -> Output {
    divlab(Some(threads))
        .arg(subcommand_of(config))
        .arg("--config")
        .arg(config)
        .arg("--output")
        .arg(out)
        .output()
        .expect("run divlab")
}

fn subcommand_of(config: &Path) -> String {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(config).unwrap()).unwrap();
    v["command"].as_str().expect("golden config names its command").to_string()
}

pub fn files_in(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        m.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
    }
    m
}

/// Run every golden config twice on one worker and once on four, and compare
/// all outputs byte for byte with each other and with the stored goldens.
/// With `DIVLAB_BLESS=1` the stored goldens are rewritten instead.
/// Returns the number of files verified.
pub fn verify_goldens() -> Result<usize, String> {
    let bless = std::env::var("DIVLAB_BLESS").is_ok_and(|v| v == "1");
    let expected_root = manifest_dir().join("tests/golden/expected");
    let mut checked = 0;
    for config in golden_configs() {
        let stem = config.file_stem().unwrap().to_string_lossy().into_owned();
        let mut runs = Vec::new();
        for threads in [1, 1, 4] {
            let dir = tempfile::tempdir().unwrap();
            let out = run_config(&config, threads, dir.path());
            if !out.status.success() {
                return Err(format!(
                    "{stem}: exit {:?} on {threads} thread(s): {}",
                    out.status.code(),
                    String::from_utf8_lossy(&out.stderr)
                ));
            }
            runs.push(files_in(dir.path()));
        }
        if runs[0] != runs[1] {
            return Err(format!("{stem}: two runs on one thread differ"));
        }
        if runs[0] != runs[2] {
            return Err(format!("{stem}: one and four threads differ"));
        }
        let expected_dir = expected_root.join(&stem);
        if bless {
            let _ = std::fs::remove_dir_all(&expected_dir);
            std::fs::create_dir_all(&expected_dir).unwrap();
            for (name, bytes) in &runs[0] {
                std::fs::write(expected_dir.join(name), bytes).unwrap();
            }
        }
        if !expected_dir.is_dir() {
            return Err(format!("{stem}: no stored golden (run with DIVLAB_BLESS=1 to create it)"));
        }
        let expected = files_in(&expected_dir);
        if expected.keys().ne(runs[0].keys()) {
            return Err(format!("{stem}: file set differs from the golden"));
        }
        for (name, bytes) in &runs[0] {
            if &expected[name] != bytes {
                return Err(format!("{stem}/{name}: differs from the golden"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
