//! Inputs shared by the benchmarks.

use std::path::{Path, PathBuf};

use intbox::generate::{program_from_seed, GenConfig};
use intbox::lang::{parse_program, Program};

pub const SEED: u64 = 0x5eed;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// The shipped corpus as `(file name, program)`, sorted by name.
pub fn corpus() -> Vec<(String, Program)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "mini"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let src = std::fs::read_to_string(&p).expect("readable corpus file");
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let prog = parse_program(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, prog)
        })
        .collect()
}

pub fn fuzzed(n: u64) -> Vec<Program> {
    let cfg = GenConfig::default();
    (0..n).map(|i| program_from_seed(SEED, i, &cfg)).collect()
}
