use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::anyhow;

/// A failed command: bad input (exit 2) or a runtime/numeric problem (exit 1).
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Runtime(e) => e,
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

pub fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

pub fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Library errors caused by the data or flags are input errors.
pub fn library(e: advloss::Error) -> Failure {
    match e {
        advloss::Error::NonPositiveDensity { .. } => runtime(e),
        _ => input(e),
    }
}

pub fn read_input(flag: &str, path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| input(anyhow!("--{flag} `{}`: {e}", path.display())))
}

/// Creates an output file before any work starts.
pub fn create_output(flag: &str, path: &Path) -> Outcome<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime(anyhow!("--{flag} `{}`: {e}", path.display())))
}

pub fn write_failed(path: &Path, e: std::io::Error) -> Failure {
    runtime(anyhow!("writing `{}`: {e}", path.display()))
}
