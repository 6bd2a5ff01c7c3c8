use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::CliResult;

pub fn open(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn csv_writer(path: Option<&Path>) -> CliResult<csv::Writer<Box<dyn Write>>> {
    Ok(csv::WriterBuilder::new().from_writer(open(path)?))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    format!("{x}")
}
