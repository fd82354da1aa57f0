//! CSV emission. Floats are written `%.12g`-style: 12 significant digits,
//! trailing zeros trimmed, scientific notation outside `[1e-4, 1e12)`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

const SIG_DIGITS: i32 = 12;

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Formats `x` with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (SIG_DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG_DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (SIG_DIGITS - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

/// A CSV destination: a file, or stdout when no path is given.
pub struct CsvSink {
    writer: csv::Writer<Box<dyn Write>>,
    label: PathBuf,
}

impl CsvSink {
    pub fn open(path: Option<&Path>, header: &[&str]) -> Result<Self, CliError> {
        let (inner, label): (Box<dyn Write>, PathBuf) = match path {
            Some(p) => {
                let file = File::create(p).map_err(|e| CliError::io(p, e))?;
                (Box::new(BufWriter::new(file)), p.to_path_buf())
            }
            None => (Box::new(io::stdout().lock()), PathBuf::from("<stdout>")),
        };
        let mut sink = Self { writer: csv::Writer::from_writer(inner), label };
        sink.row(header.iter().copied())?;
        Ok(sink)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::io(&self.label, io::Error::other(e)))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|e| CliError::io(&self.label, e))
    }
}
