//! CSV emission and parsing of sweep results.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::Result;

use super::sweep::ResultRecord;

pub const CSV_HEADER: &str = "mitigator,sweep_var,sweep_value_db,ber,errors,bits,ci_lo,ci_hi,alpha";

/// Writes records with a header row (also for an empty slice). Floats use
/// the shortest representation that parses back to the same value.
pub fn write_records<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn emit_results(records: &[ResultRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_records(records, std::io::BufWriter::new(file))
}

pub fn load_results(path: &Path) -> Result<Vec<ResultRecord>> {
    read_records(std::fs::File::open(path)?)
}

/// Writes an analytic `(sweep_value_db, ber)` curve with a header row.
pub fn emit_curve(curve: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sweep_value_db", "ber"])?;
    for (x, ber) in curve {
        w.write_record([x.to_string(), ber.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
