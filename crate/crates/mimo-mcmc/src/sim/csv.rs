//! CSV emission for BER sweeps.
//!
//! The column order is part of the external interface and never changes:
//! `detector,modulation,rho,snr_db,trials,total_bits,bit_errors,ber,`
//! `acceptance_rate,seconds_per_trial`. Values use plain decimal points,
//! BER is printed with six significant digits, and optional cells are
//! left empty. Rows are sorted by `(detector, snr_db)` so equal-seed runs
//! produce byte-identical files.

use std::fs;
use std::path::Path;

use crate::sim::runner::BerRecord;
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "detector,modulation,rho,snr_db,trials,total_bits,bit_errors,ber,acceptance_rate,seconds_per_trial";

/// Renders records into CSV text, sorting a copy by `(detector, snr_db)`.
pub fn render_csv(records: &[BerRecord]) -> String {
    let mut rows: Vec<&BerRecord> = records.iter().collect();
    rows.sort_by(|a, b| {
        a.detector
            .cmp(&b.detector)
            .then(a.snr_db.partial_cmp(&b.snr_db).expect("finite snr"))
    });
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&render_record(r));
        out.push('\n');
    }
    out
}

fn render_record(r: &BerRecord) -> String {
    let acceptance = match r.acceptance_rate {
        Some(a) => format!("{a:.4}"),
        None => String::new(),
    };
    let seconds = match r.seconds_per_trial {
        Some(s) => format!("{s:.3e}"),
        None => String::new(),
    };
    format!(
        "{},{},{},{},{},{},{},{:.5e},{},{}",
        r.detector,
        r.modulation,
        r.rho,
        r.snr_db,
        r.trials,
        r.total_bits,
        r.bit_errors,
        r.ber,
        acceptance,
        seconds,
    )
}

/// Writes the rendered CSV to a file.
pub fn write_csv(path: &Path, records: &[BerRecord]) -> Result<()> {
    fs::write(path, render_csv(records)).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Parses CSV text produced by [`render_csv`] back into records.
pub fn parse_csv(text: &str) -> Result<Vec<BerRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "csv: unexpected header {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            parse_record(line).map_err(|e| {
                Error::Config(format!("csv: row {}: {e}", i + 1))
            })
        })
        .collect()
}

fn parse_record(line: &str) -> std::result::Result<BerRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 10 {
        return Err(format!("expected 10 fields, got {}", fields.len()));
    }
    let num = |i: usize, what: &str| -> std::result::Result<f64, String> {
        fields[i]
            .parse()
            .map_err(|e| format!("{what}: {e}"))
    };
    let int = |i: usize, what: &str| -> std::result::Result<u64, String> {
        fields[i]
            .parse()
            .map_err(|e| format!("{what}: {e}"))
    };
    let opt = |i: usize, what: &str| -> std::result::Result<Option<f64>, String> {
        if fields[i].is_empty() {
            Ok(None)
        } else {
            num(i, what).map(Some)
        }
    };
    Ok(BerRecord {
        detector: fields[0].to_string(),
        modulation: fields[1].to_string(),
        rho: num(2, "rho")?,
        snr_db: num(3, "snr_db")?,
        trials: int(4, "trials")? as usize,
        total_bits: int(5, "total_bits")?,
        bit_errors: int(6, "bit_errors")?,
        ber: num(7, "ber")?,
        acceptance_rate: opt(8, "acceptance_rate")?,
        seconds_per_trial: opt(9, "seconds_per_trial")?,
    })
}
