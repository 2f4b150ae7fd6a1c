//! CSV output: 12 significant digits, LF line endings.

use std::io::{self, Write};
use std::path::Path;

use crate::sweep::SweepTable;

/// `%.12g`-style rendering: 12 significant digits, trailing zeros dropped,
/// scientific notation outside 1e-4 ..= 1e12.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    let decimals = (11 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv(table: &SweepTable, out: impl Write) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        let mut cells: Vec<String> = row.axis_values.iter().map(|&v| format_number(v)).collect();
        cells.extend(
            row.values
                .iter()
                .map(|v| v.map(format_number).unwrap_or_default()),
        );
        cells.push(row.status.clone());
        w.write_record(&cells)?;
    }
    w.flush()
}

pub fn to_csv_string(table: &SweepTable) -> String {
    let mut buf = Vec::new();
    write_csv(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Writes to a temporary file next to `path` and renames it into place, so
/// a failed run never leaves a partial file.
pub fn write_csv_atomic(table: &SweepTable, path: &Path) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_csv(table, tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
