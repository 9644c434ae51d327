//! CSV serialisation of point sets and empirical measures.
//!
//! Header `dim_0,...,dim_{s-1}`, one row per point, every value written
//! with 17 significant digits.

use std::io::{Read, Write};

use crate::error::{invalid_arg, Error, Result};
use crate::generators::EmpiricalMeasure;
use crate::qmc_points::PointSet;

/// Formats a double with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_rows<W: Write>(w: W, cols: usize, data: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record((0..cols).map(|j| format!("dim_{j}")))?;
    for row in data.chunks_exact(cols) {
        wtr.write_record(row.iter().map(|&x| format_f64(x)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a `dim_*` CSV back into `(rows, cols, row-major data)`.
pub fn read_rows<R: Read>(r: R) -> Result<(usize, usize, Vec<f64>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let cols = rdr.headers()?.len();
    if cols == 0 {
        return Err(invalid_arg("CSV has no columns"));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::Parse(format!("row {} has {} fields", rows + 1, rec.len())));
        }
        for field in rec.iter() {
            data.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", rows + 1)))?,
            );
        }
        rows += 1;
    }
    Ok((rows, cols, data))
}

pub fn write_point_set<W: Write>(w: W, ps: &PointSet) -> Result<()> {
    write_rows(w, ps.s(), ps.as_slice())
}

pub fn write_measure<W: Write>(w: W, m: &EmpiricalMeasure) -> Result<()> {
    write_rows(w, m.d(), m.as_slice())
}

pub fn read_measure<R: Read>(r: R) -> Result<EmpiricalMeasure> {
    let (n, d, data) = read_rows(r)?;
    EmpiricalMeasure::new(data, n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc_points::sobol;

    #[test]
    fn point_set_csv_layout() {
        let ps = sobol(8, 2, Some(3)).unwrap();
        let mut buf = Vec::new();
        write_point_set(&mut buf, &ps).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("dim_0,dim_1"));
        assert_eq!(text.lines().count(), 9);
        let (n, s, data) = read_rows(buf.as_slice()).unwrap();
        assert_eq!((n, s), (8, 2));
        assert_eq!(data, ps.as_slice());
    }
}
