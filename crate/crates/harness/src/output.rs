//! Row serialization. The CSV header is fixed and always written.

use std::io::Write;

use crate::config::OutputFormat;
use crate::experiment::ResultRow;

pub const CSV_HEADER: [&str; 7] =
    ["estimator_id", "N", "seed", "weight_error", "value_error", "condition_number", "wall_time_ms"];

pub fn write_rows<W: Write>(rows: &[ResultRow], format: OutputFormat, out: W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(rows, out),
        OutputFormat::Json => write_json(rows, out),
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(time: Option<f64>) -> ResultRow {
        ResultRow {
            estimator_id: "lstd_sample".into(),
            n: 100,
            seed: 3,
            weight_error: 0.125,
            value_error: 1e-20,
            condition_number: 4.0,
            wall_time_ms: time,
        }
    }

    fn csv_text(rows: &[ResultRow]) -> String {
        let mut buf = Vec::new();
        write_csv(rows, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_even_without_rows() {
        assert_eq!(csv_text(&[]), "estimator_id,N,seed,weight_error,value_error,condition_number,wall_time_ms\n");
    }

    #[test]
    fn missing_time_is_empty_field() {
        let text = csv_text(&[row(None), row(Some(2.5))]);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[1], "lstd_sample,100,3,0.125,1e-20,4.0,");
        assert!(lines[2].ends_with(",2.5"));
    }

    #[test]
    fn json_uses_column_names() {
        let mut buf = Vec::new();
        write_json(&[row(None)], &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["N"], 100);
        assert!(v[0]["wall_time_ms"].is_null());
    }
}
