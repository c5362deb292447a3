//! Output records. Numbers are written in shortest round-trip form, so every
//! printed value parses back to the exact library value.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// One evaluated quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub functional: String,
    pub horizon: String,
    pub a: f64,
    pub h: f64,
    pub method: String,
    pub value: f64,
    pub error_estimate: f64,
    pub n_evals_or_paths: u64,
    pub seed: Option<u64>,
    pub wall_time_ms: u64,
}

const RECORD_HEADER: [&str; 10] = [
    "functional",
    "horizon",
    "a",
    "h",
    "method",
    "value",
    "error_estimate",
    "n_evals_or_paths",
    "seed",
    "wall_time_ms",
];

/// `nan` and `inf` spelled as in the table contract; everything else round-trips.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

impl RunRecord {
    pub fn write(&self, format: Format, out: &mut impl Write) -> io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer(&mut *out, self)?;
                writeln!(out)
            }
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
                w.write_record(RECORD_HEADER)?;
                w.write_record([
                    self.functional.clone(),
                    self.horizon.clone(),
                    fmt_num(self.a),
                    fmt_num(self.h),
                    self.method.clone(),
                    fmt_num(self.value),
                    fmt_num(self.error_estimate),
                    self.n_evals_or_paths.to_string(),
                    self.seed.map(|s| s.to_string()).unwrap_or_default(),
                    self.wall_time_ms.to_string(),
                ])?;
                w.flush()
            }
        }
    }
}

/// One row of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub family: String,
    pub horizon: String,
    pub a: f64,
    pub method: String,
    pub value: f64,
    pub error_estimate: f64,
}

impl TableRow {
    pub fn writer<W: Write>(out: W) -> csv::Writer<W> {
        csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
    }

    pub fn header<W: Write>(w: &mut csv::Writer<W>) -> csv::Result<()> {
        w.write_record(["family", "horizon", "a", "method", "value", "error_estimate"])
    }

    pub fn write<W: Write>(&self, w: &mut csv::Writer<W>) -> csv::Result<()> {
        w.write_record([
            self.family.to_lowercase(),
            self.horizon.clone(),
            fmt_num(self.a),
            self.method.clone(),
            fmt_num(self.value),
            fmt_num(self.error_estimate),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        RunRecord {
            functional: "M'".into(),
            horizon: "inf".into(),
            a: 1.0,
            h: 0.5,
            method: "closed".into(),
            value: -1.270_362_845_461_478_2,
            error_estimate: 0.0,
            n_evals_or_paths: 0,
            seed: None,
            wall_time_ms: 3,
        }
    }

    #[test]
    fn json_round_trips_exactly() {
        let r = sample();
        let mut buf = Vec::new();
        r.write(Format::Json, &mut buf).unwrap();
        let back: RunRecord = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.value.to_bits(), r.value.to_bits());
    }

    #[test]
    fn csv_and_json_carry_the_same_value() {
        let r = RunRecord { value: 0.1 + 0.2, seed: Some(9), ..sample() };
        let mut csv_buf = Vec::new();
        r.write(Format::Csv, &mut csv_buf).unwrap();
        let text = String::from_utf8(csv_buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[5].parse::<f64>().unwrap().to_bits(), r.value.to_bits());
        assert_eq!(fields[8], "9");
    }

    #[test]
    fn special_values() {
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_num(2.75), "2.75");
        assert_eq!(fmt_num(1.25e-14), "1.25e-14");
        for x in [1.129_471_154_513_393_3e-14, -0.1, 3e20, 5e-324] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
