use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::oracle::OracleResidual;

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "channel",
    "sweep_value",
    "l1",
    "l2",
    "n_initial",
    "n_final",
    "valid_fraction",
    "singular",
    "boundary_phi",
    "wall_time",
];

/// One experiment row. `sweep_value` holds `p` for sweeps, `t` for
/// homotopies and the target winding for topology tables; `boundary_phi`
/// is `NaN` when the diagnostic was not requested.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub channel: String,
    pub sweep_value: f64,
    pub l1: i32,
    pub l2: i32,
    pub n_initial: f64,
    pub n_final: f64,
    pub valid_fraction: f64,
    pub singular: bool,
    pub boundary_phi: f64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl ExperimentResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.experiment.clone(),
                r.channel.clone(),
                fmt_f64(r.sweep_value),
                r.l1.to_string(),
                r.l2.to_string(),
                fmt_f64(r.n_initial),
                fmt_f64(r.n_final),
                fmt_f64(r.valid_fraction),
                r.singular.to_string(),
                fmt_f64(r.boundary_phi),
                fmt_f64(r.wall_time),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(Error::Config(format!("unexpected csv header {header:?}")));
        }
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |col: usize| Error::Config(format!("row {}: bad value in column {}", line + 1, CSV_HEADER[col]));
            let f = |col: usize| rec[col].parse::<f64>().map_err(|_| bad(col));
            let i = |col: usize| rec[col].parse::<i32>().map_err(|_| bad(col));
            rows.push(ResultRow {
                experiment: rec[0].to_string(),
                channel: rec[1].to_string(),
                sweep_value: f(2)?,
                l1: i(3)?,
                l2: i(4)?,
                n_initial: f(5)?,
                n_final: f(6)?,
                valid_fraction: f(7)?,
                singular: rec[8].parse().map_err(|_| bad(8))?,
                boundary_phi: f(9)?,
                wall_time: f(10)?,
            });
        }
        Ok(Self { rows })
    }
}

pub const ORACLE_HEADER: [&str; 8] = ["family", "p", "rho", "phi", "component", "pipeline", "analytic", "relative_error"];

pub fn write_oracle_csv<W: Write>(rows: &[OracleResidual], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ORACLE_HEADER)?;
    for r in rows {
        out.write_record([
            r.family.name().to_string(),
            fmt_f64(r.p),
            fmt_f64(r.rho),
            fmt_f64(r.phi),
            r.component.to_string(),
            fmt_f64(r.pipeline),
            fmt_f64(r.analytic),
            fmt_f64(r.relative_error),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> ResultRow {
        ResultRow {
            experiment: "sweep".into(),
            channel: "flip, odd \"name\"".into(),
            sweep_value: v,
            l1: -2,
            l2: 0,
            n_initial: -1.9876543210987654,
            n_final: 0.1 + 0.2,
            valid_fraction: 1.0,
            singular: v == 0.5,
            boundary_phi: f64::NAN,
            wall_time: 0.0,
        }
    }

    #[test]
    fn header_and_float_format() {
        let res = ExperimentResult { rows: vec![row(0.5)] };
        let s = res.to_csv_string().unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let line = lines.next().unwrap();
        assert!(line.contains("5.0000000000000000e-1"), "{line}");
        assert!(line.contains("3.0000000000000004e-1"), "{line}");
        assert!(line.contains(",true,NaN,"), "{line}");
        assert!(lines.next().is_none());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let res = ExperimentResult {
            rows: (0..5).map(|k| row(k as f64 * 0.25)).collect(),
        };
        let s = res.to_csv_string().unwrap();
        let back = ExperimentResult::read_csv(s.as_bytes()).unwrap();
        assert_eq!(back.rows.len(), 5);
        for (a, b) in res.rows.iter().zip(&back.rows) {
            assert_eq!(a.n_final.to_bits(), b.n_final.to_bits());
            assert_eq!(a.n_initial.to_bits(), b.n_initial.to_bits());
            assert_eq!(a.channel, b.channel);
            assert!(b.boundary_phi.is_nan());
        }
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(ExperimentResult::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
