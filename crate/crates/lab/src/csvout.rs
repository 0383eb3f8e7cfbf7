//! CSV rendering: header row, `%.17g` numbers, LF line endings.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use dirac_core::series::TimeSeries;

/// Formats like C's `%.17g`.
pub fn g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mant), exp.abs())
    } else {
        trim_zeros(&format!("{v:.*}", (16 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
    width: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[String]) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(header.join(",").as_bytes())?;
        out.write_all(b"\n")?;
        Ok(Self {
            out,
            width: header.len(),
        })
    }

    pub fn row(&mut self, cells: &[String]) -> io::Result<()> {
        debug_assert_eq!(cells.len(), self.width);
        self.out.write_all(cells.join(",").as_bytes())?;
        self.out.write_all(b"\n")
    }

    pub fn numbers(&mut self, values: &[f64]) -> io::Result<()> {
        let cells: Vec<String> = values.iter().map(|&v| g17(v)).collect();
        self.row(&cells)
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn timeseries_header(n_env: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n_env).map(|k| format!("I_{k}")));
    h.extend(
        [
            "rho",
            "xbar_left",
            "xbar_right",
            "J",
            "K",
            "residual",
            "lipschitz",
            "min_second_diff",
            "jump_flag",
        ]
        .map(String::from),
    );
    h
}

pub fn write_timeseries(path: &Path, s: &TimeSeries) -> io::Result<()> {
    let mut w = CsvWriter::create(path, &timeseries_header(s.n_env()))?;
    for m in 0..s.len() {
        let mut cells = vec![g17(s.times[m])];
        cells.extend(s.env.iter().map(|col| g17(col[m])));
        cells.extend(
            [
                s.rho[m],
                s.xbar_left[m],
                s.xbar_right[m],
                s.j[m],
                s.k[m],
                s.residual[m],
                s.lipschitz[m],
                s.min_second_diff[m],
            ]
            .map(g17),
        );
        cells.push(s.jump_flags[m].to_string());
        w.row(&cells)?;
    }
    w.finish()
}

/// `snapshot_<t>.csv` with columns `x,<column>`; `t` in shortest round-trip form.
pub fn write_snapshot(dir: &Path, t: f64, column: &str, nodes: &[f64], values: &[f64]) -> io::Result<()> {
    let path = dir.join(format!("snapshot_{t}.csv"));
    let mut w = CsvWriter::create(&path, &header(&["x", column]))?;
    for (&x, &v) in nodes.iter().zip(values) {
        w.numbers(&[x, v])?;
    }
    w.finish()
}

/// Long-format `t,x,<column>` table over sampled profiles.
pub fn write_field(path: &Path, column: &str, times: &[f64], nodes: &[f64], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut w = CsvWriter::create(path, &header(&["t", "x", column]))?;
    for (&t, row) in times.iter().zip(rows) {
        for (&x, &v) in nodes.iter().zip(row) {
            w.numbers(&[t, x, v])?;
        }
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g17() {
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (123456.0, "123456"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (0.0001, "0.0001"),
            (1.0 / 3.0, "0.33333333333333331"),
            (6.02214076e23, "6.0221407599999999e+23"),
            (f64::NAN, "nan"),
            (f64::NEG_INFINITY, "-inf"),
            (0.0, "0"),
        ];
        for (v, want) in cases {
            assert_eq!(g17(v), want, "{v}");
        }
    }

    #[test]
    fn round_trips() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 123.456e200, -7.25e-9] {
            assert_eq!(g17(v).parse::<f64>().unwrap(), v);
        }
    }
}
