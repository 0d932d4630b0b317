//! Dataset CSV format.
//!
//! Header: `t,y,w,s_1..s_{d_s},x_1..x_{d_x}[,z_1..z_{d_z}][,y_cf]`.
//! `t` is 1-based, `w` is written as `0`/`1`, every real value is written
//! with 17 significant digits so that `f64` values round-trip exactly.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use super::dataset::{DatasetMeta, InitialState, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn format_real<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

pub fn header(d_s: usize, d_x: usize, d_z: Option<usize>, with_cf: bool) -> Vec<String> {
    let mut h = vec!["t".to_string(), "y".to_string(), "w".to_string()];
    h.extend((1..=d_s).map(|i| format!("s_{i}")));
    h.extend((1..=d_x).map(|i| format!("x_{i}")));
    if let Some(d_z) = d_z {
        h.extend((1..=d_z).map(|i| format!("z_{i}")));
    }
    if with_cf {
        h.push("y_cf".to_string());
    }
    h
}

pub fn write_csv<T: Scalar, W: Write>(ds: &TimeSeriesDataset<T>, out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wtr.write_record(header(ds.d_s(), ds.d_x(), ds.d_z(), ds.y_cf.is_some())).map_err(to_io)?;
    let mut rec: Vec<String> = Vec::new();
    for t in 0..ds.len() {
        rec.clear();
        rec.push((t + 1).to_string());
        rec.push(format_real(ds.y[t]));
        rec.push(ds.w[t].to_string());
        rec.extend(ds.s.row(t).iter().map(|&v| format_real(v)));
        rec.extend(ds.x.row(t).iter().map(|&v| format_real(v)));
        if let Some(z) = &ds.z_true {
            rec.extend(z.row(t).iter().map(|&v| format_real(v)));
        }
        if let Some(cf) = &ds.y_cf {
            rec.push(format_real(cf[t]));
        }
        wtr.write_record(&rec).map_err(to_io)?;
    }
    wtr.flush()?;
    Ok(())
}

struct Layout {
    d_s: usize,
    d_x: usize,
    d_z: usize,
    cf: bool,
}

fn parse_header(fields: &csv::StringRecord) -> Result<Layout> {
    let bad = |msg: String| Error::Parse { line: 1, msg };
    let names: Vec<&str> = fields.iter().collect();
    if names.len() < 3 || names[0] != "t" || names[1] != "y" || names[2] != "w" {
        return Err(bad("header must start with `t,y,w`".into()));
    }
    let count = |prefix: &str| {
        let mut n = 0;
        for name in &names[3..] {
            if *name == format!("{prefix}_{}", n + 1) {
                n += 1;
            }
        }
        n
    };
    let layout = Layout { d_s: count("s"), d_x: count("x"), d_z: count("z"), cf: names.last() == Some(&"y_cf") };
    let expected = header(layout.d_s, layout.d_x, (layout.d_z > 0).then_some(layout.d_z), layout.cf);
    if expected != names {
        return Err(bad(format!("unexpected column layout; expected `{}`", expected.join(","))));
    }
    if layout.d_s == 0 || layout.d_x == 0 {
        return Err(bad("at least one s_ and one x_ column are required".into()));
    }
    Ok(layout)
}

pub fn read_csv<T: Scalar, R: Read>(input: R) -> Result<TimeSeriesDataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let head = rdr.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
    let layout = parse_header(&head)?;
    let (mut y, mut w, mut s, mut x, mut z, mut cf) = (vec![], vec![], vec![], vec![], vec![], vec![]);
    for (row, rec) in rdr.records().enumerate() {
        let line = row as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(line),
            msg: e.to_string(),
        })?;
        let expected = 3 + layout.d_s + layout.d_x + layout.d_z + usize::from(layout.cf);
        if rec.len() != expected {
            return Err(Error::Parse { line, msg: format!("expected {expected} fields, found {}", rec.len()) });
        }
        let real = |i: usize| -> Result<T> {
            let v: f64 = rec[i]
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("column {} is not a number: `{}`", i + 1, &rec[i]) })?;
            if !v.is_finite() {
                return Err(Error::Parse { line, msg: format!("column {} is not finite", i + 1) });
            }
            Ok(T::lit(v))
        };
        let t: usize = rec[0].trim().parse().map_err(|_| Error::Parse { line, msg: "bad time index".into() })?;
        if t != row + 1 {
            return Err(Error::Parse { line, msg: format!("time index {t} out of sequence") });
        }
        y.push(real(1)?);
        w.push(match rec[2].trim() {
            "0" => 0u8,
            "1" => 1u8,
            other => return Err(Error::Parse { line, msg: format!("treatment must be 0 or 1, got `{other}`") }),
        });
        let mut col = 3;
        for _ in 0..layout.d_s {
            s.push(real(col)?);
            col += 1;
        }
        for _ in 0..layout.d_x {
            x.push(real(col)?);
            col += 1;
        }
        for _ in 0..layout.d_z {
            z.push(real(col)?);
            col += 1;
        }
        if layout.cf {
            cf.push(real(col)?);
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::Parse { line: 2, msg: "no data rows".into() });
    }
    let shape = |v: Vec<T>, d: usize| Array2::from_shape_vec((n, d), v).expect("row-major fill");
    let ds = TimeSeriesDataset {
        y: Array1::from(y),
        w,
        s: shape(s, layout.d_s),
        x: shape(x, layout.d_x),
        z_true: (layout.d_z > 0).then(|| shape(z, layout.d_z)),
        y_cf: layout.cf.then(|| Array1::from(cf)),
        initial: InitialState::zeros(layout.d_s),
        meta: DatasetMeta { generator: "csv".into(), seed: None, offset: 0 },
    };
    ds.validate()?;
    Ok(ds)
}
