//! Grid function persistence: CSV sample columns under a JSON header line.
//!
//! Doubles are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces the exact bit pattern.

use crate::spectral::{Grid, GridFunction, Parity};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    half_length: f64,
    n_points: usize,
    parity: Parity,
    mean_zero: bool,
}

pub fn write_csv(f: &GridFunction, path: &Path) -> Result<()> {
    let header = Header {
        half_length: f.grid().half_length(),
        n_points: f.grid().len(),
        parity: f.parity(),
        mean_zero: f.mean_zero(),
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "# {}",
        serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?
    )?;
    writeln!(out, "x,value")?;
    for j in 0..f.grid().len() {
        writeln!(out, "{},{}", f.grid().x(j), f.values()[j])?;
    }
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<GridFunction> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();

    let header_line = lines
        .next()
        .ok_or_else(|| Error::Format("empty grid function file".into()))??;
    let json = header_line
        .strip_prefix("# ")
        .ok_or_else(|| Error::Format("missing JSON header line".into()))?;
    let header: Header =
        serde_json::from_str(json).map_err(|e| Error::Format(format!("bad header: {e}")))?;

    let column_line = lines
        .next()
        .ok_or_else(|| Error::Format("missing column line".into()))??;
    if column_line.trim() != "x,value" {
        return Err(Error::Format(format!(
            "unexpected column line {column_line:?}"
        )));
    }

    let grid = Grid::new(header.half_length, header.n_points)?;
    let mut values = Vec::with_capacity(header.n_points);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (_, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("bad row {line:?}")))?;
        values.push(
            v.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad value {v:?}: {e}")))?,
        );
    }
    if values.len() != header.n_points {
        return Err(Error::Format(format!(
            "expected {} rows, found {}",
            header.n_points,
            values.len()
        )));
    }
    Ok(GridFunction::from_values(grid, values, header.parity).with_mean_zero_flag(header.mean_zero))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let grid = Grid::new(8.0, 64).unwrap();
        let f = GridFunction::sample(grid, Parity::Even, |x| {
            (-x * x / 3.0).exp() * (1.0 + 1e-17_f64) * 0.123_456_789_012_345_67
        });
        let dir = std::env::temp_dir().join(format!("gf-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        write_csv(&f, &path).unwrap();
        let g = read_csv(&path).unwrap();
        assert_eq!(f.values(), g.values());
        assert_eq!(f.parity(), g.parity());
        assert_eq!(f.grid().len(), g.grid().len());
        std::fs::remove_dir_all(&dir).ok();
    }
}
