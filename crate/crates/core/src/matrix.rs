//! Dense double-precision matrices and their text/CSV file formats.
//!
//! Text format: a header line `m n`, then `m` lines of `n` space-separated
//! floats written with 17 significant digits, so a write/read cycle is
//! bit-exact. CSV is headerless, one matrix row per record.

use std::io::{BufRead, Write};
use std::ops::{Add, Sub};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An `m × n` matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self(DMatrix::zeros(m, n))
    }

    /// Wraps an nalgebra matrix, rejecting NaN and infinite entries.
    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self> {
        if let Some((idx, _)) = mat.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (r, c) = (idx % mat.nrows(), idx / mat.nrows());
            return Err(Error::Data(format!("non-finite entry at ({r}, {c})")));
        }
        Ok(Self(mat))
    }

    pub fn from_row_slice(m: usize, n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != m * n {
            return Err(Error::Structural(format!(
                "{} values cannot fill a {m}x{n} matrix",
                values.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(m, n, values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Structural(format!("row {i} has {} entries, expected {n}", rows[i].len())));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(m, n, &flat)
    }

    pub fn from_fn(m: usize, n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_matrix(DMatrix::from_fn(m, n, f))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, alpha: f64) -> Result<Self> {
        Self::from_matrix(&self.0 * alpha)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.nrows()).map(|i| self.row(i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.nrows(), self.ncols())?;
        for i in 0..self.nrows() {
            let line: Vec<String> = self.0.row(i).iter().map(|v| format_f64(*v)).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
            Ok(s) => !s.trim().is_empty(),
            Err(_) => true,
        });
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty matrix file".into() })?;
        let header = header?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: 1, msg: format!("bad header: {e}") })?;
        let [m, n] = dims[..] else {
            return Err(Error::Parse { line: 1, msg: format!("header must be `m n`, got `{header}`") });
        };
        let mut values = Vec::with_capacity(m * n);
        let mut read_rows = 0;
        for (idx, line) in lines {
            let line = line?;
            let row = parse_floats(line.split_whitespace(), idx + 1)?;
            if row.len() != n {
                return Err(Error::Parse { line: idx + 1, msg: format!("expected {n} values, found {}", row.len()) });
            }
            values.extend(row);
            read_rows += 1;
        }
        if read_rows != m {
            return Err(Error::Parse { line: read_rows + 2, msg: format!("expected {m} rows, found {read_rows}") });
        }
        Self::from_row_slice(m, n, &values)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for i in 0..self.nrows() {
            wtr.write_record(self.0.row(i).iter().map(|v| format_f64(*v)))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
        let mut rows = Vec::new();
        for (idx, rec) in rdr.records().enumerate() {
            let rec = rec?;
            rows.push(parse_floats(rec.iter(), idx + 1)?);
        }
        Self::from_rows(&rows)
    }

    /// Reads `.csv` files as CSV and anything else as the text format.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        if is_csv(path) {
            Self::read_csv(file)
        } else {
            Self::read_text(std::io::BufReader::new(file))
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        if is_csv(path) {
            self.write_csv(file)
        } else {
            self.write_text(file)
        }
    }
}

/// 17 significant digits; parses back to the identical `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn parse_floats<'a>(tokens: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Parse { line, msg: format!("`{t}`: {e}") })
        })
        .collect()
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;

    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;

    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 - &rhs.0)
    }
}
