//! Dense country × product matrices with label axes.
//!
//! All three matrix kinds of the pipeline (raw exports, RCA values, the
//! binary adjacency matrix) share this representation. Storage is row-major:
//! row `c` is a country, column `p` a product.
//!
//! The canonical CSV layout is wide, with the year repeated on every row:
//!
//! ```text
//! year,country,P1,P2
//! 1998,ARG,0,12.5
//! 1998,USA,3,1000
//! ```

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// A value that can live in a [`LabeledMatrix`] and round-trip through CSV.
pub trait Cell: Copy + PartialEq + std::fmt::Debug {
    fn parse_cell(s: &str) -> Option<Self>;
    fn format_cell(&self) -> String;
    fn is_zero(&self) -> bool;
}

impl Cell for f64 {
    fn parse_cell(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }

    // `Display` for f64 prints the shortest string that parses back to the
    // same bits.
    fn format_cell(&self) -> String {
        format!("{self}")
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Cell for bool {
    fn parse_cell(s: &str) -> Option<Self> {
        match s.trim() {
            "0" => Some(false),
            "1" => Some(true),
            _ => None,
        }
    }

    fn format_cell(&self) -> String {
        if *self { "1" } else { "0" }.to_string()
    }

    fn is_zero(&self) -> bool {
        !*self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix<T> {
    pub year: i32,
    countries: Vec<String>,
    products: Vec<String>,
    values: Vec<T>,
}

/// Nonnegative export values `X[c][p]` for one year.
pub type ExportMatrix = LabeledMatrix<f64>;
/// Balassa revealed comparative advantage values.
pub type RcaMatrix = LabeledMatrix<f64>;
/// The 0/1 country-product adjacency matrix.
pub type BinaryMatrix = LabeledMatrix<bool>;

impl<T: Cell> LabeledMatrix<T> {
    pub fn new(
        year: i32,
        countries: Vec<String>,
        products: Vec<String>,
        values: Vec<T>,
    ) -> Result<Self> {
        if values.len() != countries.len() * products.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {}x{} matrix",
                values.len(),
                countries.len(),
                products.len()
            )));
        }
        check_unique("country", &countries)?;
        check_unique("product", &products)?;
        Ok(LabeledMatrix {
            year,
            countries,
            products,
            values,
        })
    }

    /// Builds a matrix from nested rows, labelling countries `C0..` and
    /// products `P0..` (zero-padded so lexicographic order equals index order).
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nc = rows.len();
        let np = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != np) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(0, index_labels('C', nc), index_labels('P', np), values)
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, c: usize, p: usize) -> T {
        self.values[c * self.products.len() + p]
    }

    #[inline]
    pub fn set(&mut self, c: usize, p: usize, v: T) {
        let np = self.products.len();
        self.values[c * np + p] = v;
    }

    pub fn row(&self, c: usize) -> &[T] {
        let np = self.products.len();
        &self.values[c * np..(c + 1) * np]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.n_countries()).map(move |c| self.row(c))
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }

    pub fn map<U: Cell>(&self, f: impl Fn(T) -> U) -> LabeledMatrix<U> {
        LabeledMatrix {
            year: self.year,
            countries: self.countries.clone(),
            products: self.products.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Keeps the listed rows and columns, in the order given.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for &c in rows {
            let row = self.row(c);
            values.extend(cols.iter().map(|&p| row[p]));
        }
        LabeledMatrix {
            year: self.year,
            countries: rows.iter().map(|&c| self.countries[c].clone()).collect(),
            products: cols.iter().map(|&p| self.products[p].clone()).collect(),
            values,
        }
    }

    pub fn country_index(&self, code: &str) -> Option<usize> {
        self.countries.iter().position(|c| c == code)
    }

    pub fn product_index(&self, code: &str) -> Option<usize> {
        self.products.iter().position(|p| p == code)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["year".to_string(), "country".to_string()];
        header.extend(self.products.iter().cloned());
        w.write_record(&header)?;
        let year = self.year.to_string();
        for (c, label) in self.countries.iter().enumerate() {
            let mut record = Vec::with_capacity(self.products.len() + 2);
            record.push(year.clone());
            record.push(label.clone());
            record.extend(self.row(c).iter().map(Cell::format_cell));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "year" || &header[1] != "country" {
            return Err(Error::MalformedHeader(
                "matrix csv must start with `year,country`".into(),
            ));
        }
        let products: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut year = None;
        let mut countries = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            if rec.len() != products.len() + 2 {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected {} fields, got {}", products.len() + 2, rec.len()),
                });
            }
            let y: i32 = rec[0].trim().parse().map_err(|_| Error::Parse {
                line,
                reason: format!("bad year '{}'", &rec[0]),
            })?;
            match year {
                None => year = Some(y),
                Some(prev) if prev != y => {
                    return Err(Error::Parse {
                        line,
                        reason: format!("mixed years {prev} and {y}"),
                    })
                }
                _ => {}
            }
            countries.push(rec[1].to_string());
            for (j, cell) in rec.iter().skip(2).enumerate() {
                let v = T::parse_cell(cell).ok_or_else(|| Error::Parse {
                    line,
                    reason: format!("bad cell '{cell}' for product '{}'", products[j]),
                })?;
                values.push(v);
            }
        }
        Self::new(year.unwrap_or(0), countries, products, values)
    }
}

impl LabeledMatrix<bool> {
    pub fn row_sums(&self) -> Vec<usize> {
        self.rows().map(|r| r.iter().filter(|&&b| b).count()).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.n_products()];
        for row in self.rows() {
            for (s, &b) in sums.iter_mut().zip(row) {
                *s += usize::from(b);
            }
        }
        sums
    }

    /// Number of ones in the matrix.
    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&b| b).count()
    }
}

pub(crate) fn index_labels(prefix: char, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len().max(1);
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

fn check_unique(axis: &str, labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::InvalidMatrix(format!("duplicate {axis} label '{l}'")));
        }
    }
    Ok(())
}
