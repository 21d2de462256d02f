//! Tabulated projected Green's function samples, e.g. exported from an
//! external electromagnetic solver.
//!
//! File format (UTF-8, comma separated, `#` starts a comment):
//!
//! ```text
//! # optional comments
//! omega_ev,img_e1_e1,img_e1_e2,img_e2_e2,img_e1_p3
//! 1.50,2.1e11,-3.0e9,4.4e7,1.2e9
//! ...
//! ```
//!
//! Each `img_<a>_<b>` column holds `n_a·Im G(r_a, r_b, ω)·n_b` in 1/m. Each
//! unordered pair appears at most once; symmetry supplies the other order.
//! Point names must not contain `_`. Frequencies must be strictly
//! increasing. Every pair among points that have a diagonal column must be
//! present; points without a diagonal column (observation points) only need
//! the pairs that are actually queried.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};

use super::interp::{self, Interpolation};
use crate::error::{Error, Result};
use crate::format::shortest;

/// Relative tolerance (against the trace) on negative eigenvalues of the
/// sampled matrix before a warning is recorded.
pub const PSD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct TabulatedGreens {
    names: Vec<String>,
    omegas: Vec<f64>,
    /// Column index for each ordered pair, `None` when absent.
    pair_column: Vec<Option<usize>>,
    pairs: Vec<(usize, usize)>,
    columns: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
    interpolation: Interpolation,
    warnings: Vec<String>,
}

impl TabulatedGreens {
    /// Builds a provider from in-memory samples. `values[c][k]` is column `c`
    /// (for `pairs[c]`) at `omegas[k]`.
    pub fn from_samples(
        names: Vec<String>,
        pairs: Vec<(usize, usize)>,
        omegas: Vec<f64>,
        values: Vec<Vec<f64>>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        let n = names.len();
        if omegas.len() < 2 {
            return Err(Error::Invalid("tabulated data needs at least two frequencies".into()));
        }
        if values.len() != pairs.len() || values.iter().any(|c| c.len() != omegas.len()) {
            return Err(Error::Invalid("sample matrix shape does not match header".into()));
        }
        let mut pair_column = vec![None; n * n];
        for (c, &(a, b)) in pairs.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::UnknownPoint { index: a.max(b), count: n });
            }
            if pair_column[a * n + b].is_some() {
                return Err(Error::Invalid(format!(
                    "duplicate column for pair ({}, {})",
                    names[a], names[b]
                )));
            }
            pair_column[a * n + b] = Some(c);
            pair_column[b * n + a] = Some(c);
        }
        let slopes = match interpolation {
            Interpolation::Linear => Vec::new(),
            Interpolation::MonotoneCubic => {
                values.iter().map(|col| interp::monotone_slopes(&omegas, col)).collect()
            }
        };
        let mut table = Self {
            names,
            omegas,
            pair_column,
            pairs,
            columns: values,
            slopes,
            interpolation,
            warnings: Vec::new(),
        };
        table.check_complete_blocks()?;
        table.check_semidefinite(None);
        Ok(table)
    }

    /// Parses the tabulated text format.
    pub fn load<R: BufRead>(reader: R, interpolation: Interpolation) -> Result<Self> {
        let mut header: Option<Header> = None;
        let mut omegas = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        let mut row_lines = Vec::new();

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let content = match line.find('#') {
                Some(pos) => &line[..pos],
                None => &line[..],
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split(',').map(str::trim).collect();
            let Some((_, pairs)) = &header else {
                header = Some(parse_header(&fields, line_no)?);
                let ncols = header.as_ref().map(|h| h.1.len()).unwrap_or(0);
                values = vec![Vec::new(); ncols];
                continue;
            };
            if fields.len() != pairs.len() + 1 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "expected {} fields, found {}",
                        pairs.len() + 1,
                        fields.len()
                    ),
                });
            }
            let mut row = Vec::with_capacity(fields.len());
            for f in &fields {
                let v: f64 = f.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid number {f:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("non-finite value {f:?}"),
                    });
                }
                row.push(v);
            }
            let omega = row[0];
            if omega <= 0.0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("frequency must be positive, got {omega}"),
                });
            }
            if let Some(&prev) = omegas.last() {
                if omega <= prev {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!(
                            "frequencies must be strictly increasing ({omega} after {prev})"
                        ),
                    });
                }
            }
            omegas.push(omega);
            for (col, v) in values.iter_mut().zip(&row[1..]) {
                col.push(*v);
            }
            row_lines.push(line_no);
        }

        let Some((names, pairs)) = header else {
            return Err(Error::Parse { line: 0, message: "missing header line".into() });
        };
        if omegas.len() < 2 {
            return Err(Error::Parse {
                line: row_lines.last().copied().unwrap_or(0),
                message: "at least two data rows are required".into(),
            });
        }
        let mut table = Self::from_samples_unchecked(names, pairs, omegas, values, interpolation)
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
        table.check_semidefinite(Some(&row_lines));
        for w in &table.warnings {
            log::warn!("{w}");
        }
        Ok(table)
    }

    fn from_samples_unchecked(
        names: Vec<String>,
        pairs: Vec<(usize, usize)>,
        omegas: Vec<f64>,
        values: Vec<Vec<f64>>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        let mut table = Self::from_samples(names, pairs, omegas, values, interpolation)?;
        table.warnings.clear();
        Ok(table)
    }

    fn check_complete_blocks(&self) -> Result<()> {
        let diag = self.diagonal_points();
        for (i, &a) in diag.iter().enumerate() {
            for &b in &diag[..i] {
                if self.column(a, b).is_none() {
                    return Err(Error::Invalid(format!(
                        "missing pair column img_{}_{}",
                        self.names[b], self.names[a]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Points that carry a diagonal column.
    fn diagonal_points(&self) -> Vec<usize> {
        (0..self.names.len()).filter(|&a| self.column(a, a).is_some()).collect()
    }

    fn check_semidefinite(&mut self, lines: Option<&[usize]>) {
        let diag = self.diagonal_points();
        if diag.is_empty() {
            return;
        }
        for k in 0..self.omegas.len() {
            let m = DMatrix::from_fn(diag.len(), diag.len(), |i, j| {
                self.columns[self.column(diag[i], diag[j]).unwrap()][k]
            });
            let trace = m.trace().abs();
            let min = SymmetricEigen::new(m).eigenvalues.min();
            if min < -PSD_TOLERANCE * trace.max(f64::MIN_POSITIVE) {
                let location = match lines {
                    Some(l) => format!("line {}", l[k]),
                    None => format!("row {k}"),
                };
                self.warnings.push(format!(
                    "{location}: sampled Green's matrix at {} eV has negative eigenvalue {min:e}",
                    self.omegas[k]
                ));
            }
        }
    }

    fn column(&self, a: usize, b: usize) -> Option<usize> {
        let n = self.names.len();
        self.pair_column[a * n + b]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.omegas
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Validation warnings collected while loading (e.g. non-PSD samples).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn range(&self) -> (f64, f64) {
        (self.omegas[0], *self.omegas.last().unwrap())
    }

    pub fn has_pair(&self, a: usize, b: usize) -> bool {
        a < self.names.len() && b < self.names.len() && self.column(a, b).is_some()
    }

    pub(crate) fn evaluate(&self, a: usize, b: usize, omega: f64) -> Result<f64> {
        let (min, max) = self.range();
        if !(min..=max).contains(&omega) {
            return Err(Error::OutOfRange { omega, min, max });
        }
        let c = self
            .column(a, b)
            .ok_or_else(|| Error::MissingPair(self.names[a].clone(), self.names[b].clone()))?;
        let slopes = match self.interpolation {
            Interpolation::Linear => None,
            Interpolation::MonotoneCubic => Some(self.slopes[c].as_slice()),
        };
        Ok(interp::evaluate(&self.omegas, &self.columns[c], slopes, omega))
    }

    /// Writes the table in the text format, floats in shortest round-trip
    /// form.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "omega_ev")?;
        for &(a, b) in &self.pairs {
            write!(out, ",img_{}_{}", self.names[a], self.names[b])?;
        }
        writeln!(out)?;
        for (k, omega) in self.omegas.iter().enumerate() {
            write!(out, "{}", shortest(*omega))?;
            for col in &self.columns {
                write!(out, ",{}", shortest(col[k]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Point names in order of appearance and the column pairs.
type Header = (Vec<String>, Vec<(usize, usize)>);

fn parse_header(fields: &[&str], line: usize) -> Result<Header> {
    let err = |message: String| Error::Parse { line, message };
    if fields.first() != Some(&"omega_ev") {
        return Err(err("header must start with omega_ev".into()));
    }
    if fields.len() < 2 {
        return Err(err("header has no img_<a>_<b> columns".into()));
    }
    let mut names: Vec<String> = Vec::new();
    let mut index_of = |name: &str| -> usize {
        match names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                names.push(name.to_owned());
                names.len() - 1
            }
        }
    };
    let mut pairs = Vec::new();
    for f in &fields[1..] {
        let parts: Vec<&str> = f.split('_').collect();
        if parts.len() != 3 || parts[0] != "img" || parts[1].is_empty() || parts[2].is_empty() {
            return Err(err(format!("malformed column name {f:?}, expected img_<a>_<b>")));
        }
        let a = index_of(parts[1]);
        let b = index_of(parts[2]);
        if pairs.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
            return Err(err(format!("duplicate column for pair {f:?}")));
        }
        pairs.push((a, b));
    }
    Ok((names, pairs))
}
