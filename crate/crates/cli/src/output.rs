//! CSV writers. Every float goes through [`shortest`], so rerunning a
//! config reproduces the files byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ecmodes::dynamics::{continuum_population_density, DiscretizedSystem, ObservableSeries};
use ecmodes::format::shortest;

use crate::error::CliError;

/// A CSV file under construction; errors carry the file path.
pub struct CsvFile<'a> {
    path: &'a Path,
    out: BufWriter<File>,
}

impl<'a> CsvFile<'a> {
    pub fn create(path: &'a Path, header: &[String]) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut csv = Self { path, out: BufWriter::new(file) };
        csv.line(&header.join(","))?;
        Ok(csv)
    }

    fn line(&mut self, s: &str) -> Result<(), CliError> {
        writeln!(self.out, "{s}").map_err(|e| CliError::io(self.path, e))
    }

    pub fn row(&mut self, values: impl IntoIterator<Item = f64>) -> Result<(), CliError> {
        let fields: Vec<String> = values.into_iter().map(shortest).collect();
        self.line(&fields.join(","))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::io(self.path, e))
    }
}

pub fn write_populations(path: &Path, system: &DiscretizedSystem, series: &ObservableSeries) -> Result<(), CliError> {
    let mut header = vec!["t_fs".to_owned()];
    header.extend(system.emitters().iter().map(|e| format!("pop_emitter_{}", e.name)));
    header.push("norm".into());
    if series.ground_population.is_some() {
        header.push("pop_ground".into());
    }
    let mut csv = CsvFile::create(path, &header)?;
    for (k, &t) in series.times_fs.iter().enumerate() {
        let mut row = vec![t];
        row.extend(series.populations.iter().map(|p| p[k]));
        row.push(series.norms[k]);
        if let Some(g) = &series.ground_population {
            row.push(g[k]);
        }
        csv.row(row)?;
    }
    csv.finish()
}

/// One `density_<j>_t<time>` column per continuum (1-based `j`) and a
/// `total_t<time>` column for every snapshot.
pub fn write_continuum(path: &Path, system: &DiscretizedSystem, series: &ObservableSeries) -> Result<(), CliError> {
    let densities: Vec<_> = series.snapshots.iter().map(|s| continuum_population_density(s, system)).collect();
    let mut header = vec!["omega_ev".to_owned()];
    for s in &series.snapshots {
        let t = shortest(s.time_fs);
        header.extend((1..=system.max_rank()).map(|j| format!("density_{j}_t{t}")));
        header.push(format!("total_t{t}"));
    }
    let totals: Vec<Vec<f64>> = densities.iter().map(|d| d.total()).collect();
    let mut csv = CsvFile::create(path, &header)?;
    for (k, &w) in system.grid().nodes().iter().enumerate() {
        let mut row = vec![w];
        for (d, tot) in densities.iter().zip(&totals) {
            row.extend(d.density.iter().map(|col| col[k]));
            row.push(tot[k]);
        }
        csv.row(row)?;
    }
    csv.finish()
}

pub fn write_field(path: &Path, series: &ObservableSeries, probe: usize) -> Result<(), CliError> {
    let header = ["t_fs", "re_E", "im_E", "intensity"].map(String::from);
    let mut csv = CsvFile::create(path, &header)?;
    for (&t, e) in series.times_fs.iter().zip(&series.fields[probe]) {
        csv.row([t, e.re, e.im, e.norm_sqr()])?;
    }
    csv.finish()
}

/// `G_<name>` (eV^1/2 per e·nm), `J_<name>` (eV), `S_<a>_<b>` for `a < b`
/// and the kept rank at every node.
pub fn write_spectra(path: &Path, system: &DiscretizedSystem) -> Result<(), CliError> {
    let emitters = system.emitters();
    let n = emitters.len();
    let mut header = vec!["omega_ev".to_owned()];
    header.extend(emitters.iter().map(|e| format!("G_{}", e.name)));
    header.extend(emitters.iter().map(|e| format!("J_{}", e.name)));
    for a in 0..n {
        for b in a + 1..n {
            header.push(format!("S_{}_{}", emitters[a].name, emitters[b].name));
        }
    }
    header.push("rank".into());
    let mut csv = CsvFile::create(path, &header)?;
    for basis in system.bases() {
        let mut row = vec![basis.omega];
        row.extend(basis.couplings.iter().copied());
        row.extend((0..n).map(|i| basis.spectral_density(emitters, i)));
        for a in 0..n {
            for b in a + 1..n {
                row.push(basis.overlap[(a, b)]);
            }
        }
        row.push(basis.rank as f64);
        csv.row(row)?;
    }
    csv.finish()
}
