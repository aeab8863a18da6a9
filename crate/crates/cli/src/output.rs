//! CSV records and legacy VTK volumes.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hopfion_core::continuation::{ContinuationRecord, RecordSink};
use hopfion_core::lattice::{DirectorField, OneFormField};
use hopfion_core::vec3;

pub const CSV_HEADER: &str = "alpha,E_total,E_dirichlet,E_pullback,E_cross,E_dc_sq,E_c_sq,hopf_charge,core_length,core_reliable,derrick_ratio,instability_norm,iterations,converged";

pub fn csv_row(r: &ContinuationRecord) -> String {
    let e = &r.energy;
    let ratio = r.derrick_ratio.map_or_else(|| "NaN".to_string(), |d| d.to_string());
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.alpha,
        e.total,
        e.dirichlet,
        e.pullback,
        e.cross,
        e.dc_sq,
        e.c_sq,
        r.hopf_charge,
        r.core_length,
        r.core_reliable,
        ratio,
        r.instability_norm,
        r.iterations,
        r.converged
    )
}

/// Appends one line per record and flushes it immediately.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    /// Starts a fresh file with a header.
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        out.flush()?;
        Ok(CsvWriter { out })
    }

    /// Reopens an existing file for a resumed sweep, dropping any rows past
    /// `alpha` (they were computed after the checkpoint being resumed from).
    pub fn resume(path: &Path, alpha: f64) -> io::Result<Self> {
        if !path.exists() {
            return Self::create(path);
        }
        let mut kept = Vec::new();
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line != CSV_HEADER {
                    return Err(io::Error::new(io::ErrorKind::InvalidData, format!("{} has an unexpected header", path.display())));
                }
                continue;
            }
            let first = line.split(',').next().unwrap_or("");
            match first.parse::<f64>() {
                Ok(a) if a <= alpha => kept.push(line),
                Ok(_) => {}
                // a torn final line from a killed process
                Err(_) => {}
            }
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        for line in kept {
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(CsvWriter { out: BufWriter::new(file) })
    }

    pub fn write(&mut self, r: &ContinuationRecord) -> io::Result<()> {
        writeln!(self.out, "{}", csv_row(r))?;
        self.out.flush()
    }
}

/// Legacy ASCII structured-points volume with `phi`, `phi3` and `|C|`.
pub fn write_vtk(path: &Path, phi: &DirectorField, c: &OneFormField, title: &str) -> io::Result<()> {
    let spec = phi.spec();
    let n = spec.n_points;
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.replace('\n', " "))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {n} {n} {n}")?;
    writeln!(out, "ORIGIN {} {} {}", spec.origin[0], spec.origin[1], spec.origin[2])?;
    writeln!(out, "SPACING {} {} {}", spec.spacing, spec.spacing, spec.spacing)?;
    writeln!(out, "POINT_DATA {}", spec.num_sites())?;
    writeln!(out, "VECTORS phi double")?;
    for v in phi.values() {
        writeln!(out, "{} {} {}", v[0], v[1], v[2])?;
    }
    writeln!(out, "SCALARS phi3 double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in phi.values() {
        writeln!(out, "{}", v[2])?;
    }
    writeln!(out, "SCALARS c_magnitude double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in c.values() {
        writeln!(out, "{}", vec3::norm(*v))?;
    }
    out.flush()
}

/// Writes CSV rows, the rolling checkpoint, and the periodic extras of a sweep.
pub struct RunSink {
    pub csv: CsvWriter,
    pub directory: PathBuf,
    pub charge_intent: i32,
    pub vtk_every: usize,
    pub checkpoint_every: usize,
    pub count: usize,
}

pub fn latest_checkpoint(directory: &Path) -> PathBuf {
    directory.join("latest.ckpt")
}

fn alpha_tag(alpha: f64) -> String {
    format!("{alpha:.4}")
}

impl RecordSink for RunSink {
    fn accept(&mut self, record: &ContinuationRecord, phi: &DirectorField, c: &OneFormField) -> hopfion_core::Result<()> {
        let ck = hopfion_core::checkpoint::Checkpoint::new(record.alpha, self.charge_intent, phi.clone(), c.clone())?;
        ck.save(&latest_checkpoint(&self.directory))?;
        self.count += 1;
        if self.checkpoint_every > 0 && self.count % self.checkpoint_every == 0 {
            ck.save(&self.directory.join(format!("alpha_{}.ckpt", alpha_tag(record.alpha))))?;
        }
        if self.vtk_every > 0 && self.count % self.vtk_every == 0 {
            let path = self.directory.join(format!("alpha_{}.vtk", alpha_tag(record.alpha)));
            write_vtk(&path, phi, c, &format!("hopfion alpha={}", record.alpha))?;
        }
        // the row goes last so a listed alpha always has its checkpoint
        self.csv.write(record)?;
        Ok(())
    }
}

pub fn ensure_dir(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)
}
