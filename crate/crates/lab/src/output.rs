//! Output directory management: manifest, ledger CSV, VTK snapshots, and
//! run summaries. Every file emitted through [`OutputDir`] is listed in
//! `manifest.json` so downstream tooling can discover artifacts.

use anyhow::{Context, Result};
use chb_core::evolution::LedgerRow;
use chb_core::grid::ScalarField;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Sink for run artifacts rooted at one directory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    files: &'a [String],
}

impl OutputDir {
    /// Create (or reuse) the output directory.
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn track(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    /// Write raw text and record the file in the manifest.
    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        std::fs::write(self.path(name), text)
            .with_context(|| format!("cannot write {name}"))?;
        self.track(name);
        Ok(())
    }

    /// Serialize `value` as pretty JSON into `name`.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_text(name, &(text + "\n"))
    }

    /// Write the per-step diagnostics ledger as CSV.
    pub fn write_ledger(&mut self, name: &str, rows: &[LedgerRow]) -> Result<()> {
        let mut out = String::new();
        out.push_str(
            "step,t,dt,energy,dissipation,chemotaxis,source_work,lifting_work,energy_defect,\
             mass_lhs,mass_rhs,mass_defect,overshoot,overshoot_l2sq,phi_max_abs,phi_mean,\
             sigma_min,sigma_max,newton_iterations\n",
        );
        for r in rows {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},\
                 {:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                r.step,
                r.t,
                r.dt,
                r.energy,
                r.dissipation,
                r.chemotaxis,
                r.source_work,
                r.lifting_work,
                r.energy_defect,
                r.mass_lhs,
                r.mass_rhs,
                r.mass_defect,
                r.overshoot,
                r.overshoot_l2sq,
                r.phi_max_abs,
                r.phi_mean,
                r.sigma_min,
                r.sigma_max,
                r.newton_iterations,
            ));
        }
        self.write_text(name, &out)
    }

    /// Write one or more cell-centered fields as a legacy-format VTK
    /// structured-points file (ASCII).
    pub fn write_vtk(&mut self, name: &str, fields: &[(&str, &ScalarField)]) -> Result<()> {
        let grid = fields
            .first()
            .expect("write_vtk needs at least one field")
            .1
            .grid;
        let file = File::create(self.path(name))
            .with_context(|| format!("cannot create {name}"))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "chb-lab snapshot")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET STRUCTURED_POINTS")?;
        writeln!(w, "DIMENSIONS {} {} 1", grid.nx, grid.ny)?;
        writeln!(w, "ORIGIN {} {} 0", 0.5 * grid.hx(), 0.5 * grid.hy())?;
        writeln!(w, "SPACING {} {} 1", grid.hx(), grid.hy())?;
        writeln!(w, "POINT_DATA {}", grid.nx * grid.ny)?;
        for (label, field) in fields {
            writeln!(w, "SCALARS {label} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in &field.data {
                writeln!(w, "{v:.17e}")?;
            }
        }
        w.flush()?;
        self.track(name);
        Ok(())
    }

    /// Finalize the manifest (config echo, version, emitted files); call
    /// exactly once at the end of a command.
    pub fn finish_with<C: Serialize>(mut self, config: &C, command: &str) -> Result<()> {
        self.files.sort();
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            files: &self.files,
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(self.path("manifest.json"), text)
            .context("cannot write manifest.json")?;
        Ok(())
    }
}
