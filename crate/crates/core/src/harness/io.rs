use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use super::{HarnessError, RunOutput};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary file in the target directory, then renames
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// File layout of one run inside an output directory.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub metrics_csv: PathBuf,
    pub metrics_json: PathBuf,
    pub checkpoint: PathBuf,
    pub heatmap_csv: PathBuf,
    pub heatmap_json: PathBuf,
    pub heatmap_ppm: PathBuf,
}

impl RunArtifacts {
    /// `<env>_<mode>_<tag>_seed<seed>.*` under `dir`.
    pub fn for_run(dir: &Path, out: &RunOutput) -> RunArtifacts {
        let m = &out.metrics;
        let stem = format!("{}_{}_{}_seed{}", m.env, m.mode, m.tag, out.seed);
        let file = |suffix: &str| dir.join(format!("{stem}.{suffix}"));
        RunArtifacts {
            metrics_csv: file("metrics.csv"),
            metrics_json: file("metrics.json"),
            checkpoint: file("ckpt"),
            heatmap_csv: file("heatmap.csv"),
            heatmap_json: file("heatmap.json"),
            heatmap_ppm: file("heatmap.ppm"),
        }
    }

    pub fn write(&self, out: &RunOutput) -> Result<(), HarnessError> {
        write_atomic(&self.metrics_csv, &out.metrics.to_csv())?;
        write_atomic(&self.metrics_json, out.metrics.to_json().as_bytes())?;
        write_atomic(&self.checkpoint, &out.checkpoint.to_bytes())?;
        if !out.heatmap.counts.is_empty() {
            write_atomic(&self.heatmap_csv, &out.heatmap.to_csv())?;
            let json = serde_json::to_string_pretty(&out.heatmap).expect("heatmap serializes");
            write_atomic(&self.heatmap_json, json.as_bytes())?;
            write_atomic(&self.heatmap_ppm, &out.heatmap.to_ppm())?;
        }
        Ok(())
    }
}
