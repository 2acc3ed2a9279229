//! `<name>.meta.json` + `<name>.f64` dataset files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Coefficients, IcFamily, Mesh, NormMode, PdeDataset, PdeKind, Physics, Sample};
use crate::error::{Error, Result};

pub const DS_MAGIC: &str = "RFAE-DS";
pub const DS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ArrayKind {
    Phi0,
    Snapshot,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    sample: usize,
    kind: ArrayKind,
    /// Snapshot index within the sample (0 for `phi0`).
    index: usize,
    /// Offset and length in float64 elements.
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct SampleMeta {
    params: Coefficients,
    scale: f64,
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    magic: String,
    version: u32,
    pde: PdeKind,
    family: IcFamily,
    mesh: Mesh,
    time_grid: Vec<f64>,
    physics: Physics,
    normalization: NormMode,
    seed: u64,
    samples: Vec<SampleMeta>,
    element_count: usize,
    manifest: Vec<ManifestEntry>,
}

/// `(meta, payload)` paths. A directory maps to `dir/dataset.*`; a path
/// ending in `.meta.json` or `.f64` is stripped to its prefix.
pub fn dataset_paths(path: &Path) -> (PathBuf, PathBuf) {
    let s = path.to_string_lossy();
    let prefix = if path.is_dir() || s.ends_with('/') {
        path.join("dataset")
    } else if let Some(p) = s.strip_suffix(".meta.json").or_else(|| s.strip_suffix(".f64")) {
        PathBuf::from(p)
    } else {
        path.to_path_buf()
    };
    let p = prefix.to_string_lossy();
    (PathBuf::from(format!("{p}.meta.json")), PathBuf::from(format!("{p}.f64")))
}

pub fn write_dataset(ds: &PdeDataset, path: &Path) -> Result<()> {
    ds.validate()?;
    let (meta_path, data_path) = dataset_paths(path);
    if let Some(dir) = meta_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut manifest = Vec::new();
    let mut bytes = Vec::new();
    let mut offset = 0;
    let mut push = |sample: usize, kind: ArrayKind, index: usize, values: &[f64], manifest: &mut Vec<ManifestEntry>| {
        manifest.push(ManifestEntry { sample, kind, index, offset, len: values.len() });
        offset += values.len();
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    };
    for (i, s) in ds.samples.iter().enumerate() {
        push(i, ArrayKind::Phi0, 0, &s.phi0, &mut manifest);
        for (k, snap) in s.snapshots.iter().enumerate() {
            push(i, ArrayKind::Snapshot, k, snap, &mut manifest);
        }
    }
    let header = Header {
        magic: DS_MAGIC.into(),
        version: DS_VERSION,
        pde: ds.pde,
        family: ds.family.clone(),
        mesh: ds.mesh,
        time_grid: ds.time_grid.clone(),
        physics: ds.physics.clone(),
        normalization: ds.normalization,
        seed: ds.seed,
        samples: ds
            .samples
            .iter()
            .map(|s| SampleMeta { params: s.params.clone(), scale: s.scale, times: s.times.clone() })
            .collect(),
        element_count: offset,
        manifest,
    };
    fs::write(&meta_path, serde_json::to_string_pretty(&header)?)?;
    fs::write(&data_path, bytes)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<PdeDataset> {
    let (meta_path, data_path) = dataset_paths(path);
    let text = fs::read_to_string(&meta_path)?;
    let header: Header =
        serde_json::from_str(&text).map_err(|e| Error::format(&meta_path, format!("bad header: {e}")))?;
    if header.magic != DS_MAGIC {
        return Err(Error::format(&meta_path, format!("magic `{}` is not {DS_MAGIC}", header.magic)));
    }
    if header.version != DS_VERSION {
        return Err(Error::format(&meta_path, format!("unsupported version {}", header.version)));
    }
    let bytes = match fs::read(&data_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    if bytes.len() != 8 * header.element_count {
        return Err(Error::format(
            &data_path,
            format!("payload has {} bytes, header declares {} values (truncated?)", bytes.len(), header.element_count),
        ));
    }
    let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mut samples: Vec<Sample> = header
        .samples
        .into_iter()
        .map(|m| Sample {
            params: m.params,
            phi0: Vec::new(),
            snapshots: vec![Vec::new(); m.times.len()],
            times: m.times,
            scale: m.scale,
        })
        .collect();
    for e in &header.manifest {
        let end = e.offset.checked_add(e.len).filter(|&end| end <= values.len());
        let slice = end
            .map(|end| values[e.offset..end].to_vec())
            .ok_or_else(|| Error::format(&data_path, format!("manifest entry at offset {} overruns payload", e.offset)))?;
        let s = samples
            .get_mut(e.sample)
            .ok_or_else(|| Error::format(&meta_path, format!("manifest names missing sample {}", e.sample)))?;
        match e.kind {
            ArrayKind::Phi0 => s.phi0 = slice,
            ArrayKind::Snapshot => {
                *s.snapshots
                    .get_mut(e.index)
                    .ok_or_else(|| Error::format(&meta_path, format!("snapshot index {} out of range", e.index)))? = slice
            }
        }
    }
    let ds = PdeDataset {
        pde: header.pde,
        family: header.family,
        mesh: header.mesh,
        time_grid: header.time_grid,
        physics: header.physics,
        normalization: header.normalization,
        seed: header.seed,
        samples,
    };
    ds.validate().map_err(|e| Error::format(&meta_path, e.to_string()))?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::super::{generate, FamilyId, GenSpec};
    use super::*;

    #[test]
    fn round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = GenSpec::new(PdeKind::Burgers, FamilyId::A1, 3, 9);
        spec.nt = 5;
        let ds = generate(&spec).unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
        let (meta, data) = dataset_paths(dir.path());
        assert!(meta.ends_with("dataset.meta.json"));
        let bytes = fs::read(&data).unwrap();
        assert_eq!(bytes.len(), 8 * 3 * 6 * 100);
        fs::write(&data, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Format { .. })));
        fs::remove_file(&data).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = GenSpec::new(PdeKind::Burgers, FamilyId::A1, 1, 2);
        spec.nt = 2;
        write_dataset(&generate(&spec).unwrap(), dir.path()).unwrap();
        let (meta, _) = dataset_paths(dir.path());
        let text = fs::read_to_string(&meta).unwrap().replace(DS_MAGIC, "NOPE");
        fs::write(&meta, text).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Format { .. })));
    }
}
