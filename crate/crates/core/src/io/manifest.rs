//! Pairing manifests: CSV files with header `sample_id,truth,pred`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 3] = ["sample_id", "truth", "pred"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub sample_id: String,
    pub truth_path: PathBuf,
    pub pred_path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    /// Directory relative paths were resolved against.
    pub base_dir: PathBuf,
    /// Entries in file order.
    pub entries: Vec<ManifestEntry>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| match source.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            kind => Error::MalformedHeader {
                path: path.to_path_buf(),
                reason: format!("{kind:?}"),
            },
        })?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!(
                "expected `{}`, found `{}`",
                MANIFEST_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let field = |idx: usize| record.get(idx).unwrap_or_default();
        let (sample_id, truth, pred) = (field(0), field(1), field(2));
        if sample_id.is_empty() || truth.is_empty() || pred.is_empty() {
            return Err(Error::MalformedData {
                path: path.to_path_buf(),
                reason: format!("row {} has an empty field", line + 2),
            });
        }
        if !seen.insert(sample_id.to_string()) {
            return Err(Error::DuplicateSampleId(sample_id.to_string()));
        }
        entries.push(ManifestEntry {
            sample_id: sample_id.to_string(),
            truth_path: base_dir.join(truth),
            pred_path: base_dir.join(pred),
        });
    }
    if entries.is_empty() {
        return Err(Error::EmptyManifest(path.to_path_buf()));
    }
    Ok(Manifest { base_dir, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn manifest(contents: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.csv");
        fs::write(&path, contents).unwrap();
        (dir, path)
    }

    #[test]
    fn entries_in_file_order_with_resolved_paths() {
        let (dir, path) = manifest("sample_id,truth,pred\nb,t/b.pgm,p/b.pgm\na,/abs/t.pgm,p/a.pgm\n");
        let m = read_manifest(&path).unwrap();
        assert_eq!(m.base_dir, dir.path());
        let ids: Vec<_> = m.entries.iter().map(|e| e.sample_id.as_str()).collect();
        assert_eq!(ids, ["b", "a"]);
        assert_eq!(m.entries[0].truth_path, dir.path().join("t/b.pgm"));
        assert_eq!(m.entries[1].truth_path, PathBuf::from("/abs/t.pgm"));
    }

    #[test]
    fn duplicate_ids() {
        let (_dir, path) = manifest("sample_id,truth,pred\na,t,p\na,t2,p2\n");
        assert!(matches!(read_manifest(&path), Err(Error::DuplicateSampleId(id)) if id == "a"));
    }

    #[test]
    fn header_only() {
        let (_dir, path) = manifest("sample_id,truth,pred\n");
        assert!(matches!(read_manifest(&path), Err(Error::EmptyManifest(_))));
    }

    #[test]
    fn wrong_header() {
        let (_dir, path) = manifest("id,gt,prediction\na,t,p\n");
        assert!(matches!(read_manifest(&path), Err(Error::MalformedHeader { .. })));
    }

    #[test]
    fn empty_field() {
        let (_dir, path) = manifest("sample_id,truth,pred\na,,p\n");
        assert!(matches!(read_manifest(&path), Err(Error::MalformedData { .. })));
    }
}
