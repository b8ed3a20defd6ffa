use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One corpus row. Only `image_path` is mandatory in the file; `image_id` defaults to the
/// file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub image_id: String,
    pub image_path: PathBuf,
    pub truth_path: Option<PathBuf>,
    pub split: Option<String>,
    pub kind: Option<String>,
    pub camera: Option<String>,
}

impl ManifestRow {
    pub fn is_train(&self) -> bool {
        self.split.as_deref() == Some("train")
    }
}

/// Reads a headered CSV manifest; relative paths resolve against its directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let headers = rd.headers().map_err(csv_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let ci = col("image_path").ok_or_else(|| Error::format(path, "manifest has no image_path column"))?;
    let (cid, ct, cs, ck, cc) = (col("image_id"), col("truth_path"), col("split"), col("kind"), col("camera"));
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let opt = |c: Option<usize>| c.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()).map(str::to_string);
        let image = opt(Some(ci)).ok_or_else(|| Error::format(path, "row without image_path"))?;
        let image_path = base.join(&image);
        let image_id = opt(cid).unwrap_or_else(|| {
            Path::new(&image)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or(image.clone())
        });
        if !seen.insert(image_id.clone()) {
            return Err(Error::format(path, format!("duplicate image_id {image_id}")));
        }
        rows.push(ManifestRow {
            image_id,
            image_path,
            truth_path: opt(ct).map(|t| base.join(t)),
            split: opt(cs),
            kind: opt(ck),
            camera: opt(cc),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_columns_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "image_path,truth_path\nimgs/a.png,masks/a.png\nimgs/b.ppm,\n").unwrap();
        let rows = read_manifest(&p).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].image_id, "a");
        assert_eq!(rows[0].image_path, dir.path().join("imgs/a.png"));
        assert_eq!(rows[0].truth_path, Some(dir.path().join("masks/a.png")));
        assert_eq!(rows[1].truth_path, None);
        assert!(!rows[0].is_train());

        std::fs::write(&p, "image_id,image_path\nx,a.png\nx,b.png\n").unwrap();
        assert!(read_manifest(&p).is_err());
        std::fs::write(&p, "image_id\nx\n").unwrap();
        assert!(read_manifest(&p).is_err());
    }
}
