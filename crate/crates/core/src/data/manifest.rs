//! Tab-separated dataset manifests: `image_path<TAB>label[<TAB>mask_path]`
//! per line. Relative paths are resolved against the manifest's directory;
//! blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ppm::read_ppm;
use crate::error::{Error, Result};
use crate::geometry::ImageBuffer;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub image_path: PathBuf,
    pub label: bool,
    pub mask_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    root: PathBuf,
    records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, records: Vec<ManifestRecord>) -> Self {
        Self {
            root: root.into(),
            records,
        }
    }

    pub fn parse(text: &str, root: impl Into<PathBuf>, source: &Path) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| Error::Parse {
                path: source.to_path_buf(),
                line: i + 1,
                message,
            };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(err(format!("expected 2 or 3 tab-separated fields, found {}", fields.len())));
            }
            if fields[0].is_empty() {
                return Err(err("empty image path".into()));
            }
            let label = match fields[1].trim() {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("label must be 0 or 1, found '{other}'"))),
            };
            let mask_path = match fields.get(2) {
                Some(&"") => return Err(err("empty mask path".into())),
                Some(m) => Some(PathBuf::from(m)),
                None => None,
            };
            records.push(ManifestRecord {
                image_path: PathBuf::from(fields[0]),
                label,
                mask_path,
            });
        }
        Ok(Self::new(root, records))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root, path)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = write!(out, "{}\t{}", r.image_path.display(), u8::from(r.label));
            if let Some(m) = &r.mask_path {
                let _ = write!(out, "\t{}", m.display());
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.label).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn has_masks(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.mask_path.is_some())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.root.join(path)
    }

    pub fn load_image(&self, index: usize) -> Result<ImageBuffer> {
        read_ppm(self.resolve(&self.records[index].image_path))
    }

    /// Single-channel binary mask; its size must match the image.
    pub fn load_mask(&self, index: usize, image: &ImageBuffer) -> Result<Option<ImageBuffer>> {
        let Some(rel) = &self.records[index].mask_path else {
            return Ok(None);
        };
        let path = self.resolve(rel);
        let mask = read_ppm(&path)?.to_gray();
        if (mask.width(), mask.height()) != (image.width(), image.height()) {
            return Err(Error::Dimension(format!(
                "{}: mask is {}x{}, image is {}x{}",
                path.display(),
                mask.width(),
                mask.height(),
                image.width(),
                image.height()
            )));
        }
        let bits = mask.pixels().iter().map(|&m| if m >= 0.5 { 1.0 } else { 0.0 }).collect();
        Ok(Some(ImageBuffer::new(mask.width(), mask.height(), 1, bits)?))
    }
}
