//! A directory of `SICDATA 1` files plus `index.txt`.

use std::fs;
use std::path::{Path, PathBuf};

use sicforge_core::heisenberg::FiducialVector;
use sicforge_core::verifier::{sci, verify_sic, SicCertificate};
use sicforge_core::{Error, Result};

use crate::formats::SicData;

pub const INDEX_FILE: &str = "index.txt";

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: String,
    pub d: usize,
    pub source: String,
    pub digits: u32,
    pub max_equiangular_deviation: String,
    pub tightness_deviation: String,
    pub verdict: String,
    /// Free text, e.g. the command line that produced the entry.
    pub created: String,
    pub fiducial: FiducialVector,
}

impl CatalogEntry {
    pub fn new(id: String, source: &str, fiducial: FiducialVector, cert: &SicCertificate, created: &str) -> Self {
        CatalogEntry {
            id,
            d: fiducial.dim(),
            source: source.to_string(),
            digits: fiducial.precision().digits(),
            max_equiangular_deviation: sci(&cert.max_equiangular_deviation),
            tightness_deviation: sci(&cert.tightness_deviation),
            verdict: cert.verdict.as_str().to_string(),
            created: created.to_string(),
            fiducial,
        }
    }

    pub fn to_sicdata(&self) -> SicData {
        let mut data = SicData::new(self.fiducial.clone(), self.source.clone());
        data.extra.insert("id".into(), self.id.clone());
        data.extra
            .insert("max_equiangular_deviation".into(), self.max_equiangular_deviation.clone());
        data.extra.insert("tightness_deviation".into(), self.tightness_deviation.clone());
        data.extra.insert("verdict".into(), self.verdict.clone());
        data.extra.insert("created".into(), self.created.clone());
        data
    }

    pub fn from_sicdata(data: SicData) -> Result<Self> {
        let get = |k: &str| {
            data.extra
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("catalog entry lacks `{k}`"),
                })
        };
        Ok(CatalogEntry {
            id: get("id")?,
            d: data.fiducial.dim(),
            source: data.source.clone(),
            digits: data.fiducial.precision().digits(),
            max_equiangular_deviation: get("max_equiangular_deviation")?,
            tightness_deviation: get("tightness_deviation")?,
            verdict: get("verdict")?,
            created: get("created")?,
            fiducial: data.fiducial,
        })
    }

    /// Re-verifies and checks the stored deviation to within one decimal
    /// digit (`|log10 stored - log10 measured| <= 1`).
    pub fn reverify(&self, tol_digits: u32) -> Result<(SicCertificate, bool)> {
        let cert = verify_sic(&self.fiducial.clone().into_normalized(), tol_digits)?;
        let stored: f64 = self.max_equiangular_deviation.parse().unwrap_or(f64::NAN);
        let measured = cert.max_equiangular_deviation.log10_abs();
        let consistent = if stored == 0.0 {
            cert.max_equiangular_deviation.is_zero()
        } else {
            (stored.log10() - measured).abs() <= 1.0
        };
        Ok((cert, consistent))
    }
}

pub struct Catalog {
    root: PathBuf,
}

impl Catalog {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(root.as_ref())?;
        Ok(Catalog {
            root: root.as_ref().to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, id: &str) -> PathBuf {
        self.root.join(format!("{id}.sic"))
    }

    /// Entry ids in index order.
    pub fn ids(&self) -> Result<Vec<String>> {
        let path = self.root.join(INDEX_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        Ok(fs::read_to_string(path)?
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_whitespace().next().map(str::to_string))
            .collect())
    }

    /// Next free id of the form `d{d}-{source}-{k}`.
    pub fn next_id(&self, d: usize, source: &str) -> Result<String> {
        let prefix = format!("d{d}-{source}-");
        let used = self.ids()?.iter().filter(|id| id.starts_with(&prefix)).count();
        Ok(format!("{prefix}{:03}", used + 1))
    }

    pub fn insert(&self, entry: &CatalogEntry) -> Result<PathBuf> {
        let path = self.entry_path(&entry.id);
        fs::write(&path, entry.to_sicdata().to_text())?;
        let mut ids = self.ids()?;
        if !ids.contains(&entry.id) {
            ids.push(entry.id.clone());
        }
        self.write_index(&ids)?;
        Ok(path)
    }

    pub fn get(&self, id: &str) -> Result<CatalogEntry> {
        let text = fs::read_to_string(self.entry_path(id))?;
        CatalogEntry::from_sicdata(SicData::parse(&text, None)?)
    }

    fn write_index(&self, ids: &[String]) -> Result<()> {
        let mut out = String::from("# id d source digits verdict max_equiangular_deviation\n");
        for id in ids {
            let e = self.get(id)?;
            out.push_str(&format!(
                "{} {} {} {} {} {}\n",
                e.id, e.d, e.source, e.digits, e.verdict, e.max_equiangular_deviation
            ));
        }
        fs::write(self.root.join(INDEX_FILE), out)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sicforge_core::heisenberg::hesse_fiducial;
    use sicforge_core::hpnum::Precision;

    #[test]
    fn write_read_verify() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path()).unwrap();
        let fid = hesse_fiducial(Precision::new(60).unwrap());
        let cert = verify_sic(&fid, 40).unwrap();
        let id = cat.next_id(3, "import").unwrap();
        assert_eq!(id, "d3-import-001");
        cat.insert(&CatalogEntry::new(id.clone(), "import", fid, &cert, "test")).unwrap();
        assert_eq!(cat.next_id(3, "import").unwrap(), "d3-import-002");
        let back = cat.get(&id).unwrap();
        assert_eq!(back.verdict, "pass");
        let (cert2, consistent) = back.reverify(40).unwrap();
        assert!(cert2.verdict.is_pass() && consistent);
        assert_eq!(cat.ids().unwrap(), vec![id]);
    }
}
