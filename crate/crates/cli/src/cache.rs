//! On-disk cache of pipeline step results, keyed by a content hash of the
//! operation and its input matrices.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use bmlp::datalog::{load_matrix, write_matrix};
use bmlp::engine::{Op, StepCache};
use bmlp::{BitMatrix, SymbolTable};
use sha2::{Digest, Sha256};

pub struct DiskCache<'a> {
    dir: PathBuf,
    symbols: &'a SymbolTable,
    pub hits: usize,
    pub misses: usize,
}

impl<'a> DiskCache<'a> {
    pub fn open(dir: &Path, symbols: &'a SymbolTable) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(DiskCache {
            dir: dir.to_path_buf(),
            symbols,
            hits: 0,
            misses: 0,
        })
    }

    pub fn key(op: &Op, inputs: &[&BitMatrix]) -> String {
        let mut h = Sha256::new();
        h.update(op.keyword().as_bytes());
        for m in inputs {
            h.update(b"|");
            h.update((m.rows() as u64).to_le_bytes());
            h.update((m.cols() as u64).to_le_bytes());
            for i in 0..m.rows() {
                for w in m.row_words(i) {
                    h.update(w.to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.bmlp"))
    }

    fn write(&self, path: &Path, m: &BitMatrix) -> bmlp::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        write_matrix(tmp.as_file_mut(), m, self.symbols)?;
        tmp.as_file_mut().flush()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }
}

impl StepCache for DiskCache<'_> {
    fn lookup(&mut self, op: &Op, inputs: &[&BitMatrix]) -> Option<BitMatrix> {
        let path = self.path(&Self::key(op, inputs));
        match load_matrix(&path) {
            Ok((m, st)) if st.len() == self.symbols.len() => {
                self.hits += 1;
                Some(m)
            }
            _ => {
                self.misses += 1;
                None
            }
        }
    }

    fn store(&mut self, op: &Op, inputs: &[&BitMatrix], output: &BitMatrix) {
        let path = self.path(&Self::key(op, inputs));
        if let Err(e) = self.write(&path, output) {
            eprintln!("warning: could not cache {}: {e}", path.display());
        }
    }
}
