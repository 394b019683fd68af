//! Text persistence for matrices.
//!
//! ```text
//! bmlp-matrix v1
//! name: edge
//! dim: 3 3
//! universe: a b c
//! row 0: 2
//! row 1: 4
//! row 2: 0
//! ```
//!
//! Each row is the lowercase hex of the row read as an integer with bit `j`
//! standing for column `j`; an empty row is `0`. The universe lists the
//! column constants in index order.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use super::{Constant, SymbolTable};
use crate::bitmat::BitMatrix;
use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &str = "bmlp-matrix v1";

const DEFAULT_NAME: &str = "matrix";

fn row_hex(words: &[u64]) -> String {
    let Some(top) = words.iter().rposition(|&w| w != 0) else {
        return "0".to_string();
    };
    let mut s = format!("{:x}", words[top]);
    for w in words[..top].iter().rev() {
        write!(s, "{w:016x}").expect("writing to a String");
    }
    s
}

fn parse_row_hex(hex: &str, words_per_row: usize, line: usize) -> Result<Vec<u64>> {
    let err = |message: String| Error::Format { line, message };
    if hex.is_empty() {
        return Err(err("empty row value".into()));
    }
    if let Some(bad) = hex.chars().find(|c| !matches!(c, '0'..='9' | 'a'..='f')) {
        return Err(err(format!("invalid hex digit `{bad}`")));
    }
    let hex = hex.trim_start_matches('0');
    let needed = hex.len().div_ceil(16);
    if needed > words_per_row {
        return Err(err("row value wider than the column count".into()));
    }
    let mut words = vec![0u64; words_per_row];
    let bytes = hex.as_bytes();
    for (k, chunk) in bytes.rchunks(16).enumerate() {
        let digits = std::str::from_utf8(chunk).expect("ascii hex");
        words[k] = u64::from_str_radix(digits, 16).map_err(|e| err(e.to_string()))?;
    }
    Ok(words)
}

/// Writes `m` in the v1 text format.
pub fn write_matrix<W: Write>(mut out: W, m: &BitMatrix, st: &SymbolTable) -> Result<()> {
    if st.len() != m.cols() {
        return Err(Error::shape("save_matrix", (m.rows(), st.len()), m.dims()));
    }
    let mut text = String::new();
    writeln!(text, "{MATRIX_MAGIC}").unwrap();
    writeln!(text, "name: {}", m.name().unwrap_or(DEFAULT_NAME)).unwrap();
    writeln!(text, "dim: {} {}", m.rows(), m.cols()).unwrap();
    text.push_str("universe:");
    for c in st.universe() {
        text.push(' ');
        text.push_str(c.as_str());
    }
    text.push('\n');
    for i in 0..m.rows() {
        writeln!(text, "row {i}: {}", row_hex(m.row_words(i))).unwrap();
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Saves `m` to `path`, replacing any existing file.
pub fn save_matrix(m: &BitMatrix, st: &SymbolTable, path: impl AsRef<Path>) -> Result<()> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    write_matrix(&mut file, m, st)?;
    file.flush()?;
    Ok(())
}

/// Reads a v1 matrix. The returned table's type name is the matrix name.
pub fn read_matrix<R: BufRead>(input: R) -> Result<(BitMatrix, SymbolTable)> {
    let mut lines = input.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((k, line)) => Ok((k, line?)),
            None => Err(Error::Format {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    };

    let (k, magic) = next("header")?;
    if magic.trim_end() != MATRIX_MAGIC {
        return Err(Error::Format {
            line: k,
            message: format!("expected `{MATRIX_MAGIC}`"),
        });
    }

    let (k, line) = next("name")?;
    let name = field(&line, "name:", k)?.trim().to_string();
    if !super::is_identifier(&name) {
        return Err(Error::Format {
            line: k,
            message: format!("invalid matrix name `{name}`"),
        });
    }

    let (k, line) = next("dim")?;
    let dims: Vec<&str> = field(&line, "dim:", k)?.split_whitespace().collect();
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Format {
            line: k,
            message: format!("invalid dimension `{s}`"),
        })
    };
    let (rows, cols) = match dims.as_slice() {
        [r, c] => (parse_dim(r)?, parse_dim(c)?),
        _ => {
            return Err(Error::Format {
                line: k,
                message: "expected `dim: <rows> <cols>`".into(),
            })
        }
    };

    let (k, line) = next("universe")?;
    let universe = field(&line, "universe:", k)?
        .split_whitespace()
        .map(|c| {
            Constant::new(c).map_err(|_| Error::Format {
                line: k,
                message: format!("invalid constant `{c}`"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if universe.len() != cols {
        return Err(Error::Format {
            line: k,
            message: format!(
                "universe has {} constants but dim says {cols} columns",
                universe.len()
            ),
        });
    }
    let st = SymbolTable::from_universe(name.clone(), universe).map_err(|e| Error::Format {
        line: k,
        message: e.to_string(),
    })?;

    let words_per_row = cols.div_ceil(64);
    let mut data = Vec::with_capacity(rows * words_per_row);
    for i in 0..rows {
        let (k, line) = next(&format!("row {i}")).map_err(|_| Error::Format {
            line: 4 + i + 1,
            message: format!("dim says {rows} rows but the file has {i}"),
        })?;
        let rest = field(&line, "row ", k)?;
        let (index, hex) = rest.split_once(':').ok_or_else(|| Error::Format {
            line: k,
            message: "expected `row <i>: <hex>`".into(),
        })?;
        if index.trim().parse::<usize>().ok() != Some(i) {
            return Err(Error::Format {
                line: k,
                message: format!("expected row {i}"),
            });
        }
        let words = parse_row_hex(hex.trim(), words_per_row, k)?;
        if cols % 64 != 0 && words[words_per_row - 1] >> (cols % 64) != 0 {
            return Err(Error::Format {
                line: k,
                message: format!("row value has bits beyond column {}", cols - 1),
            });
        }
        data.extend(words);
    }
    for (k, line) in lines {
        if !line?.trim().is_empty() {
            return Err(Error::Format {
                line: k,
                message: format!("trailing content after {rows} rows"),
            });
        }
    }

    let m = BitMatrix::from_row_words(rows, cols, data).expect("rows validated above");
    Ok((m.with_name(name), st))
}

/// Loads a matrix file written by [`save_matrix`].
pub fn load_matrix(path: impl AsRef<Path>) -> Result<(BitMatrix, SymbolTable)> {
    read_matrix(BufReader::new(fs::File::open(path)?))
}

fn field<'a>(line: &'a str, prefix: &str, k: usize) -> Result<&'a str> {
    line.strip_prefix(prefix).ok_or_else(|| Error::Format {
        line: k,
        message: format!("expected `{}`", prefix.trim_end()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(n: usize) -> SymbolTable {
        let universe = (0..n)
            .map(|i| Constant::new(format!("c{i}")).unwrap())
            .collect();
        SymbolTable::from_universe("node", universe).unwrap()
    }

    fn round_trip(m: &BitMatrix, st: &SymbolTable) -> (BitMatrix, SymbolTable) {
        let mut buf = Vec::new();
        write_matrix(&mut buf, m, st).unwrap();
        read_matrix(buf.as_slice()).unwrap()
    }

    #[test]
    fn golden_chain_abc() {
        let m = BitMatrix::from_rows(&[[0, 1, 0], [0, 0, 1], [0, 0, 0]]).with_name("edge");
        let universe = ["a", "b", "c"].map(|c| Constant::new(c).unwrap()).to_vec();
        let st = SymbolTable::from_universe("node", universe).unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m, &st).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "bmlp-matrix v1\nname: edge\ndim: 3 3\nuniverse: a b c\nrow 0: 2\nrow 1: 4\nrow 2: 0\n"
        );
        let (back, st2) = read_matrix(text.as_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.name(), Some("edge"));
        assert_eq!(st2.universe(), st.universe());
    }

    #[test]
    fn identity_round_trip() {
        let st = table(3);
        let (back, _) = round_trip(&BitMatrix::identity(3), &st);
        assert_eq!(back, BitMatrix::identity(3));
    }

    #[test]
    fn multi_word_rows() {
        let st = table(130);
        let m = BitMatrix::from_entries(2, 130, [(0, 0), (0, 64), (1, 129)]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m, &st).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("row 0: 10000000000000001\n"), "{text}");
        assert!(
            text.contains("row 1: 200000000000000000000000000000000\n"),
            "{text}"
        );
        assert_eq!(round_trip(&m, &st).0, m);
    }

    #[test]
    fn vector_round_trip() {
        let st = table(5);
        let v = BitMatrix::from_entries(1, 5, [(0, 4)]).with_name("reach");
        let (back, _) = round_trip(&v, &st);
        assert_eq!(back, v);
    }

    fn expect_format_error(text: &str, line: usize) {
        match read_matrix(text.as_bytes()) {
            Err(Error::Format { line: l, .. }) => assert_eq!(l, line, "{text}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_files() {
        expect_format_error("bmlp-matrix v2\n", 1);
        expect_format_error("bmlp-matrix v1\nnom: x\n", 2);
        expect_format_error("bmlp-matrix v1\nname: x\ndim: 3\n", 3);
        expect_format_error("bmlp-matrix v1\nname: x\ndim: 2 2\nuniverse: a\n", 4);
        // dim says 3 rows, only 2 present
        expect_format_error(
            "bmlp-matrix v1\nname: x\ndim: 3 3\nuniverse: a b c\nrow 0: 1\nrow 1: 2\n",
            7,
        );
        expect_format_error(
            "bmlp-matrix v1\nname: x\ndim: 1 3\nuniverse: a b c\nrow 0: 1g\n",
            5,
        );
        expect_format_error(
            "bmlp-matrix v1\nname: x\ndim: 1 3\nuniverse: a b c\nrow 1: 1\n",
            5,
        );
        // bit 3 set in a 3-column matrix
        expect_format_error(
            "bmlp-matrix v1\nname: x\ndim: 1 3\nuniverse: a b c\nrow 0: 8\n",
            5,
        );
        expect_format_error(
            "bmlp-matrix v1\nname: x\ndim: 1 3\nuniverse: a b c\nrow 0: 1\nrow 1: 0\n",
            6,
        );
    }

    proptest! {
        #[test]
        fn save_load_bit_exact(
            (n, bits) in prop_oneof![Just(1usize), Just(63), Just(64), Just(65), 1usize..100]
                .prop_flat_map(|n| (Just(n), prop::collection::vec(any::<bool>(), n * n)))
        ) {
            let m = BitMatrix::from_fn(n, n, |i, j| bits[i * n + j]).with_name("r");
            let st = table(n);
            let (back, st2) = round_trip(&m, &st);
            prop_assert_eq!(back, m);
            prop_assert_eq!(st2.universe(), st.universe());
        }
    }
}
