//! Model files.
//!
//! Text: a header line
//! `#gauss-embed v1 V=<V> D=<D> cov=spherical b1=<f> b2=<f>` followed by one
//! `word mean_1 ... mean_D sigma` line per word, floats printed with 17
//! significant digits.
//!
//! Binary (little-endian): magic `GEMB`, `u32` version, `u64` V, `u64` D,
//! `u8` covariance kind (0 = spherical), `f64` b1, `f64` b2, then per word a
//! `u32` byte length, the UTF-8 word, D `f64` means and one `f64` sigma.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::trainer::EmbeddingMatrix;
use crate::Scalar;

const TEXT_MAGIC: &str = "#gauss-embed";
const BINARY_MAGIC: &[u8; 4] = b"GEMB";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unsupported model format or version: {0}")]
    Version(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("truncated model file at byte offset {offset}")]
    Truncated { offset: usize },
    #[error("word {word:?}: {msg}")]
    Invariant { word: String, msg: String },
    #[error("inconsistent model: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Text,
    Binary,
}

impl FromStr for ModelFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ModelFormat::Text),
            "binary" => Ok(ModelFormat::Binary),
            _ => Err(format!("unknown model format {s:?} (expected text|binary)")),
        }
    }
}

/// Word list plus parameters; what a model file holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<F> {
    pub words: Vec<String>,
    index: HashMap<String, u32>,
    pub params: EmbeddingMatrix<F>,
}

impl<F: Scalar> Model<F> {
    pub fn new(words: Vec<String>, params: EmbeddingMatrix<F>) -> Result<Self, ModelError> {
        if words.len() != params.n_words() {
            return Err(ModelError::Inconsistent(format!(
                "{} words for {} embedding rows",
                words.len(),
                params.n_words()
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(|c| c == ' ' || c == '\n' || c == '\r') {
                return Err(ModelError::Invariant {
                    word: w.clone(),
                    msg: "words must be non-empty and contain no spaces or newlines".into(),
                });
            }
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(ModelError::Invariant {
                    word: w.clone(),
                    msg: "duplicate word".into(),
                });
            }
        }
        for (i, w) in words.iter().enumerate() {
            let s = params.sigmas[i];
            if !(s > F::zero()) || !s.is_finite() {
                return Err(ModelError::Invariant {
                    word: w.clone(),
                    msg: format!("sigma {s} must be positive and finite"),
                });
            }
            if params.mean(i as u32).iter().any(|m| !m.is_finite()) {
                return Err(ModelError::Invariant {
                    word: w.clone(),
                    msg: "non-finite mean component".into(),
                });
            }
        }
        if !params.bias1.is_finite() || !params.bias2.is_finite() {
            return Err(ModelError::Inconsistent("non-finite bias".into()));
        }
        Ok(Model {
            words,
            index,
            params,
        })
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn write_text(&self, mut out: impl Write) -> io::Result<()> {
        let p = &self.params;
        writeln!(
            out,
            "{TEXT_MAGIC} v{VERSION} V={} D={} cov=spherical b1={:.16e} b2={:.16e}",
            self.words.len(),
            p.dim(),
            p.bias1.as_f64(),
            p.bias2.as_f64()
        )?;
        for (i, w) in self.words.iter().enumerate() {
            out.write_all(w.as_bytes())?;
            for m in p.mean(i as u32) {
                write!(out, " {:.16e}", m.as_f64())?;
            }
            writeln!(out, " {:.16e}", p.sigmas[i].as_f64())?;
        }
        Ok(())
    }

    pub fn write_binary(&self, mut out: impl Write) -> io::Result<()> {
        let p = &self.params;
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.words.len() as u64).to_le_bytes())?;
        out.write_all(&(p.dim() as u64).to_le_bytes())?;
        out.write_all(&[0u8])?;
        out.write_all(&p.bias1.as_f64().to_le_bytes())?;
        out.write_all(&p.bias2.as_f64().to_le_bytes())?;
        for (i, w) in self.words.iter().enumerate() {
            out.write_all(&(w.len() as u32).to_le_bytes())?;
            out.write_all(w.as_bytes())?;
            for m in p.mean(i as u32) {
                out.write_all(&m.as_f64().to_le_bytes())?;
            }
            out.write_all(&p.sigmas[i].as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self, format: ModelFormat) -> Vec<u8> {
        let mut buf = Vec::new();
        match format {
            ModelFormat::Text => self.write_text(&mut buf),
            ModelFormat::Binary => self.write_binary(&mut buf),
        }
        .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn cast<G: Scalar>(&self) -> Model<G> {
        Model {
            words: self.words.clone(),
            index: self.index.clone(),
            params: self.params.cast(),
        }
    }
}

pub fn save_model<F: Scalar>(
    model: &Model<F>,
    path: &Path,
    format: ModelFormat,
) -> Result<(), ModelError> {
    let io_err = |source| ModelError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    match format {
        ModelFormat::Text => model.write_text(&mut out),
        ModelFormat::Binary => model.write_binary(&mut out),
    }
    .and_then(|_| out.flush())
    .map_err(io_err)
}

/// Loads either format, detected from the leading bytes.
pub fn load_model(path: &Path) -> Result<Model<f64>, ModelError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| ModelError::Io {
            path: path.to_owned(),
            source,
        })?;
    parse_model(&bytes)
}

pub fn parse_model(bytes: &[u8]) -> Result<Model<f64>, ModelError> {
    if bytes.starts_with(BINARY_MAGIC) {
        parse_binary(bytes)
    } else if bytes.starts_with(TEXT_MAGIC.as_bytes()) {
        parse_text(bytes)
    } else {
        Err(ModelError::Version("unrecognised file header".into()))
    }
}

fn header_field<'a>(fields: &[&'a str], key: &str) -> Result<&'a str, ModelError> {
    fields
        .iter()
        .find_map(|f| f.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| ModelError::Parse {
            line: 1,
            msg: format!("header lacks {key}="),
        })
}

fn parse_num<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T, ModelError> {
    s.parse().map_err(|_| ModelError::Parse {
        line,
        msg: format!("bad {what} {s:?}"),
    })
}

fn parse_text(bytes: &[u8]) -> Result<Model<f64>, ModelError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ModelError::Parse {
        line: 1 + bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count(),
        msg: "invalid UTF-8".into(),
    })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.first() != Some(&TEXT_MAGIC) || fields.get(1) != Some(&"v1") {
        return Err(ModelError::Version(header.chars().take(64).collect()));
    }
    let v: usize = parse_num(header_field(&fields, "V")?, 1, "V")?;
    let d: usize = parse_num(header_field(&fields, "D")?, 1, "D")?;
    let cov = header_field(&fields, "cov")?;
    if cov != "spherical" {
        return Err(ModelError::Version(format!("covariance kind {cov:?}")));
    }
    let b1: f64 = parse_num(header_field(&fields, "b1")?, 1, "b1")?;
    let b2: f64 = parse_num(header_field(&fields, "b2")?, 1, "b2")?;
    if d == 0 {
        return Err(ModelError::Parse {
            line: 1,
            msg: "D must be positive".into(),
        });
    }
    let mut words = Vec::new();
    let mut means = Vec::new();
    let mut sigmas = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        if words.len() == v {
            if line.is_empty() {
                continue;
            }
            return Err(ModelError::Parse {
                line: n,
                msg: format!("more than V={v} records"),
            });
        }
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != d + 2 {
            return Err(ModelError::Parse {
                line: n,
                msg: format!(
                    "expected word, {d} means and sigma; got {} fields",
                    parts.len()
                ),
            });
        }
        for p in &parts[1..=d] {
            means.push(parse_num::<f64>(p, n, "mean")?);
        }
        sigmas.push(parse_num::<f64>(parts[d + 1], n, "sigma")?);
        words.push(parts[0].to_owned());
    }
    if words.len() != v {
        return Err(ModelError::Parse {
            line: words.len() + 2,
            msg: format!("header promises V={v} records, found {}", words.len()),
        });
    }
    Model::new(words, EmbeddingMatrix::new(d, means, sigmas, b1, b2))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(ModelError::Truncated {
                offset: self.bytes.len(),
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

fn parse_binary(bytes: &[u8]) -> Result<Model<f64>, ModelError> {
    let mut c = Cursor { bytes, pos: 4 };
    let version = c.u32()?;
    if version != VERSION {
        return Err(ModelError::Version(format!("binary version {version}")));
    }
    let v = c.u64()?;
    let d = c.u64()?;
    let cov = c.take(1)?[0];
    if cov != 0 {
        return Err(ModelError::Version(format!("covariance kind {cov}")));
    }
    if d == 0 {
        return Err(ModelError::Inconsistent("D must be positive".into()));
    }
    let b1 = c.f64()?;
    let b2 = c.f64()?;
    // Every record needs at least 4 + 8 (D + 1) bytes; reject impossible headers
    // before allocating.
    let min_record = (d as u128 + 1) * 8 + 4;
    if (v as u128) * min_record > (bytes.len() - c.pos) as u128 {
        return Err(ModelError::Truncated {
            offset: bytes.len(),
        });
    }
    let (v, d) = (v as usize, d as usize);
    let mut words = Vec::with_capacity(v);
    let mut means = Vec::with_capacity(v * d);
    let mut sigmas = Vec::with_capacity(v);
    for _ in 0..v {
        let start = c.pos;
        let len = c.u32()? as usize;
        let word = std::str::from_utf8(c.take(len)?).map_err(|_| ModelError::Parse {
            line: 0,
            msg: format!("invalid UTF-8 word at byte offset {start}"),
        })?;
        words.push(word.to_owned());
        for _ in 0..d {
            means.push(c.f64()?);
        }
        sigmas.push(c.f64()?);
    }
    if c.pos != bytes.len() {
        return Err(ModelError::Inconsistent(format!(
            "{} trailing bytes after the last record",
            bytes.len() - c.pos
        )));
    }
    Model::new(words, EmbeddingMatrix::new(d, means, sigmas, b1, b2))
}
