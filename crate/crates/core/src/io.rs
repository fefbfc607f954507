//! Binary model files and text vector export.
//!
//! Model file layout, all integers and floats little-endian:
//!
//! ```text
//! magic "S2VM" | u32 version | u32 dim | u64 vocab_len | u64 buckets
//! u32 word_ngrams | f64 subsample | u64 total_tokens
//! per word:   u32 byte_len | UTF-8 bytes | u64 count
//! source rows 0..vocab_len+buckets as f32
//! target rows 0..vocab_len as f32
//! ```

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::corpus::{Vocabulary, WordEntry};
use crate::error::{Error, Result};
use crate::model::EmbeddingMatrices;
use crate::trainer::Model;

pub const MAGIC: &[u8; 4] = b"S2VM";
pub const VERSION: u32 = 1;
/// Bytes before the vocabulary section.
pub const HEADER_LEN: u64 = 48;

/// Size in bytes of the serialized model.
pub fn encoded_len(model: &Model) -> u64 {
    let words: u64 = model
        .vocab
        .entries()
        .iter()
        .map(|e| 4 + e.word.len() as u64 + 8)
        .sum();
    let floats = model.matrices.source().len() + model.matrices.target().len();
    HEADER_LEN + words + 4 * floats as u64
}

pub fn write_model<W: Write>(model: &Model, mut w: W) -> Result<()> {
    let m = &model.matrices;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.dim() as u32).to_le_bytes())?;
    w.write_all(&(m.vocab_len() as u64).to_le_bytes())?;
    w.write_all(&(m.buckets() as u64).to_le_bytes())?;
    w.write_all(&(model.word_ngrams as u32).to_le_bytes())?;
    w.write_all(&model.subsample.to_le_bytes())?;
    w.write_all(&model.vocab.total_tokens().to_le_bytes())?;
    for entry in model.vocab.entries() {
        w.write_all(&(entry.word.len() as u32).to_le_bytes())?;
        w.write_all(entry.word.as_bytes())?;
        w.write_all(&entry.count.to_le_bytes())?;
    }
    write_f32s(&mut w, m.source())?;
    write_f32s(&mut w, m.target())?;
    w.flush()?;
    Ok(())
}

fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(4 * 4096);
    for chunk in values.chunks(4096) {
        buf.clear();
        for x in chunk {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

struct SectionReader<R> {
    inner: R,
}

impl<R: Read> SectionReader<R> {
    fn bytes(&mut self, buf: &mut [u8], section: &'static str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::Truncated { section },
            _ => Error::Io(e),
        })
    }

    fn u32(&mut self, section: &'static str) -> Result<u32> {
        let mut b = [0; 4];
        self.bytes(&mut b, section)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self, section: &'static str) -> Result<u64> {
        let mut b = [0; 8];
        self.bytes(&mut b, section)?;
        Ok(u64::from_le_bytes(b))
    }

    fn f64(&mut self, section: &'static str) -> Result<f64> {
        let mut b = [0; 8];
        self.bytes(&mut b, section)?;
        Ok(f64::from_le_bytes(b))
    }

    fn f32s(&mut self, n: usize, section: &'static str) -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(n);
        let mut buf = vec![0u8; 4 * 4096];
        let mut left = n;
        while left > 0 {
            let take = left.min(4096);
            let bytes = &mut buf[..4 * take];
            self.bytes(bytes, section)?;
            out.extend(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())));
            left -= take;
        }
        Ok(out)
    }
}

fn to_usize(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Incompatible(format!("{what} {v} too large")))
}

pub fn read_model<R: Read>(r: R) -> Result<Model> {
    let mut r = SectionReader { inner: r };
    let mut magic = [0; 4];
    r.bytes(&mut magic, "header")?;
    if &magic != MAGIC {
        return Err(Error::Incompatible(format!(
            "bad magic {magic:?}, expected \"S2VM\""
        )));
    }
    let version = r.u32("header")?;
    if version != VERSION {
        return Err(Error::Incompatible(format!(
            "S2VM version {version} unsupported, expected {VERSION}"
        )));
    }
    let dim = r.u32("header")? as usize;
    let vocab_len = to_usize(r.u64("header")?, "vocabulary size")?;
    let buckets = to_usize(r.u64("header")?, "bucket count")?;
    let word_ngrams = r.u32("header")? as usize;
    let subsample = r.f64("header")?;
    let total_tokens = r.u64("header")?;
    if dim == 0 || word_ngrams == 0 {
        return Err(Error::Incompatible("dimension and n-gram order must be ≥ 1".into()));
    }
    if word_ngrams > 1 && buckets == 0 {
        return Err(Error::Incompatible("n-gram model without buckets".into()));
    }

    let mut words = Vec::with_capacity(vocab_len.min(1 << 20));
    for _ in 0..vocab_len {
        let len = r.u32("vocabulary")? as usize;
        let mut bytes = vec![0; len];
        r.bytes(&mut bytes, "vocabulary")?;
        let word = String::from_utf8(bytes)
            .map_err(|e| Error::Incompatible(format!("vocabulary word is not UTF-8: {e}")))?;
        let count = r.u64("vocabulary")?;
        words.push(WordEntry { word, count });
    }
    // Thresholds are not persisted; the smallest stored count is the tightest
    // bound that holds for every word.
    let min_count = words.last().map_or(1, |e| e.count.max(1));
    let vocab = Vocabulary::from_entries(words, total_tokens, min_count, min_count)?;

    let source = r.f32s((vocab_len + buckets) * dim, "source matrix")?;
    let target = r.f32s(vocab_len * dim, "target matrix")?;
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(Error::Incompatible("trailing bytes after S2VM target matrix".into()));
    }
    let matrices = EmbeddingMatrices::from_parts(source, target, dim, vocab_len, buckets)?;
    Ok(Model {
        vocab,
        matrices,
        word_ngrams,
        subsample,
        lowercase: false,
    })
}

/// Writes the model through a temporary file in the same directory and
/// renames it into place.
pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(io::Error::new(ErrorKind::InvalidInput, "model path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = File::create(&tmp)
        .map_err(Error::from)
        .and_then(|f| write_model(model, BufWriter::new(f)))
        .and_then(|()| fs::rename(&tmp, path).map_err(Error::from));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    read_model(BufReader::new(File::open(path)?))
}

/// Formats a float with 6 significant digits, like C's `%g`.
pub fn format_g6(x: impl Into<f64>) -> String {
    let x: f64 = x.into();
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `"<count> <dim>"` followed by one line per vocabulary word with its
/// source vector.
pub fn write_text_vectors<W: Write>(model: &Model, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", model.vocab.len(), model.dim())?;
    for (id, entry) in model.vocab.entries().iter().enumerate() {
        w.write_all(entry.word.as_bytes())?;
        for &x in model.matrices.source_row(id as u32) {
            write!(w, " {}", format_g6(x))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_text_vectors(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    write_text_vectors(model, BufWriter::new(File::create(path)?))
}
