use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tracklet_refine::formats::{assemble_boxes, decode_sequence, encode_sequence, parse_mot};
use tracklet_refine::{Error, TrackSet};

/// A failure carrying the process exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Data(String),
    Config(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Data(_) => 1,
            Failure::Config(_) => 2,
        }
    }

    /// Classifies a library error, prefixing the file it came from.
    pub fn from_core(context: impl fmt::Display, err: Error) -> Self {
        let message = format!("{context}: {err}");
        match err {
            Error::InvalidConfig(_) | Error::InfeasibleGeometry { .. } => Failure::Config(message),
            _ => Failure::Data(message),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Data(m) | Failure::Config(m) => f.write_str(m),
        }
    }
}

pub fn sibling(path: &Path, extension: &str) -> PathBuf {
    path.with_extension(extension)
}

fn sequence_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Loads a tracking file and its embedding file. Parse errors name the
/// tracking file; structural errors in the binary name the embedding file.
pub fn load_sequence(txt: &Path, emb: &Path) -> Result<TrackSet, Failure> {
    let text = read_text(txt)?;
    let bytes = read_bytes(emb)?;
    decode_sequence(&sequence_name(txt), &text, &bytes).map_err(|e| {
        let blame = match e {
            Error::BadMagic | Error::UnsupportedVersion(_) | Error::TruncatedFile { .. } => emb,
            _ => txt,
        };
        Failure::from_core(blame.display(), e)
    })
}

/// Loads a tracking file with no embeddings, for evaluation.
pub fn load_boxes(txt: &Path) -> Result<TrackSet, Failure> {
    let text = read_text(txt)?;
    let context = txt.display();
    let rows = parse_mot(&text).map_err(|e| Failure::from_core(&context, e))?;
    assemble_boxes(&sequence_name(txt), &rows).map_err(|e| Failure::from_core(&context, e))
}

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let fail = |e: std::io::Error| Failure::Data(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Writes `<out>` and its sibling `.emb`.
pub fn store_sequence(ts: &TrackSet, out: &Path) -> Result<(), Failure> {
    let (text, bytes) = encode_sequence(ts);
    write_atomic(out, text.as_bytes())?;
    write_atomic(&sibling(out, "emb"), &bytes)
}

/// Every `*.txt` in `dir` that has a sibling `*.emb`, sorted by path.
pub fn paired_inputs(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>, Failure> {
    let entries =
        fs::read_dir(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    let mut pairs = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?
            .path();
        if path.extension().is_some_and(|x| x == "txt") {
            let emb = sibling(&path, "emb");
            if emb.is_file() {
                pairs.push((path, emb));
            }
        }
    }
    pairs.sort();
    Ok(pairs)
}
