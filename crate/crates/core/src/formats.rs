//! Tracking result files (MOTChallenge-style text) and the `GTAE` binary
//! embedding files that accompany them.
//!
//! A sequence is a pair of files sharing a basename, `<seq>.txt` and
//! `<seq>.emb`. Row `i` of the embedding file belongs to data line `i` of the
//! tracking file.
//!
//! Embedding layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size        field
//! 0       4           magic "GTAE"
//! 4       4           version (u32, = 1)
//! 8       4           count   (u32)
//! 12      4           dim     (u32)
//! 16      4*count*dim f32 values, row-major
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::types::{normalize_embedding, BoundingBox, BoxObservation, TrackSet, Tracklet};

pub const EMBEDDING_MAGIC: &[u8; 4] = b"GTAE";
pub const EMBEDDING_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// One data line of a tracking file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRow {
    pub frame: u32,
    pub id: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// Parses tracking text. Rows come back in file order; blank lines are skipped
/// but still count toward line numbers in errors.
pub fn parse_mot(text: &str) -> Result<Vec<MotRow>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        rows.push(parse_line(line, line_no)?);
    }
    Ok(rows)
}

fn parse_line(line: &str, line_no: usize) -> Result<MotRow> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 7 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected at least 7 fields, found {}", fields.len()),
        });
    }
    let int = |i: usize, name: &str| -> Result<u32> {
        fields[i].parse::<u32>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("{name} must be a non-negative integer, got {:?}", fields[i]),
        })
    };
    let real = |i: usize, name: &str| -> Result<f64> {
        fields[i]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("{name} must be a number, got {:?}", fields[i]),
            })
    };
    let frame = int(0, "frame")?;
    let id = int(1, "id")?;
    if id == 0 {
        return Err(Error::Parse {
            line: line_no,
            message: "track id must be positive".into(),
        });
    }
    let (left, top) = (real(2, "bb_left")?, real(3, "bb_top")?);
    let (width, height) = (real(4, "bb_width")?, real(5, "bb_height")?);
    let confidence = real(6, "conf")?;
    for (i, name) in [(7, "x"), (8, "y"), (9, "z")] {
        if i < fields.len() {
            real(i, name)?;
        }
    }
    let bbox = BoundingBox::new(left, top, width, height)
        .ok_or(Error::NonPositiveSize { line: line_no })?;
    Ok(MotRow {
        frame,
        id,
        bbox,
        confidence,
    })
}

/// Serializes a track set, one line per observation sorted by (frame, id),
/// reals at two decimals.
pub fn write_mot(track_set: &TrackSet) -> String {
    let mut out = String::new();
    for (id, obs, _) in track_set.rows() {
        let b = obs.bbox;
        writeln!(
            out,
            "{},{},{:.2},{:.2},{:.2},{:.2},{:.2},-1,-1,-1",
            obs.frame,
            id,
            b.left(),
            b.top(),
            b.width(),
            b.height(),
            obs.confidence
        )
        .unwrap();
    }
    out
}

/// Raw (un-normalized) embedding rows, in tracking-file line order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    rows: Vec<Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, rows: Vec<Vec<f32>>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: r.len(),
            });
        }
        Ok(Self { dim, rows })
    }

    /// The table that pairs with `write_mot(track_set)` line for line.
    pub fn from_track_set(track_set: &TrackSet) -> Self {
        let dim = track_set.tracklets().first().map_or(0, Tracklet::dim);
        let rows = track_set
            .rows()
            .into_iter()
            .map(|(_, _, e)| e.raw().to_vec())
            .collect();
        Self { dim, rows }
    }

    pub fn count(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f32>] {
        &self.rows
    }
}

pub fn read_embeddings(bytes: &[u8]) -> Result<EmbeddingTable> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != EMBEDDING_MAGIC {
            return Err(Error::BadMagic);
        }
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != EMBEDDING_MAGIC {
        return Err(Error::BadMagic);
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != EMBEDDING_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let count = word(8) as usize;
    let dim = word(12) as usize;
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .unwrap_or(usize::MAX);
    if bytes.len() != expected {
        return Err(Error::TruncatedFile {
            expected,
            actual: bytes.len(),
        });
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    let rows = (0..count)
        .map(|_| values.by_ref().take(dim).collect())
        .collect();
    Ok(EmbeddingTable { dim, rows })
}

pub fn write_embeddings(table: &EmbeddingTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * table.count() * table.dim());
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    out.extend_from_slice(&(table.count() as u32).to_le_bytes());
    out.extend_from_slice(&(table.dim() as u32).to_le_bytes());
    for v in table.rows.iter().flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Groups tracking rows by id into tracklets, attaching row `i` of `table` to
/// row `i` of `rows`.
pub fn assemble_trackset(
    sequence_name: &str,
    rows: &[MotRow],
    table: &EmbeddingTable,
) -> Result<TrackSet> {
    if rows.len() != table.count() {
        return Err(Error::CountMismatch {
            rows: rows.len(),
            embeddings: table.count(),
        });
    }
    let mut grouped: BTreeMap<u32, Vec<_>> = BTreeMap::new();
    for (row, values) in rows.iter().zip(table.rows()) {
        let obs = BoxObservation {
            frame: row.frame,
            bbox: row.bbox,
            confidence: row.confidence,
        };
        grouped
            .entry(row.id)
            .or_default()
            .push((obs, normalize_embedding(values)?));
    }
    let tracklets = grouped
        .into_iter()
        .map(|(id, pairs)| Tracklet::new(id, pairs))
        .collect::<Result<Vec<_>>>()?;
    TrackSet::new(sequence_name, tracklets)
}

/// Tracking text plus the embedding bytes that pair with it.
pub fn encode_sequence(track_set: &TrackSet) -> (String, Vec<u8>) {
    (
        write_mot(track_set),
        write_embeddings(&EmbeddingTable::from_track_set(track_set)),
    )
}

pub fn decode_sequence(sequence_name: &str, text: &str, embeddings: &[u8]) -> Result<TrackSet> {
    let rows = parse_mot(text)?;
    let table = read_embeddings(embeddings)?;
    assemble_trackset(sequence_name, &rows, &table)
}

/// Track set from tracking rows alone, for evaluation. Every observation gets
/// the same one-dimensional placeholder embedding.
pub fn assemble_boxes(sequence_name: &str, rows: &[MotRow]) -> Result<TrackSet> {
    let table = EmbeddingTable::new(1, vec![vec![1.0]; rows.len()])?;
    assemble_trackset(sequence_name, rows, &table)
}
