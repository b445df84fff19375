//! Labelled-record storage, stratified splits, per-class caps, and
//! inverse-frequency class weights.
//!
//! On-disk formats (little-endian integers):
//!
//! * Record file (`SPB1`, version 1): magic "SPB1", u16 version, u64 record
//!   count, then per record 30 raw bytes, u8 multiclass label (0 = normal ...
//!   8 = length_manip), u8 binary label (0 normal / 1 attack), u64 timestamp
//!   in microseconds.
//! * Extraction file (`SPX1`, version 1): magic "SPX1", u16 version, u64
//!   count, then per record 30 raw bytes, u16 frame count, u8 byte-count
//!   presence flag, u8 byte-count value, u64 timestamp. This intermediate
//!   carries the two dissector facts the labelling rules need that the
//!   30-byte layout cannot encode (frame count, Modbus byte count).

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{reconstruct, ByteVector30};
use crate::dissect::PacketFields;
use crate::error::{Error, Result};
use crate::label::{ClassLabel, NUM_CLASSES};

/// Unlabelled extraction record: the 30 layout bytes plus the dissector
/// facts labelling needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractedRecord {
    pub bytes: [u8; 30],
    pub frame_count: u16,
    pub byte_cnt: Option<u8>,
    pub ts_us: u64,
}

impl ExtractedRecord {
    pub fn from_fields(fields: &PacketFields) -> Self {
        ExtractedRecord {
            bytes: reconstruct(fields).0,
            frame_count: fields.frame_count,
            byte_cnt: fields.byte_cnt,
            ts_us: fields.capture_ts,
        }
    }
}

/// One labelled sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledRecord {
    pub bytes: [u8; 30],
    pub multiclass: ClassLabel,
    pub binary_attack: bool,
    pub ts_us: u64,
}

impl LabeledRecord {
    pub fn byte_vector(&self) -> ByteVector30 {
        ByteVector30(self.bytes)
    }
}

/// In-memory record collection in stable extraction order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordStore {
    pub records: Vec<LabeledRecord>,
}

impl RecordStore {
    pub fn new(records: Vec<LabeledRecord>) -> Self {
        RecordStore { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Per-class position lists in stable order; covers every record once.
    pub fn class_indices(&self) -> [Vec<usize>; NUM_CLASSES] {
        let mut idx: [Vec<usize>; NUM_CLASSES] = Default::default();
        for (i, r) in self.records.iter().enumerate() {
            idx[r.multiclass as usize].push(i);
        }
        idx
    }

    pub fn class_counts(&self) -> [u64; NUM_CLASSES] {
        let mut counts = [0u64; NUM_CLASSES];
        for r in &self.records {
            counts[r.multiclass as usize] += 1;
        }
        counts
    }
}

/// Train/validation/test fractions; percent-rank within each class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let spec = SplitSpec { train, val, test };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("train", self.train), ("val", self.val), ("test", self.test)] {
            if !(0.0..1.0).contains(&v) || v == 0.0 {
                return Err(Error::config(format!(
                    "split fraction {name}={v} must be in (0,1)"
                )));
            }
        }
        if (self.train + self.val + self.test - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "split fractions sum to {}, expected 1",
                self.train + self.val + self.test
            )));
        }
        Ok(())
    }
}

/// Stratified split output. Each part preserves stable store order.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: RecordStore,
    pub val: RecordStore,
    pub test: RecordStore,
    /// Classes too small to stratify (< 3 records), sent entirely to train.
    pub warnings: Vec<String>,
}

/// Deterministic stratified split by percent rank within each class:
/// record i of an n-record class goes to train when (i+1) <= floor(r_train*n),
/// to val up to floor((r_train+r_val)*n), else to test.
pub fn split(store: &RecordStore, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    #[derive(Clone, Copy, PartialEq)]
    enum Part {
        Train,
        Val,
        Test,
    }
    let mut assignment = vec![Part::Train; store.len()];
    let mut warnings = Vec::new();
    for (class_idx, indices) in store.class_indices().iter().enumerate() {
        let n = indices.len();
        if n == 0 {
            continue;
        }
        if n < 3 {
            warnings.push(format!(
                "class {} has only {} record(s); assigned entirely to train",
                ClassLabel::ALL[class_idx].name(),
                n
            ));
            continue; // already Train
        }
        let train_end = (spec.train * n as f64).floor() as usize;
        let val_end = ((spec.train + spec.val) * n as f64).floor() as usize;
        for (rank, &rec_idx) in indices.iter().enumerate() {
            assignment[rec_idx] = if rank < train_end {
                Part::Train
            } else if rank < val_end {
                Part::Val
            } else {
                Part::Test
            };
        }
    }
    let collect = |part: Part| -> RecordStore {
        RecordStore::new(
            store
                .records
                .iter()
                .zip(&assignment)
                .filter(|(_, a)| **a == part)
                .map(|(r, _)| *r)
                .collect(),
        )
    };
    Ok(Splits {
        train: collect(Part::Train),
        val: collect(Part::Val),
        test: collect(Part::Test),
        warnings,
    })
}

/// Truncate every class to its first `cap` records in stable order.
/// Applied to train and validation, never to test.
pub fn apply_cap(part: &RecordStore, cap: usize) -> RecordStore {
    assert!(cap >= 1, "cap must be at least 1");
    let mut taken = [0usize; NUM_CLASSES];
    let records = part
        .records
        .iter()
        .filter(|r| {
            let c = &mut taken[r.multiclass as usize];
            *c += 1;
            *c <= cap
        })
        .copied()
        .collect();
    RecordStore::new(records)
}

/// Which labelling of the records a weight computation runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelView {
    Multiclass,
    Binary,
}

/// Inverse-frequency class weights: weight_c = N / (K * N_c).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub weights: Vec<f64>,
    pub n: u64,
    pub k: usize,
    pub counts: Vec<u64>,
}

/// Compute class weights over a (typically post-cap training) part.
/// Errors when any class of the view has zero records, naming the class.
pub fn class_weights(part: &RecordStore, view: LabelView) -> Result<ClassWeights> {
    let (k, counts, name): (usize, Vec<u64>, fn(usize) -> String) = match view {
        LabelView::Multiclass => {
            let counts = part.class_counts().to_vec();
            (NUM_CLASSES, counts, |i| {
                ClassLabel::ALL[i].name().to_string()
            })
        }
        LabelView::Binary => {
            let mut counts = vec![0u64; 2];
            for r in &part.records {
                counts[r.binary_attack as usize] += 1;
            }
            (2, counts, |i| {
                if i == 0 { "normal" } else { "attack" }.to_string()
            })
        }
    };
    let n: u64 = counts.iter().sum();
    let mut weights = Vec::with_capacity(k);
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::run(format!(
                "class {} has no records; cannot compute weights",
                name(i)
            )));
        }
        weights.push(n as f64 / (k as f64 * c as f64));
    }
    Ok(ClassWeights {
        weights,
        n,
        k,
        counts,
    })
}

// ---------------------------------------------------------------------------
// Record file i/o (SPB1)
// ---------------------------------------------------------------------------

const RECORD_MAGIC: &[u8; 4] = b"SPB1";
const RECORD_VERSION: u16 = 1;
const EXTRACT_MAGIC: &[u8; 4] = b"SPX1";
const EXTRACT_VERSION: u16 = 1;

pub fn write_records(path: impl AsRef<Path>, records: &[LabeledRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(e, path))?;
    let mut w = BufWriter::new(file);
    w.write_all(RECORD_MAGIC)?;
    w.write_all(&RECORD_VERSION.to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        w.write_all(&r.bytes)?;
        w.write_all(&[r.multiclass as u8, r.binary_attack as u8])?;
        w.write_all(&r.ts_us.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<LabeledRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(e, path))?;
    let mut r = BufReader::new(file);
    let count = read_header(&mut r, RECORD_MAGIC, RECORD_VERSION, "record")?;
    let mut records = Vec::with_capacity(count.min(1 << 24) as usize);
    for i in 0..count {
        let mut buf = [0u8; 40];
        r.read_exact(&mut buf).map_err(|_| {
            Error::format(format!(
                "record file truncated at record boundary {i} (of {count})"
            ))
        })?;
        let mut bytes = [0u8; 30];
        bytes.copy_from_slice(&buf[..30]);
        let multiclass = ClassLabel::from_u8(buf[30])?;
        let binary_attack = match buf[31] {
            0 => false,
            1 => true,
            v => return Err(Error::format(format!("invalid binary label byte {v}"))),
        };
        if binary_attack != multiclass.is_attack() {
            return Err(Error::format(format!(
                "record {i}: binary label inconsistent with class {}",
                multiclass.name()
            )));
        }
        records.push(LabeledRecord {
            bytes,
            multiclass,
            binary_attack,
            ts_us: u64::from_le_bytes(buf[32..40].try_into().expect("8 bytes")),
        });
    }
    Ok(records)
}

pub fn write_extracted(path: impl AsRef<Path>, records: &[ExtractedRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(e, path))?;
    let mut w = BufWriter::new(file);
    w.write_all(EXTRACT_MAGIC)?;
    w.write_all(&EXTRACT_VERSION.to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        w.write_all(&r.bytes)?;
        w.write_all(&r.frame_count.to_le_bytes())?;
        w.write_all(&[r.byte_cnt.is_some() as u8, r.byte_cnt.unwrap_or(0)])?;
        w.write_all(&r.ts_us.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_extracted(path: impl AsRef<Path>) -> Result<Vec<ExtractedRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(e, path))?;
    let mut r = BufReader::new(file);
    let count = read_header(&mut r, EXTRACT_MAGIC, EXTRACT_VERSION, "extraction")?;
    let mut records = Vec::with_capacity(count.min(1 << 24) as usize);
    for i in 0..count {
        let mut buf = [0u8; 42];
        r.read_exact(&mut buf).map_err(|_| {
            Error::format(format!(
                "extraction file truncated at record boundary {i} (of {count})"
            ))
        })?;
        let mut bytes = [0u8; 30];
        bytes.copy_from_slice(&buf[..30]);
        records.push(ExtractedRecord {
            bytes,
            frame_count: u16::from_le_bytes([buf[30], buf[31]]),
            byte_cnt: (buf[32] != 0).then_some(buf[33]),
            ts_us: u64::from_le_bytes(buf[34..42].try_into().expect("8 bytes")),
        });
    }
    Ok(records)
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4], version: u16, what: &str) -> Result<u64> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)
        .map_err(|_| Error::format(format!("{what} file shorter than its header")))?;
    if &m != magic {
        return Err(Error::format(format!(
            "bad {what} file magic {:?} (expected {:?})",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v)
        .map_err(|_| Error::format(format!("{what} file shorter than its header")))?;
    let got = u16::from_le_bytes(v);
    if got != version {
        return Err(Error::format(format!(
            "unsupported {what} file version {got} (expected {version})"
        )));
    }
    let mut c = [0u8; 8];
    r.read_exact(&mut c)
        .map_err(|_| Error::format(format!("{what} file shorter than its header")))?;
    Ok(u64::from_le_bytes(c))
}
