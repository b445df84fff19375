//! Nine-class labelling from attack-log time windows plus protocol-level
//! packet signatures.
//!
//! Rules apply in a fixed priority, self-identifying signatures first:
//!
//! 1. FDI when the Modbus byte count is 171.
//! 2. Frame stacking when the segment holds more than one MBAP frame.
//! 3. Brute force inside a brute-force window with function code 5.
//! 4. Length manipulation inside a length-manipulation window when the
//!    (function code, MBAP length) pair falls outside the expected-length
//!    table.
//! 5. Query flooding / recon / replay / payload injection for any Modbus
//!    packet inside the respective window, in that order.
//! 6. Normal otherwise. Delay-response windows are parsed but never label
//!    anything (timing-only attacks are excluded).

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::dataset::{ExtractedRecord, LabeledRecord};
use crate::dissect::PacketFields;
use crate::error::{Error, Result};

/// Attack classes that can appear in an attack log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackType {
    BruteForce,
    FrameStacking,
    QueryFlooding,
    Recon,
    Replay,
    PayloadInjection,
    LengthManip,
    Fdi,
    /// Timing-only attack: parsed but produces no labels.
    DelayResponse,
}

impl AttackType {
    pub fn name(self) -> &'static str {
        match self {
            AttackType::BruteForce => "brute_force",
            AttackType::FrameStacking => "frame_stacking",
            AttackType::QueryFlooding => "query_flooding",
            AttackType::Recon => "recon",
            AttackType::Replay => "replay",
            AttackType::PayloadInjection => "payload_injection",
            AttackType::LengthManip => "length_manip",
            AttackType::Fdi => "fdi",
            AttackType::DelayResponse => "delay_response",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "bruteforce" => AttackType::BruteForce,
            "framestacking" => AttackType::FrameStacking,
            "queryflooding" => AttackType::QueryFlooding,
            "recon" | "reconnaissance" => AttackType::Recon,
            "replay" => AttackType::Replay,
            "payloadinjection" => AttackType::PayloadInjection,
            "lengthmanip" | "lengthmanipulation" => AttackType::LengthManip,
            "fdi" | "falsedatainjection" => AttackType::Fdi,
            "delayresponse" => AttackType::DelayResponse,
            _ => return Err(Error::format(format!("unknown attack type: {s}"))),
        })
    }
}

/// Multiclass label. The discriminant is the on-disk label byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Normal = 0,
    BruteForce = 1,
    FrameStacking = 2,
    QueryFlooding = 3,
    Recon = 4,
    Replay = 5,
    PayloadInjection = 6,
    Fdi = 7,
    LengthManip = 8,
}

pub const NUM_CLASSES: usize = 9;

impl ClassLabel {
    pub const ALL: [ClassLabel; NUM_CLASSES] = [
        ClassLabel::Normal,
        ClassLabel::BruteForce,
        ClassLabel::FrameStacking,
        ClassLabel::QueryFlooding,
        ClassLabel::Recon,
        ClassLabel::Replay,
        ClassLabel::PayloadInjection,
        ClassLabel::Fdi,
        ClassLabel::LengthManip,
    ];

    pub fn from_u8(v: u8) -> Result<Self> {
        Self::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| Error::format(format!("invalid class label byte {v}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Normal => "normal",
            ClassLabel::BruteForce => "brute_force",
            ClassLabel::FrameStacking => "frame_stacking",
            ClassLabel::QueryFlooding => "query_flooding",
            ClassLabel::Recon => "recon",
            ClassLabel::Replay => "replay",
            ClassLabel::PayloadInjection => "payload_injection",
            ClassLabel::Fdi => "fdi",
            ClassLabel::LengthManip => "length_manip",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("normal") {
            return Ok(ClassLabel::Normal);
        }
        Ok(match AttackType::parse(s)? {
            AttackType::BruteForce => ClassLabel::BruteForce,
            AttackType::FrameStacking => ClassLabel::FrameStacking,
            AttackType::QueryFlooding => ClassLabel::QueryFlooding,
            AttackType::Recon => ClassLabel::Recon,
            AttackType::Replay => ClassLabel::Replay,
            AttackType::PayloadInjection => ClassLabel::PayloadInjection,
            AttackType::LengthManip => ClassLabel::LengthManip,
            AttackType::Fdi => ClassLabel::Fdi,
            AttackType::DelayResponse => {
                return Err(Error::format(
                    "delay_response is excluded and cannot be a class label".to_string(),
                ))
            }
        })
    }

    /// Binary view: Attack for everything except Normal.
    pub fn is_attack(self) -> bool {
        self != ClassLabel::Normal
    }
}

/// One attack-log window, timestamps in microseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackWindow {
    pub start_ts: u64,
    /// `u64::MAX` marks an unclosed window (missing completion marker);
    /// `close_unclosed_windows` clamps those to the corpus end.
    pub end_ts: u64,
    pub attack_type: AttackType,
    pub scenario: String,
}

impl AttackWindow {
    pub fn is_unclosed(&self) -> bool {
        self.end_ts == u64::MAX
    }
}

/// Expected MBAP lengths per function code; pairs outside the table are
/// anomalous. Shipped as an editable JSON object `{"func": [lengths...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthTable {
    pub allowed: BTreeMap<u8, Vec<u16>>,
}

impl Default for LengthTable {
    fn default() -> Self {
        // Canonical poll shapes: reads of ten registers (request 6,
        // response 3 + 20), single-coil and single-register writes (echoed).
        let mut allowed = BTreeMap::new();
        allowed.insert(3u8, vec![6, 23]);
        allowed.insert(4u8, vec![6, 23]);
        allowed.insert(5u8, vec![6]);
        allowed.insert(6u8, vec![6]);
        LengthTable { allowed }
    }
}

impl LengthTable {
    /// A (func, length) pair is anomalous when the function code is unknown
    /// to the table or the length is not in its allowed set.
    pub fn is_anomalous(&self, func_code: u8, mbap_length: u16) -> bool {
        match self.allowed.get(&func_code) {
            Some(lens) => !lens.contains(&mbap_length),
            None => true,
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<u16>> = serde_json::from_str(json)
            .map_err(|e| Error::format(format!("length table: {e}")))?;
        let mut allowed = BTreeMap::new();
        for (k, v) in raw {
            let func: u8 = k
                .parse()
                .map_err(|_| Error::format(format!("length table: bad function code {k}")))?;
            allowed.insert(func, v);
        }
        Ok(LengthTable { allowed })
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<String, &Vec<u16>> = self
            .allowed
            .iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        serde_json::to_string_pretty(&raw).expect("plain map serializes")
    }
}

/// Per-type merged window intervals with binary-search containment.
#[derive(Debug, Clone, Default)]
pub struct WindowSet {
    by_type: BTreeMap<AttackType, Vec<(u64, u64)>>,
}

impl WindowSet {
    /// Build from windows; overlapping windows of the same type are merged.
    /// Unclosed windows must be completed first (`close_unclosed_windows`).
    pub fn build(windows: &[AttackWindow]) -> Self {
        let mut by_type: BTreeMap<AttackType, Vec<(u64, u64)>> = BTreeMap::new();
        for w in windows {
            by_type
                .entry(w.attack_type)
                .or_default()
                .push((w.start_ts, w.end_ts));
        }
        for intervals in by_type.values_mut() {
            intervals.sort_unstable();
            let mut merged: Vec<(u64, u64)> = Vec::with_capacity(intervals.len());
            for &(s, e) in intervals.iter() {
                match merged.last_mut() {
                    Some(last) if s <= last.1 => last.1 = last.1.max(e),
                    _ => merged.push((s, e)),
                }
            }
            *intervals = merged;
        }
        WindowSet { by_type }
    }

    pub fn contains(&self, ty: AttackType, ts: u64) -> bool {
        let Some(intervals) = self.by_type.get(&ty) else {
            return false;
        };
        let idx = intervals.partition_point(|&(s, _)| s <= ts);
        idx > 0 && intervals[idx - 1].1 >= ts
    }

    /// All intervals of every type, merged, sorted (for offset search).
    pub fn merged_all(&self) -> Vec<(u64, u64)> {
        let mut all: Vec<(u64, u64)> = self.by_type.values().flatten().copied().collect();
        all.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::new();
        for (s, e) in all {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        merged
    }
}

/// The packet attributes the labelling rules consume.
#[derive(Debug, Clone, Copy)]
pub struct LabelInput {
    pub ts: u64,
    pub func_code: u8,
    pub mbap_length: u16,
    pub frame_count: u16,
    pub byte_cnt: Option<u8>,
}

impl From<&PacketFields> for LabelInput {
    fn from(f: &PacketFields) -> Self {
        LabelInput {
            ts: f.capture_ts,
            func_code: f.func_code,
            mbap_length: f.mbap_length,
            frame_count: f.frame_count,
            byte_cnt: f.byte_cnt,
        }
    }
}

impl From<&ExtractedRecord> for LabelInput {
    fn from(r: &ExtractedRecord) -> Self {
        LabelInput {
            ts: r.ts_us,
            func_code: r.bytes[25],
            mbap_length: u16::from_be_bytes([r.bytes[22], r.bytes[23]]),
            frame_count: r.frame_count,
            byte_cnt: r.byte_cnt,
        }
    }
}

/// The complete labelling rule set.
#[derive(Debug, Clone)]
pub struct Ruleset {
    pub windows: WindowSet,
    pub length_table: LengthTable,
}

impl Ruleset {
    pub fn new(windows: &[AttackWindow], length_table: LengthTable) -> Self {
        Ruleset {
            windows: WindowSet::build(windows),
            length_table,
        }
    }
}

/// Apply the labelling rules to one packet.
pub fn label_packet(input: &LabelInput, rules: &Ruleset) -> ClassLabel {
    if input.byte_cnt == Some(171) {
        return ClassLabel::Fdi;
    }
    if input.frame_count > 1 {
        return ClassLabel::FrameStacking;
    }
    let w = &rules.windows;
    if w.contains(AttackType::BruteForce, input.ts) && input.func_code == 5 {
        return ClassLabel::BruteForce;
    }
    if w.contains(AttackType::LengthManip, input.ts)
        && rules
            .length_table
            .is_anomalous(input.func_code, input.mbap_length)
    {
        return ClassLabel::LengthManip;
    }
    if w.contains(AttackType::QueryFlooding, input.ts) {
        return ClassLabel::QueryFlooding;
    }
    if w.contains(AttackType::Recon, input.ts) {
        return ClassLabel::Recon;
    }
    if w.contains(AttackType::Replay, input.ts) {
        return ClassLabel::Replay;
    }
    if w.contains(AttackType::PayloadInjection, input.ts) {
        return ClassLabel::PayloadInjection;
    }
    ClassLabel::Normal
}

/// Per-class counts emitted by `label_corpus` for audit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
    pub normal: u64,
    pub attack: u64,
    /// Windows that had to be closed at corpus end.
    pub unclosed_windows_closed: usize,
}

impl LabelSummary {
    pub fn count_of(&self, label: ClassLabel) -> u64 {
        self.counts.get(label.name()).copied().unwrap_or(0)
    }
}

impl std::fmt::Display for LabelSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<20} {:>12}", "class", "packets")?;
        for label in ClassLabel::ALL {
            writeln!(f, "{:<20} {:>12}", label.name(), self.count_of(label))?;
        }
        writeln!(f, "{:<20} {:>12}", "total", self.total)?;
        write!(
            f,
            "normal: {}, attack: {}, unclosed windows closed: {}",
            self.normal, self.attack, self.unclosed_windows_closed
        )
    }
}

/// Clamp unclosed windows (end == u64::MAX) to the corpus end timestamp.
/// Returns how many were clamped.
pub fn close_unclosed_windows(windows: &mut [AttackWindow], corpus_end_ts: u64) -> usize {
    let mut n = 0;
    for w in windows.iter_mut() {
        if w.is_unclosed() {
            w.end_ts = corpus_end_ts;
            n += 1;
        }
    }
    n
}

/// Label every record of a corpus; windows are closed at corpus end when
/// their completion marker is missing.
pub fn label_corpus(
    records: &[ExtractedRecord],
    windows: &[AttackWindow],
    length_table: LengthTable,
) -> (Vec<LabeledRecord>, LabelSummary) {
    let corpus_end = records.iter().map(|r| r.ts_us).max().unwrap_or(0);
    let mut windows = windows.to_vec();
    let closed = close_unclosed_windows(&mut windows, corpus_end);
    let rules = Ruleset::new(&windows, length_table);

    let mut out = Vec::with_capacity(records.len());
    let mut summary = LabelSummary {
        unclosed_windows_closed: closed,
        ..Default::default()
    };
    for rec in records {
        let label = label_packet(&LabelInput::from(rec), &rules);
        *summary.counts.entry(label.name().to_string()).or_insert(0) += 1;
        summary.total += 1;
        if label.is_attack() {
            summary.attack += 1;
        } else {
            summary.normal += 1;
        }
        out.push(LabeledRecord {
            bytes: rec.bytes,
            multiclass: label,
            binary_attack: label.is_attack(),
            ts_us: rec.ts_us,
        });
    }
    (out, summary)
}

// ---------------------------------------------------------------------------
// Attack-log CSV
// ---------------------------------------------------------------------------

/// Parse a timestamp that is either ISO-8601 (assumed UTC when no offset) or
/// numeric epoch (microseconds when >= 1e12, else seconds, fractions allowed).
pub fn parse_timestamp(s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::format(format!("invalid epoch timestamp: {s}")));
        }
        let us = if v >= 1e12 { v } else { v * 1e6 };
        return Ok(us.round() as u64);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp_micros().max(0) as u64);
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            let dt = Utc.from_utc_datetime(&naive);
            return Ok(dt.timestamp_micros().max(0) as u64);
        }
    }
    Err(Error::format(format!("unparseable timestamp: {s}")))
}

/// Read an attack log CSV: `start_ts,end_ts,attack_type,scenario`.
/// An empty `end_ts` marks an unclosed window.
pub fn read_attack_log(path: impl AsRef<Path>) -> Result<Vec<AttackWindow>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::format(format!("attack log {}: {e}", path.display())))?;
    let mut windows = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::format(format!("attack log row {}: {e}", i + 2)))?;
        if row.len() < 3 {
            return Err(Error::format(format!(
                "attack log row {}: expected start_ts,end_ts,attack_type,scenario",
                i + 2
            )));
        }
        let start_ts = parse_timestamp(&row[0])?;
        let end_field = row[1].trim();
        let end_ts = if end_field.is_empty() {
            u64::MAX
        } else {
            parse_timestamp(end_field)?
        };
        if end_ts != u64::MAX && end_ts < start_ts {
            return Err(Error::format(format!(
                "attack log row {}: end before start",
                i + 2
            )));
        }
        windows.push(AttackWindow {
            start_ts,
            end_ts,
            attack_type: AttackType::parse(&row[2])?,
            scenario: row.get(3).unwrap_or("").to_string(),
        });
    }
    windows.sort_by_key(|w| w.start_ts);
    Ok(windows)
}

/// Epoch seconds with six fractional digits, the form `parse_timestamp`
/// reads back exactly.
fn format_epoch_us(ts_us: u64) -> String {
    format!("{}.{:06}", ts_us / 1_000_000, ts_us % 1_000_000)
}

/// Write an attack log CSV with epoch-second timestamps (microsecond
/// fractions).
pub fn write_attack_log(path: impl AsRef<Path>, windows: &[AttackWindow]) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = csv::Writer::from_path(path)
        .map_err(|e| Error::format(format!("attack log {}: {e}", path.display())))?;
    wtr.write_record(["start_ts", "end_ts", "attack_type", "scenario"])
        .map_err(|e| Error::format(e.to_string()))?;
    for w in windows {
        let end = if w.is_unclosed() {
            String::new()
        } else {
            format_epoch_us(w.end_ts)
        };
        wtr.write_record([
            format_epoch_us(w.start_ts),
            end,
            w.attack_type.name().to_string(),
            w.scenario.clone(),
        ])
        .map_err(|e| Error::format(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io(e, path))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Timestamp offset analysis
// ---------------------------------------------------------------------------

/// Offset search grid in seconds, applied to the windows.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OffsetGrid {
    pub min_s: i64,
    pub max_s: i64,
    pub step_s: i64,
}

impl Default for OffsetGrid {
    fn default() -> Self {
        OffsetGrid {
            min_s: -86_400,
            max_s: 86_400,
            step_s: 60,
        }
    }
}

/// Packet timestamps of one capture file (any order).
#[derive(Debug, Clone)]
pub struct FileTimestamps {
    pub name: String,
    pub packet_ts: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileOffsetReport {
    pub file: String,
    /// Fraction of (unshifted) windows overlapping the capture's time span.
    pub window_overlap_fraction: f64,
    /// Offset (microseconds, added to windows) maximizing in-window packet
    /// coverage. Ties prefer the smallest |offset|.
    pub best_offset_us: i64,
    /// Fraction of packets inside some window at the best offset.
    pub coverage_at_best: f64,
    /// Set when no window overlaps the capture at any grid offset.
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OffsetReport {
    pub per_file: Vec<FileOffsetReport>,
}

const OFFSET_SAMPLE_CAP: usize = 5_000;

/// Search a constant-offset grid for the shift that best aligns attack-log
/// windows with packet timestamps, per file.
///
/// The score is in-window packet coverage, so recovery assumes windows mark
/// traffic bursts (attack rate at or above background polling), which holds
/// for real attack captures. On traffic where windows are density holes the
/// best-coverage offset is not the alignment offset.
pub fn check_offset(
    files: &[FileTimestamps],
    windows: &[AttackWindow],
    grid: OffsetGrid,
) -> Result<OffsetReport> {
    if windows.is_empty() {
        return Err(Error::config("offset check needs at least one window".to_string()));
    }
    if files.iter().all(|f| f.packet_ts.is_empty()) {
        return Err(Error::config("offset check needs at least one packet".to_string()));
    }
    let mut closed = windows.to_vec();
    let max_ts = files
        .iter()
        .flat_map(|f| f.packet_ts.iter().copied())
        .max()
        .unwrap_or(0);
    close_unclosed_windows(&mut closed, max_ts);
    let merged = WindowSet::build(&closed).merged_all();

    let mut per_file = Vec::new();
    for file in files {
        if file.packet_ts.is_empty() {
            per_file.push(FileOffsetReport {
                file: file.name.clone(),
                window_overlap_fraction: 0.0,
                best_offset_us: 0,
                coverage_at_best: 0.0,
                warning: Some("no packets".to_string()),
            });
            continue;
        }
        let mut ts = file.packet_ts.clone();
        ts.sort_unstable();
        // Deterministic stride sampling keeps the grid search cheap.
        let sampled: Vec<u64> = if ts.len() > OFFSET_SAMPLE_CAP {
            let stride = ts.len() / OFFSET_SAMPLE_CAP;
            ts.iter().step_by(stride.max(1)).copied().collect()
        } else {
            ts.clone()
        };
        let (span_lo, span_hi) = (ts[0], *ts.last().expect("non-empty"));
        let overlapping = closed
            .iter()
            .filter(|w| w.start_ts <= span_hi && w.end_ts >= span_lo)
            .count();
        let overlap_frac = overlapping as f64 / closed.len() as f64;

        let mut best_offset = 0i64;
        let mut best_cov = -1.0f64;
        let mut off_s = grid.min_s;
        while off_s <= grid.max_s {
            let off_us = off_s * 1_000_000;
            let cov = coverage(&sampled, &merged, off_us);
            let better = cov > best_cov + 1e-12
                || ((cov - best_cov).abs() <= 1e-12
                    && (off_us.abs() < best_offset.abs()
                        || (off_us.abs() == best_offset.abs() && off_us < best_offset)));
            if better {
                best_cov = cov;
                best_offset = off_us;
            }
            off_s += grid.step_s;
        }
        let warning =
            (best_cov <= 0.0).then(|| "no window overlaps this capture at any offset".to_string());
        per_file.push(FileOffsetReport {
            file: file.name.clone(),
            window_overlap_fraction: overlap_frac,
            best_offset_us: best_offset,
            coverage_at_best: best_cov.max(0.0),
            warning,
        });
    }
    Ok(OffsetReport { per_file })
}

/// Fraction of sorted `ts` lying inside some interval shifted by `off_us`.
fn coverage(ts: &[u64], merged: &[(u64, u64)], off_us: i64) -> f64 {
    if ts.is_empty() {
        return 0.0;
    }
    let mut inside = 0usize;
    let mut wi = 0usize;
    for &t in ts {
        let t = t as i128;
        while wi < merged.len() && (merged[wi].1 as i128 + off_us as i128) < t {
            wi += 1;
        }
        if wi < merged.len() && (merged[wi].0 as i128 + off_us as i128) <= t {
            inside += 1;
        }
    }
    inside as f64 / ts.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn win(start_s: u64, end_s: u64, ty: AttackType) -> AttackWindow {
        AttackWindow {
            start_ts: start_s * 1_000_000,
            end_ts: end_s * 1_000_000,
            attack_type: ty,
            scenario: "t".to_string(),
        }
    }

    fn input(ts_s: u64, func: u8) -> LabelInput {
        LabelInput {
            ts: ts_s * 1_000_000,
            func_code: func,
            mbap_length: 6,
            frame_count: 1,
            byte_cnt: None,
        }
    }

    fn rules(windows: &[AttackWindow]) -> Ruleset {
        Ruleset::new(windows, LengthTable::default())
    }

    #[test]
    fn func5_inside_brute_force_window() {
        let r = rules(&[win(100, 200, AttackType::BruteForce)]);
        assert_eq!(label_packet(&input(150, 5), &r), ClassLabel::BruteForce);
        // func 5 outside all windows -> Normal.
        assert_eq!(label_packet(&input(300, 5), &r), ClassLabel::Normal);
        // func 3 inside the window -> Normal (signature requires func 5).
        assert_eq!(label_packet(&input(150, 3), &r), ClassLabel::Normal);
    }

    #[test]
    fn byte_cnt_171_is_fdi_without_window_context() {
        let r = rules(&[]);
        let mut i = input(10, 3);
        i.byte_cnt = Some(171);
        i.mbap_length = 174;
        assert_eq!(label_packet(&i, &r), ClassLabel::Fdi);
    }

    #[test]
    fn self_identifying_rules_outrank_windows() {
        // Exhaustive conflict set: a packet matching every rule at once must
        // resolve by the fixed priority when rules are stripped one by one.
        let windows = [
            win(0, 1000, AttackType::BruteForce),
            win(0, 1000, AttackType::LengthManip),
            win(0, 1000, AttackType::QueryFlooding),
            win(0, 1000, AttackType::Recon),
            win(0, 1000, AttackType::Replay),
            win(0, 1000, AttackType::PayloadInjection),
        ];
        let r = rules(&windows);
        let mut i = input(500, 5);
        i.byte_cnt = Some(171);
        i.frame_count = 2;
        i.mbap_length = 99; // anomalous for func 5
        assert_eq!(label_packet(&i, &r), ClassLabel::Fdi);
        i.byte_cnt = None;
        assert_eq!(label_packet(&i, &r), ClassLabel::FrameStacking);
        i.frame_count = 1;
        assert_eq!(label_packet(&i, &r), ClassLabel::BruteForce);
        i.func_code = 3;
        assert_eq!(label_packet(&i, &r), ClassLabel::LengthManip);
        i.mbap_length = 6; // no longer anomalous
        assert_eq!(label_packet(&i, &r), ClassLabel::QueryFlooding);
    }

    #[test]
    fn frame_stacking_beats_query_flooding_window() {
        let r = rules(&[win(0, 100, AttackType::QueryFlooding)]);
        let mut i = input(50, 3);
        i.frame_count = 2;
        assert_eq!(label_packet(&i, &r), ClassLabel::FrameStacking);
    }

    #[test]
    fn delay_response_windows_never_label() {
        let r = rules(&[win(0, 100, AttackType::DelayResponse)]);
        assert_eq!(label_packet(&input(50, 3), &r), ClassLabel::Normal);
    }

    #[test]
    fn windowed_priority_order_is_fixed() {
        let windows = [
            win(0, 100, AttackType::Recon),
            win(0, 100, AttackType::Replay),
        ];
        let r = rules(&windows);
        assert_eq!(label_packet(&input(50, 3), &r), ClassLabel::Recon);
    }

    #[test]
    fn length_table_round_trips_json_and_flags_unknown_funcs() {
        let t = LengthTable::default();
        assert!(!t.is_anomalous(3, 6));
        assert!(!t.is_anomalous(3, 23));
        assert!(t.is_anomalous(3, 9));
        assert!(t.is_anomalous(99, 6));
        let j = t.to_json();
        assert_eq!(LengthTable::from_json(&j).unwrap(), t);
    }

    #[test]
    fn window_set_merges_overlaps() {
        let ws = WindowSet::build(&[
            win(10, 20, AttackType::Replay),
            win(15, 30, AttackType::Replay),
            win(40, 50, AttackType::Replay),
        ]);
        assert!(ws.contains(AttackType::Replay, 25_000_000));
        assert!(!ws.contains(AttackType::Replay, 35_000_000));
        assert_eq!(ws.merged_all().len(), 2);
    }

    #[test]
    fn parse_timestamp_formats() {
        assert_eq!(parse_timestamp("100").unwrap(), 100_000_000);
        assert_eq!(parse_timestamp("100.5").unwrap(), 100_500_000);
        assert_eq!(parse_timestamp("1700000000000000").unwrap(), 1_700_000_000_000_000);
        let iso = parse_timestamp("2023-05-01T00:00:00Z").unwrap();
        assert_eq!(iso, 1_682_899_200_000_000);
        assert_eq!(parse_timestamp("2023-05-01 00:00:00").unwrap(), iso);
        assert!(parse_timestamp("yesterday").is_err());
    }

    #[test]
    fn attack_log_round_trip_and_unclosed_handling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        std::fs::write(
            &path,
            "start_ts,end_ts,attack_type,scenario\n\
             100,200,brute_force,s1\n\
             300,,query_flooding,s1\n\
             2023-05-01T00:00:10Z,2023-05-01T00:00:20Z,Replay,s2\n",
        )
        .unwrap();
        let mut windows = read_attack_log(&path).unwrap();
        assert_eq!(windows.len(), 3);
        assert_eq!(windows[0].attack_type, AttackType::BruteForce);
        assert!(windows[1].is_unclosed());
        assert_eq!(close_unclosed_windows(&mut windows, 450_000_000), 1);
        assert_eq!(windows[1].end_ts, 450_000_000);

        write_attack_log(&path, &windows).unwrap();
        let again = read_attack_log(&path).unwrap();
        assert_eq!(again, windows);
    }

    #[test]
    fn offset_zero_recovered_when_windows_align() {
        let files = [FileTimestamps {
            name: "a".to_string(),
            packet_ts: (0..100).map(|i| 1_000_000_000 + i * 1_000_000).collect(),
        }];
        let windows = [win(1000, 1099, AttackType::Replay)];
        let rep = check_offset(&files, &windows, OffsetGrid::default()).unwrap();
        assert_eq!(rep.per_file[0].best_offset_us, 0);
        assert_eq!(rep.per_file[0].coverage_at_best, 1.0);
        assert_eq!(rep.per_file[0].window_overlap_fraction, 1.0);
    }

    #[test]
    fn shifted_windows_recover_negative_offset() {
        // Windows shifted +3600 s against the capture: best offset -3600 s.
        let files = [FileTimestamps {
            name: "a".to_string(),
            packet_ts: (0..100).map(|i| 1_000_000_000 + i * 1_000_000).collect(),
        }];
        let windows = [win(1000 + 3600, 1099 + 3600, AttackType::Replay)];
        let rep = check_offset(&files, &windows, OffsetGrid::default()).unwrap();
        assert_eq!(rep.per_file[0].best_offset_us, -3_600_000_000);
        assert_eq!(rep.per_file[0].coverage_at_best, 1.0);
    }

    #[test]
    fn shift_recovered_on_burst_corpus() {
        // Burst-shaped traffic (window density above background): sparse
        // polling plus a dense in-window burst, windows shifted +1800 s.
        let mut ts: Vec<u64> = (0..200u64).map(|i| 1_000_000_000 + i * 1_000_000).collect();
        ts.extend((0..400u64).map(|i| 1_050_000_000 + i * 25_000)); // 10 s burst
        let files = [FileTimestamps {
            name: "burst".to_string(),
            packet_ts: ts,
        }];
        let windows = [win(1050 + 1800, 1060 + 1800, AttackType::QueryFlooding)];
        let rep = check_offset(&files, &windows, OffsetGrid::default()).unwrap();
        assert_eq!(rep.per_file[0].best_offset_us, -1_800_000_000);
    }

    #[test]
    fn disjoint_windows_warn() {
        let files = [FileTimestamps {
            name: "a".to_string(),
            packet_ts: vec![1_000_000],
        }];
        let windows = [win(10_000_000, 10_000_100, AttackType::Replay)];
        let rep = check_offset(&files, &windows, OffsetGrid::default()).unwrap();
        assert_eq!(rep.per_file[0].window_overlap_fraction, 0.0);
        assert!(rep.per_file[0].warning.is_some());
    }
}
