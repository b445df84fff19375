//! Capture-directory survey: per-file packet counts, skip breakdowns, and
//! capture-class grouping from a user-supplied manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissect::{dissect, SkipReason};
use crate::error::{Error, Result};
use crate::pcap::read_pcap_file;

/// What kind of capture a file is. Classification always comes from the
/// manifest, never from inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaptureClass {
    Benign,
    ExternalAttack,
    CompromisedScada,
    CompromisedIed,
}

impl CaptureClass {
    pub fn name(self) -> &'static str {
        match self {
            CaptureClass::Benign => "benign",
            CaptureClass::ExternalAttack => "external-attack",
            CaptureClass::CompromisedScada => "compromised-scada",
            CaptureClass::CompromisedIed => "compromised-ied",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "benign" => CaptureClass::Benign,
            "externalattack" | "external" => CaptureClass::ExternalAttack,
            "compromisedscada" | "scada" => CaptureClass::CompromisedScada,
            "compromisedied" | "ied" => CaptureClass::CompromisedIed,
            _ => return Err(Error::format(format!("unknown capture class: {s}"))),
        })
    }
}

/// One manifest row: `file_path,capture_class,scenario`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file_path: String,
    pub capture_class: CaptureClass,
    pub scenario: String,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::format(format!("manifest {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::format(format!("manifest row {}: {e}", i + 2)))?;
        if row.len() < 2 {
            return Err(Error::format(format!(
                "manifest row {}: expected file_path,capture_class,scenario",
                i + 2
            )));
        }
        entries.push(ManifestEntry {
            file_path: row[0].to_string(),
            capture_class: CaptureClass::parse(&row[1])?,
            scenario: row.get(2).unwrap_or("").to_string(),
        });
    }
    Ok(entries)
}

/// Per-file survey line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileSurvey {
    pub path: String,
    pub capture_class: Option<CaptureClass>,
    pub scenario: Option<String>,
    pub records_total: u64,
    pub modbus_packets: u64,
    pub skips: BTreeMap<String, u64>,
    pub timestamp_regressions: u64,
    /// Set when the file could not be read; processing continues.
    pub error: Option<String>,
}

/// Aggregated survey over a capture directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Survey {
    pub files: Vec<FileSurvey>,
    /// (files, modbus packets) per capture class named in the manifest.
    pub by_class: BTreeMap<String, (u64, u64)>,
    pub unclassified_files: u64,
}

impl std::fmt::Display for Survey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<48} {:>10} {:>10} {:>8}  class",
            "file", "records", "modbus", "skipped"
        )?;
        for file in &self.files {
            let skipped: u64 = file.skips.values().sum();
            writeln!(
                f,
                "{:<48} {:>10} {:>10} {:>8}  {}{}",
                file.path,
                file.records_total,
                file.modbus_packets,
                skipped,
                file.capture_class.map(|c| c.name()).unwrap_or("-"),
                file.error
                    .as_deref()
                    .map(|e| format!("  ERROR: {e}"))
                    .unwrap_or_default()
            )?;
        }
        for (class, (files, packets)) in &self.by_class {
            writeln!(f, "{class}: {packets} Modbus packets ({files} files)")?;
        }
        Ok(())
    }
}

/// Survey every pcap under `root` (a file or directory, recursive), applying
/// read + dissect and grouping by the manifest's capture classes.
/// Unreadable files are recorded and skipped. File order is lexicographic,
/// so the survey is deterministic.
pub fn scan_directory(root: impl AsRef<Path>, manifest: &[ManifestEntry]) -> Result<Survey> {
    let root = root.as_ref();
    let files = list_pcap_files(root)?;
    let surveys: Vec<FileSurvey> = files
        .par_iter()
        .map(|path| survey_file(path, manifest))
        .collect();

    let mut by_class: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    let mut unclassified = 0;
    for s in &surveys {
        match s.capture_class {
            Some(c) => {
                let e = by_class.entry(c.name().to_string()).or_insert((0, 0));
                e.0 += 1;
                e.1 += s.modbus_packets;
            }
            None => unclassified += 1,
        }
    }
    Ok(Survey {
        files: surveys,
        by_class,
        unclassified_files: unclassified,
    })
}

/// All pcap-looking files under root, lexicographically sorted.
pub fn list_pcap_files(root: &Path) -> Result<Vec<PathBuf>> {
    if root.is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    if !root.is_dir() {
        return Err(Error::config(format!(
            "{} is neither a file nor a directory",
            root.display()
        )));
    }
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pcap") | Some("cap")
            )
        })
        .collect();
    files.sort();
    Ok(files)
}

fn survey_file(path: &Path, manifest: &[ManifestEntry]) -> FileSurvey {
    let entry = manifest.iter().find(|m| {
        path.ends_with(&m.file_path)
            || path.file_name().and_then(|n| n.to_str()) == Some(m.file_path.as_str())
    });
    let mut survey = FileSurvey {
        path: path.display().to_string(),
        capture_class: entry.map(|e| e.capture_class),
        scenario: entry.map(|e| e.scenario.clone()),
        records_total: 0,
        modbus_packets: 0,
        skips: BTreeMap::new(),
        timestamp_regressions: 0,
        error: None,
    };
    let contents = match read_pcap_file(path) {
        Ok(c) => c,
        Err(e) => {
            survey.error = Some(e.to_string());
            return survey;
        }
    };
    survey.records_total = contents.packets.len() as u64;
    survey.timestamp_regressions = contents.timestamp_regressions as u64;
    for pkt in &contents.packets {
        match dissect(pkt) {
            Ok(_) => survey.modbus_packets += 1,
            Err(reason) => {
                *survey.skips.entry(reason.name().to_string()).or_insert(0) += 1;
            }
        }
    }
    debug_assert_eq!(
        survey.modbus_packets + survey.skips.values().sum::<u64>(),
        survey.records_total,
        "skips + emitted must cover every record"
    );
    let _ = SkipReason::ALL; // fixed reason inventory, see dissect
    survey
}
