//! Classic pcap file reading and writing.
//!
//! Handles the 24-byte global header with all four magic variants
//! (microsecond/nanosecond precision, either byte order) and the 16-byte
//! per-record headers. Only link type EN10MB (1) is accepted; capture
//! timestamps are normalized to microseconds.

use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC_USEC: u32 = 0xa1b2_c3d4;
pub const MAGIC_NSEC: u32 = 0xa1b2_3c4d;
pub const LINKTYPE_ETHERNET: u32 = 1;

/// One captured frame: timestamp in microseconds since epoch plus the raw
/// link-layer bytes as captured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPacket {
    pub capture_ts: u64,
    pub link_bytes: Vec<u8>,
}

/// Parsed capture file.
#[derive(Debug, Clone)]
pub struct PcapContents {
    pub packets: Vec<RawPacket>,
    pub link_type: u32,
    /// Number of records whose timestamp went backwards relative to the
    /// previous record. Regressions are tolerated, only counted.
    pub timestamp_regressions: usize,
}

fn rd_u32(b: &[u8], off: usize, swapped: bool) -> u32 {
    let raw: [u8; 4] = b[off..off + 4].try_into().unwrap();
    if swapped {
        u32::from_be_bytes(raw)
    } else {
        u32::from_le_bytes(raw)
    }
}

/// Parse an entire classic pcap byte stream.
pub fn read_pcap(bytes: &[u8]) -> Result<PcapContents> {
    if bytes.len() < 24 {
        return Err(Error::format(format!(
            "pcap global header needs 24 bytes, file has {}",
            bytes.len()
        )));
    }
    let magic_le = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let magic_be = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
    let (swapped, nanos) = match (magic_le, magic_be) {
        (MAGIC_USEC, _) => (false, false),
        (MAGIC_NSEC, _) => (false, true),
        (_, MAGIC_USEC) => (true, false),
        (_, MAGIC_NSEC) => (true, true),
        _ => {
            return Err(Error::format(format!(
                "bad pcap magic 0x{magic_le:08x}"
            )))
        }
    };
    let link_type = rd_u32(bytes, 20, swapped);
    if link_type != LINKTYPE_ETHERNET {
        return Err(Error::format(format!(
            "unsupported link type {link_type} (only EN10MB=1)"
        )));
    }

    let mut packets = Vec::new();
    let mut regressions = 0usize;
    let mut last_ts = 0u64;
    let mut off = 24usize;
    while off < bytes.len() {
        if bytes.len() - off < 16 {
            return Err(Error::format(format!(
                "truncated pcap record header at byte offset {off}"
            )));
        }
        let ts_sec = rd_u32(bytes, off, swapped) as u64;
        let ts_sub = rd_u32(bytes, off + 4, swapped) as u64;
        let incl_len = rd_u32(bytes, off + 8, swapped) as usize;
        off += 16;
        if bytes.len() - off < incl_len {
            return Err(Error::format(format!(
                "truncated pcap record body at byte offset {off} (needs {incl_len} bytes)"
            )));
        }
        let ts = ts_sec * 1_000_000 + if nanos { ts_sub / 1000 } else { ts_sub };
        if !packets.is_empty() && ts < last_ts {
            regressions += 1;
        }
        last_ts = ts;
        packets.push(RawPacket {
            capture_ts: ts,
            link_bytes: bytes[off..off + incl_len].to_vec(),
        });
        off += incl_len;
    }
    Ok(PcapContents {
        packets,
        link_type,
        timestamp_regressions: regressions,
    })
}

pub fn read_pcap_file(path: impl AsRef<Path>) -> Result<PcapContents> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(e, path))?;
    read_pcap(&bytes)
}

/// Serialize packets as a little-endian, microsecond-precision pcap stream.
pub fn write_pcap(packets: &[RawPacket]) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + packets.iter().map(|p| 16 + p.link_bytes.len()).sum::<usize>());
    out.extend_from_slice(&MAGIC_USEC.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // version major
    out.extend_from_slice(&4u16.to_le_bytes()); // version minor
    out.extend_from_slice(&0i32.to_le_bytes()); // thiszone
    out.extend_from_slice(&0u32.to_le_bytes()); // sigfigs
    out.extend_from_slice(&65535u32.to_le_bytes()); // snaplen
    out.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());
    for p in packets {
        out.extend_from_slice(&((p.capture_ts / 1_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&((p.capture_ts % 1_000_000) as u32).to_le_bytes());
        let len = p.link_bytes.len() as u32;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&p.link_bytes);
    }
    out
}

pub fn write_pcap_file(path: impl AsRef<Path>, packets: &[RawPacket]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_pcap(packets)).map_err(|e| Error::io(e, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn global_header_le(magic: u32) -> Vec<u8> {
        let mut h = Vec::new();
        h.extend_from_slice(&magic.to_le_bytes());
        h.extend_from_slice(&2u16.to_le_bytes());
        h.extend_from_slice(&4u16.to_le_bytes());
        h.extend_from_slice(&0u32.to_le_bytes());
        h.extend_from_slice(&0u32.to_le_bytes());
        h.extend_from_slice(&65535u32.to_le_bytes());
        h.extend_from_slice(&1u32.to_le_bytes());
        h
    }

    #[test]
    fn header_only_file_yields_empty_sequence() {
        let c = read_pcap(&global_header_le(MAGIC_USEC)).unwrap();
        assert!(c.packets.is_empty());
    }

    #[test]
    fn hand_assembled_single_60_byte_frame() {
        // Build the file byte-by-byte per the record layout.
        let mut f = global_header_le(MAGIC_USEC);
        f.extend_from_slice(&7u32.to_le_bytes()); // ts_sec
        f.extend_from_slice(&250_000u32.to_le_bytes()); // ts_usec
        f.extend_from_slice(&60u32.to_le_bytes()); // incl_len
        f.extend_from_slice(&60u32.to_le_bytes()); // orig_len
        f.extend(std::iter::repeat(0xabu8).take(60));
        let c = read_pcap(&f).unwrap();
        assert_eq!(c.packets.len(), 1);
        assert_eq!(c.packets[0].link_bytes.len(), 60);
        assert_eq!(c.packets[0].capture_ts, 7_250_000);
    }

    #[test]
    fn byte_swapped_magic_parses_identically() {
        let pkt = RawPacket {
            capture_ts: 1_700_000_000_123_456,
            link_bytes: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14],
        };
        let le = write_pcap(std::slice::from_ref(&pkt));

        // Re-encode the identical content big-endian by hand.
        let mut be = Vec::new();
        be.extend_from_slice(&MAGIC_USEC.to_be_bytes());
        be.extend_from_slice(&2u16.to_be_bytes());
        be.extend_from_slice(&4u16.to_be_bytes());
        be.extend_from_slice(&0u32.to_be_bytes());
        be.extend_from_slice(&0u32.to_be_bytes());
        be.extend_from_slice(&65535u32.to_be_bytes());
        be.extend_from_slice(&1u32.to_be_bytes());
        be.extend_from_slice(&((pkt.capture_ts / 1_000_000) as u32).to_be_bytes());
        be.extend_from_slice(&((pkt.capture_ts % 1_000_000) as u32).to_be_bytes());
        be.extend_from_slice(&(pkt.link_bytes.len() as u32).to_be_bytes());
        be.extend_from_slice(&(pkt.link_bytes.len() as u32).to_be_bytes());
        be.extend_from_slice(&pkt.link_bytes);
        assert_eq!(u32::from_le_bytes(be[0..4].try_into().unwrap()), 0xd4c3_b2a1);

        let a = read_pcap(&le).unwrap();
        let b = read_pcap(&be).unwrap();
        assert_eq!(a.packets, b.packets);
    }

    #[test]
    fn nanosecond_files_down_convert() {
        let mut f = global_header_le(MAGIC_NSEC);
        f.extend_from_slice(&1u32.to_le_bytes());
        f.extend_from_slice(&999_999_999u32.to_le_bytes()); // ns
        f.extend_from_slice(&14u32.to_le_bytes());
        f.extend_from_slice(&14u32.to_le_bytes());
        f.extend(std::iter::repeat(0u8).take(14));
        let c = read_pcap(&f).unwrap();
        assert_eq!(c.packets[0].capture_ts, 1_999_999);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let mut f = global_header_le(MAGIC_USEC);
        f[0] = 0x00;
        assert!(matches!(read_pcap(&f), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_record_names_offset() {
        let mut f = global_header_le(MAGIC_USEC);
        f.extend_from_slice(&0u32.to_le_bytes());
        f.extend_from_slice(&0u32.to_le_bytes());
        f.extend_from_slice(&100u32.to_le_bytes());
        f.extend_from_slice(&100u32.to_le_bytes());
        f.extend_from_slice(&[0u8; 10]); // only 10 of the promised 100
        let err = read_pcap(&f).unwrap_err();
        assert!(err.to_string().contains("offset 40"), "{err}");
    }

    #[test]
    fn non_ethernet_link_type_rejected() {
        let mut f = global_header_le(MAGIC_USEC);
        f[20] = 101; // LINKTYPE_RAW
        assert!(matches!(read_pcap(&f), Err(Error::Format(_))));
    }

    #[test]
    fn timestamp_regressions_counted_not_fatal() {
        let pkts = vec![
            RawPacket { capture_ts: 2_000_000, link_bytes: vec![0; 14] },
            RawPacket { capture_ts: 1_000_000, link_bytes: vec![0; 14] },
            RawPacket { capture_ts: 3_000_000, link_bytes: vec![0; 14] },
        ];
        let c = read_pcap(&write_pcap(&pkts)).unwrap();
        assert_eq!(c.packets.len(), 3);
        assert_eq!(c.timestamp_regressions, 1);
    }

    #[test]
    fn round_trip_preserves_packets() {
        let pkts: Vec<RawPacket> = (0..5)
            .map(|i| RawPacket {
                capture_ts: 1_600_000_000_000_000 + i * 1000,
                link_bytes: (0..(14 + i as u8)).collect(),
            })
            .collect();
        let c = read_pcap(&write_pcap(&pkts)).unwrap();
        assert_eq!(c.packets, pkts);
    }
}
