//! Reconstruction of the fixed 30-byte header layout, per-approach byte
//! selection, and binary-image encoding.
//!
//! Byte layout (network byte order for multi-byte fields):
//!
//! | pos   | field                          |
//! |-------|--------------------------------|
//! | 0     | IP version/IHL                 |
//! | 1     | IP DSCP/ECN                    |
//! | 2-3   | IP total length                |
//! | 4-5   | IP identification              |
//! | 6-7   | IP flags/fragment offset       |
//! | 8     | IP TTL                         |
//! | 9     | IP protocol                    |
//! | 10-11 | TCP source port                |
//! | 12-13 | TCP destination port           |
//! | 14-15 | TCP data offset/flags          |
//! | 16-17 | TCP window                     |
//! | 18-19 | MBAP transaction id            |
//! | 20-21 | MBAP protocol id               |
//! | 22-23 | MBAP length                    |
//! | 24    | MBAP unit id                   |
//! | 25    | function code                  |
//! | 26-29 | first four PDU operand bytes   |
//!
//! Addresses and checksums are deliberately absent: in a single-master
//! network they leak identity without discriminative value.

use serde::{Deserialize, Serialize};

use crate::dissect::PacketFields;
use crate::error::{Error, Result};

/// The 30 reconstructed raw bytes in the fixed layout above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ByteVector30(pub [u8; 30]);

impl ByteVector30 {
    pub fn as_bytes(&self) -> &[u8; 30] {
        &self.0
    }
}

/// One of the five byte-selection approaches.
///
/// Each approach takes a contiguous slice of the 30-byte layout and unpacks
/// it into a fixed image grid of 8 * byte_count bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Approach {
    /// TCP/IP headers only: bytes 0-17, 12x12 image.
    A1,
    /// TCP/IP + MBAP + function code: bytes 0-25, 16x13 image.
    A2,
    /// All 30 bytes: 16x15 image.
    A2b,
    /// Application layer only (MBAP + function code): bytes 18-25, 8x8 image.
    A3,
    /// Application layer + PDU operands: bytes 18-29, 12x8 image.
    A3b,
}

impl Approach {
    pub const ALL: [Approach; 5] = [
        Approach::A1,
        Approach::A2,
        Approach::A2b,
        Approach::A3,
        Approach::A3b,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Approach::A1 => "1",
            Approach::A2 => "2",
            Approach::A2b => "2b",
            Approach::A3 => "3",
            Approach::A3b => "3b",
        }
    }

    /// Contiguous byte positions within the 30-byte layout.
    pub fn byte_range(self) -> std::ops::Range<usize> {
        match self {
            Approach::A1 => 0..18,
            Approach::A2 => 0..26,
            Approach::A2b => 0..30,
            Approach::A3 => 18..26,
            Approach::A3b => 18..30,
        }
    }

    pub fn byte_count(self) -> usize {
        self.byte_range().len()
    }

    /// Image (height, width); height * width == 8 * byte_count.
    pub fn image_dims(self) -> (usize, usize) {
        match self {
            Approach::A1 => (12, 12),
            Approach::A2 => (16, 13),
            Approach::A2b => (16, 15),
            Approach::A3 => (8, 8),
            Approach::A3b => (12, 8),
        }
    }
}

impl std::str::FromStr for Approach {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" => Ok(Approach::A1),
            "2" => Ok(Approach::A2),
            "2b" => Ok(Approach::A2b),
            "3" => Ok(Approach::A3),
            "3b" => Ok(Approach::A3b),
            other => Err(Error::config(format!("unknown approach: {other}"))),
        }
    }
}

impl std::fmt::Display for Approach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// H x W grid of bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub h: usize,
    pub w: usize,
    /// Row-major bits, one byte per bit, values 0 or 1. Rendered with black
    /// pixels for bit value 1.
    pub bits: Vec<u8>,
}

/// Rebuild the 30 raw bytes from decoded fields. Multi-byte fields split
/// high/low in network byte order; a PDU shorter than four bytes is
/// zero-padded, a longer one truncated to its first four operands.
pub fn reconstruct(fields: &PacketFields) -> ByteVector30 {
    let mut b = [0u8; 30];
    b[0] = fields.ip_version_ihl;
    b[1] = fields.ip_dscp_ecn;
    b[2..4].copy_from_slice(&fields.ip_total_len.to_be_bytes());
    b[4..6].copy_from_slice(&fields.ip_id.to_be_bytes());
    b[6..8].copy_from_slice(&fields.ip_flags_fragoff.to_be_bytes());
    b[8] = fields.ip_ttl;
    b[9] = fields.ip_protocol;
    b[10..12].copy_from_slice(&fields.tcp_src_port.to_be_bytes());
    b[12..14].copy_from_slice(&fields.tcp_dst_port.to_be_bytes());
    b[14..16].copy_from_slice(&fields.tcp_offset_flags.to_be_bytes());
    b[16..18].copy_from_slice(&fields.tcp_window.to_be_bytes());
    b[18..20].copy_from_slice(&fields.mbap_transaction_id.to_be_bytes());
    b[20..22].copy_from_slice(&fields.mbap_protocol_id.to_be_bytes());
    b[22..24].copy_from_slice(&fields.mbap_length.to_be_bytes());
    b[24] = fields.mbap_unit_id;
    b[25] = fields.func_code;
    for (i, v) in fields.pdu_bytes.iter().take(4).enumerate() {
        b[26 + i] = *v;
    }
    ByteVector30(b)
}

/// Select the approach's contiguous byte subset.
pub fn select(v: &ByteVector30, approach: Approach) -> Vec<u8> {
    v.0[approach.byte_range()].to_vec()
}

/// Unpack bytes into a binary image: bits MSB-first per byte, concatenated
/// and reshaped row-major into the approach's grid.
pub fn encode(bytes: &[u8], approach: Approach) -> Result<BinaryImage> {
    if bytes.len() != approach.byte_count() {
        return Err(Error::shape(format!(
            "approach {} expects {} bytes, got {}",
            approach.id(),
            approach.byte_count(),
            bytes.len()
        )));
    }
    let (h, w) = approach.image_dims();
    debug_assert_eq!(h * w, 8 * bytes.len());
    let mut bits = Vec::with_capacity(h * w);
    for &byte in bytes {
        for k in (0..8).rev() {
            bits.push((byte >> k) & 1);
        }
    }
    Ok(BinaryImage { h, w, bits })
}

/// Pack a binary image's bits back into bytes (MSB-first), the inverse of
/// [`encode`].
pub fn decode_bits(img: &BinaryImage) -> Vec<u8> {
    img.bits
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, b| (acc << 1) | (b & 1)))
        .collect()
}

/// Full per-packet encoding: reconstruct, select, unpack.
pub fn encode_packet(fields: &PacketFields, approach: Approach) -> BinaryImage {
    let bytes = select(&reconstruct(fields), approach);
    encode(&bytes, approach).expect("selection length matches approach by construction")
}

/// Slice the 30 layout bytes directly out of a raw Ethernet frame, assuming
/// a 20-byte IP header and the MBAP frame at the start of the TCP payload.
/// This is the independent raw-path oracle for [`reconstruct`].
pub fn raw_layout_slice(frame: &[u8]) -> Option<[u8; 30]> {
    if frame.len() < 14 + 20 {
        return None;
    }
    let ip = &frame[14..];
    if ip[0] != 0x45 {
        return None;
    }
    let data_off = (ip.get(20 + 12)? >> 4) as usize * 4;
    let payload_start = 20 + data_off;
    let mut b = [0u8; 30];
    b[0] = ip[0];
    b[1] = ip[1];
    b[2] = ip[2];
    b[3] = ip[3];
    b[4] = ip[4];
    b[5] = ip[5];
    b[6] = ip[6];
    b[7] = ip[7];
    b[8] = ip[8];
    b[9] = ip[9];
    // TCP ports, offset/flags, window (skipping seq/ack/checksum/urgent).
    b[10] = *ip.get(20)?;
    b[11] = *ip.get(21)?;
    b[12] = *ip.get(22)?;
    b[13] = *ip.get(23)?;
    b[14] = *ip.get(32)?;
    b[15] = *ip.get(33)?;
    b[16] = *ip.get(34)?;
    b[17] = *ip.get(35)?;
    // MBAP header + function code + first four operand bytes (zero padded).
    for i in 0..8 {
        b[18 + i] = *ip.get(payload_start + i)?;
    }
    let mbap_len = u16::from_be_bytes([b[22], b[23]]) as usize;
    let pdu_operands = mbap_len.saturating_sub(2); // unit id + function code
    for i in 0..4.min(pdu_operands) {
        b[26 + i] = ip.get(payload_start + 8 + i).copied()?;
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_fields() -> PacketFields {
        PacketFields {
            ip_version_ihl: 0x45,
            ip_dscp_ecn: 0,
            ip_total_len: 52,
            ip_id: 0x0102,
            ip_flags_fragoff: 0x4000,
            ip_ttl: 64,
            ip_protocol: 6,
            tcp_src_port: 49152,
            tcp_dst_port: 502,
            tcp_seq: 1,
            tcp_ack: 1,
            tcp_offset_flags: 0x5018,
            tcp_window: 8192,
            mbap_transaction_id: 0,
            mbap_protocol_id: 0,
            mbap_length: 6,
            mbap_unit_id: 1,
            func_code: 3,
            pdu_bytes: vec![0x00, 0x64, 0x00, 0x0a],
            frame_count: 1,
            byte_cnt: None,
            capture_ts: 0,
        }
    }

    #[test]
    fn reconstruct_places_fixed_bytes() {
        let f = sample_fields();
        let v = reconstruct(&f);
        // ip.hdr_len 20 -> IHL nibble 5 -> 0x45 at position 0.
        assert_eq!(v.0[0], 0x45);
        assert_eq!(v.0[9], 6);
        // txid 0 -> (0, 0).
        assert_eq!((v.0[18], v.0[19]), (0, 0));
        assert_eq!((v.0[24], v.0[25]), (1, 3));
        assert_eq!(&v.0[26..30], &[0x00, 0x64, 0x00, 0x0a]);
    }

    #[test]
    fn total_len_260_splits_hi_lo() {
        let mut f = sample_fields();
        f.ip_total_len = 260;
        let v = reconstruct(&f);
        assert_eq!((v.0[2], v.0[3]), (1, 4));
    }

    #[test]
    fn short_pdu_zero_padded_long_pdu_truncated() {
        let mut f = sample_fields();
        f.pdu_bytes = vec![0xaa];
        let v = reconstruct(&f);
        assert_eq!(&v.0[26..30], &[0xaa, 0, 0, 0]);

        f.pdu_bytes = vec![1, 2, 3, 4, 5, 6];
        let v = reconstruct(&f);
        assert_eq!(&v.0[26..30], &[1, 2, 3, 4]);
    }

    #[test]
    fn select_ranges_match_approaches() {
        let v = reconstruct(&sample_fields());
        assert_eq!(select(&v, Approach::A1), &v.0[0..18]);
        assert_eq!(select(&v, Approach::A2).len(), 26);
        // 2b is the identity.
        assert_eq!(select(&v, Approach::A2b), v.0.to_vec());
        // Approach 3 starts at the transaction-id high byte.
        let s3 = select(&v, Approach::A3);
        assert_eq!(s3.len(), 8);
        assert_eq!(s3[0], v.0[18]);
        assert_eq!(select(&v, Approach::A3b).len(), 12);
    }

    #[test]
    fn image_dims_are_eight_bits_per_byte() {
        for a in Approach::ALL {
            let (h, w) = a.image_dims();
            assert_eq!(h * w, 8 * a.byte_count(), "approach {}", a.id());
        }
    }

    #[test]
    fn encode_all_zero_and_all_one() {
        let img = encode(&[0u8; 18], Approach::A1).unwrap();
        assert_eq!((img.h, img.w), (12, 12));
        assert!(img.bits.iter().all(|b| *b == 0));

        let img = encode(&[0xffu8; 18], Approach::A1).unwrap();
        assert!(img.bits.iter().all(|b| *b == 1));
    }

    #[test]
    fn encode_msb_first() {
        // Independent base-2 expansion oracle for the first byte.
        let byte = 0x45u8;
        let expect: Vec<u8> = (0..8).map(|i| (byte as u32 >> (7 - i) & 1) as u8).collect();
        assert_eq!(expect, vec![0, 1, 0, 0, 0, 1, 0, 1]);

        let mut bytes = vec![0u8; 18];
        bytes[0] = byte;
        let img = encode(&bytes, Approach::A1).unwrap();
        assert_eq!(&img.bits[..8], &expect[..]);
    }

    #[test]
    fn encode_length_mismatch_is_error() {
        assert!(encode(&[0u8; 17], Approach::A1).is_err());
    }

    #[test]
    fn encoding_is_deterministic() {
        let f = sample_fields();
        assert_eq!(encode_packet(&f, Approach::A2b), encode_packet(&f, Approach::A2b));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Bytes are recoverable from the image by packing MSB-first.
            #[test]
            fn bit_unpack_round_trips(bytes in proptest::collection::vec(any::<u8>(), 30)) {
                let arr: [u8; 30] = bytes.clone().try_into().unwrap();
                let v = ByteVector30(arr);
                for a in Approach::ALL {
                    let selected = select(&v, a);
                    let img = encode(&selected, a).unwrap();
                    prop_assert!(img.bits.iter().all(|b| *b <= 1));
                    prop_assert_eq!(img.bits.len(), img.h * img.w);
                    prop_assert_eq!(decode_bits(&img), selected);
                }
            }
        }
    }
}
