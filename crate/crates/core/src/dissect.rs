//! Ethernet/IPv4/TCP/Modbus TCP dissection of raw frames.
//!
//! `dissect` never panics: every frame either yields the decoded
//! [`PacketFields`] of its first complete MBAP frame or a categorized
//! [`SkipReason`]. Only 20-byte IPv4 headers are accepted (packets with IP
//! options are counted and skipped) and no cross-segment reassembly is done:
//! a TCP segment keeps its complete leading MBAP frames and any partial tail
//! is ignored.

use serde::{Deserialize, Serialize};

use crate::pcap::RawPacket;

pub const MODBUS_PORT: u16 = 502;

/// Decoded protocol fields of one Modbus TCP packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketFields {
    pub ip_version_ihl: u8,
    pub ip_dscp_ecn: u8,
    pub ip_total_len: u16,
    pub ip_id: u16,
    pub ip_flags_fragoff: u16,
    pub ip_ttl: u8,
    pub ip_protocol: u8,
    pub tcp_src_port: u16,
    pub tcp_dst_port: u16,
    pub tcp_seq: u32,
    pub tcp_ack: u32,
    pub tcp_offset_flags: u16,
    pub tcp_window: u16,
    pub mbap_transaction_id: u16,
    pub mbap_protocol_id: u16,
    pub mbap_length: u16,
    pub mbap_unit_id: u8,
    pub func_code: u8,
    /// PDU bytes after the function code (first frame only).
    pub pdu_bytes: Vec<u8>,
    /// Number of complete MBAP frames in the TCP segment.
    pub frame_count: u16,
    /// Modbus byte-count field when the function code carries one.
    pub byte_cnt: Option<u8>,
    pub capture_ts: u64,
}

impl PacketFields {
    /// True when the packet travels from the field device to the master.
    pub fn is_response(&self) -> bool {
        self.tcp_src_port == MODBUS_PORT
    }
}

/// Why a frame was not emitted as a Modbus TCP packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    /// Not IPv4 (wrong ethertype or IP version).
    NonIp,
    /// IPv4 but not TCP.
    NonTcp,
    /// TCP but neither port is 502.
    NonModbusPort,
    /// Port 502 with an empty TCP payload (bare ACKs and handshakes).
    NoMbapPayload,
    /// IPv4 header with options (IHL > 5).
    IpOptions,
    /// Truncated or inconsistent lengths at any layer.
    Malformed,
}

impl SkipReason {
    pub const ALL: [SkipReason; 6] = [
        SkipReason::NonIp,
        SkipReason::NonTcp,
        SkipReason::NonModbusPort,
        SkipReason::NoMbapPayload,
        SkipReason::IpOptions,
        SkipReason::Malformed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SkipReason::NonIp => "non-ip",
            SkipReason::NonTcp => "non-tcp",
            SkipReason::NonModbusPort => "non-502",
            SkipReason::NoMbapPayload => "no-mbap-payload",
            SkipReason::IpOptions => "ip-options",
            SkipReason::Malformed => "malformed",
        }
    }
}

fn be16(b: &[u8], off: usize) -> u16 {
    u16::from_be_bytes([b[off], b[off + 1]])
}

fn be32(b: &[u8], off: usize) -> u32 {
    u32::from_be_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

/// Function codes whose *response* PDU starts with a byte count.
fn response_has_byte_count(func: u8) -> bool {
    matches!(func, 1 | 2 | 3 | 4 | 0x17)
}

/// Function codes whose *request* PDU carries a byte count at offset 4.
fn request_has_byte_count(func: u8) -> bool {
    matches!(func, 15 | 16)
}

/// Dissect one captured frame into Modbus TCP packet fields.
pub fn dissect(pkt: &RawPacket) -> Result<PacketFields, SkipReason> {
    let frame = &pkt.link_bytes;
    if frame.len() < 14 {
        return Err(SkipReason::Malformed);
    }
    if be16(frame, 12) != 0x0800 {
        return Err(SkipReason::NonIp);
    }
    let ip = &frame[14..];
    if ip.len() < 20 {
        return Err(SkipReason::Malformed);
    }
    let version = ip[0] >> 4;
    let ihl = ip[0] & 0x0f;
    if version != 4 {
        return Err(SkipReason::NonIp);
    }
    if ihl > 5 {
        return Err(SkipReason::IpOptions);
    }
    if ihl < 5 {
        return Err(SkipReason::Malformed);
    }
    let total_len = be16(ip, 2) as usize;
    if total_len < 20 || total_len > ip.len() {
        // Total length may be smaller than the frame (Ethernet padding) but
        // never larger.
        return Err(SkipReason::Malformed);
    }
    if ip[9] != 6 {
        return Err(SkipReason::NonTcp);
    }
    let flags_fragoff = be16(ip, 6);
    if flags_fragoff & 0x1fff != 0 {
        // Non-first fragment: no TCP header present.
        return Err(SkipReason::Malformed);
    }

    let ip_payload = &ip[20..total_len];
    if ip_payload.len() < 20 {
        return Err(SkipReason::Malformed);
    }
    let src_port = be16(ip_payload, 0);
    let dst_port = be16(ip_payload, 2);
    if src_port != MODBUS_PORT && dst_port != MODBUS_PORT {
        return Err(SkipReason::NonModbusPort);
    }
    let data_off = (ip_payload[12] >> 4) as usize * 4;
    if data_off < 20 || data_off > ip_payload.len() {
        return Err(SkipReason::Malformed);
    }
    let payload = &ip_payload[data_off..];
    if payload.is_empty() {
        return Err(SkipReason::NoMbapPayload);
    }

    // Walk MBAP frames. Complete leading frames count; a partial or invalid
    // tail after at least one complete frame is ignored.
    let mut pos = 0usize;
    let mut frame_count = 0u16;
    let mut first: Option<(usize, usize)> = None; // (start, end) of first ADU
    while payload.len() - pos >= 7 {
        let proto = be16(payload, pos + 2);
        let len = be16(payload, pos + 4) as usize;
        if proto != 0 || len < 2 {
            break;
        }
        let end = match pos.checked_add(6 + len) {
            Some(e) if e <= payload.len() => e,
            _ => break,
        };
        if first.is_none() {
            first = Some((pos, end));
        }
        frame_count = frame_count.saturating_add(1);
        pos = end;
    }
    let (start, end) = match first {
        Some(f) => f,
        None => return Err(SkipReason::Malformed),
    };

    let func_code = payload[start + 7];
    let pdu_bytes = payload[start + 8..end].to_vec();
    let is_response = src_port == MODBUS_PORT;
    let byte_cnt = if is_response && response_has_byte_count(func_code) {
        pdu_bytes.first().copied()
    } else if !is_response && request_has_byte_count(func_code) {
        pdu_bytes.get(4).copied()
    } else {
        None
    };

    Ok(PacketFields {
        ip_version_ihl: ip[0],
        ip_dscp_ecn: ip[1],
        ip_total_len: total_len as u16,
        ip_id: be16(ip, 4),
        ip_flags_fragoff: flags_fragoff,
        ip_ttl: ip[8],
        ip_protocol: ip[9],
        tcp_src_port: src_port,
        tcp_dst_port: dst_port,
        tcp_seq: be32(ip_payload, 4),
        tcp_ack: be32(ip_payload, 8),
        tcp_offset_flags: be16(ip_payload, 12),
        tcp_window: be16(ip_payload, 14),
        mbap_transaction_id: be16(payload, start),
        mbap_protocol_id: be16(payload, start + 2),
        mbap_length: be16(payload, start + 4) as u16,
        mbap_unit_id: payload[start + 6],
        func_code,
        pdu_bytes,
        frame_count,
        byte_cnt,
        capture_ts: pkt.capture_ts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hand-assemble an Ethernet/IPv4/TCP frame around a given TCP payload.
    fn frame(src_port: u16, dst_port: u16, payload: &[u8]) -> Vec<u8> {
        let mut f = Vec::new();
        f.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01]); // dst MAC
        f.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02]); // src MAC
        f.extend_from_slice(&0x0800u16.to_be_bytes());
        // IPv4 header
        let total_len = 20 + 20 + payload.len();
        f.push(0x45);
        f.push(0x00);
        f.extend_from_slice(&(total_len as u16).to_be_bytes());
        f.extend_from_slice(&0x1234u16.to_be_bytes()); // id
        f.extend_from_slice(&0x4000u16.to_be_bytes()); // DF
        f.push(64); // ttl
        f.push(6); // tcp
        f.extend_from_slice(&0u16.to_be_bytes()); // checksum (unused)
        f.extend_from_slice(&[10, 0, 0, 1]);
        f.extend_from_slice(&[10, 0, 0, 2]);
        // TCP header
        f.extend_from_slice(&src_port.to_be_bytes());
        f.extend_from_slice(&dst_port.to_be_bytes());
        f.extend_from_slice(&1000u32.to_be_bytes());
        f.extend_from_slice(&2000u32.to_be_bytes());
        f.extend_from_slice(&0x5018u16.to_be_bytes()); // offset 5, PSH|ACK
        f.extend_from_slice(&8192u16.to_be_bytes());
        f.extend_from_slice(&0u16.to_be_bytes()); // checksum
        f.extend_from_slice(&0u16.to_be_bytes()); // urgent
        f.extend_from_slice(payload);
        f
    }

    fn adu(txid: u16, unit: u8, func: u8, operands: &[u8]) -> Vec<u8> {
        let mut a = Vec::new();
        a.extend_from_slice(&txid.to_be_bytes());
        a.extend_from_slice(&0u16.to_be_bytes());
        a.extend_from_slice(&((2 + operands.len()) as u16).to_be_bytes());
        a.push(unit);
        a.push(func);
        a.extend_from_slice(operands);
        a
    }

    fn pkt(bytes: Vec<u8>) -> RawPacket {
        RawPacket {
            capture_ts: 42,
            link_bytes: bytes,
        }
    }

    #[test]
    fn hand_built_modbus_request_dissects_field_by_field() {
        let payload = adu(1, 1, 3, &[0x00, 0x00, 0x00, 0x0a]);
        let f = dissect(&pkt(frame(49152, 502, &payload))).unwrap();
        assert_eq!(f.ip_version_ihl, 0x45);
        assert_eq!(f.ip_dscp_ecn, 0);
        assert_eq!(f.ip_total_len, 52);
        assert_eq!(f.ip_id, 0x1234);
        assert_eq!(f.ip_flags_fragoff, 0x4000);
        assert_eq!(f.ip_ttl, 64);
        assert_eq!(f.ip_protocol, 6);
        assert_eq!(f.tcp_src_port, 49152);
        assert_eq!(f.tcp_dst_port, 502);
        assert_eq!(f.tcp_seq, 1000);
        assert_eq!(f.tcp_ack, 2000);
        assert_eq!(f.tcp_offset_flags, 0x5018);
        assert_eq!(f.tcp_window, 8192);
        assert_eq!(f.mbap_transaction_id, 1);
        assert_eq!(f.mbap_protocol_id, 0);
        assert_eq!(f.mbap_length, 6);
        assert_eq!(f.mbap_unit_id, 1);
        assert_eq!(f.func_code, 3);
        assert_eq!(f.pdu_bytes, vec![0x00, 0x00, 0x00, 0x0a]);
        assert_eq!(f.frame_count, 1);
        assert_eq!(f.byte_cnt, None);
        assert_eq!(f.capture_ts, 42);
    }

    #[test]
    fn udp_frame_skips_as_non_tcp() {
        let mut b = frame(49152, 502, &adu(1, 1, 3, &[0, 0, 0, 1]));
        b[14 + 9] = 17; // protocol = UDP
        assert_eq!(dissect(&pkt(b)), Err(SkipReason::NonTcp));
    }

    #[test]
    fn arp_frame_skips_as_non_ip() {
        let mut b = frame(49152, 502, &[]);
        b[12] = 0x08;
        b[13] = 0x06;
        assert_eq!(dissect(&pkt(b)), Err(SkipReason::NonIp));
    }

    #[test]
    fn wrong_port_skips() {
        let b = frame(49152, 8080, &adu(1, 1, 3, &[0, 0, 0, 1]));
        assert_eq!(dissect(&pkt(b)), Err(SkipReason::NonModbusPort));
    }

    #[test]
    fn empty_payload_skips_as_no_mbap() {
        let b = frame(502, 49152, &[]);
        assert_eq!(dissect(&pkt(b)), Err(SkipReason::NoMbapPayload));
    }

    #[test]
    fn ip_options_counted_and_skipped() {
        let mut b = frame(49152, 502, &adu(1, 1, 3, &[0, 0, 0, 1]));
        b[14] = 0x46; // IHL = 6
        assert_eq!(dissect(&pkt(b)), Err(SkipReason::IpOptions));
    }

    #[test]
    fn stacked_adus_count_frames() {
        let mut payload = adu(7, 1, 3, &[0, 0, 0, 1]);
        payload.extend(adu(8, 1, 3, &[0, 10, 0, 2]));
        let f = dissect(&pkt(frame(49152, 502, &payload))).unwrap();
        assert_eq!(f.frame_count, 2);
        // First frame's fields are reported.
        assert_eq!(f.mbap_transaction_id, 7);
    }

    #[test]
    fn partial_trailing_frame_keeps_leading() {
        let mut payload = adu(7, 1, 3, &[0, 0, 0, 1]);
        payload.extend(&adu(8, 1, 3, &[0, 10, 0, 2])[..5]); // truncated tail
        let f = dissect(&pkt(frame(49152, 502, &payload))).unwrap();
        assert_eq!(f.frame_count, 1);
    }

    #[test]
    fn mbap_length_exceeding_segment_is_malformed() {
        let mut payload = adu(1, 1, 3, &[0, 0, 0, 1]);
        payload[5] = 200; // length 200 with only 6 bytes present
        assert_eq!(
            dissect(&pkt(frame(49152, 502, &payload))),
            Err(SkipReason::Malformed)
        );
    }

    #[test]
    fn ip_total_len_exceeding_frame_is_malformed() {
        let mut b = frame(49152, 502, &adu(1, 1, 3, &[0, 0, 0, 1]));
        let bad = (b.len() as u16 - 14 + 1).to_be_bytes();
        b[16] = bad[0];
        b[17] = bad[1];
        assert_eq!(dissect(&pkt(b)), Err(SkipReason::Malformed));
    }

    #[test]
    fn response_byte_count_extracted() {
        // func 3 response: byte_cnt then data.
        let mut operands = vec![171u8];
        operands.extend(std::iter::repeat(0u8).take(171));
        let payload = adu(9, 1, 3, &operands);
        let f = dissect(&pkt(frame(502, 49152, &payload))).unwrap();
        assert_eq!(f.byte_cnt, Some(171));
        assert!(f.is_response());

        // Same bytes as a request carry no byte count for func 3.
        let f = dissect(&pkt(frame(49152, 502, &payload))).unwrap();
        assert_eq!(f.byte_cnt, None);
    }

    #[test]
    fn write_multiple_request_byte_count() {
        // func 16 request: addr(2) count(2) byte_count data...
        let payload = adu(3, 1, 16, &[0, 10, 0, 2, 4, 0xde, 0xad, 0xbe, 0xef]);
        let f = dissect(&pkt(frame(49152, 502, &payload))).unwrap();
        assert_eq!(f.byte_cnt, Some(4));
    }

    #[test]
    fn ethernet_padding_tolerated() {
        let mut b = frame(49152, 502, &adu(1, 1, 3, &[0, 0, 0, 1]));
        b.extend(std::iter::repeat(0u8).take(8)); // pad beyond ip_total_len
        let f = dissect(&pkt(b)).unwrap();
        assert_eq!(f.frame_count, 1);
    }

    mod fuzz {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // dissect never panics on arbitrary bytes.
            #[test]
            fn dissect_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
                let _ = dissect(&RawPacket { capture_ts: 0, link_bytes: bytes });
            }

            // Flipping any one byte of a valid frame never panics either.
            #[test]
            fn mutated_valid_frame_never_panics(idx in 0usize..66, val in any::<u8>()) {
                let payload = adu(1, 1, 3, &[0, 0, 0, 10]);
                let mut b = frame(49152, 502, &payload);
                let i = idx % b.len();
                b[i] = val;
                let _ = dissect(&pkt(b));
            }
        }
    }
}
