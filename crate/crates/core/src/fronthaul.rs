//! Fronthaul compression: uniform scalar quantization, canonical Huffman
//! coding, and exact bit accounting for CPU-AP messages.
//!
//! The quantizer is midtread on an inclusive range: level `j` reconstructs to
//! `lo + j * delta` with `delta = (hi - lo) / (2^Q - 1)`, so both endpoints
//! are exactly representable and, for the [0,1] detection vectors, exact
//! zeros stay exact. That zero preservation is what makes the entropy coder
//! effective on sparse payloads.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::linalg::{C64, CMat};
use crate::math;

/// Uniform scalar quantizer over `[lo, hi]` with `2^bits` levels; symbols
/// are stored as `u32`, so 1..=31 bits per scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    pub bits: u32,
    pub lo: f64,
    pub hi: f64,
}

impl QuantizerSpec {
    /// Quantizer for values in [0, 1].
    pub fn unit(bits: u32) -> Self {
        assert!((1..=31).contains(&bits));
        Self {
            bits,
            lo: 0.0,
            hi: 1.0,
        }
    }

    /// Symmetric quantizer for values in [-scale, scale].
    pub fn symmetric(bits: u32, scale: f64) -> Self {
        assert!((1..=31).contains(&bits));
        Self {
            bits,
            lo: -scale,
            hi: scale,
        }
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    /// Step between adjacent reconstruction levels.
    pub fn delta(&self) -> f64 {
        (self.hi - self.lo) / (self.levels() - 1) as f64
    }

    /// Quantize one value; out-of-range input clamps.
    pub fn quantize_value(&self, v: f64) -> (u32, f64) {
        let clamped = v.clamp(self.lo, self.hi);
        let delta = self.delta();
        let symbol = math::round((clamped - self.lo) / delta) as u32;
        let symbol = symbol.min((self.levels() - 1) as u32);
        (symbol, self.lo + symbol as f64 * delta)
    }
}

/// Quantize a real vector: symbols plus reconstruction.
pub fn quantize(values: &[f64], spec: &QuantizerSpec) -> (Vec<u32>, Vec<f64>) {
    let mut symbols = Vec::with_capacity(values.len());
    let mut recon = Vec::with_capacity(values.len());
    for &v in values {
        let (s, r) = spec.quantize_value(v);
        symbols.push(s);
        recon.push(r);
    }
    (symbols, recon)
}

/// Quantized Hermitian covariance: the `(L+T)^2` independent real scalars
/// (diagonal, then upper-triangle real and imaginary parts) with a
/// per-matrix symmetric range. The scale travels as full-precision side
/// info and is not part of the quantized bit budget.
#[derive(Debug, Clone)]
pub struct CovPayload {
    pub symbols: Vec<u32>,
    pub recon: CMat,
    pub scale: f64,
}

pub fn quantize_covariance(r: &CMat, bits: u32) -> CovPayload {
    let n = r.dim();
    let mut scale = 0.0f64;
    for i in 0..n {
        scale = scale.max(r[(i, i)].re.abs());
        for j in (i + 1)..n {
            scale = scale.max(r[(i, j)].re.abs()).max(r[(i, j)].im.abs());
        }
    }
    if scale == 0.0 {
        scale = 1.0;
    }
    let spec = QuantizerSpec::symmetric(bits, scale);

    let mut symbols = Vec::with_capacity(n * n);
    let mut recon = CMat::zeros(n);
    for i in 0..n {
        let (s, v) = spec.quantize_value(r[(i, i)].re);
        symbols.push(s);
        recon[(i, i)] = C64::new(v, 0.0);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (sr, vr) = spec.quantize_value(r[(i, j)].re);
            let (si, vi) = spec.quantize_value(r[(i, j)].im);
            symbols.push(sr);
            symbols.push(si);
            recon[(i, j)] = C64::new(vr, vi);
            recon[(j, i)] = C64::new(vr, -vi);
        }
    }
    CovPayload {
        symbols,
        recon,
        scale,
    }
}

/// Quantized raw signal block: `2 * len` real scalars with a per-block
/// symmetric range, for the regime where the block is cheaper to forward
/// than its covariance.
#[derive(Debug, Clone)]
pub struct SignalPayload {
    pub symbols: Vec<u32>,
    pub recon: Vec<C64>,
    pub scale: f64,
}

pub fn quantize_signal(y: &[C64], bits: u32) -> SignalPayload {
    let mut scale = 0.0f64;
    for v in y {
        scale = scale.max(v.re.abs()).max(v.im.abs());
    }
    if scale == 0.0 {
        scale = 1.0;
    }
    let spec = QuantizerSpec::symmetric(bits, scale);
    let mut symbols = Vec::with_capacity(2 * y.len());
    let mut recon = Vec::with_capacity(y.len());
    for v in y {
        let (sr, vr) = spec.quantize_value(v.re);
        let (si, vi) = spec.quantize_value(v.im);
        symbols.push(sr);
        symbols.push(si);
        recon.push(C64::new(vr, vi));
    }
    SignalPayload {
        symbols,
        recon,
        scale,
    }
}

/// Canonical Huffman code built from an empirical histogram.
///
/// Code lengths are listed by symbol index (the wire layout); codes are
/// assigned canonically, payload bits MSB-first. A single-symbol alphabet
/// uses one bit per symbol.
#[derive(Debug, Clone)]
pub struct HuffmanCode {
    /// `(symbol, code length)` sorted by symbol.
    lengths: Vec<(u32, u8)>,
}

impl HuffmanCode {
    pub fn from_symbols(symbols: &[u32]) -> Self {
        assert!(!symbols.is_empty(), "empty payload");
        let mut hist: BTreeMap<u32, u64> = BTreeMap::new();
        for &s in symbols {
            *hist.entry(s).or_insert(0) += 1;
        }
        if hist.len() == 1 {
            let symbol = *hist.keys().next().unwrap();
            return Self {
                lengths: vec![(symbol, 1)],
            };
        }

        // Huffman tree over (count, insertion order) for deterministic ties.
        struct Node {
            children: Option<(usize, usize)>,
            symbol: u32,
        }
        let mut nodes: Vec<Node> = Vec::new();
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
        for (&symbol, &count) in &hist {
            nodes.push(Node {
                children: None,
                symbol,
            });
            heap.push(Reverse((count, nodes.len() - 1)));
        }
        while heap.len() > 1 {
            let Reverse((c1, n1)) = heap.pop().unwrap();
            let Reverse((c2, n2)) = heap.pop().unwrap();
            nodes.push(Node {
                children: Some((n1, n2)),
                symbol: 0,
            });
            heap.push(Reverse((c1 + c2, nodes.len() - 1)));
        }
        let root = heap.pop().unwrap().0 .1;

        let mut lengths: Vec<(u32, u8)> = Vec::with_capacity(hist.len());
        let mut stack = vec![(root, 0u8)];
        while let Some((idx, depth)) = stack.pop() {
            match nodes[idx].children {
                Some((a, b)) => {
                    stack.push((a, depth + 1));
                    stack.push((b, depth + 1));
                }
                None => lengths.push((nodes[idx].symbol, depth)),
            }
        }
        lengths.sort_by_key(|&(s, _)| s);
        Self { lengths }
    }

    /// Code lengths by symbol index (the side-info layout).
    pub fn lengths(&self) -> &[(u32, u8)] {
        &self.lengths
    }

    fn canonical_codes(&self) -> Vec<(u32, u8, u64)> {
        let mut order: Vec<(u8, u32)> =
            self.lengths.iter().map(|&(s, l)| (l, s)).collect();
        order.sort();
        let mut codes = Vec::with_capacity(order.len());
        let mut code = 0u64;
        let mut prev_len = 0u8;
        for &(len, symbol) in &order {
            code <<= len - prev_len;
            codes.push((symbol, len, code));
            code += 1;
            prev_len = len;
        }
        codes.sort_by_key(|&(s, _, _)| s);
        codes
    }

    /// Encode to an MSB-first bitstream; returns (bit count, packed bytes).
    pub fn encode(&self, symbols: &[u32]) -> (u64, Vec<u8>) {
        let codes = self.canonical_codes();
        let lookup: BTreeMap<u32, (u8, u64)> =
            codes.iter().map(|&(s, l, c)| (s, (l, c))).collect();
        let mut bits = 0u64;
        let mut out: Vec<u8> = Vec::new();
        let mut acc = 0u8;
        let mut used = 0u8;
        for s in symbols {
            let &(len, code) = lookup.get(s).expect("symbol not in codebook");
            for pos in (0..len).rev() {
                let bit = ((code >> pos) & 1) as u8;
                acc = (acc << 1) | bit;
                used += 1;
                if used == 8 {
                    out.push(acc);
                    acc = 0;
                    used = 0;
                }
                bits += 1;
            }
        }
        if used > 0 {
            out.push(acc << (8 - used));
        }
        (bits, out)
    }

    /// Decode `count` symbols from an MSB-first bitstream.
    pub fn decode(&self, payload: &[u8], count: usize) -> Vec<u32> {
        let codes = self.canonical_codes();
        let mut by_len: BTreeMap<u8, Vec<(u64, u32)>> = BTreeMap::new();
        for &(s, l, c) in &codes {
            by_len.entry(l).or_default().push((c, s));
        }
        for v in by_len.values_mut() {
            v.sort();
        }
        let mut out = Vec::with_capacity(count);
        let mut bitpos = 0usize;
        'outer: for _ in 0..count {
            let mut code = 0u64;
            let mut len = 0u8;
            loop {
                let byte = payload[bitpos / 8];
                let bit = (byte >> (7 - (bitpos % 8))) & 1;
                code = (code << 1) | bit as u64;
                len += 1;
                bitpos += 1;
                if let Some(cands) = by_len.get(&len) {
                    if let Ok(i) = cands.binary_search_by_key(&code, |&(c, _)| c) {
                        out.push(cands[i].1);
                        continue 'outer;
                    }
                }
            }
        }
        out
    }

    /// Payload bits for a symbol stream under this code.
    pub fn payload_bits(&self, symbols: &[u32]) -> u64 {
        let lookup: BTreeMap<u32, u8> = self.lengths.iter().cloned().collect();
        symbols.iter().map(|s| lookup[s] as u64).sum()
    }
}

/// Build a canonical code from the payload, encode, decode, and return the
/// payload bit count together with the decoded symbols.
pub fn huffman_roundtrip(symbols: &[u32]) -> (u64, Vec<u32>) {
    let code = HuffmanCode::from_symbols(symbols);
    let (bits, packed) = code.encode(symbols);
    let decoded = code.decode(&packed, symbols.len());
    (bits, decoded)
}

/// Closed-form fronthaul budget for one-shot centralized detection: each AP
/// forwards either the covariance ((L+T)^2 scalars) or the raw block
/// (2(L+T)N scalars), whichever is smaller.
pub fn bits_alg1(m: usize, q1: u32, l: usize, t: usize, n: usize) -> u64 {
    let d = (l + t) as u64;
    if l + t <= 2 * n {
        m as u64 * q1 as u64 * d * d
    } else {
        2 * m as u64 * q1 as u64 * d * n as u64
    }
}

/// Closed-form fronthaul budget for the accelerated consensus detector over
/// `i` iterations: `(2i - 1)` messages of K(T+1) scalars per AP (the final
/// broadcast is skipped).
pub fn bits_alg3(m: usize, k: usize, q2: u32, t: usize, i: usize) -> u64 {
    (2 * i as u64 - 1) * m as u64 * k as u64 * q2 as u64 * (t as u64 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ApToCpu,
    CpuToAp,
}

/// One fronthaul message.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord {
    pub iteration: usize,
    pub direction: Direction,
    pub payload_len: usize,
    /// How many payload symbols are the zero level.
    pub zero_symbols: usize,
    pub raw_bits: u64,
    pub huffman_bits: u64,
}

/// Exact per-message bit accounting. Huffman totals exclude codebook side
/// info, matching the raw totals which exclude the quantizer scale.
#[derive(Debug, Clone, Default)]
pub struct BitLedger {
    pub records: Vec<MessageRecord>,
}

impl BitLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_message(
        &mut self,
        iteration: usize,
        direction: Direction,
        symbols: &[u32],
        bits_per_symbol: u32,
    ) {
        let (huffman_bits, decoded) = huffman_roundtrip(symbols);
        debug_assert_eq!(decoded, symbols);
        self.records.push(MessageRecord {
            iteration,
            direction,
            payload_len: symbols.len(),
            zero_symbols: symbols.iter().filter(|&&s| s == 0).count(),
            raw_bits: symbols.len() as u64 * bits_per_symbol as u64,
            huffman_bits,
        });
    }

    pub fn raw_total(&self) -> u64 {
        self.records.iter().map(|r| r.raw_bits).sum()
    }

    pub fn huffman_total(&self) -> u64 {
        self.records.iter().map(|r| r.huffman_bits).sum()
    }

    pub fn merge(&mut self, other: BitLedger) {
        self.records.extend(other.records);
    }
}
