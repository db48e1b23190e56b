//! Canonical Huffman coding over signed integer symbols.
//!
//! The serialized table is the symbol count followed by the sorted symbols
//! (zigzag varint deltas) and one code-length byte per symbol. Codes are
//! assigned canonically from the lengths, so nothing else is stored.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::bits::{unzigzag, zigzag, BitReader, BitWriter, ByteCursor, PutLe};
use crate::{Error, Result};

pub const MAX_CODE_LEN: u8 = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanCode {
    /// Symbols in ascending order with their code lengths.
    symbols: Vec<i32>,
    lengths: Vec<u8>,
    /// Per-symbol codes, aligned with `symbols`.
    codes: Vec<u64>,
    // Canonical decode tables, indexed by code length.
    first_code: Vec<u64>,
    count: Vec<u32>,
    offset: Vec<u32>,
    by_code: Vec<i32>,
}

impl HuffmanCode {
    /// Builds a length-limited code for the observed symbol frequencies.
    pub fn from_symbols(data: &[i32]) -> Self {
        let mut freq: BTreeMap<i32, u64> = BTreeMap::new();
        for &s in data {
            *freq.entry(s).or_default() += 1;
        }
        let symbols: Vec<i32> = freq.keys().copied().collect();
        let mut weights: Vec<u64> = freq.values().copied().collect();
        let lengths = loop {
            let lengths = code_lengths(&weights);
            if lengths.iter().all(|&l| l <= MAX_CODE_LEN) {
                break lengths;
            }
            for w in &mut weights {
                *w = (*w >> 1).max(1);
            }
        };
        Self::from_lengths(symbols, lengths).expect("valid generated lengths")
    }

    fn from_lengths(symbols: Vec<i32>, lengths: Vec<u8>) -> Result<Self> {
        if lengths.iter().any(|&l| l == 0 || l > MAX_CODE_LEN) {
            return Err(Error::Malformed("huffman code length out of range".into()));
        }
        let maxlen = lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut count = vec![0u32; maxlen + 1];
        for &l in &lengths {
            count[l as usize] += 1;
        }
        // Kraft check keeps the decoder's arithmetic in range.
        let kraft: u64 = lengths.iter().map(|&l| 1u64 << (MAX_CODE_LEN - l)).sum();
        if kraft > 1u64 << MAX_CODE_LEN {
            return Err(Error::Malformed("huffman lengths violate the Kraft inequality".into()));
        }
        let mut order: Vec<usize> = (0..symbols.len()).collect();
        order.sort_by_key(|&i| (lengths[i], symbols[i]));
        let mut first_code = vec![0u64; maxlen + 1];
        let mut offset = vec![0u32; maxlen + 1];
        let mut code = 0u64;
        let mut seen = 0u32;
        for len in 1..=maxlen {
            code = (code + count[len - 1] as u64) << 1;
            first_code[len] = code;
            offset[len] = seen;
            seen += count[len];
        }
        let mut codes = vec![0u64; symbols.len()];
        let mut next = first_code.clone();
        let mut by_code = Vec::with_capacity(symbols.len());
        for &i in &order {
            let l = lengths[i] as usize;
            codes[i] = next[l];
            next[l] += 1;
            by_code.push(symbols[i]);
        }
        Ok(Self { symbols, lengths, codes, first_code, count, offset, by_code })
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn code_length(&self, symbol: i32) -> Option<u8> {
        self.symbols.binary_search(&symbol).ok().map(|i| self.lengths[i])
    }

    pub fn write_table(&self, out: &mut Vec<u8>) {
        out.put_u32(self.symbols.len() as u32);
        let mut prev = 0i64;
        for (n, &s) in self.symbols.iter().enumerate() {
            let s = s as i64;
            out.put_varint(if n == 0 { zigzag(s) } else { (s - prev) as u64 });
            prev = s;
        }
        out.extend_from_slice(&self.lengths);
    }

    pub fn read_table(cur: &mut ByteCursor<'_>) -> Result<Self> {
        let n = cur.u32()? as usize;
        let mut symbols = Vec::with_capacity(n.min(1 << 20));
        let mut prev = 0i64;
        for i in 0..n {
            let v = cur.varint()?;
            let s = if i == 0 { unzigzag(v) } else { prev + v as i64 };
            if i > 0 && v == 0 {
                return Err(Error::Malformed("duplicate huffman symbol".into()));
            }
            let s32 = i32::try_from(s).map_err(|_| Error::Malformed("huffman symbol overflow".into()))?;
            symbols.push(s32);
            prev = s;
        }
        let lengths = cur.take(n)?.to_vec();
        Self::from_lengths(symbols, lengths)
    }

    #[inline]
    pub fn encode(&self, w: &mut BitWriter, symbol: i32) {
        let i = self
            .symbols
            .binary_search(&symbol)
            .expect("symbol missing from huffman alphabet");
        w.write(self.codes[i], self.lengths[i] as u32);
    }

    #[inline]
    pub fn decode(&self, r: &mut BitReader<'_>) -> Result<i32> {
        let mut code = 0u64;
        for len in 1..self.first_code.len() {
            code = (code << 1) | r.read_bit()? as u64;
            if code >= self.first_code[len] && code - self.first_code[len] < self.count[len] as u64 {
                let rel = (code - self.first_code[len]) as u32;
                return Ok(self.by_code[(self.offset[len] + rel) as usize]);
            }
        }
        Err(Error::Malformed("invalid huffman code".into()))
    }
}

/// Huffman code lengths for positive weights. A lone symbol gets length 1.
fn code_lengths(weights: &[u64]) -> Vec<u8> {
    let n = weights.len();
    match n {
        0 => return Vec::new(),
        1 => return vec![1],
        _ => {}
    }
    // Nodes 0..n are leaves; internal nodes get appended. Ties break on
    // node index so the result is deterministic.
    let mut parent = vec![usize::MAX; n];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
        weights.iter().enumerate().map(|(i, &w)| Reverse((w, i))).collect();
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().expect("two nodes");
        let Reverse((wb, b)) = heap.pop().expect("two nodes");
        let id = parent.len();
        parent.push(usize::MAX);
        parent[a] = id;
        parent[b] = id;
        heap.push(Reverse((wa + wb, id)));
    }
    (0..n)
        .map(|leaf| {
            let mut depth = 0u32;
            let mut node = leaf;
            while parent[node] != usize::MAX {
                node = parent[node];
                depth += 1;
            }
            depth.min(u8::MAX as u32) as u8
        })
        .collect()
}

/// Self-contained encoding: table followed by the packed code stream.
pub fn huffman_encode(codes: &[i32]) -> Vec<u8> {
    let table = HuffmanCode::from_symbols(codes);
    let mut out = Vec::new();
    table.write_table(&mut out);
    let mut w = BitWriter::new();
    for &c in codes {
        table.encode(&mut w, c);
    }
    out.extend_from_slice(&w.finish());
    out
}

pub fn huffman_decode(bytes: &[u8], count: usize) -> Result<Vec<i32>> {
    let mut cur = ByteCursor::new(bytes);
    let table = HuffmanCode::read_table(&mut cur)?;
    if count > 0 && table.num_symbols() == 0 {
        return Err(Error::Malformed("empty huffman table for non-empty stream".into()));
    }
    let mut r = BitReader::new(&bytes[cur.position()..]);
    (0..count).map(|_| table.decode(&mut r)).collect()
}
