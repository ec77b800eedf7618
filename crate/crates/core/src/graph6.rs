//! graph6 encoding for graphs with at most 62 vertices (one-byte size field).

use crate::error::{Error, Result};
use crate::graph::{Graph, MAX_VERTICES};

pub fn encode(g: &Graph) -> String {
    let n = g.n();
    let mut out = String::with_capacity(2 + n * n / 12);
    out.push((n as u8 + 63) as char);
    let mut acc = 0u8;
    let mut len = 0;
    for j in 1..n {
        for i in 0..j {
            acc = acc << 1 | u8::from(g.has_edge(i, j));
            len += 1;
            if len == 6 {
                out.push((acc + 63) as char);
                acc = 0;
                len = 0;
            }
        }
    }
    if len > 0 {
        out.push(((acc << (6 - len)) + 63) as char);
    }
    out
}

pub fn decode(s: &str) -> Result<Graph> {
    let s = s.trim_end_matches(['\n', '\r']);
    let s = s.strip_prefix(">>graph6<<").unwrap_or(s);
    let bytes = s.as_bytes();
    let Some(&first) = bytes.first() else {
        return Err(Error::Graph6("empty string".into()));
    };
    if !(63..=126).contains(&first) {
        return Err(Error::Graph6(format!("bad size byte {first}")));
    }
    let n = (first - 63) as usize;
    if n > MAX_VERTICES {
        return Err(Error::TooManyVertices(n));
    }
    let pairs = n * n.saturating_sub(1) / 2;
    let body = &bytes[1..];
    if body.len() != pairs.div_ceil(6) {
        return Err(Error::Graph6(format!("expected {} data bytes for n={n}, got {}", pairs.div_ceil(6), body.len())));
    }
    if let Some(b) = body.iter().find(|b| !(63..=126).contains(*b)) {
        return Err(Error::Graph6(format!("bad data byte {b}")));
    }
    let bit = |k: usize| (body[k / 6] - 63) >> (5 - k % 6) & 1 == 1;
    let mut g = Graph::empty(n);
    let mut k = 0;
    for j in 1..n {
        for i in 0..j {
            if bit(k) {
                g.add_edge(i, j);
            }
            k += 1;
        }
    }
    if (pairs..body.len() * 6).any(bit) {
        return Err(Error::Graph6("nonzero padding bits".into()));
    }
    Ok(g)
}
