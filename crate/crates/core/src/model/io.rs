//! Graph collection file formats.
//!
//! * JSON: `{"n": .., "T": .., "layers": [[[0,1,..],..],..]}` with full
//!   dense 0/1 matrices.
//! * Binary: the magic bytes `BOGC`, then `n` and `T` as little-endian
//!   `u32`, then one bitmap per layer holding the upper triangle
//!   (`i < j`, row-major) packed 8 pairs per byte, least significant bit
//!   first. Each layer starts on a byte boundary; padding bits are zero.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::{Adjacency, GraphCollection};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BOGC";

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    #[serde(rename = "T")]
    layers_count: usize,
    layers: Vec<Vec<Vec<u8>>>,
}

pub fn to_json(g: &GraphCollection) -> Result<String> {
    Ok(serde_json::to_string(&GraphJson {
        n: g.n(),
        layers_count: g.num_layers(),
        layers: g.to_dense(),
    })?)
}

pub fn from_json(s: &str) -> Result<GraphCollection> {
    let doc: GraphJson = serde_json::from_str(s)?;
    if doc.layers.len() != doc.layers_count {
        return Err(Error::DimensionMismatch {
            what: "layer count",
            expected: doc.layers_count,
            found: doc.layers.len(),
        });
    }
    let g = GraphCollection::from_dense(&doc.layers)?;
    if g.n() != doc.n {
        return Err(Error::DimensionMismatch {
            what: "node count",
            expected: doc.n,
            found: g.n(),
        });
    }
    Ok(g)
}

fn triangle_bytes(n: usize) -> usize {
    (n * n.saturating_sub(1) / 2).div_ceil(8)
}

pub fn to_binary(g: &GraphCollection) -> Vec<u8> {
    let n = g.n();
    let per_layer = triangle_bytes(n);
    let mut out = Vec::with_capacity(12 + per_layer * g.num_layers());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(g.num_layers() as u32).to_le_bytes());
    for layer in g.layers() {
        let mut buf = vec![0u8; per_layer];
        let mut pos = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                if layer.has_edge(i, j) {
                    buf[pos / 8] |= 1 << (pos % 8);
                }
                pos += 1;
            }
        }
        out.extend_from_slice(&buf);
    }
    out
}

pub fn from_binary(bytes: &[u8]) -> Result<GraphCollection> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing BOGC header".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let t = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let per_layer = triangle_bytes(n);
    let body = &bytes[12..];
    if body.len() != per_layer * t {
        return Err(Error::Format(format!(
            "expected {} payload bytes for n = {n}, T = {t}, found {}",
            per_layer * t,
            body.len()
        )));
    }
    let mut layers = Vec::with_capacity(t);
    for chunk in body.chunks(per_layer.max(1)).take(t) {
        let mut pos = 0usize;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if chunk[pos / 8] >> (pos % 8) & 1 == 1 {
                    edges.push((i, j));
                }
                pos += 1;
            }
        }
        layers.push(Adjacency::from_edges(n, edges)?);
    }
    if per_layer == 0 {
        layers = vec![Adjacency::empty(n); t];
    }
    GraphCollection::new(layers)
}

/// Writes JSON when the extension is `.json`, the binary form otherwise.
pub fn write_graph(path: &Path, g: &GraphCollection) -> Result<()> {
    let mut f = fs::File::create(path)?;
    if is_json(path) {
        f.write_all(to_json(g)?.as_bytes())?;
    } else {
        f.write_all(&to_binary(g))?;
    }
    Ok(())
}

/// Reads either format, detected by the magic bytes.
pub fn read_graph(path: &Path) -> Result<GraphCollection> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(MAGIC) {
        from_binary(&bytes)
    } else {
        let s = String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?;
        from_json(&s)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GraphCollection {
        let a = Adjacency::from_edges(5, [(0, 1), (1, 4), (2, 3)]).unwrap();
        GraphCollection::new(vec![a, Adjacency::complete(5)]).unwrap()
    }

    #[test]
    fn binary_layout() {
        let g = GraphCollection::new(vec![Adjacency::from_edges(3, [(0, 2)]).unwrap()]).unwrap();
        // Pairs in order (0,1) (0,2) (1,2): bit 1 set.
        assert_eq!(to_binary(&g), [b'B', b'O', b'G', b'C', 3, 0, 0, 0, 1, 0, 0, 0, 0b010]);
    }

    #[test]
    fn both_formats_round_trip() {
        let g = sample();
        assert_eq!(from_json(&to_json(&g).unwrap()).unwrap(), g);
        assert_eq!(from_binary(&to_binary(&g)).unwrap(), g);
        let single = GraphCollection::empty(1, 3).unwrap();
        assert_eq!(from_binary(&to_binary(&single)).unwrap(), single);
    }

    #[test]
    fn malformed_inputs() {
        assert!(from_binary(b"XXXX").is_err());
        let mut b = to_binary(&sample());
        b.pop();
        assert!(from_binary(&b).is_err());
        assert!(from_json(r#"{"n":2,"T":1,"layers":[[[0,1],[0,0]]]}"#).is_err());
        assert!(from_json(r#"{"n":3,"T":1,"layers":[[[0,1],[1,0]]]}"#).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = sample();
        for name in ["g.json", "g.bogc"] {
            let p = dir.path().join(name);
            write_graph(&p, &g).unwrap();
            assert_eq!(read_graph(&p).unwrap(), g);
        }
    }
}
