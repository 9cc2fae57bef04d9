//! Weight container: a `#nnmodel v1` header, a key-value block, embedded
//! byte blobs (vocabulary files), and named tensors stored as row-major
//! little-endian f32. Round-trips bit-exactly.

use std::io::{BufRead, Write};

use super::matrix::Matrix;
use crate::error::{Error, Result};

const MAGIC: &str = "#nnmodel v1";

#[derive(Debug, Default)]
pub struct Container {
    pub kv: Vec<(String, String)>,
    pub blobs: Vec<(String, Vec<u8>)>,
    pub tensors: Vec<(String, Matrix)>,
}

impl Container {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Model(format!("missing key `{key}`")))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.require(key)?
            .parse()
            .map_err(|_| Error::Model(format!("key `{key}` is not an integer")))
    }

    pub fn blob(&self, name: &str) -> Option<&[u8]> {
        self.blobs.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn tensor(&self, name: &str) -> Result<&Matrix> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Model(format!("missing tensor `{name}`")))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        for (k, v) in &self.kv {
            writeln!(w, "{k} {v}")?;
        }
        for (name, bytes) in &self.blobs {
            writeln!(w, "blob {name} {}", bytes.len())?;
            w.write_all(bytes)?;
        }
        for (name, m) in &self.tensors {
            writeln!(w, "tensor {name} {} {}", m.rows, m.cols)?;
            let mut buf = Vec::with_capacity(m.data().len() * 4);
            for &v in m.data() {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim_end_matches('\n') != MAGIC {
            return Err(Error::Model(format!("bad container header: {}", line.trim_end())));
        }
        let mut out = Container::default();
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                break;
            }
            let text = line.trim_end_matches('\n');
            if let Some(rest) = text.strip_prefix("tensor ") {
                let mut parts = rest.split(' ');
                let name = parts
                    .next()
                    .ok_or_else(|| Error::Model("tensor line missing name".into()))?
                    .to_string();
                let rows: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Model(format!("bad tensor dims for `{name}`")))?;
                let cols: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Model(format!("bad tensor dims for `{name}`")))?;
                let mut buf = vec![0u8; rows * cols * 4];
                r.read_exact(&mut buf)
                    .map_err(|_| Error::Model(format!("truncated tensor `{name}`")))?;
                let data: Vec<f64> = buf
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                    .collect();
                out.tensors.push((name, Matrix::from_vec(rows, cols, data)));
            } else if let Some(rest) = text.strip_prefix("blob ") {
                let (name, len_str) = rest
                    .rsplit_once(' ')
                    .ok_or_else(|| Error::Model("blob line missing length".into()))?;
                let len: usize = len_str
                    .parse()
                    .map_err(|_| Error::Model(format!("bad blob length for `{name}`")))?;
                let mut buf = vec![0u8; len];
                r.read_exact(&mut buf)
                    .map_err(|_| Error::Model(format!("truncated blob `{name}`")))?;
                out.blobs.push((name.to_string(), buf));
            } else if let Some((k, v)) = text.split_once(' ') {
                out.kv.push((k.to_string(), v.to_string()));
            } else if !text.is_empty() {
                return Err(Error::Model(format!("unrecognized container line: {text}")));
            }
        }
        Ok(out)
    }
}
