use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::tensor::ParamTensor;
use crate::error::{Error, Result};

const MAGIC: &str = "topowalk-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

/// Versioned text checkpoint.
///
/// ```text
/// topowalk-checkpoint version=1 d=64 hidden=64 mode=full seed=7
/// encoder.0.weight 128 144
/// 1.2345678901234567e-1 ...
/// ```
///
/// Values are written with 17 significant digits, which round-trips every
/// finite `f64` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: BTreeMap<String, String>,
    pub tensors: Vec<ParamTensor>,
}

impl Checkpoint {
    pub fn new(header: BTreeMap<String, String>, tensors: Vec<ParamTensor>) -> Self {
        Checkpoint { header, tensors }
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.header
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("checkpoint header lacks `{key}`")))
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Format(format!("checkpoint header `{key}={raw}` is malformed")))
    }

    pub fn tensor(&self, name: &str) -> Result<&ParamTensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Format(format!("checkpoint lacks tensor `{name}`")))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} version={FORMAT_VERSION}");
        for (k, v) in &self.header {
            if k != "version" {
                let _ = write!(out, " {k}={v}");
            }
        }
        out.push('\n');
        for t in &self.tensors {
            out.push_str(&t.name);
            for d in &t.shape {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
            let mut first = true;
            for v in &t.values {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty checkpoint"))?;
        let mut fields = head.split_whitespace();
        if fields.next() != Some(MAGIC) {
            return Err(Error::parse(1, 1, format!("expected `{MAGIC}` header")));
        }
        let mut header = BTreeMap::new();
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::parse(1, 1, format!("header field `{f}` is not key=value")))?;
            header.insert(k.to_string(), v.to_string());
        }
        match header.get("version").map(|v| v.parse::<u32>()) {
            Some(Ok(FORMAT_VERSION)) => {}
            Some(_) => return Err(Error::parse(1, 1, "unsupported checkpoint version")),
            None => return Err(Error::parse(1, 1, "header lacks version")),
        }
        header.remove("version");
        let mut tensors = Vec::new();
        while let Some((i, rec)) = lines.next() {
            if rec.trim().is_empty() {
                continue;
            }
            let mut parts = rec.split_whitespace();
            let name = parts.next().unwrap().to_string();
            let shape = parts
                .map(|d| d.parse::<usize>().map_err(|_| Error::parse(i + 1, 1, format!("bad dimension `{d}`"))))
                .collect::<Result<Vec<_>>>()?;
            let (j, vals) = lines
                .next()
                .ok_or_else(|| Error::parse(i + 2, 1, format!("tensor `{name}` has no value line")))?;
            let values = vals
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| Error::parse(j + 1, 1, format!("bad value `{v}`"))))
                .collect::<Result<Vec<_>>>()?;
            tensors.push(ParamTensor::new(name, shape, values)?);
        }
        Ok(Checkpoint { header, tensors })
    }
}
