//! JSON file formats. Integers are decimal strings (no sign, no leading
//! zeros); matrices are row-major arrays of arrays of such strings.

use std::fs;
use std::path::Path;

use num_bigint::BigUint;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::attack::AttackStats;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::MatrixFp;
use crate::protocol::{PartyState, ProtocolParams, SharedKey};

pub type MatrixText = Vec<Vec<String>>;

pub fn encode_int(x: &BigUint) -> String {
    x.to_str_radix(10)
}

/// Strict decimal parser: digits only, no leading zeros except `"0"`.
pub fn parse_int(s: &str) -> Result<BigUint> {
    let well_formed = !s.is_empty()
        && s.bytes().all(|b| b.is_ascii_digit())
        && (s == "0" || !s.starts_with('0'));
    if !well_formed {
        return Err(Error::Malformed(format!("not a canonical decimal integer: {s:?}")));
    }
    BigUint::parse_bytes(s.as_bytes(), 10)
        .ok_or_else(|| Error::Malformed(format!("not a decimal integer: {s:?}")))
}

pub fn encode_matrix(m: &MatrixFp) -> MatrixText {
    m.rows()
        .iter()
        .map(|r| r.iter().map(encode_int).collect())
        .collect()
}

/// Entries must already be canonical in `[0, p)`.
pub fn decode_matrix(spec: &FieldSpec, k: usize, text: &MatrixText) -> Result<MatrixFp> {
    if text.len() != k || text.iter().any(|r| r.len() != k) {
        return Err(Error::Malformed(format!("expected a {k}x{k} matrix")));
    }
    let mut entries = Vec::with_capacity(k * k);
    for s in text.iter().flatten() {
        let v = parse_int(s)?;
        if v >= *spec.modulus() {
            return Err(Error::Malformed(format!("entry {s} is not reduced mod p")));
        }
        entries.push(v);
    }
    MatrixFp::from_entries(spec, k, entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub p: String,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: MatrixText,
    #[serde(rename = "H")]
    pub h: MatrixText,
}

impl ParamsFile {
    pub fn from_params(params: &ProtocolParams) -> Self {
        Self {
            p: encode_int(params.spec().modulus()),
            k: params.k(),
            m: encode_matrix(params.m()),
            h: encode_matrix(params.h()),
        }
    }

    /// Re-checks primality of `p` and invertibility of `M` and `H`.
    pub fn to_params(&self) -> Result<ProtocolParams> {
        if self.k == 0 {
            return Err(Error::Malformed("k must be at least 1".into()));
        }
        let spec = FieldSpec::new(parse_int(&self.p)?)?;
        let m = decode_matrix(&spec, self.k, &self.m)?;
        let h = decode_matrix(&spec, self.k, &self.h)?;
        ProtocolParams::new(m, h)
    }
}

/// Public values, plus the session secrets only when explicitly requested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptFile {
    #[serde(rename = "A")]
    pub a: MatrixText,
    #[serde(rename = "B")]
    pub b: MatrixText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<String>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub key: Option<MatrixText>,
}

impl TranscriptFile {
    pub fn new(alice: &PartyState, bob: &PartyState, key: &SharedKey, include_secrets: bool) -> Self {
        let mut t = Self {
            a: encode_matrix(alice.public_part()),
            b: encode_matrix(bob.public_part()),
            m: None,
            n: None,
            key: None,
        };
        if include_secrets {
            t.m = Some(encode_int(alice.exponent().value()));
            t.n = Some(encode_int(bob.exponent().value()));
            t.key = Some(encode_matrix(key.matrix()));
        }
        t
    }

    /// Decodes `(A, B)` and, if present, the true key.
    pub fn decode(&self, spec: &FieldSpec, k: usize) -> Result<(MatrixFp, MatrixFp, Option<MatrixFp>)> {
        let a = decode_matrix(spec, k, &self.a)?;
        let b = decode_matrix(spec, k, &self.b)?;
        let key = self.key.as_ref().map(|t| decode_matrix(spec, k, t)).transpose()?;
        for e in [&self.m, &self.n].into_iter().flatten() {
            parse_int(e)?;
        }
        Ok((a, b, key))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    #[serde(rename = "K")]
    pub key: MatrixText,
    pub kernel_dim: usize,
    pub retries: usize,
    pub elapsed_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matches: Option<bool>,
}

impl ResultFile {
    pub fn new(key: &SharedKey, stats: &AttackStats, matches: Option<bool>) -> Self {
        Self {
            key: encode_matrix(key.matrix()),
            kernel_dim: stats.kernel_dim,
            retries: stats.retries,
            elapsed_ms: stats.elapsed_ms(),
            matches,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    from_json(&text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    fs::write(path, to_json(value))
}
