//! Plain-text reweighting vector files.
//!
//! ```text
//! # code_hash: <hex sha256 of the code's alist>
//! # designer: ckar
//! # config_digest: <hex>
//! 1
//! 0.6666666666666666
//! ...
//! ```

use super::DesignError;
use crate::decoder::ReweightVector;
use crate::graph::ParityCheckMatrix;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct RhoFile {
    pub code_hash: String,
    pub designer: String,
    pub config_digest: String,
    pub rho: ReweightVector,
}

impl RhoFile {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# code_hash: {}", self.code_hash);
        let _ = writeln!(s, "# designer: {}", self.designer);
        let _ = writeln!(s, "# config_digest: {}", self.config_digest);
        for v in self.rho.as_slice() {
            // shortest round-trip representation
            let _ = writeln!(s, "{v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, DesignError> {
        let mut code_hash = None;
        let mut designer = None;
        let mut config_digest = None;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let Some((key, value)) = header.split_once(':') else {
                    continue;
                };
                let value = value.trim().to_string();
                match key.trim() {
                    "code_hash" => code_hash = Some(value),
                    "designer" => designer = Some(value),
                    "config_digest" => config_digest = Some(value),
                    _ => {}
                }
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                DesignError::RhoFile(format!("line {}: not a number: {line:?}", lineno + 1))
            })?;
            values.push(v);
        }
        let missing = |k: &str| DesignError::RhoFile(format!("missing `{k}` header"));
        Ok(RhoFile {
            code_hash: code_hash.ok_or_else(|| missing("code_hash"))?,
            designer: designer.ok_or_else(|| missing("designer"))?,
            config_digest: config_digest.ok_or_else(|| missing("config_digest"))?,
            rho: ReweightVector::new(values)?,
        })
    }

    /// Fails unless the file was designed for `h`.
    pub fn check_code(&self, h: &ParityCheckMatrix) -> Result<(), DesignError> {
        let expected = h.content_hash();
        if self.code_hash != expected {
            return Err(DesignError::CodeMismatch {
                expected,
                found: self.code_hash.clone(),
            });
        }
        if self.rho.len() != h.m() {
            return Err(DesignError::Decoder(
                crate::decoder::DecoderError::RhoLength {
                    expected: h.m(),
                    got: self.rho.len(),
                },
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_exact() {
        let h = ParityCheckMatrix::from_dense(&[[1u8, 1, 0], [0, 1, 1]]).unwrap();
        let f = RhoFile {
            code_hash: h.content_hash(),
            designer: "urw".into(),
            config_digest: "abc".into(),
            rho: ReweightVector::new(vec![2.0 / 3.0, 0.1 + 0.2]).unwrap(),
        };
        let back = RhoFile::parse(&f.to_text()).unwrap();
        assert_eq!(back, f);
        back.check_code(&h).unwrap();
    }

    #[test]
    fn mismatches_detected() {
        let h = ParityCheckMatrix::from_dense(&[[1u8, 1, 0], [0, 1, 1]]).unwrap();
        let other = ParityCheckMatrix::from_dense(&[[1u8, 1, 1], [0, 1, 1]]).unwrap();
        let f = RhoFile {
            code_hash: other.content_hash(),
            designer: "urw".into(),
            config_digest: "abc".into(),
            rho: ReweightVector::ones(2),
        };
        assert!(matches!(
            f.check_code(&h),
            Err(DesignError::CodeMismatch { .. })
        ));
        assert!(RhoFile::parse("# designer: x\n1\n").is_err());
        assert!(
            RhoFile::parse("# code_hash: a\n# designer: x\n# config_digest: y\n1.5\n").is_err()
        );
    }
}
