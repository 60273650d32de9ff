//! JSON storage for sketch pairs, so a sketch can be bootstrapped later
//! without the source data.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sketchguard::SketchPair;
use thiserror::Error;

use crate::error::CliError;

pub const FORMAT: &str = "sketchguard-pair";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    format: String,
    version: u32,
    pair: SketchPair,
}

#[derive(Debug, Error)]
pub enum PairFileError {
    #[error("invalid pair file: {0}")]
    Json(#[from] serde_json::Error),

    #[error("not a pair file (format {0:?})")]
    Format(String),

    #[error("unsupported pair file version {0}")]
    Version(u32),
}

pub fn encode_pair(pair: &SketchPair) -> String {
    let env = Envelope {
        format: FORMAT.to_string(),
        version: VERSION,
        pair: pair.clone(),
    };
    serde_json::to_string(&env).expect("pair serialization cannot fail")
}

pub fn decode_pair(bytes: &[u8]) -> Result<SketchPair, PairFileError> {
    let env: Envelope = serde_json::from_slice(bytes)?;
    if env.format != FORMAT {
        return Err(PairFileError::Format(env.format));
    }
    if env.version != VERSION {
        return Err(PairFileError::Version(env.version));
    }
    Ok(env.pair)
}

pub fn read_pair(path: &Path) -> Result<SketchPair, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    decode_pair(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sketchguard::{DenseMatrix, SketchKind, SketchSpec};

    fn sample_pair() -> SketchPair {
        let a = DenseMatrix::from_rows(&[[1.0, -0.1], [0.3, 1e-300]]).unwrap();
        let b = DenseMatrix::from_rows(&[[2.5], [-0.0]]).unwrap();
        let spec = SketchSpec::new(SketchKind::Srht, 2, 99).unwrap();
        SketchPair::from_parts(a, b, spec, 5).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let pair = sample_pair();
        let back = decode_pair(encode_pair(&pair).as_bytes()).unwrap();
        assert_eq!(back, pair);
        assert!(back.b_sketch().get(1, 0).is_sign_negative());
    }

    #[test]
    fn rejects_foreign_envelopes() {
        let text = encode_pair(&sample_pair());
        let other = text.replace(FORMAT, "something-else");
        assert!(matches!(decode_pair(other.as_bytes()), Err(PairFileError::Format(_))));
        let newer = text.replace("\"version\":1", "\"version\":2");
        assert!(matches!(decode_pair(newer.as_bytes()), Err(PairFileError::Version(2))));
        assert!(matches!(decode_pair(b"{}"), Err(PairFileError::Json(_))));
    }

    #[test]
    fn rejects_inconsistent_pairs() {
        let text = encode_pair(&sample_pair()).replace("\"t\":2", "\"t\":3");
        assert!(decode_pair(text.as_bytes()).is_err());
    }
}
