use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use log::{info, warn};
use sketchguard::datagen::{libsvm_load, normalize_gram_linf, synth_matrix};
use sketchguard::{DenseMatrix, RankProfile, SynthProfile};

use crate::error::{CliError, CliResult};

/// `n,d,low|high` as given to `--synth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthArg {
    pub n: usize,
    pub d: usize,
    pub mode: RankProfile,
}

impl FromStr for SynthArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [n, d, mode] = parts[..] else {
            return Err(format!("expected n,d,low|high, got {s:?}"));
        };
        let n = n.parse().map_err(|_| format!("invalid row count {n:?}"))?;
        let d = d.parse().map_err(|_| format!("invalid column count {d:?}"))?;
        let mode = mode.parse().map_err(|e: sketchguard::Error| e.to_string())?;
        Ok(SynthArg { n, d, mode })
    }
}

impl fmt::Display for SynthArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            RankProfile::Low => "low",
            RankProfile::High => "high",
        };
        write!(f, "{},{},{mode}", self.n, self.d)
    }
}

/// Comma-separated list of sketch sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TGrid(pub Vec<usize>);

impl FromStr for TGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| format!("invalid sketch size {p:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(TGrid)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic(SynthProfile),
    Libsvm {
        path: PathBuf,
        expected_features: Option<usize>,
    },
}

impl DataSource {
    /// Exactly one of `data` and `synth` must be set. The synthetic seed is
    /// the run seed.
    pub fn from_options(
        data: Option<PathBuf>,
        synth: Option<SynthArg>,
        expected_features: Option<usize>,
        seed: u64,
    ) -> CliResult<DataSource> {
        match (data, synth) {
            (Some(path), None) => Ok(DataSource::Libsvm {
                path,
                expected_features,
            }),
            (None, Some(s)) => Ok(DataSource::Synthetic(SynthProfile::new(s.n, s.d, s.mode, seed)?)),
            (None, None) => Err(CliError::usage("one of --data or --synth is required")),
            (Some(_), Some(_)) => Err(CliError::usage("--data and --synth are mutually exclusive")),
        }
    }

    /// The data matrix scaled to `‖AᵀA‖∞ = 1`. An all-zero LIBSVM matrix is
    /// returned unscaled.
    pub fn load(&self) -> CliResult<DenseMatrix> {
        match self {
            DataSource::Synthetic(profile) => {
                info!("generating synthetic {}x{} matrix", profile.n, profile.d);
                Ok(synth_matrix(profile)?)
            }
            DataSource::Libsvm {
                path,
                expected_features,
            } => {
                let a = libsvm_load(path, *expected_features)?;
                info!("loaded {}: {}x{}", path.display(), a.rows(), a.cols());
                if a.is_zero() {
                    warn!("{} is all zeros; skipping normalization", path.display());
                    return Ok(a);
                }
                Ok(normalize_gram_linf(&a)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_arg_round_trip() {
        let s: SynthArg = "2048, 64,high".parse().unwrap();
        assert_eq!((s.n, s.d, s.mode), (2048, 64, RankProfile::High));
        assert_eq!(s.to_string(), "2048,64,high");
        assert!("10,2".parse::<SynthArg>().is_err());
        assert!("10,2,medium".parse::<SynthArg>().is_err());
        assert!("x,2,low".parse::<SynthArg>().is_err());
    }

    #[test]
    fn grid_parse() {
        assert_eq!("4, 8,16".parse::<TGrid>().unwrap(), TGrid(vec![4, 8, 16]));
        assert!("4,,8".parse::<TGrid>().is_err());
        assert!("-1".parse::<TGrid>().is_err());
    }

    #[test]
    fn exactly_one_source() {
        let synth = Some("8,2,low".parse().unwrap());
        assert!(DataSource::from_options(None, None, None, 0).is_err());
        assert!(DataSource::from_options(Some("x".into()), synth, None, 0).is_err());
        let bad = DataSource::from_options(None, Some("1,2,low".parse().unwrap()), None, 0).unwrap_err();
        assert_eq!(bad.exit_code(), 2);
    }
}
