//! Decoder latency models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum LatencyModel {
    /// Constant latency in rounds.
    Fixed(u64),
    /// `r * v / d^2` rounds for a window of volume `v` (absolute units).
    Linear(f64),
    /// Samples (rounds) per volume bucket, keyed by the volume in units of d^3.
    Empirical(BTreeMap<u32, Vec<u64>>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatencyError {
    #[error("no empirical latency samples for volume bucket {0}d^3")]
    MissingBucket(u32),
    #[error("invalid latency spec `{0}`")]
    Parse(String),
}

impl LatencyModel {
    /// Parses `fixed:C`, `fixed:Kd`, or `linear:R`. Empirical models are
    /// loaded from a file by the caller, so `d` resolves the `Kd` form.
    pub fn parse(spec: &str, d: u32) -> Result<Self, LatencyError> {
        let err = || LatencyError::Parse(spec.to_string());
        let (kind, arg) = spec.split_once(':').ok_or_else(err)?;
        match kind {
            "fixed" => {
                let rounds = if let Some(k) = arg.strip_suffix('d') {
                    let k: f64 = if k.is_empty() { 1.0 } else { k.parse().map_err(|_| err())? };
                    (k * d as f64).round() as u64
                } else {
                    arg.parse().map_err(|_| err())?
                };
                Ok(LatencyModel::Fixed(rounds))
            }
            "linear" => {
                let r: f64 = arg.parse().map_err(|_| err())?;
                if !(r.is_finite() && r >= 0.0) {
                    return Err(err());
                }
                Ok(LatencyModel::Linear(r))
            }
            _ => Err(err()),
        }
    }

    /// Parses the empirical file format: a JSON object mapping the volume
    /// multiple to a list of latency samples in rounds.
    pub fn empirical_from_json(text: &str) -> Result<Self, LatencyError> {
        let raw: BTreeMap<String, Vec<u64>> =
            serde_json::from_str(text).map_err(|e| LatencyError::Parse(e.to_string()))?;
        let mut map = BTreeMap::new();
        for (k, v) in raw {
            let key: u32 = k.parse().map_err(|_| LatencyError::Parse(format!("bucket key `{k}`")))?;
            if v.is_empty() {
                return Err(LatencyError::Parse(format!("bucket {key} has no samples")));
            }
            map.insert(key, v);
        }
        Ok(LatencyModel::Empirical(map))
    }
}

impl fmt::Display for LatencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatencyModel::Fixed(c) => write!(f, "fixed:{c}"),
            LatencyModel::Linear(r) => write!(f, "linear:{r}"),
            LatencyModel::Empirical(m) => write!(f, "empirical:{}buckets", m.len()),
        }
    }
}

impl FromStr for LatencyModel {
    type Err = LatencyError;

    /// Parses without a distance; `fixed:Kd` is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.ends_with('d') {
            return Err(LatencyError::Parse(s.to_string()));
        }
        LatencyModel::parse(s, 1)
    }
}

/// Volume rounded up to a whole number of d^3 units.
pub fn volume_bucket(volume: f64) -> u32 {
    (volume - 1e-9).ceil().max(1.0) as u32
}

/// Decode time in rounds for a window of `volume` d^3 units; never below one round.
pub fn decode_latency<R: Rng>(volume: f64, d: u32, m: &LatencyModel, rng: &mut R) -> Result<u64, LatencyError> {
    let k = volume_bucket(volume);
    let rounds = match m {
        LatencyModel::Fixed(c) => *c,
        LatencyModel::Linear(r) => (r * k as f64 * d as f64 - 1e-9).ceil().max(0.0) as u64,
        LatencyModel::Empirical(map) => {
            let samples = map.get(&k).ok_or(LatencyError::MissingBucket(k))?;
            samples[rng.gen_range(0..samples.len())]
        }
    };
    Ok(rounds.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_rounds_volume_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = LatencyModel::Linear(0.5);
        assert_eq!(decode_latency(2.0, 11, &m, &mut rng).unwrap(), 11);
        let m = LatencyModel::Linear(1.0);
        assert_eq!(decode_latency(2.5, 7, &m, &mut rng), decode_latency(3.0, 7, &m, &mut rng));
        assert_eq!(decode_latency(3.0, 7, &m, &mut rng).unwrap(), 21);
        assert_eq!(decode_latency(1.0, 7, &LatencyModel::Linear(0.0), &mut rng).unwrap(), 1);
    }

    #[test]
    fn fixed_and_parse() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = LatencyModel::parse("fixed:2d", 7).unwrap();
        assert_eq!(m, LatencyModel::Fixed(14));
        assert_eq!(decode_latency(2.7, 7, &m, &mut rng).unwrap(), 14);
        assert_eq!(LatencyModel::parse("linear:0.25", 5).unwrap(), LatencyModel::Linear(0.25));
        assert!(LatencyModel::parse("quadratic:1", 5).is_err());
        assert!("fixed:2d".parse::<LatencyModel>().is_err());
        assert_eq!("fixed:9".parse::<LatencyModel>().unwrap(), LatencyModel::Fixed(9));
    }

    #[test]
    fn empirical_buckets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = LatencyModel::empirical_from_json(r#"{"1": [4, 6], "2": [9]}"#).unwrap();
        for _ in 0..20 {
            let x = decode_latency(0.6, 5, &m, &mut rng).unwrap();
            assert!(x == 4 || x == 6);
        }
        assert_eq!(decode_latency(1.5, 5, &m, &mut rng).unwrap(), 9);
        assert_eq!(decode_latency(3.0, 5, &m, &mut rng), Err(LatencyError::MissingBucket(3)));
    }
}
