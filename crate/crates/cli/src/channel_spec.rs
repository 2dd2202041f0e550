//! Parsing of compact channel specifiers.
//!
//! ```text
//! identity | filter | prep
//! dep:P | reset:P | rotX:THETA | rotY:THETA | rotZ:THETA
//! haar:SEED | bruzda:RANK:SEED | scale:FACTOR:SPEC
//! compose:[SPEC,SPEC,...]      first element acts first
//! file:PATH                    channel JSON file
//! ```

use std::path::Path;

use thiserror::Error;
use unitarity_core::ensembles::{
    bruzda_channel, depolarizing, filter_channel, haar_unitary, purpose, reset_channel,
    rotation_unitary, state_prep_channel, RngStream,
};
use unitarity_core::KrausChannel;

use crate::formats;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("unrecognised channel token `{0}`")]
    UnknownToken(String),
    #[error("bad number `{token}` in `{spec}`")]
    BadNumber { token: String, spec: String },
    #[error("missing argument in `{0}`")]
    MissingArgument(String),
    #[error("unbalanced brackets in `{0}`")]
    Unbalanced(String),
    #[error("invalid channel `{spec}`: {reason}")]
    Invalid { spec: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Identity,
    Filter,
    Prep,
    Depolarizing(f64),
    Reset(f64),
    Rotation { axis: [f64; 3], angle: f64 },
    Haar(u64),
    Bruzda { rank: usize, seed: u64 },
    Scale(f64, Box<ChannelSpec>),
    Compose(Vec<ChannelSpec>),
    File(String),
}

fn number<T: std::str::FromStr>(tok: &str, spec: &str) -> Result<T, SpecError> {
    tok.trim().parse().map_err(|_| SpecError::BadNumber {
        token: tok.to_string(),
        spec: spec.to_string(),
    })
}

/// Splits on commas at bracket depth zero.
fn split_top(s: &str, whole: &str) -> Result<Vec<String>, SpecError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(SpecError::Unbalanced(whole.to_string()));
        }
        cur.push(ch);
    }
    if depth != 0 {
        return Err(SpecError::Unbalanced(whole.to_string()));
    }
    out.push(cur);
    Ok(out)
}

impl ChannelSpec {
    pub fn parse(spec: &str) -> Result<Self, SpecError> {
        let s = spec.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let arg = || rest.ok_or_else(|| SpecError::MissingArgument(s.to_string()));
        Ok(match head {
            "identity" | "id" => Self::Identity,
            "filter" => Self::Filter,
            "prep" => Self::Prep,
            "dep" => Self::Depolarizing(number(arg()?, s)?),
            "reset" => Self::Reset(number(arg()?, s)?),
            "rotX" | "rotY" | "rotZ" => {
                let axis = match head {
                    "rotX" => [1.0, 0.0, 0.0],
                    "rotY" => [0.0, 1.0, 0.0],
                    _ => [0.0, 0.0, 1.0],
                };
                Self::Rotation {
                    axis,
                    angle: number(arg()?, s)?,
                }
            }
            "haar" => Self::Haar(number(arg()?, s)?),
            "bruzda" => {
                let (r, seed) = arg()?
                    .split_once(':')
                    .ok_or_else(|| SpecError::MissingArgument(s.to_string()))?;
                Self::Bruzda {
                    rank: number(r, s)?,
                    seed: number(seed, s)?,
                }
            }
            "scale" => {
                let (f, inner) = arg()?
                    .split_once(':')
                    .ok_or_else(|| SpecError::MissingArgument(s.to_string()))?;
                Self::Scale(number(f, s)?, Box::new(Self::parse(inner)?))
            }
            "compose" => {
                let body = arg()?.trim();
                let inner = body
                    .strip_prefix('[')
                    .and_then(|b| b.strip_suffix(']'))
                    .ok_or_else(|| SpecError::Unbalanced(s.to_string()))?;
                let parts = split_top(inner, s)?;
                if parts.iter().any(|p| p.trim().is_empty()) {
                    return Err(SpecError::MissingArgument(s.to_string()));
                }
                Self::Compose(
                    parts
                        .iter()
                        .map(|p| Self::parse(p))
                        .collect::<Result<_, _>>()?,
                )
            }
            "file" => Self::File(arg()?.to_string()),
            other => return Err(SpecError::UnknownToken(other.to_string())),
        })
    }

    /// Builds the qubit channel (files may hold any dimension).
    pub fn build(&self) -> Result<KrausChannel, SpecError> {
        let invalid = |reason: String| SpecError::Invalid {
            spec: format!("{self:?}"),
            reason,
        };
        Ok(match self {
            Self::Identity => KrausChannel::identity(2),
            Self::Filter => filter_channel(),
            Self::Prep => state_prep_channel(),
            Self::Depolarizing(p) => depolarizing(2, *p).map_err(|e| invalid(e.to_string()))?,
            Self::Reset(p) => reset_channel(*p).map_err(|e| invalid(e.to_string()))?,
            Self::Rotation { axis, angle } => {
                rotation_unitary(*axis, *angle).map_err(|e| invalid(e.to_string()))?
            }
            Self::Haar(seed) => {
                let u = haar_unitary(2, &RngStream::keyed(*seed, &[purpose::HAAR]));
                KrausChannel::unitary(u).map_err(|e| invalid(e.to_string()))?
            }
            Self::Bruzda { rank, seed } => {
                bruzda_channel(2, *rank, &RngStream::keyed(*seed, &[purpose::BRUZDA]))
                    .map_err(|e| invalid(e.to_string()))?
            }
            Self::Scale(f, inner) => {
                if !(0.0..=1.0).contains(f) {
                    return Err(invalid(format!("scale factor {f} outside [0, 1]")));
                }
                inner.build()?.scaled(*f)
            }
            Self::Compose(parts) => {
                let mut it = parts.iter();
                let first = it
                    .next()
                    .ok_or_else(|| invalid("empty composition".into()))?
                    .build()?;
                it.try_fold(first, |acc, p| {
                    let next = p.build()?;
                    acc.then(&next).map_err(|e| invalid(e.to_string()))
                })?
            }
            Self::File(path) => {
                formats::read_channel_file(Path::new(path)).map_err(|e| invalid(e.to_string()))?
            }
        })
    }
}

pub fn parse_channel(spec: &str) -> Result<KrausChannel, SpecError> {
    ChannelSpec::parse(spec)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(
            ChannelSpec::parse("dep:0.1").unwrap(),
            ChannelSpec::Depolarizing(0.1)
        );
        assert_eq!(
            ChannelSpec::parse("bruzda:3:9").unwrap(),
            ChannelSpec::Bruzda { rank: 3, seed: 9 }
        );
        let c = ChannelSpec::parse("compose:[reset:0.003,haar:42]").unwrap();
        assert_eq!(
            c,
            ChannelSpec::Compose(vec![ChannelSpec::Reset(0.003), ChannelSpec::Haar(42)])
        );
        let nested =
            ChannelSpec::parse("compose:[compose:[dep:0.1,rotX:0.1],scale:0.9:filter]").unwrap();
        assert!(matches!(nested, ChannelSpec::Compose(ref v) if v.len() == 2));
    }

    #[test]
    fn reports_offending_tokens() {
        match ChannelSpec::parse("depol:0.1") {
            Err(SpecError::UnknownToken(t)) => assert_eq!(t, "depol"),
            other => panic!("{other:?}"),
        }
        match ChannelSpec::parse("dep:abc") {
            Err(SpecError::BadNumber { token, .. }) => assert_eq!(token, "abc"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ChannelSpec::parse("compose:[dep:0.1"),
            Err(SpecError::Unbalanced(_))
        ));
        assert!(matches!(
            ChannelSpec::parse("reset"),
            Err(SpecError::MissingArgument(_))
        ));
        assert!(parse_channel("dep:1.5").is_err());
    }

    #[test]
    fn builds_cptp_channels() {
        for s in [
            "dep:0.1",
            "reset:0.003",
            "rotX:0.1",
            "haar:42",
            "bruzda:2:1",
            "compose:[reset:0.01,haar:3]",
        ] {
            let k = parse_channel(s).unwrap();
            assert!(k.is_trace_preserving(), "{s}");
        }
        assert!(!parse_channel("scale:0.98:dep:0.1")
            .unwrap()
            .is_trace_preserving());
    }
}
