//! Run settings from an optional manifest file, overridden by flags.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use feasim::ee_motion::MotionKind;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Greedy,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Slerp,
    Fwd,
    Spline,
}

impl From<Motion> for MotionKind {
    fn from(m: Motion) -> MotionKind {
        match m {
            Motion::Slerp => MotionKind::Slerp,
            Motion::Fwd => MotionKind::Fwd,
            Motion::Spline => MotionKind::Spline,
        }
    }
}

/// Seed range written `a..b` (end exclusive), `a..=b` or a single seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Range<u64>);

impl std::str::FromStr for Seeds {
    type Err = String;

    fn from_str(s: &str) -> Result<Seeds, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad seed `{t}` in `{s}`"))
        };
        let range = if let Some((a, b)) = s.split_once("..=") {
            num(a)?..num(b)?.checked_add(1).ok_or("seed range overflows")?
        } else if let Some((a, b)) = s.split_once("..") {
            num(a)?..num(b)?
        } else {
            let a = num(s)?;
            a..a + 1
        };
        if range.is_empty() {
            return Err(format!("seed range `{s}` is empty"));
        }
        Ok(Seeds(range))
    }
}

impl<'de> Deserialize<'de> for Seeds {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Seeds, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Seeds {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}..{}", self.0.start, self.0.end)
    }
}

/// Manifest file: every field optional, each overridden by its flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub robot: Option<String>,
    pub worldgen: Option<PathBuf>,
    pub env: Option<PathBuf>,
    pub motion: Option<Motion>,
    pub seeds: Option<Seeds>,
    pub out: Option<PathBuf>,
    pub policy: Option<PolicyKind>,
    pub episodes: Option<PathBuf>,
    pub replay: Option<PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest, CliError> {
        let text = crate::read(path)?;
        toml::from_str(&text).map_err(|e| CliError::config(path, e))
    }
}

/// Where an effective setting came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Flag,
    Manifest,
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(match self {
            Source::Flag => "flag",
            Source::Manifest => "manifest",
            Source::Default => "default",
        })
    }
}

/// Flag over manifest over default; records the winner for the startup report.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: Option<T>) -> (Option<T>, Source) {
    match (flag, file) {
        (Some(v), _) => (Some(v), Source::Flag),
        (None, Some(v)) => (Some(v), Source::Manifest),
        (None, None) => (default, Source::Default),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_syntax() {
        assert_eq!("3..7".parse::<Seeds>().unwrap().0, 3..7);
        assert_eq!("3..=7".parse::<Seeds>().unwrap().0, 3..8);
        assert_eq!("9".parse::<Seeds>().unwrap().0, 9..10);
        assert!("7..7".parse::<Seeds>().is_err());
        assert!("a..3".parse::<Seeds>().is_err());
        assert!(format!("0..={}", u64::MAX).parse::<Seeds>().is_err());
    }

    #[test]
    fn flag_beats_manifest_beats_default() {
        assert_eq!(pick(Some(1), Some(2), Some(3)), (Some(1), Source::Flag));
        assert_eq!(pick(None, Some(2), Some(3)), (Some(2), Source::Manifest));
        assert_eq!(pick(None::<i32>, None, Some(3)), (Some(3), Source::Default));
    }

    #[test]
    fn manifest_rejects_unknown_keys() {
        let m: RunManifest = toml::from_str("seeds = \"0..4\"\nmotion = \"spline\"\n").unwrap();
        assert_eq!(m.seeds, Some(Seeds(0..4)));
        assert_eq!(m.motion, Some(Motion::Spline));
        assert!(toml::from_str::<RunManifest>("seed = \"0..4\"\n").is_err());
    }
}
