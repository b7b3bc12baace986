use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

macro_rules! kinds {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// The sixteen corruption families, grouped as noise, blur, weather and digital.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum CorruptionKind {
            $($variant),+
        }

        impl CorruptionKind {
            pub const ALL: [CorruptionKind; 16] = [$(CorruptionKind::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(CorruptionKind::$variant => $name),+
                }
            }
        }

        impl FromStr for CorruptionKind {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(CorruptionKind::$variant),)+
                    other => Err(Error::config(format!("unsupported corruption kind {other:?}"))),
                }
            }
        }
    };
}

kinds! {
    GaussianNoise => "gaussian_noise",
    ShotNoise => "shot_noise",
    ImpulseNoise => "impulse_noise",
    SpeckleNoise => "speckle_noise",
    DefocusBlur => "defocus_blur",
    GlassBlur => "glass_blur",
    MotionBlur => "motion_blur",
    ZoomBlur => "zoom_blur",
    Snow => "snow",
    Frost => "frost",
    Fog => "fog",
    Brightness => "brightness",
    Contrast => "contrast",
    Elastic => "elastic",
    Pixelate => "pixelate",
    JpegCompression => "jpeg_compression",
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const MAX_SEVERITY: u8 = 5;
pub const CLEAN_KEY: &str = "clean";

/// A corruption at a severity level. Severity 0 of every kind is the same
/// identity spec, [`CorruptionSpec::Clean`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CorruptionSpec {
    Clean,
    Corrupted { kind: CorruptionKind, severity: u8 },
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, severity: u8) -> Result<Self> {
        match severity {
            0 => Ok(CorruptionSpec::Clean),
            1..=MAX_SEVERITY => Ok(CorruptionSpec::Corrupted { kind, severity }),
            s => Err(Error::config(format!(
                "severity {s} outside 0..={MAX_SEVERITY}"
            ))),
        }
    }

    pub fn severity(&self) -> u8 {
        match self {
            CorruptionSpec::Clean => 0,
            CorruptionSpec::Corrupted { severity, .. } => *severity,
        }
    }

    pub fn kind(&self) -> Option<CorruptionKind> {
        match self {
            CorruptionSpec::Clean => None,
            CorruptionSpec::Corrupted { kind, .. } => Some(*kind),
        }
    }

    pub fn is_clean(&self) -> bool {
        matches!(self, CorruptionSpec::Clean)
    }

    /// Canonical key: `clean` or `{kind}_{severity}`.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CorruptionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorruptionSpec::Clean => f.write_str(CLEAN_KEY),
            CorruptionSpec::Corrupted { kind, severity } => write!(f, "{kind}_{severity}"),
        }
    }
}

impl FromStr for CorruptionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == CLEAN_KEY {
            return Ok(CorruptionSpec::Clean);
        }
        let (kind, severity) = s
            .rsplit_once('_')
            .ok_or_else(|| Error::config(format!("malformed corruption key {s:?}")))?;
        let severity: u8 = severity
            .parse()
            .map_err(|_| Error::config(format!("malformed severity in corruption key {s:?}")))?;
        if severity == 0 {
            return Err(Error::config(format!(
                "severity 0 is spelled {CLEAN_KEY:?}, got {s:?}"
            )));
        }
        CorruptionSpec::new(kind.parse()?, severity)
    }
}

impl Serialize for CorruptionKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CorruptionKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for CorruptionSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CorruptionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `clean` followed by every kind (in [`CorruptionKind::ALL`] order) at severities 1 through 5.
pub fn enumerate_corruptions() -> Vec<CorruptionSpec> {
    let mut specs = Vec::with_capacity(1 + CorruptionKind::ALL.len() * MAX_SEVERITY as usize);
    specs.push(CorruptionSpec::Clean);
    for kind in CorruptionKind::ALL {
        for severity in 1..=MAX_SEVERITY {
            specs.push(CorruptionSpec::Corrupted { kind, severity });
        }
    }
    specs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn enumeration_has_81_entries_starting_with_clean() {
        let specs = enumerate_corruptions();
        assert_eq!(specs.len(), 81);
        assert_eq!(specs[0].key(), "clean");
        let snow4 = specs.iter().filter(|s| s.key() == "snow_4").count();
        assert_eq!(snow4, 1);
        let mut keys: Vec<_> = specs.iter().map(|s| s.key()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 81);
    }

    #[test]
    fn severity_zero_is_clean() {
        let s = CorruptionSpec::new(CorruptionKind::Snow, 0).unwrap();
        assert_eq!(s, CorruptionSpec::Clean);
        assert_eq!(s.key(), "clean");
    }

    #[test]
    fn rejects_bad_keys() {
        assert!("snow_6".parse::<CorruptionSpec>().is_err());
        assert!("snow_0".parse::<CorruptionSpec>().is_err());
        assert!("hail_2".parse::<CorruptionSpec>().is_err());
        assert!("snow".parse::<CorruptionSpec>().is_err());
        assert!(CorruptionSpec::new(CorruptionKind::Fog, 9).is_err());
    }

    #[test]
    fn underscored_kind_parses() {
        let s: CorruptionSpec = "jpeg_compression_3".parse().unwrap();
        assert_eq!(s.kind(), Some(CorruptionKind::JpegCompression));
        assert_eq!(s.severity(), 3);
    }

    proptest! {
        #[test]
        fn key_round_trips(k in 0usize..16, sev in 0u8..=5) {
            let spec = CorruptionSpec::new(CorruptionKind::ALL[k], sev).unwrap();
            let back: CorruptionSpec = spec.key().parse().unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
