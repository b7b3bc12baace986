//! Per-(kind, severity) parameter table loaded from `corruption_params.toml`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::spec::{CorruptionKind, MAX_SEVERITY};
use crate::error::{Error, Result};

pub const DEFAULT_PARAMS_TOML: &str = include_str!("../../config/corruption_params.toml");

/// Named numeric parameters for one (kind, severity).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet(BTreeMap<String, f64>);

impl ParamSet {
    pub fn get(&self, name: &str) -> Result<f64> {
        self.0
            .get(name)
            .copied()
            .ok_or_else(|| Error::config(format!("missing corruption parameter {name:?}")))
    }

    pub fn get_usize(&self, name: &str) -> Result<usize> {
        let v = self.get(name)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::config(format!(
                "parameter {name:?} must be a non-negative integer, got {v}"
            )));
        }
        Ok(v as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Clone, Debug)]
pub struct ParamTable {
    version: u32,
    pattern_seed: u64,
    stochastic: BTreeSet<CorruptionKind>,
    entries: BTreeMap<(CorruptionKind, u8), ParamSet>,
    source: String,
}

impl ParamTable {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_PARAMS_TOML).expect("bundled corruption parameters are valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::config(format!("corruption parameters: {e}")))?;

        let mut version = None;
        let mut pattern_seed = None;
        let mut stochastic = BTreeSet::new();
        let mut entries = BTreeMap::new();

        for (key, value) in &table {
            match key.as_str() {
                "version" => {
                    version = Some(
                        value
                            .as_integer()
                            .and_then(|v| u32::try_from(v).ok())
                            .ok_or_else(|| Error::config("`version` must be a positive integer"))?,
                    )
                }
                "pattern_seed" => {
                    pattern_seed = Some(
                        value
                            .as_integer()
                            .and_then(|v| u64::try_from(v).ok())
                            .ok_or_else(|| Error::config("`pattern_seed` must be a non-negative integer"))?,
                    )
                }
                "stochastic" => {
                    let list = value
                        .as_array()
                        .ok_or_else(|| Error::config("`stochastic` must be a list of kinds"))?;
                    for item in list {
                        let name = item
                            .as_str()
                            .ok_or_else(|| Error::config("`stochastic` entries must be strings"))?;
                        stochastic.insert(name.parse()?);
                    }
                }
                kind_name => {
                    let kind: CorruptionKind = kind_name.parse()?;
                    let levels = value.as_table().ok_or_else(|| {
                        Error::config(format!("section [{kind_name}] must be a table"))
                    })?;
                    for (level, params) in levels {
                        let severity: u8 = level
                            .parse()
                            .ok()
                            .filter(|s| (1..=MAX_SEVERITY).contains(s))
                            .ok_or_else(|| {
                                Error::config(format!("[{kind_name}] has invalid severity {level:?}"))
                            })?;
                        let params = params.as_table().ok_or_else(|| {
                            Error::config(format!("[{kind_name}.{level}] must be a table"))
                        })?;
                        let mut set = BTreeMap::new();
                        for (name, v) in params {
                            let num = v
                                .as_float()
                                .or_else(|| v.as_integer().map(|i| i as f64))
                                .filter(|f| f.is_finite())
                                .ok_or_else(|| {
                                    Error::config(format!(
                                        "[{kind_name}.{level}] {name} must be a finite number"
                                    ))
                                })?;
                            set.insert(name.clone(), num);
                        }
                        entries.insert((kind, severity), ParamSet(set));
                    }
                }
            }
        }

        for kind in CorruptionKind::ALL {
            for severity in 1..=MAX_SEVERITY {
                if !entries.contains_key(&(kind, severity)) {
                    return Err(Error::config(format!(
                        "corruption parameters lack [{kind}] severity {severity}"
                    )));
                }
            }
        }

        Ok(Self {
            version: version.ok_or_else(|| Error::config("corruption parameters lack `version`"))?,
            pattern_seed: pattern_seed.unwrap_or(0),
            stochastic,
            entries,
            source: text.to_owned(),
        })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn pattern_seed(&self) -> u64 {
        self.pattern_seed
    }

    pub fn is_stochastic(&self, kind: CorruptionKind) -> bool {
        self.stochastic.contains(&kind)
    }

    pub fn params(&self, kind: CorruptionKind, severity: u8) -> Result<&ParamSet> {
        self.entries
            .get(&(kind, severity))
            .ok_or_else(|| Error::config(format!("no parameters for {kind} severity {severity}")))
    }

    /// Raw text of the file this table came from; part of the pipeline config hash.
    pub fn source(&self) -> &str {
        &self.source
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_is_complete() {
        let t = ParamTable::builtin();
        assert_eq!(t.version(), 1);
        for kind in CorruptionKind::ALL {
            for s in 1..=5 {
                assert!(t.params(kind, s).is_ok());
            }
        }
        assert!(t.is_stochastic(CorruptionKind::Snow));
        assert!(!t.is_stochastic(CorruptionKind::Fog));
        assert_eq!(
            t.params(CorruptionKind::GaussianNoise, 3).unwrap().get("sigma").unwrap(),
            0.18
        );
    }

    #[test]
    fn missing_level_is_rejected() {
        let broken = DEFAULT_PARAMS_TOML.replace("5 = { quality = 2 }", "");
        assert_ne!(broken, DEFAULT_PARAMS_TOML);
        let err = ParamTable::parse(&broken).unwrap_err();
        assert!(err.to_string().contains("jpeg_compression"), "{err}");
    }

    #[test]
    fn unknown_kind_is_config_error() {
        let text = format!("{DEFAULT_PARAMS_TOML}\n[hail]\n1 = {{ size = 1 }}\n");
        assert!(matches!(ParamTable::parse(&text), Err(Error::Config(_))));
    }
}
