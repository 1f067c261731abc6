//! Flat `key = value` run configuration. `#` starts a comment; keys use the
//! long CLI flag names (`-` and `_` are interchangeable).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Keys accepted in a configuration file.
pub const KNOWN_KEYS: &[&str] = &[
    "features",
    "predictions",
    "out",
    "input",
    "shifted",
    "column",
    "correct_column",
    "error_column",
    "eigenvalues",
    "model",
    "components",
    "covariance",
    "cov_reg",
    "max_iter",
    "tol",
    "prior",
    "grid",
    "mass",
    "seed",
    "pca",
    "whiten",
    "epochs",
    "learning_rate",
    "weight_decay",
    "batch_size",
    "patience",
    "hidden",
    "flow_layers",
    "mode",
    "tpr",
    "step",
    "thresholds",
    "plot",
    "kind",
    "n_train",
    "noise",
    "gap",
    "eval_points",
    "sigma",
    "shift",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, (String, usize)>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = normalize(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("unknown key `{}`", k.trim()),
                });
            }
            let value = v.trim();
            if value.is_empty() {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("empty value for `{key}`"),
                });
            }
            if values.insert(key.clone(), (value.to_string(), line_no)).is_some() {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("`{key}` set twice"),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(|(v, _)| v.as_str())
    }

    /// Typed value; parse failures cite the line the key came from.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(&normalize(key)) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| Error::Config {
                line: *line,
                message: format!("invalid value `{v}` for `{key}`"),
            }),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_types_values() {
        let c = RunConfig::parse("# run\ncomponents = 3\nprior=uniform:-10:10  # comment\n\nbatch-size = 64\n").unwrap();
        assert_eq!(c.get::<usize>("components").unwrap(), Some(3));
        assert_eq!(c.get_str("prior"), Some("uniform:-10:10"));
        assert_eq!(c.get::<usize>("batch_size").unwrap(), Some(64));
        assert_eq!(c.get::<f64>("mass").unwrap(), None);
    }

    #[test]
    fn unknown_key_names_line() {
        match RunConfig::parse("seed = 1\n\ncolour = red\n") {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("colour"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::parse("seed 1"), Err(Error::Config { line: 1, .. })));
        let c = RunConfig::parse("\ngrid = many").unwrap();
        assert!(matches!(c.get::<usize>("grid"), Err(Error::Config { line: 2, .. })));
    }
}
