use std::fs;
use std::path::Path;

use cayley_core::cayley::{CayleyFilter, CayleyFilterSpec};
use cayley_core::chebyshev::ChebFilter;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Strict JSON parse; the error names the offending field path.
pub fn parse_strict<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = (path != ".").then(|| path.clone());
        CliError::config(field, format!("at `{path}`: {}", e.inner()))
    })
}

/// Reads a config file, or materializes the defaults when no path is given.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => parse_strict(&read_text(p)?),
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChebFilterSpec {
    alpha: Vec<f64>,
    #[serde(default)]
    lambda_max: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum FilterFile {
    Cayley(CayleyFilter),
    /// `lambda_max` is filled from the Laplacian when absent.
    Chebyshev { alpha: Vec<f64>, lambda_max: Option<f64> },
}

impl FilterFile {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            FilterFile::Cayley(f) => serde_json::to_value(CayleyFilterSpec::from(f)).unwrap_or_default(),
            FilterFile::Chebyshev { alpha, lambda_max } => {
                serde_json::json!({ "alpha": alpha, "lambda_max": lambda_max })
            }
        }
    }

    pub fn chebyshev(&self, default_lambda_max: f64) -> Option<Result<ChebFilter, CliError>> {
        match self {
            FilterFile::Chebyshev { alpha, lambda_max } => Some(
                ChebFilter::new(alpha.clone(), lambda_max.unwrap_or(default_lambda_max)).map_err(CliError::from),
            ),
            FilterFile::Cayley(_) => None,
        }
    }
}

const CAYLEY_KEYS: [&str; 3] = ["c0", "c", "h"];

/// A filter file holds either a Cayley filter `{c0, c, h}` or a Chebyshev
/// filter `{alpha, lambda_max?}`; mixing the two is rejected.
pub fn parse_filter(text: &str) -> Result<FilterFile, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::config(None, format!("filter is not JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::config(None, "filter must be a JSON object"))?;
    let has_alpha = obj.contains_key("alpha");
    let cayley_keys: Vec<&str> = CAYLEY_KEYS.iter().copied().filter(|k| obj.contains_key(*k)).collect();
    if has_alpha && !cayley_keys.is_empty() {
        return Err(CliError::config(
            Some("alpha".into()),
            format!(
                "ambiguous filter family: `alpha` (Chebyshev) given together with {} (Cayley)",
                cayley_keys.iter().map(|k| format!("`{k}`")).collect::<Vec<_>>().join(", ")
            ),
        ));
    }
    if has_alpha {
        let spec: ChebFilterSpec = parse_strict(text)?;
        if let Some(lm) = spec.lambda_max {
            ChebFilter::new(spec.alpha.clone(), lm)?;
        }
        Ok(FilterFile::Chebyshev {
            alpha: spec.alpha,
            lambda_max: spec.lambda_max,
        })
    } else {
        let spec: CayleyFilterSpec = parse_strict(text)?;
        Ok(FilterFile::Cayley(CayleyFilter::try_from(spec)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cayley_core::learn::TrainConfig;

    #[test]
    fn unknown_key_reports_path() {
        let err = parse_strict::<TrainConfig>(r#"{"graph": {"k": 15, "pin": 0.5}}"#).unwrap_err();
        assert_eq!(err.kind, "config");
        assert!(err.message.contains("graph"), "{}", err.message);
        assert!(err.message.contains("pin"), "{}", err.message);
    }

    #[test]
    fn filter_families() {
        assert!(matches!(
            parse_filter(r#"{"c0": 1.0, "c": [[0.5, -0.2]], "h": 0.3}"#).unwrap(),
            FilterFile::Cayley(_)
        ));
        assert!(matches!(
            parse_filter(r#"{"alpha": [1.0, 0.5]}"#).unwrap(),
            FilterFile::Chebyshev { lambda_max: None, .. }
        ));
        let err = parse_filter(r#"{"alpha": [1.0], "c": [[1.0, 0.0]]}"#).unwrap_err();
        assert!(err.message.contains("ambiguous"));
        assert!(parse_filter(r#"{"c0": 1.0, "h": -1.0}"#).is_err());
        assert!(parse_filter(r#"[1, 2]"#).is_err());
    }
}
