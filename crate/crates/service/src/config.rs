//! Flat TOML service configuration. Relative paths resolve against the
//! directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use nearme_core::epi::FipsAliases;
use nearme_core::geocode::{KeyPlacement, ProviderConfig};
use nearme_core::routing::{IsochroneConfig, IsochroneMode};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("{0}")]
    Invalid(String),
}

/// The data files a snapshot is built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPaths {
    pub graph_nodes: PathBuf,
    pub graph_edges: PathBuf,
    pub counties: PathBuf,
    pub cases: PathBuf,
    pub deaths: PathBuf,
    pub gazetteer: PathBuf,
}

#[derive(Debug, Clone)]
pub struct AppConfig {
    pub data: DataPaths,
    pub commitment_log: PathBuf,
    pub isochrone: IsochroneConfig,
    pub refresh_interval: Duration,
    pub listen: String,
    pub cors_origin: Option<String>,
    pub static_dir: Option<PathBuf>,
    pub geocoder: Option<ProviderConfig>,
    pub isochrone_provider: Option<ProviderConfig>,
    pub fips_aliases: FipsAliases,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AliasSetting {
    Preset(String),
    Table(BTreeMap<String, String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    graph_nodes: Option<PathBuf>,
    graph_edges: Option<PathBuf>,
    counties: Option<PathBuf>,
    cases: Option<PathBuf>,
    deaths: Option<PathBuf>,
    gazetteer: Option<PathBuf>,
    commitment_log: Option<PathBuf>,

    budget: Option<f64>,
    cell_size: Option<f64>,
    mode: Option<IsochroneMode>,
    snap_radius: Option<f64>,
    dilation: Option<u32>,

    refresh_interval: Option<u64>,
    listen: Option<String>,
    cors_origin: Option<String>,
    static_dir: Option<PathBuf>,

    geocoder_url: Option<String>,
    geocoder_key_env: Option<String>,
    isochrone_url: Option<String>,
    isochrone_key_env: Option<String>,
    provider_key_header: Option<String>,
    provider_key_query: Option<String>,
    provider_timeout: Option<f64>,
    provider_retries: Option<u32>,

    fips_aliases: Option<AliasSetting>,
}

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_REFRESH_SECS: u64 = 86_400;

impl AppConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base, |k| std::env::var(k).ok()).map_err(|e| match e {
            ConfigError::Invalid(reason) => ConfigError::Parse {
                path: path.to_path_buf(),
                reason,
            },
            other => other,
        })
    }

    /// Parses config text; `env` looks up the API-key variables.
    pub fn parse(text: &str, base: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let raw: Raw = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.message().to_string()))?;
        let required = |v: Option<PathBuf>, key: &str| {
            v.map(|p| base.join(p))
                .ok_or_else(|| ConfigError::Invalid(format!("missing required key `{key}`")))
        };
        let data = DataPaths {
            graph_nodes: required(raw.graph_nodes, "graph_nodes")?,
            graph_edges: required(raw.graph_edges, "graph_edges")?,
            counties: required(raw.counties, "counties")?,
            cases: required(raw.cases, "cases")?,
            deaths: required(raw.deaths, "deaths")?,
            gazetteer: required(raw.gazetteer, "gazetteer")?,
        };
        let commitment_log = required(raw.commitment_log, "commitment_log")?;

        let d = IsochroneConfig::default();
        let isochrone = IsochroneConfig {
            budget: raw.budget.unwrap_or(d.budget),
            cell_size: raw.cell_size.unwrap_or(d.cell_size),
            mode: raw.mode.unwrap_or(d.mode),
            snap_radius: raw.snap_radius.unwrap_or(d.snap_radius),
            dilation: raw.dilation.unwrap_or(d.dilation),
        };
        isochrone.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let refresh = raw.refresh_interval.unwrap_or(DEFAULT_REFRESH_SECS);
        if refresh == 0 {
            return Err(ConfigError::Invalid("refresh_interval must be > 0".into()));
        }

        let placement = match (raw.provider_key_header, raw.provider_key_query) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "set at most one of provider_key_header and provider_key_query".into(),
                ))
            }
            (Some(h), None) => KeyPlacement::Header(h),
            (None, Some(q)) => KeyPlacement::Query(q),
            (None, None) => KeyPlacement::Header("Authorization".into()),
        };
        let timeout = match raw.provider_timeout {
            Some(s) if s > 0.0 && s.is_finite() => Some(Duration::from_secs_f64(s)),
            Some(s) => return Err(ConfigError::Invalid(format!("provider_timeout must be > 0, got {s}"))),
            None => None,
        };
        let provider = |url: Option<String>, key_env: Option<String>, what: &str| -> Result<_, ConfigError> {
            let Some(url) = url else { return Ok(None) };
            let key = match key_env {
                Some(var) => env(&var).ok_or_else(|| {
                    ConfigError::Invalid(format!("{what} key variable `{var}` is not set"))
                })?,
                None => String::new(),
            };
            let mut p = ProviderConfig::new(url, key);
            p.key_placement = placement.clone();
            if let Some(t) = timeout {
                p.timeout = t;
            }
            if let Some(n) = raw.provider_retries {
                p.retry_count = n;
            }
            Ok(Some(p))
        };
        let geocoder = provider(raw.geocoder_url, raw.geocoder_key_env, "geocoder")?;
        let isochrone_provider = provider(raw.isochrone_url, raw.isochrone_key_env, "isochrone")?;

        let fips_aliases = match raw.fips_aliases {
            None => FipsAliases::default(),
            Some(AliasSetting::Preset(p)) if p == "new-york-city" => FipsAliases::new_york_city(),
            Some(AliasSetting::Preset(p)) => {
                return Err(ConfigError::Invalid(format!(
                    "unknown fips_aliases preset `{p}` (expected new-york-city or a table)"
                )))
            }
            Some(AliasSetting::Table(t)) => FipsAliases::new(t),
        };

        Ok(Self {
            data,
            commitment_log,
            isochrone,
            refresh_interval: Duration::from_secs(refresh),
            listen: raw.listen.unwrap_or_else(|| DEFAULT_LISTEN.into()),
            cors_origin: raw.cors_origin,
            static_dir: raw.static_dir.map(|p| base.join(p)),
            geocoder,
            isochrone_provider,
            fips_aliases,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nearme_core::synthetic::DEMO_CONFIG;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn demo_config_parses_with_defaults() {
        let c = AppConfig::parse(DEMO_CONFIG, Path::new("/data"), no_env).unwrap();
        assert_eq!(c.data.cases, Path::new("/data/cases.csv"));
        assert_eq!(c.commitment_log, Path::new("/data/commitments.jsonl"));
        assert_eq!(c.refresh_interval, Duration::from_secs(86_400));
        assert_eq!(c.isochrone, IsochroneConfig::default());
        assert!(c.geocoder.is_none() && c.isochrone_provider.is_none());
        assert_eq!(c.fips_aliases, FipsAliases::default());
    }

    #[test]
    fn missing_and_unknown_keys() {
        let text = DEMO_CONFIG.replace("deaths = \"deaths.csv\"\n", "");
        let e = AppConfig::parse(&text, Path::new(""), no_env).unwrap_err().to_string();
        assert!(e.contains("deaths"), "{e}");
        let text = format!("{DEMO_CONFIG}colour = 3\n");
        assert!(AppConfig::parse(&text, Path::new(""), no_env).is_err());
        let text = DEMO_CONFIG.replace("refresh_interval = 86400", "refresh_interval = 0");
        assert!(AppConfig::parse(&text, Path::new(""), no_env).is_err());
    }

    #[test]
    fn providers_read_keys_from_env() {
        let text = format!(
            "{DEMO_CONFIG}geocoder_url = \"http://geo\"\ngeocoder_key_env = \"GEO_KEY\"\nprovider_key_query = \"api_key\"\nprovider_timeout = 0.5\n"
        );
        let c = AppConfig::parse(&text, Path::new(""), |k| (k == "GEO_KEY").then(|| "s3cret".into())).unwrap();
        let g = c.geocoder.unwrap();
        assert_eq!(g.api_key, "s3cret");
        assert_eq!(g.key_placement, KeyPlacement::Query("api_key".into()));
        assert_eq!(g.timeout, Duration::from_millis(500));
        assert!(!format!("{g:?}").contains("s3cret"));
        assert!(AppConfig::parse(&text, Path::new(""), no_env).is_err());
    }

    #[test]
    fn alias_settings() {
        let text = format!("{DEMO_CONFIG}fips_aliases = \"new-york-city\"\n");
        let c = AppConfig::parse(&text, Path::new(""), no_env).unwrap();
        assert_eq!(c.fips_aliases.resolve("36047"), "36061");
        let text = format!("{DEMO_CONFIG}fips_aliases = {{ \"48005\" = \"48003\" }}\n");
        let c = AppConfig::parse(&text, Path::new(""), no_env).unwrap();
        assert_eq!(c.fips_aliases.resolve("48005"), "48003");
    }
}
