//! Server configuration: TOML file, then `NUDGE_*` environment overrides.
//!
//! Keys (file and env, env upper-cased with the `NUDGE_` prefix):
//! `bind`, `port`, `data_dir`, `window_len_ms`, `cooldown_ms`, `rate_limit`,
//! `rate_window_ms`, `session_cap`, `escalation`, `bin_width_ms`,
//! `dominance_threshold`, `stream_buffer`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use nudge_core::moderation::Escalation;
use nudge_core::ServiceConfig;
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "NUDGE_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    pub data_dir: PathBuf,
    pub window_len_ms: u64,
    pub cooldown_ms: u64,
    pub rate_limit: u32,
    pub rate_window_ms: u64,
    pub session_cap: Option<u32>,
    pub escalation: Escalation,
    pub bin_width_ms: u64,
    pub dominance_threshold: f64,
    pub stream_buffer: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        let svc = ServiceConfig::default();
        ServerConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
            data_dir: PathBuf::from("sessions"),
            window_len_ms: svc.window_len_ms,
            cooldown_ms: svc.moderation.cooldown_ms,
            rate_limit: svc.moderation.rate_limit,
            rate_window_ms: svc.moderation.rate_window_ms,
            session_cap: svc.moderation.session_cap,
            escalation: svc.moderation.escalation,
            bin_width_ms: svc.analytics.bin_width_ms,
            dominance_threshold: svc.analytics.dominance_threshold,
            stream_buffer: svc.stream_buffer,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, raw: &str) -> anyhow::Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| anyhow::anyhow!("{ENV_PREFIX}{}: {e}", key.to_uppercase()))
}

impl ServerConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Apply overrides from `lookup(KEY)`, where KEY is e.g. `NUDGE_COOLDOWN_MS`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> anyhow::Result<()> {
        let get = |key: &str| lookup(&format!("{ENV_PREFIX}{}", key.to_uppercase()));
        if let Some(v) = get("bind") {
            self.bind = v;
        }
        if let Some(v) = get("port") {
            self.port = parse("port", &v)?;
        }
        if let Some(v) = get("data_dir") {
            self.data_dir = PathBuf::from(v);
        }
        if let Some(v) = get("window_len_ms") {
            self.window_len_ms = parse("window_len_ms", &v)?;
        }
        if let Some(v) = get("cooldown_ms") {
            self.cooldown_ms = parse("cooldown_ms", &v)?;
        }
        if let Some(v) = get("rate_limit") {
            self.rate_limit = parse("rate_limit", &v)?;
        }
        if let Some(v) = get("rate_window_ms") {
            self.rate_window_ms = parse("rate_window_ms", &v)?;
        }
        if let Some(v) = get("session_cap") {
            self.session_cap = match v.trim() {
                "" | "none" | "off" => None,
                n => Some(parse("session_cap", n)?),
            };
        }
        if let Some(v) = get("escalation") {
            self.escalation = parse("escalation", &v)?;
        }
        if let Some(v) = get("bin_width_ms") {
            self.bin_width_ms = parse("bin_width_ms", &v)?;
        }
        if let Some(v) = get("dominance_threshold") {
            self.dominance_threshold = parse("dominance_threshold", &v)?;
        }
        if let Some(v) = get("stream_buffer") {
            self.stream_buffer = parse("stream_buffer", &v)?;
        }
        Ok(())
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.service_config()?;
        Ok(cfg)
    }

    pub fn service_config(&self) -> anyhow::Result<ServiceConfig> {
        let mut svc = ServiceConfig::default();
        svc.window_len_ms = self.window_len_ms;
        svc.moderation.cooldown_ms = self.cooldown_ms;
        svc.moderation.rate_limit = self.rate_limit;
        svc.moderation.rate_window_ms = self.rate_window_ms;
        svc.moderation.session_cap = self.session_cap;
        svc.moderation.escalation = self.escalation;
        svc.analytics.bin_width_ms = self.bin_width_ms;
        svc.analytics.dominance_threshold = self.dominance_threshold;
        svc.stream_buffer = self.stream_buffer;
        if let Err(e) = svc.validate() {
            bail!("invalid configuration: {e}");
        }
        Ok(svc)
    }

    pub fn addr(&self) -> String {
        format!("{}:{}", self.bind, self.port)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn defaults_match_service_defaults() {
        let cfg = ServerConfig::default();
        assert_eq!(cfg.service_config().unwrap(), ServiceConfig::default());
    }

    #[test]
    fn file_then_env() {
        let mut cfg: ServerConfig = toml::from_str(
            r#"
            port = 9000
            cooldown_ms = 15000
            escalation = "off"
            session_cap = 40
            "#,
        )
        .unwrap();
        assert_eq!(cfg.port, 9000);
        assert_eq!(cfg.escalation, Escalation::Off);

        let env: HashMap<&str, &str> = [
            ("NUDGE_COOLDOWN_MS", "5000"),
            ("NUDGE_ESCALATION", "warn_then_ban"),
            ("NUDGE_SESSION_CAP", "none"),
            ("NUDGE_BIND", "0.0.0.0"),
        ]
        .into();
        cfg.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(cfg.cooldown_ms, 5000);
        assert_eq!(cfg.escalation, Escalation::WarnThenBan);
        assert_eq!(cfg.session_cap, None);
        assert_eq!(cfg.addr(), "0.0.0.0:9000");
        let svc = cfg.service_config().unwrap();
        assert_eq!(svc.moderation.cooldown_ms, 5000);
    }

    #[test]
    fn example_file_is_the_defaults() {
        let cfg: ServerConfig = toml::from_str(include_str!("../nudge.example.toml")).unwrap();
        assert_eq!(cfg, ServerConfig::default());
    }

    #[test]
    fn bad_values_are_reported() {
        let mut cfg = ServerConfig::default();
        let err = cfg.apply_env(|k| (k == "NUDGE_RATE_LIMIT").then(|| "lots".to_string()));
        assert!(err.unwrap_err().to_string().contains("NUDGE_RATE_LIMIT"));
        assert!(toml::from_str::<ServerConfig>("colour = 1").is_err());
        let zero = ServerConfig { cooldown_ms: 0, ..ServerConfig::default() };
        assert!(zero.service_config().is_err());
    }
}
