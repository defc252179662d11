use std::collections::BTreeMap;
use std::path::Path;

use bargmann::chain::RaiseVariant;
use bargmann::smatrix::BargmannParams;
use bargmann::verify::acceptance::CHECK_IDS;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("{key}: cannot parse {value:?}")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Every table the pipeline can write. V4 needs a raise variant.
pub const OUTPUT_NAMES: [&str; 8] = ["V0", "V1", "V2", "V3", "V4", "Phi0", "Phi3", "asymptotic_D"];

#[derive(Clone, Debug, PartialEq)]
pub enum CheckSelection {
    All,
    None,
    List(Vec<String>),
}

impl CheckSelection {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => return Ok(Self::All),
            "none" | "" => return Ok(Self::None),
            _ => {}
        }
        let mut ids = Vec::new();
        for item in split_list(s) {
            let norm = item.to_ascii_uppercase();
            let id = if norm.starts_with("AC-") { norm } else { format!("AC-{norm}") };
            if !CHECK_IDS.contains(&id.as_str()) {
                return Err(ConfigError::BadValue { key: "checks".into(), value: item });
            }
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        // Report order follows the criteria, not the command line.
        ids.sort_by_key(|id| CHECK_IDS.iter().position(|c| c == id));
        Ok(Self::List(ids))
    }

    pub fn ids(&self) -> Vec<&'static str> {
        match self {
            Self::All => CHECK_IDS.to_vec(),
            Self::None => vec![],
            Self::List(l) => CHECK_IDS.iter().copied().filter(|c| l.iter().any(|x| x == c)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub chi: f64,
    pub phi: f64,
    pub kappa: f64,
    pub x_min: f64,
    pub r_max: f64,
    /// Uniform intervals on the outer grid; the spacing is r_max/intervals.
    pub intervals: usize,
    /// Geometric points per decade between x_min and the spacing.
    pub per_decade: usize,
    pub sigma_max: Option<f64>,
    /// None means every table, with V4 added when a raise variant is set.
    pub outputs: Option<Vec<String>>,
    pub raise: Option<RaiseVariant>,
    pub checks: CheckSelection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let p = BargmannParams::golden();
        Self {
            chi: p.chi,
            phi: p.phi,
            kappa: p.kappa,
            x_min: 1e-6,
            r_max: 160.0,
            intervals: 8000,
            per_decade: 25,
            sigma_max: None,
            outputs: None,
            raise: None,
            checks: CheckSelection::All,
        }
    }
}

fn split_list(s: &str) -> Vec<String> {
    let t = s.trim();
    let t = t.strip_prefix('[').and_then(|t| t.strip_suffix(']')).unwrap_or(t);
    t.split(',')
        .map(|x| x.trim().trim_matches(|c| c == '"' || c == '\'').to_string())
        .filter(|x| !x.is_empty())
        .collect()
}

fn unquote(s: &str) -> &str {
    s.trim().trim_matches(|c| c == '"' || c == '\'')
}

pub fn parse_raise(s: &str) -> Result<Option<RaiseVariant>, ConfigError> {
    match unquote(s).to_ascii_lowercase().as_str() {
        "inverse" => Ok(Some(RaiseVariant::Inverse)),
        "direct" => Ok(Some(RaiseVariant::Direct)),
        "none" | "" => Ok(None),
        _ => Err(ConfigError::BadValue { key: "raise".into(), value: s.into() }),
    }
}

impl PipelineConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: n + 1, msg: format!("expected key = value, got {line:?}") });
            };
            let key = k.trim().to_string();
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax { line: n + 1, msg: format!("duplicate key {key:?}") });
            }
        }
        Ok(map)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        let mut cfg = Self::default();
        for (k, v) in Self::parse_str(&text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue { key: key.into(), value: value.into() };
        let float = || unquote(value).parse::<f64>().map_err(|_| bad());
        let int = || unquote(value).parse::<usize>().map_err(|_| bad());
        match key.replace('-', "_").as_str() {
            "chi" => self.chi = float()?,
            "phi" => self.phi = float()?,
            "kappa" => self.kappa = float()?,
            "x_min" => self.x_min = float()?,
            "r_max" => self.r_max = float()?,
            "intervals" | "n" => self.intervals = int()?,
            "per_decade" => self.per_decade = int()?,
            "sigma_max" => self.sigma_max = Some(float()?),
            "outputs" => self.outputs = Some(split_list(value)),
            "raise" => self.raise = parse_raise(value)?,
            "checks" => self.checks = CheckSelection::parse(unquote(value))?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn outputs(&self) -> Vec<String> {
        match &self.outputs {
            Some(o) => o.clone(),
            None => {
                OUTPUT_NAMES.iter().filter(|n| **n != "V4" || self.raise.is_some()).map(|s| s.to_string()).collect()
            }
        }
    }

    pub fn grid(&self) -> Result<bargmann::numerics::RadialGrid, ConfigError> {
        bargmann::numerics::RadialGrid::origin_refined(
            self.x_min,
            self.r_max,
            self.r_max / self.intervals as f64,
            self.per_decade,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn params(&self) -> Result<BargmannParams, ConfigError> {
        BargmannParams::new(self.chi, self.phi, self.kappa).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Everything that can be rejected without computing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params()?;
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if !(self.x_min > 0.0 && self.r_max > 0.0 && self.x_min < self.r_max) {
            return invalid(format!("grid needs 0 < x_min < r_max, got {} and {}", self.x_min, self.r_max));
        }
        if self.intervals == 0 {
            return invalid("intervals must be positive".into());
        }
        self.grid()?;
        if let Some(s) = self.sigma_max {
            if s.is_nan() || s <= bargmann::chain::SIGMA_LO {
                return invalid(format!("sigma_max = {s} below the scan start"));
            }
        }
        let outputs = self.outputs();
        if outputs.is_empty() {
            return invalid("no outputs requested".into());
        }
        for o in &outputs {
            if !OUTPUT_NAMES.contains(&o.as_str()) {
                return invalid(format!("unknown output {o:?}; known: {}", OUTPUT_NAMES.join(", ")));
            }
        }
        if outputs.iter().any(|o| o == "V4") && self.raise.is_none() {
            return invalid("output V4 needs raise = inverse or direct".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_golden() {
        let c = PipelineConfig::default();
        assert_eq!((c.chi, c.phi, c.kappa), (0.26, 0.944, 0.232));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn kappa_equal_phi_rejected() {
        let mut c = PipelineConfig::default();
        c.set("kappa", "0.944").unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn parse_file_syntax() {
        let m = PipelineConfig::parse_str("# comment\nchi = 0.3\noutputs = [\"V0\", 'Phi3']  # trailing\n").unwrap();
        let mut c = PipelineConfig::default();
        for (k, v) in &m {
            c.set(k, v).unwrap();
        }
        assert_eq!(c.chi, 0.3);
        assert_eq!(c.outputs(), vec!["V0", "Phi3"]);
        assert!(PipelineConfig::parse_str("chi 0.3").is_err());
        assert!(PipelineConfig::parse_str("chi = 1\nchi = 2").is_err());
        assert!(c.set("colour", "red").is_err());
        assert!(c.set("chi", "abc").is_err());
    }

    #[test]
    fn check_lists() {
        assert_eq!(CheckSelection::parse("all").unwrap().ids().len(), 9);
        assert!(CheckSelection::parse("none").unwrap().ids().is_empty());
        assert_eq!(CheckSelection::parse("3,AC-1,ac-3").unwrap().ids(), vec!["AC-1", "AC-3"]);
        assert!(CheckSelection::parse("AC-10").is_err());
    }

    #[test]
    fn v4_needs_variant() {
        let mut c = PipelineConfig::default();
        assert!(!c.outputs().contains(&"V4".to_string()));
        c.outputs = Some(vec!["V4".into()]);
        assert!(c.validate().is_err());
        c.raise = Some(RaiseVariant::Direct);
        assert!(c.validate().is_ok());
        c.outputs = None;
        assert!(c.outputs().contains(&"V4".to_string()));
    }
}
