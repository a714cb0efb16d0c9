//! Run configuration, field specifications and output manifests.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::random_forcing::NoiseModel;
use crate::solver::{IntegratorConfig, Solver};
use crate::spectral::{FieldRecord, SobolevIndex, SpectralField, TorusGrid};
use crate::synthesis::PlannerConfig;

/// Everything a run depends on. Loaded from one TOML document; every key is
/// optional.
///
/// ```toml
/// cutoff = 8          # Fourier cutoff K
/// n_points = 32       # collocation points, default 4K
/// workers = 4         # ensemble worker threads
/// seed = 0            # base seed for noise and sampled initial states
/// sobolev_index = 1.0 # s in the hitting-time norm
/// output_dir = "out"
///
/// [integrator]        # dt_max, cfl, self_check_tol, record_stride
/// [planner]           # delta_start, max_halvings, projection_share, ...
/// [noise]             # period, truncation, b0, basis
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cutoff: usize,
    pub n_points: Option<usize>,
    pub workers: usize,
    pub seed: u64,
    pub sobolev_index: f64,
    /// Where the files go. Left out of the config hash so that the same
    /// experiment written to two places hashes the same.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub integrator: IntegratorConfig,
    pub planner: PlannerConfig,
    pub noise: NoiseModel,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cutoff: 8,
            n_points: None,
            workers: 4,
            seed: 0,
            sobolev_index: 1.0,
            output_dir: PathBuf::from("out"),
            integrator: IntegratorConfig::default(),
            planner: PlannerConfig::default(),
            noise: NoiseModel::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            message: e.to_string(),
            segment: None,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.integrator.validate()?;
        self.planner_config().validate()?;
        self.noise.validate()?;
        SobolevIndex::new(self.sobolev_index)?;
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        match self.n_points {
            Some(n) => TorusGrid::with_points(self.cutoff, n),
            None => TorusGrid::new(self.cutoff),
        }
    }

    pub fn solver(&self) -> Result<Solver> {
        Solver::new(self.integrator)
    }

    /// Planner settings driving the same integrator as every other command.
    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            integrator: self.integrator,
            ..self.planner
        }
    }

    pub fn sobolev(&self) -> Result<SobolevIndex> {
        SobolevIndex::new(self.sobolev_index)
    }

    /// SHA-256 of the serialized config, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Reproducibility record written next to every output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub inputs: serde_json::Value,
    /// Seconds since the Unix epoch at the end of the run.
    pub timestamp: u64,
    pub wall_clock_seconds: f64,
}

impl Manifest {
    pub fn new(
        command: &str,
        cfg: &RunConfig,
        inputs: serde_json::Value,
        wall_clock_seconds: f64,
    ) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            config: cfg.clone(),
            inputs,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_clock_seconds,
        }
    }

    /// The manifest minus its clock readings, safe to embed in files that
    /// must be byte-identical across reruns.
    pub fn provenance(&self) -> serde_json::Value {
        serde_json::json!({
            "command": self.command,
            "version": self.version,
            "config_hash": self.config_hash,
            "inputs": self.inputs,
        })
    }
}

/// Parse a field such as `0.3 sin x - 0.1 cos 2x + sin(3x)` on `grid`.
///
/// `0` is the zero field. An input starting with `@` names a JSON
/// [`FieldRecord`] file, which is resampled onto `grid`.
pub fn parse_field(text: &str, grid: TorusGrid) -> Result<SpectralField> {
    let bad = |message: String| Error::Parse {
        message,
        segment: None,
    };
    if let Some(path) = text.trim().strip_prefix('@') {
        let record: FieldRecord = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let field = SpectralField::try_from(record)?;
        return Ok(field.regrid(grid));
    }
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() || compact.parse::<f64>() == Ok(0.0) {
        return Ok(SpectralField::zeros(grid));
    }
    let mut terms = Vec::new();
    for term in split_terms(&compact) {
        let (pos, is_sin) = match (term.find("sin"), term.find("cos")) {
            (Some(p), None) => (p, true),
            (None, Some(p)) => (p, false),
            _ => return Err(bad(format!("term `{term}` needs exactly one of sin, cos"))),
        };
        let coef = match term[..pos].trim_end_matches('*') {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c
                .parse::<f64>()
                .map_err(|_| bad(format!("bad coefficient `{c}` in `{term}`")))?,
        };
        let arg = term[pos + 3..]
            .trim_start_matches(['(', '*'])
            .trim_end_matches(')');
        let k = match arg.strip_suffix('x').map(|m| m.trim_end_matches('*')) {
            Some("") => 1,
            Some(m) => m
                .parse::<usize>()
                .map_err(|_| bad(format!("bad wavenumber in `{term}`")))?,
            None => return Err(bad(format!("argument of `{term}` must end in x"))),
        };
        if k == 0 || k > grid.cutoff() {
            return Err(bad(format!("wavenumber {k} outside 1..={}", grid.cutoff())));
        }
        terms.push(if is_sin {
            (k, coef, 0.0)
        } else {
            (k, 0.0, coef)
        });
    }
    Ok(SpectralField::trig(grid, &terms))
}

/// Split at top-level signs, leaving exponents like `1e-3` intact.
fn split_terms(s: &str) -> Vec<&str> {
    let bytes = s.as_bytes();
    let mut cuts = vec![0];
    for i in 1..bytes.len() {
        let sign = bytes[i] == b'+' || bytes[i] == b'-';
        let exponent =
            matches!(bytes[i - 1], b'e' | b'E') && i >= 2 && bytes[i - 2].is_ascii_digit();
        if sign && !exponent && bytes[i - 1] != b'(' {
            cuts.push(i);
        }
    }
    cuts.push(bytes.len());
    cuts.windows(2)
        .map(|w| &s[w[0]..w[1]])
        .filter(|t| !t.is_empty() && *t != "+")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TorusGrid {
        TorusGrid::new(8).unwrap()
    }

    #[test]
    fn field_specs() {
        let g = grid();
        let f = parse_field("0.3 sin x - 0.1 cos 2x + sin(3x)", g).unwrap();
        let expected = SpectralField::trig(g, &[(1, 0.3, 0.0), (2, 0.0, -0.1), (3, 1.0, 0.0)]);
        assert!(f.distance(&expected) < 1e-15);
        assert_eq!(parse_field("0", g).unwrap(), SpectralField::zeros(g));
        let f = parse_field("-2.5e-1*cos*4x", g).unwrap();
        assert!(f.distance(&SpectralField::cos(g, 4, -0.25)) < 1e-15);
        assert!(parse_field("sin 9x", g).is_err());
        assert!(parse_field("0.3 tan x", g).is_err());
        assert!(parse_field("sin y", g).is_err());
    }

    #[test]
    fn field_record_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.json");
        let f = SpectralField::trig(TorusGrid::new(16).unwrap(), &[(2, 0.5, 0.25)]);
        std::fs::write(&path, serde_json::to_string(&FieldRecord::from(f)).unwrap()).unwrap();
        let g = parse_field(&format!("@{}", path.display()), grid()).unwrap();
        assert!(g.distance(&SpectralField::trig(grid(), &[(2, 0.5, 0.25)])) < 1e-15);
    }

    #[test]
    fn config_round_trip_and_hash() {
        let cfg =
            RunConfig::from_toml("cutoff = 16\n[noise]\nb0 = 0.25\n[planner]\nmax_rounds = 3\n")
                .unwrap();
        assert_eq!(cfg.cutoff, 16);
        assert_eq!(cfg.noise.b0, 0.25);
        assert_eq!(cfg.noise.truncation, 16);
        assert_eq!(cfg.planner.max_rounds, 3);
        let mut back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        back.output_dir = PathBuf::from("elsewhere");
        assert_eq!(back.hash(), cfg.hash());
        back.seed = 1;
        assert_ne!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            RunConfig::from_toml("cutof = 8"),
            Err(Error::Parse { .. })
        ));
        assert!(RunConfig::from_toml("workers = 0").is_err());
        assert!(RunConfig::from_toml("[noise]\nb0 = 0.0").is_err());
        assert!(RunConfig::from_toml("sobolev_index = 2.0").is_err());
    }
}
