//! Run configuration. One JSON document drives every subcommand; command
//! line flags override individual fields. Unknown keys are rejected so a
//! typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use modeconv::constants::ConstantsParams;
use modeconv::geometry::LigamentSpec;
use modeconv::mesh::MeshParams;
use modeconv::optimize::{RangeSpec, Targets};
use modeconv::scattering::{SymmetryBc, DEFAULT_DTN_TERMS};
use modeconv::{Error, Result};

/// Frequency band with exactly two propagating modes.
pub const OMEGA_BAND: (f64, f64) = (std::f64::consts::PI, 2.0 * std::f64::consts::PI);

/// The literal word `"auto"` in the ligament field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

/// Ligament placement: the design recipe, or two explicit attachments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ligaments {
    Auto(AutoTag),
    Explicit {
        minus: LigamentSpec,
        plus: LigamentSpec,
    },
}

/// Symmetry condition selecting one half-domain problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AbcChoice {
    Neumann,
    Dirichlet,
}

impl From<AbcChoice> for SymmetryBc {
    fn from(choice: AbcChoice) -> Self {
        match choice {
            AbcChoice::Neumann => SymmetryBc::Neumann,
            AbcChoice::Dirichlet => SymmetryBc::Dirichlet,
        }
    }
}

/// Cost-function target convention, mirroring [`Targets`] for the flag
/// parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetChoice {
    Antidiagonal,
    Identity,
}

impl From<TargetChoice> for Targets {
    fn from(choice: TargetChoice) -> Self {
        match choice {
            TargetChoice::Antidiagonal => Targets::Antidiagonal,
            TargetChoice::Identity => Targets::Identity,
        }
    }
}

/// Length-sweep controls; ranges default to a band around the corrected
/// lengths.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// Points per grid axis.
    pub grid_points: usize,
    /// Half-width of each default range, in units of the ligament width.
    pub halfwidth_factor: f64,
    /// Explicit range overrides; `None` centers on the corrected lengths.
    pub range_minus: Option<RangeSpec>,
    pub range_plus: Option<RangeSpec>,
    /// Polish the grid argmin by golden-section descent.
    pub refine: bool,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            grid_points: 41,
            halfwidth_factor: 5.0,
            range_minus: None,
            range_plus: None,
            refine: true,
        }
    }
}

/// Everything a run needs, with working defaults for the tuned
/// two-ligament converter at `omega = 3 pi / 2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Angular frequency; the two-mode band is `(pi, 2 pi)`.
    pub omega: f64,
    /// Ligament width.
    pub epsilon: f64,
    /// Resonance orders of the upper and lower ligament.
    pub m_minus: u32,
    pub m_plus: u32,
    /// Modal terms in the radiation boundary condition; how many of them
    /// propagate is fixed by `omega`.
    pub dtn_terms: usize,
    /// Truncation abscissa of the computational channel.
    pub truncation: f64,
    pub mesh: MeshParams,
    pub ligaments: Ligaments,
    /// When set, `solve` runs the one half-domain problem with this
    /// symmetry condition instead of the mirrored domain.
    pub abc: Option<AbcChoice>,
    pub targets: Targets,
    pub constants: ConstantsParams,
    pub sweep: SweepSettings,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega: 1.5 * std::f64::consts::PI,
            epsilon: 0.01,
            m_minus: 1,
            m_plus: 2,
            dtn_terms: DEFAULT_DTN_TERMS,
            truncation: 1.5,
            mesh: MeshParams::default(),
            ligaments: Ligaments::Auto(AutoTag::Auto),
            abc: None,
            targets: Targets::Antidiagonal,
            constants: ConstantsParams::default(),
            sweep: SweepSettings::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Reads a configuration file; no path means the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }

    /// Rejects non-physical parameters before any expensive work starts.
    pub fn validate(&self, override_range: bool) -> Result<()> {
        let positives = [
            ("omega", self.omega),
            ("mesh.h", self.mesh.h),
            ("truncation", self.truncation),
            ("sweep.halfwidth_factor", self.sweep.halfwidth_factor),
        ];
        for (name, value) in positives {
            if !(value > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        if self.dtn_terms == 0 {
            return Err(Error::Config(
                "dtn_terms must include at least the propagating modes".into(),
            ));
        }
        if self.sweep.grid_points < 2 {
            return Err(Error::Config(format!(
                "sweep.grid_points must be at least 2, got {}",
                self.sweep.grid_points
            )));
        }
        if let Ligaments::Explicit { minus, plus } = &self.ligaments {
            for (name, lig) in [("minus", minus), ("plus", plus)] {
                if !(lig.width > 0.0) || !(lig.length > 0.0) {
                    return Err(Error::Config(format!(
                        "ligament {name} needs positive width and length"
                    )));
                }
                if !(lig.y_attach > 0.0 && lig.y_attach < 1.0) {
                    return Err(Error::Config(format!(
                        "ligament {name} attachment {} outside (0, 1)",
                        lig.y_attach
                    )));
                }
            }
        }
        if !override_range && !(self.omega > OMEGA_BAND.0 && self.omega < OMEGA_BAND.1) {
            return Err(Error::Config(format!(
                "omega = {} is outside the two-mode band ({}, {}); \
                 pass --override-range to proceed anyway",
                self.omega, OMEGA_BAND.0, OMEGA_BAND.1
            )));
        }
        Ok(())
    }
}

/// Parses a `start:stop:count,start:stop:count` grid override.
pub fn parse_grid(text: &str) -> Result<(RangeSpec, RangeSpec)> {
    let parts: Vec<&str> = text.split(',').collect();
    let [minus, plus] = parts[..] else {
        return Err(Error::Config(format!(
            "grid must be 'a:b:n,c:d:m' (one range per ligament), got '{text}'"
        )));
    };
    Ok((parse_range(minus)?, parse_range(plus)?))
}

fn parse_range(text: &str) -> Result<RangeSpec> {
    let fields: Vec<&str> = text.split(':').collect();
    let [start, stop, count] = fields[..] else {
        return Err(Error::Config(format!(
            "range must be 'start:stop:count', got '{text}'"
        )));
    };
    let parse_f = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("bad number '{s}' in range '{text}': {e}")))
    };
    let range = RangeSpec {
        start: parse_f(start)?,
        stop: parse_f(stop)?,
        count: count
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Config(format!("bad count '{count}' in range '{text}': {e}")))?,
    };
    range.values()?;
    Ok(range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let config = RunConfig::default();
        config.validate(false).unwrap();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.omega, config.omega);
        assert!(matches!(back.ligaments, Ligaments::Auto(_)));
        assert!(text.contains("\"auto\""));
    }

    #[test]
    fn explicit_ligaments_parse_from_plain_objects() {
        let text = r#"{
            "ligaments": {
                "minus": {"y_attach": 0.7, "length": 1.0, "width": 0.01, "bend": "Up"},
                "plus": {"y_attach": 0.3, "length": 1.3, "width": 0.01, "bend": "Down"}
            }
        }"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        let Ligaments::Explicit { minus, plus } = config.ligaments else {
            panic!("expected explicit ligaments");
        };
        assert_eq!(minus.y_attach, 0.7);
        assert_eq!(plus.length, 1.3);
        config.validate(false).unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_ranges_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"omegaa": 4.0}"#).is_err());
        let mut config = RunConfig::default();
        config.omega = 2.5 * std::f64::consts::PI;
        assert!(config.validate(false).is_err());
        config.validate(true).unwrap();
        config.omega = -1.0;
        assert!(config.validate(true).is_err());
    }

    #[test]
    fn grid_override_parses_two_ranges() {
        let (minus, plus) = parse_grid("0.9:1.0:11, 1.30:1.34:5").unwrap();
        assert_eq!(minus.count, 11);
        assert_eq!(plus.start, 1.30);
        assert!(parse_grid("0.9:1.0:11").is_err());
        assert!(parse_grid("1:0:3,1:2:3").is_err());
        assert!(parse_grid("a:b:c,d:e:f").is_err());
    }
}
