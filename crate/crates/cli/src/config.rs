//! TOML run configuration and its merge with command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tetron_core::channels::{derive_noise, NoiseParams, PhysicalParams};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub p_a: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub theta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbqbSection {
    pub exact: Option<bool>,
    /// Measurements in the sampled sequence.
    pub shots: Option<u64>,
    pub batches: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BraidSection {
    pub class: Option<String>,
    pub p2: Option<f64>,
    pub p1_max: Option<f64>,
    pub pa_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QedSection {
    pub p_a: Option<f64>,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub points: Option<usize>,
    pub rounds: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeSection {
    pub basis: Option<String>,
    pub lengths: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TgateSection {
    pub deltas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub noise: Option<NoiseSection>,
    pub physical: Option<PhysicalParams>,
    pub mbqb: Option<MbqbSection>,
    pub braid: Option<BraidSection>,
    pub qed: Option<QedSection>,
    pub lifetime: Option<LifetimeSection>,
    pub tgate: Option<TgateSection>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        FileConfig::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<FileConfig, CliError> {
        // toml reports line and column in its message.
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }
}

/// Splits `key=value`.
pub fn key_value(s: &str) -> Result<(String, f64), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected KEY=VALUE, got {s:?}")))?;
    let value: f64 = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad number {:?} for {}", v.trim(), k.trim())))?;
    Ok((k.trim().to_string(), value))
}

/// Physical parameters from `key=value` pairs, checked against the field
/// names of [`PhysicalParams`].
/// Maps the short spellings of device keys onto the names used in files.
fn canonical_physical_key(k: &str) -> &str {
    match k {
        "delta_over_kt" => "delta_over_kT",
        "l_over_xi" => "L_over_xi",
        "delta_ev" => "delta_eV",
        "tau_elph" => "tau_elph_s",
        "tau_meas" => "tau_meas_s",
        "eps_mst" => "eps_mst_eV",
        "eps_res" => "eps_res_eV",
        other => other,
    }
}

pub fn physical_from_pairs(base: Option<PhysicalParams>, pairs: &[String]) -> Result<Option<PhysicalParams>, CliError> {
    if pairs.is_empty() {
        return Ok(base);
    }
    let mut table = match base {
        Some(p) => toml::Table::try_from(p).map_err(|e| CliError::Config(e.to_string()))?,
        None => toml::Table::new(),
    };
    for p in pairs {
        let (k, v) = key_value(p)?;
        table.insert(canonical_physical_key(&k).to_string(), toml::Value::Float(v));
    }
    let phys: PhysicalParams = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("physical parameters: {}", e.message())))?;
    Ok(Some(phys))
}

/// The noise actually used and where it came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedNoise {
    pub noise: NoiseParams,
    /// Set when the rates were derived from device parameters.
    pub physical: Option<PhysicalParams>,
    pub derived: Option<NoiseParams>,
}

/// `[physical]` (derived) or `[noise]` first, explicit `[noise]` keys over
/// derived ones, then `--noise` overrides.
pub fn resolve_noise(file: &FileConfig, physical: Option<PhysicalParams>, overrides: &[String]) -> Result<ResolvedNoise, CliError> {
    let derived = match &physical {
        Some(p) => Some(derive_noise(p).map_err(CliError::from_core)?),
        None => None,
    };
    let mut noise = derived.unwrap_or_default();
    if let Some(n) = &file.noise {
        for (k, v) in [("p_a", n.p_a), ("p1", n.p1), ("p2", n.p2), ("theta", n.theta)] {
            if let Some(v) = v {
                noise.set(k, v).map_err(CliError::from_core)?;
            }
        }
    }
    for o in overrides {
        let (k, v) = key_value(o)?;
        noise.set(&k, v).map_err(|e| CliError::Config(format!("--noise {o}: {e}")))?;
    }
    noise.validate().map_err(|e| CliError::Config(format!("noise: {e}")))?;
    Ok(ResolvedNoise { noise, physical, derived })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_name_the_line() {
        let err = FileConfig::parse("seed = 3\n[noise]\np_a = \"x\"\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = FileConfig::parse("seed = 3\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn overrides_apply_in_order() {
        let f = FileConfig::parse("[noise]\np_a = 0.1\np1 = 0.2\n").unwrap();
        let r = resolve_noise(&f, None, &["p1=0.05".into()]).unwrap();
        assert_eq!(r.noise, NoiseParams::new(0.1, 0.05, 0.0, 0.0).unwrap());
        assert!(resolve_noise(&f, None, &["q=1".into()]).is_err());
        assert!(resolve_noise(&f, None, &["p_a=0.7".into()]).is_err());
    }

    #[test]
    fn physical_section_is_derived_and_echoed() {
        let f = FileConfig::parse(
            "[physical]\nsnr = 3.7\ndelta_over_kt = 12.0\nl_over_xi = 20.0\ndelta_ev = 50e-6\ntau_elph = 50e-9\ntau_meas = 1e-6\n",
        )
        .unwrap();
        let r = resolve_noise(&f, f.physical, &[]).unwrap();
        assert_eq!(r.derived, Some(r.noise));
        assert!((r.noise.p_a - 1.08e-4).abs() < 1e-6);
        let phys = physical_from_pairs(f.physical, &["snr=5".into(), "tau_meas=2e-6".into(), "tau_meas_s=3e-6".into()])
            .unwrap()
            .unwrap();
        assert_eq!(phys.snr, Some(5.0));
        assert_eq!(phys.tau_meas, Some(3e-6));
        assert!(physical_from_pairs(None, &["nope=1".into()]).is_err());
    }
}
