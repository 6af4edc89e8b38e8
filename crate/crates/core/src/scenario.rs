//! Scenario files: TOML with every section optional and unknown keys rejected.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::access::EpsilonMode;
use crate::coverage::EulerParams;
use crate::error::{Result, UdnError};
use crate::metrics::PowerParams;
use crate::mobility::{HotSpot, MobilityConfig};

/// RNG stream reserved for the hot-spot generator.
const GENERATOR_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_zeta")]
    zeta: f64,
    region: Option<Region>,
    generator: Option<Generator>,
    #[serde(default)]
    hot_spots: Vec<RawHotSpot>,
    #[serde(default)]
    radio: RadioDefaults,
    #[serde(default)]
    channel: ChannelDefaults,
    #[serde(default)]
    power: PowerParams,
    #[serde(default)]
    euler: EulerParams,
    #[serde(default)]
    deployment: RawDeployment,
    #[serde(default)]
    access: AccessOptions,
}

fn default_zeta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub width_km: f64,
    pub height_km: f64,
}

impl Default for Region {
    fn default() -> Self {
        Region { width_km: 10.0, height_km: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub n_p: usize,
    #[serde(default = "default_mass")]
    pub mass_mean: f64,
    #[serde(default = "default_radius")]
    pub radius_km: f64,
}

fn default_mass() -> f64 {
    3000.0
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHotSpot {
    center: [f64; 2],
    #[serde(default = "default_radius")]
    radius: f64,
    attraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioDefaults {
    pub alpha_p: f64,
    pub rho0: f64,
    pub eta: f64,
    pub gamma0: f64,
}

impl Default for RadioDefaults {
    fn default() -> Self {
        RadioDefaults { alpha_p: 4.0, rho0: 100.0, eta: 1.0, gamma0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelDefaults {
    pub c: usize,
    pub p_s: f64,
    pub mu_s: f64,
}

impl Default for ChannelDefaults {
    fn default() -> Self {
        ChannelDefaults { c: 10, p_s: 0.01, mu_s: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct AccessOptions {
    pub epsilon_mode: EpsilonMode,
    /// Overrides the coverage fixed point with a fixed interferer count.
    pub force_n_int: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDeployment {
    strategy: Option<String>,
    total_sbs: Option<usize>,
    per_spot: Option<Vec<usize>>,
    theta: Option<ThetaValue>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ThetaValue {
    One(f64),
    Many(Vec<f64>),
}

/// How SBSs are assigned to hot spots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DeploymentSpec {
    Uds { total_sbs: usize },
    Rds { total_sbs: usize },
    Explicit(Vec<usize>),
    /// Per-spot ratio of stationary users to SBSs.
    Theta(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub seed: u64,
    pub mobility: MobilityConfig,
    pub radio: RadioDefaults,
    pub channel: ChannelDefaults,
    pub power: PowerParams,
    pub euler: EulerParams,
    pub deployment: DeploymentSpec,
    pub access: AccessOptions,
}

impl Scenario {
    pub fn n_p(&self) -> usize {
        self.mobility.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.mobility.validate()?;
        let r = &self.radio;
        let probe = crate::coverage::RadioParams {
            alpha_p: r.alpha_p,
            rho0: r.rho0,
            eta: r.eta,
            gamma0: r.gamma0,
            l_i: 1.0,
            n_sbs: 1,
        };
        probe.validate()?;
        crate::access::ChannelParams::new(self.channel.c, self.channel.p_s, self.channel.mu_s, 0.0, 0.5)
            .validate()?;
        self.power.validate()?;
        self.euler.validate()?;
        match &self.deployment {
            DeploymentSpec::Uds { total_sbs } | DeploymentSpec::Rds { total_sbs } => {
                if *total_sbs < self.n_p() {
                    return Err(UdnError::input(format!(
                        "deployment.total_sbs ({total_sbs}) is smaller than the number of hot spots ({})",
                        self.n_p()
                    )));
                }
            }
            DeploymentSpec::Explicit(v) => {
                if v.len() != self.n_p() || v.contains(&0) {
                    return Err(UdnError::input(
                        "deployment.per_spot needs one positive entry per hot spot",
                    ));
                }
            }
            DeploymentSpec::Theta(t) => {
                if t.len() != self.n_p() || t.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(UdnError::input("deployment.theta needs positive values"));
                }
            }
        }
        if let Some(n) = self.access.force_n_int {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(UdnError::input(format!("access.force_n_int must be nonnegative, got {n}")));
            }
        }
        Ok(())
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    load_scenario_seeded(path, None)
}

/// Loads a scenario, replacing its seed before any generator runs.
pub fn load_scenario_seeded(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UdnError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario_seeded(&text, seed)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_seeded(text, None)
}

pub fn parse_scenario_seeded(text: &str, seed: Option<u64>) -> Result<Scenario> {
    let mut raw: RawScenario = toml::from_str(text).map_err(|e| UdnError::Parse(e.to_string()))?;
    if let Some(seed) = seed {
        raw.seed = seed;
    }
    resolve(raw)
}

fn resolve(raw: RawScenario) -> Result<Scenario> {
    if !(raw.zeta > 0.0 && raw.zeta < 1.0) {
        return Err(UdnError::input(format!("zeta must lie in (0, 1), got {}", raw.zeta)));
    }
    let hot_spots = match (&raw.generator, raw.hot_spots.is_empty()) {
        (Some(_), false) => {
            return Err(UdnError::input("give either [generator] or [[hot_spots]], not both"));
        }
        (Some(g), true) => generate_hot_spots(g, &raw.region.clone().unwrap_or_default(), raw.seed)?,
        (None, false) => raw
            .hot_spots
            .iter()
            .enumerate()
            .map(|(k, h)| HotSpot { id: k + 1, center: h.center, radius: h.radius, attraction: h.attraction })
            .collect(),
        (None, true) => return Err(UdnError::input("scenario defines no hot spots")),
    };
    let n_p = hot_spots.len();
    let mobility = MobilityConfig::new(raw.zeta, hot_spots)?;
    let deployment = resolve_deployment(&raw.deployment, n_p)?;
    let sc = Scenario {
        seed: raw.seed,
        mobility,
        radio: raw.radio,
        channel: raw.channel,
        power: raw.power,
        euler: raw.euler,
        deployment,
        access: raw.access,
    };
    sc.validate()?;
    Ok(sc)
}

fn resolve_deployment(d: &RawDeployment, n_p: usize) -> Result<DeploymentSpec> {
    let strategy = d.strategy.as_deref().unwrap_or(if d.theta.is_some() {
        "theta"
    } else if d.per_spot.is_some() {
        "explicit"
    } else {
        "theta"
    });
    let total = || {
        d.total_sbs
            .ok_or_else(|| UdnError::input(format!("deployment strategy `{strategy}` needs total_sbs")))
    };
    Ok(match strategy {
        "uds" => DeploymentSpec::Uds { total_sbs: total()? },
        "rds" => DeploymentSpec::Rds { total_sbs: total()? },
        "explicit" => DeploymentSpec::Explicit(
            d.per_spot.clone().ok_or_else(|| UdnError::input("explicit deployment needs per_spot"))?,
        ),
        "theta" => DeploymentSpec::Theta(match &d.theta {
            None => vec![15.0; n_p],
            Some(ThetaValue::One(t)) => vec![*t; n_p],
            Some(ThetaValue::Many(v)) => v.clone(),
        }),
        other => {
            return Err(UdnError::input(format!(
                "unknown deployment strategy `{other}` (expected uds, rds, explicit or theta)"
            )))
        }
    })
}

/// Uniform centers in the region and Poisson masses, reproducible from `seed`.
pub fn generate_hot_spots(g: &Generator, region: &Region, seed: u64) -> Result<Vec<HotSpot>> {
    if g.n_p == 0 {
        return Err(UdnError::input("generator.n_p must be at least 1"));
    }
    if !(region.width_km > 0.0 && region.height_km > 0.0) {
        return Err(UdnError::input("region dimensions must be positive"));
    }
    let masses = Poisson::new(g.mass_mean)
        .map_err(|e| UdnError::input(format!("generator.mass_mean is invalid: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GENERATOR_STREAM);
    Ok((1..=g.n_p)
        .map(|id| {
            let center = [rng.random::<f64>() * region.width_km, rng.random::<f64>() * region.height_km];
            let attraction = masses.sample(&mut rng).max(1.0);
            HotSpot { id, center, radius: g.radius_km, attraction }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[hot_spots]]
center = [0.0, 0.0]
attraction = 3000
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let sc = parse_scenario(MINIMAL).unwrap();
        assert_eq!(sc.n_p(), 1);
        assert_eq!(sc.mobility.zeta, 0.1);
        assert_eq!(sc.mobility.hot_spots[0].radius, 1.0);
        assert_eq!(sc.radio, RadioDefaults::default());
        assert_eq!(sc.channel.c, 10);
        assert_eq!(sc.power, PowerParams::default());
        assert_eq!(sc.euler, EulerParams::default());
        assert_eq!(sc.deployment, DeploymentSpec::Theta(vec![15.0]));
    }

    #[test]
    fn bad_zeta_is_named() {
        let err = parse_scenario(&format!("zeta = 1.5\n{MINIMAL}")).unwrap_err();
        assert!(err.to_string().contains("zeta"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_scenario(&format!("zetta = 0.1\n{MINIMAL}")).unwrap_err();
        assert!(matches!(err, UdnError::Parse(_)));
        let err = parse_scenario(&format!("{MINIMAL}\n[radio]\nalpha = 4.0\n")).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_scenario("seed = \n").unwrap_err();
        assert!(err.to_string().contains("line 1") || err.to_string().contains("1:"), "{err}");
    }

    #[test]
    fn generator_is_deterministic() {
        let text = "seed = 7\n[generator]\nn_p = 50\n";
        let a = parse_scenario(text).unwrap();
        let b = parse_scenario(text).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_p(), 50);
        let mean = a.mobility.hot_spots.iter().map(|h| h.attraction).sum::<f64>() / 50.0;
        assert!((mean - 3000.0).abs() < 50.0);
        assert!(a.mobility.hot_spots.iter().all(|h| (0.0..=10.0).contains(&h.center[0])));
        let c = parse_scenario("seed = 8\n[generator]\nn_p = 50\n").unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn deployment_forms() {
        let sc = parse_scenario(&format!("{MINIMAL}\n[deployment]\nstrategy = \"uds\"\ntotal_sbs = 5\n")).unwrap();
        assert_eq!(sc.deployment, DeploymentSpec::Uds { total_sbs: 5 });
        let sc = parse_scenario(&format!("{MINIMAL}\n[deployment]\ntheta = 20.0\n")).unwrap();
        assert_eq!(sc.deployment, DeploymentSpec::Theta(vec![20.0]));
        let sc = parse_scenario(&format!("{MINIMAL}\n[deployment]\nper_spot = [4]\n")).unwrap();
        assert_eq!(sc.deployment, DeploymentSpec::Explicit(vec![4]));
        assert!(parse_scenario(&format!("{MINIMAL}\n[deployment]\nstrategy = \"rds\"\n")).is_err());
        assert!(parse_scenario(&format!("{MINIMAL}\n[deployment]\nstrategy = \"best\"\n")).is_err());
    }

    #[test]
    fn generator_and_list_are_exclusive() {
        assert!(parse_scenario(&format!("[generator]\nn_p = 3\n{MINIMAL}")).is_err());
        assert!(parse_scenario("seed = 1\n").is_err());
    }
}
