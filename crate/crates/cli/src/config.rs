//! Job configuration: JSON schema, defaults, and command-line overrides.

use serde::Deserialize;
use timekernel_core::boundary::{BoundaryConditionSpec, ShiftSpec};
use timekernel_core::distribution::DistributionBoundary;
use timekernel_core::picard::GridSpec;
use timekernel_core::potential::PolynomialPotential;
use timekernel_core::scalar::{parse_rational, Rat};

use crate::Failure;

/// Output stream format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Potential as either an explicit coefficient list
/// (`[[degree, scalar], ...]`) or a seeded random draw
/// (`{"seed": 42, "degree": 3}`).
#[derive(Debug)]
pub enum PotentialConfig {
    Explicit(PolynomialPotential),
    Random { seed: u64, degree: u32 },
}

impl PotentialConfig {
    fn build(self) -> PolynomialPotential {
        match self {
            PotentialConfig::Explicit(v) => v,
            PotentialConfig::Random { seed, degree } => PolynomialPotential::random(seed, degree),
        }
    }
}

impl<'de> Deserialize<'de> for PotentialConfig {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let value = serde_json::Value::deserialize(deserializer)?;
        match &value {
            serde_json::Value::Array(_) => serde_json::from_value(value)
                .map(PotentialConfig::Explicit)
                .map_err(DeError::custom),
            serde_json::Value::Object(_) => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct RandomWire {
                    seed: u64,
                    degree: u32,
                }
                let wire: RandomWire =
                    serde_json::from_value(value).map_err(DeError::custom)?;
                Ok(PotentialConfig::Random {
                    seed: wire.seed,
                    degree: wire.degree,
                })
            }
            _ => Err(DeError::custom(
                "potential must be a coefficient list or {\"seed\", \"degree\"}",
            )),
        }
    }
}

/// Raw configuration file contents.  Every field is optional; commands fill
/// in their own defaults.  Unknown fields are rejected so typos surface as
/// validation errors instead of silently ignored settings.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    /// Optional command echo; when present it must match the subcommand.
    pub command: Option<String>,
    pub potential: Option<PotentialConfig>,
    pub boundary: Option<BoundaryConditionSpec>,
    pub shift: Option<ShiftSpec>,
    pub distribution: Option<DistributionBoundary>,
    pub order: Option<u32>,
    pub grid: Option<GridConfig>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<u32>,
    pub mu: Option<String>,
    pub hbar: Option<String>,
    pub omega: Option<String>,
    pub k_max: Option<u32>,
    pub m_max: Option<u32>,
    pub j_max: Option<u32>,
    pub inverse_order: Option<u32>,
    pub samples: Option<SampleConfig>,
    pub format: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub u_range: Option<[String; 2]>,
    pub v_range: Option<[String; 2]>,
    pub points: Option<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub q_range: Option<[String; 2]>,
    /// Required: the sample range must exclude `p = 0` by constraining both
    /// endpoints to the same sign.
    pub p_range: [String; 2],
    pub points: Option<[usize; 2]>,
}

/// Exactly one boundary variant, or none (commands supply defaults).
#[derive(Debug, Clone)]
pub enum BoundaryChoice {
    None,
    Axis(BoundaryConditionSpec),
    Shift(ShiftSpec),
    Distribution(DistributionBoundary),
}

/// Fully resolved job: configuration merged with command-line overrides and
/// defaults, validated.
#[derive(Debug)]
pub struct Job {
    pub potential: PolynomialPotential,
    pub boundary: BoundaryChoice,
    pub order: u32,
    pub grid: GridSpec,
    pub tolerance: f64,
    pub max_iterations: u32,
    pub mu: Rat,
    pub hbar: Rat,
    pub omega: Option<Rat>,
    pub k_max: Option<u32>,
    pub m_max: Option<u32>,
    pub j_max: Option<u32>,
    pub inverse_order: Option<u32>,
    pub samples: Option<Samples>,
    pub format: Option<OutputFormat>,
}

/// Resolved rational sample lattice for `plot-data`.
#[derive(Debug)]
pub struct Samples {
    pub q_nodes: Vec<Rat>,
    pub p_nodes: Vec<Rat>,
}

/// Command-line overrides (`--order`, `--tol`, `--grid NxM`, `--format`).
#[derive(Debug, Default)]
pub struct Overrides {
    pub order: Option<u32>,
    pub tol: Option<f64>,
    pub grid: Option<(usize, usize)>,
    pub format: Option<OutputFormat>,
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure::validation(message.into())
}

fn rational_field(text: &str, field: &str) -> Result<Rat, Failure> {
    parse_rational(text).map_err(|e| invalid(format!("{field}: {e}")))
}

fn rational_range(range: &[String; 2], field: &str) -> Result<(Rat, Rat), Failure> {
    Ok((
        rational_field(&range[0], field)?,
        rational_field(&range[1], field)?,
    ))
}

/// Evenly spaced rational nodes, endpoints included.
fn rational_nodes(min: &Rat, max: &Rat, count: usize, field: &str) -> Result<Vec<Rat>, Failure> {
    if count == 0 {
        return Err(invalid(format!("{field}: sample count must be at least 1")));
    }
    if min > max {
        return Err(invalid(format!("{field}: range is reversed")));
    }
    if count == 1 {
        return Ok(vec![min.clone()]);
    }
    let step = (max - min) / Rat::from_integer((count as i64 - 1).into());
    Ok((0..count)
        .map(|i| min + &step * Rat::from_integer((i as i64).into()))
        .collect())
}

impl JobConfig {
    /// Merges the file contents with CLI overrides into a validated job.
    pub fn resolve(self, command_name: &str, overrides: &Overrides) -> Result<Job, Failure> {
        if let Some(echo) = &self.command {
            if echo != command_name {
                return Err(invalid(format!(
                    "config is for command {echo:?} but {command_name:?} was invoked"
                )));
            }
        }

        let boundary = match (self.boundary, self.shift, self.distribution) {
            (None, None, None) => BoundaryChoice::None,
            (Some(bc), None, None) => BoundaryChoice::Axis(bc),
            (None, Some(shift), None) => BoundaryChoice::Shift(shift),
            (None, None, Some(dbc)) => BoundaryChoice::Distribution(dbc),
            _ => {
                return Err(invalid(
                    "exactly one of boundary / shift / distribution may be given",
                ))
            }
        };

        let tolerance = overrides.tol.or(self.tolerance).unwrap_or(1e-10);
        if !(tolerance > 0.0) {
            return Err(invalid(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }

        let mu = match &self.mu {
            Some(text) => rational_field(text, "mu")?,
            None => Rat::from_integer(1.into()),
        };
        let hbar = match &self.hbar {
            Some(text) => rational_field(text, "hbar")?,
            None => Rat::from_integer(1.into()),
        };
        use num_traits::Zero;
        if mu.is_zero() || hbar.is_zero() {
            return Err(invalid("mu and hbar must be nonzero"));
        }
        let omega = match &self.omega {
            Some(text) => Some(rational_field(text, "omega")?),
            None => None,
        };

        let (u_range, v_range, config_points) = match &self.grid {
            Some(grid) => {
                let u = match &grid.u_range {
                    Some(range) => rational_range(range, "grid.u_range")?,
                    None => (rat_int(-1), rat_int(1)),
                };
                let v = match &grid.v_range {
                    Some(range) => rational_range(range, "grid.v_range")?,
                    None => (rat_int(-1), rat_int(1)),
                };
                (u, v, grid.points)
            }
            None => (
                (rat_int(-1), rat_int(1)),
                (rat_int(-1), rat_int(1)),
                None,
            ),
        };
        let (nu, nv) = overrides
            .grid
            .or(config_points.map(|p| (p[0], p[1])))
            .unwrap_or((101, 101));
        let grid = GridSpec::new(u_range, v_range, nu, nv)
            .map_err(|e| invalid(format!("grid: {e}")))?;

        let samples = match &self.samples {
            Some(sample) => {
                let (q_min, q_max) = match &sample.q_range {
                    Some(range) => rational_range(range, "samples.q_range")?,
                    None => (rat_int(-1), rat_int(1)),
                };
                let (p_min, p_max) = rational_range(&sample.p_range, "samples.p_range")?;
                let zero = Rat::from_integer(0.into());
                let positive = p_min > zero && p_max > zero;
                let negative = p_min < zero && p_max < zero;
                if !(positive || negative) {
                    return Err(invalid(
                        "samples.p_range must keep a positive margin from p = 0 \
                         (both endpoints strictly the same sign)",
                    ));
                }
                let [nq, np] = sample.points.unwrap_or([11, 11]);
                Some(Samples {
                    q_nodes: rational_nodes(&q_min, &q_max, nq, "samples.q_range")?,
                    p_nodes: rational_nodes(&p_min, &p_max, np, "samples.p_range")?,
                })
            }
            None => None,
        };

        let format = match (&overrides.format, &self.format) {
            (Some(flag), _) => Some(*flag),
            (None, Some(text)) => Some(match text.as_str() {
                "json" => OutputFormat::Json,
                "csv" => OutputFormat::Csv,
                other => {
                    return Err(invalid(format!(
                        "format must be \"json\" or \"csv\", got {other:?}"
                    )))
                }
            }),
            (None, None) => None,
        };

        Ok(Job {
            potential: self
                .potential
                .map(PotentialConfig::build)
                .unwrap_or_else(PolynomialPotential::free),
            boundary,
            order: overrides.order.or(self.order).unwrap_or(12),
            grid,
            tolerance,
            max_iterations: self.max_iterations.unwrap_or(64),
            mu,
            hbar,
            omega,
            k_max: self.k_max,
            m_max: self.m_max,
            j_max: self.j_max,
            inverse_order: self.inverse_order,
            samples,
            format,
        })
    }
}

fn rat_int(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Parses an `NxM` grid override such as `201x201`.
pub fn parse_grid_override(text: &str) -> Result<(usize, usize), Failure> {
    let mut parts = text.split('x');
    let bad = || invalid(format!("--grid expects NxM (e.g. 201x201), got {text:?}"));
    let nu = parts
        .next()
        .and_then(|p| p.parse::<usize>().ok())
        .ok_or_else(bad)?;
    let nv = parts
        .next()
        .and_then(|p| p.parse::<usize>().ok())
        .ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((nu, nv))
}

/// Loads and parses the config file; parse errors carry serde_json's
/// line/column diagnostics.
pub fn load_config(path: Option<&std::path::Path>) -> Result<JobConfig, Failure> {
    let Some(path) = path else {
        return Ok(JobConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::validation(format!(
            "config {} is not valid: {e} (line {}, column {})",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}
