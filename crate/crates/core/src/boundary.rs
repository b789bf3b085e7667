//! Axis data for the Goursat problem of the time kernel equation.
//!
//! A solution is pinned down by its values on the two axes:
//!
//! ```text
//! T(u, 0) = slope * u + c        slope in {1/4, 0}
//! T(0, v) = g(v) + c             g(v) = sum_{k >= 1} beta_k v^k
//! ```
//!
//! Slope `1/4` produces kernels conjugate to the Hamiltonian (time-of-arrival
//! solutions); slope `0` produces commutant solutions that can be
//! superposed on top.  The shorthand [`ShiftSpec`] describes the
//! inverse-Hamiltonian shift `beta H^(-N)`, whose kernel sits on top of the
//! time-of-arrival boundary with the single monomial
//!
//! ```text
//! g(v) = -i^(2N-1) * beta * mu^(-2(N-1)) * v^(2N-1).
//! ```

use crate::scalar::{parse_rational, rational_string, GaussianRational, GradedScalar, Rat};
use crate::{Error, Result};
use num_traits::Zero;
use serde::de::{Deserializer, Error as DeError};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Slope of the diagonal axis `T(u, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalSlope {
    /// `T(u, 0) = u/4 + c`: canonical conjugacy normalization.
    Conjugate,
    /// `T(u, 0) = c`: commutant-only solution.
    Commutant,
}

impl DiagonalSlope {
    pub fn value(&self) -> Rat {
        match self {
            DiagonalSlope::Conjugate => Rat::new(1.into(), 4.into()),
            DiagonalSlope::Commutant => Rat::zero(),
        }
    }
}

/// Boundary data `(slope, c, g)` for the analytic Goursat problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryConditionSpec {
    slope: DiagonalSlope,
    c: GradedScalar,
    g: BTreeMap<u32, GradedScalar>,
}

impl BoundaryConditionSpec {
    /// Builds boundary data.  `g` entries are keyed by the power `k >= 1`
    /// (the value of `g` at 0 is always 0; the shared constant is `c`).
    pub fn new<I: IntoIterator<Item = (u32, GradedScalar)>>(
        slope: DiagonalSlope,
        c: GradedScalar,
        g: I,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, beta) in g {
            if k == 0 {
                return Err(Error::InvalidInput(
                    "g coefficients start at k = 1; fold the constant into c".into(),
                ));
            }
            if beta.is_zero() {
                continue;
            }
            if map.insert(k, beta).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate g coefficient at k = {k}"
                )));
            }
        }
        Ok(Self { slope, c, g: map })
    }

    /// The canonical time-of-arrival boundary: slope 1/4, `c = 0`, `g = 0`.
    pub fn time_of_arrival() -> Self {
        Self {
            slope: DiagonalSlope::Conjugate,
            c: GradedScalar::zero(),
            g: BTreeMap::new(),
        }
    }

    pub fn slope(&self) -> DiagonalSlope {
        self.slope
    }

    pub fn constant(&self) -> &GradedScalar {
        &self.c
    }

    pub fn g_coefficients(&self) -> impl Iterator<Item = (u32, &GradedScalar)> {
        self.g.iter().map(|(k, b)| (*k, b))
    }

    pub fn g_coefficient(&self, k: u32) -> Option<&GradedScalar> {
        self.g.get(&k)
    }

    /// Termwise sum of two boundary specifications.
    ///
    /// Fails when both carry the conjugate slope (the sum would have slope
    /// 1/2, which no kernel in this normalization realizes), or when scalars
    /// that must combine sit at incompatible grades.
    pub fn superpose(&self, other: &Self) -> Result<Self> {
        let slope = match (self.slope, other.slope) {
            (DiagonalSlope::Conjugate, DiagonalSlope::Conjugate) => {
                return Err(Error::InvalidInput(
                    "cannot superpose two conjugate-slope boundaries".into(),
                ))
            }
            (DiagonalSlope::Commutant, DiagonalSlope::Commutant) => DiagonalSlope::Commutant,
            _ => DiagonalSlope::Conjugate,
        };
        let c = add_compatible(&self.c, &other.c, "constant c")?;
        let mut g = self.g.clone();
        for (k, beta) in &other.g {
            let entry = match g.remove(k) {
                Some(existing) => add_compatible(&existing, beta, "g coefficient")?,
                None => beta.clone(),
            };
            if !entry.is_zero() {
                g.insert(*k, entry);
            }
        }
        Ok(Self { slope, c, g })
    }

    /// Hermiticity of the boundary data: `c` real and
    /// `beta_k = conj(beta_k) * (-1)^k` (real for even `k`, purely imaginary
    /// for odd `k`).
    pub fn is_hermitian_data(&self) -> bool {
        self.c.is_real()
            && self.g.iter().all(|(k, beta)| {
                if k % 2 == 0 {
                    beta.is_real()
                } else {
                    beta.is_imaginary()
                }
            })
    }

    /// Time-reversal symmetry of the boundary data: everything real.
    pub fn is_time_reversal_data(&self) -> bool {
        self.c.is_real() && self.g.values().all(GradedScalar::is_real)
    }
}

fn add_compatible(a: &GradedScalar, b: &GradedScalar, what: &str) -> Result<GradedScalar> {
    if !a.is_zero()
        && !b.is_zero()
        && (a.mu_exp() != b.mu_exp() || a.hbar_exp() != b.hbar_exp())
    {
        return Err(Error::InvalidInput(format!(
            "{what}: grades (mu^{} hbar^{}) and (mu^{} hbar^{}) cannot combine",
            a.mu_exp(),
            a.hbar_exp(),
            b.mu_exp(),
            b.hbar_exp()
        )));
    }
    Ok(a + b)
}

/// Shorthand for shifting a time-of-arrival kernel by `beta H^(-N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftSpec {
    order: u32,
    beta: Rat,
}

impl ShiftSpec {
    pub fn new(order: u32, beta: Rat) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidInput("shift order N must be >= 1".into()));
        }
        Ok(Self { order, beta })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn beta(&self) -> &Rat {
        &self.beta
    }

    /// Expands to full boundary data: conjugate slope plus the single
    /// monomial `beta_(2N-1) = -i^(2N-1) beta mu^(-2(N-1))`, which is purely
    /// imaginary with sign `(-1)^N`.
    pub fn expand(&self) -> BoundaryConditionSpec {
        let sign = if self.order % 2 == 0 { 1 } else { -1 };
        let im = &self.beta * Rat::from_integer(sign.into());
        let coeff = GradedScalar::new(
            GaussianRational::new(Rat::zero(), im),
            -2 * (i64::from(self.order) - 1),
            0,
        );
        BoundaryConditionSpec::new(
            DiagonalSlope::Conjugate,
            GradedScalar::zero(),
            [(2 * self.order - 1, coeff)],
        )
        .expect("shift expansion uses a single k >= 1 monomial")
    }
}

/// Axis coefficient maps seeded into the Frobenius recurrence: `row[m]` is
/// the coefficient of `u^m` on `T(u, 0)` (the shared constant `c` lives at
/// `m = 0`), `column[k]` the coefficient of `v^k` on `T(0, v)` for `k >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisCoefficients {
    pub row: BTreeMap<u32, GradedScalar>,
    pub column: BTreeMap<u32, GradedScalar>,
}

/// Converts boundary data to the axis coefficient maps.
pub fn boundary_to_axis_coefficients(bc: &BoundaryConditionSpec) -> AxisCoefficients {
    let mut row = BTreeMap::new();
    if !bc.c.is_zero() {
        row.insert(0, bc.c.clone());
    }
    if bc.slope == DiagonalSlope::Conjugate {
        row.insert(1, GradedScalar::rational(1, 4));
    }
    AxisCoefficients {
        row,
        column: bc.g.clone(),
    }
}

impl Serialize for BoundaryConditionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("BoundaryConditionSpec", 3)?;
        let slope = match self.slope {
            DiagonalSlope::Conjugate => "1/4",
            DiagonalSlope::Commutant => "0",
        };
        s.serialize_field("slope", slope)?;
        s.serialize_field("c", &self.c)?;
        let g: Vec<(u32, &GradedScalar)> = self.g.iter().map(|(k, b)| (*k, b)).collect();
        s.serialize_field("g", &g)?;
        s.end()
    }
}

#[derive(Deserialize)]
struct BoundaryWire {
    slope: String,
    #[serde(default)]
    c: Option<GradedScalar>,
    #[serde(default)]
    g: Vec<(u32, GradedScalar)>,
}

impl<'de> Deserialize<'de> for BoundaryConditionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = BoundaryWire::deserialize(deserializer)?;
        let slope = match wire.slope.as_str() {
            "1/4" => DiagonalSlope::Conjugate,
            "0" => DiagonalSlope::Commutant,
            other => {
                return Err(D::Error::custom(format!(
                    "slope must be \"1/4\" or \"0\", got {other:?}"
                )))
            }
        };
        BoundaryConditionSpec::new(slope, wire.c.unwrap_or_else(GradedScalar::zero), wire.g)
            .map_err(D::Error::custom)
    }
}

impl Serialize for ShiftSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ShiftSpec", 2)?;
        s.serialize_field("N", &self.order)?;
        s.serialize_field("beta", &rational_string(&self.beta))?;
        s.end()
    }
}

#[derive(Deserialize)]
struct ShiftWire {
    #[serde(rename = "N")]
    order: u32,
    beta: String,
}

impl<'de> Deserialize<'de> for ShiftSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = ShiftWire::deserialize(deserializer)?;
        let beta = parse_rational(&wire.beta).map_err(D::Error::custom)?;
        ShiftSpec::new(wire.order, beta).map_err(D::Error::custom)
    }
}
