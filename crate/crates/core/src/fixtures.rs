//! Named model Hamiltonians on the torus.
//!
//! | name     | ε(k)                    | v(x)                                   |
//! |----------|-------------------------|----------------------------------------|
//! | harper   | −2 cos k                | −2 cos(2πx/L)                          |
//! | saddle   | −2 cos k                | +2 cos(2πx/L)                          |
//! | free     | k²/2 on [−π, π)         | 0                                      |
//! | tilted   | −2 cos k                | −2 cos(2πx/L) + 0.25 (x − L/2) on [0, L) |
//! | harmonic | k²/2 on [−π, π)         | ω²(x − L/2)²/2 on [0, L), ω = 2π/L     |

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::hilbert::{HamiltonianSpec, Profile, TorusGeometry};

/// Slope of the tilt in the `tilted` model.
pub const TILT: f64 = 0.25;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Harper,
    Saddle,
    Free,
    Tilted,
    Harmonic,
}

impl Model {
    pub const ALL: [Model; 5] = [Model::Harper, Model::Saddle, Model::Free, Model::Tilted, Model::Harmonic];

    pub fn name(self) -> &'static str {
        match self {
            Model::Harper => "harper",
            Model::Saddle => "saddle",
            Model::Free => "free",
            Model::Tilted => "tilted",
            Model::Harmonic => "harmonic",
        }
    }

    pub fn spec(self, geometry: &TorusGeometry) -> HamiltonianSpec {
        match self {
            Model::Harper => harper(geometry),
            Model::Saddle => saddle(geometry),
            Model::Free => free(geometry),
            Model::Tilted => tilted(geometry),
            Model::Harmonic => harmonic(geometry),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result { f.write_str(self.name()) }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model {s:?}")))
    }
}

fn hopping() -> Profile { Profile::Cosine { amplitude: -2.0, wavenumber: 1.0 } }

fn lattice_cosine(g: &TorusGeometry, amplitude: f64) -> Profile {
    Profile::Cosine { amplitude, wavenumber: TAU / g.position_period() }
}

fn kinetic(g: &TorusGeometry) -> Profile {
    Profile::Quadratic { curvature: 1.0, center: 0.0, period: g.momentum_period() }
}

pub fn harper(g: &TorusGeometry) -> HamiltonianSpec { HamiltonianSpec::new("harper", hopping(), lattice_cosine(g, -2.0)) }

/// Anti-self-dual partner of [`harper`]: the potential has the opposite sign.
pub fn saddle(g: &TorusGeometry) -> HamiltonianSpec { HamiltonianSpec::new("saddle", hopping(), lattice_cosine(g, 2.0)) }

pub fn free(g: &TorusGeometry) -> HamiltonianSpec { HamiltonianSpec::new("free", kinetic(g), Profile::Zero) }

pub fn tilted(g: &TorusGeometry) -> HamiltonianSpec {
    let l = g.position_period();
    let tilt = Profile::Linear { slope: TILT, center: 0.5 * l, period: l };
    HamiltonianSpec::new("tilted", hopping(), Profile::Sum(vec![lattice_cosine(g, -2.0), tilt]))
}

/// Oscillator whose orbits scale with the cell: frequency `2π/L`, so a
/// start at `x = L/2 + L/4` reaches momentum `π/2`.
pub fn harmonic(g: &TorusGeometry) -> HamiltonianSpec {
    let l = g.position_period();
    let omega = harmonic_frequency(g);
    let v = Profile::Quadratic { curvature: omega * omega, center: 0.5 * l, period: l };
    HamiltonianSpec::new("harmonic", kinetic(g), v)
}

pub fn harmonic_frequency(g: &TorusGeometry) -> f64 { 2.0 * PI / g.position_period() }
