//! Two-vehicle platoon in reduced coordinates
//! `z = [v₁ − v*, x₁ − x₂ − d*, v₂ − v*]`, with vehicle 1 as subsystem 1 and
//! the spacing plus vehicle 2 as subsystem 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::Mat;
use crate::plantspace::{Density, EntrySpec, InfoStructure, PlantFamily, PlantInstance};

/// Box of the local drag parameters `a_ii`.
pub const A_BOX: [f64; 2] = [0.0, 1.0];
/// Box of the local input gains `b_ii`.
pub const B_BOX: [f64; 2] = [0.5, 1.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonParams {
    /// Viscous drag coefficients.
    pub alpha: [f64; 2],
    /// Power conversion coefficients.
    pub beta: [f64; 2],
    pub mass: [f64; 2],
    pub delta_t: f64,
    pub d_star: f64,
    pub v_star: f64,
    pub q_d: f64,
    pub q_v: f64,
    pub r_weight: f64,
}

impl Default for PlatoonParams {
    /// Unit masses and `ΔT = 1`, with drag and power coefficients chosen so
    /// that `(a11, b11) = (0.4360, 1.0497)` and `(a22, b22) = (0.0259, 0.9353)`.
    fn default() -> Self {
        PlatoonParams {
            alpha: [0.5640, 0.9741],
            beta: [1.0497, 0.9353],
            mass: [1.0, 1.0],
            delta_t: 1.0,
            d_star: 10.0,
            v_star: 20.0,
            q_d: 1.0,
            q_v: 1.0,
            r_weight: 1.0,
        }
    }
}

impl PlatoonParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidParams(s.to_string()));
        if self.mass.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return bad("masses must be positive");
        }
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return bad("sampling time must be positive");
        }
        if [self.q_d, self.q_v, self.r_weight]
            .iter()
            .any(|&w| !(w > 0.0 && w.is_finite()))
        {
            return bad("cost weights must be positive");
        }
        if self.alpha.iter().chain(&self.beta).any(|v| !v.is_finite()) {
            return bad("drag and power coefficients must be finite");
        }
        Ok(())
    }

    /// `a_ii = 1 − α_i ΔT / m_i`.
    pub fn a_local(&self) -> [f64; 2] {
        [0, 1].map(|i| 1.0 - self.alpha[i] / self.mass[i] * self.delta_t)
    }

    /// `b_ii = β_i ΔT / m_i`.
    pub fn b_local(&self) -> [f64; 2] {
        [0, 1].map(|i| self.beta[i] / self.mass[i] * self.delta_t)
    }

    /// Steady-state inputs `ū_i* = α_i v* / β_i`.
    pub fn nominal_inputs(&self) -> [f64; 2] {
        [0, 1].map(|i| self.alpha[i] * self.v_star / self.beta[i])
    }

    pub fn q(&self) -> Mat {
        Mat::from_diag(&[self.q_v, self.q_d, self.q_v])
    }

    pub fn r(&self) -> Mat {
        Mat::from_diag(&[self.r_weight, self.r_weight])
    }
}

fn info() -> InfoStructure {
    InfoStructure::new(
        vec![1, 2],
        vec![1, 1],
        vec![vec![1, 0], vec![1, 1]],
        vec![vec![1, 0], vec![0, 1]],
    )
    .expect("platoon structure is valid")
}

/// Family with `a11, a22 ∈ [0, 1]` and `b11, b22 ∈ [0.5, 1.5]` free and the
/// spacing row fixed by the kinematics.
pub fn build_platoon(params: &PlatoonParams) -> Result<PlantFamily> {
    params.validate()?;
    use EntrySpec::{Fixed, Free, Zero};
    let dt = params.delta_t;
    PlantFamily::new(
        info(),
        vec![
            vec![Free(A_BOX), Zero, Zero],
            vec![Fixed(dt), Fixed(1.0), Fixed(-dt)],
            vec![Zero, Zero, Free(A_BOX)],
        ],
        vec![
            vec![Free(B_BOX), Zero],
            vec![Fixed(0.0), Fixed(0.0)],
            vec![Fixed(0.0), Free(B_BOX)],
        ],
        params.q(),
        params.r(),
        Density::Uniform,
    )
}

/// The plant the parameters describe, as a member of [`build_platoon`].
pub fn platoon_plant(params: &PlatoonParams) -> Result<PlantInstance> {
    let family = build_platoon(params)?;
    let [a11, a22] = params.a_local();
    let [b11, b22] = params.b_local();
    family.instance(&[a11, a22, b11, b22])
}

/// Free-entry values `(a11, a22, b11, b22)` in family order.
pub fn local_parameters(plant: &PlantInstance) -> [f64; 4] {
    [
        plant.a[(0, 0)],
        plant.a[(2, 2)],
        plant.b[(0, 0)],
        plant.b[(2, 1)],
    ]
}
