use serde::{Deserialize, Serialize};

use super::{Result, ThermalError};

/// Fluid and plate properties of the jet-cooled plate. Diffusivities are
/// derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidPlateProps {
    /// Density, kg/m^3.
    pub rho: f64,
    /// Dynamic viscosity, Pa s.
    pub mu: f64,
    /// Thermal conductivity, W/(m K).
    pub k: f64,
    /// Specific heat, J/(kg K).
    pub cp: f64,
    /// Plate heat flux q'', W/m^2.
    pub q_flux: f64,
    /// Jet diameter, m.
    pub d: f64,
    pub h_over_d: f64,
    /// Full plate length, m.
    pub plate_len: f64,
    pub v_inf: f64,
    pub t_inf: f64,
    pub t_d: f64,
}

impl Default for FluidPlateProps {
    fn default() -> Self {
        let d = 0.025;
        Self {
            rho: 1.225,
            mu: 1.789e-5,
            k: 0.024,
            cp: 1006.0,
            q_flux: 100.0,
            d,
            h_over_d: 4.0,
            plate_len: 8.0 * d,
            v_inf: 1.0,
            t_inf: 288.0,
            t_d: 303.0,
        }
    }
}

impl FluidPlateProps {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho", self.rho),
            ("mu", self.mu),
            ("k", self.k),
            ("cp", self.cp),
            ("q_flux", self.q_flux),
            ("d", self.d),
            ("h_over_d", self.h_over_d),
            ("plate_len", self.plate_len),
            ("v_inf", self.v_inf),
            ("t_inf", self.t_inf),
            ("t_d", self.t_d),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(ThermalError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Thermal diffusivity k / (rho cp).
    pub fn alpha(&self) -> f64 {
        self.k / (self.rho * self.cp)
    }

    /// Kinematic viscosity mu / rho.
    pub fn nu(&self) -> f64 {
        self.mu / self.rho
    }

    /// Volumetric heat capacity rho cp.
    pub fn heat_capacity(&self) -> f64 {
        self.rho * self.cp
    }

    /// Nozzle-to-plate distance H.
    pub fn height(&self) -> f64 {
        self.h_over_d * self.d
    }

    /// Jet Reynolds number rho V d / mu.
    pub fn reynolds(&self, v: f64) -> f64 {
        self.rho * v * self.d / self.mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reynolds_range() {
        let p = FluidPlateProps::default();
        assert!((p.reynolds(1.0) - 1711.85).abs() < 0.01);
        assert!((p.reynolds(0.1) - 171.185).abs() < 0.001);
        assert_eq!(p.reynolds(0.0), 0.0);
    }

    #[test]
    fn derived_diffusivities() {
        let p = FluidPlateProps::default();
        assert!((p.alpha() - 0.024 / (1.225 * 1006.0)).abs() < 1e-18);
        assert!((p.nu() - 1.789e-5 / 1.225).abs() < 1e-18);
        assert_eq!(p.height(), 0.1);
        assert!((p.plate_len - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_positive() {
        let mut p = FluidPlateProps::default();
        p.k = 0.0;
        assert!(p.validate().is_err());
        p = FluidPlateProps::default();
        p.t_d = f64::NAN;
        assert!(p.validate().is_err());
    }
}
