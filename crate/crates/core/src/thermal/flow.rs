use serde::{Deserialize, Serialize};

use super::{Result, ThermalError};

/// Prescribed jet velocity field over the half-domain `[0, lx] x [0, h]`,
/// derived from the stream function `psi = v_jet * f(x) * g(y)` with
///
/// * `f(x) = x exp(-x^2 / (2 w^2))`, so `f'(0) = 1` and the wall jet peaks at `x = w`;
/// * `g(y) = (y - delta (1 - exp(-y / delta))) / N`, normalized so `g(h) = 1`,
///   which gives `u = v = 0` on the plate and a slip-free core aloft.
///
/// Only the energy equation is integrated; this field stands in for the
/// momentum solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JetFlowModel {
    pub v_jet: f64,
    /// Distance from the axis where the wall jet is fastest, m.
    pub width: f64,
    /// Near-wall shear layer thickness, m.
    pub bl_thickness: f64,
    pub lx: f64,
    pub h: f64,
}

impl JetFlowModel {
    pub fn new(v_jet: f64, width: f64, bl_thickness: f64, lx: f64, h: f64) -> Result<Self> {
        if !v_jet.is_finite() || v_jet < 0.0 {
            return Err(ThermalError::Config(format!("jet velocity {v_jet} must be >= 0")));
        }
        for (name, v) in [("width", width), ("bl_thickness", bl_thickness), ("lx", lx), ("h", h)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ThermalError::Config(format!("{name} must be positive")));
            }
        }
        Ok(Self {
            v_jet,
            width,
            bl_thickness,
            lx,
            h,
        })
    }

    pub fn with_velocity(&self, v_jet: f64) -> Result<Self> {
        Self::new(v_jet, self.width, self.bl_thickness, self.lx, self.h)
    }

    fn f(&self, x: f64) -> f64 {
        let s = x / self.width;
        x * (-0.5 * s * s).exp()
    }

    fn df(&self, x: f64) -> f64 {
        let s = x / self.width;
        (1.0 - s * s) * (-0.5 * s * s).exp()
    }

    fn norm(&self) -> f64 {
        let d = self.bl_thickness;
        self.h + d * (-self.h / d).exp_m1()
    }

    fn g(&self, y: f64) -> f64 {
        let d = self.bl_thickness;
        (y + d * (-y / d).exp_m1()) / self.norm()
    }

    fn dg(&self, y: f64) -> f64 {
        -(-y / self.bl_thickness).exp_m1() / self.norm()
    }

    /// Stream function, m^2/s. Defined (and used for face fluxes) on the
    /// closed domain including its boundary.
    pub fn psi(&self, x: f64, y: f64) -> f64 {
        self.v_jet * self.f(x) * self.g(y)
    }

    fn check_inside(&self, x: f64, y: f64) -> Result<()> {
        let tol = 1e-12 * (self.lx + self.h);
        if !(x >= -tol && x <= self.lx + tol && y >= -tol && y <= self.h + tol) {
            return Err(ThermalError::Input(format!(
                "point ({x}, {y}) outside [0, {}] x [0, {}]",
                self.lx, self.h
            )));
        }
        Ok(())
    }

    /// `(u, v)` in m/s at `(x, y)`.
    pub fn velocity(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        self.check_inside(x, y)?;
        Ok(self.velocity_unchecked(x, y))
    }

    pub(crate) fn velocity_unchecked(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.v_jet * self.f(x) * self.dg(y),
            -self.v_jet * self.df(x) * self.g(y),
        )
    }

    /// Largest `|u|` and `|v|` over the domain, from the closed forms.
    pub fn max_components(&self) -> (f64, f64) {
        let w = self.width.min(self.lx);
        let u = self.v_jet * self.f(w) * self.dg(self.h);
        // |f'| peaks at the axis; beyond sqrt(3) w it reaches -2 exp(-3/2)
        let v = self.v_jet * 1.0f64.max(2.0 * (-1.5f64).exp()) * self.g(self.h);
        (u, v)
    }

    /// Volumetric fluxes through the faces of an `nx x ny` cell grid,
    /// obtained by differencing `psi` at cell corners.
    ///
    /// Returns `(fx, fy)` where `fx[j * (nx + 1) + i]` is the flux in +x through
    /// the vertical face at `x = i dx` of row `j`, and `fy[j * nx + i]` is the
    /// flux in +y through the horizontal face at `y = j dy` of column `i`.
    pub fn face_fluxes(&self, nx: usize, ny: usize) -> (Vec<f64>, Vec<f64>) {
        let dx = self.lx / nx as f64;
        let dy = self.h / ny as f64;
        let corner = |i: usize, j: usize| self.psi(i as f64 * dx, j as f64 * dy);
        let mut psi = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 0..=ny {
            for i in 0..=nx {
                psi[j * (nx + 1) + i] = corner(i, j);
            }
        }
        let at = |i: usize, j: usize| psi[j * (nx + 1) + i];
        let mut fx = vec![0.0; (nx + 1) * ny];
        for j in 0..ny {
            for i in 0..=nx {
                fx[j * (nx + 1) + i] = at(i, j + 1) - at(i, j);
            }
        }
        let mut fy = vec![0.0; nx * (ny + 1)];
        for j in 0..=ny {
            for i in 0..nx {
                fy[j * nx + i] = -(at(i + 1, j) - at(i, j));
            }
        }
        (fx, fy)
    }

    /// Largest finite-volume divergence `|sum of outward face velocities * face length| / cell area`
    /// over an `nx x ny` grid, in 1/s.
    pub fn discrete_divergence(&self, nx: usize, ny: usize) -> f64 {
        let dx = self.lx / nx as f64;
        let dy = self.h / ny as f64;
        let (fx, fy) = self.face_fluxes(nx, ny);
        let mut worst = 0.0f64;
        for j in 0..ny {
            for i in 0..nx {
                let net = fx[j * (nx + 1) + i + 1] - fx[j * (nx + 1) + i] + fy[(j + 1) * nx + i]
                    - fy[j * nx + i];
                worst = worst.max((net / (dx * dy)).abs());
            }
        }
        worst
    }
}
