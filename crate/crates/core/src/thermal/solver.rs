use serde::{Deserialize, Serialize};

use super::{FluidPlateProps, JetFlowModel, Result, ThermalError, ThermalGrid};

/// Fraction of the stability limit used when sub-stepping.
const SAFETY: f64 = 0.9;
const CACHE_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Inflow at `T_inf` through the top, zero-gradient outflow through the
    /// top and far side.
    Open,
    /// Sealed box: the prescribed jet cannot pass closed walls, so advection
    /// is switched off and only the plate exchanges heat.
    Closed,
}

/// Per-cell update rates for one jet velocity:
/// `dT/dt = sum_nb c_nb (T_nb - T) + k T + b`.
#[derive(Debug, Clone)]
struct Stencil {
    v_jet: f64,
    cw: Vec<f64>,
    ce: Vec<f64>,
    cs: Vec<f64>,
    cn: Vec<f64>,
    k: Vec<f64>,
    b: Vec<f64>,
    /// Largest `dt` keeping every update a convex combination.
    positive_dt: f64,
    cfl_dt: f64,
}

/// Explicit finite-volume integrator of `dT/dt + u . grad T = alpha lap T`:
/// first-order upwind advection in flux form, central diffusion, constant
/// heat flux through the plate.
#[derive(Debug, Clone)]
pub struct ThermalSolver {
    nx: usize,
    ny: usize,
    props: FluidPlateProps,
    flow: JetFlowModel,
    mode: BoundaryMode,
    cache: Vec<Stencil>,
    padded: Vec<f64>,
    spare: Vec<f64>,
}

impl ThermalSolver {
    /// `flow` supplies the field shape; its velocity is replaced per call.
    pub fn new(nx: usize, ny: usize, props: FluidPlateProps, flow: JetFlowModel, mode: BoundaryMode) -> Result<Self> {
        props.validate()?;
        if nx < 2 || ny < 2 {
            return Err(ThermalError::Config(format!("grid {nx}x{ny} is too small")));
        }
        Ok(Self {
            nx,
            ny,
            props,
            flow,
            mode,
            cache: Vec::new(),
            padded: vec![0.0; (nx + 2) * (ny + 2)],
            spare: vec![0.0; (nx + 2) * (ny + 2)],
        })
    }

    pub fn props(&self) -> &FluidPlateProps {
        &self.props
    }

    pub fn flow(&self) -> &JetFlowModel {
        &self.flow
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn set_q_flux(&mut self, q_flux: f64) -> Result<()> {
        if !(q_flux.is_finite() && q_flux >= 0.0) {
            return Err(ThermalError::Config(format!("heat flux {q_flux} must be >= 0")));
        }
        self.props.q_flux = q_flux;
        self.cache.clear();
        Ok(())
    }

    fn dx(&self) -> f64 {
        self.flow.lx / self.nx as f64
    }

    fn dy(&self) -> f64 {
        self.flow.h / self.ny as f64
    }

    /// `min(dx/|u|max, dy/|v|max, dx^2 dy^2 / (2 alpha (dx^2 + dy^2)))`.
    pub fn cfl_limit(&self, v_jet: f64) -> Result<f64> {
        let (dx, dy) = (self.dx(), self.dy());
        let (umax, vmax) = self.flow.with_velocity(self.effective_velocity(v_jet))?.max_components();
        let alpha = self.props.alpha();
        let diff = dx * dx * dy * dy / (2.0 * alpha * (dx * dx + dy * dy));
        let adv = |h: f64, s: f64| if s > 0.0 { h / s } else { f64::INFINITY };
        Ok(adv(dx, umax).min(adv(dy, vmax)).min(diff))
    }

    /// Largest admissible single-step `dt` at this velocity: the CFL limit
    /// or the positivity limit of the discrete update, whichever is smaller.
    pub fn stable_dt(&mut self, v_jet: f64) -> Result<f64> {
        let s = self.stencil(v_jet)?;
        Ok(self.cache[s].cfl_dt.min(self.cache[s].positive_dt))
    }

    fn effective_velocity(&self, v_jet: f64) -> f64 {
        match self.mode {
            BoundaryMode::Open => v_jet,
            BoundaryMode::Closed => 0.0,
        }
    }

    fn stencil(&mut self, v_jet: f64) -> Result<usize> {
        if let Some(pos) = self.cache.iter().position(|s| s.v_jet.to_bits() == v_jet.to_bits()) {
            return Ok(pos);
        }
        let s = self.build_stencil(v_jet)?;
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.push(s);
        Ok(self.cache.len() - 1)
    }

    fn build_stencil(&self, v_jet: f64) -> Result<Stencil> {
        let (nx, ny) = (self.nx, self.ny);
        let (dx, dy) = (self.dx(), self.dy());
        let flow = self.flow.with_velocity(self.effective_velocity(v_jet))?;
        let (fx, fy) = flow.face_fluxes(nx, ny);
        let vol = dx * dy;
        let alpha = self.props.alpha();
        let (dxx, dyy) = (alpha / (dx * dx), alpha / (dy * dy));
        let t_inf = self.props.t_inf;
        let plate = self.props.q_flux / (self.props.heat_capacity() * dy);
        let n = nx * ny;
        let mut s = Stencil {
            v_jet,
            cw: vec![0.0; n],
            ce: vec![0.0; n],
            cs: vec![0.0; n],
            cn: vec![0.0; n],
            k: vec![0.0; n],
            b: vec![0.0; n],
            positive_dt: f64::INFINITY,
            cfl_dt: self.cfl_limit(v_jet)?,
        };
        let mut worst_rate = 0.0f64;
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                // signed fluxes, positive in +x / +y
                let fw = fx[j * (nx + 1) + i];
                let fe = fx[j * (nx + 1) + i + 1];
                let fs = fy[j * nx + i];
                let f_n = fy[(j + 1) * nx + i];
                let mut boundary_in = 0.0;
                // inflow rate from each side; boundary inflow carries T_inf
                let mut inflow = |rate: f64, interior: bool, coef: &mut f64| {
                    if rate > 0.0 {
                        if interior {
                            *coef += rate / vol;
                        } else {
                            boundary_in += rate / vol;
                        }
                    }
                };
                inflow(fw, i > 0, &mut s.cw[c]);
                inflow(-fe, i + 1 < nx, &mut s.ce[c]);
                inflow(fs, j > 0, &mut s.cs[c]);
                inflow(-f_n, j + 1 < ny, &mut s.cn[c]);
                let net_out = (fe - fw + f_n - fs) / vol;
                if i > 0 {
                    s.cw[c] += dxx;
                }
                if i + 1 < nx {
                    s.ce[c] += dxx;
                }
                if j > 0 {
                    s.cs[c] += dyy;
                }
                if j + 1 < ny {
                    s.cn[c] += dyy;
                }
                s.k[c] = -boundary_in - net_out;
                s.b[c] = boundary_in * t_inf + if j == 0 { plate } else { 0.0 };
                let rate = s.cw[c] + s.ce[c] + s.cs[c] + s.cn[c] + boundary_in + net_out;
                worst_rate = worst_rate.max(rate);
            }
        }
        if worst_rate > 0.0 {
            s.positive_dt = 1.0 / worst_rate;
        }
        Ok(s)
    }

    /// One explicit step of length `dt`; refused when `dt` exceeds
    /// [`Self::stable_dt`]. Updates the wall temperatures afterwards.
    pub fn step(&mut self, grid: &mut ThermalGrid, v_jet: f64, dt: f64) -> Result<()> {
        self.check_grid(grid)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ThermalError::Input(format!("dt {dt} must be positive")));
        }
        let limit = self.stable_dt(v_jet)?;
        if dt > limit {
            return Err(ThermalError::Stability(format!(
                "dt {dt:e} exceeds the stability limit {limit:e} at v_jet {v_jet}"
            )));
        }
        let s = self.stencil(v_jet)?;
        self.run(s, grid, dt, 1)
    }

    /// Advances by `duration` using equal sub-steps inside the stability
    /// limit. Returns the number of sub-steps taken.
    pub fn advance(&mut self, grid: &mut ThermalGrid, v_jet: f64, duration: f64) -> Result<usize> {
        self.check_grid(grid)?;
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(ThermalError::Input(format!("duration {duration} must be positive")));
        }
        let limit = self.stable_dt(v_jet)?;
        let n = (duration / (SAFETY * limit)).ceil().max(1.0) as usize;
        let s = self.stencil(v_jet)?;
        self.run(s, grid, duration / n as f64, n)?;
        Ok(n)
    }

    fn check_grid(&self, grid: &ThermalGrid) -> Result<()> {
        if grid.nx != self.nx || grid.ny != self.ny {
            return Err(ThermalError::Input("grid does not match the solver".into()));
        }
        Ok(())
    }

    fn run(&mut self, s: usize, grid: &mut ThermalGrid, dt: f64, n: usize) -> Result<()> {
        let (nx, ny) = (self.nx, self.ny);
        let p = nx + 2;
        for j in 0..ny {
            let dst = (j + 1) * p + 1;
            self.padded[dst..dst + nx].copy_from_slice(&grid.t[j * nx..(j + 1) * nx]);
        }
        // ghost cells stay zero in both buffers; their coefficients are zero
        if self.spare.len() != self.padded.len() {
            self.spare = vec![0.0; self.padded.len()];
        }
        let st = &self.cache[s];
        for _ in 0..n {
            sweep(st, &self.padded, &mut self.spare, nx, ny, dt);
            std::mem::swap(&mut self.padded, &mut self.spare);
        }
        for j in 0..ny {
            let src = (j + 1) * p + 1;
            grid.t[j * nx..(j + 1) * nx].copy_from_slice(&self.padded[src..src + nx]);
        }
        if grid.t.iter().any(|v| !v.is_finite()) {
            return Err(ThermalError::Stability("temperature field became non-finite".into()));
        }
        grid.update_wall(self.props.q_flux, self.props.k);
        Ok(())
    }
}

/// One explicit update of the padded field `src` into `dst`.
fn sweep(st: &Stencil, src: &[f64], dst: &mut [f64], nx: usize, ny: usize, dt: f64) {
    let p = nx + 2;
    for j in 0..ny {
        let c0 = j * nx;
        let q0 = (j + 1) * p + 1;
        let cw = &st.cw[c0..c0 + nx];
        let ce = &st.ce[c0..c0 + nx];
        let cs = &st.cs[c0..c0 + nx];
        let cn = &st.cn[c0..c0 + nx];
        let k = &st.k[c0..c0 + nx];
        let b = &st.b[c0..c0 + nx];
        let mid = &src[q0..q0 + nx];
        let west = &src[q0 - 1..q0 - 1 + nx];
        let east = &src[q0 + 1..q0 + 1 + nx];
        let south = &src[q0 - p..q0 - p + nx];
        let north = &src[q0 + p..q0 + p + nx];
        let out = &mut dst[q0..q0 + nx];
        for i in 0..nx {
            let t = mid[i];
            let rate = cw[i] * (west[i] - t)
                + ce[i] * (east[i] - t)
                + cs[i] * (south[i] - t)
                + cn[i] * (north[i] - t)
                + k[i] * t
                + b[i];
            out[i] = t + dt * rate;
        }
    }
}
