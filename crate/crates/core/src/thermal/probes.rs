use serde::{Deserialize, Serialize};

use super::{JetFlowModel, Result, ThermalError, ThermalGrid};

/// Sensors at height `offset` above the plate, spread evenly along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLayout {
    /// Height above the plate, m.
    pub offset: f64,
    /// Streamwise positions, m.
    pub xs: Vec<f64>,
}

impl ProbeLayout {
    /// `n` probes at the centres of `n` equal plate segments.
    pub fn evenly_spaced(n: usize, offset: f64, lx: f64) -> Result<Self> {
        if n == 0 {
            return Err(ThermalError::Config("need at least one probe".into()));
        }
        let xs = (0..n).map(|k| (k as f64 + 0.5) * lx / n as f64).collect();
        Ok(Self { offset, xs })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn validate(&self, lx: f64, ly: f64) -> Result<()> {
        if !(self.offset > 0.0 && self.offset <= ly) {
            return Err(ThermalError::Config(format!("probe offset {} outside (0, {ly}]", self.offset)));
        }
        if let Some(x) = self.xs.iter().find(|&&x| !(0.0..=lx).contains(&x)) {
            return Err(ThermalError::Config(format!("probe x = {x} outside [0, {lx}]")));
        }
        Ok(())
    }

    /// Probe temperatures in K.
    pub fn temperatures(&self, grid: &ThermalGrid) -> Vec<f64> {
        self.xs
            .iter()
            .map(|&x| bilinear_sample(grid, &grid.t, &grid.t_wall, x, self.offset))
            .collect()
    }

    /// Probe speeds `|u|` for a unit jet velocity; scale by `v_jet`.
    pub fn unit_speeds(&self, grid: &ThermalGrid, flow: &JetFlowModel) -> Result<Vec<f64>> {
        let unit = flow.with_velocity(1.0)?;
        let mut speed = vec![0.0; grid.nx * grid.ny];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                let (u, v) = unit.velocity_unchecked(x, y);
                speed[grid.idx(i, j)] = u.hypot(v);
            }
        }
        let wall = vec![0.0; grid.nx];
        Ok(self
            .xs
            .iter()
            .map(|&x| bilinear_sample(grid, &speed, &wall, x, self.offset))
            .collect())
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Bilinear interpolation of a cell-centred field at `(x, y)`, with `wall`
/// supplying values on the plate (`y = 0`). Points beyond the outermost cell
/// centres take the nearest value, matching the zero-gradient boundaries.
pub fn bilinear_sample(grid: &ThermalGrid, field: &[f64], wall: &[f64], x: f64, y: f64) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let sx = (x / grid.dx - 0.5).clamp(0.0, (nx - 1) as f64);
    let i0 = (sx.floor() as usize).min(nx - 1);
    let i1 = (i0 + 1).min(nx - 1);
    let tx = sx - i0 as f64;
    let row = |vals: &[f64]| lerp(vals[i0], vals[i1], tx);
    let sy = y / grid.dy - 0.5;
    if sy < 0.0 {
        let lo = row(wall);
        let hi = row(&field[..nx]);
        return lerp(lo, hi, (y / (0.5 * grid.dy)).max(0.0));
    }
    let sy = sy.min((ny - 1) as f64);
    let j0 = (sy.floor() as usize).min(ny - 1);
    let j1 = (j0 + 1).min(ny - 1);
    let ty = sy - j0 as f64;
    lerp(
        row(&field[j0 * nx..(j0 + 1) * nx]),
        row(&field[j1 * nx..(j1 + 1) * nx]),
        ty,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_grid() -> ThermalGrid {
        let mut g = ThermalGrid::uniform(8, 6, 0.08, 0.06, 0.0).unwrap();
        for j in 0..6 {
            for i in 0..8 {
                let id = g.idx(i, j);
                g.t[id] = 300.0 + i as f64 * 1.5 - j as f64 * 0.75 + (i * j) as f64 * 0.1;
            }
        }
        g.t_wall = g.t[..8].iter().map(|v| v + 2.0).collect();
        g
    }

    #[test]
    fn cell_centres_are_exact() {
        let g = ramp_grid();
        for j in 0..6 {
            for i in 0..8 {
                let (x, y) = g.cell_center(i, j);
                assert_eq!(bilinear_sample(&g, &g.t, &g.t_wall, x, y), g.get(i, j));
            }
        }
    }

    #[test]
    fn midpoint_is_the_average() {
        let g = ramp_grid();
        let (x0, y) = g.cell_center(2, 3);
        let (x1, _) = g.cell_center(3, 3);
        let got = bilinear_sample(&g, &g.t, &g.t_wall, 0.5 * (x0 + x1), y);
        assert!((got - 0.5 * (g.get(2, 3) + g.get(3, 3))).abs() < 1e-12);
    }

    #[test]
    fn below_first_centre_blends_with_wall() {
        let g = ramp_grid();
        let (x, yc) = g.cell_center(4, 0);
        let got = bilinear_sample(&g, &g.t, &g.t_wall, x, 0.5 * yc);
        assert!((got - 0.5 * (g.t_wall[4] + g.get(4, 0))).abs() < 1e-12);
        assert_eq!(bilinear_sample(&g, &g.t, &g.t_wall, x, 0.0), g.t_wall[4]);
    }

    #[test]
    fn uniform_field_reads_uniform() {
        let g = ThermalGrid::uniform(96, 48, 0.1, 0.1, 288.0).unwrap();
        let layout = ProbeLayout::evenly_spaced(5, 0.001, 0.1).unwrap();
        assert!(layout.temperatures(&g).iter().all(|&t| t == 288.0));
    }

    #[test]
    fn layout_validation() {
        let layout = ProbeLayout::evenly_spaced(5, 0.001, 0.1).unwrap();
        assert!(layout.validate(0.1, 0.1).is_ok());
        assert!((layout.xs[0] - 0.01).abs() < 1e-15 && (layout.xs[4] - 0.09).abs() < 1e-15);
        assert!(ProbeLayout::evenly_spaced(5, 0.2, 0.1).unwrap().validate(0.1, 0.1).is_err());
        assert!(ProbeLayout::evenly_spaced(5, 0.0, 0.1).unwrap().validate(0.1, 0.1).is_err());
        let outside = ProbeLayout { offset: 0.01, xs: vec![0.5] };
        assert!(outside.validate(0.1, 0.1).is_err());
    }
}
