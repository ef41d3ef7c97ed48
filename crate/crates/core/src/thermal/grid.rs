use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Result, ThermalError};

/// Cell-centred temperature field on a uniform grid. Row `j = 0` touches the
/// plate; column `i = 0` touches the symmetry axis. `t_wall` holds the
/// plate-surface temperature under each bottom cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub t: Vec<f64>,
    pub t_wall: Vec<f64>,
}

impl ThermalGrid {
    pub fn uniform(nx: usize, ny: usize, lx: f64, ly: f64, t0: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(ThermalError::Config(format!("grid {nx}x{ny} is too small")));
        }
        if !(lx > 0.0 && ly > 0.0) || !t0.is_finite() {
            return Err(ThermalError::Config("grid extent and temperature must be positive".into()));
        }
        Ok(Self {
            nx,
            ny,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
            t: vec![t0; nx * ny],
            t_wall: vec![t0; nx],
        })
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.t[self.idx(i, j)]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy)
    }

    pub fn lx(&self) -> f64 {
        self.dx * self.nx as f64
    }

    pub fn ly(&self) -> f64 {
        self.dy * self.ny as f64
    }

    pub fn fill(&mut self, t0: f64) {
        self.t.iter_mut().for_each(|v| *v = t0);
        self.t_wall.iter_mut().for_each(|v| *v = t0);
    }

    /// Extrapolates the plate-adjacent cells to the wall through the flux
    /// condition `-k dT/dy = q''`.
    pub fn update_wall(&mut self, q_flux: f64, k: f64) {
        let rise = q_flux * 0.5 * self.dy / k;
        for i in 0..self.nx {
            self.t_wall[i] = self.t[i] + rise;
        }
    }

    /// Mean plate-surface temperature. Cells are equal-width, so the area
    /// weighting reduces to a plain mean.
    pub fn surface_avg_temperature(&self) -> f64 {
        self.t_wall.iter().sum::<f64>() / self.nx as f64
    }

    pub fn mean(&self) -> f64 {
        self.t.iter().sum::<f64>() / self.t.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.t
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// `nx,ny,dx,dy` header, one line of values, then `ny` rows of `nx`
    /// temperatures in K starting at the plate.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "nx,ny,dx,dy")?;
        writeln!(w, "{},{},{:.16e},{:.16e}", self.nx, self.ny, self.dx, self.dy)?;
        for row in self.t.chunks_exact(self.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads a field written by [`Self::write_csv`]. The wall row is set
    /// equal to the bottom cells.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let bad = |m: String| ThermalError::Input(format!("field csv: {m}"));
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| bad("unexpected end of file".into()))?
                .map_err(|e| bad(e.to_string()))
        };
        if next()?.trim() != "nx,ny,dx,dy" {
            return Err(bad("missing header".into()));
        }
        let head = next()?;
        let parts: Vec<&str> = head.trim().split(',').collect();
        if parts.len() != 4 {
            return Err(bad("header needs four values".into()));
        }
        let nx: usize = parts[0].parse().map_err(|_| bad("bad nx".into()))?;
        let ny: usize = parts[1].parse().map_err(|_| bad("bad ny".into()))?;
        let dx: f64 = parts[2].parse().map_err(|_| bad("bad dx".into()))?;
        let dy: f64 = parts[3].parse().map_err(|_| bad("bad dy".into()))?;
        let mut t = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let line = next()?;
            let row: std::result::Result<Vec<f64>, _> = line.trim().split(',').map(str::parse).collect();
            let row = row.map_err(|_| bad(format!("row {j} has a bad value")))?;
            if row.len() != nx {
                return Err(bad(format!("row {j} has {} values", row.len())));
            }
            t.extend(row);
        }
        let t_wall = t[..nx].to_vec();
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            t,
            t_wall,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_field_surface_temperature() {
        let mut g = ThermalGrid::uniform(8, 4, 0.1, 0.1, 300.0).unwrap();
        assert_eq!(g.surface_avg_temperature(), 300.0);
        g.update_wall(0.0, 0.024);
        assert_eq!(g.surface_avg_temperature(), 300.0);
    }

    #[test]
    fn linear_profile_extrapolates_exactly() {
        // T = a + b y with the gradient fixed by the flux condition
        let (q, k, a) = (150.0, 0.024, 310.0);
        let b = -q / k;
        let mut g = ThermalGrid::uniform(6, 5, 0.1, 0.05, 0.0).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let y = g.cell_center(i, j).1;
                let id = g.idx(i, j);
                g.t[id] = a + b * y;
            }
        }
        g.update_wall(q, k);
        assert!((g.surface_avg_temperature() - a).abs() < 1e-12);
    }

    #[test]
    fn csv_roundtrip() {
        let mut g = ThermalGrid::uniform(5, 3, 0.1, 0.06, 288.0).unwrap();
        for (n, v) in g.t.iter_mut().enumerate() {
            *v += n as f64 / 7.0;
        }
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("nx,ny,dx,dy\n5,3,"));
        let back = ThermalGrid::read_csv(&buf[..]).unwrap();
        assert_eq!(back.t, g.t);
        assert_eq!((back.dx, back.dy), (g.dx, g.dy));
        assert!(ThermalGrid::read_csv(&buf[..buf.len() / 2]).is_err());
    }
}
