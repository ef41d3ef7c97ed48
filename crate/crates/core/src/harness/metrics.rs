use std::io::Write;

use crate::bridge::StepOutcome;

/// Formats a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Per-episode training metrics. Wall-clock time lives in a separate file so
/// that this table is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub episode: usize,
    pub decisions: usize,
    pub total_reward: f64,
    /// `100 * total_reward / planned decisions per episode`.
    pub normalized_reward: f64,
    pub mean_t_surf: f64,
    pub min_t_surf: f64,
    pub max_t_surf: f64,
    pub mean_abs_dv: f64,
    pub in_band_fraction: f64,
    pub epsilon: f64,
    pub aborted: bool,
}

pub const METRICS_HEADER: &str = "episode,decisions,total_reward,normalized_reward,mean_t_surf,min_t_surf,max_t_surf,mean_abs_dv,in_band_fraction,epsilon,aborted";

impl MetricsRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.decisions,
            fmt_float(self.total_reward),
            fmt_float(self.normalized_reward),
            fmt_float(self.mean_t_surf),
            fmt_float(self.min_t_surf),
            fmt_float(self.max_t_surf),
            fmt_float(self.mean_abs_dv),
            fmt_float(self.in_band_fraction),
            fmt_float(self.epsilon),
            u8::from(self.aborted)
        )
    }
}

/// Accumulates one episode's step outcomes.
#[derive(Debug, Clone)]
pub struct EpisodeStats {
    t_d: f64,
    band: f64,
    decisions: usize,
    in_band: usize,
    total_reward: f64,
    t_sum: f64,
    t_min: f64,
    t_max: f64,
    dv_sum: f64,
    prev_v: Option<f64>,
}

impl EpisodeStats {
    pub fn new(t_d: f64, band: f64) -> Self {
        Self {
            t_d,
            band,
            decisions: 0,
            in_band: 0,
            total_reward: 0.0,
            t_sum: 0.0,
            t_min: f64::INFINITY,
            t_max: f64::NEG_INFINITY,
            dv_sum: 0.0,
            prev_v: None,
        }
    }

    pub fn record(&mut self, out: &StepOutcome) {
        self.decisions += 1;
        self.total_reward += out.reward;
        if let Some(info) = &out.info {
            self.t_sum += info.t_surf;
            self.t_min = self.t_min.min(info.t_surf);
            self.t_max = self.t_max.max(info.t_surf);
            if crate::thermal::in_band(info.t_surf, self.t_d, self.band) {
                self.in_band += 1;
            }
            if let Some(p) = self.prev_v {
                self.dv_sum += (info.v_jet - p).abs();
            }
            self.prev_v = Some(info.v_jet);
        }
    }

    pub fn decisions(&self) -> usize {
        self.decisions
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }

    pub fn in_band_fraction(&self) -> f64 {
        if self.decisions == 0 {
            0.0
        } else {
            self.in_band as f64 / self.decisions as f64
        }
    }

    /// `planned` is the episode length the run was scheduled for; aborted
    /// episodes are scored against it too.
    pub fn finish(&self, episode: usize, planned: usize, epsilon: f64, aborted: bool) -> MetricsRow {
        let n = self.decisions.max(1) as f64;
        let (t_min, t_max) = if self.decisions == 0 {
            (f64::NAN, f64::NAN)
        } else {
            (self.t_min, self.t_max)
        };
        MetricsRow {
            episode,
            decisions: self.decisions,
            total_reward: self.total_reward,
            normalized_reward: 100.0 * self.total_reward / planned.max(1) as f64,
            mean_t_surf: if self.decisions == 0 { f64::NAN } else { self.t_sum / n },
            min_t_surf: t_min,
            max_t_surf: t_max,
            mean_abs_dv: if self.decisions > 1 { self.dv_sum / (n - 1.0) } else { 0.0 },
            in_band_fraction: self.in_band_fraction(),
            epsilon,
            aborted,
        }
    }
}

pub fn write_metrics_csv<W: Write>(mut w: W, rows: &[MetricsRow]) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

pub fn write_timing_csv<W: Write>(mut w: W, seconds: &[f64]) -> std::io::Result<()> {
    writeln!(w, "episode,wall_clock_s")?;
    for (i, s) in seconds.iter().enumerate() {
        writeln!(w, "{i},{}", fmt_float(*s))?;
    }
    Ok(())
}

/// One decision of a greedy or constant-action rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub time: f64,
    pub v_jet: f64,
    pub t_surf: f64,
    pub t_star: f64,
    pub reward: f64,
}

pub fn write_history_csv<W: Write>(mut w: W, rows: &[HistoryRow]) -> std::io::Result<()> {
    writeln!(w, "time_s,v_jet,t_surf,t_star,reward")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_float(r.time),
            fmt_float(r.v_jet),
            fmt_float(r.t_surf),
            fmt_float(r.t_star),
            fmt_float(r.reward)
        )?;
    }
    Ok(())
}
