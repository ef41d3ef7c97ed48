use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::write_file;
use super::{evaluate, fmt_float, train, EvalReport, HarnessError, Result, RunConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Probe offset from the plate.
    Layout,
    /// Number of training episodes.
    Episodes,
    /// DQN preset.
    Variant,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Layout => "layout",
            SweepAxis::Episodes => "episodes",
            SweepAxis::Variant => "variant",
        }
    }

    /// `(label, config)` for every axis value, seed not yet applied.
    fn values(self, cfg: &RunConfig) -> Vec<(String, RunConfig)> {
        let s = &cfg.sweep;
        match self {
            SweepAxis::Layout => s
                .layouts_mm
                .iter()
                .map(|&mm| {
                    let mut c = cfg.clone();
                    c.env.probe_offset = mm * 1e-3;
                    (format!("{mm}mm"), c)
                })
                .collect(),
            SweepAxis::Episodes => s
                .episodes
                .iter()
                .map(|&n| {
                    let mut c = cfg.clone();
                    c.n_episodes = n;
                    (n.to_string(), c)
                })
                .collect(),
            SweepAxis::Variant => s
                .variants
                .iter()
                .map(|&p| {
                    let mut c = cfg.clone();
                    c.preset = Some(p);
                    (p.name().to_string(), c)
                })
                .collect(),
        }
    }
}

impl FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layout" => Ok(SweepAxis::Layout),
            "episodes" => Ok(SweepAxis::Episodes),
            "variant" => Ok(SweepAxis::Variant),
            _ => Err(HarnessError::Config(format!("unknown sweep axis {s:?}"))),
        }
    }
}

/// One (axis value, seed) training run followed by a greedy evaluation.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub value: String,
    pub seed: u64,
    pub config: RunConfig,
    pub train: TrainReport,
    pub eval: EvalReport,
}

impl SweepCell {
    pub fn final_normalized_reward(&self) -> Option<f64> {
        self.train.metrics.last().map(|m| m.normalized_reward)
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub axis: SweepAxis,
    /// Ordered by axis value, then seed.
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn cells_for<'a>(&'a self, value: &'a str) -> impl Iterator<Item = &'a SweepCell> + 'a {
        self.cells.iter().filter(move |c| c.value == value)
    }

    /// Writes each cell's files into `<dir>/<value>-seed<k>/` plus the merged
    /// `sweep_<axis>.csv` (per episode) and `sweep_<axis>_eval.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let axis = self.axis.name();
        for cell in &self.cells {
            let sub = dir.join(format!("{}-seed{}", cell.value, cell.seed));
            cell.train.write(&sub)?;
            cell.eval.write(&sub, "eval")?;
        }
        write_file(&dir.join(format!("sweep_{axis}.csv")), |w| {
            writeln!(w, "axis,value,seed,episode,normalized_reward,in_band_fraction,mean_t_surf,mean_abs_dv,epsilon,aborted")?;
            for c in &self.cells {
                for m in &c.train.metrics {
                    writeln!(
                        w,
                        "{axis},{},{},{},{},{},{},{},{},{}",
                        c.value,
                        c.seed,
                        m.episode,
                        fmt_float(m.normalized_reward),
                        fmt_float(m.in_band_fraction),
                        fmt_float(m.mean_t_surf),
                        fmt_float(m.mean_abs_dv),
                        fmt_float(m.epsilon),
                        u8::from(m.aborted)
                    )?;
                }
            }
            Ok(())
        })?;
        write_file(&dir.join(format!("sweep_{axis}_eval.csv")), |w| {
            writeln!(w, "axis,value,seed,final_normalized_reward,eval_in_band_fraction,eval_normalized_reward")?;
            for c in &self.cells {
                writeln!(
                    w,
                    "{axis},{},{},{},{},{}",
                    c.value,
                    c.seed,
                    fmt_float(c.final_normalized_reward().unwrap_or(f64::NAN)),
                    fmt_float(c.eval.in_band_fraction),
                    fmt_float(c.eval.normalized_reward)
                )?;
            }
            Ok(())
        })
    }
}

fn run_cell(value: String, seed: u64, mut cfg: RunConfig) -> Result<SweepCell> {
    cfg.seed = seed;
    cfg.name = format!("{}-{value}-seed{seed}", cfg.name);
    log::info!("sweep cell {}", cfg.name);
    let train = train(&cfg)?;
    let eval = evaluate(&train.checkpoint, &cfg)?;
    Ok(SweepCell {
        value,
        seed,
        config: cfg,
        train,
        eval,
    })
}

/// Trains and evaluates every (axis value, seed) pair from `cfg.sweep`.
/// Results do not depend on whether cells run in parallel.
pub fn sweep(cfg: &RunConfig, axis: SweepAxis) -> Result<SweepReport> {
    cfg.validate()?;
    let jobs: Vec<(String, u64, RunConfig)> = axis
        .values(cfg)
        .into_iter()
        .flat_map(|(label, c)| cfg.sweep.seeds.iter().map(move |&s| (label.clone(), s, c.clone())))
        .collect();
    let cells = if cfg.sweep.parallel {
        jobs.into_par_iter()
            .map(|(v, s, c)| run_cell(v, s, c))
            .collect::<Result<Vec<_>>>()?
    } else {
        jobs.into_iter()
            .map(|(v, s, c)| run_cell(v, s, c))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(SweepReport { axis, cells })
}
