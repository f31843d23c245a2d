//! Empirical quantile maps between a sample distribution and a normal or
//! uniform target.
//!
//! The empirical CDF places the `i`-th order statistic (0-based) at level
//! `(i + 0.5) / n`, interpolates linearly between neighbouring distinct
//! values and clamps to `0.5 / n` and `1 - 0.5 / n` outside the sample
//! range. A value equal to a run of tied sample points sits at the middle of
//! that run's level span. The inverse interpolates linearly over all stored
//! points, duplicates included, so it is flat across ties.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::{self, LineReader};
use crate::stats::{normal_cdf, normal_quantile};

const POSITION_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Standard normal, mean 0 and unit variance.
    Normal,
    /// Uniform on (0, 1).
    Uniform,
}

impl Target {
    fn name(self) -> &'static str {
        match self {
            Target::Normal => "normal",
            Target::Uniform => "uniform",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(Target::Normal),
            "uniform" => Some(Target::Uniform),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalQuantileMap {
    sorted: Vec<f64>,
    target: Target,
}

impl EmpiricalQuantileMap {
    pub fn fit(values: &[f64], target: Target) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "quantile map needs at least 2 values, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "quantile map input is not finite: {bad}"
            )));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalQuantileMap { sorted, target })
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn reference(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    fn level(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.sorted.len() as f64
    }

    /// Lowest and highest attainable quantile levels.
    pub fn level_bounds(&self) -> (f64, f64) {
        (self.level(0), self.level(self.sorted.len() - 1))
    }

    /// The empirical CDF value of `x`, always inside the level bounds.
    pub fn ecdf(&self, x: f64) -> f64 {
        let v = &self.sorted;
        let n = v.len();
        let below = v.partition_point(|&s| s < x);
        let upto = v.partition_point(|&s| s <= x);
        if upto > below {
            return (below + upto) as f64 / (2 * n) as f64;
        }
        if below == 0 {
            return self.level(0);
        }
        if below == n {
            return self.level(n - 1);
        }
        let (x0, x1) = (v[below - 1], v[below]);
        let (q0, q1) = (self.level(below - 1), self.level(below));
        q0 + (q1 - q0) * (x - x0) / (x1 - x0)
    }

    /// Empirical quantile function, the inverse of [`ecdf`](Self::ecdf).
    pub fn quantile(&self, q: f64) -> f64 {
        let v = &self.sorted;
        let n = v.len();
        if q <= self.level(0) {
            return v[0];
        }
        if q >= self.level(n - 1) {
            return v[n - 1];
        }
        let mut pos = q * n as f64 - 0.5;
        // Normal-target round trips perturb q in the last bits; snap so that
        // stored points invert exactly.
        if (pos - pos.round()).abs() < POSITION_SNAP {
            pos = pos.round();
        }
        let i = (pos.floor() as usize).min(n - 2);
        let frac = pos - i as f64;
        v[i] + frac * (v[i + 1] - v[i])
    }

    /// Maps `x` onto the target distribution.
    pub fn transform(&self, x: f64) -> f64 {
        let q = self.ecdf(x);
        match self.target {
            Target::Uniform => q,
            Target::Normal => normal_quantile(q),
        }
    }

    /// Maps a target-distribution value back into the sample's scale.
    pub fn inverse_transform(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::invalid(format!(
                "inverse transform of non-finite value {y}"
            )));
        }
        let q = match self.target {
            Target::Uniform => y,
            Target::Normal => normal_cdf(y),
        };
        Ok(self.quantile(q))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "quantile_map {} {}",
            self.target.name(),
            self.sorted.len()
        )?;
        for v in &self.sorted {
            writeln!(w, "{}", format::float(*v))?;
        }
        Ok(())
    }

    pub(crate) fn read_from<R: BufRead>(reader: &mut LineReader<R>) -> Result<Self> {
        let header = reader.keyed("quantile_map")?;
        if header.len() != 2 {
            return Err(reader.error("`quantile_map` expects a target and a count"));
        }
        let target = Target::parse(&header[0])
            .ok_or_else(|| reader.error(format!("unknown target `{}`", header[0])))?;
        let n: usize = reader.parse("n", &header[1])?;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let line = reader.require_line("a reference value")?;
            values.push(reader.parse::<f64>("value", line.trim())?);
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(reader.error("reference values are not sorted"));
        }
        EmpiricalQuantileMap::fit(&values, target).map_err(|e| reader.error(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = LineReader::new(path, std::io::BufReader::new(file));
        Self::read_from(&mut reader)
    }
}
