//! Model and experiment parameters plus the derived world geometry.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the per-tick entry probability of a waiting migrant is derived from
/// `speed_intake`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IntakePolicy {
    /// Probability `speed_intake / 100` per waiting migrant per tick.
    Literal,
    /// Probability `(speed_intake / 100)^1.58`, so that speed 1 leaves about
    /// half of the migrants at home after 1000 ticks.
    Calibrated,
}

/// Exponent of the calibrated intake policy.
pub const CALIBRATED_EXPONENT: f64 = 1.58;

impl IntakePolicy {
    pub fn entry_probability(self, speed_intake: u32) -> f64 {
        let base = f64::from(speed_intake) / 100.0;
        match self {
            IntakePolicy::Literal => base,
            IntakePolicy::Calibrated => base.powf(CALIBRATED_EXPONENT),
        }
        .clamp(0.0, 1.0)
    }
}

impl fmt::Display for IntakePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntakePolicy::Literal => "literal",
            IntakePolicy::Calibrated => "calibrated",
        })
    }
}

impl FromStr for IntakePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "literal" => Ok(IntakePolicy::Literal),
            "calibrated" => Ok(IntakePolicy::Calibrated),
            other => Err(Error::Config(format!(
                "intake_policy must be `literal` or `calibrated`, got `{other}`"
            ))),
        }
    }
}

/// Every parameter of a single simulation run.
///
/// Conservatism values are plain `f64` here; the simulation converts them to
/// its scalar type when agents are created.
#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    pub number_local: usize,
    pub number_migrant: usize,
    /// Mean of the locals' initial conservatism, in [-1, 1].
    pub conservatism_local: f64,
    /// Mean of the migrants' initial conservatism, in [-1, 1].
    pub conservatism_migrant: f64,
    /// Standard deviation of the initial conservatism draw.
    pub init_sd: f64,
    /// Percentage in [1, 100].
    pub speed_intake: u32,
    pub intake_policy: IntakePolicy,
    pub ticks: u32,
    /// Requested grid width in cells; the left half is home, the right half host.
    pub grid_width: usize,
    pub grid_height: usize,
    /// Enlarge the grid (keeping its aspect ratio) until each region holds at
    /// least twice its peak population.
    pub auto_scale_grid: bool,
    pub happiness_threshold: f64,
    pub neighbor_radius: f64,
    /// Lower and upper clamp of non-frozen conservatism.
    pub conservatism_bounds: (f64, f64),
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            number_local: 500,
            number_migrant: 500,
            conservatism_local: 0.0,
            conservatism_migrant: 0.0,
            init_sd: 0.45,
            speed_intake: 1,
            intake_policy: IntakePolicy::Calibrated,
            ticks: 1000,
            grid_width: 52,
            grid_height: 26,
            auto_scale_grid: true,
            happiness_threshold: 0.5,
            neighbor_radius: 1.5,
            conservatism_bounds: (-1.0, 1.0),
            seed: 0,
        }
    }
}

impl SimParams {
    /// Desk-scale configuration: 200 locals, 200 migrants, 500 ticks.
    pub fn desk() -> Self {
        SimParams {
            number_local: 200,
            number_migrant: 200,
            ticks: 500,
            ..SimParams::default()
        }
    }

    /// Checks the parameter ranges and returns the grid geometry the run
    /// will use.
    pub fn validate(&self) -> Result<Geometry> {
        if !(1..=100).contains(&self.speed_intake) {
            return Err(Error::Config(format!(
                "speed_intake must be in [1, 100], got {}",
                self.speed_intake
            )));
        }
        let (lo, hi) = self.conservatism_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "conservatism_bounds must be finite with lower < upper, got ({lo}, {hi})"
            )));
        }
        for (name, v) in [
            ("conservatism_local", self.conservatism_local),
            ("conservatism_migrant", self.conservatism_migrant),
        ] {
            if !(lo..=hi).contains(&v) {
                return Err(Error::Config(format!(
                    "{name} must lie in [{lo}, {hi}], got {v}"
                )));
            }
        }
        if !(self.init_sd.is_finite() && self.init_sd >= 0.0) {
            return Err(Error::Config(format!(
                "init_sd must be finite and non-negative, got {}",
                self.init_sd
            )));
        }
        if !(0.0..=1.0).contains(&self.happiness_threshold) {
            return Err(Error::Config(format!(
                "happiness_threshold must lie in [0, 1], got {}",
                self.happiness_threshold
            )));
        }
        if !(self.neighbor_radius.is_finite() && self.neighbor_radius >= 1.0) {
            return Err(Error::Config(format!(
                "neighbor_radius must be at least 1, got {}",
                self.neighbor_radius
            )));
        }
        if self.grid_width < 2 || !self.grid_width.is_multiple_of(2) || self.grid_height == 0 {
            return Err(Error::Config(format!(
                "grid must have an even width >= 2 and a positive height, got {}x{}",
                self.grid_width, self.grid_height
            )));
        }
        Geometry::fit(self)
    }
}

/// Effective grid dimensions. Columns `[0, region_width)` are the home
/// region, columns `[region_width, 2 * region_width)` the host region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Geometry {
    pub width: usize,
    pub height: usize,
}

impl Geometry {
    fn fit(params: &SimParams) -> Result<Geometry> {
        let mut region_w = params.grid_width / 2;
        let mut height = params.grid_height;
        let host_peak = params.number_local + params.number_migrant;
        let home_peak = params.number_migrant;
        let need = 2 * host_peak.max(home_peak);

        if params.auto_scale_grid && region_w * height < need {
            let scale = (need as f64 / (region_w * height) as f64).sqrt();
            let (w0, h0) = (region_w as f64, height as f64);
            region_w = (w0 * scale).ceil() as usize;
            height = (h0 * scale).ceil() as usize;
            while region_w * height < need {
                if region_w * h0 as usize <= height * w0 as usize {
                    region_w += 1;
                } else {
                    height += 1;
                }
            }
        }

        let cells = region_w * height;
        for (region, population) in [("host", host_peak), ("home", home_peak)] {
            if 2 * population > cells {
                return Err(Error::RegionCapacity {
                    region,
                    population,
                    required: 2 * population,
                    available: cells,
                });
            }
        }
        Ok(Geometry {
            width: 2 * region_w,
            height,
        })
    }

    pub fn region_width(&self) -> usize {
        self.width / 2
    }

    pub fn host_x0(&self) -> usize {
        self.width / 2
    }

    pub fn region_cells(&self) -> usize {
        self.region_width() * self.height
    }
}
