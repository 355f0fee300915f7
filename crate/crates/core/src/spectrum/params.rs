use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::radial::{GridSpec, PairPotentialSpec, DEFAULT_RANGE_FRACTION};
use super::schmidt::{schmidt_decompose, CobosonPair, DecomposeOptions};
use super::{read_any, Provenance, SchmidtSpectrum};

/// Trap and interaction parameters. Lengths are in units of the trap length
/// unless `trap_length` is set otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub scattering_length: f64,
    pub trap_length: f64,
    pub trap_frequency: f64,
    pub pair_count: f64,
}

impl PhysicalParams {
    pub fn new(scattering_length: f64, trap_length: f64, trap_frequency: f64, pair_count: f64) -> Self {
        PhysicalParams {
            scattering_length,
            trap_length,
            trap_frequency,
            pair_count,
        }
    }

    /// Parameters with `(k_F a)^{-1} = inv_kfa` at `pair_count` pairs.
    pub fn from_inv_kfa(inv_kfa: f64, pair_count: f64, trap_length: f64) -> Result<Self> {
        if !(inv_kfa > 0.0) {
            return Err(Error::invalid("(k_F a)^-1 must be positive on the BEC side"));
        }
        let mut p = PhysicalParams::new(1.0, trap_length, 1.0, pair_count);
        p.scattering_length = 1.0 / (p.fermi_wavenumber() * inv_kfa);
        p.validate()?;
        Ok(p)
    }

    pub fn volume(&self) -> f64 {
        4.0 * PI * self.trap_length.powi(3) / 3.0
    }

    /// `k_F = (6π² n)^{1/3}` with pair density `n = N/V`.
    pub fn fermi_wavenumber(&self) -> f64 {
        (6.0 * PI * PI * self.pair_count / self.volume()).cbrt()
    }

    pub fn inv_kfa(&self) -> f64 {
        1.0 / (self.fermi_wavenumber() * self.scattering_length)
    }

    pub fn a_over_l(&self) -> f64 {
        self.scattering_length / self.trap_length
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scattering_length > 0.0 && self.scattering_length.is_finite()) {
            return Err(Error::invalid("scattering length must be positive (BEC side)"));
        }
        if !(self.trap_length > 0.0 && self.trap_frequency > 0.0) {
            return Err(Error::invalid("trap length and frequency must be positive"));
        }
        if !(self.pair_count >= 1.0) {
            return Err(Error::invalid("pair count must be at least 1"));
        }
        Ok(())
    }

    /// The pair model is only trusted for `(k_F a)^{-1} ≥ 0.5`.
    pub fn validate_for_solver(&self) -> Result<()> {
        self.validate()?;
        if self.inv_kfa() < 0.5 - 1e-12 {
            return Err(Error::invalid(format!(
                "(k_F a)^-1 = {:.4} is below 0.5, outside the strong-binding regime",
                self.inv_kfa()
            )));
        }
        Ok(())
    }
}

/// Names of the shipped spectra, labelled by `(k_F a)^{-1}`.
pub const PRESET_NAMES: [&str; 3] = ["0.5", "1", "2"];

/// Pair number at which the preset labels fix `k_F`.
pub const PRESET_REFERENCE_PAIRS: f64 = 20.0;

pub fn preset_names() -> &'static [&'static str] {
    &PRESET_NAMES
}

/// Solver inputs for one value of `(k_F a)^{-1}`.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub inv_kfa: f64,
    pub params: PhysicalParams,
    pub range_fraction: f64,
    /// Kernel grid for the Schmidt decomposition.
    pub kernel_grid: GridSpec,
    /// Relative-motion grid.
    pub radial_grid: GridSpec,
}

/// Kernel spacing as a fraction of the molecular length `a/√6`.
const KERNEL_SPACING: f64 = 0.7;
const KERNEL_EXTENT: f64 = 6.0;
const RADIAL_EXTENT: f64 = 8.0;
const RADIAL_POINTS_PER_RANGE: f64 = 60.0;

impl SolverConfig {
    /// Default grids for `(k_F a)^{-1} = inv_kfa` with `k_F` fixed at
    /// `reference_pairs` pairs in a unit trap.
    pub fn new(inv_kfa: f64, reference_pairs: f64) -> Result<Self> {
        let params = PhysicalParams::from_inv_kfa(inv_kfa, reference_pairs, 1.0)?;
        params.validate_for_solver()?;
        let a = params.scattering_length;
        let h = KERNEL_SPACING * a / 6f64.sqrt();
        let range = DEFAULT_RANGE_FRACTION * a;
        Ok(SolverConfig {
            inv_kfa,
            params,
            range_fraction: DEFAULT_RANGE_FRACTION,
            kernel_grid: GridSpec::new((KERNEL_EXTENT / h).round() as usize, KERNEL_EXTENT),
            radial_grid: GridSpec::new(
                (RADIAL_EXTENT / (range / RADIAL_POINTS_PER_RANGE)).ceil() as usize,
                RADIAL_EXTENT,
            ),
        })
    }

    /// Runs the radial solver and the Schmidt decomposition. `label` is
    /// recorded in the provenance.
    pub fn solve(&self, label: &str) -> Result<SchmidtSpectrum> {
        self.params.validate_for_solver()?;
        let a = self.params.scattering_length;
        let potential = PairPotentialSpec::calibrated(a, self.range_fraction)?;
        let radial = super::radial::solve_two_body(&self.params, &potential, &self.radial_grid, 0, 1)?;
        let ground = radial[0].ground();
        let PairPotentialSpec::GaussianWell { depth, range } = potential else {
            unreachable!("calibrated potentials are Gaussian wells")
        };
        let provenance = Provenance::new("solver")
            .with("preset", label)
            .with("inv_kfa", self.inv_kfa)
            .with("reference_pairs", self.params.pair_count)
            .with("a_over_l", a)
            .with("potential", "gaussian-well")
            .with("depth", depth)
            .with("range", range)
            .with("scattering_length_diagnostic", super::radial::scattering_length(&potential))
            .with("relative_ground_energy", ground.energy)
            .with("radial_points", self.radial_grid.points)
            .with("kernel_points", self.kernel_grid.points)
            .with("kernel_extent", self.kernel_grid.r_max);
        let pair = CobosonPair::new(ground, &self.radial_grid, 1e-13, provenance);
        schmidt_decompose(&pair, &DecomposeOptions::new(self.kernel_grid))
    }
}

/// A named solver configuration together with its shipped spectrum.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub config: SolverConfig,
    fixture: &'static str,
}

const FIXTURE_05: &str = include_str!("../../presets/preset-0.5.csv");
const FIXTURE_1: &str = include_str!("../../presets/preset-1.csv");
const FIXTURE_2: &str = include_str!("../../presets/preset-2.csv");

pub fn preset(name: &str) -> Result<Preset> {
    let (name, inv_kfa, fixture) = match name {
        "0.5" => ("0.5", 0.5, FIXTURE_05),
        "1" => ("1", 1.0, FIXTURE_1),
        "2" => ("2", 2.0, FIXTURE_2),
        other => {
            return Err(Error::invalid(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        name,
        config: SolverConfig::new(inv_kfa, PRESET_REFERENCE_PAIRS)?,
        fixture,
    })
}

impl Preset {
    pub fn inv_kfa(&self) -> f64 {
        self.config.inv_kfa
    }

    /// The shipped spectrum.
    pub fn spectrum(&self) -> Result<SchmidtSpectrum> {
        read_any(self.fixture.as_bytes())
    }

    /// Reruns the solver with the preset configuration.
    pub fn solve(&self) -> Result<SchmidtSpectrum> {
        self.config.solve(self.name)
    }
}
