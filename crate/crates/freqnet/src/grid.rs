//! Uniform frequency grids.

use ndarray::Array1;

use crate::error::{Error, Result};

/// A closed frequency interval sampled at `n_points` uniform positions.
///
/// All spectral data in this crate lives on such a grid. Integrals are
/// evaluated as Riemann sums with the uniform weight [`FrequencyGrid::step`]
/// attached to every sample, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    start: f64,
    stop: f64,
    n_points: usize,
}

/// Builds a uniform grid over `[start, stop]` with `n_points` samples.
pub fn make_grid(start: f64, stop: f64, n_points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(start, stop, n_points)
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, n_points: usize) -> Result<Self> {
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::config("grid bounds must be finite"));
        }
        if stop <= start {
            return Err(Error::config(format!(
                "grid stop ({stop}) must exceed start ({start})"
            )));
        }
        if n_points < 2 {
            return Err(Error::config(format!(
                "grid needs at least two points, got {n_points}"
            )));
        }
        Ok(FrequencyGrid {
            start,
            stop,
            n_points,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn span(&self) -> f64 {
        self.stop - self.start
    }

    /// Sample spacing; also the quadrature weight of every sample.
    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.n_points - 1) as f64
    }

    /// Position of sample `i`.
    ///
    /// Computed as `start + span * i/(n-1)` so that the midpoint of a
    /// symmetric grid is exact and `value(n-1) == stop`.
    pub fn value(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_points);
        self.start + self.span() * (i as f64 / (self.n_points - 1) as f64)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.stop
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.value(i))
    }

    pub fn to_array(&self) -> Array1<f64> {
        Array1::from_iter(self.values())
    }

    /// Index of the sample nearest to `x` (which must lie inside the grid).
    pub fn nearest_index(&self, x: f64) -> Result<usize> {
        if !self.contains(x) {
            return Err(Error::config(format!(
                "{x} lies outside the grid [{}, {}]",
                self.start, self.stop
            )));
        }
        let raw = (x - self.start) / self.step();
        Ok((raw.round() as usize).min(self.n_points - 1))
    }
}
