//! Special functions, quadrature, random variates and goodness-of-fit statistics.

mod gof;
mod quad;
mod special;
mod variates;

pub use gof::{
    cell_within_sigma, chi_square_gof, chi_square_independence, ks_distance, ks_distance_mixed,
    ks_two_sample, GofResult,
};
pub use quad::{adaptive_simpson, integrate, integrate_semi_infinite, tanh_sinh};
pub use special::{
    bessel_i, beta_fn, gamma, hyp0f1, ln_factorial, ln_gamma, macdonald_k, normalized_bessel_j, reg_lower_gamma,
    reg_upper_gamma, sinc,
};
pub use variates::{binomial_inversion, poisson_inversion, poisson_pmf};

use crate::error::{Error, Result};
use serde::Serialize;

/// Strictly increasing, finite, nonnegative evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("empty".into()));
        }
        if let Some(bad) = points.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidGrid(format!("point {bad} is not a finite nonnegative real")));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!("{} does not exceed {}", w[1], w[0])));
        }
        Ok(Grid { points })
    }

    /// `n` equally spaced points from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::InvalidGrid("empty".into())),
            1 => Grid::new(vec![start]),
            _ => {
                let step = (end - start) / (n - 1) as f64;
                Grid::new((0..n).map(|i| start + step * i as f64).collect())
            }
        }
    }

    /// `n` geometrically spaced points from `start` to `end` inclusive.
    pub fn geometric(start: f64, end: f64, n: usize) -> Result<Self> {
        if start <= 0.0 || n < 2 {
            return Err(Error::InvalidGrid("geometric grid needs start > 0 and n >= 2".into()));
        }
        let ratio = (end / start).ln() / (n - 1) as f64;
        Grid::new((0..n).map(|i| start * (ratio * i as f64).exp()).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max(&self) -> f64 {
        *self.points.last().expect("grid is nonempty")
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().copied()
    }
}
