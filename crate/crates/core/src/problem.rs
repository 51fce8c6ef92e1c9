//! Physical and algorithmic parameters of a scattering run.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// The incident wave illuminating the obstacle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Incident {
    /// Field built from `H_0^{(1)}` so that the scattered field is known in
    /// closed form (the disk benchmark).
    Radial,
    /// Compressional plane wave `d exp(i kappa1 x.d)`.
    PlaneWave { direction: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub omega: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Radius of the artificial boundary circle.
    pub r: f64,
    /// Radius of a disk containing the obstacle, used for the truncation bound.
    pub r_hat: f64,
    /// DtN truncation order; `None` selects it from the truncation bound.
    pub truncation: Option<usize>,
    pub theta: f64,
    pub tolerance: f64,
    /// Target for the truncation bound when `truncation` is `None`.
    pub truncation_tolerance: f64,
    pub incident: Incident,
    pub max_iterations: usize,
    /// Stop the adaptive loop once the vertex count reaches this budget.
    pub max_dofs: Option<usize>,
}

impl ProblemConfig {
    /// Disk obstacle of radius 0.5 inside the unit circle.
    pub fn example1() -> Self {
        ProblemConfig {
            omega: PI,
            lambda: 2.0,
            mu: 1.0,
            r: 1.0,
            r_hat: 0.5,
            truncation: None,
            theta: 0.5,
            tolerance: 1e-3,
            truncation_tolerance: 1e-8,
            incident: Incident::Radial,
            max_iterations: 30,
            max_dofs: None,
        }
    }

    /// U-shaped obstacle inside the circle of radius 3.
    pub fn example2() -> Self {
        ProblemConfig {
            r: 3.0,
            r_hat: 2.31,
            incident: Incident::PlaneWave { direction: [1.0, 0.0] },
            ..Self::example1()
        }
    }

    /// Compressional wavenumber `omega / sqrt(lambda + 2 mu)`.
    pub fn kappa1(&self) -> f64 {
        self.omega / (self.lambda + 2.0 * self.mu).sqrt()
    }

    /// Shear wavenumber `omega / sqrt(mu)`.
    pub fn kappa2(&self) -> f64 {
        self.omega / self.mu.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidMaterial(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidMaterial(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.lambda + self.mu > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "lambda + mu must be positive, got {}",
                self.lambda + self.mu
            )));
        }
        if !(self.r_hat > 0.0 && self.r_hat < self.r) {
            return Err(Error::InvalidRadii(format!(
                "need 0 < R_hat < R, got R_hat = {}, R = {}",
                self.r_hat, self.r
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::ThetaOutOfRange(self.theta));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.truncation_tolerance > 0.0) {
            return Err(Error::Config("truncation tolerance must be positive".into()));
        }
        if let Incident::PlaneWave { direction } = self.incident {
            let len = (direction[0].powi(2) + direction[1].powi(2)).sqrt();
            if (len - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("incident direction must be a unit vector, |d| = {len}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_of_the_benchmark() {
        let c = ProblemConfig::example1();
        assert!((c.kappa1() - PI / 2.0).abs() < 1e-15);
        assert!((c.kappa2() - PI).abs() < 1e-15);
        assert!(c.kappa1() < c.kappa2());
        c.validate().unwrap();
        ProblemConfig::example2().validate().unwrap();
    }

    #[test]
    fn rejects_inconsistent_radii() {
        let c = ProblemConfig { r_hat: 2.0, r: 1.0, ..ProblemConfig::example1() };
        assert!(matches!(c.validate(), Err(Error::InvalidRadii(_))));
        let c = ProblemConfig { mu: 1.0, lambda: -1.5, ..ProblemConfig::example1() };
        assert!(matches!(c.validate(), Err(Error::InvalidMaterial(_))));
        let c = ProblemConfig { theta: 1.0, ..ProblemConfig::example1() };
        assert!(matches!(c.validate(), Err(Error::ThetaOutOfRange(_))));
    }
}
