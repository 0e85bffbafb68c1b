//! Growth constants. Fractional values are relative to the environment
//! resolution and are turned into pixels by multiplying by it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Resolution of the goal, find and fairness environments.
pub const DEFAULT_RESOLUTION: u32 = 84;
/// Resolution of the shape environment (one digit image).
pub const SHAPE_RESOLUTION: u32 = 28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    /// Pixels that fractional parameters are scaled by.
    pub resolution: u32,
    /// Photons scattered at reset.
    pub light_density: usize,
    pub initial_light_width_frac: f64,
    /// Height of the initial stem.
    pub first_branch_height_frac: f64,
    /// Maximum new segments per plant per step.
    pub max_branching: usize,
    pub branch_length_frac: f64,
    pub thickness_frac: f64,
    pub radius_of_influence_px: f64,
    pub kill_distance_px: f64,
    /// Light movement per discrete action; also the width/radius increment.
    pub light_displacement_px: f64,
}

impl Default for GrowthParams {
    fn default() -> Self {
        Self::for_resolution(DEFAULT_RESOLUTION)
    }
}

impl GrowthParams {
    /// Default parameters scaled to a `resolution`-pixel environment.
    ///
    /// Radius of influence and kill distance default to three and one branch
    /// lengths respectively.
    pub fn for_resolution(resolution: u32) -> Self {
        let branch_length_frac = 0.1;
        let branch_length_px = branch_length_frac * f64::from(resolution);
        Self {
            resolution,
            light_density: 200,
            initial_light_width_frac: 0.25,
            first_branch_height_frac: 0.2,
            max_branching: 8,
            branch_length_frac,
            thickness_frac: 0.015,
            radius_of_influence_px: 3.0 * branch_length_px,
            kill_distance_px: branch_length_px,
            light_displacement_px: 5.0,
        }
    }

    fn scale(&self) -> f64 {
        f64::from(self.resolution)
    }

    pub fn branch_length_px(&self) -> f64 {
        self.branch_length_frac * self.scale()
    }

    /// Line thickness, floored at one pixel.
    pub fn thickness_px(&self) -> f64 {
        (self.thickness_frac * self.scale()).max(1.0)
    }

    pub fn initial_light_width_px(&self) -> f64 {
        self.initial_light_width_frac * self.scale()
    }

    pub fn first_branch_height_px(&self) -> f64 {
        self.first_branch_height_frac * self.scale()
    }

    /// Number of branch-length segments that make up the initial stem.
    pub fn stem_segments(&self) -> usize {
        ((self.first_branch_height_px() / self.branch_length_px()).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [
            ("initial_light_width_frac", self.initial_light_width_frac),
            ("first_branch_height_frac", self.first_branch_height_frac),
            ("branch_length_frac", self.branch_length_frac),
            ("thickness_frac", self.thickness_frac),
        ];
        for (name, v) in fractions {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        let pixels = [
            ("radius_of_influence_px", self.radius_of_influence_px),
            ("kill_distance_px", self.kill_distance_px),
            ("light_displacement_px", self.light_displacement_px),
        ];
        for (name, v) in pixels {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.resolution == 0 {
            return Err(Error::InvalidConfig("resolution must be positive".into()));
        }
        if self.max_branching == 0 {
            return Err(Error::InvalidConfig("max_branching must be at least 1".into()));
        }
        if self.kill_distance_px >= self.radius_of_influence_px {
            return Err(Error::InvalidConfig(format!(
                "kill_distance_px ({}) must be below radius_of_influence_px ({})",
                self.kill_distance_px, self.radius_of_influence_px
            )));
        }
        Ok(())
    }

    /// Short stable hash of the parameter values.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("params serialize");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_scale_with_resolution() {
        let p = GrowthParams::default();
        assert_eq!(p.light_density, 200);
        assert_eq!(p.max_branching, 8);
        assert!((p.branch_length_px() - 8.4).abs() < 1e-12);
        assert!((p.initial_light_width_px() - 21.0).abs() < 1e-12);
        assert!((p.first_branch_height_px() - 16.8).abs() < 1e-12);
        assert!((p.thickness_px() - 1.26).abs() < 1e-12);
        assert_eq!(p.stem_segments(), 2);
        assert_eq!(p.light_displacement_px, 5.0);
        p.validate().unwrap();

        let s = GrowthParams::for_resolution(SHAPE_RESOLUTION);
        assert!((s.branch_length_px() - 2.8).abs() < 1e-12);
        assert_eq!(s.thickness_px(), 1.0);
        assert_eq!(s.stem_segments(), 2);
        s.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let d = GrowthParams::default();
        let p = GrowthParams { kill_distance_px: d.radius_of_influence_px, ..d.clone() };
        assert!(matches!(p.validate(), Err(Error::InvalidConfig(_))));
        assert!(GrowthParams { branch_length_frac: 1.5, ..d.clone() }.validate().is_err());
        assert!(GrowthParams { light_displacement_px: 0.0, ..d }.validate().is_err());
    }

    #[test]
    fn fingerprint_tracks_values() {
        let a = GrowthParams::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.light_density = 201;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }
}
