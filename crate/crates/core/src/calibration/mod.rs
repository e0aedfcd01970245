//! Terrain strength from intrusion measurements.
//!
//! Normal resistance comes from a disk pushed vertically into the bed
//! (`F = k_n * d * A`, fitted through the origin). Shear strength comes from
//! a plate dragged along the surface: the mean force over the quasi-static
//! plateau, divided by `width * depth^2`.

mod io;

pub use io::{
    parse_penetration_csv, parse_shear_csv, read_penetration_file, read_shear_file, sidecar_path,
};

use thiserror::Error;

use crate::model::{ModelError, ShearStrengthProfile};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("{0}")]
    InvalidRecord(String),
    #[error("{0}")]
    Fit(String),
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl CalibrationError {
    fn in_file(self, path: &std::path::Path) -> Self {
        match self {
            CalibrationError::File { .. } => self,
            other => CalibrationError::File {
                path: path.display().to_string(),
                message: other.to_string(),
            },
        }
    }
}

/// One disk-penetration run.
#[derive(Debug, Clone, PartialEq)]
pub struct PenetrationRecord {
    pub theta_deg: f64,
    /// (depth m, force N)
    pub samples: Vec<(f64, f64)>,
    pub probe_area: f64,
    /// Constant force offset subtracted from every sample.
    pub tare: f64,
}

impl PenetrationRecord {
    pub fn new(
        theta_deg: f64,
        samples: Vec<(f64, f64)>,
        probe_area: f64,
        tare: f64,
    ) -> Result<Self, CalibrationError> {
        if !(probe_area.is_finite() && probe_area > 0.0) {
            return Err(CalibrationError::InvalidRecord(format!(
                "probe area must be > 0, got {probe_area}"
            )));
        }
        check_finite(&samples, tare)?;
        if samples.iter().any(|s| s.0 < 0.0) {
            return Err(CalibrationError::InvalidRecord(
                "depths must be non-negative".into(),
            ));
        }
        check_increasing(&samples, "depths")?;
        Ok(PenetrationRecord {
            theta_deg,
            samples,
            probe_area,
            tare,
        })
    }
}

/// One plate-drag run.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearRecord {
    pub theta_deg: f64,
    /// (displacement m, force N)
    pub samples: Vec<(f64, f64)>,
    pub plate_width: f64,
    pub plate_depth: f64,
    /// Displacement window (start, end) treated as the plateau, inclusive.
    pub plateau_window: (f64, f64),
    pub tare: f64,
}

impl ShearRecord {
    /// Builds a record; `plateau_window = None` selects the final half of
    /// the displacement range.
    pub fn new(
        theta_deg: f64,
        samples: Vec<(f64, f64)>,
        plate_width: f64,
        plate_depth: f64,
        plateau_window: Option<(f64, f64)>,
        tare: f64,
    ) -> Result<Self, CalibrationError> {
        for (name, v) in [("plate width", plate_width), ("plate depth", plate_depth)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CalibrationError::InvalidRecord(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        check_finite(&samples, tare)?;
        check_increasing(&samples, "displacements")?;
        let (lo, hi) = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => return Err(CalibrationError::InvalidRecord("no samples".into())),
        };
        let window = plateau_window.unwrap_or((lo + 0.5 * (hi - lo), hi));
        if !(window.0 <= window.1 && window.0 >= lo && window.1 <= hi) {
            return Err(CalibrationError::InvalidRecord(format!(
                "plateau window [{}, {}] outside displacement range [{lo}, {hi}]",
                window.0, window.1
            )));
        }
        Ok(ShearRecord {
            theta_deg,
            samples,
            plate_width,
            plate_depth,
            plateau_window: window,
            tare,
        })
    }
}

fn check_finite(samples: &[(f64, f64)], tare: f64) -> Result<(), CalibrationError> {
    if !tare.is_finite()
        || samples
            .iter()
            .any(|s| !(s.0.is_finite() && s.1.is_finite()))
    {
        return Err(CalibrationError::InvalidRecord(
            "non-finite sample value".into(),
        ));
    }
    Ok(())
}

fn check_increasing(samples: &[(f64, f64)], what: &str) -> Result<(), CalibrationError> {
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(CalibrationError::InvalidRecord(format!(
            "{what} must be strictly increasing"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalFit {
    pub k_n: f64,
    /// Force per unit depth, `k_n * A`.
    pub slope: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares `F = slope * d` through the origin, `k_n = slope / A`.
pub fn fit_normal_resistance(rec: &PenetrationRecord) -> Result<NormalFit, CalibrationError> {
    let n = rec.samples.len();
    if n < 3 {
        return Err(CalibrationError::Fit(format!(
            "penetration fit needs at least 3 samples, got {n}"
        )));
    }
    let span = rec.samples[n - 1].0 - rec.samples[0].0;
    if !(span > 0.0) {
        return Err(CalibrationError::Fit("depth span is zero".into()));
    }
    let forces: Vec<f64> = rec.samples.iter().map(|s| s.1 - rec.tare).collect();
    let sxy: f64 = rec.samples.iter().zip(&forces).map(|(s, f)| s.0 * f).sum();
    let sxx: f64 = rec.samples.iter().map(|s| s.0 * s.0).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(CalibrationError::Fit(format!(
            "non-positive force-depth slope {slope}; data inconsistent with linear resistance"
        )));
    }
    let mean = forces.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = forces.iter().map(|f| (f - mean).powi(2)).sum();
    let ss_res: f64 = rec
        .samples
        .iter()
        .zip(&forces)
        .map(|(s, f)| (f - slope * s.0).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(NormalFit {
        k_n: slope / rec.probe_area,
        slope,
        r_squared,
        samples: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearFit {
    pub theta_deg: f64,
    pub k_s: f64,
    pub plateau_force: f64,
    pub plateau_samples: usize,
}

/// Mean plateau force over `width * depth^2`.
pub fn fit_shear_strength(rec: &ShearRecord) -> Result<ShearFit, CalibrationError> {
    let (lo, hi) = rec.plateau_window;
    let plateau: Vec<f64> = rec
        .samples
        .iter()
        .filter(|s| s.0 >= lo && s.0 <= hi)
        .map(|s| s.1 - rec.tare)
        .collect();
    if plateau.len() < 3 {
        return Err(CalibrationError::Fit(format!(
            "plateau window [{lo}, {hi}] holds {} samples, need at least 3",
            plateau.len()
        )));
    }
    let plateau_force = plateau.iter().sum::<f64>() / plateau.len() as f64;
    if !(plateau_force > 0.0) {
        return Err(CalibrationError::Fit(format!(
            "non-positive plateau force {plateau_force}"
        )));
    }
    Ok(ShearFit {
        theta_deg: rec.theta_deg,
        k_s: plateau_force / (rec.plate_width * rec.plate_depth * rec.plate_depth),
        plateau_force,
        plateau_samples: plateau.len(),
    })
}

#[derive(Debug, Clone)]
pub struct ProfileBuild {
    pub profile: ShearStrengthProfile,
    /// Per-record fits in input order.
    pub fits: Vec<ShearFit>,
    /// Angles (deg) where several records were averaged.
    pub merged_angles: Vec<f64>,
}

/// Fits every record and assembles a sorted `k_s(theta)` profile,
/// averaging records that share an angle.
pub fn build_profile(records: &[ShearRecord]) -> Result<ProfileBuild, CalibrationError> {
    let fits = records
        .iter()
        .map(fit_shear_strength)
        .collect::<Result<Vec<_>, _>>()?;
    let (profile, merged_angles) = profile_from_fits(&fits)?;
    Ok(ProfileBuild {
        profile,
        fits,
        merged_angles,
    })
}

fn profile_from_fits(
    fits: &[ShearFit],
) -> Result<(ShearStrengthProfile, Vec<f64>), CalibrationError> {
    let mut pairs: Vec<(f64, f64)> = fits.iter().map(|f| (f.theta_deg, f.k_s)).collect();
    // sorting by value too makes duplicate means independent of input order
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut samples = Vec::new();
    let mut merged = Vec::new();
    for group in pairs.chunk_by(|a, b| a.0 == b.0) {
        let mean = group.iter().map(|p| p.1).sum::<f64>() / group.len() as f64;
        if group.len() > 1 {
            merged.push(group[0].0);
        }
        samples.push((group[0].0, mean));
    }
    if samples.len() < 2 {
        return Err(CalibrationError::Fit(format!(
            "shear profile needs at least 2 distinct angles, got {}",
            samples.len()
        )));
    }
    Ok((ShearStrengthProfile::from_degrees(&samples)?, merged))
}

/// Mean `k_n` over several penetration fits.
pub fn combine_normal_fits(fits: &[NormalFit]) -> Result<f64, CalibrationError> {
    if fits.is_empty() {
        return Err(CalibrationError::Fit("no penetration records".into()));
    }
    Ok(fits.iter().map(|f| f.k_n).sum::<f64>() / fits.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SlopeAngle;

    fn linear_record(k_n: f64, area: f64) -> PenetrationRecord {
        let samples = (1..=20)
            .map(|i| {
                let d = i as f64 * 0.002;
                (d, k_n * d * area)
            })
            .collect();
        PenetrationRecord::new(0.0, samples, area, 0.0).unwrap()
    }

    fn shear_record(theta: f64, force: f64) -> ShearRecord {
        let samples = (0..=40).map(|i| (i as f64 * 0.005, force)).collect();
        ShearRecord::new(theta, samples, 0.01, 0.02, None, 0.0).unwrap()
    }

    #[test]
    fn exact_linear_penetration() {
        let fit = fit_normal_resistance(&linear_record(3e5, 1e-4)).unwrap();
        assert!((fit.k_n - 3e5).abs() / 3e5 < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_force_is_rejected() {
        let samples = (1..=5).map(|i| (i as f64 * 0.01, 0.0)).collect();
        let rec = PenetrationRecord::new(0.0, samples, 1e-4, 0.0).unwrap();
        assert!(matches!(
            fit_normal_resistance(&rec),
            Err(CalibrationError::Fit(_))
        ));
    }

    #[test]
    fn too_few_samples() {
        let rec = PenetrationRecord::new(0.0, vec![(0.01, 1.0), (0.02, 2.0)], 1e-4, 0.0).unwrap();
        assert!(fit_normal_resistance(&rec).is_err());
    }

    #[test]
    fn tare_is_subtracted() {
        let mut rec = linear_record(2e5, 1e-4);
        for s in &mut rec.samples {
            s.1 += 0.3;
        }
        rec.tare = 0.3;
        let fit = fit_normal_resistance(&rec).unwrap();
        assert!((fit.k_n - 2e5).abs() / 2e5 < 1e-12);
    }

    #[test]
    fn record_invariants() {
        assert!(PenetrationRecord::new(0.0, vec![(0.02, 1.0), (0.01, 2.0)], 1e-4, 0.0).is_err());
        assert!(PenetrationRecord::new(0.0, vec![(-0.01, 1.0)], 1e-4, 0.0).is_err());
        assert!(PenetrationRecord::new(0.0, vec![(0.01, 1.0)], 0.0, 0.0).is_err());
        let s = vec![(0.0, 1.0), (0.1, 1.0)];
        assert!(ShearRecord::new(0.0, s.clone(), 0.0, 0.02, None, 0.0).is_err());
        assert!(ShearRecord::new(0.0, s, 0.01, 0.02, Some((0.05, 0.2)), 0.0).is_err());
    }

    #[test]
    fn constant_plateau() {
        let fit = fit_shear_strength(&shear_record(0.0, 2.0)).unwrap();
        assert!((fit.plateau_force - 2.0).abs() < 1e-12);
        assert!((fit.k_s - 5e5).abs() / 5e5 < 1e-12);
    }

    #[test]
    fn ramp_plateau_mean() {
        // 1 -> 3 N linearly across the window [0.1, 0.2]
        let samples: Vec<_> = (0..=40)
            .map(|i| {
                let x = i as f64 * 0.005;
                let f = if x < 0.1 { 0.5 } else { 1.0 + 20.0 * (x - 0.1) };
                (x, f)
            })
            .collect();
        let rec = ShearRecord::new(0.0, samples, 0.01, 0.02, Some((0.1, 0.2)), 0.0).unwrap();
        let fit = fit_shear_strength(&rec).unwrap();
        assert!((fit.plateau_force - 2.0).abs() < 1e-9);
    }

    #[test]
    fn forty_percent_force_gives_forty_percent_strength() {
        let a = fit_shear_strength(&shear_record(0.0, 2.5)).unwrap();
        let b = fit_shear_strength(&shear_record(20.0, 1.0)).unwrap();
        assert!((b.k_s / a.k_s - 0.4).abs() < 1e-12);
    }

    #[test]
    fn empty_window_is_an_error() {
        let samples: Vec<_> = (0..=10).map(|i| (i as f64 * 0.01, 1.0)).collect();
        let rec = ShearRecord::new(0.0, samples, 0.01, 0.02, Some((0.031, 0.039)), 0.0).unwrap();
        assert!(fit_shear_strength(&rec).is_err());
        let neg: Vec<_> = (0..=10).map(|i| (i as f64 * 0.01, -1.0)).collect();
        let rec = ShearRecord::new(0.0, neg, 0.01, 0.02, None, 0.0).unwrap();
        assert!(fit_shear_strength(&rec).is_err());
    }

    #[test]
    fn profile_midpoint_clamp_and_merge() {
        // plate 0.01 x 0.02: k_s = F / 4e-6
        let recs = [
            shear_record(0.0, 2.0),
            shear_record(10.0, 1.6),
            shear_record(20.0, 0.8),
        ];
        let built = build_profile(&recs).unwrap();
        let p = &built.profile;
        let at = |d: f64| p.k_s_at(SlopeAngle::from_degrees(d).unwrap());
        assert!((at(15.0) - 3e5).abs() < 1e-6);
        assert!((at(30.0) - 2e5).abs() < 1e-6);
        assert!(built.merged_angles.is_empty());

        let dup = [
            shear_record(5.0, 1.6),
            shear_record(5.0, 2.4),
            shear_record(0.0, 2.0),
        ];
        let built = build_profile(&dup).unwrap();
        assert_eq!(built.merged_angles, vec![5.0]);
        assert!((built.profile.samples()[1].1 - 5e5).abs() < 1e-6);
    }

    #[test]
    fn profile_needs_two_angles() {
        let recs = [shear_record(10.0, 1.0), shear_record(10.0, 2.0)];
        assert!(build_profile(&recs).is_err());
    }
}
