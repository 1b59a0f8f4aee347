//! Continuation of radius families across a sequence of parameter values.

use crate::regression::{log_log_fit, LinearFit};
use serde::Serialize;

/// One continued branch: parallel lists of `|τ|` and radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Family {
    pub taus: Vec<f64>,
    pub radii: Vec<f64>,
}

impl Family {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Log–log fit of radius against `|τ|`.
    pub fn fit(&self) -> Option<LinearFit> {
        if self.len() < 2 {
            return None;
        }
        log_log_fit(&self.taus, &self.radii).ok()
    }
}

/// Links the radii found at successive `|τ|` values into families.
///
/// Points are visited in order of increasing `|τ|`. Each radius joins the
/// family whose latest radius is nearest in `ln r`, provided that family has
/// not already taken a radius at this `|τ|`; ties go to the smaller radius.
/// Unmatched radii open new families.
pub fn track_families(points: &[(f64, Vec<f64>)]) -> Vec<Family> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].0.abs().total_cmp(&points[j].0.abs()));
    let mut families: Vec<Family> = Vec::new();
    for idx in order {
        let (tau, radii) = &points[idx];
        let mut sorted: Vec<f64> = radii.iter().copied().filter(|r| *r > 0.0).collect();
        sorted.sort_by(f64::total_cmp);
        let mut taken = vec![false; families.len()];
        // Candidate pairs sorted by distance, then by radius.
        let mut pairs: Vec<(f64, f64, usize, usize)> = Vec::new();
        for (ri, r) in sorted.iter().enumerate() {
            for (fi, fam) in families.iter().enumerate() {
                let last = *fam.radii.last().expect("families are never empty");
                pairs.push(((r.ln() - last.ln()).abs(), *r, ri, fi));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut assigned = vec![false; sorted.len()];
        for (_, r, ri, fi) in pairs {
            if assigned[ri] || taken[fi] {
                continue;
            }
            assigned[ri] = true;
            taken[fi] = true;
            families[fi].taus.push(tau.abs());
            families[fi].radii.push(r);
        }
        for (ri, r) in sorted.iter().enumerate() {
            if !assigned[ri] {
                families.push(Family { taus: vec![tau.abs()], radii: vec![*r] });
            }
        }
    }
    families
}

/// Acceptance rule for a family whose radius tends to zero with `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmergenceRule {
    pub min_points: usize,
    pub min_exponent: f64,
    pub min_r_squared: f64,
}

impl Default for EmergenceRule {
    fn default() -> Self {
        Self { min_points: 4, min_exponent: 0.05, min_r_squared: 0.95 }
    }
}

impl EmergenceRule {
    pub fn is_emerging(&self, family: &Family) -> bool {
        if family.len() < self.min_points {
            return false;
        }
        match family.fit() {
            Some(fit) => fit.slope > self.min_exponent && fit.r_squared >= self.min_r_squared,
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_power_law_branches_are_separated() {
        let points: Vec<(f64, Vec<f64>)> = (0..8)
            .map(|i| {
                let tau = 2e-6 * 10f64.powf(i as f64 * 3.0 / 7.0);
                let a = (tau / 2.0f64).cbrt();
                (tau, vec![2.0 * a.sqrt(), (4.0 * a / 3.0).sqrt()])
            })
            .collect();
        let fams = track_families(&points);
        assert_eq!(fams.len(), 2);
        for f in &fams {
            assert_eq!(f.len(), 8);
            assert!((f.fit().unwrap().slope - 1.0 / 6.0).abs() < 1e-12);
            assert!(EmergenceRule::default().is_emerging(f));
        }
    }

    #[test]
    fn persistent_branch_is_not_emerging() {
        let points: Vec<(f64, Vec<f64>)> =
            (0..8).map(|i| (1e-6 * 2f64.powi(i), vec![1.0 + 1e-9 * i as f64])).collect();
        let fams = track_families(&points);
        assert_eq!(fams.len(), 1);
        assert!(!EmergenceRule::default().is_emerging(&fams[0]));
    }

    #[test]
    fn late_branch_opens_new_family() {
        let points = vec![(1e-3, vec![0.5]), (1e-2, vec![0.5, 0.05])];
        let fams = track_families(&points);
        assert_eq!(fams.len(), 2);
        assert_eq!(fams[1].radii, vec![0.05]);
    }
}
