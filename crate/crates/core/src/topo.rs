//! Volume and Euler-characteristic accounting: Gauss–Bonnet volumes of
//! hyperbolic manifolds, the four-dimensional Gauss–Bonnet density,
//! truncated volumes of model ends and the volume lost by filling.

use std::f64::consts::PI;

use serde::Serialize;

use crate::curvature::{curvature_closed_form, log_grid, loglog_fit, CurvaturePoint};
use crate::error::{Error, Result};
use crate::metrics::{CutoffSpec, FilledEnd, MetricKind, ProfileMetric};
use crate::quad::integrate;

const QUAD_TOL: f64 = 1e-13;

/// `vol = (-4 pi)^m m! / (2m)! chi` for a finite-volume hyperbolic
/// manifold of even dimension `n = 2m`.
pub fn hyperbolic_volume_gb(n: usize, chi: i64) -> Result<f64> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::Domain(format!("Gauss-Bonnet volume needs even n, got {n}")));
    }
    let m = n / 2;
    let sign = if m % 2 == 0 { 1 } else { -1 };
    if chi * sign <= 0 {
        return Err(Error::EulerSign { chi, half_dim: m });
    }
    // m! / (2m)! = 1 / ((m+1)(m+2)...(2m))
    let ratio = (m + 1..=2 * m).fold(1.0, |acc, k| acc / k as f64);
    Ok((-4.0 * PI).powi(m as i32) * ratio * chi as f64)
}

/// Gauss–Bonnet integrand `(|W|^2 - |z|^2/2 + s^2/24) / (8 pi^2)` in dimension 4.
pub fn gb4_density(c: &CurvaturePoint) -> Result<f64> {
    if c.n != 4 {
        return Err(Error::Domain(format!("Gauss-Bonnet density is four-dimensional, got n = {}", c.n)));
    }
    let s = c.scalar;
    Ok((c.weyl_sq() - 0.5 * c.traceless_ricci_sq + s * s / 24.0) / (8.0 * PI * PI))
}

/// The same density for an Einstein metric with `Ric = -3 g`:
/// `3 / (4 pi^2) + |W|^2 / (8 pi^2)`.
pub fn gb4_density_einstein(weyl_sq: f64) -> f64 {
    3.0 / (4.0 * PI * PI) + weyl_sq / (8.0 * PI * PI)
}

/// The 2π condition on the length of the filling curve.
pub fn two_pi_check(l_sigma: f64) -> bool {
    l_sigma >= 2.0 * PI
}

/// Filling a hyperbolic manifold leaves the Euler characteristic unchanged.
pub fn euler_filled(chi_n: i64) -> i64 {
    chi_n
}

/// Signature of the filled four-manifold.
pub fn signature_filled() -> i64 {
    0
}

fn check_range(g: &ProfileMetric, r_lo: f64, r_hi: f64) -> Result<()> {
    let (lo, hi) = g.radial_domain();
    if !(r_lo >= lo && r_hi <= hi && r_lo <= r_hi && r_hi.is_finite()) {
        return Err(Error::OutOfRange {
            what: "radial interval",
            value: if r_lo < lo || !(r_lo <= r_hi) { r_lo } else { r_hi },
            range: format!("[{lo}, {hi}] with finite upper end"),
        });
    }
    Ok(())
}

/// `area x (r_hi^{n-1} - r_lo^{n-1}) / (n-1)`.
pub fn truncated_volume_closed_form(g: &ProfileMetric, r_lo: f64, r_hi: f64) -> Result<f64> {
    check_range(g, r_lo, r_hi)?;
    let k = g.n() as i32 - 1;
    Ok(g.cross_section_area() * (r_hi.powi(k) - r_lo.powi(k)) / k as f64)
}

/// Volume of `r_lo <= r <= r_hi` by adaptive quadrature of the volume form.
pub fn truncated_volume_quadrature(g: &ProfileMetric, r_lo: f64, r_hi: f64) -> Result<f64> {
    check_range(g, r_lo, r_hi)?;
    let dens = |r: f64| {
        let f = g.f(r)[0];
        let warp = if f > 0.0 { (g.g_rr(r) * g.g_theta(r)).sqrt() } else { 1.0 };
        warp * g.volume_density(r)
    };
    Ok(g.cross_section_area() * integrate(dens, r_lo, r_hi, QUAD_TOL))
}

/// Closed form for the exact models, quadrature for glued profiles.
pub fn truncated_volume(g: &ProfileMetric, r_lo: f64, r_hi: f64) -> Result<f64> {
    match g.kind() {
        MetricKind::Glued => truncated_volume_quadrature(g, r_lo, r_hi),
        _ => truncated_volume_closed_form(g, r_lo, r_hi),
    }
}

/// Black-hole to cusp volume ratio below `r_match` at equal cross-section.
pub fn exact_volume_ratio(n: usize, r_plus: f64, r_match: f64) -> f64 {
    1.0 - (r_plus / r_match).powi(n as i32 - 1)
}

/// Volume lost by the filling, measured below the matching level:
/// `vol(cusp, r <= R) - vol(filled, r_+ <= r <= R)`.
pub fn end_defect(end: &FilledEnd, cutoff: CutoffSpec) -> Result<f64> {
    let glued = end.glue(cutoff)?;
    let r = end.r_match;
    let cusp = truncated_volume(&end.cusp, 0.0, r)?;
    let filled = truncated_volume(&glued, end.params.r_plus, r)?;
    Ok(cusp - filled)
}

/// The same defect in closed form: `area / (n-1) (1 - sqrt(1 - 2 m R^{1-n}))`.
pub fn end_defect_closed_form(n: usize, m: f64, r_match: f64, boundary_area: f64) -> f64 {
    let x = 2.0 * m * r_match.powi(1 - n as i32);
    boundary_area / (n as f64 - 1.0) * x / (1.0 + (1.0 - x).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumePiece {
    pub region: String,
    pub r_lo: f64,
    pub r_hi: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GbSample {
    pub r: f64,
    pub density: f64,
    pub density_einstein_split: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeReport {
    pub n: usize,
    pub r_match: f64,
    pub height: f64,
    pub pieces: Vec<VolumePiece>,
    pub total: f64,
    /// Cusp volume up to the same height.
    pub cusp_volume: f64,
    pub defect: f64,
    pub chi_n: Option<i64>,
    pub chi_m: Option<i64>,
    pub signature_m: Option<i64>,
    pub vol_n: Option<f64>,
    pub gb_density: Vec<GbSample>,
}

/// Volume bookkeeping for one filled end up to `height >= 2R`.
pub fn volume_report(end: &FilledEnd, cutoff: CutoffSpec, height: f64, chi_n: Option<i64>) -> Result<VolumeReport> {
    let r = end.r_match;
    if !(height >= 2.0 * r * (1.0 - 1e-12)) || !height.is_finite() {
        return Err(Error::OutOfRange {
            what: "height",
            value: height,
            range: format!("[{}, inf)", 2.0 * r),
        });
    }
    let height = height.max(2.0 * r);
    let glued = end.glue(cutoff)?;
    let rp = end.params.r_plus;
    let bounds = [
        ("black_hole", rp, 0.5 * r),
        ("annulus", 0.5 * r, 2.0 * r),
        ("cusp", 2.0 * r, height),
    ];
    let pieces = bounds
        .iter()
        .map(|&(region, lo, hi)| {
            Ok(VolumePiece {
                region: region.into(),
                r_lo: lo,
                r_hi: hi,
                volume: truncated_volume(&glued, lo, hi)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = pieces.iter().map(|p| p.volume).sum();
    let cusp_volume = truncated_volume(&end.cusp, 0.0, height)?;
    let defect = end_defect(end, cutoff)?;
    let n = end.n;
    let gb_density = if n == 4 {
        log_grid(rp * 1.01, 0.5 * r, 8)
            .into_iter()
            .map(|x| {
                let c = curvature_closed_form(&glued, x)?;
                Ok(GbSample {
                    r: x,
                    density: gb4_density(&c)?,
                    density_einstein_split: gb4_density_einstein(c.weyl_sq()),
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let vol_n = match chi_n {
        Some(chi) if n % 2 == 0 => Some(hyperbolic_volume_gb(n, chi)?),
        _ => None,
    };
    Ok(VolumeReport {
        n,
        r_match: r,
        height,
        pieces,
        total,
        cusp_volume,
        defect,
        chi_n,
        chi_m: chi_n.map(euler_filled),
        signature_m: (n == 4 && chi_n.is_some()).then(signature_filled),
        vol_n,
        gb_density,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectRow {
    pub n: usize,
    pub r_match: f64,
    pub delta: f64,
    /// Log-log slope against the neighbouring row.
    pub slope_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectTable {
    pub rows: Vec<DefectRow>,
    /// Least-squares log-log slope over all rows.
    pub slope: f64,
}

impl DefectTable {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].delta < w[0].delta)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,R,delta,slope_estimate\n");
        for r in &self.rows {
            s += &format!("{},{},{:e},{}\n", r.n, r.r_match, r.delta, r.slope_estimate);
        }
        s
    }
}

/// Defect of rectangular unit-area ends over a sweep of matching radii.
pub fn volume_defect(n: usize, m: f64, radii: &[f64], cutoff: CutoffSpec) -> Result<DefectTable> {
    if radii.len() < 2 {
        return Err(Error::DegenerateFit(format!("{} matching radii, at least 2 needed", radii.len())));
    }
    let deltas = radii
        .iter()
        .map(|&r| end_defect(&FilledEnd::rectangular(n, m, r, 1.0)?, cutoff))
        .collect::<Result<Vec<_>>>()?;
    let local = |i: usize, j: usize| (deltas[j] / deltas[i]).ln() / (radii[j] / radii[i]).ln();
    let rows = (0..radii.len())
        .map(|i| DefectRow {
            n,
            r_match: radii[i],
            delta: deltas[i],
            slope_estimate: if i == 0 { local(0, 1) } else { local(i - 1, i) },
        })
        .collect();
    let (slope, _) = loglog_fit(radii, &deltas, 2)?;
    Ok(DefectTable { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::tensor::Riemann;
    use crate::lattice::Lattice;
    use crate::metrics::{black_hole_metric, bh_params, cusp_metric};

    #[test]
    fn gauss_bonnet_volumes() {
        assert!((hyperbolic_volume_gb(4, 1).unwrap() - 13.159_472_534_785_811).abs() < 1e-12);
        assert!((hyperbolic_volume_gb(2, -2).unwrap() - 4.0 * PI).abs() < 1e-13);
        assert!((hyperbolic_volume_gb(4, 3).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
        // n = 6: -(64 pi^3) 3!/6! chi = -(8 pi^3 / 15) chi
        assert!((hyperbolic_volume_gb(6, -1).unwrap() - 8.0 * PI.powi(3) / 15.0).abs() < 1e-12);
        assert!(matches!(hyperbolic_volume_gb(4, -1), Err(Error::EulerSign { chi: -1, half_dim: 2 })));
        assert!(matches!(hyperbolic_volume_gb(4, 0), Err(Error::EulerSign { .. })));
        assert!(hyperbolic_volume_gb(3, 1).is_err());
    }

    #[test]
    fn gb_density_hyperbolic_and_sphere_product() {
        let h = CurvaturePoint::from_riemann(1.0, Riemann::constant(4, -1.0));
        let d = gb4_density(&h).unwrap();
        assert!((d - 3.0 / (4.0 * PI * PI)).abs() < 1e-15);
        assert!((d - 0.0759909).abs() < 5e-8);
        // density x volume of one Euler characteristic unit
        assert!((d * hyperbolic_volume_gb(4, 1).unwrap() - 1.0).abs() < 1e-12);
        let s3 = CurvaturePoint::from_riemann(1.0, Riemann::constant(3, 1.0));
        assert!(gb4_density(&s3).is_err());
    }

    #[test]
    fn gb_density_two_paths_on_black_hole() {
        let p = bh_params(4, 0.5, None).unwrap();
        let g = black_hole_metric(&p, &Lattice::identity(2)).unwrap();
        let c = curvature_closed_form(&g, 2.0).unwrap();
        assert!(c.traceless_ricci_sq < 1e-20);
        let full = gb4_density(&c).unwrap();
        let split = gb4_density_einstein(c.weyl_sq());
        assert!((full - split).abs() < 1e-8);
        assert!(c.weyl_sq() > 0.0);
    }

    #[test]
    fn two_pi() {
        assert!(two_pi_check(2.0 * PI));
        assert!(!two_pi_check(6.0));
        assert!(two_pi_check(7.0));
    }

    #[test]
    fn euler_identity() {
        for k in [-3, 0, 1, 17] {
            assert_eq!(euler_filled(k), k);
        }
    }

    #[test]
    fn truncated_volumes() {
        let cusp = cusp_metric(4, &Lattice::identity(3)).unwrap();
        assert!((truncated_volume(&cusp, 0.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((truncated_volume_quadrature(&cusp, 0.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-13);
        let p = bh_params(4, 0.5, None).unwrap();
        let bh = black_hole_metric(&p, &Lattice::identity(2)).unwrap();
        for (lo, hi) in [(1.0, 2.0), (1.0, 40.0), (3.0, 7.5)] {
            let a = truncated_volume_closed_form(&bh, lo, hi).unwrap();
            let b = truncated_volume_quadrature(&bh, lo, hi).unwrap();
            assert!((a - b).abs() <= 1e-9 * a, "{lo} {hi}");
        }
        assert!((exact_volume_ratio(4, 1.0, 2.0) - 0.875).abs() < 1e-15);
        let ratio = truncated_volume(&bh, 1.0, 2.0).unwrap()
            / (bh.cross_section_area() * truncated_volume(&cusp, 0.0, 2.0).unwrap() / cusp.cross_section_area());
        assert!((ratio - 0.875).abs() < 1e-14);
        assert!(truncated_volume(&bh, 0.5, 2.0).is_err());
        assert!(truncated_volume(&cusp, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn glued_volume_close_to_cusp() {
        let end = FilledEnd::rectangular(4, 0.5, 16.0, 1.0).unwrap();
        let rep = volume_report(&end, CutoffSpec::default(), 32.0, Some(1)).unwrap();
        let sum: f64 = rep.pieces.iter().map(|p| p.volume).sum();
        assert_eq!(sum, rep.total);
        assert!((rep.total / rep.cusp_volume - 1.0).abs() < 0.01);
        assert!(rep.defect > 0.0);
        assert_eq!(rep.chi_m, Some(1));
        assert_eq!(rep.gb_density.len(), 8);
        for s in &rep.gb_density {
            assert!((s.density - s.density_einstein_split).abs() < 1e-8);
        }
    }

    #[test]
    fn defect_decay() {
        for n in 3..=5 {
            let radii = [4.0, 8.0, 16.0, 32.0, 64.0];
            let t = volume_defect(n, 0.5, &radii, CutoffSpec::default()).unwrap();
            assert!(t.is_strictly_decreasing());
            assert!(t.rows.iter().all(|r| r.delta > 0.0));
            assert!((t.slope + (n as f64 - 1.0)).abs() < 0.1, "n={n} slope {}", t.slope);
            for row in &t.rows {
                let oracle = end_defect_closed_form(n, 0.5, row.r_match, 1.0);
                assert!((row.delta - oracle).abs() < 1e-6 * oracle, "n={n} R={}", row.r_match);
            }
        }
        assert!(volume_defect(4, 0.5, &[8.0], CutoffSpec::default()).is_err());
    }
}
