//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured value, the tolerance and the wall-clock time.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads 1`
//! to see the lines in order and to time each criterion alone.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use dehnfill::bieberbach::{catalog_flat3, catalog_flat3_all, FLAT3_TAGS};
use dehnfill::curvature::{
    curvature_closed_form, curvature_fd_auto, glued_model, log_grid, loglog_fit, residual_decay, sup_weyl_near_horizon,
    weyl_lp, CurvaturePoint, Riemann,
};
use dehnfill::exact::{gcd_all, q, q_frac, QMat};
use dehnfill::lattice::{complete_basis, deform_flat_structure_exact, FillingCurve, Lattice};
use dehnfill::metrics::{beta_of_mass, black_hole_metric, bh_params, cusp_metric, horizon_radius, CutoffSpec};
use dehnfill::modes::{self, ModeClass, ModeInit};
use dehnfill::topo;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Check {
    id: u32,
    name: &'static str,
    budget: Duration,
    start: Instant,
    items: Vec<(String, bool)>,
}

impl Check {
    fn new(id: u32, name: &'static str, budget_s: f64) -> Self {
        Self {
            id,
            name,
            budget: Duration::from_secs_f64(budget_s),
            start: Instant::now(),
            items: Vec::new(),
        }
    }

    fn at_most(&mut self, what: &str, value: f64, tol: f64) {
        self.items.push((format!("{what} = {value:.3e} (tol {tol:.0e})"), value <= tol));
    }

    fn that(&mut self, what: &str, ok: bool) {
        self.items.push((what.to_string(), ok));
    }

    fn finish(self) {
        let t = self.start.elapsed();
        let in_time = t <= self.budget;
        let ok = in_time && self.items.iter().all(|(_, ok)| *ok);
        let mark = if ok { "PASS" } else { "FAIL" };
        let mut lines = vec![format!(
            "{mark} [{}] {}: {:.2} s (budget {:.0} s)",
            self.id,
            self.name,
            t.as_secs_f64(),
            self.budget.as_secs_f64()
        )];
        for (what, ok) in &self.items {
            lines.push(format!("       {} {what}", if *ok { "ok  " } else { "FAIL" }));
        }
        println!("{}", lines.join("\n"));
        assert!(ok, "criterion {} failed", self.id);
    }
}

fn models(n: usize) -> (dehnfill::metrics::ProfileMetric, dehnfill::metrics::ProfileMetric) {
    let cusp = cusp_metric(n, &Lattice::identity(n - 1)).unwrap();
    let bh = black_hole_metric(&bh_params(n, 0.5, None).unwrap(), &Lattice::identity(n - 2)).unwrap();
    (cusp, bh)
}

#[test]
fn c01_curvature_table_matches_fd_oracle() {
    let mut c = Check::new(1, "closed-form curvature vs finite differences, n = 3..7", 10.0);
    for n in 3..=7 {
        let (cusp, bh) = models(n);
        let rp = horizon_radius(n, 0.5);
        let mut worst = 0.0f64;
        for (g, grid) in [(&cusp, log_grid(0.2, 20.0, 20)), (&bh, log_grid(rp, 20.0, 20))] {
            for r in grid {
                let a = curvature_closed_form(g, r).unwrap();
                let b = curvature_fd_auto(g, r).unwrap();
                worst = worst.max(a.sectional_diff(&b));
            }
        }
        c.at_most(&format!("n={n} max |K_closed - K_fd|"), worst, 1e-6);
    }
    c.finish();
}

#[test]
fn c02_exact_models_are_einstein() {
    let mut c = Check::new(2, "Einstein residual of cusp and black hole, n = 3..7", 30.0);
    for n in 3..=7 {
        let (cusp, bh) = models(n);
        let rp = horizon_radius(n, 0.5);
        let mut worst = 0.0f64;
        for (g, grid) in [(&cusp, log_grid(0.2, 50.0, 40)), (&bh, log_grid(rp, 50.0, 40))] {
            for r in grid {
                worst = worst
                    .max(curvature_closed_form(g, r).unwrap().einstein_residual)
                    .max(curvature_fd_auto(g, r).unwrap().einstein_residual);
            }
        }
        c.at_most(&format!("n={n} max |Ric + (n-1) g|"), worst, 1e-6);
    }
    c.finish();
}

#[test]
fn c03_residual_decay_slope() {
    let mut c = Check::new(3, "glued residual decays like R^-(n-1)", 120.0);
    for n in 3..=5 {
        let fit = residual_decay(n, 0.5, &[8.0, 16.0, 32.0, 64.0], CutoffSpec::default(), 16).unwrap();
        c.at_most(&format!("n={n} slope {:.4}: |slope + {}|", fit.slope, n - 1), (fit.slope + (n as f64 - 1.0)).abs(), 0.3);
    }
    c.finish();
}

#[test]
fn c04_cone_angle_and_beta_law() {
    let mut c = Check::new(4, "cone angle 2 pi and beta'(m) < 0", 1.0);
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut slope_max = f64::NEG_INFINITY;
    for _ in 0..50 {
        let n = rng.random_range(3..=10);
        let m = 10f64.powf(rng.random_range(-2.0..1.5));
        let beta = beta_of_mass(n, m);
        worst = worst.max((modes::cone_angle(n, m, beta).unwrap() - 2.0 * PI).abs());
        // plain central difference, independent of the library helper
        let h = 1e-6 * m;
        let d = (beta_of_mass(n, m + h) - beta_of_mass(n, m - h)) / (2.0 * h);
        slope_max = slope_max.max(d).max(modes::dbeta_dm(n, m));
    }
    c.at_most("max |cone angle - 2 pi| over 50 random (n, m)", worst, 1e-10);
    c.that(&format!("max d beta / dm = {slope_max:.3e} < 0"), slope_max < 0.0);
    c.finish();
}

#[test]
fn c05_mode_solutions() {
    let mut c = Check::new(5, "mode ODEs: closed forms, bounded dimensions, 11 exponents", 30.0);
    for n in 3..=7 {
        let mut worst = 0.0f64;
        let mut dims = Vec::new();
        for class in ModeClass::ALL {
            for (h0, dh0) in [(1.0, 0.0), (0.0, 1.0), (1.0, -2.5)] {
                let init = ModeInit { r0: 1.0, h0, dh0 };
                let num = modes::integrate_mode(n, class, init, (0.1, 10.0), 200).unwrap();
                let exact: Vec<f64> = num
                    .iter()
                    .map(|s| modes::closed_form_solution(n, class, init, s.r).unwrap())
                    .collect();
                let scale = exact.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                let err = num.iter().zip(&exact).fold(0.0f64, |a, (s, x)| a.max((s.h - x).abs()));
                worst = worst.max(err / scale);
            }
            dims.push(modes::bounded_dimension_numeric(n, class, 1e4, 10.0).unwrap());
        }
        c.at_most(&format!("n={n} relative mode error on [0.1, 10]"), worst, 1e-6);
        c.that(&format!("n={n} bounded dimensions {dims:?} = [1, 0, 0]"), dims == [1, 0, 0]);
    }
    let e = modes::closed_form_modes(4, ModeClass::RadialRadial).unwrap().exponents;
    let s = 33f64.sqrt();
    let want = [(-3.0 + s) / 2.0, (-3.0 - s) / 2.0];
    let err = e.iter().zip(&want).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    c.at_most("n=4 11 exponents vs (-3 +- sqrt 33)/2", err, 1e-10);
    c.finish();
}

#[test]
fn c06_gauss_bonnet() {
    let mut c = Check::new(6, "Gauss-Bonnet in dimension four", 10.0);
    let hyp = CurvaturePoint::from_riemann(1.0, Riemann::constant(4, -1.0));
    c.at_most(
        "hyperbolic density - 3/(4 pi^2)",
        (topo::gb4_density(&hyp).unwrap() - 3.0 / (4.0 * PI * PI)).abs(),
        1e-10,
    );
    let (_, bh) = models(4);
    let rp = horizon_radius(4, 0.5);
    let mut worst = 0.0f64;
    for r in log_grid(rp, 30.0, 40) {
        let p = curvature_closed_form(&bh, r).unwrap();
        let full = topo::gb4_density(&p).unwrap();
        let split = topo::gb4_density_einstein(p.weyl_sq());
        worst = worst.max((full - split).abs());
    }
    c.at_most("black hole: full vs Einstein-split density", worst, 1e-8);
    c.at_most(
        "vol(chi = 1) - 4 pi^2 / 3",
        (topo::hyperbolic_volume_gb(4, 1).unwrap() - 4.0 * PI * PI / 3.0).abs(),
        1e-9,
    );
    c.finish();
}

#[test]
fn c07_weyl_lp_decay_and_horizon_floor() {
    let mut c = Check::new(7, "Weyl L^2 decay and horizon floor, n = 4", 30.0);
    let radii = [8.0, 16.0, 32.0, 64.0];
    let rp = horizon_radius(4, 0.5);
    let mut lp = Vec::new();
    let mut sup = Vec::new();
    for &r in &radii {
        let g = glued_model(4, 0.5, r, CutoffSpec::default()).unwrap();
        lp.push(weyl_lp(&g, 2.0).unwrap());
        sup.push(sup_weyl_near_horizon(&g, 0.5 * rp, 16).unwrap());
    }
    let slope = loglog_fit(&radii, &lp, 2).unwrap().0;
    c.at_most(&format!("slope {slope:.4}: |slope + 3|"), (slope + 3.0).abs(), 0.4);
    let floor = sup.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = sup.iter().copied().fold(0.0, f64::max) - floor;
    c.that(&format!("sup |W| near r_+ >= {floor:.4} > 0 across the sweep"), floor > 0.0);
    c.at_most("spread of sup |W| near r_+ across R", spread / floor, 1e-6);
    c.finish();
}

#[test]
fn c08_volume_defect() {
    let mut c = Check::new(8, "volume ratio and defect of a filled end", 30.0);
    let radii = [8.0, 16.0, 32.0, 64.0];
    for n in 3..=6 {
        let (cusp, bh) = models(n);
        let rp = horizon_radius(n, 0.5);
        let mut worst = 0.0f64;
        for &r in &radii {
            let vb = topo::truncated_volume(&bh, rp, r).unwrap() / bh.cross_section_area();
            let vc = topo::truncated_volume(&cusp, 0.0, r).unwrap() / cusp.cross_section_area();
            // independent closed form: r^{n-1}/(n-1) below R, minus r_+^{n-1}/(n-1)
            let want = 1.0 - (rp / r).powi(n as i32 - 1);
            worst = worst.max((vb / vc - want).abs());
        }
        c.at_most(&format!("n={n} ratio - (1 - (r_+/R)^(n-1))"), worst, 1e-9);
        let t = topo::volume_defect(n, 0.5, &radii, CutoffSpec::default()).unwrap();
        c.that(
            &format!("n={n} defect positive and decreasing"),
            t.rows.iter().all(|r| r.delta > 0.0) && t.is_strictly_decreasing(),
        );
        c.at_most(&format!("n={n} defect slope {:.4}: |slope + {}|", t.slope, n - 1), (t.slope + (n as f64 - 1.0)).abs(), 0.1);
    }
    c.finish();
}

fn random_primitive(rng: &mut StdRng, d: usize) -> Vec<i64> {
    loop {
        let v: Vec<i64> = (0..d).map(|_| rng.random_range(-25..=25)).collect();
        if v.iter().any(|&x| x != 0) && gcd_all(&v) == 1 {
            return v;
        }
    }
}

fn random_gram(rng: &mut StdRng, d: usize) -> Lattice {
    let m: Vec<Vec<i64>> = (0..d).map(|_| (0..d).map(|_| rng.random_range(-2..=2)).collect()).collect();
    // M^T M + I is positive definite and integral
    let g = QMat::from_i64(d, d, |i, j| (0..d).map(|k| m[k][i] * m[k][j]).sum::<i64>() + i64::from(i == j));
    Lattice::from_rational(g).unwrap()
}

#[test]
fn c09_lattice_suite() {
    let mut c = Check::new(9, "1000 random completions and deformations, d <= 5", 10.0);
    let mut rng = StdRng::seed_from_u64(9);
    let (mut det_ok, mut proj_ok, mut rank_ok) = (0, 0, 0);
    let total = 1000;
    for _ in 0..total {
        let d = rng.random_range(2..=5);
        let l = random_gram(&mut rng, d);
        let s = FillingCurve::new(random_primitive(&mut rng, d)).unwrap();
        let b = complete_basis(&l, &s).unwrap();
        if b.det().abs() == 1 {
            det_ok += 1;
        }
        let s2 = l.inner(b.sigma(), b.sigma());
        if b.columns()[1..].iter().all(|bi| l.inner(bi, b.sigma()).abs() < s2) {
            proj_ok += 1;
        }
        let ranks: Vec<usize> = [q(0), q_frac(1, 3), q_frac(1, 2), q(1)]
            .iter()
            .map(|lam| deform_flat_structure_exact(&l, &b, lam).unwrap().rank())
            .collect();
        if ranks == [d - 1, d, d, d] {
            rank_ok += 1;
        }
    }
    c.that(&format!("|det| = 1 for {det_ok}/{total}"), det_ok == total);
    c.that(&format!("|<b_i, sigma>| < |sigma|^2 for {proj_ok}/{total}"), proj_ok == total);
    c.that(&format!("rank drops to d-1 exactly at lambda = 0 for {rank_ok}/{total}"), rank_ok == total);
    c.finish();
}

#[test]
fn c10_bieberbach_suite() {
    let mut c = Check::new(10, "flat 3-manifold catalog, admissibility and deformed relations", 30.0);
    let all = catalog_flat3_all();
    let valid = all.iter().filter(|g| g.validate().is_ok()).count();
    c.that(&format!("{valid}/{} catalog entries validate", FLAT3_TAGS.len()), valid == FLAT3_TAGS.len());
    let windows = [3.0, 6.0, 12.0];
    let mut witness = None;
    for g in &all {
        let tag = g.name.clone().unwrap_or_default();
        let counts: Vec<usize> = windows
            .iter()
            .map(|&w| g.enumerate_admissible(0.5, w).unwrap().len())
            .collect();
        let infinite = ["A", "B", "G", "H"].contains(&tag.as_str());
        if infinite {
            c.that(
                &format!("{tag}: admissible counts {counts:?} nonempty and growing"),
                counts[0] > 0 && counts.windows(2).all(|w| w[1] > w[0]),
            );
        } else {
            c.that(
                &format!("{tag}: admissible counts {counts:?} stabilize"),
                counts.windows(2).all(|w| w[1] == w[0]),
            );
        }
        // deformed relations stay exact for admissible sigma
        let mut exact = true;
        for rep in g.enumerate_admissible(0.5, 3.0).unwrap() {
            for (p, qd) in [(0, 1), (1, 4), (1, 2), (3, 4), (1, 1)] {
                let dg = g.deform_action(&rep.sigma, &q_frac(p, qd)).unwrap();
                exact &= dg.check_relations().unwrap().exact_zero;
            }
        }
        c.that(&format!("{tag}: deformed relations exactly zero"), exact);
        if tag == "B" {
            witness = Some(g.clone());
        }
    }
    // forced non-admissible witness on the half-turn space
    let b = witness.unwrap_or_else(|| catalog_flat3("B").unwrap());
    let s = FillingCurve::new(vec![1, 1, 0]).unwrap();
    let rep = b.is_admissible(&s).unwrap();
    let res = b.deform_action_unchecked(&s, &q_frac(1, 2)).unwrap().check_relations().unwrap();
    c.that("B: sigma = (1, 1, 0) is not admissible", !rep.verdict);
    c.that(
        &format!("B: forced deformation leaves residual {:.3e} > 0", res.max_residual),
        !res.exact_zero && res.max_residual > 0.0,
    );
    c.finish();
}
