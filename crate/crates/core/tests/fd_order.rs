//! Plain central differences converge at second order in the step.

use dehnfill::curvature::{curvature_closed_form, curvature_fd_with, FdOptions, Stencil};
use dehnfill::lattice::Lattice;
use dehnfill::metrics::{bh_params, black_hole_metric, cusp_metric, ProfileMetric};

fn observed_order(g: &ProfileMetric, r: f64) -> f64 {
    let exact = curvature_closed_form(g, r).unwrap();
    let err = |h: f64| {
        let opts = FdOptions {
            h,
            stencil: Stencil::Three,
            richardson: false,
        };
        curvature_fd_with(g, r, &opts).unwrap().sectional_diff(&exact)
    };
    let h = 4e-2 * r;
    (err(h) / err(h / 2.0)).log2()
}

#[test]
fn three_point_stencil_is_second_order() {
    for n in 3..=7 {
        let bh = black_hole_metric(&bh_params(n, 0.5, None).unwrap(), &Lattice::identity(n - 2)).unwrap();
        let cusp = cusp_metric(n, &Lattice::identity(n - 1)).unwrap();
        for (name, g, r) in [("black hole", &bh, 2.0), ("black hole", &bh, 5.0), ("cusp", &cusp, 0.7), ("cusp", &cusp, 3.0)] {
            let p = observed_order(g, r);
            println!("n={n} {name} r={r}: order {p:.3}");
            assert!((1.8..=2.2).contains(&p), "n={n} {name} r={r}: observed order {p}");
        }
    }
}
