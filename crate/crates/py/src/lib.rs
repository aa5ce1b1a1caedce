//! Python bindings for `dehnfill`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pymodule]
#[pyo3(name = "dehnfill")]
mod dehnfill_py {
    use super::err;
    use dehnfill::bieberbach::{self, BieberbachGroup};
    use dehnfill::curvature::{self, CurvaturePoint};
    use dehnfill::experiment::{self, Command, ExperimentConfig};
    use dehnfill::lattice::{self, FillingCurve as CoreCurve, Lattice as CoreLattice};
    use dehnfill::metrics::{self, CutoffSpec, FilledEnd, MetricKind, ProfileMetric};
    use dehnfill::modes::{self, ModeClass};
    use dehnfill::topo;
    use pyo3::prelude::*;

    /// Flat torus lattice given by its Gram matrix.
    #[pyclass(frozen, skip_from_py_object, module = "dehnfill")]
    #[derive(Clone)]
    struct Lattice(CoreLattice);

    #[pymethods]
    impl Lattice {
        #[new]
        fn new(gram: Vec<Vec<f64>>) -> PyResult<Self> {
            CoreLattice::from_rows(&gram).map(Lattice).map_err(err)
        }

        #[staticmethod]
        fn identity(d: usize) -> Self {
            Lattice(CoreLattice::identity(d))
        }

        #[getter]
        fn dim(&self) -> usize {
            self.0.dim()
        }

        #[getter]
        fn gram(&self) -> Vec<Vec<f64>> {
            let g = self.0.gram();
            (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect()
        }

        /// Covolume of the lattice.
        #[getter]
        fn area(&self) -> f64 {
            self.0.area()
        }

        fn inner(&self, x: Vec<i64>, y: Vec<i64>) -> PyResult<f64> {
            if x.len() != self.0.dim() || y.len() != self.0.dim() {
                return Err(err(format!("vectors must have length {}", self.0.dim())));
            }
            Ok(self.0.inner(&x, &y))
        }

        fn scaled(&self, c: f64) -> Self {
            Lattice(self.0.scaled(c))
        }

        fn __repr__(&self) -> String {
            format!("Lattice({:?})", self.gram())
        }
    }

    /// Primitive lattice vector naming the curve that bounds a disc.
    #[pyclass(frozen, eq, hash, skip_from_py_object, module = "dehnfill")]
    #[derive(Clone, PartialEq, Eq, Hash)]
    struct FillingCurve(CoreCurve);

    #[pymethods]
    impl FillingCurve {
        #[new]
        fn new(coeffs: Vec<i64>) -> PyResult<Self> {
            CoreCurve::new(coeffs).map(FillingCurve).map_err(err)
        }

        #[getter]
        fn coeffs(&self) -> Vec<i64> {
            self.0.coeffs().to_vec()
        }

        fn negated(&self) -> Self {
            FillingCurve(self.0.negated())
        }

        fn canonical(&self) -> Self {
            FillingCurve(self.0.canonical())
        }

        fn __repr__(&self) -> String {
            format!("FillingCurve({:?})", self.0.coeffs())
        }
    }

    #[pyfunction]
    fn curve_length(lattice: &Lattice, curve: &FillingCurve) -> PyResult<f64> {
        lattice::curve_length(&lattice.0, &curve.0).map_err(err)
    }

    /// Unimodular basis with `curve` first; returns the columns.
    #[pyfunction]
    fn complete_basis(lattice: &Lattice, curve: &FillingCurve) -> PyResult<Vec<Vec<i64>>> {
        lattice::complete_basis(&lattice.0, &curve.0)
            .map(|b| b.columns().to_vec())
            .map_err(err)
    }

    /// Gram matrix after shrinking `curve` by `lam`, in the completed basis.
    #[pyfunction]
    fn deform_flat_structure(lattice: &Lattice, curve: &FillingCurve, lam: f64) -> PyResult<Vec<Vec<f64>>> {
        let b = lattice::complete_basis(&lattice.0, &curve.0).map_err(err)?;
        let g = lattice::deform_flat_structure(&lattice.0, &b, lam).map_err(err)?.gram;
        Ok((0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect())
    }

    /// Canonical primitive vectors with length in `[lmin, lmax]`.
    #[pyfunction]
    fn enumerate_fillings(lattice: &Lattice, lmin: f64, lmax: f64) -> PyResult<Vec<FillingCurve>> {
        lattice::enumerate_fillings(&lattice.0, lmin, lmax)
            .map(|v| v.into_iter().map(FillingCurve).collect())
            .map_err(err)
    }

    /// Warped metric `dr^2/F + F dtheta^2 + r^2 g_flat` or the cusp.
    #[pyclass(frozen, module = "dehnfill")]
    struct Metric(ProfileMetric);

    #[pymethods]
    impl Metric {
        #[getter]
        fn n(&self) -> usize {
            self.0.n()
        }

        #[getter]
        fn kind(&self) -> &'static str {
            match self.0.kind() {
                MetricKind::Cusp => "cusp",
                MetricKind::BlackHole => "black_hole",
                MetricKind::Glued => "glued",
            }
        }

        #[getter]
        fn mass(&self) -> Option<f64> {
            self.0.mass()
        }

        #[getter]
        fn horizon(&self) -> Option<f64> {
            self.0.horizon()
        }

        #[getter]
        fn beta(&self) -> Option<f64> {
            self.0.beta()
        }

        #[getter]
        fn radial_domain(&self) -> (f64, f64) {
            self.0.radial_domain()
        }

        /// `(F, F', F'')` at `r`.
        fn f(&self, r: f64) -> (f64, f64, f64) {
            let [a, b, c] = self.0.f(r);
            (a, b, c)
        }

        fn volume_density(&self, r: f64) -> f64 {
            self.0.volume_density(r)
        }

        fn __repr__(&self) -> String {
            format!("Metric(kind={:?}, n={})", self.kind(), self.0.n())
        }
    }

    #[pyfunction]
    fn cusp_metric(n: usize, lattice: &Lattice) -> PyResult<Metric> {
        metrics::cusp_metric(n, &lattice.0).map(Metric).map_err(err)
    }

    /// Black hole of mass `m`; the core lattice defaults to the identity.
    #[pyfunction]
    #[pyo3(signature = (n, m, core=None))]
    fn black_hole_metric(n: usize, m: f64, core: Option<&Lattice>) -> PyResult<Metric> {
        let p = metrics::bh_params(n, m, None).map_err(err)?;
        let core = core.map_or_else(|| CoreLattice::identity(n.saturating_sub(2)), |l| l.0.clone());
        metrics::black_hole_metric(&p, &core).map(Metric).map_err(err)
    }

    /// Cusp glued to a black hole at `r_match`, unit boundary area.
    #[pyfunction]
    fn glued_metric(n: usize, m: f64, r_match: f64) -> PyResult<Metric> {
        curvature::glued_model(n, m, r_match, CutoffSpec::default())
            .map(Metric)
            .map_err(err)
    }

    /// Glued metric filling `curve` on the torus `lattice`.
    #[pyfunction]
    fn filled_metric(n: usize, m: f64, lattice: &Lattice, curve: &FillingCurve) -> PyResult<Metric> {
        let end = FilledEnd::new(n, m, &lattice.0, &curve.0).map_err(err)?;
        end.glue(CutoffSpec::default()).map(Metric).map_err(err)
    }

    #[pyfunction]
    fn match_radius(n: usize, m: f64, length: f64) -> PyResult<f64> {
        metrics::match_radius(n, m, length).map_err(err)
    }

    #[pyfunction]
    fn horizon_radius(n: usize, m: f64) -> f64 {
        metrics::horizon_radius(n, m)
    }

    #[pyfunction]
    fn beta_of_mass(n: usize, m: f64) -> f64 {
        metrics::beta_of_mass(n, m)
    }

    #[pyfunction]
    fn mass_from_beta(n: usize, beta: f64) -> PyResult<f64> {
        modes::mass_from_beta(n, beta).map_err(err)
    }

    #[pyfunction]
    fn cone_angle(n: usize, m: f64, beta: f64) -> PyResult<f64> {
        modes::cone_angle(n, m, beta).map_err(err)
    }

    #[pyclass(frozen, get_all, module = "dehnfill")]
    struct Curvature {
        r: f64,
        /// `(i, j, K_ij)` for each coordinate plane.
        sectional: Vec<(usize, usize, f64)>,
        ricci_eigs: Vec<f64>,
        scalar: f64,
        einstein_residual: f64,
        weyl_norm: f64,
    }

    #[pymethods]
    impl Curvature {
        #[getter]
        fn k_min(&self) -> f64 {
            self.sectional.iter().map(|s| s.2).fold(f64::INFINITY, f64::min)
        }

        #[getter]
        fn k_max(&self) -> f64 {
            self.sectional.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max)
        }
    }

    impl From<CurvaturePoint> for Curvature {
        fn from(c: CurvaturePoint) -> Self {
            Curvature {
                r: c.r,
                sectional: c.sectional.iter().map(|p| (p.plane[0], p.plane[1], p.k)).collect(),
                ricci_eigs: c.ricci_eigs,
                scalar: c.scalar,
                einstein_residual: c.einstein_residual,
                weyl_norm: c.weyl_norm,
            }
        }
    }

    /// Curvature at `r`, `method` is "closed" or "fd".
    #[pyfunction]
    #[pyo3(signature = (metric, r, method="closed"))]
    fn curvature_at(metric: &Metric, r: f64, method: &str) -> PyResult<Curvature> {
        let c = match method {
            "closed" => curvature::curvature_closed_form(&metric.0, r),
            "fd" => curvature::curvature_fd_auto(&metric.0, r),
            _ => return Err(err(format!("unknown method {method:?}, expected \"closed\" or \"fd\""))),
        };
        c.map(Curvature::from).map_err(err)
    }

    fn mode_class(s: &str) -> PyResult<ModeClass> {
        ModeClass::parse(s).ok_or_else(|| err(format!("unknown mode class {s:?}, expected \"ab\", \"1b\" or \"11\"")))
    }

    /// Indicial exponents of a mode class, larger first.
    #[pyfunction]
    fn mode_exponents(n: usize, class: &str) -> PyResult<(f64, f64)> {
        let c = modes::closed_form_modes(n, mode_class(class)?).map_err(err)?;
        Ok((c.exponents[0], c.exponents[1]))
    }

    /// Dimension of the bounded solutions, closed form and shooting.
    #[pyfunction]
    #[pyo3(signature = (n, class, r_escape=1e4, bound=10.0))]
    fn bounded_dimension(n: usize, class: &str, r_escape: f64, bound: f64) -> PyResult<(usize, usize)> {
        let c = mode_class(class)?;
        let exact = modes::closed_form_modes(n, c).map_err(err)?.bounded_dim;
        let numeric = modes::bounded_dimension_numeric(n, c, r_escape, bound).map_err(err)?;
        Ok((exact, numeric))
    }

    #[pyfunction]
    fn mode_solution(n: usize, class: &str, h0: f64, dh0: f64, r: f64) -> PyResult<f64> {
        let init = modes::ModeInit { r0: 1.0, h0, dh0 };
        modes::closed_form_solution(n, mode_class(class)?, init, r).map_err(err)
    }

    #[pyclass(frozen, get_all, module = "dehnfill")]
    struct Admissibility {
        curve: FillingCurve,
        length: f64,
        parallel_ok: Vec<bool>,
        core_free_ok: bool,
        verdict: bool,
        witness: Option<String>,
    }

    impl From<bieberbach::AdmissibilityReport> for Admissibility {
        fn from(a: bieberbach::AdmissibilityReport) -> Self {
            Admissibility {
                curve: FillingCurve(a.sigma),
                length: a.length,
                parallel_ok: a.parallel_ok,
                core_free_ok: a.core_free_ok,
                verdict: a.verdict,
                witness: a.witness,
            }
        }
    }

    /// Flat 3-manifold group with exact affine generators.
    #[pyclass(frozen, module = "dehnfill")]
    struct Group(BieberbachGroup);

    #[pymethods]
    impl Group {
        /// One of the ten closed flat 3-manifolds, tags "A".."J".
        #[staticmethod]
        fn catalog(tag: &str) -> PyResult<Self> {
            bieberbach::catalog_flat3(tag).map(Group).map_err(err)
        }

        /// Groups in the text format.
        #[staticmethod]
        fn parse(text: &str) -> PyResult<Vec<Group>> {
            bieberbach::parse_groups(text)
                .map(|v| v.into_iter().map(Group).collect())
                .map_err(err)
        }

        #[getter]
        fn label(&self) -> String {
            self.0.label()
        }

        #[getter]
        fn dim(&self) -> usize {
            self.0.dim()
        }

        #[getter]
        fn generators(&self) -> Vec<String> {
            self.0.generator_names()
        }

        #[getter]
        fn holonomy_order(&self) -> PyResult<usize> {
            self.0.holonomy_order().map_err(err)
        }

        #[getter]
        fn is_orientable(&self) -> bool {
            self.0.is_orientable()
        }

        /// Largest relation residual; zero means every relation holds exactly.
        fn relation_residual(&self) -> PyResult<f64> {
            self.0.check_relations().map(|r| r.max_residual).map_err(err)
        }

        fn is_admissible(&self, curve: &FillingCurve) -> PyResult<Admissibility> {
            self.0.is_admissible(&curve.0).map(Admissibility::from).map_err(err)
        }

        fn enumerate_admissible(&self, lmin: f64, lmax: f64) -> PyResult<Vec<Admissibility>> {
            self.0
                .enumerate_admissible(lmin, lmax)
                .map(|v| v.into_iter().map(Admissibility::from).collect())
                .map_err(err)
        }

        /// Group with `curve` shrunk by the rational `num/den`.
        fn deform(&self, curve: &FillingCurve, num: i64, den: i64) -> PyResult<Group> {
            if den == 0 {
                return Err(err("den must be non-zero"));
            }
            let lam = dehnfill::exact::q_frac(num, den);
            self.0.deform_action(&curve.0, &lam).map(Group).map_err(err)
        }

        fn to_text(&self) -> String {
            self.0.to_text()
        }

        fn __repr__(&self) -> String {
            format!("Group({:?})", self.0.label())
        }
    }

    /// Rows `(r_match, delta, slope)` of the volume defect at each matching radius.
    #[pyfunction]
    fn volume_defect(n: usize, m: f64, radii: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
        let t = topo::volume_defect(n, m, &radii, CutoffSpec::default()).map_err(err)?;
        Ok(t.rows.iter().map(|r| (r.r_match, r.delta, r.slope_estimate)).collect())
    }

    #[pyfunction]
    fn volume_defect_closed_form(n: usize, m: f64, r_match: f64, boundary_area: f64) -> f64 {
        topo::end_defect_closed_form(n, m, r_match, boundary_area)
    }

    #[pyfunction]
    fn hyperbolic_volume_gb(n: usize, chi: i64) -> PyResult<f64> {
        topo::hyperbolic_volume_gb(n, chi).map_err(err)
    }

    /// Run a sub-experiment and return the report as JSON. With `out`, the
    /// report, tables and plots are also written there.
    #[pyfunction]
    #[pyo3(signature = (command, config=None, out=None))]
    fn run_experiment(py: Python<'_>, command: &str, config: Option<&str>, out: Option<std::path::PathBuf>) -> PyResult<String> {
        let cmd = Command::ALL
            .into_iter()
            .find(|c| c.name() == command)
            .ok_or_else(|| err(format!("unknown command {command:?}")))?;
        let cfg = match config {
            Some(text) => ExperimentConfig::from_toml(text, "config").map_err(err)?,
            None => ExperimentConfig::for_command(cmd),
        };
        let report = py
            .detach(|| experiment::run(&cfg, cmd))
            .map_err(err)?;
        if let Some(dir) = out {
            report.write(&dir).map_err(err)?;
        }
        Ok(report.to_json())
    }

    #[pymodule_init]
    fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
        m.add("__version__", env!("CARGO_PKG_VERSION"))?;
        Ok(())
    }
}
