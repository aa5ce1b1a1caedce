//! Config-driven experiments: each sub-experiment runs one module's checks
//! over a parameter sweep and returns a [`Report`] with result tables,
//! verdicts against the configured tolerances and optional plots.

pub mod config;
pub mod plot;

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bieberbach::{self, BieberbachGroup};
use crate::curvature::{
    self, curvature_bounds, curvature_closed_form, curvature_fd_auto, log_grid, loglog_fit, residual_decay, weyl_lp,
    CurvaturePoint, Riemann,
};
use crate::error::Error;
use crate::exact::q_frac;
use crate::lattice::{curve_length, enumerate_fillings, FillingCurve, Lattice};
use crate::metrics::{self, black_hole_metric, bh_params, cusp_metric, CutoffSpec, FilledEnd, ProfileMetric};
use crate::modes::{self, ModeClass, ModeInit};
use crate::topo;

pub use config::{Command, ConfigError, ExperimentConfig};
pub use plot::{Plot, PlotKind, Series};

pub const SCHEMA_VERSION: u32 = 1;

/// A named table, written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let cell = |v: &Value| match v {
            Value::String(s) if s.contains([',', '"']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        };
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s += &r.iter().map(cell).collect::<Vec<_>>().join(",");
            s.push('\n');
        }
        s
    }
}

/// One pass/fail check against a declared tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    /// The property being tested.
    pub invariant: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    /// Table and row of the worst case.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<String>,
}

impl Verdict {
    fn at_most(name: &str, invariant: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            invariant: invariant.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            row: None,
        }
    }

    fn flag(name: &str, invariant: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            invariant: invariant.into(),
            passed: ok,
            value: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            row: None,
        }
    }

    fn at(mut self, row: Option<String>) -> Self {
        if !self.passed {
            self.row = row;
        }
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: ExperimentConfig,
    pub results: Value,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    pub plots: Vec<String>,
    pub wall_clock_s: f64,
    #[serde(skip)]
    pub plot_data: Vec<(String, Plot)>,
}

impl Report {
    /// Report JSON without the wall-clock field: identical across runs.
    pub fn payload(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(m) = &mut v {
            m.remove("wall_clock_s");
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.passed).collect()
    }

    /// Writes `report.json`, one CSV per table and the SVG plots into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let p = dir.join("report.json");
        std::fs::write(&p, self.to_json() + "\n")?;
        out.push(p);
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            std::fs::write(&p, t.to_csv())?;
            out.push(p);
        }
        for (name, plot) in &self.plot_data {
            let svg = plot
                .to_svg()
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
            let p = dir.join(name);
            std::fs::write(&p, svg)?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Why a run did not produce a report.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numeric(Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid config: {e}"),
            RunError::Numeric(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numeric(e)
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

type Run = std::result::Result<Output, RunError>;

#[derive(Default)]
struct Output {
    results: Value,
    tables: Vec<Table>,
    verdicts: Vec<Verdict>,
    plots: Vec<(String, Plot)>,
}

/// Validates the config and runs `command`.
pub fn run(cfg: &ExperimentConfig, command: Command) -> std::result::Result<Report, RunError> {
    run_with_source(cfg, command, "config")
}

pub fn run_with_source(cfg: &ExperimentConfig, command: Command, source: &str) -> std::result::Result<Report, RunError> {
    cfg.validate(command, source)?;
    let start = Instant::now();
    let out = match command {
        Command::CurvatureCheck => curvature_check(cfg)?,
        Command::ResidualDecay => residual_decay_run(cfg)?,
        Command::Modes => modes_run(cfg)?,
        Command::Admissible => admissible_run(cfg, source)?,
        Command::Volume => volume_run(cfg)?,
        Command::GlueInspect => glue_inspect(cfg)?,
        Command::Sweep => sweep(cfg)?,
    };
    let plots = if cfg.output.plots { out.plots } else { Vec::new() };
    let passed = out.verdicts.iter().all(|v| v.passed);
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool: "dehnfill".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        config: cfg.clone(),
        results: out.results,
        tables: out.tables,
        verdicts: out.verdicts,
        passed,
        plots: plots.iter().map(|(n, _)| n.clone()).collect(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        plot_data: plots,
    })
}

fn worst<T>(items: &[T], key: impl Fn(&T) -> f64) -> (f64, Option<usize>) {
    items.iter().enumerate().fold((0.0, None), |(w, at), (i, x)| {
        let v = key(x);
        if v > w || (at.is_none() && v >= w) || v.is_nan() {
            (if v.is_nan() { f64::INFINITY } else { v }, Some(i))
        } else {
            (w, at)
        }
    })
}

fn row_ref(table: &str, i: Option<usize>) -> Option<String> {
    i.map(|i| format!("{table}[{i}]"))
}

struct CurvRow {
    n: usize,
    kind: &'static str,
    r: f64,
    k_min: f64,
    k_max: f64,
    fd_diff: f64,
    residual_closed: f64,
    residual_fd: f64,
}

fn curvature_rows(g: &ProfileMetric, kind: &'static str, grid: &[f64]) -> crate::Result<Vec<CurvRow>> {
    grid.par_iter()
        .map(|&r| {
            let c = curvature_closed_form(g, r)?;
            let f = curvature_fd_auto(g, r)?;
            Ok(CurvRow {
                n: g.n(),
                kind,
                r,
                k_min: c.k_min(),
                k_max: c.k_max(),
                fd_diff: c.sectional_diff(&f),
                residual_closed: c.einstein_residual,
                residual_fd: f.einstein_residual,
            })
        })
        .collect()
}

fn curvature_check(cfg: &ExperimentConfig) -> Run {
    let dims = cfg.dims();
    let t = &cfg.tolerances;
    let per_n: Vec<crate::Result<(Vec<CurvRow>, curvature::CurvatureBounds)>> = dims
        .par_iter()
        .map(|&n| {
            let rp = metrics::horizon_radius(n, cfg.mass);
            let lo = cfg.grid.r_min.max(rp);
            let grid = log_grid(lo, cfg.grid.r_max.max(2.0 * lo), cfg.grid.points);
            let cusp = cusp_metric(n, &Lattice::identity(n - 1))?;
            let bh = black_hole_metric(&bh_params(n, cfg.mass, None)?, &Lattice::identity(n - 2))?;
            let mut rows = curvature_rows(&cusp, "cusp", &grid)?;
            rows.extend(curvature_rows(&bh, "black_hole", &grid)?);
            let bounds = curvature_bounds(&bh, &grid)?;
            Ok((rows, bounds))
        })
        .collect();
    let mut table = Table::new(
        "curvature",
        &["n", "kind", "r", "k_min", "k_max", "fd_diff", "residual_closed", "residual_fd"],
    );
    let mut all = Vec::new();
    let mut bounds_json = Vec::new();
    let mut verdicts = Vec::new();
    for (n, res) in dims.iter().zip(per_n) {
        let (rows, b) = res?;
        verdicts.push(Verdict::at_most(
            &format!("curvature-bounds-n{n}"),
            "black-hole sectional curvatures lie within the dimension's limits",
            b.excess(),
            t.curvature_slack,
        ));
        bounds_json.push(json!({"n": n, "k_min": b.k_min, "k_max": b.k_max, "lower": b.lower, "upper": b.upper}));
        all.extend(rows);
    }
    for r in &all {
        table.rows.push(vec![
            json!(r.n),
            json!(r.kind),
            json!(r.r),
            json!(r.k_min),
            json!(r.k_max),
            json!(r.fd_diff),
            json!(r.residual_closed),
            json!(r.residual_fd),
        ]);
    }
    let (fd, at) = worst(&all, |r| r.fd_diff);
    verdicts.insert(
        0,
        Verdict::at_most("fd-agreement", "closed-form sectional curvatures match the finite-difference oracle", fd, t.fd)
            .at(row_ref("curvature", at)),
    );
    let (res, at) = worst(&all, |r| r.residual_closed.max(r.residual_fd));
    verdicts.insert(
        1,
        Verdict::at_most("einstein-residual", "|Ric + (n-1) g| vanishes on the exact models", res, t.residual)
            .at(row_ref("curvature", at)),
    );
    Ok(Output {
        results: json!({"dims": dims, "max_fd_diff": fd, "max_residual": res, "bounds": bounds_json}),
        tables: vec![table],
        verdicts,
        plots: Vec::new(),
    })
}

fn decay_plot(title: &str, y_label: &str, fits: &[(usize, Vec<f64>, Vec<f64>)]) -> Plot {
    let mut series = Vec::new();
    for (n, xs, ys) in fits {
        series.push(Series::new(format!("n = {n}"), xs.iter().copied().zip(ys.iter().copied()).collect()));
    }
    for (n, xs, ys) in fits {
        if let (Some(&x0), Some(&y0), Some(&x1)) = (xs.first(), ys.first(), xs.last()) {
            let k = -(*n as f64 - 1.0);
            series.push(Series::new(format!("slope {k}"), vec![(x0, y0), (x1, y0 * (x1 / x0).powf(k))]).dashed());
        }
    }
    Plot {
        title: title.into(),
        x_label: "matching radius R".into(),
        y_label: y_label.into(),
        kind: PlotKind::LogLog,
        series,
    }
}

fn residual_decay_run(cfg: &ExperimentConfig) -> Run {
    let dims = cfg.dims();
    let radii = cfg.radii();
    let cutoff = CutoffSpec { shape: cfg.cutoff };
    let fits = dims
        .par_iter()
        .map(|&n| residual_decay(n, cfg.mass, &radii, cutoff, cfg.grid.samples))
        .collect::<crate::Result<Vec<_>>>()?;
    let mut table = Table::new("decay", &["n", "R", "sup_residual"]);
    let mut verdicts = Vec::new();
    for f in &fits {
        for (r, s) in f.radii.iter().zip(&f.sup_residual) {
            table.rows.push(vec![json!(f.n), json!(r), json!(s)]);
        }
        verdicts.push(Verdict::at_most(
            &format!("decay-slope-n{}", f.n),
            "annulus Einstein residual of the glued metric decays like R^-(n-1)",
            (f.slope + (f.n as f64 - 1.0)).abs(),
            cfg.tolerances.slope,
        ));
    }
    let plot = decay_plot(
        "Einstein residual on the gluing annulus",
        "sup |Ric + (n-1) g|",
        &fits.iter().map(|f| (f.n, f.radii.clone(), f.sup_residual.clone())).collect::<Vec<_>>(),
    );
    Ok(Output {
        results: json!({"fits": fits}),
        tables: vec![table],
        verdicts,
        plots: vec![("decay.svg".into(), plot)],
    })
}

fn modes_run(cfg: &ExperimentConfig) -> Run {
    let n = cfg.n;
    let t = &cfg.tolerances;
    let g = &cfg.grid;
    let [a, b] = g.mode_range;
    let inits = [(1.0, 0.5), (1.0, -2.0), (0.0, 1.0)];
    let mut table = Table::new(
        "modes",
        &["class", "b", "c", "alpha_1", "alpha_2", "bounded_dim", "bounded_dim_numeric", "max_rel_err", "indicial_residual"],
    );
    let mut classes = Vec::new();
    let mut verdicts = Vec::new();
    let mut series = Vec::new();
    let mut worst_err = (0.0f64, None);
    let mut worst_exp = 0.0f64;
    let mut dims_numeric = Vec::new();
    for (i, class) in ModeClass::ALL.into_iter().enumerate() {
        let cf = modes::closed_form_modes(n, class)?;
        let roots = cf.ode.roots();
        let exp_err = cf.exponents.iter().zip(&roots).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let ind = cf.exponents.iter().map(|&x| cf.ode.indicial(x).abs()).fold(0.0, f64::max);
        worst_exp = worst_exp.max(exp_err).max(ind);
        let mut err = 0.0f64;
        for (k, &(h0, dh0)) in inits.iter().enumerate() {
            let init = ModeInit { r0: 1.0, h0, dh0 };
            let num = modes::integrate_mode(n, class, init, (a, b), g.mode_steps)?;
            let exact: Vec<f64> = num
                .iter()
                .map(|s| modes::closed_form_solution(n, class, init, s.r))
                .collect::<crate::Result<_>>()?;
            let scale = exact.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let e = num.iter().zip(&exact).map(|(s, x)| (s.h - x).abs()).fold(0.0, f64::max) / scale;
            err = err.max(e);
            if k == 0 {
                series.push(Series::new(
                    format!("{} numeric", class.label()),
                    num.iter().map(|s| (s.r, s.h / scale)).collect(),
                ));
                series.push(
                    Series::new(
                        format!("{} closed form", class.label()),
                        num.iter().zip(&exact).map(|(s, x)| (s.r, x / scale)).collect(),
                    )
                    .dashed(),
                );
            }
        }
        if err > worst_err.0 || worst_err.1.is_none() {
            worst_err = (err, Some(i));
        }
        let dn = modes::bounded_dimension_numeric(n, class, g.escape, g.bound)?;
        dims_numeric.push(dn);
        table.rows.push(vec![
            json!(class.label()),
            json!(cf.ode.b),
            json!(cf.ode.c),
            json!(cf.exponents[0]),
            json!(cf.exponents[1]),
            json!(cf.bounded_dim),
            json!(dn),
            json!(err),
            json!(ind),
        ]);
        classes.push(cf);
    }
    verdicts.push(
        Verdict::at_most(
            "mode-integration",
            "numerical mode profiles match the closed-form Euler solutions",
            worst_err.0,
            t.modes,
        )
        .at(row_ref("modes", worst_err.1)),
    );
    verdicts.push(Verdict::at_most(
        "indicial-exponents",
        "closed-form exponents are the roots of the indicial equations",
        worst_exp,
        t.exponent,
    ));
    let nf = n as f64;
    let s = ((nf - 1.0) * (nf + 7.0)).sqrt();
    let expected_11 = [0.5 * (-(nf - 1.0) + s), 0.5 * (-(nf - 1.0) - s)];
    let e11 = classes[2].exponents.iter().zip(&expected_11).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    verdicts.push(Verdict::at_most(
        "radial-radial-exponents",
        "the 11 exponents are (-(n-1) +- sqrt((n-1)(n+7)))/2",
        e11,
        t.exponent,
    ));
    let closed_dims: Vec<usize> = classes.iter().map(|c| c.bounded_dim).collect();
    verdicts.push(Verdict::flag(
        "bounded-dimensions",
        "bounded solutions form spaces of dimension (1, 0, 0), numerically and in closed form",
        closed_dims == [1, 0, 0] && dims_numeric == [1, 0, 0],
    ));
    let plot = Plot {
        title: format!("Mode profiles, n = {n}"),
        x_label: "r".into(),
        y_label: "h(r) / sup |h|".into(),
        kind: PlotKind::LogX,
        series,
    };
    Ok(Output {
        results: json!({"n": n, "classes": classes, "bounded_dim_numeric": dims_numeric}),
        tables: vec![table],
        verdicts,
        plots: vec![("modes.svg".into(), plot)],
    })
}

fn load_group(cfg: &ExperimentConfig, source: &str) -> std::result::Result<BieberbachGroup, RunError> {
    let spec = cfg.group.as_ref().expect("validated group");
    let cerr = |key: &str, message: String| {
        RunError::Config(ConfigError {
            source: source.to_string(),
            key: key.to_string(),
            message,
        })
    };
    if let Some(tag) = &spec.catalog {
        return bieberbach::catalog_flat3(tag).map_err(|e| cerr("group.catalog", e.to_string()));
    }
    let path = spec.file.as_ref().expect("validated group");
    let text = std::fs::read_to_string(path).map_err(|e| cerr("group.file", format!("{}: {e}", path.display())))?;
    let groups = bieberbach::parse_groups(&text).map_err(|e| cerr("group.file", format!("{}: {e}", path.display())))?;
    match &spec.name {
        Some(name) => groups
            .into_iter()
            .find(|g| g.name.as_deref() == Some(name.as_str()) || g.alias.as_deref() == Some(name.as_str()))
            .ok_or_else(|| cerr("group.name", format!("no group `{name}` in {}", path.display()))),
        None => {
            let count = groups.len();
            let mut it = groups.into_iter();
            match (it.next(), count) {
                (Some(g), 1) => Ok(g),
                _ => Err(cerr("group.name", format!("{} holds {count} groups; pick one by name", path.display()))),
            }
        }
    }
}

fn admissible_run(cfg: &ExperimentConfig, source: &str) -> Run {
    let g = load_group(cfg, source)?;
    let [lmin, lmax] = cfg.window.unwrap_or([1.0, 5.0]);
    let candidates = enumerate_fillings(&g.lattice, lmin, lmax)?;
    let reports = candidates
        .par_iter()
        .map(|s| g.is_admissible(s))
        .collect::<crate::Result<Vec<_>>>()?;
    let relations = if g.generators.is_empty() {
        None
    } else {
        Some(g.check_relations()?)
    };
    let lambdas = [(0, 4), (1, 4), (2, 4), (3, 4), (4, 4)];
    let mut deform_ok = true;
    let mut deform_fail = None;
    let mut table = Table::new(
        "admissible",
        &["sigma", "length", "parallel_ok", "core_free_ok", "verdict", "witness"],
    );
    for (i, r) in reports.iter().enumerate() {
        if r.verdict && !g.generators.is_empty() {
            for &(p, q) in &lambdas {
                let dg = g.deform_action(&r.sigma, &q_frac(p, q))?;
                if !dg.check_relations()?.exact_zero {
                    deform_ok = false;
                    deform_fail.get_or_insert(i);
                }
            }
        }
        let sigma: Vec<String> = r.sigma.coeffs().iter().map(|c| c.to_string()).collect();
        table.rows.push(vec![
            json!(sigma.join(" ")),
            json!(r.length),
            json!(r.parallel_all()),
            json!(r.core_free_ok),
            json!(r.verdict),
            json!(r.witness.clone().unwrap_or_default()),
        ]);
    }
    let admissible: Vec<_> = reports.iter().filter(|r| r.verdict).collect();
    let parallel_only = reports.iter().filter(|r| r.parallel_all()).count();
    let verdicts = vec![
        Verdict::flag(
            "relations-exact",
            "every relation word evaluates to the identity in exact arithmetic",
            relations.as_ref().is_none_or(|r| r.exact_zero),
        ),
        Verdict::flag(
            "deformed-relations-exact",
            "the deformed action keeps every relation exact for lambda in {0, 1/4, 1/2, 3/4, 1}",
            deform_ok,
        )
        .at(row_ref("admissible", deform_fail)),
    ];
    Ok(Output {
        results: json!({
            "group": g.label(),
            "alias": g.alias,
            "holonomy_order": g.holonomy_order()?,
            "orientable": g.is_orientable(),
            "window": [lmin, lmax],
            "candidates": candidates.len(),
            "parallel_only": parallel_only,
            "admissible": admissible.len(),
            "reports": admissible,
        }),
        tables: vec![table],
        verdicts,
        plots: Vec::new(),
    })
}

fn volume_run(cfg: &ExperimentConfig) -> Run {
    let n = cfg.n;
    let m = cfg.mass;
    let radii = cfg.radii();
    let t = &cfg.tolerances;
    let cutoff = CutoffSpec { shape: cfg.cutoff };
    let rp = metrics::horizon_radius(n, m);
    let bh = black_hole_metric(&bh_params(n, m, None)?, &Lattice::identity(n - 2))?;
    let cusp = cusp_metric(n, &Lattice::identity(n - 1))?;
    // equal cross-sections, both truncated at R
    let mut ratio_err = (0.0f64, None);
    let mut ratios = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let vb = topo::truncated_volume(&bh, rp, r)? / bh.cross_section_area();
        let vc = topo::truncated_volume(&cusp, 0.0, r)? / cusp.cross_section_area();
        let e = (vb / vc - topo::exact_volume_ratio(n, rp, r)).abs();
        if e > ratio_err.0 || ratio_err.1.is_none() {
            ratio_err = (e, Some(i));
        }
        ratios.push(vb / vc);
    }
    let table = topo::volume_defect(n, m, &radii, cutoff)?;
    let end = FilledEnd::rectangular(n, m, radii[0], 1.0)?;
    let report = topo::volume_report(&end, cutoff, 2.0 * radii[0], cfg.chi)?;
    let mut verdicts = vec![
        Verdict::at_most(
            "exact-volume-ratio",
            "black-hole to cusp volume below R is 1 - (r_+/R)^(n-1)",
            ratio_err.0,
            t.ratio,
        )
        .at(row_ref("defect", ratio_err.1)),
        Verdict::flag(
            "defect-positive",
            "filling removes volume",
            table.rows.iter().all(|r| r.delta > 0.0),
        ),
        Verdict::flag(
            "defect-decreasing",
            "the volume defect decreases strictly in R",
            table.is_strictly_decreasing(),
        ),
        Verdict::at_most(
            "defect-slope",
            "the volume defect decays like R^-(n-1)",
            (table.slope + (n as f64 - 1.0)).abs(),
            t.defect_slope,
        ),
    ];
    if n == 4 {
        let h = CurvaturePoint::from_riemann(1.0, Riemann::constant(4, -1.0));
        verdicts.push(Verdict::at_most(
            "hyperbolic-gb-density",
            "the Gauss-Bonnet density of a hyperbolic point is 3/(4 pi^2)",
            (topo::gb4_density(&h)? - 3.0 / (4.0 * PI * PI)).abs(),
            1e-10,
        ));
        let (d, at) = worst(&report.gb_density, |s| (s.density - s.density_einstein_split).abs());
        verdicts.push(
            Verdict::at_most(
                "gb-dual-path",
                "full and Einstein-split Gauss-Bonnet densities agree on black-hole points",
                d,
                t.density,
            )
            .at(at.map(|i| format!("results.end.gb_density[{i}]"))),
        );
    }
    let mut csv = Table::new("defect", &["n", "R", "delta", "slope_estimate"]);
    for r in &table.rows {
        csv.rows.push(vec![json!(r.n), json!(r.r_match), json!(r.delta), json!(r.slope_estimate)]);
    }
    let plot = decay_plot(
        "Volume defect of a filled end",
        "delta(R)",
        &[(n, radii.clone(), table.rows.iter().map(|r| r.delta).collect())],
    );
    Ok(Output {
        results: json!({
            "n": n,
            "mass": m,
            "r_plus": rp,
            "exact_ratios": ratios,
            "defect_slope": table.slope,
            "end": report,
        }),
        tables: vec![csv],
        verdicts,
        plots: vec![("defect.svg".into(), plot)],
    })
}

fn glue_inspect(cfg: &ExperimentConfig) -> Run {
    let n = cfg.n;
    let m = cfg.mass;
    let t = &cfg.tolerances;
    let cutoff = CutoffSpec { shape: cfg.cutoff };
    let end = match (cfg.lattice(), &cfg.sigma) {
        (Some(l), Some(s)) => FilledEnd::new(n, m, &l, &FillingCurve::new(s.clone())?)?,
        _ => FilledEnd::rectangular(n, m, cfg.radii.first().copied().unwrap_or(16.0), 1.0)?,
    };
    let r = end.r_match;
    let rp = end.params.r_plus;
    let glued = end.glue(cutoff)?;
    let seam = metrics::seam_discrepancy(&end.cusp, &end.black_hole, r);
    let seam_profile = metrics::seam_profile_discrepancy(n, m, r);
    let grid = log_grid(rp, 4.0 * r, cfg.grid.points.max(64));
    let bounds = curvature_bounds(&glued, &grid)?;
    let annulus = curvature::annulus_sup_residual(&glued, cfg.grid.samples)?;
    let width = glued.radial_distance(0.5 * r, 2.0 * r);
    let mut profile = Table::new("profile", &["r", "F_glued", "F_black_hole", "F_cusp", "chi"]);
    let mut series = [Vec::new(), Vec::new(), Vec::new()];
    for &x in &log_grid(rp, 8.0 * r, 96) {
        let fg = glued.f(x)[0];
        let fb = end.black_hole.f(x)[0];
        let fc = end.cusp.f(x)[0];
        profile.rows.push(vec![json!(x), json!(fg), json!(fb), json!(fc), json!(cutoff.chi(r, x)[0])]);
        series[0].push((x, fg / (x * x)));
        series[1].push((x, fb / (x * x)));
        series[2].push((x, fc / (x * x)));
    }
    let [sg, sb, sc] = series;
    let profile_plot = Plot {
        title: format!("Profile F / r^2, n = {n}, R = {}", fmt_short(r)),
        x_label: "r".into(),
        y_label: "F(r) / r^2".into(),
        kind: PlotKind::LogX,
        series: vec![
            Series::new("glued", sg),
            Series::new("black hole", sb).dashed(),
            Series::new("cusp", sc).dashed(),
        ],
    };
    // the period law beta(m)
    let masses = log_grid(0.1, 2.0, 40);
    let betas: Vec<f64> = masses.iter().map(|&mm| metrics::beta_of_mass(n, mm)).collect();
    let slopes: Vec<f64> = masses.iter().map(|&mm| modes::dbeta_dm(n, mm)).collect();
    let cone = masses
        .iter()
        .zip(&betas)
        .map(|(&mm, &b)| modes::cone_angle(n, mm, b).map(|a| (a - 2.0 * PI).abs()))
        .collect::<crate::Result<Vec<_>>>()?;
    let beta_plot = Plot {
        title: format!("Period of the theta circle, n = {n}"),
        x_label: "mass m".into(),
        y_label: "beta(m)".into(),
        kind: PlotKind::Linear,
        series: vec![Series::new("beta", masses.iter().copied().zip(betas.iter().copied()).collect())],
    };
    let verdicts = vec![
        Verdict::at_most(
            "seam",
            "black-hole and scaled-cusp level tori agree at the matching radius",
            seam,
            t.seam,
        ),
        Verdict::at_most(
            "curvature-bounds",
            "glued sectional curvatures lie within the dimension's limits",
            bounds.excess(),
            t.curvature_slack,
        ),
        Verdict::at_most(
            "cone-angle",
            "the period beta(m) closes the theta circle smoothly",
            cone.iter().copied().fold(0.0, f64::max),
            t.cone_angle,
        ),
        Verdict::flag(
            "beta-decreasing",
            "beta'(m) < 0",
            slopes.iter().all(|&s| s < 0.0) && betas.windows(2).all(|w| w[1] < w[0]),
        ),
    ];
    Ok(Output {
        results: json!({
            "n": n,
            "mass": m,
            "sigma": end.sigma.coeffs(),
            "curve_length": end.curve_length,
            "two_pi": topo::two_pi_check(end.curve_length),
            "r_match": r,
            "r_plus": rp,
            "beta": end.params.beta,
            "twist": end.params.twist.as_ref().map(|t| t.fractions.clone()),
            "seam_discrepancy": seam,
            "seam_profile_discrepancy": seam_profile,
            "curvature_bounds": bounds,
            "annulus_sup_residual": annulus,
            "annulus_width": width,
            "core_diameter": end.core_diameter(64),
            "weyl_lp": weyl_lp(&glued, cfg.grid.weyl_p)?,
        }),
        tables: vec![profile],
        verdicts,
        plots: vec![("profile.svg".into(), profile_plot), ("beta.svg".into(), beta_plot)],
    })
}

fn fmt_short(x: f64) -> String {
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct SweepRow {
    n: usize,
    decay: curvature::DecayFit,
    defect: topo::DefectTable,
    weyl: Vec<f64>,
    weyl_slope: f64,
    sup_weyl: Vec<f64>,
}

fn sweep(cfg: &ExperimentConfig) -> Run {
    let dims = if cfg.dims.is_empty() { vec![3, 4, 5] } else { cfg.dims.clone() };
    let radii = cfg.radii();
    let cutoff = CutoffSpec { shape: cfg.cutoff };
    let m = cfg.mass;
    let t = &cfg.tolerances;
    let rows = dims
        .par_iter()
        .map(|&n| -> crate::Result<SweepRow> {
            let decay = residual_decay(n, m, &radii, cutoff, cfg.grid.samples)?;
            let defect = topo::volume_defect(n, m, &radii, cutoff)?;
            let models = radii
                .iter()
                .map(|&r| curvature::glued_model(n, m, r, cutoff))
                .collect::<crate::Result<Vec<_>>>()?;
            let weyl = models
                .iter()
                .map(|g| weyl_lp(g, cfg.grid.weyl_p))
                .collect::<crate::Result<Vec<_>>>()?;
            let rp = metrics::horizon_radius(n, m);
            let sup_weyl = models
                .iter()
                .map(|g| curvature::sup_weyl_near_horizon(g, 0.5 * rp, 16))
                .collect::<crate::Result<Vec<_>>>()?;
            let weyl_slope = if n == 3 { 0.0 } else { loglog_fit(&radii, &weyl, 2)?.0 };
            Ok(SweepRow {
                n,
                decay,
                defect,
                weyl,
                weyl_slope,
                sup_weyl,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let mut table = Table::new("sweep", &["n", "R", "sup_residual", "delta", "weyl_lp", "sup_weyl_horizon"]);
    let mut verdicts = Vec::new();
    for s in &rows {
        let k = s.n as f64 - 1.0;
        for i in 0..radii.len() {
            table.rows.push(vec![
                json!(s.n),
                json!(radii[i]),
                json!(s.decay.sup_residual[i]),
                json!(s.defect.rows[i].delta),
                json!(s.weyl[i]),
                json!(s.sup_weyl[i]),
            ]);
        }
        verdicts.push(Verdict::at_most(
            &format!("decay-slope-n{}", s.n),
            "annulus Einstein residual decays like R^-(n-1)",
            (s.decay.slope + k).abs(),
            t.slope,
        ));
        verdicts.push(Verdict::at_most(
            &format!("defect-slope-n{}", s.n),
            "volume defect decays like R^-(n-1)",
            (s.defect.slope + k).abs(),
            t.defect_slope,
        ));
        verdicts.push(Verdict::flag(
            &format!("defect-decreasing-n{}", s.n),
            "volume defect is positive and strictly decreasing",
            s.defect.rows.iter().all(|r| r.delta > 0.0) && s.defect.is_strictly_decreasing(),
        ));
        if s.n >= 4 {
            verdicts.push(Verdict::at_most(
                &format!("weyl-lp-slope-n{}", s.n),
                "the Weyl L^p integral of a unit-area end decays like R^-(n-1)",
                (s.weyl_slope + k).abs(),
                t.weyl_slope,
            ));
            let floor = s.sup_weyl.iter().copied().fold(f64::INFINITY, f64::min);
            verdicts.push(Verdict::flag(
                &format!("weyl-horizon-floor-n{}", s.n),
                "sup |W| near the horizon stays above a positive constant across the sweep",
                floor > 0.1 * s.sup_weyl[0] && floor > 0.0,
            ));
        }
    }
    let decay_fits: Vec<_> = rows.iter().map(|s| (s.n, radii.clone(), s.decay.sup_residual.clone())).collect();
    let defect_fits: Vec<_> = rows
        .iter()
        .map(|s| (s.n, radii.clone(), s.defect.rows.iter().map(|r| r.delta).collect()))
        .collect();
    let results = json!({
        "dims": dims,
        "radii": radii,
        "slopes": rows.iter().map(|s| json!({
            "n": s.n,
            "residual": s.decay.slope,
            "defect": s.defect.slope,
            "weyl_lp": if s.n >= 4 { json!(s.weyl_slope) } else { Value::Null },
        })).collect::<Vec<_>>(),
    });
    Ok(Output {
        results,
        tables: vec![table],
        verdicts,
        plots: vec![
            ("sweep_residual.svg".into(), decay_plot("Einstein residual on the gluing annulus", "sup |Ric + (n-1) g|", &decay_fits)),
            ("sweep_defect.svg".into(), decay_plot("Volume defect", "delta(R)", &defect_fits)),
        ],
    })
}

/// Length of `sigma` on the configured lattice, for quick CLI queries.
pub fn sigma_length(cfg: &ExperimentConfig) -> Option<f64> {
    let l = cfg.lattice()?;
    let s = FillingCurve::new(cfg.sigma.clone()?).ok()?;
    curve_length(&l, &s).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_decay_report() {
        let mut cfg = ExperimentConfig::for_command(Command::ResidualDecay);
        cfg.grid.samples = 8;
        let r = run(&cfg, Command::ResidualDecay).unwrap();
        assert!(r.passed, "{:?}", r.failures());
        assert_eq!(r.tables[0].rows.len(), 4);
        assert_eq!(r.plots, vec!["decay.svg".to_string()]);
        let again = run(&cfg, Command::ResidualDecay).unwrap();
        assert_eq!(r.payload(), again.payload());
    }

    #[test]
    fn modes_report() {
        let r = run(&ExperimentConfig::for_command(Command::Modes), Command::Modes).unwrap();
        assert!(r.passed, "{:?}", r.failures());
        assert_eq!(r.tables[0].rows.len(), 3);
    }

    #[test]
    fn admissible_report() {
        let mut cfg = ExperimentConfig::for_command(Command::Admissible);
        cfg.group = Some(config::GroupSpec {
            catalog: Some("B".into()),
            file: None,
            name: None,
        });
        cfg.window = Some([1.0, 5.0]);
        let r = run(&cfg, Command::Admissible).unwrap();
        assert!(r.passed);
        assert!(r.results["admissible"].as_u64().unwrap() > 0);
    }

    #[test]
    fn failing_tolerance_is_reported() {
        let mut cfg = ExperimentConfig::for_command(Command::Volume);
        cfg.tolerances.defect_slope = 0.0;
        let r = run(&cfg, Command::Volume).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failures()[0].name, "defect-slope");
    }

    #[test]
    fn csv_quoting() {
        let mut t = Table::new("x", &["a", "b"]);
        t.rows.push(vec![json!("1, 2"), json!(0.5)]);
        assert_eq!(t.to_csv(), "a,b\n\"1, 2\",0.5\n");
    }
}
