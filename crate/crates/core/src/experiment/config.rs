//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lattice::{FillingCurve, Lattice};
use crate::metrics::{horizon_radius, CutoffShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CurvatureCheck,
    ResidualDecay,
    Modes,
    Admissible,
    Volume,
    GlueInspect,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::CurvatureCheck,
        Command::ResidualDecay,
        Command::Modes,
        Command::Admissible,
        Command::Volume,
        Command::GlueInspect,
        Command::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CurvatureCheck => "curvature-check",
            Command::ResidualDecay => "residual-decay",
            Command::Modes => "modes",
            Command::Admissible => "admissible",
            Command::Volume => "volume",
            Command::GlueInspect => "glue-inspect",
            Command::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Flat torus Gram matrix, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub gram: Vec<Vec<f64>>,
}

/// A Bieberbach group from the built-in catalog or a group file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Group to pick from a file holding several.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Sample radii in the gluing annulus.
    pub samples: usize,
    /// Radii per dimension in curvature checks.
    pub points: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Mode profiles are sampled on `mode_range` at `mode_steps + 1` radii.
    pub mode_steps: usize,
    pub mode_range: [f64; 2],
    /// Solutions are followed to `[1/escape, escape]`.
    pub escape: f64,
    /// Escape bound for the bounded-solution count.
    pub bound: f64,
    /// Exponent of the Weyl integral.
    pub weyl_p: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            samples: 16,
            points: 20,
            r_min: 1.0,
            r_max: 20.0,
            mode_steps: 64,
            mode_range: [0.1, 10.0],
            escape: 1e4,
            bound: 10.0,
            weyl_p: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Finite-difference against closed-form sectional curvature.
    pub fd: f64,
    /// `|Ric + (n-1) g|` of the exact models.
    pub residual: f64,
    /// Residual-decay slope against `-(n-1)`.
    pub slope: f64,
    /// Mode integration, relative to the sup norm.
    pub modes: f64,
    pub exponent: f64,
    pub defect_slope: f64,
    pub ratio: f64,
    /// Two assembly paths of the Gauss–Bonnet density.
    pub density: f64,
    pub weyl_slope: f64,
    /// Slack on the sectional curvature limits.
    pub curvature_slack: f64,
    pub seam: f64,
    pub cone_angle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fd: 1e-6,
            residual: 1e-6,
            slope: 0.3,
            modes: 1e-6,
            exponent: 1e-10,
            defect_slope: 0.1,
            ratio: 1e-9,
            density: 1e-8,
            weyl_slope: 0.4,
            curvature_slack: 1e-9,
            seam: 1e-8,
            cone_angle: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub plots: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, plots: true }
    }
}

fn default_n() -> usize {
    4
}

fn default_mass() -> f64 {
    crate::metrics::DEFAULT_MASS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Sub-experiment; the command line may name it instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Dimensions for multi-dimension runs; `[n]` when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dims: Vec<usize>,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<i64>>,
    /// Length window `[Lmin, Lmax]` for enumerations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Matching radii `R`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub cutoff: CutoffShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A configuration problem, tied to the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}: {}", self.source, self.message)
        } else {
            write!(f, "{}: `{}`: {}", self.source, self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

pub const DEFAULT_RADII: [f64; 4] = [8.0, 16.0, 32.0, 64.0];

impl ExperimentConfig {
    /// Defaults for `command` with nothing else set.
    pub fn for_command(command: Command) -> Self {
        let mut c: Self = toml::from_str("").expect("empty config parses");
        c.command = Some(command);
        c
    }

    pub fn from_toml(text: &str, source: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError {
            source: source.to_string(),
            key: String::new(),
            message: e.to_string().trim_end().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: source.clone(),
            key: String::new(),
            message: format!("cannot read config: {e}"),
        })?;
        let mut cfg = Self::from_toml(&text, &source)?;
        // group files are relative to the config
        if let Some(file) = cfg.group.as_mut().and_then(|g| g.file.as_mut()) {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dims(&self) -> Vec<usize> {
        if self.dims.is_empty() {
            vec![self.n]
        } else {
            self.dims.clone()
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        if self.radii.is_empty() {
            DEFAULT_RADII.to_vec()
        } else {
            self.radii.clone()
        }
    }

    pub fn lattice(&self) -> Option<Lattice> {
        self.lattice
            .as_ref()
            .map(|l| Lattice::from_rows(&l.gram).expect("validated lattice"))
    }

    /// Checks ranges and cross-field consistency for `command`.
    pub fn validate(&self, command: Command, source: &str) -> Result<(), ConfigError> {
        let err = |key: &str, message: String| ConfigError {
            source: source.to_string(),
            key: key.to_string(),
            message,
        };
        if let Some(c) = self.command {
            if c != command {
                return Err(err("command", format!("config is for `{c}` but `{command}` was requested")));
            }
        }
        let check_n = |key: &str, n: usize| {
            if (3..=10).contains(&n) {
                Ok(())
            } else {
                Err(err(key, format!("dimension {n} outside [3, 10]")))
            }
        };
        check_n("n", self.n)?;
        for (i, &d) in self.dims.iter().enumerate() {
            check_n(&format!("dims[{i}]"), d)?;
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(err("mass", format!("{} is not a positive finite number", self.mass)));
        }
        let dims = self.dims();
        for (i, &r) in self.radii.iter().enumerate() {
            if !(r.is_finite() && r > 0.0) {
                return Err(err(&format!("radii[{i}]"), format!("{r} is not a positive finite radius")));
            }
            for &n in &dims {
                let rp = horizon_radius(n, self.mass);
                if r <= 4.0 * rp {
                    return Err(err(
                        &format!("radii[{i}]"),
                        format!("matching radius {r} must exceed 4 r_+ = {} for n = {n}", 4.0 * rp),
                    ));
                }
            }
            if i > 0 && r <= self.radii[i - 1] {
                return Err(err(&format!("radii[{i}]"), "radii must be strictly increasing".into()));
            }
        }
        if let Some([a, b]) = self.window {
            if !(a >= 0.0 && b >= a && b.is_finite()) {
                return Err(err("window", format!("[{a}, {b}] is not a finite window with 0 <= Lmin <= Lmax")));
            }
        }
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(err("threads", "must be at least 1".into()));
            }
        }
        let g = &self.grid;
        if g.samples < 2 {
            return Err(err("grid.samples", "at least 2 samples".into()));
        }
        if g.points < 2 {
            return Err(err("grid.points", "at least 2 points".into()));
        }
        if !(g.r_min > 0.0 && g.r_max > g.r_min && g.r_max.is_finite()) {
            return Err(err("grid.r_min", format!("need 0 < r_min < r_max, got [{}, {}]", g.r_min, g.r_max)));
        }
        let [ma, mb] = g.mode_range;
        if !(ma > 0.0 && mb > ma && mb.is_finite()) {
            return Err(err("grid.mode_range", format!("need 0 < a < b, got [{ma}, {mb}]")));
        }
        if g.mode_steps == 0 {
            return Err(err("grid.mode_steps", "at least 1 step".into()));
        }
        if !(g.escape > 1.0 && g.escape.is_finite()) {
            return Err(err("grid.escape", format!("{} must exceed 1", g.escape)));
        }
        if !(g.bound > 0.0) {
            return Err(err("grid.bound", "must be positive".into()));
        }
        if !(g.weyl_p >= 1.0 && g.weyl_p.is_finite()) {
            return Err(err("grid.weyl_p", format!("{} is not in [1, inf)", g.weyl_p)));
        }
        let t = &self.tolerances;
        for (key, v) in [
            ("fd", t.fd),
            ("residual", t.residual),
            ("slope", t.slope),
            ("modes", t.modes),
            ("exponent", t.exponent),
            ("defect_slope", t.defect_slope),
            ("ratio", t.ratio),
            ("density", t.density),
            ("weyl_slope", t.weyl_slope),
            ("curvature_slack", t.curvature_slack),
            ("seam", t.seam),
            ("cone_angle", t.cone_angle),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(err(&format!("tolerances.{key}"), format!("{v} is not a non-negative number")));
            }
        }
        if let Some(l) = &self.lattice {
            let lat = Lattice::from_rows(&l.gram).map_err(|e| err("lattice.gram", e.to_string()))?;
            if lat.dim() != self.n - 1 {
                return Err(err(
                    "lattice.gram",
                    format!("a {}-dimensional torus does not bound an n = {} end", lat.dim(), self.n),
                ));
            }
        }
        if let Some(s) = &self.sigma {
            FillingCurve::new(s.clone()).map_err(|e| err("sigma", e.to_string()))?;
            if command == Command::GlueInspect && s.len() != self.n - 1 {
                return Err(err("sigma", format!("{} entries, expected n - 1 = {}", s.len(), self.n - 1)));
            }
        }
        if let Some(gs) = &self.group {
            match (&gs.catalog, &gs.file) {
                (Some(_), Some(_)) => return Err(err("group", "give either `catalog` or `file`, not both".into())),
                (None, None) => return Err(err("group", "needs `catalog` or `file`".into())),
                (Some(tag), None) => {
                    crate::bieberbach::catalog_flat3(tag).map_err(|e| err("group.catalog", e.to_string()))?;
                }
                (None, Some(f)) => {
                    if !f.is_file() {
                        return Err(err("group.file", format!("{} does not exist", f.display())));
                    }
                }
            }
        }
        match command {
            Command::Admissible if self.group.is_none() => Err(err("group", "the admissible experiment needs a group".into())),
            Command::ResidualDecay | Command::Sweep if !self.radii.is_empty() && self.radii.len() < 3 => {
                Err(err("radii", "a decay fit needs at least 3 radii".into()))
            }
            Command::Volume if !self.radii.is_empty() && self.radii.len() < 2 => {
                Err(err("radii", "the defect table needs at least 2 radii".into()))
            }
            Command::GlueInspect if self.sigma.is_some() != self.lattice.is_some() => {
                Err(err("sigma", "`sigma` and `lattice` go together".into()))
            }
            Command::GlueInspect if self.sigma.is_some() => {
                let l = self.lattice().expect("checked above");
                let s = FillingCurve::new(self.sigma.clone().expect("checked above")).expect("checked above");
                let len = crate::lattice::curve_length(&l, &s).map_err(|e| err("sigma", e.to_string()))?;
                let r = crate::metrics::match_radius(self.n, self.mass, len).map_err(|e| err("sigma", e.to_string()))?;
                let rp = horizon_radius(self.n, self.mass);
                if r <= 4.0 * rp {
                    return Err(err(
                        "sigma",
                        format!("curve of length {len:.4} matches at R = {r:.4}; a filled end needs R > 4 r_+ = {}", 4.0 * rp),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = r#"
command = "residual-decay"
n = 5
radii = [8.0, 16.0, 32.0, 64.0]
cutoff = "quintic"

[grid]
samples = 12

[tolerances]
slope = 0.25
"#;
        let c = ExperimentConfig::from_toml(text, "t.toml").unwrap();
        assert_eq!(c.command, Some(Command::ResidualDecay));
        assert_eq!(c.grid.samples, 12);
        assert_eq!(c.grid.points, 20);
        assert_eq!(c.cutoff, CutoffShape::Quintic);
        let back = ExperimentConfig::from_toml(&c.to_toml(), "back").unwrap();
        assert_eq!(back, c);
        c.validate(Command::ResidualDecay, "t.toml").unwrap();
    }

    #[test]
    fn unknown_keys_are_located() {
        let e = ExperimentConfig::from_toml("n = 4\nradi = [1.0]\n", "x.toml").unwrap_err();
        assert!(e.message.contains("radi"), "{e}");
        assert!(e.message.contains("line 2") || e.message.contains("2 |"), "{e}");
    }

    #[test]
    fn validation_names_the_key() {
        let mut c = ExperimentConfig::for_command(Command::ResidualDecay);
        c.radii = vec![8.0, 2.0, 32.0];
        let e = c.validate(Command::ResidualDecay, "c").unwrap_err();
        assert_eq!(e.key, "radii[1]");
        c.radii = vec![8.0, 16.0];
        assert_eq!(c.validate(Command::ResidualDecay, "c").unwrap_err().key, "radii");
        let mut c = ExperimentConfig::for_command(Command::Modes);
        c.n = 2;
        assert_eq!(c.validate(Command::Modes, "c").unwrap_err().key, "n");
        let c = ExperimentConfig::for_command(Command::Admissible);
        assert_eq!(c.validate(Command::Admissible, "c").unwrap_err().key, "group");
        let c = ExperimentConfig::for_command(Command::Modes);
        assert_eq!(c.validate(Command::Volume, "c").unwrap_err().key, "command");
        let mut c = ExperimentConfig::for_command(Command::GlueInspect);
        c.lattice = Some(LatticeSpec {
            gram: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        });
        c.sigma = Some(vec![1, 0, 0]);
        assert_eq!(c.validate(Command::GlueInspect, "c").unwrap_err().key, "lattice.gram");
    }
}
