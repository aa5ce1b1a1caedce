//! Flat-manifold ends `T^d / Gamma`, admissibility of fillings on
//! non-toral ends, the sigma-directed deformation of the group action and
//! the catalog of the ten compact flat 3-manifolds.
//!
//! All group computations are exact. Affine maps are written in lattice
//! coordinates: `(A, t)` acts by `v -> A v + t`, the lattice is `Z^d` and
//! the flat metric is the Gram matrix of the lattice.
//!
//! # Text format
//!
//! ```text
//! # comment
//! group B
//! alias G2
//! title half-turn space
//! gram 1 0 0 ; 0 1 0 ; 0 0 1
//! gen a: 1 0 0 ; 0 -1 0 ; 0 0 -1 | 1/2 0 0
//! relation a^2 t(-1,0,0)
//! end
//! ```
//!
//! Matrix rows are separated by `;`. A relation is a word that must
//! evaluate to the identity; letters are generator names with an optional
//! integer power (`a`, `a^3`, `a^-1`) and lattice translations `t(v)`.
//! Words are products read left to right, so `a b` is `a` composed with `b`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{format_q, frac, in_integer_span, parse_q, primitive_integer_direction, q, q_form, q_to_f64, QMat, Q};
use crate::lattice::{curve_length, enumerate_fillings, scale_along, FillingCurve, Lattice};
use num_traits::{One, Signed, Zero};

const FLAT3: &str = include_str!("../data/flat3.txt");

/// Catalog tags of the compact flat 3-manifolds, orientable first.
pub const FLAT3_TAGS: [&str; 10] = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J"];

/// An isometry `v -> A v + t` of the flat torus.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineIsometry {
    pub a: QMat,
    pub t: Vec<Q>,
}

impl AffineIsometry {
    pub fn identity(d: usize) -> Self {
        Self {
            a: QMat::identity(d),
            t: vec![Q::zero(); d],
        }
    }

    pub fn translation(t: Vec<Q>) -> Self {
        Self {
            a: QMat::identity(t.len()),
            t,
        }
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    /// `self o other`: `v -> A1 (A2 v + t2) + t1`.
    pub fn compose(&self, other: &AffineIsometry) -> AffineIsometry {
        let at = self.a.mul_vec(&other.t);
        AffineIsometry {
            a: self.a.mul(&other.a),
            t: at.iter().zip(&self.t).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn inverse(&self) -> Result<AffineIsometry> {
        let ai = self
            .a
            .inverse()
            .ok_or_else(|| Error::InvalidGroup("singular linear part".into()))?;
        let t = ai.mul_vec(&self.t).into_iter().map(|x| -x).collect();
        Ok(AffineIsometry { a: ai, t })
    }

    pub fn power(&self, k: i64) -> Result<AffineIsometry> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut out = AffineIsometry::identity(self.dim());
        for _ in 0..k.unsigned_abs() {
            out = out.compose(&base);
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[Q]) -> Vec<Q> {
        self.a.mul_vec(v).into_iter().zip(&self.t).map(|(x, y)| x + y).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_identity() && self.t.iter().all(Zero::is_zero)
    }

    /// `A^T G A = G`.
    pub fn preserves(&self, gram: &QMat) -> bool {
        self.a.transpose().mul(gram).mul(&self.a) == *gram
    }
}

/// A named generator of the group.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    pub map: AffineIsometry,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Letter {
    Gen { index: usize, power: i64 },
    Translation(Vec<Q>),
}

pub type Word = Vec<Letter>;

/// The sigma-directed deformation applied to a group.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    pub sigma: FillingCurve,
    pub lambda: Q,
    /// `D_lambda`, the linear map applied to lattice translations.
    pub map: QMat,
}

/// A Bieberbach group acting on `R^d` with translation lattice `Z^d`.
#[derive(Debug, Clone)]
pub struct BieberbachGroup {
    pub lattice: Lattice,
    pub generators: Vec<Generator>,
    pub relations: Vec<Word>,
    pub name: Option<String>,
    pub alias: Option<String>,
    pub title: Option<String>,
    pub deformation: Option<Deformation>,
}

/// Worst relation residual of a group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationResidual {
    pub exact_zero: bool,
    /// Largest entry of `A - I` plus the G-norm of the translation part.
    pub max_residual: f64,
    /// Index of the worst relation.
    pub worst: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub sigma: FillingCurve,
    pub length: f64,
    /// `A sigma = +-sigma`, one entry per generator.
    pub parallel_ok: Vec<bool>,
    /// No holonomy element fixes a point of the core torus `R^d / (Z^d + R sigma)`.
    pub core_free_ok: bool,
    pub verdict: bool,
    /// First failing generator or holonomy element.
    pub witness: Option<String>,
}

impl AdmissibilityReport {
    pub fn parallel_all(&self) -> bool {
        self.parallel_ok.iter().all(|&b| b)
    }
}

/// One holonomy coset: the linear part and its translation mod `Z^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyElement {
    pub map: AffineIsometry,
    /// Shortest generator word reaching this coset.
    pub word: String,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_vec(s: &str, line: usize) -> Result<Vec<Q>> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|x| !x.is_empty())
        .map(|x| parse_q(x).ok_or_else(|| parse_err(line, format!("bad rational `{x}`"))))
        .collect()
}

fn parse_matrix(s: &str, line: usize) -> Result<QMat> {
    let rows: Vec<Vec<Q>> = s.split(';').map(|r| parse_vec(r, line)).collect::<Result<_>>()?;
    let c = rows.first().map_or(0, Vec::len);
    if c == 0 || rows.iter().any(|r| r.len() != c) {
        return Err(parse_err(line, "ragged or empty matrix"));
    }
    Ok(QMat::from_rows(&rows))
}

fn frac_vec(v: &[Q]) -> Vec<Q> {
    v.iter().map(frac).collect()
}

fn is_integral_vec(v: &[Q]) -> bool {
    v.iter().all(|x| x.is_integer())
}

/// Parses one relation word against the generator names.
pub fn parse_word(s: &str, names: &[String], d: usize) -> Result<Word> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("t(") {
            let close = r
                .find(')')
                .ok_or_else(|| Error::MalformedWord(format!("unclosed translation in `{s}`")))?;
            let v = parse_vec(&r[..close], 0).map_err(|_| Error::MalformedWord(s.into()))?;
            if v.len() != d || !is_integral_vec(&v) {
                return Err(Error::MalformedWord(format!(
                    "`t({})` is not a lattice vector of dimension {d}",
                    &r[..close]
                )));
            }
            out.push(Letter::Translation(v));
            rest = r[close + 1..].trim_start();
            continue;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let tok = &rest[..end];
        let (name, power) = match tok.split_once('^') {
            Some((n, p)) => (
                n,
                p.parse::<i64>()
                    .map_err(|_| Error::MalformedWord(format!("bad power in `{tok}`")))?,
            ),
            None => (tok, 1),
        };
        let index = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MalformedWord(format!("unknown generator `{name}` in `{s}`")))?;
        out.push(Letter::Gen { index, power });
        rest = rest[end..].trim_start();
    }
    if out.is_empty() {
        return Err(Error::MalformedWord("empty word".into()));
    }
    Ok(out)
}

pub fn format_word(w: &Word, names: &[String]) -> String {
    w.iter()
        .map(|l| match l {
            Letter::Gen { index, power: 1 } => names[*index].clone(),
            Letter::Gen { index, power } => format!("{}^{power}", names[*index]),
            Letter::Translation(v) => {
                format!("t({})", v.iter().map(format_q).collect::<Vec<_>>().join(","))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Block {
    start: usize,
    tag: String,
    alias: Option<String>,
    title: Option<String>,
    gram: Option<QMat>,
    gens: Vec<(String, QMat, Vec<Q>, usize)>,
    relations: Vec<(String, usize)>,
}

/// Parses every group in a text document and validates each one.
pub fn parse_groups(text: &str) -> Result<Vec<BieberbachGroup>> {
    let mut groups = Vec::new();
    let mut cur: Option<Block> = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        if key == "group" {
            if cur.is_some() {
                return Err(parse_err(ln, "`group` before `end`"));
            }
            cur = Some(Block {
                start: ln,
                tag: rest.to_string(),
                alias: None,
                title: None,
                gram: None,
                gens: Vec::new(),
                relations: Vec::new(),
            });
            continue;
        }
        let b = cur
            .as_mut()
            .ok_or_else(|| parse_err(ln, format!("`{key}` outside a group block")))?;
        match key {
            "alias" => b.alias = Some(rest.to_string()),
            "title" => b.title = Some(rest.to_string()),
            "gram" => b.gram = Some(parse_matrix(rest, ln)?),
            "gen" => {
                let (name, body) = rest
                    .split_once(':')
                    .ok_or_else(|| parse_err(ln, "expected `gen name: A | t`"))?;
                let (a, t) = body
                    .split_once('|')
                    .ok_or_else(|| parse_err(ln, "expected `A | t`"))?;
                let name = name.trim();
                if name.is_empty() || name.starts_with('t') && name.len() == 1 || name.contains(['^', '(', ')']) {
                    return Err(parse_err(ln, format!("invalid generator name `{name}`")));
                }
                b.gens.push((name.to_string(), parse_matrix(a, ln)?, parse_vec(t, ln)?, ln));
            }
            "relation" => b.relations.push((rest.to_string(), ln)),
            "end" => {
                let block = cur.take().expect("inside a block");
                groups.push(build_group(block)?);
            }
            _ => return Err(parse_err(ln, format!("unknown keyword `{key}`"))),
        }
    }
    if let Some(b) = cur {
        return Err(parse_err(b.start, format!("group `{}` has no `end`", b.tag)));
    }
    Ok(groups)
}

fn build_group(b: Block) -> Result<BieberbachGroup> {
    let gram = b
        .gram
        .ok_or_else(|| parse_err(b.start, format!("group `{}` has no gram", b.tag)))?;
    let d = gram.rows;
    let lattice = Lattice::from_rational(gram).map_err(|e| parse_err(b.start, e.to_string()))?;
    let mut generators = Vec::new();
    for (name, a, t, ln) in b.gens {
        if a.rows != d || a.cols != d || t.len() != d {
            return Err(parse_err(ln, format!("generator `{name}` has the wrong dimension")));
        }
        if generators.iter().any(|g: &Generator| g.name == name) {
            return Err(parse_err(ln, format!("duplicate generator `{name}`")));
        }
        generators.push(Generator {
            name,
            map: AffineIsometry { a, t },
        });
    }
    let names: Vec<String> = generators.iter().map(|g| g.name.clone()).collect();
    let relations = b
        .relations
        .iter()
        .map(|(w, ln)| parse_word(w, &names, d).map_err(|e| parse_err(*ln, e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let g = BieberbachGroup {
        lattice,
        generators,
        relations,
        name: Some(b.tag),
        alias: b.alias,
        title: b.title,
        deformation: None,
    };
    g.validate()?;
    Ok(g)
}

/// The built-in catalog, parsed and validated.
pub fn catalog_flat3_all() -> Vec<BieberbachGroup> {
    parse_groups(FLAT3).expect("built-in catalog is valid")
}

/// A catalog entry by tag (`A`..`J`) or alias (`G1`..`G6`, `B1`..`B4`).
pub fn catalog_flat3(tag: &str) -> Result<BieberbachGroup> {
    let tag = tag.trim();
    catalog_flat3_all()
        .into_iter()
        .find(|g| {
            g.name.as_deref().is_some_and(|n| n.eq_ignore_ascii_case(tag))
                || g.alias.as_deref().is_some_and(|n| n.eq_ignore_ascii_case(tag))
        })
        .ok_or_else(|| Error::UnknownCatalogEntry(tag.to_string()))
}

/// Text of the built-in catalog.
pub fn catalog_source() -> &'static str {
    FLAT3
}

/// Integer row basis of the left annihilator of the columns of `m`.
fn left_annihilator(m: &QMat) -> Vec<Vec<i128>> {
    m.transpose()
        .null_space()
        .iter()
        .map(|y| primitive_integer_direction(y))
        .collect()
}

/// Is there `w` in `Z^d` with `t + w` in the column span of `m`?
fn meets_span(m: &QMat, t: &[Q]) -> bool {
    let y = left_annihilator(m);
    let target: Vec<Q> = y
        .iter()
        .map(|row| -row.iter().zip(t).fold(Q::zero(), |acc, (a, b)| acc + q(*a as i64) * b))
        .collect();
    in_integer_span(&y, &target)
}

fn i_minus(a: &QMat) -> QMat {
    let d = a.rows;
    let mut m = QMat::identity(d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = &m[(i, j)] - &a[(i, j)];
        }
    }
    m
}

impl BieberbachGroup {
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn gram(&self) -> &QMat {
        self.lattice.exact_gram().expect("groups carry a rational Gram")
    }

    pub fn generator_names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name.clone()).collect()
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "unnamed".into())
    }

    /// The affine map of a lattice translation letter, deformed if needed.
    fn translation_letter(&self, v: &[Q]) -> AffineIsometry {
        match &self.deformation {
            Some(d) => AffineIsometry::translation(d.map.mul_vec(v)),
            None => AffineIsometry::translation(v.to_vec()),
        }
    }

    pub fn evaluate(&self, w: &Word) -> Result<AffineIsometry> {
        let mut out = AffineIsometry::identity(self.dim());
        for l in w {
            let m = match l {
                Letter::Gen { index, power } => self
                    .generators
                    .get(*index)
                    .ok_or_else(|| Error::MalformedWord(format!("generator index {index} out of range")))?
                    .map
                    .power(*power)?,
                Letter::Translation(v) => {
                    if v.len() != self.dim() {
                        return Err(Error::MalformedWord(format!(
                            "translation of dimension {} in a group of dimension {}",
                            v.len(),
                            self.dim()
                        )));
                    }
                    self.translation_letter(v)
                }
            };
            out = out.compose(&m);
        }
        Ok(out)
    }

    /// Distance of an affine map from the identity.
    fn deviation(&self, m: &AffineIsometry) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let e = if i == j { Q::one() } else { Q::zero() };
                worst = worst.max(q_to_f64(&(&m.a[(i, j)] - e).abs()));
            }
        }
        worst + q_to_f64(&q_form(self.gram(), &m.t, &m.t)).max(0.0).sqrt()
    }

    pub fn check_relations(&self) -> Result<RelationResidual> {
        if self.relations.is_empty() && !self.generators.is_empty() {
            return Err(Error::InvalidGroup("no relations to check".into()));
        }
        let mut out = RelationResidual {
            exact_zero: true,
            max_residual: 0.0,
            worst: None,
        };
        for (i, w) in self.relations.iter().enumerate() {
            let m = self.evaluate(w)?;
            if !m.is_identity() {
                out.exact_zero = false;
                let dev = self.deviation(&m);
                if out.worst.is_none() || dev > out.max_residual {
                    out.max_residual = dev;
                    out.worst = Some(i);
                }
            }
        }
        Ok(out)
    }

    /// All holonomy cosets, with translations reduced mod `Z^d`.
    ///
    /// Fails if one linear part occurs with two translations that differ by
    /// a non-lattice vector: then the translation subgroup is larger than
    /// `Z^d`.
    pub fn holonomy(&self) -> Result<Vec<HolonomyElement>> {
        const MAX_ORDER: usize = 1024;
        let d = self.dim();
        let mut elems = vec![HolonomyElement {
            map: AffineIsometry::identity(d),
            word: "1".into(),
        }];
        let mut frontier = 0;
        while frontier < elems.len() {
            let cur = elems[frontier].clone();
            frontier += 1;
            for g in &self.generators {
                let mut next = cur.map.compose(&g.map);
                next.t = frac_vec(&next.t);
                match elems.iter().find(|e| e.map.a == next.a) {
                    Some(e) if e.map.t != next.t => {
                        return Err(Error::InvalidGroup(format!(
                            "{} and {} {} share a linear part but differ by a non-lattice translation",
                            e.word, cur.word, g.name
                        )));
                    }
                    Some(_) => {}
                    None => {
                        if elems.len() >= MAX_ORDER {
                            return Err(Error::InvalidGroup("holonomy group is not finite".into()));
                        }
                        let word = if cur.word == "1" {
                            g.name.clone()
                        } else {
                            format!("{} {}", cur.word, g.name)
                        };
                        elems.push(HolonomyElement { map: next, word });
                    }
                }
            }
        }
        Ok(elems)
    }

    pub fn holonomy_order(&self) -> Result<usize> {
        Ok(self.holonomy()?.len())
    }

    pub fn is_orientable(&self) -> bool {
        self.generators.iter().all(|g| g.map.a.det().is_positive())
    }

    /// First holonomy element with a fixed point on `T^d`, if any.
    pub fn fixed_point_witness(&self) -> Result<Option<String>> {
        for h in self.holonomy()? {
            if h.map.a.is_identity() {
                continue;
            }
            if meets_span(&i_minus(&h.map.a), &h.map.t) {
                return Ok(Some(h.word));
            }
        }
        Ok(None)
    }

    /// Load-time validation: isometry, lattice preservation, relations, a
    /// finite holonomy with lattice translation subgroup, and freeness.
    pub fn validate(&self) -> Result<()> {
        let gram = self.gram();
        let label = self.label();
        for g in &self.generators {
            if !g.map.a.is_integral() {
                return Err(Error::InvalidGroup(format!(
                    "{label}: `{}` does not preserve the lattice",
                    g.name
                )));
            }
            if !g.map.a.det().abs().is_one() {
                return Err(Error::InvalidGroup(format!("{label}: `{}` is not unimodular", g.name)));
            }
            if !g.map.preserves(gram) {
                return Err(Error::InvalidGroup(format!(
                    "{label}: `{}` is not an isometry of the Gram matrix",
                    g.name
                )));
            }
        }
        if !self.generators.is_empty() {
            let r = self.check_relations()?;
            if !r.exact_zero {
                let names = self.generator_names();
                let w = &self.relations[r.worst.expect("nonzero residual has a witness")];
                return Err(Error::InvalidGroup(format!(
                    "{label}: relation `{}` evaluates to a non-identity map",
                    format_word(w, &names)
                )));
            }
        }
        self.holonomy()?;
        if let Some(w) = self.fixed_point_witness()? {
            return Err(Error::InvalidGroup(format!("{label}: `{w}` has a fixed point on the torus")));
        }
        Ok(())
    }

    /// Conjugate by the translation `u`: `(A, t) -> (A, t + u - A u)`.
    pub fn conjugate_by_translation(&self, u: &[Q]) -> BieberbachGroup {
        let mut out = self.clone();
        for g in &mut out.generators {
            let au = g.map.a.mul_vec(u);
            g.map.t = g
                .map
                .t
                .iter()
                .zip(u)
                .zip(&au)
                .map(|((t, u), au)| t + u - au)
                .collect();
        }
        out
    }

    fn check_sigma(&self, sigma: &FillingCurve) -> Result<()> {
        if sigma.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: sigma.dim(),
            });
        }
        Ok(())
    }

    pub fn is_admissible(&self, sigma: &FillingCurve) -> Result<AdmissibilityReport> {
        self.check_sigma(sigma)?;
        let d = self.dim();
        let s: Vec<Q> = sigma.coeffs().iter().map(|&c| q(c)).collect();
        let neg: Vec<Q> = s.iter().map(|x| -x).collect();
        let mut witness = None;
        let parallel_ok: Vec<bool> = self
            .generators
            .iter()
            .map(|g| {
                let img = g.map.a.mul_vec(&s);
                let ok = img == s || img == neg;
                if !ok && witness.is_none() {
                    witness = Some(g.name.clone());
                }
                ok
            })
            .collect();
        let mut core_free_ok = true;
        for h in self.holonomy()? {
            if h.map.a.is_identity() {
                continue;
            }
            let ima = i_minus(&h.map.a);
            let mut m = QMat::zeros(d, d + 1);
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] = ima[(i, j)].clone();
                }
                m[(i, d)] = s[i].clone();
            }
            if meets_span(&m, &h.map.t) {
                core_free_ok = false;
                if witness.is_none() {
                    witness = Some(h.word.clone());
                }
                break;
            }
        }
        let verdict = parallel_ok.iter().all(|&b| b) && core_free_ok;
        Ok(AdmissibilityReport {
            sigma: sigma.clone(),
            length: curve_length(&self.lattice, sigma)?,
            parallel_ok,
            core_free_ok,
            verdict,
            witness: if verdict { None } else { witness },
        })
    }

    /// Admissible classes with length in `[lmin, lmax]`.
    pub fn enumerate_admissible(&self, lmin: f64, lmax: f64) -> Result<Vec<AdmissibilityReport>> {
        let candidates = enumerate_fillings(&self.lattice, lmin, lmax)?;
        let reports = candidates
            .par_iter()
            .map(|s| self.is_admissible(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(reports.into_iter().filter(|r| r.verdict).collect())
    }

    /// `D_lambda v` for each basis vector, through the shared projection-scaling routine.
    pub fn deformation_map(&self, sigma: &FillingCurve, lambda: &Q) -> QMat {
        let d = self.dim();
        let gram = self.gram();
        let s: Vec<Q> = sigma.coeffs().iter().map(|&c| q(c)).collect();
        let mut m = QMat::zeros(d, d);
        for j in 0..d {
            let e: Vec<Q> = (0..d).map(|i| if i == j { Q::one() } else { Q::zero() }).collect();
            let col = scale_along(&e, &s, |x, y| q_form(gram, x, y), lambda);
            for i in 0..d {
                m[(i, j)] = col[i].clone();
            }
        }
        m
    }

    /// The deformed action: linear parts unchanged, translation parts and
    /// lattice translations scaled along `sigma` by `lambda`.
    pub fn deform_action(&self, sigma: &FillingCurve, lambda: &Q) -> Result<BieberbachGroup> {
        let report = self.is_admissible(sigma)?;
        if !report.verdict {
            let reason = match &report.witness {
                Some(w) if !report.parallel_all() => format!("`{w}` does not preserve the line of sigma"),
                Some(w) => format!("`{w}` fixes a point of the core torus"),
                None => "not admissible".into(),
            };
            return Err(Error::NotAdmissible {
                sigma: sigma.coeffs().to_vec(),
                reason,
            });
        }
        self.deform_action_unchecked(sigma, lambda)
    }

    /// Same as [`deform_action`](Self::deform_action) without the admissibility gate.
    pub fn deform_action_unchecked(&self, sigma: &FillingCurve, lambda: &Q) -> Result<BieberbachGroup> {
        self.check_sigma(sigma)?;
        if lambda.is_negative() || *lambda > Q::one() {
            return Err(Error::OutOfRange {
                what: "lambda",
                value: q_to_f64(lambda),
                range: "[0, 1]".into(),
            });
        }
        let gram = self.gram().clone();
        let s: Vec<Q> = sigma.coeffs().iter().map(|&c| q(c)).collect();
        let map = self.deformation_map(sigma, lambda);
        let mut out = self.clone();
        for g in &mut out.generators {
            g.map.t = scale_along(&g.map.t, &s, |x, y| q_form(&gram, x, y), lambda);
        }
        // compose with an earlier deformation
        let map = match &self.deformation {
            Some(prev) => map.mul(&prev.map),
            None => map,
        };
        out.deformation = Some(Deformation {
            sigma: sigma.clone(),
            lambda: lambda.clone(),
            map,
        });
        Ok(out)
    }

    /// Gram of the deformed lattice generators `D v_i` in the flat metric.
    pub fn deformed_gram(&self) -> QMat {
        match &self.deformation {
            Some(d) => d.map.transpose().mul(self.gram()).mul(&d.map),
            None => self.gram().clone(),
        }
    }

    /// Serializes back to the text format.
    pub fn to_text(&self) -> String {
        let fm = |m: &QMat| {
            (0..m.rows)
                .map(|i| (0..m.cols).map(|j| format_q(&m[(i, j)])).collect::<Vec<_>>().join(" "))
                .collect::<Vec<_>>()
                .join(" ; ")
        };
        let names = self.generator_names();
        let mut s = format!("group {}\n", self.label());
        if let Some(a) = &self.alias {
            s += &format!("alias {a}\n");
        }
        if let Some(t) = &self.title {
            s += &format!("title {t}\n");
        }
        s += &format!("gram {}\n", fm(self.gram()));
        for g in &self.generators {
            let t: Vec<String> = g.map.t.iter().map(format_q).collect();
            s += &format!("gen {}: {} | {}\n", g.name, fm(&g.map.a), t.join(" "));
        }
        for w in &self.relations {
            s += &format!("relation {}\n", format_word(w, &names));
        }
        s += "end\n";
        s
    }
}
