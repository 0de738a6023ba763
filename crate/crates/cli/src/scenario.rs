//! Scenario files: one chart, named objects, and a list of checks.
//!
//! The surface syntax is TOML. Scalars are strings in the engine's infix
//! syntax; forms are lists of terms `{ idx = ["x", "y"], coef = "x^2" }`
//! meaning `x^2 dx∧dy`, with `idx = []` for a function.
//!
//! ```toml
//! seed = 7
//!
//! [chart]
//! coordinates = ["x", "y", "z"]
//!
//! [vector]
//! X1 = ["1", "0", "0"]
//! X2 = ["0", "1", "x"]
//!
//! [distribution.xi]
//! generators = ["X1", "X2"]
//!
//! [[check]]
//! kind = "integrable"
//! distribution = "xi"
//! expect = false
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;

use fncalc_core::foliation::{self, DefiningCouple, Distribution};
use fncalc_core::forms::{Chart, KForm, VectorField};
use fncalc_core::levi::{ComplexChart, Hypersurface};
use fncalc_core::scalar::{parse_scalar, Rational, Scalar};
use fncalc_core::vvform::VVForm;
use serde::Deserialize;
use toml::Spanned;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Unresolved(String),
    Duplicate(String),
    ChartMismatch,
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub location: Location,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = Result<T, ParseError>;

fn locate(text: &str, offset: usize) -> Location {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Location { line, column }
}

// ---------------------------------------------------------------------------
// Raw TOML layer

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    seed: Option<u64>,
    cap: Option<usize>,
    chart: Spanned<RawChart>,
    #[serde(default)]
    scalar: BTreeMap<String, Spanned<String>>,
    #[serde(default)]
    vector: BTreeMap<String, Spanned<Vec<Spanned<String>>>>,
    #[serde(default)]
    form: BTreeMap<String, Spanned<RawForm>>,
    #[serde(default)]
    vvform: BTreeMap<String, Spanned<RawVVForm>>,
    #[serde(default)]
    distribution: BTreeMap<String, Spanned<RawDistribution>>,
    #[serde(default)]
    couple: BTreeMap<String, Spanned<RawCouple>>,
    #[serde(default)]
    flag: BTreeMap<String, Spanned<RawFlag>>,
    #[serde(default)]
    projection: BTreeMap<String, Spanned<RawProjection>>,
    #[serde(default)]
    hypersurface: BTreeMap<String, Spanned<RawHypersurface>>,
    #[serde(default)]
    check: Vec<Spanned<RawCheck>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    coordinates: Option<Vec<String>>,
    complex: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    idx: Spanned<Vec<String>>,
    coef: Spanned<String>,
}

type Terms = Vec<RawTerm>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForm {
    degree: Option<usize>,
    #[serde(default)]
    terms: Terms,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVVForm {
    degree: Option<usize>,
    matrix: Option<Vec<Vec<Spanned<String>>>>,
    components: Option<Vec<Terms>>,
    form: Option<Spanned<String>>,
    vector: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    generators: Option<Vec<Spanned<String>>>,
    kernel: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCouple {
    gamma: Spanned<String>,
    x: Spanned<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlag {
    frame: Vec<Spanned<String>>,
    s: usize,
    d: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProjection {
    xi: Spanned<String>,
    zeta: Spanned<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHypersurface {
    r: Spanned<String>,
    metric: Option<Vec<Vec<Spanned<String>>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    gamma: Terms,
    x: Vec<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    kind: Spanned<String>,
    name: Option<String>,
    distribution: Option<Spanned<String>>,
    endo: Option<Spanned<String>>,
    psi: Option<Spanned<String>>,
    left: Option<Spanned<String>>,
    right: Option<Spanned<String>>,
    on: Option<Vec<Spanned<String>>>,
    value: Option<Spanned<String>>,
    couple: Option<Spanned<String>>,
    alpha: Option<Spanned<String>>,
    y: Option<Spanned<String>>,
    family: Option<Spanned<RawFamily>>,
    hypersurface: Option<Spanned<String>>,
    p: Option<Spanned<String>>,
    v: Option<Spanned<String>>,
    w: Option<Spanned<String>>,
    samples: Option<usize>,
    cap: Option<usize>,
    kmax: Option<usize>,
    expect: Option<Spanned<toml::Value>>,
}

// ---------------------------------------------------------------------------
// Resolved scenario

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeExpectation {
    Finite(usize),
    Infinite,
    ExceedsCap,
}

impl fmt::Display for TypeExpectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpectation::Finite(r) => write!(f, "type {r}"),
            TypeExpectation::Infinite => write!(f, "infinite type"),
            TypeExpectation::ExceedsCap => write!(f, "type beyond the cap"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Vanishing {
    Zero,
    Nonzero,
}

#[derive(Clone, Debug)]
pub enum CheckKind {
    Integrable { xi: Distribution, expect: Option<bool> },
    Type { phi: VVForm, cap: Option<usize>, expect: Option<TypeExpectation> },
    McResidual { phi: VVForm, psi: Option<VVForm>, expect: Vanishing },
    FnBracket { left: VVForm, right: VVForm, on: Option<Vec<VectorField>>, value: Option<VectorField>, expect: Option<FnExpectation> },
    Frobenius { couple: DefiningCouple, expect: Option<bool> },
    LeviFlat { hypersurface: Hypersurface, samples: usize, expect: Option<bool> },
    DeformationResidual { hypersurface: Hypersurface, p: Scalar, v: VectorField, w: VectorField, expect: Option<Scalar> },
    GammaSeries { phi: VVForm, kmax: usize, cap: Option<usize> },
    DeltaAlfa { couple: DefiningCouple, alpha: KForm, y: VectorField, expect: Vanishing },
}

#[derive(Clone, Debug)]
pub enum FnExpectation {
    Vanishing(Vanishing),
    Equals(VVForm),
}

impl CheckKind {
    pub fn label(&self) -> &'static str {
        match self {
            CheckKind::Integrable { .. } => "integrable",
            CheckKind::Type { .. } => "type",
            CheckKind::McResidual { .. } => "mc_residual",
            CheckKind::FnBracket { .. } => "fn_bracket",
            CheckKind::Frobenius { .. } => "frobenius",
            CheckKind::LeviFlat { .. } => "levi_flat",
            CheckKind::DeformationResidual { .. } => "deformation_residual",
            CheckKind::GammaSeries { .. } => "gamma_series",
            CheckKind::DeltaAlfa { .. } => "delta_alfa",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub location: Location,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub chart: Chart,
    pub complex: Option<ComplexChart>,
    pub seed: Option<u64>,
    pub cap: Option<usize>,
    pub scalars: BTreeMap<String, Scalar>,
    pub vectors: BTreeMap<String, VectorField>,
    pub forms: BTreeMap<String, KForm>,
    pub vvforms: BTreeMap<String, VVForm>,
    pub distributions: BTreeMap<String, Distribution>,
    pub couples: BTreeMap<String, DefiningCouple>,
    pub hypersurfaces: BTreeMap<String, Hypersurface>,
    pub checks: Vec<Check>,
}

pub const CHECK_KINDS: [&str; 9] = [
    "integrable",
    "type",
    "mc_residual",
    "fn_bracket",
    "frobenius",
    "levi_flat",
    "deformation_residual",
    "gamma_series",
    "delta_alfa",
];

/// Parses and resolves a scenario; `default_name` is used when the file has
/// no `name` key.
pub fn parse_scenario(text: &str, default_name: &str) -> PResult<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ParseError {
        kind: ParseErrorKind::Syntax,
        location: locate(text, e.span().map_or(0, |s| s.start)),
        message: e.message().to_string(),
    })?;
    Resolver::new(text).resolve(raw, default_name)
}

struct Resolver<'a> {
    text: &'a str,
    owner: HashMap<String, &'static str>,
}

impl<'a> Resolver<'a> {
    fn new(text: &'a str) -> Self {
        Resolver { text, owner: HashMap::new() }
    }

    fn err(&self, kind: ParseErrorKind, span: Range<usize>, message: impl Into<String>) -> ParseError {
        ParseError { kind, location: locate(self.text, span.start), message: message.into() }
    }

    fn invalid(&self, span: Range<usize>, message: impl Into<String>) -> ParseError {
        self.err(ParseErrorKind::Invalid, span, message)
    }

    fn claim(&mut self, name: &str, what: &'static str, span: Range<usize>) -> PResult<()> {
        if let Some(prev) = self.owner.get(name) {
            return Err(self.err(
                ParseErrorKind::Duplicate(name.to_string()),
                span,
                format!("name \"{name}\" already declared as a {prev}"),
            ));
        }
        self.owner.insert(name.to_string(), what);
        Ok(())
    }

    fn scalar(&self, chart: &Chart, s: &Spanned<String>) -> PResult<Scalar> {
        chart.parse(s.get_ref()).map_err(|e| {
            let mut span = s.span();
            if let fncalc_core::Error::Parse { column, .. } = &e {
                // the span includes the opening quote
                span.start += column;
            }
            let unknown = match &e {
                fncalc_core::Error::Parse { message, .. } => message.strip_prefix("unknown coordinate ").map(|n| n.trim_matches(['\'', '"']).to_string()),
                _ => None,
            };
            match unknown {
                Some(n) => self.err(ParseErrorKind::Unresolved(n.clone()), span, format!("unknown name \"{n}\" in scalar \"{}\"", s.get_ref())),
                None => self.invalid(span, format!("bad scalar \"{}\": {e}", s.get_ref())),
            }
        })
    }

    fn lookup<'m, T>(&self, map: &'m BTreeMap<String, T>, what: &str, name: &Spanned<String>) -> PResult<&'m T> {
        map.get(name.get_ref()).ok_or_else(|| {
            let found = self.owner.get(name.get_ref().as_str());
            let message = match found {
                Some(other) => format!("\"{}\" is a {other}, expected a {what}", name.get_ref()),
                None => format!("undefined {what} \"{}\"", name.get_ref()),
            };
            self.err(ParseErrorKind::Unresolved(name.get_ref().clone()), name.span(), message)
        })
    }

    fn basis(&self, chart: &Chart, idx: &Spanned<Vec<String>>) -> PResult<Vec<usize>> {
        idx.get_ref()
            .iter()
            .map(|name| {
                chart.index_of(name).ok_or_else(|| {
                    self.err(ParseErrorKind::ChartMismatch, idx.span(), format!("\"{name}\" is not a coordinate of the chart"))
                })
            })
            .collect()
    }

    fn form(&self, chart: &Chart, degree: Option<usize>, terms: &Terms, span: Range<usize>) -> PResult<KForm> {
        let mut parsed = Vec::new();
        for t in terms {
            let idx = self.basis(chart, &t.idx)?;
            parsed.push((idx, self.scalar(chart, &t.coef)?));
        }
        let degree = match (degree, parsed.first()) {
            (Some(d), _) => d,
            (None, Some((idx, _))) => idx.len(),
            (None, None) => return Err(self.invalid(span, "empty form needs an explicit degree")),
        };
        if let Some((idx, _)) = parsed.iter().find(|(idx, _)| idx.len() != degree) {
            return Err(self.invalid(span, format!("term of degree {} in a form of degree {degree}", idx.len())));
        }
        KForm::from_terms(chart, degree, parsed).map_err(|e| self.invalid(span, e.to_string()))
    }

    fn vector(&self, chart: &Chart, comps: &[Spanned<String>], span: Range<usize>) -> PResult<VectorField> {
        if comps.len() != chart.dim() {
            return Err(self.err(
                ParseErrorKind::ChartMismatch,
                span,
                format!("vector has {} components, chart has dimension {}", comps.len(), chart.dim()),
            ));
        }
        let comps = comps.iter().map(|c| self.scalar(chart, c)).collect::<PResult<_>>()?;
        VectorField::new(chart, comps).map_err(|e| self.invalid(span, e.to_string()))
    }

    fn matrix(&self, chart: &Chart, rows: &[Vec<Spanned<String>>], span: Range<usize>) -> PResult<Vec<Vec<Scalar>>> {
        let n = chart.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(self.err(ParseErrorKind::ChartMismatch, span, format!("matrix must be {n}×{n}")));
        }
        rows.iter().map(|r| r.iter().map(|e| self.scalar(chart, e)).collect()).collect()
    }

    fn chart(&self, raw: &Spanned<RawChart>) -> PResult<(Chart, Option<ComplexChart>)> {
        let span = raw.span();
        let c = raw.get_ref();
        match (&c.coordinates, c.complex) {
            (Some(names), None) => {
                let chart = Chart::new(names).map_err(|e| self.invalid(span, e.to_string()))?;
                let complex = (chart.dim() % 2 == 0).then(|| ComplexChart::new(&chart, None).ok()).flatten();
                Ok((chart, complex))
            }
            (None, Some(n)) => {
                let cc = ComplexChart::standard(n).map_err(|e| self.invalid(span, e.to_string()))?;
                Ok((cc.chart().clone(), Some(cc)))
            }
            _ => Err(self.invalid(span, "chart needs exactly one of `coordinates` or `complex`")),
        }
    }

    fn resolve(mut self, raw: RawScenario, default_name: &str) -> PResult<Scenario> {
        let (chart, complex) = self.chart(&raw.chart)?;
        for name in chart.names() {
            self.owner.insert(name.clone(), "coordinate");
        }
        let mut scn = Scenario {
            name: raw.name.clone().unwrap_or_else(|| default_name.to_string()),
            chart: chart.clone(),
            complex,
            seed: raw.seed,
            cap: raw.cap,
            scalars: BTreeMap::new(),
            vectors: BTreeMap::new(),
            forms: BTreeMap::new(),
            vvforms: BTreeMap::new(),
            distributions: BTreeMap::new(),
            couples: BTreeMap::new(),
            hypersurfaces: BTreeMap::new(),
            checks: Vec::new(),
        };
        for (name, s) in &raw.scalar {
            self.claim(name, "scalar", s.span())?;
            scn.scalars.insert(name.clone(), self.scalar(&chart, s)?);
        }
        for (name, v) in &raw.vector {
            self.claim(name, "vector", v.span())?;
            scn.vectors.insert(name.clone(), self.vector(&chart, v.get_ref(), v.span())?);
        }
        for (name, f) in &raw.form {
            self.claim(name, "form", f.span())?;
            let r = f.get_ref();
            scn.forms.insert(name.clone(), self.form(&chart, r.degree, &r.terms, f.span())?);
        }
        for (name, v) in &raw.vvform {
            self.claim(name, "vvform", v.span())?;
            let value = self.vvform(&chart, &scn, v)?;
            scn.vvforms.insert(name.clone(), value);
        }
        for (name, d) in &raw.distribution {
            self.claim(name, "distribution", d.span())?;
            let r = d.get_ref();
            let value = match (&r.generators, &r.kernel) {
                (Some(gens), None) => {
                    let gens = gens.iter().map(|g| self.lookup(&scn.vectors, "vector", g).cloned()).collect::<PResult<Vec<_>>>()?;
                    Distribution::new(&chart, gens)
                }
                (None, Some(k)) => Distribution::kernel_of(self.lookup(&scn.forms, "form", k)?),
                _ => return Err(self.invalid(d.span(), "distribution needs exactly one of `generators` or `kernel`")),
            };
            scn.distributions.insert(name.clone(), value.map_err(|e| self.invalid(d.span(), e.to_string()))?);
        }
        for (name, c) in &raw.couple {
            self.claim(name, "couple", c.span())?;
            let r = c.get_ref();
            let gamma = self.lookup(&scn.forms, "form", &r.gamma)?;
            let x = self.lookup(&scn.vectors, "vector", &r.x)?;
            let value = DefiningCouple::new(gamma, x).map_err(|e| self.invalid(c.span(), e.to_string()))?;
            scn.couples.insert(name.clone(), value);
        }
        for (name, f) in &raw.flag {
            self.claim(name, "flag endomorphism", f.span())?;
            let r = f.get_ref();
            let frame = r.frame.iter().map(|g| self.lookup(&scn.vectors, "vector", g).cloned()).collect::<PResult<Vec<_>>>()?;
            let flag = foliation::flag_endo(&frame, r.s, r.d).map_err(|e| self.invalid(f.span(), e.to_string()))?;
            scn.vvforms.insert(name.clone(), flag.phi);
        }
        for (name, p) in &raw.projection {
            self.claim(name, "projection endomorphism", p.span())?;
            let r = p.get_ref();
            let xi = self.lookup(&scn.distributions, "distribution", &r.xi)?;
            let zeta = self.lookup(&scn.distributions, "distribution", &r.zeta)?;
            let phi = foliation::projection_endo(xi, zeta).map_err(|e| self.invalid(p.span(), e.to_string()))?;
            scn.vvforms.insert(name.clone(), phi);
        }
        for (name, h) in &raw.hypersurface {
            self.claim(name, "hypersurface", h.span())?;
            let cc = scn.complex.as_ref().ok_or_else(|| {
                self.err(ParseErrorKind::ChartMismatch, h.span(), "hypersurfaces need an even-dimensional (complex) chart")
            })?;
            let r = self.scalar(&chart, &h.get_ref().r)?;
            let with_metric;
            let cc = match &h.get_ref().metric {
                Some(rows) => {
                    let m = self.matrix(&chart, rows, h.span())?;
                    with_metric = ComplexChart::new(&chart, Some(m)).map_err(|e| self.invalid(h.span(), e.to_string()))?;
                    &with_metric
                }
                None => cc,
            };
            let value = Hypersurface::new(cc, &r).map_err(|e| self.invalid(h.span(), e.to_string()))?;
            scn.hypersurfaces.insert(name.clone(), value);
        }
        let mut seen = HashMap::new();
        for (i, c) in raw.check.iter().enumerate() {
            let check = self.check(&scn, c, i)?;
            if seen.insert(check.name.clone(), ()).is_some() {
                return Err(self.err(ParseErrorKind::Duplicate(check.name.clone()), c.span(), format!("duplicate check name \"{}\"", check.name)));
            }
            scn.checks.push(check);
        }
        Ok(scn)
    }

    fn vvform(&self, chart: &Chart, scn: &Scenario, v: &Spanned<RawVVForm>) -> PResult<VVForm> {
        let r = v.get_ref();
        let span = v.span();
        let built = match (&r.matrix, &r.components, &r.form, &r.vector) {
            (Some(m), None, None, None) => VVForm::from_endo_matrix(chart, &self.matrix(chart, m, span.clone())?),
            (None, Some(comps), None, None) => {
                if comps.len() != chart.dim() {
                    return Err(self.err(ParseErrorKind::ChartMismatch, span, format!("{} components for a chart of dimension {}", comps.len(), chart.dim())));
                }
                let degree = r.degree.or_else(|| comps.iter().flatten().next().map(|t| t.idx.get_ref().len()));
                let degree = degree.ok_or_else(|| self.invalid(span.clone(), "empty vvform needs an explicit degree"))?;
                let forms = comps.iter().map(|t| self.form(chart, Some(degree), t, span.clone())).collect::<PResult<Vec<_>>>()?;
                VVForm::new(chart, degree, forms)
            }
            (None, None, Some(f), Some(x)) => {
                VVForm::decomposable(self.lookup(&scn.forms, "form", f)?, self.lookup(&scn.vectors, "vector", x)?)
            }
            _ => return Err(self.invalid(span, "vvform needs `matrix`, `components`, or `form` with `vector`")),
        };
        built.map_err(|e| self.invalid(span, e.to_string()))
    }

    fn need<'r>(&self, field: &'r Option<Spanned<String>>, key: &str, kind: &Spanned<String>) -> PResult<&'r Spanned<String>> {
        field.as_ref().ok_or_else(|| self.invalid(kind.span(), format!("check `{}` needs `{key}`", kind.get_ref())))
    }

    fn expect_bool(&self, e: &Option<Spanned<toml::Value>>) -> PResult<Option<bool>> {
        match e {
            None => Ok(None),
            Some(v) => v.get_ref().as_bool().map(Some).ok_or_else(|| self.invalid(v.span(), "expected a boolean `expect`")),
        }
    }

    fn expect_vanishing(&self, e: &Option<Spanned<toml::Value>>) -> PResult<Option<Vanishing>> {
        match e {
            None => Ok(None),
            Some(v) => match v.get_ref().as_str() {
                Some("zero") => Ok(Some(Vanishing::Zero)),
                Some("nonzero") => Ok(Some(Vanishing::Nonzero)),
                _ => Err(self.invalid(v.span(), "`expect` must be \"zero\" or \"nonzero\"")),
            },
        }
    }

    fn scalar_arg(&self, scn: &Scenario, s: &Spanned<String>) -> PResult<Scalar> {
        match scn.scalars.get(s.get_ref()) {
            Some(v) => Ok(v.clone()),
            None => self.scalar(&scn.chart, s),
        }
    }

    fn check(&self, scn: &Scenario, c: &Spanned<RawCheck>, index: usize) -> PResult<Check> {
        let r = c.get_ref();
        let k = &r.kind;
        let kind = match k.get_ref().as_str() {
            "integrable" => CheckKind::Integrable {
                xi: self.lookup(&scn.distributions, "distribution", self.need(&r.distribution, "distribution", k)?)?.clone(),
                expect: self.expect_bool(&r.expect)?,
            },
            "type" => {
                let expect = match &r.expect {
                    None => None,
                    Some(v) => Some(match v.get_ref() {
                        toml::Value::Integer(i) if *i >= 0 => TypeExpectation::Finite(*i as usize),
                        toml::Value::String(s) if s == "infinite" => TypeExpectation::Infinite,
                        toml::Value::String(s) if s == "exceeds_cap" => TypeExpectation::ExceedsCap,
                        _ => return Err(self.invalid(v.span(), "`expect` must be a natural number, \"infinite\" or \"exceeds_cap\"")),
                    }),
                };
                CheckKind::Type { phi: self.lookup(&scn.vvforms, "vvform", self.need(&r.endo, "endo", k)?)?.clone(), cap: r.cap, expect }
            }
            "mc_residual" => CheckKind::McResidual {
                phi: self.lookup(&scn.vvforms, "vvform", self.need(&r.endo, "endo", k)?)?.clone(),
                psi: r.psi.as_ref().map(|p| self.lookup(&scn.vvforms, "vvform", p).cloned()).transpose()?,
                expect: self.expect_vanishing(&r.expect)?.unwrap_or(Vanishing::Zero),
            },
            "fn_bracket" => {
                let expect = match &r.expect {
                    None => None,
                    Some(v) => match v.get_ref().as_str() {
                        Some("zero") => Some(FnExpectation::Vanishing(Vanishing::Zero)),
                        Some("nonzero") => Some(FnExpectation::Vanishing(Vanishing::Nonzero)),
                        Some(name) => {
                            let spanned = Spanned::new(v.span(), name.to_string());
                            Some(FnExpectation::Equals(self.lookup(&scn.vvforms, "vvform", &spanned)?.clone()))
                        }
                        None => return Err(self.invalid(v.span(), "`expect` must be \"zero\", \"nonzero\" or a vvform name")),
                    },
                };
                let on = r.on.as_ref().map(|vs| vs.iter().map(|v| self.lookup(&scn.vectors, "vector", v).cloned()).collect::<PResult<Vec<_>>>()).transpose()?;
                let value = r.value.as_ref().map(|v| self.lookup(&scn.vectors, "vector", v).cloned()).transpose()?;
                if value.is_some() != on.is_some() {
                    return Err(self.invalid(k.span(), "`on` and `value` go together"));
                }
                CheckKind::FnBracket {
                    left: self.lookup(&scn.vvforms, "vvform", self.need(&r.left, "left", k)?)?.clone(),
                    right: self.lookup(&scn.vvforms, "vvform", self.need(&r.right, "right", k)?)?.clone(),
                    on,
                    value,
                    expect,
                }
            }
            "frobenius" => CheckKind::Frobenius {
                couple: self.lookup(&scn.couples, "couple", self.need(&r.couple, "couple", k)?)?.clone(),
                expect: self.expect_bool(&r.expect)?,
            },
            "levi_flat" => CheckKind::LeviFlat {
                hypersurface: self.lookup(&scn.hypersurfaces, "hypersurface", self.need(&r.hypersurface, "hypersurface", k)?)?.clone(),
                samples: r.samples.unwrap_or(16),
                expect: self.expect_bool(&r.expect)?,
            },
            "deformation_residual" => {
                let expect = match &r.expect {
                    None => None,
                    Some(v) => {
                        let text = match v.get_ref() {
                            toml::Value::String(s) => s.clone(),
                            toml::Value::Integer(i) => i.to_string(),
                            _ => return Err(self.invalid(v.span(), "`expect` must be a scalar")),
                        };
                        Some(self.scalar(&scn.chart, &Spanned::new(v.span(), text))?)
                    }
                };
                CheckKind::DeformationResidual {
                    hypersurface: self.lookup(&scn.hypersurfaces, "hypersurface", self.need(&r.hypersurface, "hypersurface", k)?)?.clone(),
                    p: self.scalar_arg(scn, self.need(&r.p, "p", k)?)?,
                    v: self.lookup(&scn.vectors, "vector", self.need(&r.v, "v", k)?)?.clone(),
                    w: self.lookup(&scn.vectors, "vector", self.need(&r.w, "w", k)?)?.clone(),
                    expect,
                }
            }
            "gamma_series" => CheckKind::GammaSeries {
                phi: self.lookup(&scn.vvforms, "vvform", self.need(&r.endo, "endo", k)?)?.clone(),
                kmax: r.kmax.unwrap_or(5),
                cap: r.cap,
            },
            "delta_alfa" => {
                let expect = self.expect_vanishing(&r.expect)?.unwrap_or(Vanishing::Zero);
                match (&r.family, &r.couple) {
                    (Some(fam), None) => {
                        let (couple, alpha, y) = self.family(&scn.chart, fam)?;
                        CheckKind::DeltaAlfa { couple, alpha, y, expect }
                    }
                    (None, Some(cp)) => {
                        let couple = self.lookup(&scn.couples, "couple", cp)?.clone();
                        let alpha = self.lookup(&scn.forms, "form", self.need(&r.alpha, "alpha", k)?)?.clone();
                        let y = match &r.y {
                            Some(y) => self.lookup(&scn.vectors, "vector", y)?.clone(),
                            None => VectorField::zero(&scn.chart),
                        };
                        CheckKind::DeltaAlfa { couple, alpha, y, expect }
                    }
                    _ => return Err(self.invalid(k.span(), "check `delta_alfa` needs exactly one of `couple` or `family`")),
                }
            }
            other => {
                return Err(self.invalid(k.span(), format!("unknown check kind \"{other}\" (known: {})", CHECK_KINDS.join(", "))));
            }
        };
        let name = r.name.clone().unwrap_or_else(|| format!("{}#{}", k.get_ref(), index + 1));
        Ok(Check { name, kind, location: locate(self.text, c.span().start) })
    }

    /// A family `(γ_t, X_t)` in the parameter `t`, differentiated at `t = 0`.
    fn family(&self, chart: &Chart, fam: &Spanned<RawFamily>) -> PResult<(DefiningCouple, KForm, VectorField)> {
        let span = fam.span();
        if chart.index_of("t").is_some() {
            return Err(self.invalid(span, "a family parameter `t` clashes with a chart coordinate named t"));
        }
        let mut names = chart.names().to_vec();
        names.push("t".to_string());
        let t = chart.dim();
        let zero = Rational::from_integer(0.into());
        let parse = |s: &Spanned<String>| -> PResult<(Scalar, Scalar)> {
            let v = parse_scalar(s.get_ref(), &names).map_err(|e| self.invalid(s.span(), format!("bad scalar \"{}\": {e}", s.get_ref())))?;
            let at0 = v.substitute(t, &zero).map_err(|e| self.invalid(s.span(), e.to_string()))?;
            let dt = v.partial(t).substitute(t, &zero).map_err(|e| self.invalid(s.span(), e.to_string()))?;
            Ok((at0, dt))
        };
        let r = fam.get_ref();
        let mut g0 = Vec::new();
        let mut g1 = Vec::new();
        for term in &r.gamma {
            let idx = self.basis(chart, &term.idx)?;
            if idx.len() != 1 {
                return Err(self.invalid(term.idx.span(), "the family γ_t must be a 1-form"));
            }
            let (a, b) = parse(&term.coef)?;
            g0.push((idx.clone(), a));
            g1.push((idx, b));
        }
        if r.x.len() != chart.dim() {
            return Err(self.err(ParseErrorKind::ChartMismatch, span, "family vector has the wrong number of components"));
        }
        let (x0, x1): (Vec<_>, Vec<_>) = r.x.iter().map(parse).collect::<PResult<Vec<_>>>()?.into_iter().unzip();
        let wrap = |e: fncalc_core::Error| self.invalid(span.clone(), e.to_string());
        let gamma = KForm::from_terms(chart, 1, g0).map_err(wrap)?;
        let alpha = KForm::from_terms(chart, 1, g1).map_err(wrap)?;
        let x = VectorField::new(chart, x0).map_err(wrap)?;
        let y = VectorField::new(chart, x1).map_err(wrap)?;
        let couple = DefiningCouple::new(&gamma, &x).map_err(wrap)?;
        Ok((couple, alpha, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R3: &str = "[chart]\ncoordinates = [\"x\", \"y\", \"z\"]\n";

    #[test]
    fn chart_only_file_has_no_checks() {
        let s = parse_scenario(R3, "min").unwrap();
        assert!(s.checks.is_empty());
        assert_eq!(s.chart.dim(), 3);
        assert!(s.complex.is_none());
    }

    #[test]
    fn undefined_reference_is_located() {
        let text = format!("{R3}\n[[check]]\nkind = \"type\"\nendo = \"Phi\"\n");
        let e = parse_scenario(&text, "bad").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Unresolved("Phi".into()));
        assert_eq!(e.location, Location { line: 6, column: 8 });
        assert!(e.message.contains("Phi"));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_scenario("[chart]\ncoordinates = [\"x\"\n", "bad").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert!(e.location.line >= 2);
    }

    #[test]
    fn arity_is_checked_against_the_chart() {
        let text = format!("{R3}[vector]\nX = [\"1\", \"0\"]\n");
        let e = parse_scenario(&text, "bad").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ChartMismatch);
        assert_eq!(e.location.line, 4);
        let text = format!("{R3}[form.a]\nterms = [{{ idx = [\"w\"], coef = \"1\" }}]\n");
        assert_eq!(parse_scenario(&text, "bad").unwrap_err().kind, ParseErrorKind::ChartMismatch);
    }

    #[test]
    fn unknown_coordinate_in_scalar() {
        let text = format!("{R3}[scalar]\nf = \"x + q\"\n");
        let e = parse_scenario(&text, "bad").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Unresolved("q".into()));
        assert_eq!(e.location, Location { line: 4, column: 10 });
    }

    #[test]
    fn names_are_unique_across_kinds() {
        let text = format!("{R3}[scalar]\nf = \"x\"\n[vector]\nf = [\"1\", \"0\", \"0\"]\n");
        assert_eq!(parse_scenario(&text, "bad").unwrap_err().kind, ParseErrorKind::Duplicate("f".into()));
        let text = format!("{R3}[scalar]\nx = \"y\"\n");
        assert_eq!(parse_scenario(&text, "bad").unwrap_err().kind, ParseErrorKind::Duplicate("x".into()));
    }

    #[test]
    fn forms_and_vvforms() {
        let text = format!(
            r#"{R3}
[form.g]
terms = [{{ idx = ["z"], coef = "1" }}, {{ idx = ["y"], coef = "-x" }}]
[form.area]
terms = [{{ idx = ["x", "y"], coef = "2" }}]
[form.f]
terms = [{{ idx = [], coef = "x*y" }}]
[vector]
Z = ["0", "0", "1"]
[vvform.P]
form = "g"
vector = "Z"
[vvform.B]
components = [[], [], [{{ idx = ["x", "y"], coef = "1" }}]]
"#
        );
        let s = parse_scenario(&text, "ok").unwrap();
        assert_eq!(s.forms["g"].degree(), 1);
        assert_eq!(s.forms["area"].coeff(&[0, 1]), Scalar::int(2));
        assert_eq!(s.vvforms["P"].comp(2), &s.forms["g"]);
        assert_eq!(s.vvforms["B"].degree(), 2);
        assert_eq!(s.forms["f"].degree(), 0);
    }

    #[test]
    fn family_is_differentiated_at_zero() {
        let text = format!(
            "{R3}[[check]]\nkind = \"delta_alfa\"\nfamily = {{ gamma = [{{ idx = [\"z\"], coef = \"1\" }}, {{ idx = [\"y\"], coef = \"-t\" }}], x = [\"0\", \"0\", \"1\"] }}\n"
        );
        let s = parse_scenario(&text, "fam").unwrap();
        match &s.checks[0].kind {
            CheckKind::DeltaAlfa { couple, alpha, y, .. } => {
                assert_eq!(couple.gamma(), &KForm::dx(&s.chart, 2));
                assert_eq!(alpha, &KForm::dx(&s.chart, 1).neg());
                assert!(y.is_zero());
            }
            other => panic!("{other:?}"),
        }
    }
}
