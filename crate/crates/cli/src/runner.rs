use std::time::Instant;

use fncalc_core::dgla::{decompose, fn_bracket, generators, Derivation, OpaqueDerivation};
use fncalc_core::foliation::{self, DefiningCouple};
use fncalc_core::forms::{KForm, VectorField};
use fncalc_core::levi::{self, Hypersurface};
use fncalc_core::mc::{self, TypeReport, TypeValue};
use fncalc_core::vvform::VVForm;
use fncalc_core::Result;
use rayon::prelude::*;

use crate::report::{CheckRecord, Report, Status, WitnessData};
use crate::scenario::{Check, CheckKind, FnExpectation, Scenario, TypeExpectation, Vanishing};

pub const DEFAULT_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub cap: usize,
}

impl RunOptions {
    /// Command-line values win over the environment, which wins over the file.
    pub fn resolve(scn: &Scenario, seed: Option<u64>, env_seed: Option<u64>, cap: Option<usize>) -> Self {
        RunOptions {
            seed: seed.or(env_seed).or(scn.seed).unwrap_or(0),
            cap: cap.or(scn.cap).unwrap_or(DEFAULT_CAP),
        }
    }
}

/// Runs every check; records come back in declaration order.
pub fn run(scn: &Scenario, opts: RunOptions) -> Report {
    let records = scn.checks.par_iter().map(|c| run_check(c, opts)).collect();
    Report::new(scn.name.clone(), opts.seed, opts.cap, records)
}

struct Outcome {
    ok: bool,
    detail: String,
    witness: WitnessData,
    warnings: Vec<String>,
}

impl Outcome {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Outcome { ok, detail: detail.into(), witness: WitnessData::new(), warnings: Vec::new() }
    }

    fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.witness.insert(key.to_string(), value.into());
        self
    }
}

pub fn run_check(check: &Check, opts: RunOptions) -> CheckRecord {
    let start = Instant::now();
    let result = evaluate(&check.kind, opts);
    let elapsed_us = start.elapsed().as_micros() as u64;
    let (status, detail, witness, warnings) = match result {
        Ok(o) => {
            let status = if o.ok { Status::Pass } else { Status::Fail };
            let mut witness = o.witness;
            if !o.ok && witness.is_empty() {
                witness.insert("observed".into(), o.detail.clone());
            }
            (status, o.detail, (!witness.is_empty()).then_some(witness), o.warnings)
        }
        Err(e) => (Status::Error, e.to_string(), None, Vec::new()),
    };
    CheckRecord { name: check.name.clone(), kind: check.kind.label().to_string(), status, detail, witness, warnings, elapsed_us }
}

fn vanishing_ok(expect: &Vanishing, zero: bool) -> bool {
    match expect {
        Vanishing::Zero => zero,
        Vanishing::Nonzero => !zero,
    }
}

fn zero_word(zero: bool) -> &'static str {
    if zero {
        "zero"
    } else {
        "nonzero"
    }
}

fn compare<T: PartialEq + std::fmt::Display>(expect: &Option<T>, got: &T) -> (bool, String) {
    match expect {
        Some(e) if e != got => (false, format!("expected {e}")),
        Some(_) => (true, String::new()),
        None => (true, String::new()),
    }
}

fn join(detail: String, note: String) -> String {
    if note.is_empty() {
        detail
    } else {
        format!("{detail}; {note}")
    }
}

fn type_text(t: &TypeValue) -> String {
    match t {
        TypeValue::Finite(r) => format!("type {r}"),
        TypeValue::Infinite { stable_from } => format!("type infinite (powers stable from {stable_from})"),
        TypeValue::ExceedsCap => "type exceeds cap".to_string(),
    }
}

fn type_witness(report: &TypeReport, out: Outcome) -> Outcome {
    match &report.witness {
        Some(w) => {
            let names = w.value.chart().names();
            out.with("level", w.level.to_string())
                .with("pair", format!("(∂{}, ∂{})", names[w.pair.0], names[w.pair.1]))
                .with("value", w.value.fmt_components().join(", "))
        }
        None => out,
    }
}

/// First generator on which `d` does not vanish.
fn nonzero_on_generators(d: &Derivation) -> Result<Option<(KForm, KForm)>> {
    for g in generators(d.chart()) {
        let v = d.apply(&g)?;
        if !v.is_zero() {
            return Ok(Some((g, v)));
        }
    }
    Ok(None)
}

fn evaluate(kind: &CheckKind, opts: RunOptions) -> Result<Outcome> {
    match kind {
        CheckKind::Integrable { xi, expect } => {
            let res = foliation::is_integrable(xi)?;
            let (ok, note) = compare(expect, &res.integrable);
            let detail = if res.integrable { "integrable" } else { "not integrable" };
            let mut out = Outcome::new(ok, join(detail.to_string(), note));
            if let Some((i, j, b)) = res.witness {
                out = out.with("pair", format!("({}, {})", i + 1, j + 1)).with("bracket", b.fmt_components().join(", "));
            }
            Ok(out)
        }
        CheckKind::Type { phi, cap, expect } => {
            let report = mc::finite_type(phi, cap.unwrap_or(opts.cap))?;
            let got = match &report.type_value {
                TypeValue::Finite(r) => TypeExpectation::Finite(*r),
                TypeValue::Infinite { .. } => TypeExpectation::Infinite,
                TypeValue::ExceedsCap => TypeExpectation::ExceedsCap,
            };
            let (ok, note) = compare(expect, &got);
            let out = Outcome::new(ok, join(type_text(&report.type_value), note)).with("cap", report.cap.to_string());
            Ok(type_witness(&report, out))
        }
        CheckKind::McResidual { phi, psi, expect } => {
            let mut warnings = Vec::new();
            let d = match psi {
                Some(psi) => Derivation::new(phi, psi)?,
                None => {
                    let sol = mc::e_phi(phi)?;
                    if let Some(w) = mc::invert_endo(&mc::r_phi(phi)?)?.warning() {
                        warnings.push(w);
                    }
                    sol.e_phi
                }
            };
            let residual = mc::mc_residual(&d)?;
            let zero = residual.is_zero();
            let mut out = Outcome::new(vanishing_ok(expect, zero), format!("residual {}", zero_word(zero)));
            if !zero {
                out = out.with("residual", residual.to_string());
                if let Some((g, v)) = nonzero_on_generators(&residual)? {
                    out = out.with("on", g.fmt_pretty()).with("value", v.fmt_pretty());
                }
            }
            out.warnings = warnings;
            Ok(out)
        }
        CheckKind::FnBracket { left, right, on, value, expect } => fn_bracket_check(left, right, on.as_deref(), value.as_ref(), expect.as_ref()),
        CheckKind::Frobenius { couple, expect } => {
            let rep = foliation::frobenius_report(couple)?;
            let consistent = rep.consistent();
            let (ok, note) = compare(expect, &rep.involutive);
            let detail = format!(
                "involutive {}, form test {}, bracket test {}",
                rep.involutive, rep.form_test, rep.bracket_test
            );
            let mut out = Outcome::new(ok && consistent, join(detail, note));
            if !consistent {
                out = out.with("inconsistent", "the three criteria disagree");
            }
            if !rep.form_test {
                out = out.with("obstruction", foliation::frobenius_obstruction(couple)?.fmt_pretty());
            }
            Ok(out)
        }
        CheckKind::LeviFlat { hypersurface, samples, expect } => levi_flat_check(hypersurface, *samples, opts.seed, *expect),
        CheckKind::DeformationResidual { hypersurface, p, v, w, expect } => {
            let res = levi::deformation_residual(hypersurface, p, v, w)?;
            let chart = hypersurface.chart();
            let shown = chart.fmt_scalar(&res.value);
            let (ok, note) = match expect {
                Some(e) if *e != res.value => (false, format!("expected {}", chart.fmt_scalar(e))),
                _ => (true, String::new()),
            };
            let mut out = Outcome::new(ok, join(format!("residual {shown}"), note));
            if !ok {
                out = out.with("residual", shown);
            }
            out.warnings = res.warnings;
            Ok(out)
        }
        CheckKind::GammaSeries { phi, kmax, cap } => gamma_check(phi, *kmax, cap.unwrap_or(opts.cap)),
        CheckKind::DeltaAlfa { couple, alpha, y, expect } => delta_alfa_check(couple, alpha, y, expect),
    }
}

fn fn_bracket_check(
    left: &VVForm,
    right: &VVForm,
    on: Option<&[VectorField]>,
    value: Option<&VectorField>,
    expect: Option<&FnExpectation>,
) -> Result<Outcome> {
    let b = fn_bracket(left, right)?;
    let comm = OpaqueDerivation::commutator(&Derivation::lie(left).to_opaque(), &Derivation::lie(right).to_opaque());
    let decomposed = decompose(&comm)?;
    let oracle_ok = decomposed.i_part().map_or(true, VVForm::is_zero) && decomposed.l_part().map_or(b.is_zero(), |l| *l == b);
    let mut out = Outcome::new(oracle_ok, format!("bracket of degree {}", b.degree()));
    if !oracle_ok {
        out = out.with("commutator", decomposed.to_string()).with("closed_form", b.fmt_pretty());
    }
    match expect {
        Some(FnExpectation::Vanishing(v)) if !vanishing_ok(v, b.is_zero()) => {
            out.ok = false;
            out.detail = format!("{}; expected {}", out.detail, zero_word(!b.is_zero()));
            out = out.with("bracket", b.fmt_pretty());
        }
        Some(FnExpectation::Equals(e)) if *e != b => {
            out.ok = false;
            out.detail = format!("{}; differs from expected", out.detail);
            out = out.with("bracket", b.fmt_pretty()).with("expected", e.fmt_pretty());
        }
        _ => {}
    }
    if let (Some(on), Some(value)) = (on, value) {
        let refs: Vec<&VectorField> = on.iter().collect();
        let got = b.apply(&refs)?;
        if got != *value {
            out.ok = false;
            out.detail = format!("{}; value on arguments differs", out.detail);
            out = out.with("value", got.fmt_components().join(", ")).with("expected_value", value.fmt_components().join(", "));
        }
    }
    Ok(out)
}

fn levi_flat_check(h: &Hypersurface, samples: usize, seed: u64, expect: Option<bool>) -> Result<Outcome> {
    let rep = levi::is_levi_flat(h, samples, seed)?;
    let flat = rep.flat();
    let (ok, note) = compare(&expect, &flat);
    let detail = format!(
        "{} ({} points, max restricted {:.3e}, symbolic {})",
        if flat { "Levi-flat" } else { "not Levi-flat" },
        rep.points,
        rep.max_restricted,
        if rep.symbolic { "flat" } else { "not flat" }
    );
    let mut out = Outcome::new(ok && rep.agree(), join(detail, note));
    if !rep.agree() {
        out = out.with("disagreement", "numeric and symbolic checks differ");
    }
    if !out.ok || !flat {
        if let Some(w) = &rep.witness {
            out = out.with("point", w.clone());
        }
        let levi = h.complex_chart().levi_form(h.r());
        let chart = h.chart();
        let fmt = |m: &fncalc_core::linalg::Matrix| {
            m.iter()
                .map(|row| format!("[{}]", row.iter().map(|e| chart.fmt_scalar(e)).collect::<Vec<_>>().join(", ")))
                .collect::<Vec<_>>()
                .join(", ")
        };
        out = out.with("levi_re", fmt(&levi.re)).with("levi_im", fmt(&levi.im));
    }
    Ok(out)
}

fn gamma_check(phi: &VVForm, kmax: usize, cap: usize) -> Result<Outcome> {
    let rec = mc::gamma_series_recursive(phi, kmax)?;
    let mut out = Outcome::new(true, format!("recursion matches closed form for k ≤ {kmax}"));
    for (i, g) in rec.iter().enumerate() {
        let closed = mc::gamma_k(phi, i + 1)?;
        if !g.same_as(&closed) {
            out.ok = false;
            out.detail = format!("recursion differs from closed form at k = {}", i + 1);
            out = out.with("k", (i + 1).to_string()).with("recursive", g.to_string()).with("closed", closed.to_string());
            return Ok(out);
        }
    }
    if let TypeValue::Finite(r) = mc::finite_type(phi, cap)?.type_value {
        let mut sum = Derivation::zero(phi.chart(), 1);
        for k in 1..=r + 1 {
            sum = sum.add(&mc::gamma_k(phi, k)?);
        }
        let e = mc::e_phi(phi)?.e_phi;
        if sum.same_as(&e) {
            out.detail = format!("{}; sum of γ_k for k ≤ {} equals e_Φ", out.detail, r + 1);
        } else {
            out.ok = false;
            out.detail = format!("partial sum up to {} differs from e_Φ", r + 1);
            out = out.with("sum", sum.to_string()).with("e_phi", e.to_string());
        }
    }
    Ok(out)
}

fn delta_alfa_check(couple: &DefiningCouple, alpha: &KForm, y: &VectorField, expect: &Vanishing) -> Result<Outcome> {
    let res = foliation::delta_alfa_residual(couple, alpha, y)?;
    let zero = res.residual.is_zero() && res.compatibility.is_zero();
    let detail = format!(
        "residual {}, compatibility {}",
        res.residual.fmt_pretty(),
        alpha.chart().fmt_scalar(&res.compatibility)
    );
    let mut out = Outcome::new(vanishing_ok(expect, zero), detail);
    if !out.ok {
        out = out.with("residual", res.residual.fmt_pretty()).with("compatibility", alpha.chart().fmt_scalar(&res.compatibility));
    }
    Ok(out)
}

/// Text summary of `e_Φ`, its residual and type, for the `mc` subcommand.
pub fn describe_mc(phi: &VVForm, cap: usize) -> Result<(String, bool)> {
    let sol = mc::e_phi(phi)?;
    let residual = mc::mc_residual(&sol.e_phi)?;
    let report = mc::finite_type(phi, cap)?;
    let mut s = String::new();
    s.push_str(&format!("Φ    = {}\n", phi.fmt_pretty()));
    s.push_str(&format!("b(Φ) = {}\n", sol.b_phi.fmt_pretty()));
    s.push_str(&format!("e_Φ  = {}\n", sol.e_phi));
    s.push_str(&format!("MC residual {}\n", zero_word(residual.is_zero())));
    s.push_str(&format!("{}\n", type_text(&report.type_value)));
    if let Some(w) = mc::invert_endo(&mc::r_phi(phi)?)?.warning() {
        s.push_str(&format!("warning: {w}\n"));
    }
    Ok((s, residual.is_zero()))
}

/// Text summary of the Levi data of a hypersurface, for the `levi` subcommand.
pub fn describe_levi(h: &Hypersurface, samples: usize, seed: u64) -> Result<String> {
    let chart = h.chart();
    let cc = levi::canonical_couple(h)?;
    let rep = levi::is_levi_flat(h, samples, seed)?;
    let levi_m = h.complex_chart().levi_form(h.r());
    let mut s = String::new();
    s.push_str(&format!("r = {}\n", chart.fmt_scalar(h.r())));
    s.push_str(&format!("γ = d^c r = {}\n", cc.gamma().fmt_pretty()));
    s.push_str(&format!("X = ({})\n", cc.x_field().fmt_components().join(", ")));
    s.push_str(&format!("Z = ({})\n", cc.z.fmt_components().join(", ")));
    for (name, m) in [("Re", &levi_m.re), ("Im", &levi_m.im)] {
        for row in m {
            s.push_str(&format!("{name} L: [{}]\n", row.iter().map(|e| chart.fmt_scalar(e)).collect::<Vec<_>>().join(", ")));
        }
    }
    s.push_str(&format!(
        "Levi-flat: numeric {} ({} points, max {:.3e}), symbolic {}\n",
        rep.numeric, rep.points, rep.max_restricted, rep.symbolic
    ));
    if let Some(w) = &rep.witness {
        s.push_str(&format!("witness: {w}\n"));
    }
    for w in &cc.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    Ok(s)
}
