//! Config-driven pipeline: hierarchy, assembly, residual, error solve and
//! verification, with JSON/CSV artifacts and pass/fail gates.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assembly::{fit_eps_exponent, ApproxSolution, AssemblyConfig, ResidualReport};
use crate::batchelor_wood::{check_rescaling, BWResult, FlowFields, Params, RescaleCheck};
use crate::error::{Error, Result};
use crate::error_solver::{
    energy_norm, identity_checks, picard_run, transport_coefficients, verify_far_field, ErrorConfig, ErrorState,
    IdentityReport, IterationRecord, NormReport, FarFieldReport,
};
use crate::euler_hierarchy::CompatibilityReport;
use crate::field_core::quad::Interp;
use crate::field_core::{fmt_f64, write_nodal_csv, FourierRadialField as Field, ThetaGrid};
use crate::prandtl::{solve_hierarchy, Hierarchy, LayerConfig, LayerDiagnostics};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    ConstructOnly,
    FullSolve,
    Sweep,
    RescaleLambda,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    Eps,
    Delta,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps" | "epsilon" => Ok(Axis::Eps),
            "delta" => Ok(Axis::Delta),
            _ => Err(Error::Config(format!("unknown sweep axis `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Run the error solve for every member.
    pub solve: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { axis: Axis::Eps, values: vec![0.2, 0.1, 0.05], solve: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub omega: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub f_cos: Vec<f64>,
    pub f_sin: Vec<f64>,
    pub order: usize,
    /// Fast-rotation factor for `rescale-lambda`; sets `ε = λ^{-1/2}`.
    pub lambda: Option<f64>,
    pub k_theta: usize,
    pub m_theta: usize,
    pub layer: LayerConfig,
    pub assembly: AssemblyConfig,
    pub error: ErrorConfig,
    pub sweep: SweepConfig,
    /// Enabled gates; empty means every gate the mode produces.
    pub gates: Vec<String>,
    pub write_fields: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::ConstructOnly,
            omega: 1.0,
            delta: 0.05,
            epsilon: 0.1,
            f_cos: vec![0.0, 1.0],
            f_sin: vec![],
            order: 2,
            lambda: None,
            k_theta: 16,
            m_theta: 48,
            layer: LayerConfig::default(),
            assembly: AssemblyConfig::default(),
            error: ErrorConfig::default(),
            sweep: SweepConfig::default(),
            gates: vec![],
            write_fields: true,
        }
    }
}

pub const GATE_NAMES: [&str; 10] = [
    "compatibility",
    "divergence",
    "boundary",
    "support",
    "picard",
    "identities",
    "decay",
    "residual_order",
    "delta_linearity",
    "rescale",
];

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (key, n) in [
            ("k_theta", self.k_theta),
            ("m_theta", self.m_theta),
            ("layer.n_zeta", self.layer.n_zeta),
            ("assembly.n_r", self.assembly.n_r),
            ("error.n_s", self.error.n_s),
            ("layer.max_iter", self.layer.max_iter),
            ("error.max_iter", self.error.max_iter),
        ] {
            if n == 0 {
                return bad(format!("`{key}` must be positive"));
            }
        }
        for (key, t) in [("layer.tol", self.layer.tol), ("error.tol", self.error.tol)] {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("`{key}` must lie in (0, 1), got {t}"));
            }
        }
        match self.mode {
            Mode::RescaleLambda if self.lambda.is_none() => return bad("mode `rescale-lambda` requires `lambda`".into()),
            Mode::Sweep if self.sweep.values.is_empty() => return bad("mode `sweep` requires `sweep.values`".into()),
            _ => {}
        }
        for g in &self.gates {
            if !GATE_NAMES.contains(&g.as_str()) {
                return bad(format!("unknown gate `{g}`"));
            }
        }
        self.params().map(|_| ())
    }

    pub fn params(&self) -> Result<Params> {
        match (self.mode, self.lambda) {
            (Mode::RescaleLambda, Some(l)) => {
                Params::with_lambda(self.omega, self.delta, l, self.f_cos.clone(), self.f_sin.clone(), self.order)
            }
            _ => Params::new(self.omega, self.delta, self.epsilon, self.f_cos.clone(), self.f_sin.clone(), self.order),
        }
    }

    pub fn theta_grid(&self) -> Result<ThetaGrid> {
        ThetaGrid::new(self.k_theta, self.m_theta)
    }

    fn gate_enabled(&self, name: &str) -> bool {
        self.gates.is_empty() || self.gates.iter().any(|g| g == name)
    }
}

/// One pass/fail gate with its measured value and threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub measured: f64,
    /// Human-readable acceptance condition.
    pub threshold: String,
    pub passed: bool,
}

impl Gate {
    fn below(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, threshold: format!("< {limit:e}"), passed: measured < limit }
    }

    fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, threshold: format!("<= {limit}"), passed: measured <= limit }
    }

    fn within(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), measured, threshold: format!("in [{lo}, {hi}]"), passed: measured >= lo && measured <= hi }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerSummary {
    pub k: usize,
    pub a_k: f64,
    pub tilde_a_k: f64,
    /// `|c_v|` per mode of `r v_e`.
    pub mode_amplitudes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub energy: NormReport,
    pub sup_u: f64,
    pub sup_v: f64,
    pub identities: IdentityReport,
    pub far_field: FarFieldReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMember {
    pub value: f64,
    pub report: Option<Box<RunReport>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: Axis,
    pub members: Vec<SweepMember>,
    pub failed: bool,
    /// Fitted ε-exponent of `sup r⁴|R^a|`.
    pub residual_exponent: Option<f64>,
    /// `sup|u_p^{(0)}|` ratios between consecutive δ values (larger over smaller).
    pub delta_linearity: Vec<f64>,
    /// Far-field decay exponents of `e_v` per solved member.
    pub decay_v: Vec<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleReport {
    pub lambda: f64,
    pub epsilon: f64,
    pub check: RescaleCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub params: Params,
    pub tilde_omega: f64,
    pub bw: BWResult,
    pub leading_layer_sup: f64,
    pub layers: Vec<LayerDiagnostics>,
    pub euler: Vec<EulerSummary>,
    pub compatibility: Vec<CompatibilityReport>,
    pub residual: Option<ResidualReport>,
    pub error_solve: Option<ErrorSolveReport>,
    pub sweep: Option<SweepReport>,
    pub rescale: Option<RescaleReport>,
    pub gates: Vec<Gate>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn converged(&self) -> bool {
        self.error_solve.as_ref().is_none_or(|e| e.converged)
            && self.sweep.as_ref().is_none_or(|s| {
                s.members.iter().all(|m| m.error.is_none() && m.report.as_ref().is_none_or(|r| r.converged()))
            })
    }
}

/// Fields kept alongside the report for CSV output.
pub struct RunArtifacts {
    pub report: RunReport,
    pub fields: Vec<(String, Field)>,
    pub tg: ThetaGrid,
    pub timing: BTreeMap<String, f64>,
}

struct Built {
    hierarchy: Hierarchy,
    apx: ApproxSolution,
}

fn construct(cfg: &RunConfig, params: &Params, tg: &ThetaGrid, timing: &mut BTreeMap<String, f64>) -> Result<Built> {
    let t = Instant::now();
    let hierarchy = solve_hierarchy(params, tg, &cfg.layer)?;
    timing.insert("hierarchy".into(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    let apx = ApproxSolution::assemble(&hierarchy, tg, &cfg.assembly)?;
    timing.insert("assembly".into(), t.elapsed().as_secs_f64());
    Ok(Built { hierarchy, apx })
}

fn base_report(cfg: &RunConfig, b: &Built, residual: Option<ResidualReport>) -> RunReport {
    let h = &b.hierarchy;
    RunReport {
        mode: cfg.mode,
        params: h.params.clone(),
        tilde_omega: h.tilde_omega(),
        bw: h.bw,
        leading_layer_sup: b.apx.leading.sup_abs(&b.apx.tg),
        layers: h.layers.iter().map(|l| l.diag.clone()).collect(),
        euler: h
            .euler
            .iter()
            .map(|e| EulerSummary { k: e.k, a_k: e.a_k, tilde_a_k: e.tilde_a_k, mode_amplitudes: e.cv.iter().map(|c| c.norm()).collect() })
            .collect(),
        compatibility: h.compatibility.clone(),
        residual,
        error_solve: None,
        sweep: None,
        rescale: None,
        gates: vec![],
    }
}

fn construction_gates(cfg: &RunConfig, rep: &RunReport) -> Vec<Gate> {
    let mut g = Vec::new();
    if cfg.gate_enabled("compatibility") {
        let m = rep.compatibility.iter().map(|c| c.max_mean).fold(0.0, f64::max);
        g.push(Gate::below("compatibility", m, 1e-9));
    }
    if let Some(r) = &rep.residual {
        if cfg.gate_enabled("divergence") {
            g.push(Gate::below("divergence", r.divergence, 1e-9));
        }
        if cfg.gate_enabled("boundary") {
            g.push(Gate::below("boundary", r.boundary_u.max(r.boundary_v), 1e-10));
        }
        if cfg.gate_enabled("support") {
            g.push(Gate::below("support", r.support_violation, 1e-9));
        }
    }
    g
}

fn solve_error(cfg: &RunConfig, apx: &ApproxSolution, timing: &mut BTreeMap<String, f64>) -> Result<(ErrorSolveReport, ErrorState)> {
    if apx.epsilon > cfg.error.eps_max || apx.delta > cfg.error.delta_max {
        return Err(Error::InvalidRegime(format!(
            "error solve needs ε ≤ {} and δ ≤ {}, got {} and {}",
            cfg.error.eps_max, cfg.error.delta_max, apx.epsilon, apx.delta
        )));
    }
    let t = Instant::now();
    let c = transport_coefficients(apx, &cfg.error.grid()?)?;
    let out = picard_run(&c, &apx.tg, &cfg.error)?;
    timing.insert("error_solve".into(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    let identities = identity_checks(&c, &out.state, &apx.tg);
    let far_field = verify_far_field(apx, &c, &out.state);
    timing.insert("verification".into(), t.elapsed().as_secs_f64());
    let rep = ErrorSolveReport {
        converged: out.converged,
        iterations: out.history.len(),
        energy: energy_norm(&out.state.phi, apx.epsilon),
        sup_u: out.state.u.sup_abs(&apx.tg),
        sup_v: out.state.v.sup_abs(&apx.tg),
        history: out.history,
        identities,
        far_field,
    };
    Ok((rep, out.state))
}

fn error_gates(cfg: &RunConfig, e: &ErrorSolveReport) -> Vec<Gate> {
    let mut g = Vec::new();
    if cfg.gate_enabled("picard") {
        let last = e.history.last().map_or(f64::INFINITY, |h| h.relative_update);
        g.push(Gate::below("picard", if e.converged { last } else { f64::INFINITY }, cfg.error.tol));
    }
    if cfg.gate_enabled("identities") {
        let i = &e.identities;
        g.push(Gate::below("identities.incompressibility", i.incompressibility, 1e-9));
        g.push(Gate::below("identities.stream_consistency", i.stream_consistency, 1e-9));
        g.push(Gate::below("identities.mode1", i.mode1_identity, 1e-8));
        g.push(Gate::below("identities.zero_mode", i.zero_mode_residual, 1e-9));
    }
    if cfg.gate_enabled("decay") {
        g.push(Gate::at_most("decay.v", e.far_field.decay_v, -1.8));
        g.push(Gate::at_most("decay.u", e.far_field.decay_u, -1.8));
    }
    g
}

/// Resamples an s-grid field onto the r-grid of `target`.
fn s_to_r(f: &Field, target: &Field) -> Field {
    let logs: Vec<f64> = target.nodes().iter().map(|r| r.ln()).collect();
    let it = Interp::new(f.nodes(), &logs);
    f.resample(&it, target.grid())
}

fn run_single(cfg: &RunConfig, params: &Params, timing: &mut BTreeMap<String, f64>) -> Result<RunArtifacts> {
    let tg = cfg.theta_grid()?;
    let b = construct(cfg, params, &tg, timing)?;
    let t = Instant::now();
    let residual = b.apx.residual_report()?;
    timing.insert("residual".into(), t.elapsed().as_secs_f64());
    let mut rep = base_report(cfg, &b, Some(residual));
    rep.gates = construction_gates(cfg, &rep);
    let f = &b.apx.fields;
    let mut fields = vec![("u_a".to_string(), f.u.clone()), ("v_a".to_string(), f.v.clone()), ("p_a".to_string(), f.p.clone())];
    if matches!(cfg.mode, Mode::FullSolve | Mode::RescaleLambda) || (cfg.mode == Mode::Sweep && cfg.sweep.solve) {
        let (e, state) = solve_error(cfg, &b.apx, timing)?;
        rep.gates.extend(error_gates(cfg, &e));
        let u = &f.u + &s_to_r(&state.u, &f.u);
        let v = &f.v + &s_to_r(&state.v, &f.v);
        if cfg.mode == Mode::RescaleLambda {
            let lambda = params.lambda.unwrap_or(1.0);
            let check = check_rescaling(&FlowFields { u: u.clone(), v: v.clone(), p: f.p.clone() }, lambda, &tg)?;
            if cfg.gate_enabled("rescale") {
                rep.gates.push(Gate::below("rescale", check.identity_error, 1e-10));
            }
            rep.rescale = Some(RescaleReport { lambda, epsilon: params.epsilon, check });
            fields.push(("u_rescaled".into(), u.scale(lambda)));
            fields.push(("v_rescaled".into(), v.scale(lambda)));
            fields.push(("p_rescaled".into(), f.p.scale(lambda * lambda)));
        }
        fields.push(("u_eps".into(), u));
        fields.push(("v_eps".into(), v));
        fields.push(("error_u".into(), state.u));
        fields.push(("error_v".into(), state.v));
        rep.error_solve = Some(e);
    }
    Ok(RunArtifacts { report: rep, fields, tg, timing: timing.clone() })
}

fn run_sweep(cfg: &RunConfig) -> Result<RunArtifacts> {
    let base = cfg.params()?;
    let mut values = cfg.sweep.values.clone();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let runs: Vec<(f64, Result<RunArtifacts>)> = values
        .par_iter()
        .map(|&x| {
            let mut p = base.clone();
            match cfg.sweep.axis {
                Axis::Eps => p.epsilon = x,
                Axis::Delta => p.delta = x,
            }
            let mut timing = BTreeMap::new();
            (x, p.validate().and_then(|_| run_single(cfg, &p, &mut timing)))
        })
        .collect();
    let tg = cfg.theta_grid()?;
    let mut timing = BTreeMap::new();
    let mut members = Vec::new();
    let mut fields = Vec::new();
    for (x, r) in runs {
        match r {
            Ok(a) => {
                for (k, t) in &a.timing {
                    *timing.entry(format!("member.{k}")).or_insert(0.0) += t;
                }
                if let Some((_, u)) = a.fields.first() {
                    fields.push((format!("u_a_{}_{}", axis_tag(cfg.sweep.axis), fmt_f64(x)), u.clone()));
                }
                members.push(SweepMember { value: x, report: Some(Box::new(a.report)), error: None });
            }
            Err(e) => members.push(SweepMember { value: x, report: None, error: Some(e.to_string()) }),
        }
    }
    let ok: Vec<&RunReport> = members.iter().filter_map(|m| m.report.as_deref()).collect();
    let failed = members.iter().any(|m| m.error.is_some());
    let note = (ok.len() < 2).then(|| "insufficient points for a fit".to_string());
    let residuals: Vec<ResidualReport> = ok.iter().filter_map(|r| r.residual.clone()).collect();
    let residual_exponent = if cfg.sweep.axis == Axis::Eps { fit_eps_exponent(&residuals) } else { None };
    let delta_linearity = if cfg.sweep.axis == Axis::Delta {
        ok.windows(2).map(|w| w[0].leading_layer_sup / w[1].leading_layer_sup).collect()
    } else {
        vec![]
    };
    let decay_v = ok.iter().filter_map(|r| r.error_solve.as_ref().map(|e| e.far_field.decay_v)).collect();
    let mut gates: Vec<Gate> = ok
        .iter()
        .zip(&members)
        .flat_map(|(r, m)| r.gates.iter().map(move |g| Gate { name: format!("{}[{}]", g.name, m.value), ..g.clone() }))
        .collect();
    if failed {
        gates.push(Gate { name: "sweep.members".into(), measured: ok.len() as f64, threshold: "all members succeed".into(), passed: false });
    }
    if let Some(e) = residual_exponent {
        if cfg.gate_enabled("residual_order") {
            let n = base.order as f64 + 1.0;
            gates.push(Gate::within("residual_order", e, n - 0.4, n + 0.4));
        }
    }
    if cfg.gate_enabled("delta_linearity") {
        for (i, r) in delta_linearity.iter().enumerate() {
            let q = values[i] / values[i + 1];
            gates.push(Gate::within(&format!("delta_linearity[{i}]"), *r, 0.85 * q, 1.15 * q));
        }
    }
    let first = ok.first().map(|r| (*r).clone());
    let mut report = match first {
        Some(r) => RunReport { residual: None, error_solve: None, gates: vec![], ..r },
        None => {
            let bw = crate::batchelor_wood::compute_tilde_omega(&base)?;
            RunReport {
                mode: cfg.mode,
                params: base.clone(),
                tilde_omega: bw.tilde_omega,
                bw,
                leading_layer_sup: 0.0,
                layers: vec![],
                euler: vec![],
                compatibility: vec![],
                residual: None,
                error_solve: None,
                sweep: None,
                rescale: None,
                gates: vec![],
            }
        }
    };
    report.mode = Mode::Sweep;
    report.params = base;
    report.gates = gates;
    report.sweep = Some(SweepReport { axis: cfg.sweep.axis, members, failed, residual_exponent, delta_linearity, decay_v, note });
    Ok(RunArtifacts { report, fields, tg, timing })
}

fn axis_tag(a: Axis) -> &'static str {
    match a {
        Axis::Eps => "eps",
        Axis::Delta => "delta",
    }
}

/// Runs the configured pipeline in memory.
pub fn run(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let t = Instant::now();
    let mut a = if cfg.mode == Mode::Sweep {
        run_sweep(cfg)?
    } else {
        let mut timing = BTreeMap::new();
        run_single(cfg, &cfg.params()?, &mut timing)?
    };
    a.timing.insert("total".into(), t.elapsed().as_secs_f64());
    Ok(a)
}

/// Sweep over `axis` with the given values, everything else from `cfg`.
pub fn sweep(cfg: &RunConfig, axis: Axis, values: &[f64]) -> Result<RunArtifacts> {
    let cfg = RunConfig { mode: Mode::Sweep, sweep: SweepConfig { axis, values: values.to_vec(), ..cfg.sweep.clone() }, ..cfg.clone() };
    run(&cfg)
}

/// JSON with every float written to 17 significant digits.
pub fn to_json_17<T: Serialize>(v: &T) -> Result<String> {
    let v = serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Number(n) if n.is_f64() => out.push_str(&fmt_f64(n.as_f64().unwrap())),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_value(x, depth + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, depth + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Writes `report.json`, `history.csv`, `timing.json` and `fields/*.csv`.
pub fn write_artifacts(a: &RunArtifacts, dir: &Path, with_fields: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), to_json_17(&a.report)?)?;
    fs::write(dir.join("timing.json"), to_json_17(&a.timing)?)?;
    let mut h = String::from("iteration,update,relative_update,energy,contraction,sup_u\n");
    if let Some(e) = &a.report.error_solve {
        for r in &e.history {
            let c = r.contraction.map_or(String::new(), fmt_f64);
            h.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration,
                fmt_f64(r.update),
                fmt_f64(r.relative_update),
                fmt_f64(r.energy.total),
                c,
                fmt_f64(r.sup_u)
            ));
        }
    }
    fs::write(dir.join("history.csv"), h)?;
    if with_fields {
        let fd = dir.join("fields");
        fs::create_dir_all(&fd)?;
        for (name, f) in &a.fields {
            let file = fs::File::create(fd.join(format!("{name}.csv")))?;
            write_nodal_csv(f, &a.tg, std::io::BufWriter::new(file))?;
        }
    }
    Ok(())
}

/// Process exit status: 0 pass, 2 gate failure, 3 solver nonconvergence, 4 config error.
pub fn exit_code(r: &Result<RunArtifacts>) -> i32 {
    match r {
        Ok(a) if !a.report.converged() => 3,
        Ok(a) if !a.report.passed() => 2,
        Ok(_) => 0,
        Err(e) => error_code(e),
    }
}

pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParam(_) | Error::InvalidRegime(_) | Error::Io(_) => 4,
        _ => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&s).unwrap(), c);
        assert_eq!(RunConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn config_errors_name_the_key() {
        let e = RunConfig::from_json("{\n  \"omega\": 1.0,\n  \"bogus\": 2\n}").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");
        let e = RunConfig::from_json(r#"{"mode": "rescale-lambda"}"#).unwrap_err();
        assert!(e.to_string().contains("lambda"));
        let e = RunConfig::from_json(r#"{"error": {"tol": 2.0}}"#).unwrap_err();
        assert!(e.to_string().contains("error.tol"));
        assert_eq!(error_code(&e), 4);
    }

    #[test]
    fn json_floats_have_17_digits() {
        let s = to_json_17(&serde_json::json!({"a": 0.1, "b": [1, 2.5], "c": null})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 0.1);
        assert_eq!(back["b"][0].as_u64().unwrap(), 1);
    }
}
