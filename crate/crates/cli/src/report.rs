//! Report assembled by every subcommand, rendered as text or JSON.

use std::fmt::Write as _;

use entcorr::bell::ChshValue;
use entcorr::correlations::CorrelationTable;
use entcorr::expsim::EstimateWithError;
use entcorr::measures::EntanglementValue;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: Input,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<Validation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schmidt: Option<Schmidt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlations: Option<CorrelationTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measures: Option<Measures>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh: Option<Chsh>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Simulation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roof: Option<Roof>,
    pub seeds: Vec<u64>,
}

impl Report {
    pub fn new(command: &'static str, input: Input) -> Report {
        Report {
            tool: "entcorr",
            version: env!("CARGO_PKG_VERSION"),
            command,
            input,
            validation: None,
            schmidt: None,
            correlations: None,
            measures: None,
            chsh: None,
            simulation: None,
            roof: None,
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Input {
    pub path: String,
    pub kind: &'static str,
    pub dims: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct Validation {
    pub valid: bool,
    pub purity: f64,
    pub pure: bool,
}

#[derive(Debug, Serialize)]
pub struct Schmidt {
    /// The bipartition the decomposition refers to, e.g. `"A|B"` or `"A|BC"`.
    pub split: &'static str,
    pub lambdas: Vec<f64>,
    pub rank: usize,
    pub separable: bool,
}

#[derive(Debug, Serialize)]
pub struct Measures {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e2: Option<EntanglementValue>,
    pub en: EntanglementValue,
    pub en_closed_form: EntanglementValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub three_tangle: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Chsh {
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    pub refine: bool,
    #[serde(flatten)]
    pub value: ChshValue,
    pub classical_bound: f64,
    pub violates_classical_bound: bool,
}

#[derive(Debug, Serialize)]
pub struct Simulation {
    pub source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_out: Option<String>,
    pub estimates: Vec<EstimateWithError>,
}

#[derive(Debug, Serialize)]
pub struct Roof {
    pub measure: &'static str,
    pub value: f64,
    pub eigen_ensemble_average: f64,
    pub restarts: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble_cap: Option<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concurrence_squared: Option<f64>,
}

pub fn to_machine(report: &Report) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

fn list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.9}")).collect();
    format!("[{}]", parts.join(", "))
}

fn measure_line(out: &mut String, label: &str, v: &EntanglementValue) {
    let method = match v.method {
        entcorr::measures::Method::CorrelationSum => "correlation sum",
        entcorr::measures::Method::ClosedForm => "closed form",
        entcorr::measures::Method::ConvexRoof => "convex roof",
        entcorr::measures::Method::MonteCarlo => "Monte Carlo",
    };
    let _ = writeln!(out, "  {label:<12} {:.9}  ({method}, N = {})", v.value, v.n);
}

pub fn to_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {}: {} ({}, dims {:?})",
        report.tool, report.command, report.input.path, report.input.kind, report.input.dims
    );
    if let Some(v) = &report.validation {
        let _ = writeln!(out, "valid: {}", v.valid);
        let _ = writeln!(out, "purity: {:.9}", v.purity);
        let _ = writeln!(out, "pure: {}", v.pure);
    }
    if let Some(s) = &report.schmidt {
        let _ = writeln!(out, "Schmidt decomposition ({})", s.split);
        let _ = writeln!(out, "  lambdas      {}", list(&s.lambdas));
        let _ = writeln!(out, "  rank         {}", s.rank);
        let _ = writeln!(out, "  separable    {}", s.separable);
    }
    if let Some(t) = &report.correlations {
        let _ = writeln!(out, "Correlations in the Schmidt bases");
        let _ = writeln!(out, "  P(i_A)       {}", list(&t.local_a));
        let _ = writeln!(out, "  P(j_B)       {}", list(&t.local_b));
        for (i, row) in t.delta.iter().enumerate() {
            let _ = writeln!(out, "  Delta row {i:<2} {}", list(row));
        }
        let _ = writeln!(out, "  sum Delta    {:.9}", t.delta_sum());
    }
    if let Some(m) = &report.measures {
        let _ = writeln!(out, "Measures");
        if let Some(e2) = &m.e2 {
            measure_line(&mut out, "E2", e2);
        }
        measure_line(&mut out, "E_N", &m.en);
        measure_line(&mut out, "E_N", &m.en_closed_form);
        if let Some(t) = m.three_tangle {
            let _ = writeln!(out, "  3-tangle     {t:.9}");
        }
    }
    if let Some(c) = &report.chsh {
        let _ = writeln!(out, "CHSH ({})", c.mode);
        if let Some(g) = c.grid {
            let _ = writeln!(
                out,
                "  grid         {g}{}",
                if c.refine { ", refined" } else { "" }
            );
        }
        let _ = writeln!(out, "  s            {:.9}", c.value.s);
        let _ = writeln!(
            out,
            "  settings     {} (a, a', b, b')",
            list(&c.value.settings)
        );
        let _ = writeln!(out, "  violates |s| <= 2: {}", c.violates_classical_bound);
    }
    if let Some(s) = &report.simulation {
        let heading = match s.source {
            "record" => "E_N estimate from a recorded table",
            "schedule" => "E_N estimates over a shot schedule",
            _ => "E_N estimate from simulated counts",
        };
        let _ = writeln!(out, "{heading}");
        if let Some(t) = s.truth {
            let _ = writeln!(out, "  exact E_N    {t:.9}");
        }
        if let Some(path) = &s.record_out {
            let _ = writeln!(out, "  record       {path}");
        }
        for e in &s.estimates {
            let _ = writeln!(
                out,
                "  shots {:<10} E_N = {:.9} +- {:.3e}",
                e.shots, e.value, e.std_error
            );
        }
    }
    if let Some(r) = &report.roof {
        let _ = writeln!(out, "Convex roof ({})", r.measure);
        let _ = writeln!(out, "  value        {:.9}", r.value);
        let _ = writeln!(out, "  eigen bound  {:.9}", r.eigen_ensemble_average);
        if let Some(c2) = r.concurrence_squared {
            let _ = writeln!(out, "  C^2 oracle   {c2:.9}");
        }
        let _ = writeln!(
            out,
            "  {} restarts, seed {}, {} iterations, converged {}",
            r.restarts, r.seed, r.iterations, r.converged
        );
        let _ = writeln!(out, "  weights      {}", list(&r.weights));
    }
    if !report.seeds.is_empty() {
        let _ = writeln!(out, "seeds: {:?}", report.seeds);
    }
    out
}
