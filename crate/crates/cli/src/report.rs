//! Text and JSON reports for verdicts and witnesses.

use std::fmt::Write as _;

use serde::Serialize;
use spinmoment::feasibility::{Status, Verdict, Witness};
use spinmoment::SpinNumber;

/// Exit code of a verdict: 0 quantum, 1 non-quantum, 2 boundary.
pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::Quantum => 0,
        Status::NonQuantum => 1,
        Status::Boundary => 2,
    }
}

/// Names of the operators a witness coefficient vector refers to.
pub fn coefficient_labels(len: usize) -> Vec<&'static str> {
    match len {
        4 => vec!["1", "L1", "L2", "L3"],
        10 => vec!["1", "S11", "S12", "S13", "S22", "S23", "S33", "L1", "L2", "L3"],
        _ => vec!["?"; len],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub value: f64,
    /// Coordinates in the orthonormalized operator basis.
    pub z: Vec<f64>,
    /// Coefficients on the original operators, see `labels`.
    pub coefficients: Vec<f64>,
    pub labels: Vec<&'static str>,
    pub spectrum: Vec<f64>,
    pub min_eigenvalue: f64,
    pub trace: f64,
}

impl WitnessReport {
    pub fn new(w: &Witness) -> Self {
        let spectrum = w.spectrum();
        Self {
            value: w.value,
            z: w.z.clone(),
            coefficients: w.coefficients.clone(),
            labels: coefficient_labels(w.coefficients.len()),
            min_eigenvalue: spectrum.iter().copied().fold(f64::INFINITY, f64::min),
            spectrum,
            trace: w.operator.trace(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_us: u128,
}

/// Machine-readable verdict.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub status: &'static str,
    pub stage: &'static str,
    pub t_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_spectrum: Option<Vec<f64>>,
    pub j: String,
    pub two_j: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub tests: Vec<StageReport>,
}

impl CheckReport {
    pub fn new(v: &Verdict, j: SpinNumber, label: Option<String>) -> Self {
        Self {
            status: v.status.as_str(),
            stage: v.stage.as_str(),
            t_star: v.t_star,
            witness: v.witness().map(WitnessReport::new),
            certificate_spectrum: v.state().map(|s| s.eig().values),
            j: j.to_string(),
            two_j: j.two_j(),
            label,
            tests: v
                .tests_run
                .iter()
                .map(|t| StageReport {
                    stage: t.stage.as_str(),
                    passed: t.passed,
                    detail: t.detail.clone(),
                    elapsed_us: t.elapsed.as_micros(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(l) = &self.label {
            let _ = writeln!(s, "label:   {l}");
        }
        let _ = writeln!(s, "j:       {}", self.j);
        let _ = writeln!(s, "status:  {}", self.status);
        let _ = writeln!(s, "stage:   {}", self.stage);
        if let Some(t) = self.t_star {
            let _ = writeln!(s, "t_star:  {t:.6e}");
        }
        let _ = writeln!(s, "tests:");
        for t in &self.tests {
            let mark = if t.passed { "pass" } else { "fail" };
            let _ = writeln!(s, "  {:<15} {mark}  {} ({} us)", t.stage, t.detail, t.elapsed_us);
        }
        if let Some(w) = &self.witness {
            s.push_str(&w.to_text());
        }
        if let Some(spec) = &self.certificate_spectrum {
            let _ = writeln!(s, "certificate state spectrum: {}", fmt_list(spec));
        }
        s
    }
}

impl WitnessReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "witness:");
        let _ = writeln!(s, "  value z.t        {:.6e}", self.value);
        let _ = writeln!(s, "  z (orthonormal)  {}", fmt_list(&self.z));
        let _ = writeln!(s, "  coefficients:");
        for (l, c) in self.labels.iter().zip(&self.coefficients) {
            let _ = writeln!(s, "    {l:<4} {c:+.6e}");
        }
        let _ = writeln!(s, "  Z spectrum       {}", fmt_list(&self.spectrum));
        let _ = writeln!(s, "  Z min eigenvalue {:.3e}, tr Z = {:.12}", self.min_eigenvalue, self.trace);
        s
    }
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}
