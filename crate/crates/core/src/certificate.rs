//! Outcomes of hypothesis checks.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    MuStar,
    PowerRadius,
    C6Radius,
    BallA3,
    BoundB,
    Expanding,
    A5,
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::MuStar => "mu-star",
            CertificateKind::PowerRadius => "power",
            CertificateKind::C6Radius => "c6",
            CertificateKind::BallA3 => "ball-a3",
            CertificateKind::BoundB => "bound-b",
            CertificateKind::Expanding => "expanding",
            CertificateKind::A5 => "a5",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "PASS-VACUOUS")]
    PassVacuous,
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        !matches!(self, Verdict::Fail)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::PassVacuous => "PASS-VACUOUS",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of a hypothesis check: verdict, optional radius, margin and witness.
///
/// A `Pass` always carries `margin >= 0`. Sampling-based checks set
/// `evidence_only`: their pass is evidence, not proof.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub verdict: Verdict,
    pub radius: Option<f64>,
    pub margin: f64,
    pub witness: Vec<(String, f64)>,
    pub evidence_only: bool,
}

impl Certificate {
    pub fn new(kind: CertificateKind, verdict: Verdict, radius: Option<f64>, margin: f64) -> Self {
        debug_assert!(verdict != Verdict::Pass || margin >= 0.0);
        Self { kind, verdict, radius, margin, witness: Vec::new(), evidence_only: false }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.witness.push((name.to_string(), value));
        self
    }

    pub fn witness_value(&self, name: &str) -> Option<f64> {
        self.witness.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn is_pass(&self) -> bool {
        self.verdict.is_pass()
    }

    /// Header for [`Certificate::csv_row`].
    pub const CSV_HEADER: &'static str = "kind,verdict,radius,margin";

    pub fn csv_row(&self) -> String {
        let radius = self.radius.map(|r| format!("{r:.16e}")).unwrap_or_default();
        format!("{},{},{},{:.16e}", self.kind.as_str(), self.verdict, radius, self.margin)
    }
}
