use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::Weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dc,
    Mm,
    Qmvsk,
    Lmvskt,
    Qmvskt,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Dc,
        Method::Mm,
        Method::Qmvsk,
        Method::Lmvskt,
        Method::Qmvskt,
    ];

    pub fn is_tilting(self) -> bool {
        matches!(self, Method::Lmvskt | Method::Qmvskt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Dc => "dc",
            Method::Mm => "mm",
            Method::Qmvsk => "qmvsk",
            Method::Lmvskt => "lmvskt",
            Method::Qmvskt => "qmvskt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown method {s:?} (expected dc, mm, qmvsk, lmvskt or qmvskt)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
}

/// One row of the convergence trace. Row `k = 0` describes the starting
/// point; row `k ≥ 1` the iterate after the `k`-th update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `f(wᵏ)` for MVSK, `δᵏ` for tilting.
    pub objective: f64,
    /// Step used to reach this iterate; 0 on the start row.
    pub gamma: f64,
    /// Constraint relaxation level on the normalized constraints (tilting
    /// only).
    pub eta: Option<f64>,
    /// Largest violation of the true constraints.
    pub max_violation: f64,
    /// `‖x̂ᵏ − xᵏ⁻¹‖∞`, the fixed-point residual of the surrogate step.
    pub stationarity: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub w_final: Weights,
    pub delta_final: Option<f64>,
    /// `f(w)` for MVSK, `δ` for tilting.
    pub objective_final: f64,
    /// `(φ₁, φ₂, φ₃, φ₄)` of the final portfolio.
    pub moments_final: [f64; 4],
    pub termination: Termination,
    pub iterations: usize,
    pub subsolver_calls: usize,
    /// Largest violation of the true constraints at the final point.
    pub max_violation: f64,
    /// Projected-gradient residual (MVSK) or true-constraint KKT residual
    /// (tilting) at the final point.
    pub stationarity: f64,
    pub wall_ms: f64,
    pub trace: Vec<IterationRecord>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Data(e.to_string()))
    }

    /// Writes the trace as CSV with columns
    /// `k,objective,gamma,eta,max_violation,stationarity,wall_ms`. A missing
    /// `eta` is an empty cell.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let io = |e: csv::Error| Error::Data(e.to_string());
        w.write_record([
            "k",
            "objective",
            "gamma",
            "eta",
            "max_violation",
            "stationarity",
            "wall_ms",
        ])
        .map_err(io)?;
        for r in &self.trace {
            w.write_record([
                r.k.to_string(),
                r.objective.to_string(),
                r.gamma.to_string(),
                r.eta.map(|v| v.to_string()).unwrap_or_default(),
                r.max_violation.to_string(),
                r.stationarity.to_string(),
                format!("{:.3}", r.wall_ms),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SolveReport {
        SolveReport {
            method: Method::Qmvskt,
            w_final: Weights(vec![0.5, 0.5]),
            delta_final: Some(0.25),
            objective_final: 0.25,
            moments_final: [1e-3, 2e-4, -1e-6, 3e-8],
            termination: Termination::Converged,
            iterations: 1,
            subsolver_calls: 2,
            max_violation: 0.0,
            stationarity: 1e-9,
            wall_ms: 1.5,
            trace: vec![
                IterationRecord {
                    k: 0,
                    objective: 0.0,
                    gamma: 0.0,
                    eta: None,
                    max_violation: 0.0,
                    stationarity: 0.0,
                    wall_ms: 0.0,
                },
                IterationRecord {
                    k: 1,
                    objective: 0.25,
                    gamma: 1.0,
                    eta: Some(0.0),
                    max_violation: 0.0,
                    stationarity: 0.25,
                    wall_ms: 1.5,
                },
            ],
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("sqp".parse::<Method>().is_err());
        assert!(Method::Lmvskt.is_tilting() && !Method::Mm.is_tilting());
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let back = SolveReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().unwrap().contains("\"method\": \"qmvskt\""));
    }

    #[test]
    fn trace_csv_shape() {
        let mut buf = Vec::new();
        sample().write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "k,objective,gamma,eta,max_violation,stationarity,wall_ms"
        );
        assert_eq!(lines[1], "0,0,0,,0,0,0.000");
        assert_eq!(lines.len(), 3);
        assert!(!text.contains('\r'));
    }
}
