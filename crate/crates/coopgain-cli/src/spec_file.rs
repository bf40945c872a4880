//! Channel spec files: JSON with sparse kernel entries.
//!
//! ```json
//! {
//!   "name": "mod3",
//!   "s1_size": 3, "s2_size": 1, "x1_size": 2, "x2_size": 2, "y_size": 3,
//!   "state_law": [[0, 0, 0.3333333333333333], ...],
//!   "kernel": [[0, 0, 0, 0, 0, 1.0], ...],
//!   "costs": {"b1": [...], "b2": [...], "budget1": 1.0, "budget2": 1.0}
//! }
//! ```
//!
//! `state_law` rows are `(s1, s2, prob)`; `kernel` rows are
//! `(s1, s2, x1, x2, y, prob)`. Entries not listed are zero.

use coopgain::channel::{Costs, StateMac, MAX_ALPHABET};
use coopgain::prob::{Axis, CondKernel, JointDist};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Serialize, Deserialize)]
pub struct ChannelSpecFile {
    pub name: String,
    pub s1_size: usize,
    pub s2_size: usize,
    pub x1_size: usize,
    pub x2_size: usize,
    pub y_size: usize,
    pub state_law: Vec<(usize, usize, f64)>,
    pub kernel: Vec<(usize, usize, usize, usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<CostsSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CostsSpec {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub budget1: f64,
    pub budget2: f64,
}

#[derive(Debug)]
pub enum SpecError {
    Io(std::io::Error),
    Json(serde_json::Error),
    Invalid(String),
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::Io(e) => write!(f, "cannot read channel spec: {e}"),
            SpecError::Json(e) => write!(f, "channel spec is not valid JSON: {e}"),
            SpecError::Invalid(msg) => write!(f, "invalid channel spec: {msg}"),
        }
    }
}

impl std::error::Error for SpecError {}

pub fn parse_channel_spec(path: &std::path::Path) -> Result<StateMac, SpecError> {
    let bytes = std::fs::read(path).map_err(SpecError::Io)?;
    if bytes.is_empty() {
        return Err(SpecError::Invalid("file is empty".into()));
    }
    let spec: ChannelSpecFile = serde_json::from_slice(&bytes).map_err(SpecError::Json)?;
    build_mac(&spec)
}

pub fn build_mac(spec: &ChannelSpecFile) -> Result<StateMac, SpecError> {
    for (axis, size) in [
        ("s1_size", spec.s1_size),
        ("s2_size", spec.s2_size),
        ("x1_size", spec.x1_size),
        ("x2_size", spec.x2_size),
        ("y_size", spec.y_size),
    ] {
        if size == 0 {
            return Err(SpecError::Invalid(format!("{axis} must be at least 1")));
        }
        if size > MAX_ALPHABET {
            return Err(SpecError::Invalid(format!(
                "{axis} = {size} exceeds the alphabet cap {MAX_ALPHABET}"
            )));
        }
    }
    let mut law = vec![0.0; spec.s1_size * spec.s2_size];
    for &(s1, s2, p) in &spec.state_law {
        if s1 >= spec.s1_size || s2 >= spec.s2_size {
            return Err(SpecError::Invalid(format!(
                "state_law entry (s1={s1}, s2={s2}) out of range"
            )));
        }
        if p < 0.0 {
            return Err(SpecError::Invalid(format!(
                "state_law entry (s1={s1}, s2={s2}) has negative probability {p}"
            )));
        }
        law[s1 * spec.s2_size + s2] += p;
    }
    let mass: f64 = law.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(SpecError::Invalid(format!(
            "state_law sums to {mass}, expected 1"
        )));
    }
    let cell = spec.x1_size * spec.x2_size;
    let mut rows = vec![0.0; spec.s1_size * spec.s2_size * cell * spec.y_size];
    for &(s1, s2, x1, x2, y, p) in &spec.kernel {
        if s1 >= spec.s1_size
            || s2 >= spec.s2_size
            || x1 >= spec.x1_size
            || x2 >= spec.x2_size
            || y >= spec.y_size
        {
            return Err(SpecError::Invalid(format!(
                "kernel entry (s1={s1}, s2={s2}, x1={x1}, x2={x2}, y={y}) out of range"
            )));
        }
        if p < 0.0 {
            return Err(SpecError::Invalid(format!(
                "kernel entry (s1={s1}, s2={s2}, x1={x1}, x2={x2}, y={y}) has negative probability {p}"
            )));
        }
        let row = ((s1 * spec.s2_size + s2) * spec.x1_size + x1) * spec.x2_size + x2;
        rows[row * spec.y_size + y] += p;
    }
    for s1 in 0..spec.s1_size {
        for s2 in 0..spec.s2_size {
            for x1 in 0..spec.x1_size {
                for x2 in 0..spec.x2_size {
                    let row =
                        ((s1 * spec.s2_size + s2) * spec.x1_size + x1) * spec.x2_size + x2;
                    let sum: f64 =
                        rows[row * spec.y_size..(row + 1) * spec.y_size].iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(SpecError::Invalid(format!(
                            "kernel row (s1={s1}, s2={s2}, x1={x1}, x2={x2}) sums to {sum}, expected 1"
                        )));
                    }
                }
            }
        }
    }
    let state_law = JointDist::new(
        vec![Axis::S1, Axis::S2],
        vec![spec.s1_size, spec.s2_size],
        law,
    )
    .map_err(|e| SpecError::Invalid(e.to_string()))?;
    let kernel = CondKernel::new(
        vec![Axis::S1, Axis::S2, Axis::X1, Axis::X2],
        vec![spec.s1_size, spec.s2_size, spec.x1_size, spec.x2_size],
        vec![Axis::Y],
        vec![spec.y_size],
        rows,
    )
    .map_err(|e| SpecError::Invalid(e.to_string()))?;
    let costs = spec.costs.as_ref().map(|c| Costs {
        b1: c.b1.clone(),
        b2: c.b2.clone(),
        budget1: c.budget1,
        budget2: c.budget2,
    });
    let mac = StateMac::new(state_law, kernel, costs)
        .map_err(|e| SpecError::Invalid(e.to_string()))?;
    mac.check_alphabet_cap()
        .map_err(|e| SpecError::Invalid(e.to_string()))?;
    Ok(mac)
}

/// Serialize a channel back to the sparse spec form (used by the round-trip
/// test and to regenerate the bundled files).
pub fn to_spec(mac: &StateMac, name: &str) -> ChannelSpecFile {
    let mut state_law = Vec::new();
    for s1 in 0..mac.s1_size() {
        for s2 in 0..mac.s2_size() {
            let p = mac.state_prob(s1, s2);
            if p > 0.0 {
                state_law.push((s1, s2, p));
            }
        }
    }
    let mut kernel = Vec::new();
    for s1 in 0..mac.s1_size() {
        for s2 in 0..mac.s2_size() {
            for x1 in 0..mac.x1_size() {
                for x2 in 0..mac.x2_size() {
                    let row = mac.kernel_row(s1, s2, x1, x2);
                    for (y, &p) in row.iter().enumerate() {
                        if p > 0.0 {
                            kernel.push((s1, s2, x1, x2, y, p));
                        }
                    }
                }
            }
        }
    }
    ChannelSpecFile {
        name: name.to_string(),
        s1_size: mac.s1_size(),
        s2_size: mac.s2_size(),
        x1_size: mac.x1_size(),
        x2_size: mac.x2_size(),
        y_size: mac.y_size(),
        state_law,
        kernel,
        costs: mac.costs().map(|c| CostsSpec {
            b1: c.b1.clone(),
            b2: c.b2.clone(),
            budget1: c.budget1,
            budget2: c.budget2,
        }),
    }
}
