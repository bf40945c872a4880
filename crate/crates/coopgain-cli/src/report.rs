//! Result reports: human tables, machine JSON, and plot-ready CSV.

use coopgain::bounds::SumRateBound;
use coopgain::gain::{ClassReport, SlopeProfile};
use coopgain::sim::SimResult;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "table" => Some(Format::Table),
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub tool_version: String,
    pub inputs_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub wall_ms: f64,
    pub payload: Payload,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Bound {
        tau: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        budget: Option<(f64, f64)>,
        bound: SumRateBound,
    },
    Class {
        report: ClassReport,
    },
    Slope {
        tau: String,
        v: (f64, f64),
        profile: SlopeProfile,
    },
    Sim {
        result: SimResult,
    },
    Gaussian {
        tau: String,
        baseline_bits: f64,
        profile: SlopeProfile,
    },
    Frl {
        u_probs: Vec<f64>,
        /// `map[u][s] -> x`
        map: Vec<Vec<usize>>,
        cardinality_bound: usize,
        max_reconstruction_error: f64,
    },
}

/// Six significant digits for tables (full precision lives in JSON).
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-3..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("serializable report");
            s.push('\n');
            s
        }
        Format::Table => emit_table(report),
        Format::Csv => emit_csv(report),
    }
}

fn emit_table(report: &Report) -> String {
    let mut out = String::new();
    let push = |out: &mut String, k: &str, v: String| {
        out.push_str(&format!("{k:<24} {v}\n"));
    };
    push(&mut out, "command", report.command.clone());
    push(&mut out, "version", report.tool_version.clone());
    push(&mut out, "inputs_digest", report.inputs_digest.clone());
    if let Some(seed) = report.seed {
        push(&mut out, "seed", seed.to_string());
    }
    push(&mut out, "wall_ms", sig6(report.wall_ms));
    match &report.payload {
        Payload::Bound { tau, budget, bound } => {
            push(&mut out, "tau", tau.clone());
            if let Some((c1, c2)) = budget {
                push(&mut out, "cout1_bits", sig6(*c1));
                push(&mut out, "cout2_bits", sig6(*c2));
            }
            push(&mut out, "sum_rate_bits", sig6(bound.value));
            for (k, v) in &bound.constraint_slacks {
                push(&mut out, k, sig6(*v));
            }
            push(
                &mut out,
                "optimizer",
                format!(
                    "starts={} iterations={} converged={}",
                    bound.report.starts, bound.report.iterations, bound.report.converged
                ),
            );
        }
        Payload::Class { report: r } => {
            push(&mut out, "tau(class)", r.tau.to_string());
            push(&mut out, "member", r.member.to_string());
            push(&mut out, "I0_bits", sig6(r.i0));
            push(&mut out, "Jstar_bits", sig6(r.j_star));
            push(&mut out, "margin_bits", sig6(r.margin));
            if let Some(w) = r.support_certificate.first() {
                push(
                    &mut out,
                    "witness",
                    format!("(s1={}, s2={}, x1={}, x2={})", w.s1, w.s2, w.x1, w.x2),
                );
            }
        }
        Payload::Slope { tau, v, profile } => {
            push(&mut out, "tau", tau.clone());
            push(&mut out, "v", format!("({}, {})", sig6(v.0), sig6(v.1)));
            push(&mut out, "verdict", format!("{:?}", profile.verdict));
            out.push_str(&format!(
                "{:<14} {:<14} {:<14}\n",
                "h", "gain_bits", "ratio"
            ));
            for k in 0..profile.grid.len() {
                out.push_str(&format!(
                    "{:<14} {:<14} {:<14}\n",
                    sig6(profile.grid[k]),
                    sig6(profile.gains[k]),
                    sig6(profile.ratios[k])
                ));
            }
        }
        Payload::Sim { result } => {
            push(&mut out, "trials", result.trials.to_string());
            push(&mut out, "error_rate", sig6(result.error_rate));
            push(
                &mut out,
                "error_ci95",
                format!("[{}, {}]", sig6(result.error_ci.0), sig6(result.error_ci.1)),
            );
            push(&mut out, "cf_success_rate", sig6(result.cf_success_rate));
            push(
                &mut out,
                "cf_ci95",
                format!("[{}, {}]", sig6(result.cf_ci.0), sig6(result.cf_ci.1)),
            );
            if let Some((c1, c2)) = result.mean_costs {
                push(&mut out, "mean_cost_1", sig6(c1));
                push(&mut out, "mean_cost_2", sig6(c2));
            }
        }
        Payload::Gaussian {
            tau,
            baseline_bits,
            profile,
        } => {
            push(&mut out, "tau", tau.clone());
            push(&mut out, "baseline_bits", sig6(*baseline_bits));
            push(&mut out, "verdict", format!("{:?}", profile.verdict));
            out.push_str(&format!(
                "{:<14} {:<14} {:<14}\n",
                "h", "gain_bits", "ratio"
            ));
            for k in 0..profile.grid.len() {
                out.push_str(&format!(
                    "{:<14} {:<14} {:<14}\n",
                    sig6(profile.grid[k]),
                    sig6(profile.gains[k]),
                    sig6(profile.ratios[k])
                ));
            }
        }
        Payload::Frl {
            u_probs,
            map,
            cardinality_bound,
            max_reconstruction_error,
        } => {
            push(&mut out, "u_size", u_probs.len().to_string());
            push(&mut out, "cardinality_bound", cardinality_bound.to_string());
            push(
                &mut out,
                "max_reconstruction_err",
                format!("{max_reconstruction_error:.3e}"),
            );
            out.push_str("u       p(u)          g(u, s) per s\n");
            for (u, p) in u_probs.iter().enumerate() {
                let row: Vec<String> = map[u].iter().map(|x| x.to_string()).collect();
                out.push_str(&format!("{u:<7} {:<13} {}\n", sig6(*p), row.join(" ")));
            }
        }
    }
    out
}

fn emit_csv(report: &Report) -> String {
    let mut out = String::new();
    match &report.payload {
        Payload::Slope { profile, .. } | Payload::Gaussian { profile, .. } => {
            out.push_str("h,gain_bits,ratio\n");
            for k in 0..profile.grid.len() {
                out.push_str(&format!(
                    "{:e},{:e},{:e}\n",
                    profile.grid[k], profile.gains[k], profile.ratios[k]
                ));
            }
        }
        Payload::Bound { bound, .. } => {
            out.push_str("metric,value\n");
            out.push_str(&format!("sum_rate_bits,{:e}\n", bound.value));
            for (k, v) in &bound.constraint_slacks {
                out.push_str(&format!("{k},{v:e}\n"));
            }
        }
        Payload::Class { report: r } => {
            out.push_str("metric,value\n");
            out.push_str(&format!("member,{}\n", r.member));
            out.push_str(&format!("i0_bits,{:e}\n", r.i0));
            out.push_str(&format!("jstar_bits,{:e}\n", r.j_star));
            out.push_str(&format!("margin_bits,{:e}\n", r.margin));
        }
        Payload::Sim { result } => {
            out.push_str("metric,value\n");
            out.push_str(&format!("trials,{}\n", result.trials));
            out.push_str(&format!("error_rate,{:e}\n", result.error_rate));
            out.push_str(&format!("error_ci_lo,{:e}\n", result.error_ci.0));
            out.push_str(&format!("error_ci_hi,{:e}\n", result.error_ci.1));
            out.push_str(&format!("cf_success_rate,{:e}\n", result.cf_success_rate));
            out.push_str(&format!("cf_ci_lo,{:e}\n", result.cf_ci.0));
            out.push_str(&format!("cf_ci_hi,{:e}\n", result.cf_ci.1));
        }
        Payload::Frl { u_probs, map, .. } => {
            let s_size = map.first().map(|r| r.len()).unwrap_or(0);
            let header: Vec<String> = (0..s_size).map(|s| format!("g_s{s}")).collect();
            out.push_str(&format!("u,prob,{}\n", header.join(",")));
            for (u, p) in u_probs.iter().enumerate() {
                let row: Vec<String> = map[u].iter().map(|x| x.to_string()).collect();
                out.push_str(&format!("{u},{p:e},{}\n", row.join(",")));
            }
        }
    }
    out
}
