//! `coopgain` — compute cooperation bounds, class memberships, slope
//! profiles, Gaussian closed forms, and coordination-protocol simulations
//! for state-dependent multiple access channels.

mod report;
mod spec_file;

use clap::{Args, Parser, Subcommand};
use coopgain::bounds::{baseline_sum_capacity, inner_sum_rate, CoutBudget, SolveOpts};
use coopgain::channel::{make_builtin, Builtin, CausalityTag, InputPolicy, StateMac};
use coopgain::gain::{check_class, functional_representation, slope_profile};
use coopgain::gaussian::{
    gaussian_baseline, gaussian_slope_profile, GaussianParams, GaussianTau,
};
use coopgain::prob::{Axis, CondKernel};
use coopgain::sim::{run_trials, CodeConfig};
use report::{emit, Format, Payload, Report};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_DOMAIN: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "coopgain", version, about = "Cooperation-gain toolbox for state-dependent MACs")]
struct Cli {
    /// Output format: table, json, or csv.
    #[arg(long, global = true, default_value = "table")]
    format: String,
    /// Worker threads (also via COOPGAIN_THREADS); default: all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ChannelArg {
    /// Channel spec file (JSON) or builtin name: mod3, mod3-marginal, trivial.
    channel: String,
}

#[derive(Args)]
struct SolverArgs {
    /// Random multistarts for the optimizer.
    #[arg(long, default_value_t = 32)]
    starts: usize,
    /// Optimizer seed.
    #[arg(long, default_value_t = 0xC00B_5EED)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// No-cooperation sum-capacity baseline.
    Capacity {
        #[command(flatten)]
        channel: ChannelArg,
        /// Causality regime: 0, t-1, t, inf, inf-s.
        #[arg(long, default_value = "0")]
        tau: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Cooperation inner bound at a CF output budget.
    InnerBound {
        #[command(flatten)]
        channel: ChannelArg,
        #[arg(long, default_value = "0")]
        tau: String,
        #[arg(long)]
        cout1: f64,
        #[arg(long)]
        cout2: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Membership in the infinite-slope channel class.
    CheckClass {
        #[command(flatten)]
        channel: ChannelArg,
        #[arg(long, default_value = "0")]
        tau: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Gain/h ladder with divergence verdict.
    Slope {
        #[command(flatten)]
        channel: ChannelArg,
        #[arg(long, default_value = "0")]
        tau: String,
        #[arg(long, default_value_t = 1.0)]
        v1: f64,
        #[arg(long, default_value_t = 1.0)]
        v2: f64,
        /// Largest budget scale on the ladder.
        #[arg(long, default_value_t = 0.015625)]
        h0: f64,
        #[arg(long, default_value_t = 10)]
        halvings: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo simulation of the CF coordination protocol.
    Simulate {
        #[command(flatten)]
        channel: ChannelArg,
        #[arg(long, default_value = "0")]
        tau: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long, default_value_t = 0.0)]
        cout1: f64,
        #[arg(long, default_value_t = 0.0)]
        cout2: f64,
        /// CF typicality slack.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Decoder typicality slack.
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input policy: uniform, baseline, or a JSON policy file.
        #[arg(long, default_value = "uniform")]
        policy: String,
        /// Cap on the CF pair scan.
        #[arg(long, default_value_t = 1 << 20)]
        search_cap: u64,
    },
    /// Closed-form gain curves for the binary-fading Gaussian MAC.
    Gaussian {
        #[arg(long, default_value = "0")]
        tau: String,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long)]
        noise: f64,
        #[arg(long, default_value_t = 0.5)]
        v1: f64,
        #[arg(long, default_value_t = 0.5)]
        v2: f64,
        /// Largest h on the ladder.
        #[arg(long, default_value_t = 1e-2)]
        h0: f64,
        #[arg(long, default_value_t = 24)]
        halvings: usize,
    },
    /// Functional representation of a conditional kernel p(x|s).
    Frl {
        /// JSON file: {"s_size": .., "x_size": .., "rows": [[..], ..]}.
        kernel: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match Format::parse(&cli.format) {
        Some(f) => f,
        None => {
            eprintln!("unknown format '{}'; expected table, json, or csv", cli.format);
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("COOPGAIN_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
    match run(cli.cmd, format) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    message: String,
    code: u8,
}

fn usage_err(msg: impl Into<String>) -> CliError {
    CliError {
        message: msg.into(),
        code: EXIT_USAGE,
    }
}

fn domain_err(msg: impl std::fmt::Display) -> CliError {
    CliError {
        message: msg.to_string(),
        code: EXIT_DOMAIN,
    }
}

fn parse_tau(s: &str) -> Result<CausalityTag, CliError> {
    CausalityTag::parse(s)
        .ok_or_else(|| usage_err(format!("unknown tau '{s}'; expected 0, t-1, t, inf, inf-s")))
}

/// Resolve a channel argument to a MAC plus the digest material describing
/// the inputs.
fn resolve_channel(arg: &str) -> Result<(StateMac, Vec<u8>), CliError> {
    if let Some(b) = Builtin::parse(arg) {
        let mac = make_builtin(&b).map_err(domain_err)?;
        return Ok((mac, format!("builtin:{arg}").into_bytes()));
    }
    if arg == "mod3-marginal" || arg == "mod3_marginal" {
        let mac = make_builtin(&Builtin::Mod3Adder)
            .map_err(domain_err)?
            .marginalize_state();
        return Ok((mac, format!("builtin:{arg}").into_bytes()));
    }
    let path = PathBuf::from(arg);
    let bytes = std::fs::read(&path)
        .map_err(|e| usage_err(format!("cannot read channel '{arg}': {e}")))?;
    let mac = spec_file::parse_channel_spec(&path).map_err(|e| usage_err(e.to_string()))?;
    Ok((mac, bytes))
}

fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
        h.update([0u8]);
    }
    let out = h.finalize();
    let hex: String = out.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

fn finish(
    command: &str,
    digest: String,
    seed: Option<u64>,
    started: std::time::Instant,
    payload: Payload,
    format: Format,
) {
    let report = Report {
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        inputs_digest: digest,
        seed,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        payload,
    };
    print!("{}", emit(&report, format));
}

fn run(cmd: Cmd, format: Format) -> Result<(), CliError> {
    let started = std::time::Instant::now();
    match cmd {
        Cmd::Capacity { channel, tau, solver } => {
            let (mac, input) = resolve_channel(&channel.channel)?;
            let t = parse_tau(&tau)?;
            let opts = SolveOpts {
                starts: solver.starts,
                seed: solver.seed,
                ..SolveOpts::default()
            };
            let bound = baseline_sum_capacity(&mac, t, &opts).map_err(domain_err)?;
            let d = digest(&[&input, tau.as_bytes(), &solver.seed.to_le_bytes()]);
            finish(
                "capacity",
                d,
                Some(solver.seed),
                started,
                Payload::Bound {
                    tau: t.to_string(),
                    budget: None,
                    bound,
                },
                format,
            );
        }
        Cmd::InnerBound {
            channel,
            tau,
            cout1,
            cout2,
            solver,
        } => {
            if cout1 < 0.0 || cout2 < 0.0 {
                return Err(usage_err("budgets must be nonnegative"));
            }
            let (mac, input) = resolve_channel(&channel.channel)?;
            let t = parse_tau(&tau)?;
            let opts = SolveOpts {
                starts: solver.starts,
                seed: solver.seed,
                ..SolveOpts::default()
            };
            let bound = inner_sum_rate(&mac, t, CoutBudget::new(cout1, cout2), &opts)
                .map_err(domain_err)?;
            let d = digest(&[
                &input,
                tau.as_bytes(),
                &cout1.to_le_bytes(),
                &cout2.to_le_bytes(),
                &solver.seed.to_le_bytes(),
            ]);
            finish(
                "inner-bound",
                d,
                Some(solver.seed),
                started,
                Payload::Bound {
                    tau: t.to_string(),
                    budget: Some((cout1, cout2)),
                    bound,
                },
                format,
            );
        }
        Cmd::CheckClass { channel, tau, solver } => {
            let (mac, input) = resolve_channel(&channel.channel)?;
            let t = parse_tau(&tau)?;
            let opts = SolveOpts {
                starts: solver.starts,
                seed: solver.seed,
                ..SolveOpts::default()
            };
            let report = check_class(&mac, t, &opts).map_err(domain_err)?;
            let d = digest(&[&input, tau.as_bytes(), &solver.seed.to_le_bytes()]);
            finish(
                "check-class",
                d,
                Some(solver.seed),
                started,
                Payload::Class { report },
                format,
            );
        }
        Cmd::Slope {
            channel,
            tau,
            v1,
            v2,
            h0,
            halvings,
            solver,
        } => {
            let (mac, input) = resolve_channel(&channel.channel)?;
            let t = parse_tau(&tau)?;
            let opts = SolveOpts {
                starts: solver.starts,
                seed: solver.seed,
                ..SolveOpts::default()
            };
            let profile =
                slope_profile(&mac, t, (v1, v2), h0, halvings, &opts).map_err(domain_err)?;
            let d = digest(&[
                &input,
                tau.as_bytes(),
                &v1.to_le_bytes(),
                &v2.to_le_bytes(),
                &h0.to_le_bytes(),
                &halvings.to_le_bytes(),
                &solver.seed.to_le_bytes(),
            ]);
            finish(
                "slope",
                d,
                Some(solver.seed),
                started,
                Payload::Slope {
                    tau: t.to_string(),
                    v: (v1, v2),
                    profile,
                },
                format,
            );
        }
        Cmd::Simulate {
            channel,
            tau,
            n,
            r1,
            r2,
            cout1,
            cout2,
            delta,
            eps,
            trials,
            seed,
            policy,
            search_cap,
        } => {
            let (mac, input) = resolve_channel(&channel.channel)?;
            let t = parse_tau(&tau)?;
            let pol = resolve_policy(&policy, &mac, t)?;
            let mut cfg = CodeConfig::new(t, pol);
            cfg.n = n;
            cfg.r1 = r1;
            cfg.r2 = r2;
            cfg.budget = CoutBudget::new(cout1.max(0.0), cout2.max(0.0));
            cfg.delta = delta;
            cfg.eps_dec = eps;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.search_cap = search_cap;
            let result = run_trials(&mac, &cfg).map_err(domain_err)?;
            let d = digest(&[
                &input,
                tau.as_bytes(),
                policy.as_bytes(),
                &n.to_le_bytes(),
                &r1.to_le_bytes(),
                &r2.to_le_bytes(),
                &cout1.to_le_bytes(),
                &cout2.to_le_bytes(),
                &delta.to_le_bytes(),
                &eps.to_le_bytes(),
                &trials.to_le_bytes(),
                &seed.to_le_bytes(),
            ]);
            finish(
                "simulate",
                d,
                Some(seed),
                started,
                Payload::Sim { result },
                format,
            );
        }
        Cmd::Gaussian {
            tau,
            p1,
            p2,
            noise,
            v1,
            v2,
            h0,
            halvings,
        } => {
            let t = match parse_tau(&tau)? {
                CausalityTag::NoState | CausalityTag::StrictlyCausal => GaussianTau::NoState,
                _ => GaussianTau::Causal,
            };
            let params = GaussianParams::new(p1, p2, noise, (v1, v2))
                .ok_or_else(|| usage_err("powers, noise, and direction must be positive"))?;
            if halvings < 4 {
                return Err(usage_err("need at least 4 halvings"));
            }
            let profile = gaussian_slope_profile(&params, t, h0, halvings);
            let baseline = gaussian_baseline(&params);
            let d = digest(&[
                tau.as_bytes(),
                &p1.to_le_bytes(),
                &p2.to_le_bytes(),
                &noise.to_le_bytes(),
                &v1.to_le_bytes(),
                &v2.to_le_bytes(),
                &h0.to_le_bytes(),
                &halvings.to_le_bytes(),
            ]);
            finish(
                "gaussian",
                d,
                None,
                started,
                Payload::Gaussian {
                    tau: format!("{t:?}"),
                    baseline_bits: baseline,
                    profile,
                },
                format,
            );
        }
        Cmd::Frl { kernel } => {
            let bytes = std::fs::read(&kernel)
                .map_err(|e| usage_err(format!("cannot read kernel file: {e}")))?;
            #[derive(serde::Deserialize)]
            struct KernelFile {
                s_size: usize,
                x_size: usize,
                rows: Vec<Vec<f64>>,
            }
            let kf: KernelFile = serde_json::from_slice(&bytes)
                .map_err(|e| usage_err(format!("kernel file is not valid JSON: {e}")))?;
            if kf.rows.len() != kf.s_size || kf.rows.iter().any(|r| r.len() != kf.x_size) {
                return Err(usage_err("rows must be s_size lists of x_size entries"));
            }
            let flat: Vec<f64> = kf.rows.iter().flatten().copied().collect();
            let ck = CondKernel::new(
                vec![Axis::S1],
                vec![kf.s_size],
                vec![Axis::X1],
                vec![kf.x_size],
                flat,
            )
            .map_err(|e| usage_err(format!("invalid kernel: {e}")))?;
            let rep = functional_representation(&ck).map_err(domain_err)?;
            let mut max_err: f64 = 0.0;
            for s in 0..kf.s_size {
                let rec = rep.reconstruct(s, kf.x_size);
                for x in 0..kf.x_size {
                    max_err = max_err.max((rec[x] - kf.rows[s][x]).abs());
                }
            }
            let map: Vec<Vec<usize>> = (0..rep.u.len())
                .map(|u| (0..kf.s_size).map(|s| rep.map.apply(u, s)).collect())
                .collect();
            let d = digest(&[&bytes]);
            finish(
                "frl",
                d,
                None,
                started,
                Payload::Frl {
                    u_probs: rep.u.probs().to_vec(),
                    map,
                    cardinality_bound: kf.s_size * (kf.x_size - 1) + 1,
                    max_reconstruction_error: max_err,
                },
                format,
            );
        }
    }
    Ok(())
}

fn resolve_policy(
    spec: &str,
    mac: &StateMac,
    tau: CausalityTag,
) -> Result<InputPolicy, CliError> {
    match spec {
        "uniform" => Ok(InputPolicy::uniform_independent(mac)),
        "baseline" => {
            let opts = SolveOpts::default();
            let b = baseline_sum_capacity(mac, tau, &opts).map_err(domain_err)?;
            Ok(b.achieving_policy)
        }
        path => {
            let bytes = std::fs::read(path)
                .map_err(|e| usage_err(format!("cannot read policy file '{path}': {e}")))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| usage_err(format!("policy file is not valid JSON: {e}")))
        }
    }
}
