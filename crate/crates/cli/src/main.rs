//! `fedsel`: drive selection experiments from a TOML config.
//!
//! Four subcommands cover the experiment lifecycle: `simulate` runs protocol
//! rounds and writes traces, `attack` runs one of the named attacks, `check`
//! re-validates stored traces against the selection properties, and `costs`
//! runs the on-chain cost scaling experiment. Exit codes: 0 on success, 1
//! when an asserted property fails or a run aborts, 2 on usage errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use fedsel_core::adversary::{
    colluding_recovery, grind_baseline_keys, grinding_success_envelope, noncolluding_recovery,
    omission_sweep, secure_isolation_trials, select_maximize_set, select_qualify_target,
    IsolationOutcome, KeyGrindObjective, KeyGrindOutcome, OmissionReport, RecoveryOutcome,
};
use fedsel_core::chain::AdversaryModel;
use fedsel_core::config::{AttackKind, AttackSpec, ExperimentConfig, Protocol};
use fedsel_core::costs::{scaling_experiment, CostTable};
use fedsel_core::fedavg::FlEngine;
use fedsel_core::protocol::ClientId;
use fedsel_core::sim::{
    derive_seed, BaselineWorld, RoundConfig, ServerStrategy, World,
};
use fedsel_core::stats::{
    anti_targeting_band, binomial_tail_ge, check_pool_consistency, estimate_pool_quality,
    BandReport, ConsistencyReport, PoolQualityReport,
};
use fedsel_core::trace::{ProtocolKind, RoundTrace, TraceFile, TraceWriter, SCHEMA_VERSION};
use fedsel_core::vrf::{vrf_gen, PublicKey, SecretKey, VrfMode};

#[derive(Parser)]
#[command(name = "fedsel", version, about = "Verifiable client-selection experiment driver")]
struct Cli {
    /// Experiment configuration, TOML.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the output directory from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Run the VRF on the elliptic-curve backend instead of the keyed hash.
    #[arg(long, global = true)]
    strict_crypto: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run protocol rounds and write trace.jsonl plus summary.json.
    Simulate,
    /// Run the configured attack and write attack.json.
    Attack,
    /// Check stored traces against the selection properties.
    Check {
        /// Trace files to check; defaults to <out_dir>/trace.jsonl.
        traces: Vec<PathBuf>,
    },
    /// Run the cost scaling experiment and write costs.csv plus costs.json.
    Costs,
}

/// Operator mistake, as opposed to a failed run: exits with code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(if e.is::<Usage>() { 2 } else { 1 });
    }
}

fn run(cli: Cli) -> Result<()> {
    let path = cli.config.as_ref().ok_or_else(|| usage("--config is required"))?;
    let mut cfg = ExperimentConfig::from_path(path).map_err(|e| usage(e.to_string()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.strict_crypto {
        cfg.mode = VrfMode::Strict;
        cfg.validate().map_err(|e| usage(format!("--strict-crypto: {e}")))?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.display().to_string());
    }
    let out_dir = PathBuf::from(
        cfg.out_dir.clone().unwrap_or_else(|| format!("runs/{}", cfg.label)),
    );

    match cli.cmd {
        Cmd::Simulate => simulate(&cfg, &out_dir),
        Cmd::Attack => attack(&cfg, &out_dir),
        Cmd::Check { traces } => check(&out_dir, &traces),
        Cmd::Costs => costs(&cfg, &out_dir),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary {
    schema_version: u32,
    label: String,
    protocol: Protocol,
    rounds: u64,
    n_clients: u32,
    c: String,
    kappa: u16,
    seed: u64,
    mean_pool_size: f64,
    empty_pools: u64,
    total_disputes: u64,
    rejected_final_attempts: u64,
    adversary_rounds: u64,
    trace_file: String,
    consistency: ConsistencyReport,
}

fn simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let trace_path = out_dir.join("trace.jsonl");
    let traces = match cfg.protocol {
        Protocol::Secure => simulate_secure(cfg, &trace_path)?,
        Protocol::Baseline => simulate_baseline(cfg, &trace_path)?,
    };

    let rounds = traces.len() as u64;
    let pool_sum: u64 = traces.iter().map(|t| t.pool.len() as u64).sum();
    let summary = SimulateSummary {
        schema_version: SCHEMA_VERSION,
        label: cfg.label.clone(),
        protocol: cfg.protocol,
        rounds,
        n_clients: cfg.n_clients,
        c: cfg.c.clone(),
        kappa: cfg.kappa,
        seed: cfg.seed,
        mean_pool_size: pool_sum as f64 / rounds as f64,
        empty_pools: traces.iter().filter(|t| t.pool.is_empty()).count() as u64,
        total_disputes: traces.iter().map(|t| t.disputes.len() as u64).sum(),
        rejected_final_attempts: traces
            .iter()
            .filter_map(|t| t.adversary.as_ref())
            .map(|a| a.rejected_final_attempts as u64)
            .sum(),
        adversary_rounds: traces.iter().filter(|t| t.adversary.is_some()).count() as u64,
        trace_file: "trace.jsonl".into(),
        consistency: check_pool_consistency(&traces),
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    println!(
        "wrote {} ({} rounds, mean pool {:.1}) and summary.json",
        trace_path.display(),
        rounds,
        summary.mean_pool_size
    );
    Ok(())
}

fn simulate_secure(cfg: &ExperimentConfig, trace_path: &Path) -> Result<Vec<RoundTrace>> {
    let params = cfg.security_params()?;
    let c = cfg.selection_fraction()?;
    let model = if cfg.grind > 0 {
        if cfg.beta == 0.0 {
            return Err(usage("entropy grinding needs mining share: set beta > 0"));
        }
        Some(AdversaryModel::new(&params, cfg.beta, cfg.grind)?)
    } else {
        None
    };
    let mut world = World::new(cfg.world_config()?)?;
    let colluder_keys: Vec<SecretKey> = cfg
        .colluder_ids()
        .iter()
        .map(|id| world.client(*id).keypair.sk.clone())
        .collect();

    let mut writer = TraceWriter::create(trace_path, &world.manifest())?;
    let mut traces = Vec::with_capacity(cfg.rounds as usize);
    for _ in 0..cfg.rounds {
        let round_cfg = match model {
            Some(m) => RoundConfig {
                strategy: ServerStrategy::honest(),
                grind: Some(select_maximize_set(params, c, colluder_keys.clone(), m)),
            },
            None => RoundConfig::default(),
        };
        let out = world.run_round(round_cfg)?;
        writer.record(&out.trace)?;
        traces.push(out.trace);
    }
    writer.finish()?;
    Ok(traces)
}

fn simulate_baseline(cfg: &ExperimentConfig, trace_path: &Path) -> Result<Vec<RoundTrace>> {
    if cfg.grind > 0 {
        return Err(usage(
            "key grinding is an attack; run `fedsel attack` with kind \"grind-baseline\"",
        ));
    }
    let params = cfg.security_params()?;
    let c = cfg.selection_fraction()?;
    let pks: Vec<PublicKey> = (0..cfg.n_clients)
        .map(|i| vrf_gen(&params, &derive_seed(cfg.seed, "client-key", i as u64)).map(|kp| kp.pk))
        .collect::<fedsel_core::Result<_>>()?;
    let colluders: BTreeSet<u32> = cfg.colluder_ids().iter().map(|id| id.0).collect();
    let mut world =
        BaselineWorld::new(params, c, pks, colluders, cfg.seed, cfg.label.clone())?;

    let mut writer = TraceWriter::create(trace_path, &world.manifest())?;
    let mut traces = Vec::with_capacity(cfg.rounds as usize);
    for _ in 0..cfg.rounds {
        let trace = world.run_round();
        writer.record(&trace)?;
        traces.push(trace);
    }
    writer.finish()?;
    Ok(traces)
}

#[derive(Serialize)]
struct AttackReport {
    schema_version: u32,
    label: String,
    kind: AttackKind,
    protocol: Protocol,
    seed: u64,
    detail: AttackDetail,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum AttackDetail {
    Recovery { trials: u64, successes: u64, per_trial: Vec<RecoveryOutcome> },
    Isolation { outcome: IsolationOutcome },
    KeyGrind(Box<KeyGrindDetail>),
    GrindSecure {
        target: u32,
        grind_budget: u32,
        rounds: u64,
        selection_rate: f64,
        envelope: f64,
        within_envelope: bool,
    },
    Omission { sweeps: Vec<OmissionSweep> },
}

#[derive(Serialize)]
struct KeyGrindDetail {
    colluders: u32,
    budget: u32,
    horizon: u64,
    co_selection: CoSelectionStats,
    boost: BoostStats,
    consistency_intact: bool,
}

#[derive(Serialize)]
struct CoSelectionStats {
    search: KeyGrindOutcome,
    victim: u32,
    rounds_with_victim_and_colluder: u64,
    null_rate: f64,
    p_value: f64,
}

#[derive(Serialize)]
struct BoostStats {
    search: KeyGrindOutcome,
    colluder_population_share: f64,
    colluder_selection_share: f64,
    p_value: f64,
}

#[derive(Serialize)]
struct OmissionSweep {
    drop_fraction: f64,
    report: OmissionReport,
}

fn attack(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let spec = cfg
        .attack
        .as_ref()
        .ok_or_else(|| usage("config has no [attack] section"))?;
    let detail = match spec.kind {
        AttackKind::Colluding => match cfg.protocol {
            Protocol::Baseline => recovery_trials(cfg, spec, true)?,
            Protocol::Secure => isolation_trials(cfg, spec)?,
        },
        AttackKind::Noncolluding => recovery_trials(cfg, spec, false)?,
        AttackKind::GrindBaseline => {
            if cfg.protocol != Protocol::Baseline {
                return Err(usage("grind-baseline runs against protocol = \"baseline\""));
            }
            grind_baseline(cfg, spec, out_dir)?
        }
        AttackKind::GrindSecure => {
            if cfg.protocol != Protocol::Secure {
                return Err(usage("grind-secure runs against protocol = \"secure\""));
            }
            grind_secure(cfg)?
        }
        AttackKind::Omission => {
            if cfg.protocol != Protocol::Secure {
                return Err(usage("omission runs against protocol = \"secure\""));
            }
            omission(cfg)?
        }
    };

    describe_attack(&detail);
    let report = AttackReport {
        schema_version: SCHEMA_VERSION,
        label: cfg.label.clone(),
        kind: spec.kind,
        protocol: cfg.protocol,
        seed: cfg.seed,
        detail,
    };
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("attack.json"), &report)?;
    println!("wrote {}", out_dir.join("attack.json").display());
    Ok(())
}

fn describe_attack(detail: &AttackDetail) {
    match detail {
        AttackDetail::Recovery { trials, successes, .. } => {
            println!("recovery: {successes}/{trials} trials exact");
        }
        AttackDetail::Isolation { outcome } => {
            println!(
                "isolation: {}/{} trials isolated the victim pool ({} bystanders)",
                outcome.successes, outcome.trials, outcome.honest_bystanders
            );
        }
        AttackDetail::KeyGrind(d) => {
            println!(
                "key grinding: co-selection p = {:.2e}, overrepresentation p = {:.2e}",
                d.co_selection.p_value, d.boost.p_value
            );
        }
        AttackDetail::GrindSecure { selection_rate, envelope, within_envelope, .. } => {
            println!(
                "entropy grinding: target selected at {selection_rate:.3}, envelope {envelope:.3}, within = {within_envelope}"
            );
        }
        AttackDetail::Omission { sweeps } => {
            for s in sweeps {
                println!(
                    "omission {:.0}%: {}/{} dropped clients recovered, {} bad finals rejected",
                    100.0 * s.drop_fraction,
                    s.report.dropped_recovered_via_dispute,
                    s.report.dropped_total,
                    s.report.rejected_final_attempts
                );
            }
        }
    }
}

fn recovery_trials(
    cfg: &ExperimentConfig,
    spec: &AttackSpec,
    colluding: bool,
) -> Result<AttackDetail> {
    if spec.victim >= cfg.n_clients {
        return Err(usage(format!(
            "victim {} out of range for {} clients",
            spec.victim, cfg.n_clients
        )));
    }
    let victim = ClientId(spec.victim);
    let colluders = cfg.colluder_ids();
    if colluding {
        if colluders.is_empty() {
            return Err(usage("colluding recovery needs colluders: set beta or a colluder list"));
        }
        if colluders.contains(&victim) {
            return Err(usage("the victim must not be a colluder"));
        }
    }
    let task = cfg.task.clone().unwrap_or_default();
    let tc = task.training_config()?;

    let mut per_trial = Vec::with_capacity(spec.trials as usize);
    for t in 0..spec.trials {
        let mut engine = FlEngine::new(
            task.dim,
            cfg.n_clients,
            task.samples_per_client,
            task.noise,
            tc,
            cfg.seed.wrapping_add(t),
            if colluding { colluders.clone() } else { BTreeSet::new() },
        )?;
        let outcome = if colluding {
            let ids: Vec<ClientId> = colluders.iter().copied().collect();
            colluding_recovery(&mut engine, victim, &ids)?
        } else {
            let cohort: Vec<ClientId> =
                (0..cfg.n_clients).map(ClientId).filter(|id| *id != victim).collect();
            noncolluding_recovery(&mut engine, victim, &cohort)?
        };
        per_trial.push(outcome);
    }
    let successes = per_trial.iter().filter(|o| o.exact).count() as u64;
    Ok(AttackDetail::Recovery { trials: spec.trials, successes, per_trial })
}

fn isolation_trials(cfg: &ExperimentConfig, spec: &AttackSpec) -> Result<AttackDetail> {
    let params = cfg.security_params()?;
    let c = cfg.selection_fraction()?;
    let n_colluders = cfg.colluder_ids().len() as u32;
    if n_colluders == 0 {
        return Err(usage("isolation needs colluders: set beta or a colluder list"));
    }
    let outcome = secure_isolation_trials(
        &params,
        &c,
        n_colluders,
        spec.honest_bystanders,
        spec.budget,
        spec.trials,
        cfg.seed,
    )?;
    Ok(AttackDetail::Isolation { outcome })
}

fn grind_baseline(
    cfg: &ExperimentConfig,
    spec: &AttackSpec,
    out_dir: &Path,
) -> Result<AttackDetail> {
    let params = cfg.security_params()?;
    let c = cfg.selection_fraction()?;
    let colluders = cfg.colluder_ids();
    if colluders.is_empty() {
        return Err(usage("key grinding needs colluders: set beta or a colluder list"));
    }
    if spec.victim >= cfg.n_clients || colluders.contains(&ClientId(spec.victim)) {
        return Err(usage("the victim must be an honest client id"));
    }
    let nc = colluders.len() as u32;
    let colluder_u32: BTreeSet<u32> = colluders.iter().map(|id| id.0).collect();
    let horizon = spec.horizon;

    let honest_pk = |i: u32| {
        vrf_gen(&params, &derive_seed(cfg.seed, "client-key", i as u64)).map(|kp| kp.pk)
    };
    // One world per objective: ground keys sit at the colluder ids, honest
    // deterministic keys everywhere else.
    let run_world = |keys: &[fedsel_core::vrf::KeyPair],
                     label: &str|
     -> Result<Vec<RoundTrace>> {
        let mut ground = keys.iter();
        let mut pks = Vec::with_capacity(cfg.n_clients as usize);
        for i in 0..cfg.n_clients {
            if colluder_u32.contains(&i) {
                pks.push(ground.next().expect("one key per colluder").pk.clone());
            } else {
                pks.push(honest_pk(i)?);
            }
        }
        let mut world = BaselineWorld::new(
            params,
            c,
            pks,
            colluder_u32.clone(),
            cfg.seed,
            format!("{}-{label}", cfg.label),
        )?;
        let mut writer =
            TraceWriter::create(&out_dir.join(format!("{label}.jsonl")), &world.manifest())?;
        let mut traces = Vec::with_capacity(horizon as usize);
        for _ in 0..horizon {
            let trace = world.run_round();
            writer.record(&trace)?;
            traces.push(trace);
        }
        writer.finish()?;
        Ok(traces)
    };
    std::fs::create_dir_all(out_dir)?;

    // Objective 1: shadow one honest victim's public schedule.
    let victim_pk = honest_pk(spec.victim)?;
    let objective = KeyGrindObjective::CoSelectWithVictim { victim: victim_pk, horizon };
    let (keys, co_search) =
        grind_baseline_keys(&params, &c, nc, spec.budget, &objective, cfg.seed)?;
    let co_traces = run_world(&keys, "grind-coselect")?;
    let cf = c.as_f64();
    let co_count = co_traces
        .iter()
        .filter(|t| {
            t.pool.contains(&spec.victim) && t.pool.iter().any(|id| colluder_u32.contains(id))
        })
        .count() as u64;
    let null_rate = cf * (1.0 - (1.0 - cf).powi(nc as i32));
    let at_p = binomial_tail_ge(co_count, horizon, null_rate)?;

    // Objective 2: raw selection-count boost across all colluders.
    let objective = KeyGrindObjective::BoostColluders { horizon };
    let (keys, boost_search) =
        grind_baseline_keys(&params, &c, nc, spec.budget, &objective, cfg.seed.wrapping_add(1))?;
    let boost_traces = run_world(&keys, "grind-boost")?;
    let alpha_honest = 1.0 - nc as f64 / cfg.n_clients as f64;
    let pq = estimate_pool_quality(&boost_traces, &colluder_u32, cfg.n_clients, alpha_honest, 0.2)?;

    let consistency_intact =
        check_pool_consistency(&co_traces).pass && check_pool_consistency(&boost_traces).pass;

    Ok(AttackDetail::KeyGrind(Box::new(KeyGrindDetail {
        colluders: nc,
        budget: spec.budget,
        horizon,
        co_selection: CoSelectionStats {
            search: co_search,
            victim: spec.victim,
            rounds_with_victim_and_colluder: co_count,
            null_rate,
            p_value: at_p,
        },
        boost: BoostStats {
            search: boost_search,
            colluder_population_share: pq.colluder_population_share,
            colluder_selection_share: pq.colluder_selection_share,
            p_value: pq.overrepresentation_p,
        },
        consistency_intact,
    })))
}

fn grind_secure(cfg: &ExperimentConfig) -> Result<AttackDetail> {
    let params = cfg.security_params()?;
    let c = cfg.selection_fraction()?;
    if cfg.grind == 0 {
        return Err(usage("set grind > 0 to give the miner a candidate budget"));
    }
    if cfg.beta == 0.0 {
        return Err(usage("entropy grinding needs mining share: set beta > 0"));
    }
    let colluders = cfg.colluder_ids();
    let target = *colluders.iter().next().expect("validated: grind > 0 implies colluders");
    let model = AdversaryModel::new(&params, cfg.beta, cfg.grind)?;
    let mut world = World::new(cfg.world_config()?)?;
    let sk = world.client(target).keypair.sk.clone();

    let mut hits = 0u64;
    for _ in 0..cfg.rounds {
        let out = world.run_round(RoundConfig {
            strategy: ServerStrategy::honest(),
            grind: Some(select_qualify_target(params, c, sk.clone(), model)),
        })?;
        hits += out.qualified.contains(&target) as u64;
    }
    let rate = hits as f64 / cfg.rounds as f64;
    let envelope = grinding_success_envelope(&c, cfg.grind);
    let sigma = (envelope * (1.0 - envelope) / cfg.rounds as f64).sqrt();
    Ok(AttackDetail::GrindSecure {
        target: target.0,
        grind_budget: cfg.grind,
        rounds: cfg.rounds,
        selection_rate: rate,
        envelope,
        within_envelope: rate <= envelope + 4.0 * sigma,
    })
}

fn omission(cfg: &ExperimentConfig) -> Result<AttackDetail> {
    let fractions = [0.1, 0.25, 0.5, 1.0];
    let mut sweeps = Vec::with_capacity(fractions.len());
    for (i, &drop_fraction) in fractions.iter().enumerate() {
        let mut wc = cfg.world_config()?;
        wc.master_seed = cfg.seed.wrapping_add(i as u64);
        let report = omission_sweep(wc, drop_fraction, cfg.rounds)?;
        sweeps.push(OmissionSweep { drop_fraction, report });
    }
    Ok(AttackDetail::Omission { sweeps })
}

#[derive(Serialize)]
struct CheckReport {
    schema_version: u32,
    files: Vec<FileCheck>,
    pass: bool,
}

#[derive(Serialize)]
struct FileCheck {
    path: String,
    label: String,
    protocol: ProtocolKind,
    rounds: u64,
    consistency: ConsistencyReport,
    anti_targeting: BandReport,
    pool_quality: PoolQualityReport,
    pass: bool,
}

fn check(out_dir: &Path, traces: &[PathBuf]) -> Result<()> {
    let paths: Vec<PathBuf> = if traces.is_empty() {
        vec![out_dir.join("trace.jsonl")]
    } else {
        traces.to_vec()
    };

    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    let mut files = Vec::with_capacity(paths.len());
    let mut all_pass = true;
    for path in &paths {
        let tf = TraceFile::read(path).map_err(|e| usage(e.to_string()))?;
        if tf.rounds.is_empty() {
            return Err(usage(format!("{}: trace has no rounds", path.display())));
        }
        let m = &tf.manifest;
        let c = m.c.parse().map_err(|e: fedsel_core::Error| usage(e.to_string()))?;

        let consistency = check_pool_consistency(&tf.rounds);
        let anti_targeting = anti_targeting_band(&tf.rounds, m.n_clients, &c, 4.0)?;
        let colluders: BTreeSet<u32> = m.colluders.iter().copied().collect();
        let alpha_honest = 1.0 - colluders.len() as f64 / m.n_clients as f64;
        let pool_quality =
            estimate_pool_quality(&tf.rounds, &colluders, m.n_clients, alpha_honest, 0.2)?;
        let pq_pass = pool_quality.fraction_meeting_floor >= 0.99
            && pool_quality.overrepresentation_p >= 0.001;

        let pass = consistency.pass && anti_targeting.pass && pq_pass;
        all_pass &= pass;
        println!(
            "{}: consistency {}, anti-targeting {}, pool-quality {}",
            path.display(),
            verdict(consistency.pass),
            verdict(anti_targeting.pass),
            verdict(pq_pass),
        );
        files.push(FileCheck {
            path: path.display().to_string(),
            label: m.label.clone(),
            protocol: m.protocol,
            rounds: consistency.rounds,
            consistency,
            anti_targeting,
            pool_quality,
            pass,
        });
    }

    let report = CheckReport { schema_version: SCHEMA_VERSION, files, pass: all_pass };
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("check.json"), &report)?;
    if !all_pass {
        return Err(anyhow!("one or more selection properties failed"));
    }
    Ok(())
}

fn costs(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let spec = cfg.costs.clone().unwrap_or_default();
    let params = cfg.security_params()?;
    let c = cfg.selection_fraction()?;
    let report =
        scaling_experiment(params, c, &spec.sizes, spec.rounds, cfg.seed, CostTable::default())?;

    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("costs.csv"), report.to_csv())?;
    write_json(&out_dir.join("costs.json"), &report)?;
    println!(
        "wrote cost scaling for n in {:?} ({} rounds each) to {}",
        spec.sizes,
        spec.rounds,
        out_dir.display()
    );
    Ok(())
}
