//! Release gate: twelve criteria run sequentially, one verdict line each.
//! A criterion fails on a violated bound or an overrun time budget; the
//! process exits nonzero if anything fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use fedsel_core::adversary::{
    colluding_recovery, grind_baseline_keys, grinding_success_envelope, noncolluding_drift,
    noncolluding_recovery, secure_isolation_trials, select_maximize_set, select_qualify_target,
    KeyGrindObjective,
};
use fedsel_core::chain::AdversaryModel;
use fedsel_core::costs::{coefficient_of_variation, linear_fit, scaling_experiment, CostTable};
use fedsel_core::fedavg::{FlEngine, TrainingConfig};
use fedsel_core::merkle::{verify_membership, Side, SortedMerkleTree};
use fedsel_core::protocol::{beacon_input, pver, ClientId, SelectionProof, Verdict};
use fedsel_core::sim::{
    derive_seed, BaselineWorld, RoundConfig, ServerStrategy, World, WorldConfig,
};
use fedsel_core::stats::{
    anti_targeting_band, binomial_tail_ge, check_pool_consistency, chernoff_bound,
    chi_square_uniform, estimate_pool_quality, Tail,
};
use fedsel_core::trace::{RoundTrace, TraceWriter};
use fedsel_core::vrf::{
    vrf_gen, vrf_prove, vrf_verify, PublicKey, SecretKey, SecurityParams, SelectionFraction,
    VrfEvaluation,
};

type CResult = Result<String, String>;

fn sim64() -> SecurityParams {
    SecurityParams::simulation(64).expect("kappa 64")
}

fn frac(num: u64, den: u64) -> SelectionFraction {
    SelectionFraction::new(num, den).expect("valid fraction")
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// 1. Colluding recovery is algebraically exact: d = 10, five colluders.
fn c01_colluding_exact() -> CResult {
    let colluders: BTreeSet<ClientId> = (0..5).map(ClientId).collect();
    let mut engine = FlEngine::new(
        10,
        16,
        30,
        0.05,
        TrainingConfig { epochs: 3, learning_rate: 0.1 },
        1001,
        colluders,
    )
    .map_err(s)?;
    let ids: Vec<ClientId> = (0..5).map(ClientId).collect();
    let out = colluding_recovery(&mut engine, ClientId(5), &ids).map_err(s)?;
    if out.linf > 1e-9 {
        return Err(format!("recovered update off by linf = {:.3e}", out.linf));
    }
    if !out.exact {
        return Err("recovery not flagged exact".into());
    }
    Ok(format!("linf = {:.2e} over d = 10", out.linf))
}

// 2. Non-colluding recovery with a reused global model is exact.
fn c02_noncolluding_exact() -> CResult {
    let mut engine = FlEngine::new(
        10,
        12,
        30,
        0.05,
        TrainingConfig { epochs: 3, learning_rate: 0.1 },
        2002,
        BTreeSet::new(),
    )
    .map_err(s)?;
    let cohort: Vec<ClientId> = (1..9).map(ClientId).collect();
    let out = noncolluding_recovery(&mut engine, ClientId(0), &cohort).map_err(s)?;
    if out.linf > 1e-9 {
        return Err(format!("aggregate difference off by linf = {:.3e}", out.linf));
    }
    Ok(format!("linf = {:.2e} with a frozen global model", out.linf))
}

// 3. Non-colluding recovery without the freeze: approximate, and sharper
// after convergence than at the start of training.
fn c03_noncolluding_drift() -> CResult {
    const COSINE_FLOOR: f64 = 0.999;
    let fresh = || {
        FlEngine::new(
            20,
            50,
            40,
            0.1,
            TrainingConfig { epochs: 5, learning_rate: 0.05 },
            99,
            BTreeSet::new(),
        )
        .map_err(s)
    };
    let cohort: Vec<ClientId> = (1..10).map(ClientId).collect();
    let everyone: Vec<ClientId> = (0..50).map(ClientId).collect();

    let mut engine = fresh()?;
    for _ in 0..100 {
        engine.run_round(&everyone, false).map_err(s)?;
    }
    let late = noncolluding_drift(&mut engine, ClientId(0), &cohort).map_err(s)?;

    let mut young = fresh()?;
    young.run_round(&everyone, false).map_err(s)?;
    let early = noncolluding_drift(&mut young, ClientId(0), &cohort).map_err(s)?;

    if late.cosine <= COSINE_FLOOR {
        return Err(format!("converged-model cosine {:.6} below {COSINE_FLOOR}", late.cosine));
    }
    if early.cosine >= late.cosine {
        return Err(format!(
            "round-1 attack should score lower: early {:.4} vs late {:.6}",
            early.cosine, late.cosine
        ));
    }
    Ok(format!("cosine {:.6} converged vs {:.3} at round 1", late.cosine, early.cosine))
}

// 4. Zero verifier conflicts across 10^4 rounds mixing honest, omission,
// and full-budget grinding schedules.
fn c04_pool_consistency() -> CResult {
    let params = sim64();
    let c = frac(1, 20);
    let mut cfg = WorldConfig::new(params, c, 200, 404);
    cfg.tau = Some(4);
    cfg.colluders = [ClientId(0), ClientId(1)].into_iter().collect();
    cfg.label = "acceptance-consistency".into();
    let mut world = World::new(cfg).map_err(s)?;
    let colluder_keys: Vec<SecretKey> =
        vec![world.client(ClientId(0)).keypair.sk.clone(), world.client(ClientId(1)).keypair.sk.clone()];
    let model = AdversaryModel::new(&params, 0.25, 64).map_err(s)?;

    let mut traces: Vec<RoundTrace> = Vec::with_capacity(10_000);
    for t in 0..10_000u64 {
        let round_cfg = if t < 4_000 {
            RoundConfig::default()
        } else if t < 7_000 {
            let mut strategy = ServerStrategy::honest();
            if t % 500 == 5 {
                // Blanket omission attempt; the chain rejects the final
                // commitment that drops disputers.
                strategy.drop_from_initial.extend((0..200).map(ClientId));
                strategy.omit_disputers_from_final.extend((0..200).map(ClientId));
            } else {
                strategy.drop_from_initial.insert(ClientId((t % 200) as u32));
                strategy.drop_from_initial.insert(ClientId(((t + 50) % 200) as u32));
                strategy.drop_from_initial.insert(ClientId(((t + 100) % 200) as u32));
                strategy.withhold_proofs.insert(ClientId(((t + 1) % 200) as u32));
            }
            RoundConfig { strategy, grind: None }
        } else {
            RoundConfig {
                strategy: ServerStrategy::honest(),
                grind: Some(select_maximize_set(params, c, colluder_keys.clone(), model)),
            }
        };
        traces.push(world.run_round(round_cfg).map_err(s)?.trace);
    }

    let report = check_pool_consistency(&traces);
    if !report.pass {
        return Err(format!(
            "{} conflicts, {} structural violations over {} rounds",
            report.conflicts, report.structural_violations, report.rounds
        ));
    }
    Ok(format!(
        "{} rounds, {} verdicts checked, 0 conflicts",
        report.rounds, report.verdicts_checked
    ))
}

// 5. Honest-chain selection rates: every client inside the 4-sigma exact
// binomial band around c.
fn c05_anti_targeting() -> CResult {
    let params = sim64();
    let c = frac(1, 100);
    let mut cfg = WorldConfig::new(params, c, 2_000, 505);
    cfg.tau = Some(4);
    cfg.label = "acceptance-anti-targeting".into();
    let mut world = World::new(cfg).map_err(s)?;
    let mut traces = Vec::with_capacity(2_000);
    for _ in 0..2_000 {
        traces.push(world.run_round(RoundConfig::default()).map_err(s)?.trace);
    }
    let report = anti_targeting_band(&traces, 2_000, &c, 4.0).map_err(s)?;
    if !report.pass {
        return Err(format!(
            "{} clients outside [{}, {}] selections: {:?}",
            report.out_of_band.len(),
            report.band_low,
            report.band_high,
            &report.out_of_band[..report.out_of_band.len().min(8)]
        ));
    }
    Ok(format!(
        "2000 clients all within [{}, {}] of expected {} selections",
        report.band_low,
        report.band_high,
        (2_000.0 * c.as_f64()) as u64
    ))
}

// 6. Pool quality under beta = 0.2 colluding miners grinding with g = 16.
fn c06_pool_quality() -> CResult {
    let params = sim64();
    let c = frac(1, 20);
    let mut cfg = WorldConfig::new(params, c, 2_000, 606);
    cfg.tau = Some(4);
    cfg.colluders = (0..400).map(ClientId).collect();
    cfg.label = "acceptance-pool-quality".into();
    let mut world = World::new(cfg).map_err(s)?;
    let colluder_keys: Vec<SecretKey> =
        (0..400).map(|i| world.client(ClientId(i)).keypair.sk.clone()).collect();
    let model = AdversaryModel::new(&params, 0.25, 16).map_err(s)?;

    let mut traces = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let round_cfg = RoundConfig {
            strategy: ServerStrategy::honest(),
            grind: Some(select_maximize_set(params, c, colluder_keys.clone(), model)),
        };
        traces.push(world.run_round(round_cfg).map_err(s)?.trace);
    }

    let colluders: BTreeSet<u32> = (0..400).collect();
    let report = estimate_pool_quality(&traces, &colluders, 2_000, 0.8, 0.2).map_err(s)?;
    if report.fraction_meeting_floor < 0.99 {
        return Err(format!(
            "honest share >= {:.2} in only {:.2}% of rounds",
            report.floor,
            100.0 * report.fraction_meeting_floor
        ));
    }
    Ok(format!(
        "honest share >= {:.2} in {:.2}% of 10^4 ground rounds (mean {:.3})",
        report.floor,
        100.0 * report.fraction_meeting_floor,
        report.mean_honest_share
    ))
}

// 7. Baseline failure pattern under key grinding with K = 256: targeted
// co-selection breaks anti-targeting, boosted keys break pool quality, and
// pool consistency still holds.
fn c07_baseline_table() -> CResult {
    let params = sim64();
    let c = frac(1, 20);
    let rounds = 500u64;
    let honest: Vec<_> = (0..100u64)
        .map(|i| vrf_gen(&params, &derive_seed(707, "honest", i)).map(|kp| kp.pk))
        .collect::<Result<_, _>>()
        .map_err(s)?;
    let victim_pk = honest[0].clone();

    // Targeted run: five colluders grind keys to shadow the victim.
    let objective = KeyGrindObjective::CoSelectWithVictim { victim: victim_pk.clone(), horizon: rounds };
    let (keys, cover) = grind_baseline_keys(&params, &c, 5, 256, &objective, 708).map_err(s)?;
    let mut pks = honest.clone();
    pks.extend(keys.iter().map(|kp| kp.pk.clone()));
    let colluder_ids: BTreeSet<u32> = (100..105).collect();
    let mut world = BaselineWorld::new(params, c, pks, colluder_ids.clone(), 709, "baseline-at".into())
        .map_err(s)?;
    let targeted: Vec<RoundTrace> = (0..rounds).map(|_| world.run_round()).collect();

    let co_selected = targeted
        .iter()
        .filter(|t| {
            t.pool.contains(&0) && t.pool.iter().any(|id| colluder_ids.contains(id))
        })
        .count() as u64;
    let p_null = c.as_f64() * (1.0 - (1.0 - c.as_f64()).powi(5));
    let p_at = binomial_tail_ge(co_selected, rounds, p_null).map_err(s)?;

    // Boost run: ten colluders grind keys for raw selection count.
    let objective = KeyGrindObjective::BoostColluders { horizon: rounds };
    let (keys, _) = grind_baseline_keys(&params, &c, 10, 256, &objective, 718).map_err(s)?;
    let mut pks = honest.clone();
    pks.extend(keys.iter().map(|kp| kp.pk.clone()));
    let boost_ids: BTreeSet<u32> = (100..110).collect();
    let mut world = BaselineWorld::new(params, c, pks, boost_ids.clone(), 719, "baseline-pq".into())
        .map_err(s)?;
    let boosted: Vec<RoundTrace> = (0..rounds).map(|_| world.run_round()).collect();
    let pq = estimate_pool_quality(&boosted, &boost_ids, 110, 0.9, 0.2).map_err(s)?;

    let pc_ok = check_pool_consistency(&targeted).pass && check_pool_consistency(&boosted).pass;

    if p_at >= 0.001 {
        return Err(format!(
            "anti-targeting survived the targeted run: {co_selected}/{rounds} co-selections, p = {p_at:.2e} (planned coverage {})",
            cover.best_score
        ));
    }
    if pq.overrepresentation_p >= 0.001 {
        return Err(format!(
            "pool quality survived the boost run: colluder share {:.3} vs {:.3}, p = {:.2e}",
            pq.colluder_selection_share, pq.colluder_population_share, pq.overrepresentation_p
        ));
    }
    if !pc_ok {
        return Err("pool consistency failed on a baseline run".into());
    }
    Ok(format!(
        "AT broken (p = {:.1e}), PQ broken (p = {:.1e}), PC intact",
        p_at, pq.overrepresentation_p
    ))
}

// 8. Secure-protocol grinding stays inside the closed-form envelope, and
// isolation of a victim-plus-colluders pool never happens.
fn c08_grinding_envelope() -> CResult {
    let params = sim64();
    let c = frac(1, 20);
    let rounds = 2_000u64;
    let victim = ClientId(0);
    let mut rates = Vec::new();

    for &g in &[1u32, 16, 64] {
        let mut cfg = WorldConfig::new(params, c, 50, 808 + g as u64);
        cfg.tau = Some(4);
        cfg.label = format!("acceptance-grind-{g}");
        let mut world = World::new(cfg).map_err(s)?;
        let sk = world.client(victim).keypair.sk.clone();
        let model = AdversaryModel::new(&params, 0.75, g).map_err(s)?;
        let mut hits = 0u64;
        for _ in 0..rounds {
            let round_cfg = RoundConfig {
                strategy: ServerStrategy::honest(),
                grind: Some(select_qualify_target(params, c, sk.clone(), model)),
            };
            let out = world.run_round(round_cfg).map_err(s)?;
            hits += out.qualified.contains(&victim) as u64;
        }
        let rate = hits as f64 / rounds as f64;
        let envelope = grinding_success_envelope(&c, g);
        let sigma = (envelope * (1.0 - envelope) / rounds as f64).sqrt();
        let ceiling = envelope + 4.0 * sigma;
        if rate > ceiling {
            return Err(format!(
                "g = {g}: measured {rate:.4} above envelope {envelope:.4} + 4 sigma"
            ));
        }
        if g == 64 && rate < 0.5 {
            return Err(format!("g = 64 grinding never engaged: rate {rate:.4}"));
        }
        rates.push(format!("g={g}: {rate:.3} <= {ceiling:.3}"));
    }

    let isolation = secure_isolation_trials(&params, &c, 5, 1_000, 64, 100_000, 809).map_err(s)?;
    if isolation.successes != 0 {
        return Err(format!(
            "{} isolated pools out of {} trials",
            isolation.successes, isolation.trials
        ));
    }
    Ok(format!("{}; 0/100000 isolations with h = 1000", rates.join(", ")))
}

// 9. Dropped qualified clients always recover a positive verdict through the
// final-pool tree, and omitting any disputer voids the final commitment.
fn c09_dispute_completeness() -> CResult {
    let params = sim64();
    let c = frac(1, 5);
    let fractions = [0.01f64, 0.1, 0.25, 0.5, 0.75, 1.0];
    let mut dropped_total = 0u64;
    let mut recovered = 0u64;
    let mut rejected = 0u64;
    let mut rounds_run = 0u64;

    for (fi, &fraction) in fractions.iter().enumerate() {
        for seed in 0..10u64 {
            let world_seed = 909 + 100 * fi as u64 + seed;
            let fresh = || {
                let mut cfg = WorldConfig::new(params, c, 100, world_seed);
                cfg.tau = Some(4);
                World::new(cfg)
            };
            let probe = fresh().map_err(s)?.run_round(RoundConfig::default()).map_err(s)?;
            let qualified: Vec<ClientId> = probe.qualified.iter().copied().collect();
            if qualified.is_empty() {
                return Err(format!("seed {world_seed} qualified nobody"));
            }
            let k = ((fraction * qualified.len() as f64).ceil() as usize).clamp(1, qualified.len());
            let drop: BTreeSet<ClientId> = qualified[..k].iter().copied().collect();

            let mut world = fresh().map_err(s)?;
            let strategy = ServerStrategy {
                drop_from_initial: drop.clone(),
                omit_disputers_from_final: drop.clone(),
                ..ServerStrategy::honest()
            };
            let out = world.run_round(RoundConfig { strategy, grind: None }).map_err(s)?;
            rounds_run += 1;
            rejected += out
                .trace
                .adversary
                .as_ref()
                .map_or(0, |a| a.rejected_final_attempts as u64);

            let input = beacon_input(&params, &out.rnd);
            for id in &drop {
                dropped_total += 1;
                let pk = world.client(*id).keypair.pk.clone();
                let eval = vrf_prove(&params, &world.client(*id).keypair.sk, &input).map_err(s)?;
                let proof = SelectionProof {
                    subject: pk.clone(),
                    round: out.trace.round,
                    eval,
                    initial: None,
                    final_pool: Some(out.final_tree.prove(pk.as_bytes())),
                };
                recovered += (pver(&mut world.ledger, Some(&proof)) == Verdict::Selected) as u64;
            }
        }
    }

    if recovered != dropped_total {
        return Err(format!("{recovered}/{dropped_total} dropped clients proved selection"));
    }
    if rejected != rounds_run {
        return Err(format!(
            "{rejected}/{rounds_run} omitted final commitments were rejected"
        ));
    }
    Ok(format!(
        "{dropped_total}/{dropped_total} dropped clients recovered; {rejected}/{rounds_run} omissions rejected"
    ))
}

// 10. On-chain cost scaling across n in {1k, 10k, 100k}.
fn c10_cost_scaling() -> CResult {
    let params = sim64();
    let c = frac(1, 100);
    let report = scaling_experiment(params, c, &[1_000, 10_000, 100_000], 100, 1010, CostTable::default())
        .map_err(s)?;

    let round_bytes: Vec<f64> = report.points.iter().map(|p| p.verifiable_round_bytes).collect();
    let cv = coefficient_of_variation(&round_bytes).map_err(s)?;
    if cv >= 0.01 {
        return Err(format!("verifiable per-round bytes vary with n: CV = {:.4}", cv));
    }

    let pts: Vec<(f64, f64)> = report
        .points
        .iter()
        .map(|p| (p.n_clients as f64, p.recompute_round_bytes))
        .collect();
    let fit = linear_fit(&pts).map_err(s)?;
    if fit.r_squared <= 0.99 {
        return Err(format!("recompute bytes not linear in n: R^2 = {:.4}", fit.r_squared));
    }

    let ratio = report.byte_ratio_at_largest().map_err(s)?;
    if ratio <= 100.0 {
        return Err(format!("cumulative byte ratio at n = 100k only {ratio:.1}"));
    }
    Ok(format!(
        "round-byte CV = {:.2e}, recompute R^2 = {:.4}, byte ratio at 100k = {:.0}x",
        cv, fit.r_squared, ratio
    ))
}

// 11. Crypto primitive sweeps: forgery fuzz, output uniformity, tree-proof
// soundness, and Chernoff majorization of Bernoulli tails.
fn c11_crypto_suites() -> CResult {
    // VRF forgery fuzz, strict backend.
    let strict = SecurityParams::strict(128).map_err(s)?;
    let kp = vrf_gen(&strict, b"acceptance-fuzz-key").map_err(s)?;
    let input = b"acceptance-fuzz-input".to_vec();
    let honest = vrf_prove(&strict, &kp.sk, &input).map_err(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    for i in 0..10_000u32 {
        let ok = match i % 3 {
            0 => {
                let mut proof = honest.proof.clone();
                let bit = rng.gen_range(0..proof.len() * 8);
                proof[bit / 8] ^= 1 << (bit % 8);
                vrf_verify(&strict, &kp.pk, &input, &VrfEvaluation {
                    output: honest.output.clone(),
                    proof,
                })
            }
            1 => {
                let bit = rng.gen_range(0..strict.kappa() as u64);
                let output = &honest.output ^ (BigUint::from(1u8) << bit);
                vrf_verify(&strict, &kp.pk, &input, &VrfEvaluation {
                    output,
                    proof: honest.proof.clone(),
                })
            }
            _ => {
                let mut body = kp.pk.as_bytes().to_vec();
                let bit = rng.gen_range(8..body.len() * 8);
                body[bit / 8] ^= 1 << (bit % 8);
                let mutant = PublicKey::from_bytes(&body).map_err(s)?;
                vrf_verify(&strict, &mutant, &input, &honest)
            }
        };
        if ok {
            return Err(format!("forged evaluation accepted at iteration {i}"));
        }
    }

    // Output uniformity.
    let params = sim64();
    let kp = vrf_gen(&params, b"acceptance-uniformity").map_err(s)?;
    let mut counts = vec![0u64; 16];
    for i in 0u64..32_768 {
        let out = vrf_prove(&params, &kp.sk, &i.to_be_bytes()).map_err(s)?.output;
        let bin: BigUint = out >> 60;
        counts[u32::try_from(bin).map_err(s)? as usize] += 1;
    }
    let (stat, p_uniform) = chi_square_uniform(&counts).map_err(s)?;
    if p_uniform <= 0.01 {
        return Err(format!("outputs non-uniform: chi2 = {stat:.1}, p = {p_uniform:.4}"));
    }

    // Merkle mutation soundness.
    let leaves: Vec<Vec<u8>> = (0..64u32).map(|i| format!("acc-{i:02}").into_bytes()).collect();
    let tree = SortedMerkleTree::build(&params, leaves).map_err(s)?;
    let root = tree.root();
    let paths: Vec<_> = tree
        .leaves()
        .iter()
        .map(|l| tree.prove_membership(l))
        .collect::<Result<_, _>>()
        .map_err(s)?;
    for i in 0..10_000u32 {
        let mut path = paths[rng.gen_range(0..paths.len())].clone();
        match i % 4 {
            0 => {
                let st = rng.gen_range(0..path.steps.len());
                let bit = rng.gen_range(0..64);
                path.steps[st].sibling.0[bit / 8] ^= 1 << (bit % 8);
            }
            1 => path.index = (path.index + rng.gen_range(1..64)) % 64,
            2 => path.leaf_count += 1,
            _ => {
                let st = rng.gen_range(0..path.steps.len());
                path.steps[st].side = match path.steps[st].side {
                    Side::Left => Side::Right,
                    Side::Right => Side::Left,
                };
            }
        }
        let value = path.leaf.clone();
        if verify_membership(&params, &root, &value, &path) {
            return Err(format!("corrupted tree path accepted at iteration {i}"));
        }
    }

    // Chernoff bounds majorize exact and sampled Bernoulli tails.
    let (n, mu) = (1_000u64, 0.5f64);
    let dist = rand_distr::Binomial::new(n, mu).map_err(s)?;
    let reps = 4_000usize;
    let samples: Vec<u64> = (0..reps).map(|_| dist.sample(&mut rng)).collect();
    for &eps in &[0.1f64, 0.2, 0.5] {
        let lo_cut = ((1.0 - eps) * n as f64 * mu).floor() as u64;
        let hi_cut = ((1.0 + eps) * n as f64 * mu).ceil() as u64;
        let lower_bound = chernoff_bound(n, mu, eps, Tail::Lower).map_err(s)?;
        let upper_bound = chernoff_bound(n, mu, eps, Tail::Upper).map_err(s)?;

        // Exact tails via the binomial CDF.
        let exact_upper = binomial_tail_ge(hi_cut, n, mu).map_err(s)?;
        let exact_lower = 1.0 - binomial_tail_ge(lo_cut + 1, n, mu).map_err(s)?;
        if exact_lower > lower_bound || exact_upper > upper_bound {
            return Err(format!(
                "exact tail exceeds the bound at eps = {eps}: {exact_lower:.2e} vs {lower_bound:.2e} (lower), {exact_upper:.2e} vs {upper_bound:.2e} (upper)"
            ));
        }

        // Sampled tails.
        let emp_lower = samples.iter().filter(|&&x| x <= lo_cut).count() as f64 / reps as f64;
        let emp_upper = samples.iter().filter(|&&x| x >= hi_cut).count() as f64 / reps as f64;
        if emp_lower > lower_bound || emp_upper > upper_bound {
            return Err(format!(
                "sampled tail exceeds the bound at eps = {eps}: {emp_lower:.2e} / {emp_upper:.2e}"
            ));
        }
    }

    Ok(format!(
        "2 x 10^4 forgeries rejected, uniformity p = {p_uniform:.3}, Chernoff majorization holds"
    ))
}

// 12. Same config, same seed: byte-identical trace files.
fn c12_reproducibility() -> CResult {
    let dir = tempfile::tempdir().map_err(s)?;
    let params = sim64();
    let c = frac(1, 10);

    let write_secure = |path: &std::path::Path| -> Result<(), String> {
        let mut cfg = WorldConfig::new(params, c, 50, 1212);
        cfg.tau = Some(4);
        cfg.colluders = (0..3).map(ClientId).collect();
        cfg.label = "acceptance-repro".into();
        let mut world = World::new(cfg).map_err(s)?;
        let keys = vec![world.client(ClientId(0)).keypair.sk.clone()];
        let model = AdversaryModel::new(&params, 0.25, 16).map_err(s)?;
        let mut writer = TraceWriter::create(path, &world.manifest()).map_err(s)?;
        for t in 0..30u64 {
            let round_cfg = match t % 3 {
                1 => {
                    let mut strategy = ServerStrategy::honest();
                    strategy.drop_from_initial.insert(ClientId((t % 50) as u32));
                    RoundConfig { strategy, grind: None }
                }
                2 => RoundConfig {
                    strategy: ServerStrategy::honest(),
                    grind: Some(select_maximize_set(params, c, keys.clone(), model)),
                },
                _ => RoundConfig::default(),
            };
            let out = world.run_round(round_cfg).map_err(s)?;
            writer.record(&out.trace).map_err(s)?;
        }
        writer.finish().map_err(s)?;
        Ok(())
    };

    let write_baseline = |path: &std::path::Path| -> Result<(), String> {
        let mut world =
            BaselineWorld::with_generated_keys(params, c, 40, 1213, "acceptance-repro-base".into())
                .map_err(s)?;
        let mut writer = TraceWriter::create(path, &world.manifest()).map_err(s)?;
        for _ in 0..20 {
            let trace = world.run_round();
            writer.record(&trace).map_err(s)?;
        }
        writer.finish().map_err(s)?;
        Ok(())
    };

    let a = dir.path().join("secure-a.jsonl");
    let b = dir.path().join("secure-b.jsonl");
    write_secure(&a)?;
    write_secure(&b)?;
    let bytes_a = std::fs::read(&a).map_err(s)?;
    let bytes_b = std::fs::read(&b).map_err(s)?;
    if bytes_a != bytes_b {
        return Err("secure trace files differ between identical runs".into());
    }

    let ba = dir.path().join("baseline-a.jsonl");
    let bb = dir.path().join("baseline-b.jsonl");
    write_baseline(&ba)?;
    write_baseline(&bb)?;
    if std::fs::read(&ba).map_err(s)? != std::fs::read(&bb).map_err(s)? {
        return Err("baseline trace files differ between identical runs".into());
    }

    Ok(format!("secure and baseline reruns byte-identical ({} bytes)", bytes_a.len()))
}

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    run: fn() -> CResult,
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, name: "colluding-recovery-exactness", limit: Duration::from_secs(1), run: c01_colluding_exact },
        Criterion { id: 2, name: "noncolluding-exact-recovery", limit: Duration::from_secs(5), run: c02_noncolluding_exact },
        Criterion { id: 3, name: "noncolluding-drift-recovery", limit: Duration::from_secs(120), run: c03_noncolluding_drift },
        Criterion { id: 4, name: "pool-consistency", limit: Duration::from_secs(300), run: c04_pool_consistency },
        Criterion { id: 5, name: "anti-targeting-band", limit: Duration::from_secs(180), run: c05_anti_targeting },
        Criterion { id: 6, name: "pool-quality-floor", limit: Duration::from_secs(300), run: c06_pool_quality },
        Criterion { id: 7, name: "baseline-failure-pattern", limit: Duration::from_secs(180), run: c07_baseline_table },
        Criterion { id: 8, name: "grinding-envelope", limit: Duration::from_secs(300), run: c08_grinding_envelope },
        Criterion { id: 9, name: "dispute-completeness", limit: Duration::from_secs(120), run: c09_dispute_completeness },
        Criterion { id: 10, name: "cost-scaling", limit: Duration::from_secs(120), run: c10_cost_scaling },
        Criterion { id: 11, name: "crypto-primitive-suites", limit: Duration::from_secs(120), run: c11_crypto_suites },
        Criterion { id: 12, name: "trace-reproducibility", limit: Duration::from_secs(120), run: c12_reproducibility },
    ]
}

fn main() {
    let filters: Vec<String> =
        std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0u32;
    let mut ran = 0u32;
    for c in criteria() {
        let tag = format!("{:02}", c.id);
        if !filters.is_empty()
            && !filters.iter().any(|f| c.name.contains(f.as_str()) || tag == *f)
        {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let within = elapsed <= c.limit;
        let stamp = format!("{:.1}s, limit {}s", elapsed.as_secs_f64(), c.limit.as_secs());
        match outcome {
            Ok(detail) if within => {
                println!("criterion {tag} {}: PASS ({stamp}) - {detail}", c.name);
            }
            Ok(detail) => {
                failures += 1;
                println!("criterion {tag} {}: FAIL ({stamp}) - overran budget; {detail}", c.name);
            }
            Err(reason) => {
                failures += 1;
                println!("criterion {tag} {}: FAIL ({stamp}) - {reason}", c.name);
            }
        }
    }
    if ran == 0 {
        eprintln!("no criteria matched the filter");
        std::process::exit(2);
    }
    if failures > 0 {
        eprintln!("{failures} of {ran} criteria failed");
        std::process::exit(1);
    }
    println!("all {ran} criteria passed");
}
