//! Dynamics identities of the randomized deliberate-round wrapper, checked
//! on real runs: the deliberate-count recursion equals the histogram over
//! flagged rounds, the empirical state freezes between deliberate rounds,
//! the per-round sampling law realizes the logged mixed strategy, and the
//! realized mixture never strays from the convergence statistic by more
//! than the activation rate allows.

use fplab_core::algorithm::{AlgorithmSpec, FpState, PredictionMap};
use fplab_core::config::ExperimentConfig;
use fplab_core::game::TieBreak;
use fplab_core::games::builtin;
use fplab_core::rng::RngBank;
use fplab_core::runner::{run_experiment_with_storage, TraceStorage};
use fplab_core::schedule::{DecaySchedule, RhoFamily};
use fplab_core::simplex::SIMPLEX_DIAMETER;
use fplab_core::strong::{
    draw_deliberate_flag, extract_embedded_process, strong_step, StrongConfig, StrongState,
};
use fplab_core::trace::TraceRecord;
use fplab_core::{fp_type_step, SimplexVector};

fn strong_mp_trace(horizon: usize, seed: u64) -> Vec<TraceRecord> {
    let exp = ExperimentConfig::from_toml_str(&format!(
        r#"
        game = "matching-pennies"
        horizon = {horizon}
        seeds = [{seed}]

        [algorithm]
        preset = "classical-fp"

        [variant]
        kind = "strong"

        [variant.rho]
        family = "power"
        scale = 1.0
        exponent = 0.35
    "#
    ))
    .unwrap()
    .validate()
    .unwrap();
    run_experiment_with_storage(&exp, TraceStorage::Memory)
        .unwrap()
        .traces
        .unwrap()
        .remove(0)
}

#[test]
fn deliberate_recursion_matches_flagged_round_histogram() {
    let trace = strong_mp_trace(2_000, 3);
    for player in 0..2 {
        let mut counts = [0.0f64; 2];
        let mut seen = 0.0;
        for record in &trace {
            if record.flags[player] {
                counts[record.actions[player]] += 1.0;
                seen += 1.0;
            }
            // The trace's deliberate count is the flag prefix-sum.
            assert_eq!(record.ell[player] as f64, seen);
            if record.t % 250 == 0 || record.t == trace.len() {
                let q = record.q.component(player);
                for a in 0..2 {
                    assert!(
                        (q.get(a) - counts[a] / seen).abs() <= 1e-10,
                        "player {player} round {} action {a}",
                        record.t
                    );
                }
            }
        }
    }
}

#[test]
fn empirical_state_freezes_between_deliberate_rounds() {
    let trace = strong_mp_trace(1_500, 11);
    for t in 1..trace.len() {
        for player in 0..2 {
            if !trace[t].flags[player] {
                let prev = trace[t - 1].q.component(player);
                let cur = trace[t].q.component(player);
                for a in 0..2 {
                    assert_eq!(prev.get(a).to_bits(), cur.get(a).to_bits());
                }
            }
        }
    }
    // Identity: q_i at the round of the ℓ_i(t)-th deliberate action equals
    // q_i(t), for sampled t.
    for player in 0..2 {
        let embedded = extract_embedded_process(&trace, player, PredictionMap::Identity).unwrap();
        for t in (0..trace.len()).step_by(15) {
            let s = trace[t].ell[player];
            let tau_s = embedded.tau[s - 1];
            let there = trace[tau_s - 1].q.component(player);
            let here = trace[t].q.component(player);
            for a in 0..2 {
                assert_eq!(there.get(a).to_bits(), here.get(a).to_bits());
            }
        }
    }
}

#[test]
fn embedded_process_bookkeeping_is_consistent() {
    let trace = strong_mp_trace(1_000, 5);
    for player in 0..2 {
        let embedded = extract_embedded_process(&trace, player, PredictionMap::Identity).unwrap();
        assert_eq!(embedded.tau[0], 1, "initialization is deliberate");
        for (k, &tau) in embedded.tau.iter().enumerate() {
            if k > 0 {
                assert!(tau > embedded.tau[k - 1]);
            }
            assert!(trace[tau - 1].flags[player]);
            assert_eq!(trace[tau - 1].ell[player], k + 1);
            // The embedded action is the action played at that round.
            assert_eq!(embedded.actions[k], trace[tau - 1].actions[player]);
            // The embedded empirical state is the trace's state there.
            let own = embedded.own_q[k].clone();
            let there = trace[tau - 1].q.component(player);
            for a in 0..2 {
                assert_eq!(own.get(a).to_bits(), there.get(a).to_bits());
            }
        }
        assert_eq!(embedded.tau.len(), *trace.last().unwrap().ell.get(player).unwrap());
    }
}

#[test]
fn sampling_law_matches_the_realized_mixture() {
    let game = builtin("matching-pennies").unwrap();
    let spec = AlgorithmSpec::classical_fp();
    let config = StrongConfig::uniform(
        RhoFamily::power(1.0, 0.35).unwrap(),
        DecaySchedule::Zero,
        2,
    )
    .unwrap();

    // Freeze a mid-run state. 50 rounds in, ρ(51) ≈ 0.25, so both branches
    // of the sampling rule fire often.
    let mut state = StrongState::init(&spec, &game, &[0, 1]).unwrap();
    let mut rngs = RngBank::new(42, 2);
    for _ in 0..50 {
        strong_step(&spec, &config, &game, &mut state, TieBreak::LowestIndex, &mut rngs).unwrap();
    }

    let reps = 100_000usize;
    let mut action_counts = [[0usize; 2]; 2];
    let mut flag_counts = [0usize; 2];
    let mut g = None;
    let mut rho = None;
    for rep in 0..reps {
        let mut probe = state.clone();
        let mut probe_rngs = RngBank::new(1_000 + rep as u64, 2);
        strong_step(
            &spec,
            &config,
            &game,
            &mut probe,
            TieBreak::LowestIndex,
            &mut probe_rngs,
        )
        .unwrap();
        for i in 0..2 {
            action_counts[i][probe.actions[i]] += 1;
            flag_counts[i] += probe.flags[i] as usize;
        }
        if rep == 0 {
            // br, ρ, and ξ(t−1) are state-determined, so the realized
            // mixture is identical across repetitions.
            g = Some(probe.realized_mixed_strategy().unwrap());
            rho = Some(probe.rho_used.clone());
        }
    }
    let g = g.unwrap();
    let rho = rho.unwrap();
    for i in 0..2 {
        let rate = rho[i];
        let sigma_flag = (rate * (1.0 - rate) / reps as f64).sqrt();
        let flag_freq = flag_counts[i] as f64 / reps as f64;
        assert!(
            (flag_freq - rate).abs() <= 3.0 * sigma_flag,
            "player {i}: flag frequency {flag_freq} vs rate {rate}"
        );
        for a in 0..2 {
            let p = g.component(i).get(a);
            let freq = action_counts[i][a] as f64 / reps as f64;
            let sigma = (p * (1.0 - p) / reps as f64).sqrt();
            assert!(
                (freq - p).abs() <= 3.0 * sigma.max(1e-6),
                "player {i} action {a}: frequency {freq} vs mixture weight {p}"
            );
        }
    }
}

#[test]
fn realized_mixture_stays_within_rate_of_the_statistic() {
    let trace = strong_mp_trace(1_500, 17);
    for t in 1..trace.len() {
        let (prev, cur) = (&trace[t - 1], &trace[t]);
        for i in 0..2 {
            let rate = cur.rho[i];
            let to_prev_xi = cur.g_sampling.component(i).distance(prev.xi.component(i)).unwrap();
            assert!(
                to_prev_xi <= SIMPLEX_DIAMETER * rate + 1e-12,
                "round {} player {i}: ‖g−ξ(t−1)‖ = {to_prev_xi}, ρ = {rate}",
                cur.t
            );
            let to_cur_xi = cur.g_updated.component(i).distance(cur.xi.component(i)).unwrap();
            assert!(to_cur_xi <= SIMPLEX_DIAMETER * rate + 1e-12);
            // Both logged mixtures are probability vectors.
            for g in [cur.g_sampling.component(i), cur.g_updated.component(i)] {
                let total: f64 = (0..2).map(|a| g.get(a)).sum();
                assert!((total - 1.0).abs() <= 1e-9);
                assert!((0..2).all(|a| g.get(a) >= 0.0));
            }
        }
    }
}

#[test]
fn wrapper_slack_admits_every_deliberate_action() {
    // Geometric steps with slack ε(t)=1/t plus wrapper slack η(t)=1/t:
    // each deliberate action must be within the combined slack of the best
    // response to the previous round's state.
    let exp = ExperimentConfig::from_toml_str(
        r#"
        game = "matching-pennies"
        horizon = 300
        seeds = [2]

        [algorithm]
        preset = "gwfp"

        [variant]
        kind = "strong"
        eta = { family = "inverse-t" }

        [variant.rho]
        family = "power"
        scale = 1.0
        exponent = 0.35
    "#,
    )
    .unwrap()
    .validate()
    .unwrap();
    let game = exp.game.clone();
    let spec = exp.spec.clone();
    let eta = exp.strong.as_ref().unwrap().eta;
    let trace = run_experiment_with_storage(&exp, TraceStorage::Memory)
        .unwrap()
        .traces
        .unwrap()
        .remove(0);
    for t in 1..trace.len() {
        let (prev, cur) = (&trace[t - 1], &trace[t]);
        let slack = spec.br_slack.value(cur.t - 1).unwrap() + eta.value(cur.t).unwrap();
        for i in 0..2 {
            if !cur.flags[i] {
                continue;
            }
            let opponents: Vec<&SimplexVector> = (0..2)
                .filter(|&j| j != i)
                .map(|j| prev.q.component(j))
                .collect();
            let admissible = game
                .epsilon_best_response_set(i, &opponents, slack)
                .unwrap();
            assert!(
                admissible.contains(&cur.actions[i]),
                "round {} player {i}: action {} not within slack {slack}",
                cur.t,
                cur.actions[i]
            );
        }
    }
}

#[test]
fn flag_frequency_matches_rate() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let draws = 100_000;
    let mut ones = 0usize;
    for _ in 0..draws {
        ones += draw_deliberate_flag(0.5, &mut rng).unwrap() as usize;
    }
    let mean = ones as f64 / draws as f64;
    assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
}

#[test]
fn certain_deliberation_replays_the_base_process_exactly() {
    let game = builtin("matching-pennies").unwrap();
    let spec = AlgorithmSpec::classical_fp();
    let config =
        StrongConfig::uniform(RhoFamily::Constant { value: 1.0 }, DecaySchedule::Zero, 2).unwrap();
    let initial = [0usize, 0];

    let mut base = FpState::init(&spec, &game, &initial).unwrap();
    let mut strong = StrongState::init(&spec, &game, &initial).unwrap();
    let mut base_rngs = RngBank::new(4, 2);
    let mut strong_rngs = RngBank::new(4, 2);
    for _ in 0..300 {
        let base_actions =
            fp_type_step(&spec, &game, &mut base, TieBreak::LowestIndex, &mut base_rngs).unwrap();
        strong_step(
            &spec,
            &config,
            &game,
            &mut strong,
            TieBreak::LowestIndex,
            &mut strong_rngs,
        )
        .unwrap();
        assert_eq!(base_actions, strong.actions);
        assert!(strong.flags.iter().all(|&x| x));
        assert_eq!(strong.ell, vec![strong.round; 2]);
        for i in 0..2 {
            for a in 0..2 {
                assert_eq!(
                    base.q.component(i).get(a).to_bits(),
                    strong.q.component(i).get(a).to_bits()
                );
            }
        }
    }
}
