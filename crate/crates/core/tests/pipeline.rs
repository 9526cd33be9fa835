use distilled_sensing::harness::output::{write_simulation, write_sweep, SIMULATE_HEADER};
use distilled_sensing::harness::{simulate_trials, sweep_thresholds, ExperimentConfig, Method, Sparsity};
use distilled_sensing::rng::{trial_rng, Phase, StreamTag};
use distilled_sensing::{generate_sparse_signal, plan_allocation, run_distilled_sensing, SignalParams, SparseSignal};
use statrs::distribution::{ContinuousCDF, Normal};

/// Expected surviving signal fraction after `k - 1` refinements, tracking
/// expected index-set sizes step by step.
fn expected_retention(p: usize, s: usize, mu: f64, budgets: &[f64]) -> f64 {
    let std = Normal::new(0.0, 1.0).unwrap();
    let (mut nulls, mut sig, mut frac) = ((p - s) as f64, s as f64, 1.0);
    for &r in &budgets[..budgets.len() - 1] {
        let gamma = r / (nulls + sig);
        let keep = std.cdf(mu * gamma.sqrt());
        frac *= keep;
        sig *= keep;
        nulls *= 0.5;
    }
    frac
}

#[test]
fn signal_retention_matches_stepwise_expectation() {
    let (p, s, snr, runs) = (1usize << 14, 128usize, 8.0f64, 500u64);
    let alloc = plan_allocation(p, p as f64, 0.75).unwrap();
    let params = SignalParams::new(p, s, snr.sqrt()).unwrap();
    let mut total = 0.0;
    for t in 0..runs {
        let signal = generate_sparse_signal(&params, &mut trial_rng(3, Phase::Evaluation, t, StreamTag::Signal)).unwrap();
        let trace =
            run_distilled_sensing(&signal, &alloc, &mut trial_rng(3, Phase::Evaluation, t, StreamTag::DistilledNoise))
                .unwrap();
        let kept = trace.final_step().indices.iter().filter(|&&i| signal.in_support(i)).count();
        total += kept as f64 / s as f64;
    }
    let mean = total / runs as f64;
    let oracle = expected_retention(p, s, snr.sqrt(), alloc.budgets());
    // Per-run sd is about 0.03, so the mean of 500 runs has sd near 0.0014.
    assert!((mean - oracle).abs() < 0.01, "mean {mean} vs oracle {oracle}");
}

#[test]
fn null_measurement_count_stays_near_two_p() {
    let p = 1usize << 14;
    let alloc = plan_allocation(p, p as f64, 0.75).unwrap();
    let null = SparseSignal::null(p);
    let under = (0..500u64)
        .filter(|&t| {
            let trace =
                run_distilled_sensing(&null, &alloc, &mut trial_rng(5, Phase::Evaluation, t, StreamTag::DistilledNoise))
                    .unwrap();
            (trace.measurements() as f64) < 2.2 * p as f64
        })
        .count();
    assert!(under >= 495, "{under} of 500 under 2.2p");
}

fn small_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(1 << 11, Sparsity::Beta(0.5), 9.0);
    cfg.trials = 25;
    cfg.master_seed = seed;
    cfg
}

#[test]
fn simulation_csv_round_trips() {
    let res = simulate_trials(&small_config(1)).unwrap();
    let mut buf = Vec::new();
    write_simulation(&mut buf, &res.rows).unwrap();

    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), SIMULATE_HEADER);
    let records: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), res.rows.len());
    for (rec, (method, trial, m)) in records.iter().zip(&res.rows) {
        assert_eq!(&rec[0], method.as_str());
        assert_eq!(rec[1].parse::<u64>().unwrap(), *trial);
        assert_eq!(rec[2].parse::<f64>().unwrap().to_bits(), m.fdp.to_bits());
        assert_eq!(rec[3].parse::<f64>().unwrap().to_bits(), m.ndp.to_bits());
        assert_eq!(rec[4].parse::<bool>().unwrap(), m.detected);
        assert_eq!(rec[5].parse::<usize>().unwrap(), m.measurements_used);
        assert_eq!(rec[6].parse::<f64>().unwrap().to_bits(), m.budget_spent.to_bits());
        assert_eq!(rec[7].parse::<bool>().unwrap(), m.fdp_undefined);
        assert_eq!(rec[8].parse::<bool>().unwrap(), m.ndp_undefined);
    }
    assert!(res.audit.within_budget());
    assert_eq!(res.audit.trials_checked, 50);
}

#[test]
fn sweeps_are_reproducible_and_seed_sensitive() {
    let csv_for = |seed| {
        let mut buf = Vec::new();
        write_sweep(&mut buf, &sweep_thresholds(&small_config(seed)).unwrap().rows).unwrap();
        buf
    };
    let a = csv_for(42);
    assert_eq!(a, csv_for(42));
    assert_ne!(a, csv_for(43));
}

#[test]
fn methods_share_the_signal_but_not_the_noise() {
    let mut both = small_config(9);
    both.trials = 5;
    let mut ds_only = both.clone();
    ds_only.method = Method::Ds;
    let a = simulate_trials(&both).unwrap();
    let b = simulate_trials(&ds_only).unwrap();
    // Adding the baseline must not perturb DS results.
    let a_ds: Vec<_> = a.rows.iter().filter(|r| r.0 == Method::Ds).collect();
    let b_ds: Vec<_> = b.rows.iter().collect();
    assert_eq!(a_ds, b_ds);
}
