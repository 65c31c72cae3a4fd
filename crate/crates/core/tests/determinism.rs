//! Reproducibility guarantees: the same configuration must produce the same
//! bytes regardless of thread count, and the generators must be pure
//! functions of (seed, replication).

use cskde::{generate_css, run_scenario, EvalPath, Family, ScenarioConfig};

fn beta22() -> Family {
    Family::Beta {
        alpha: 2.0,
        beta: 2.0,
    }
}

fn report_json(cfg: &ScenarioConfig, threads: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    let report = pool.install(|| run_scenario(cfg)).unwrap();
    serde_json::to_string(&report).unwrap()
}

#[test]
fn scenario_results_do_not_depend_on_the_thread_pool() {
    let cfg = ScenarioConfig::new(500, 12, beta22(), Family::Uniform, 0.25, 0.2, 777);
    assert_eq!(report_json(&cfg, 1), report_json(&cfg, 3));
}

#[test]
fn estimated_weight_scenarios_do_not_depend_on_the_thread_pool() {
    let mut cfg = ScenarioConfig::new(
        500,
        8,
        beta22(),
        Family::TruncNorm {
            mu: 0.5,
            sigma: 0.3,
        },
        0.25,
        0.2,
        778,
    );
    cfg.estimate_q = true;
    cfg.eval = EvalPath::Warp;
    assert_eq!(report_json(&cfg, 1), report_json(&cfg, 3));
}

#[test]
fn generated_samples_are_pure_functions_of_seed_and_replication() {
    let a = generate_css(&beta22(), &Family::Uniform, 200, 31, 4).unwrap();
    let b = generate_css(&beta22(), &Family::Uniform, 200, 31, 4).unwrap();
    assert_eq!(a.latent, b.latent);
    assert_eq!(a.sample.times(), b.sample.times());
    assert_eq!(a.sample.statuses(), b.sample.statuses());

    let other_rep = generate_css(&beta22(), &Family::Uniform, 200, 31, 5).unwrap();
    assert_ne!(a.latent, other_rep.latent);
    let other_seed = generate_css(&beta22(), &Family::Uniform, 200, 32, 4).unwrap();
    assert_ne!(a.latent, other_seed.latent);
}
