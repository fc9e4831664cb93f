//! Grid-level cross-checks between the enumeration engine, the published
//! closed forms, and Monte Carlo estimation.

use aoaq_core::analytics::{
    compare_reports, exact_rates, monte_carlo_rates, paper_formula, AoaSampler, NeutralPolicy,
    RateQuery,
};
use aoaq_core::{FaultModel, ProtocolSpec, ThresholdConfig};

const F_GRID: [f64; 4] = [0.001, 0.01, 0.1, 0.5];
const A_GRID: [f64; 4] = [0.3, 0.5, 0.8, 0.9];
const REL_TOL: f64 = 1e-12;

fn query(protocol: ProtocolSpec, f: f64, a: f64) -> RateQuery {
    RateQuery {
        protocol,
        fault: FaultModel::new(f).unwrap(),
        thresholds: ThresholdConfig::new(a, None).unwrap(),
        neutral_policy: NeutralPolicy::NeutralCountsNegative,
    }
}

fn rel_close(x: f64, y: f64) -> bool {
    (x - y).abs() <= REL_TOL * x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

fn protocols() -> Vec<ProtocolSpec> {
    vec![
        "single".parse().unwrap(),
        "alternating".parse().unwrap(),
        "conj2".parse().unwrap(),
        "disj2".parse().unwrap(),
        "guarded2".parse().unwrap(),
        "majbool3".parse().unwrap(),
        "majgate3".parse().unwrap(),
    ]
}

#[test]
fn single_sensor_grid_matches_closed_forms() {
    for f in F_GRID {
        for a in A_GRID {
            let r = exact_rates(&query("single".parse().unwrap(), f, a)).unwrap();
            assert!(rel_close(r.fp, f * (1.0 - a)), "f={f} a={a} fp={}", r.fp);
            assert!(rel_close(r.fn_rate, f * a), "f={f} a={a} fn={}", r.fn_rate);
            // alternating reduces to a single read
            let alt = exact_rates(&query("alternating".parse().unwrap(), f, a)).unwrap();
            assert!(rel_close(alt.fp, r.fp) && rel_close(alt.fn_rate, r.fn_rate));
        }
    }
}

#[test]
fn two_sensor_fp_grid_matches_closed_forms() {
    for f in F_GRID {
        for a in A_GRID {
            let conj = exact_rates(&query(ProtocolSpec::Conjunctive, f, a)).unwrap();
            assert!(rel_close(conj.fp, paper_formula("conj-fp", f, a).unwrap()));
            let disj = exact_rates(&query(ProtocolSpec::Disjunctive, f, a)).unwrap();
            assert!(rel_close(disj.fp, paper_formula("disj-fp", f, a).unwrap()));
        }
    }
}

#[test]
fn published_inequalities_hold() {
    for f in F_GRID {
        for a in A_GRID {
            let single = exact_rates(&query("single".parse().unwrap(), f, a)).unwrap();
            let conj = exact_rates(&query(ProtocolSpec::Conjunctive, f, a)).unwrap();
            let disj = exact_rates(&query(ProtocolSpec::Disjunctive, f, a)).unwrap();
            // conjunction narrows false positives, disjunction widens them
            assert!(conj.fp <= single.fp && single.fp <= disj.fp);
            // and the reverse for false negatives
            assert!(disj.fn_rate <= single.fn_rate && single.fn_rate <= conj.fn_rate);
            assert!(conj.fn_rate >= f * a);
            assert!(disj.fn_rate <= f * a);
        }
    }
}

#[test]
fn disable_probabilities_and_their_ordering() {
    for f in F_GRID {
        let guarded = exact_rates(&query("guarded2".parse().unwrap(), f, 0.5)).unwrap();
        let gate3 = exact_rates(&query("majgate3".parse().unwrap(), f, 0.5)).unwrap();
        let gate5 = exact_rates(&query("majgate5".parse().unwrap(), f, 0.5)).unwrap();
        assert!(rel_close(guarded.p_neutral, f * (2.0 - f)));
        assert!(rel_close(gate3.p_neutral, f * f * (3.0 - 2.0 * f)));
        assert!(gate5.p_neutral <= gate3.p_neutral && gate3.p_neutral <= guarded.p_neutral);
    }
    // at f = 1e-6 three-sensor voting cuts the disable probability by ~1.5e-6
    let f = 1e-6;
    let guarded = exact_rates(&query("guarded2".parse().unwrap(), f, 0.5)).unwrap();
    let gate3 = exact_rates(&query("majgate3".parse().unwrap(), f, 0.5)).unwrap();
    let ratio = gate3.p_neutral / guarded.p_neutral;
    assert!((ratio / 1.5e-6 - 1.0).abs() < 1e-5, "ratio={ratio}");
}

#[test]
fn neutral_policy_total_probability_identity() {
    // fn[counts-negative] = fn[excluded] * (1 - p_neutral) + p_neutral
    for proto in protocols() {
        for f in F_GRID {
            for a in A_GRID {
                let mut q = query(proto, f, a);
                let counts = exact_rates(&q).unwrap();
                q.neutral_policy = NeutralPolicy::NeutralExcluded;
                let excluded = exact_rates(&q).unwrap();
                let composed =
                    excluded.fn_rate * (1.0 - counts.p_neutral) + counts.p_neutral;
                assert!(
                    (counts.fn_rate - composed).abs() <= 1e-12,
                    "{proto} f={f} a={a}: {} vs {composed}",
                    counts.fn_rate
                );
            }
        }
    }
}

#[test]
fn monte_carlo_spot_checks_agree() {
    // light version of the full arbitration gate: one grid point per protocol
    for proto in protocols() {
        let q = query(proto, 0.1, 0.8);
        let exact = exact_rates(&q).unwrap();
        let mc = monte_carlo_rates(&q, AoaSampler::UniformConditional, 200_000, 2024).unwrap();
        let cmp = compare_reports(&exact, &mc, 4.0).unwrap();
        assert!(cmp.pass(), "{proto}: {cmp:?}");
    }
}

#[test]
fn disjunctive_fn_errata_spot_check() {
    // printed chain ends at 0.0016 at (0.1, 0.8); enumeration says 0.0064
    let q = query(ProtocolSpec::Disjunctive, 0.1, 0.8);
    let exact = exact_rates(&q).unwrap();
    assert!(rel_close(exact.fn_rate, 0.0064));
    assert!(rel_close(paper_formula("disj-fn", 0.1, 0.8).unwrap(), 0.0016));
    let mc = monte_carlo_rates(&q, AoaSampler::UniformConditional, 1_000_000, 31).unwrap();
    let se = mc.se_fn.unwrap();
    assert!((mc.fn_rate - exact.fn_rate).abs() <= 4.0 * se);
    assert!((mc.fn_rate - 0.0016).abs() >= 20.0 * se);
}
