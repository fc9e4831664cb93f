use aoaq_core::analytics::*;
use aoaq_core::*;

fn main() {
    for tok in ["single", "guarded2", "majgate5"] {
        let q = RateQuery {
            protocol: tok.parse().unwrap(),
            fault: FaultModel::new(0.1).unwrap(),
            thresholds: ThresholdConfig::new(0.8, None).unwrap(),
            neutral_policy: NeutralPolicy::NeutralCountsNegative,
        };
        let t0 = std::time::Instant::now();
        let r = monte_carlo_rates(&q, AoaSampler::UniformConditional, 1_000_000, 1).unwrap();
        println!("{tok}: fp={} elapsed={:?}", r.fp, t0.elapsed());
    }
}
