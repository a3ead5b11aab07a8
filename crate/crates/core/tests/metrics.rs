use sharetrail_core::engine::Inputs;
use sharetrail_core::eval::{execution_series, metrics_csv, metrics_from_records, popularity_cdf, run_batch, BatchConfig, GroupKey};
use sharetrail_core::synth::{generate, EcosystemConfig};
use sharetrail_core::{Denylist, ExecutionRecord, Label, LabelSet, PopularityRanks};

fn batch(parallel: usize) -> (Vec<ExecutionRecord>, String) {
    let eco = generate(&EcosystemConfig {
        n_websites: 50,
        n_users: 300,
        posts_per_user: 6,
        urls_per_website: 20,
        ..EcosystemConfig::default()
    })
    .unwrap();
    let corpus = eco.corpus().unwrap();
    let deny = Denylist::default();
    let inputs = Inputs { corpus: &corpus, labels: &eco.truth.labels, denylist: &deny };
    let mut cfg = BatchConfig::new(21);
    cfg.n_executions = 6;
    cfg.max_cycles = 12;
    cfg.parallel = parallel;
    let res = run_batch(&cfg, inputs).unwrap();
    (res.records, metrics_csv(&res.metrics))
}

#[test]
fn batch_output_does_not_depend_on_thread_count() {
    let (r1, m1) = batch(1);
    let (r4, m4) = batch(4);
    assert_eq!(m1, m4);
    let j1: Vec<String> = r1.iter().map(ExecutionRecord::to_json).collect();
    let j4: Vec<String> = r4.iter().map(ExecutionRecord::to_json).collect();
    assert_eq!(j1, j4);
}

#[test]
fn recompute_from_stored_records_is_byte_identical() {
    let (records, csv) = batch(2);
    let reloaded: Vec<ExecutionRecord> = records
        .iter()
        .map(|r| ExecutionRecord::from_json(&r.to_json()).unwrap())
        .collect();
    assert_eq!(metrics_csv(&metrics_from_records(&reloaded)), csv);
}

#[test]
fn group_means_match_a_direct_recount() {
    let (records, _) = batch(1);
    let metrics = metrics_from_records(&records);
    for (key, m) in &metrics {
        let group: Vec<&ExecutionRecord> = records.iter().filter(|r| GroupKey::of(r) == *key).collect();
        assert_eq!(m.executions, group.len());
        for x in 0..12 {
            let counts: Vec<u32> = group
                .iter()
                .map(|r| r.cycles.iter().take(x + 1).filter(|c| c.top1_label == Label::Fake).count() as u32)
                .collect();
            let mean = counts.iter().sum::<u32>() as f64 / counts.len() as f64;
            assert!((m.cumulative_rank1_fake[x] - mean).abs() < 1e-12);
            assert_eq!(m.cumulative_rank1_fake_min[x], *counts.iter().min().unwrap());
            assert_eq!(m.cumulative_rank1_fake_max[x], *counts.iter().max().unwrap());
            let hits = group
                .iter()
                .filter(|r| r.cycles.get(x).is_some_and(|c| c.top1_label == Label::Fake))
                .count() as f64;
            assert!((m.per_cycle_density[x] - hits / group.len() as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn recall_is_the_correctly_rounded_ratio() {
    let (records, _) = batch(1);
    for rec in &records {
        let s = execution_series(rec, 12);
        for x in 1..=12usize {
            let c = s.cumulative[x - 1] as f64;
            let r = s.recall[x - 1];
            assert_eq!(r.to_bits(), (c / x as f64).to_bits());
            // |r*x - c| stays within half an ulp of r scaled by x, so r is
            // the nearest double to c/x.
            let residual = r.mul_add(x as f64, -c).abs();
            let ulp = f64::from_bits(r.to_bits() + 1) - r;
            assert!(residual <= 0.5 * ulp * x as f64, "{c}/{x}");
        }
    }
}

#[test]
fn popularity_cdf_is_monotone_and_ends_at_one() {
    let labels = LabelSet::parse("a.example,fake\nb.example,fake\nc.example,fake\nd.example,credible\ne.example,fake\n").unwrap();
    let ranks = PopularityRanks::parse("a.example,10\nb.example,10\nc.example,500\nd.example,1\n", 1000).unwrap();
    let discovered: Vec<String> = ["a.example", "b.example", "c.example", "d.example", "e.example", "a.example"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let cdf = popularity_cdf(&discovered, &ranks, &labels);
    let xs: Vec<Option<f64>> = cdf.iter().map(|p| p.percentile).collect();
    assert_eq!(xs, vec![Some(0.01), Some(0.5), None]);
    let ys: Vec<f64> = cdf.iter().map(|p| p.cumulative_fraction).collect();
    assert_eq!(ys, vec![0.5, 0.75, 1.0]);
}

#[test]
fn record_order_does_not_change_metrics() {
    let (mut records, csv) = batch(1);
    records.reverse();
    assert_eq!(metrics_csv(&metrics_from_records(&records)), csv);
}
