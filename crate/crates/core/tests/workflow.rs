use std::sync::OnceLock;

use qubit_readout::config::RunConfig;
use qubit_readout::dataset::{load_dataset, save_dataset, split_dataset, DatasetSplit, LabeledDataset, TransitionKind};
use qubit_readout::metrics::{auc, evaluate, evaluate_quantized, sweep_duration, sweep_train_size};
use qubit_readout::pipeline::{fit, load_pipeline, save_pipeline, Pipeline, PipelineKind};
use qubit_readout::sim::generate;

const CONFIG: &str = r#"
seed = 11

[sim]
num_qubits = 2
duration_ns = 400.0
dt_ns = 2.0
shots_per_basis_state = 1000
mode = "composite"

[noise]
crosstalk = [[1.0, 0.1], [0.12, 1.0]]

[[noise.qubits]]
steady_state_0 = { i = 1.0, q = 0.2 }
steady_state_1 = { i = -0.6, q = 0.9 }
ring_up_tau_ns = 60.0
t1_ns = 2000.0
if_freq_mhz = -50.0
noise_sigma = 2.0

[[noise.qubits]]
steady_state_0 = { i = -0.3, q = -1.0 }
steady_state_1 = { i = 0.9, q = 0.1 }
ring_up_tau_ns = 50.0
t1_ns = 2500.0
if_freq_mhz = 50.0
noise_sigma = 2.0

[split]
ratios = [0.4, 0.1, 0.5]

[pipeline]
demux_boxcar = 10
min_relax = 10

[pipeline.train]
learning_rate = 0.01
patience = 15
max_epochs = 200
"#;

struct Fixture {
    config: RunConfig,
    ds: LabeledDataset,
    split: DatasetSplit,
    mf: Pipeline,
    mf_nn: Pipeline,
    mf_rmf_nn: Pipeline,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let config = RunConfig::from_toml(CONFIG).unwrap();
        let ds = generate(&config.sim, &config.noise_model()).unwrap();
        let split = split_dataset(&ds, config.split.ratios, config.seed).unwrap();
        let train = |k| fit(k, &ds, &split, &config.pipeline).unwrap();
        Fixture {
            mf: train(PipelineKind::Mf),
            mf_nn: train(PipelineKind::MfNn),
            mf_rmf_nn: train(PipelineKind::MfRmfNn),
            config,
            ds,
            split,
        }
    })
}

#[test]
fn dataset_survives_disk_round_trip() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&f.ds, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.labels(), f.ds.labels());
    assert_eq!(back.raw_samples(), f.ds.raw_samples());
    assert_eq!(back.bins(), f.ds.bins());
    for shot in (0..f.ds.num_shots()).step_by(97) {
        for q in 0..2 {
            assert_eq!(back.event(shot, q), f.ds.event(shot, q));
        }
    }
}

#[test]
fn split_is_stratified_and_seeded() {
    let f = fixture();
    let again = split_dataset(&f.ds, f.config.split.ratios, f.config.seed).unwrap();
    assert_eq!(again.train, f.split.train);
    assert_eq!(again.test, f.split.test);
    let other = split_dataset(&f.ds, f.config.split.ratios, f.config.seed + 1).unwrap();
    assert_ne!(other.train, f.split.train);
    for state in 0..4 {
        let n = f.split.train.iter().filter(|&&s| f.ds.label(s) == state).count();
        assert_eq!(n, 400);
    }
}

#[test]
fn relaxation_filter_separates_early_decays() {
    let f = fixture();
    let p = &f.mf_rmf_nn;
    let full = vec![p.trained_bins; 2];
    for q in 0..2 {
        assert!(p.rmfs[q].is_some(), "qubit {q} relaxation filter disabled");
        let (mut relaxed, mut held) = (Vec::new(), Vec::new());
        for &shot in &f.split.test {
            if f.ds.bit(shot, q) == 0 {
                continue;
            }
            let score = p.features(&f.ds, shot, &full).unwrap()[2 + q];
            match f.ds.event(shot, q) {
                Some(e) if e.kind == TransitionKind::Relaxation && e.time_ns < 200.0 => relaxed.push(score),
                None => held.push(score),
                _ => {}
            }
        }
        assert!(relaxed.len() >= 20, "qubit {q}: {} early decays", relaxed.len());
        let a = auc(&held, &relaxed);
        assert!((a - 0.5).abs() > 0.3, "qubit {q}: auc {a}");
    }
}

#[test]
fn networks_do_not_lose_to_thresholds() {
    let f = fixture();
    let full = f.mf.trained_bins;
    let mf = evaluate(&f.mf, &f.ds, &f.split.test, full).unwrap().cumulative_accuracy;
    let nn = evaluate(&f.mf_nn, &f.ds, &f.split.test, full).unwrap().cumulative_accuracy;
    let rmf = evaluate(&f.mf_rmf_nn, &f.ds, &f.split.test, full).unwrap().cumulative_accuracy;
    assert!(mf > 0.9, "{mf}");
    assert!(nn >= mf - 0.005, "mf {mf} mf_nn {nn}");
    assert!(rmf >= nn - 0.005, "mf_nn {nn} mf_rmf_nn {rmf}");
}

#[test]
fn fixed_point_network_tracks_float() {
    let f = fixture();
    let p = &f.mf_rmf_nn;
    let q = p.quantize_network(&f.ds, &f.split.train, 12).unwrap();
    let full = vec![p.trained_bins; 2];
    let agree = f
        .split
        .test
        .iter()
        .filter(|&&s| {
            p.discriminate_per_qubit(&f.ds, s, &full).unwrap() == p.discriminate_quantized(&q, &f.ds, s, &full).unwrap()
        })
        .count();
    let rate = agree as f64 / f.split.test.len() as f64;
    assert!(rate >= 0.99, "{rate}");
    let float = evaluate(p, &f.ds, &f.split.test, p.trained_bins).unwrap().cumulative_accuracy;
    let fixed = evaluate_quantized(p, &q, &f.ds, &f.split.test, p.trained_bins).unwrap().cumulative_accuracy;
    assert!((float - fixed).abs() < 0.01, "{float} vs {fixed}");
}

#[test]
fn duration_sweep_saturates_before_full_length() {
    let f = fixture();
    let sweep = sweep_duration(&f.mf_nn, &f.ds, &f.split.test, &[25, 50, 100, 150, 200], 0.01).unwrap();
    assert_eq!(sweep.full_bins, 200);
    let sat = sweep.saturation_bins.unwrap();
    assert!(sat < 200, "saturation at {sat}");
    assert!(sweep.rows[0].cumulative_accuracy < sweep.full_accuracy);
}

#[test]
fn more_training_data_does_not_hurt() {
    let f = fixture();
    let rows = sweep_train_size(PipelineKind::Mf, &f.ds, &f.split, &[100, 1600], f.config.seed, &f.config.pipeline).unwrap();
    assert_eq!(rows.iter().map(|r| r.train_size).collect::<Vec<_>>(), [Some(100), Some(1600)]);
    assert!(rows[1].cumulative_accuracy >= rows[0].cumulative_accuracy - 0.002);
    let direct = evaluate(&f.mf, &f.ds, &f.split.test, 200).unwrap();
    assert_eq!(rows[1].cumulative_accuracy, direct.cumulative_accuracy);
}

#[test]
fn saved_pipeline_predicts_identically() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    save_pipeline(&f.mf_rmf_nn, dir.path()).unwrap();
    let back = load_pipeline(dir.path()).unwrap();
    let a = evaluate(&f.mf_rmf_nn, &f.ds, &f.split.test, 120).unwrap();
    let b = evaluate(&back, &f.ds, &f.split.test, 120).unwrap();
    assert_eq!(a, b);
}
