//! Runs the reference recipe and prints a summary.
//!
//! Usage: `cargo run --release --example reference_run [config.toml]`

use std::time::Instant;

use qubit_readout::config::RunConfig;
use qubit_readout::dataset::split_dataset;
use qubit_readout::metrics::{evaluate, evaluate_quantized};
use qubit_readout::pipeline::{fit, Pipeline, PipelineKind};
use qubit_readout::relaxation::{label_relaxations, score_labels};
use qubit_readout::sim::generate;
use qubit_readout::trace::Trace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = match std::env::args().nth(1) {
        Some(path) => RunConfig::load(path.as_ref())?,
        None => RunConfig::reference(),
    };
    let clock = Instant::now();
    let ds = generate(&config.sim, &config.noise_model())?;
    let split = split_dataset(&ds, config.split.ratios, config.seed)?;
    println!(
        "generated {} shots in {:.1?}; train {} / validation {} / test {}",
        ds.num_shots(),
        clock.elapsed(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );

    let mf = fit(PipelineKind::Mf, &ds, &split, &config.pipeline)?;
    let demux = mf.demux.clone();
    let window = config.eval.relax_window_fraction * config.sim.duration_ns;
    for q in 0..ds.num_qubits() {
        let mut classes: [Vec<Trace>; 2] = [Vec::new(), Vec::new()];
        let mut events = Vec::new();
        for &s in &split.train {
            let t = match &demux {
                Some(d) => qubit_readout::dsp::demultiplex(&ds.trace(s, 0), d.if_freqs_mhz[q], d.boxcar_len)?,
                None => ds.trace(s, q),
            };
            let b = usize::from(ds.bit(s, q));
            if b == 1 {
                events.push(ds.event(s, q));
            }
            classes[b].push(t);
        }
        let report = label_relaxations(&classes[0], &classes[1])?;
        let score = score_labels(&report, &events, window);
        let relaxed = events
            .iter()
            .filter(|e| e.is_some_and(|e| e.kind == qubit_readout::dataset::TransitionKind::Relaxation))
            .count();
        println!(
            "qubit {q}: in-window relaxations {:.1}%, labeled {}, recall {:.3}, precision {:.3}, contamination {:.3}",
            100.0 * relaxed as f64 / events.len() as f64,
            score.labeled,
            score.recall,
            score.precision,
            score.contamination
        );
    }

    let bins = ds.bins();
    let mut fitted: Vec<Pipeline> = vec![mf];
    for kind in [PipelineKind::MfNn, PipelineKind::MfRmfNn] {
        let t = Instant::now();
        let p = fit(kind, &ds, &split, &config.pipeline)?;
        let meta = &p.network.as_ref().unwrap().meta;
        println!(
            "{kind}: fit in {:.1?}, epochs {}, best {}, notices {:?}",
            t.elapsed(),
            meta.epochs_run,
            meta.best_epoch,
            p.notices
        );
        fitted.push(p);
    }
    for p in &fitted {
        let mut line = format!("{:>10}:", p.kind.as_str());
        for &b in &[bins, bins * 3 / 4, bins / 2, bins / 4] {
            let r = evaluate(p, &ds, &split.test, b)?;
            line += &format!(
                "  {b}: {:.4} {:?}",
                r.cumulative_accuracy,
                r.accuracies().iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>()
            );
        }
        println!("{line}");
        if p.network.is_some() {
            let q = p.quantize_network(&ds, &split.train, config.eval.quant_bits)?;
            let r = evaluate_quantized(p, &q, &ds, &split.test, bins)?;
            println!("{:>10}  {}-bit: {:.4}", "", config.eval.quant_bits, r.cumulative_accuracy);
        }
    }
    println!("total {:.1?}", clock.elapsed());
    Ok(())
}
