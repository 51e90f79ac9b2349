//! Full assist loop on a synthetic walking stream: stance detection,
//! stance-phase torque profile and current-loop tracking.

use exoknee::actuation::{CurrentLoopPlant, TorqueCurrentModel};
use exoknee::gait::{detect_events, simulate_tracking, AssistProfile, DetectorParams, EventKind, StanceTiming};
use exoknee::synth::{gait_corpus, score_events, GaitCorpusParams};

fn main() -> exoknee::Result<()> {
    let det = DetectorParams::default();
    let corpus = gait_corpus(&GaitCorpusParams { strides: 20, ..Default::default() }, det.quiet_window, 42)?;
    let events = detect_events(&corpus.samples, &det)?;
    let score = score_events(&events, &corpus.labels, 0.02);
    println!(
        "{} events, F1 {:.3}, worst timing error {:.1} ms",
        events.len(),
        score.f1,
        1e3 * score.max_timing_error
    );
    for e in events.iter().take(6) {
        let tag = if e.kind == EventKind::StanceStart { "start" } else { "end" };
        println!("  {tag:5} at {:.3} s", e.t);
    }

    let profile = AssistProfile::default();
    let times: Vec<f64> = corpus.samples.iter().map(|s| s.t).collect();
    for tau_ms in [1.0, 5.0, 20.0] {
        let plant = CurrentLoopPlant { time_constant: tau_ms * 1e-3 };
        let run = simulate_tracking(
            &profile,
            &StanceTiming::default(),
            &times,
            &events,
            &TorqueCurrentModel::default(),
            &plant,
        )?;
        println!("current loop {tau_ms:4} ms: stance RMS error {:.3} Nm", run.rms_error);
    }
    Ok(())
}
