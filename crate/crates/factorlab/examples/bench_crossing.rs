use factorlab::hosts::HostSpec;
use factorlab::lab::{trial, TrialOutcome};
use std::io::Write;
use std::time::Instant;

fn main() {
    let spec = HostSpec::FGamma { n: 96, r: 4, s: 3, gamma: 0.1 };
    for p in [0.05f64, 0.10, 0.20, 0.40] {
        let t = Instant::now();
        let out = trial(&spec, p, 17, 300_000);
        let label = match out {
            TrialOutcome::Success => "success".to_string(),
            TrialOutcome::Failure => "failure".to_string(),
            TrialOutcome::Undecided { reason } => format!("UNDECIDED: {reason}"),
        };
        println!("f-gamma p={p:.2}: {label} in {:?}", t.elapsed());
        std::io::stdout().flush().unwrap();
    }
}
