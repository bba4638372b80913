use ddgate::ensemble::{estimate_gate_error, sweep_cutoff, sweep_n, with_workers, CutoffMode, RunConfig};
use ddgate::model::GateParams;
use ddgate::noise::NoiseSpec;
use ddgate::sequences::{PulseAxis, SequenceKind, SequenceSpec};

fn cfg() -> RunConfig {
    let f = NoiseSpec::one_over_f(1e9, 1.0, 1e9);
    RunConfig::new(
        GateParams::reference(),
        f,
        f,
        SequenceSpec::with_pairs(SequenceKind::Cp, PulseAxis::Y, 3).unwrap(),
    )
    .with_trajectories(1500)
    .with_seed(9)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn sweeps_ignore_worker_count() {
    let run = |w| {
        with_workers(Some(w), || {
            let mut out: Vec<f64> = sweep_n(&cfg(), &[0, 2, 7])
                .unwrap()
                .iter()
                .flat_map(|p| [p.estimate.mean, p.estimate.std_error])
                .collect();
            out.extend(
                sweep_cutoff(&cfg(), &[1e6, 1e8, 1e10], CutoffMode::FixedAmplitude)
                    .unwrap()
                    .iter()
                    .map(|p| p.estimate.mean),
            );
            out
        })
    };
    let one = run(1);
    assert_eq!(bits(&one), bits(&run(2)));
    assert_eq!(bits(&one), bits(&run(5)));
}

#[test]
fn seed_changes_results_and_is_recorded() {
    let a = estimate_gate_error(&cfg()).unwrap();
    let b = estimate_gate_error(&cfg().with_seed(10)).unwrap();
    assert_ne!(a.mean, b.mean);
    assert_eq!(a.master_seed, 9);
    assert_eq!(a.trajectories, 1500);
    assert_eq!(a.failed, 0);
}
