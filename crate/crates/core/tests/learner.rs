use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vehids::estimators::ProcessModel;
use vehids::learner::{
    as_process_model, samples_from_log, train_offline, MlpModel, TrainConfig, TrainingSample, PARAM_COUNT,
};
use vehids::vehicle_sim::{generate_scenario, run_log, DrivingStyle, LogRecord, VehicleParams};

fn noise_free_log(seed: u64, duration_s: f64, style: DrivingStyle) -> Vec<LogRecord> {
    let mut scenario = generate_scenario(seed, duration_s, style).unwrap();
    scenario.noise_std = [0.0; 3];
    run_log(&VehicleParams::default(), &scenario).unwrap()
}

/// Inputs taken from true states, so the learned map is checked against the
/// plant rather than against sensor noise.
fn true_state_samples(log: &[LogRecord]) -> Vec<TrainingSample> {
    log.iter()
        .map(|r| {
            let s = r.state;
            TrainingSample::new(
                r.command.unified(),
                r.command.steer,
                s.speed_mps,
                s.yaw_rate_rps,
                s.accel_mps2,
                r.label_accel,
            )
        })
        .collect()
}

#[test]
fn backprop_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut model = MlpModel::init(rng.random());
        let mut flat = model.to_flat();
        // Nonzero biases so the check also covers them.
        flat.iter_mut().for_each(|w| *w += rng.random_range(-0.3..0.3));
        model.set_flat(&flat);
        let x = [
            rng.random_range(0.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.0..30.0),
            rng.random_range(-0.5..0.5),
            rng.random_range(-4.0..4.0),
        ];
        let (_, grad) = model.output_gradient(&x);
        for i in 0..PARAM_COUNT {
            let mut plus = flat;
            let mut minus = flat;
            plus[i] += h;
            minus[i] -= h;
            let mut mp = model.clone();
            let mut mm = model.clone();
            mp.set_flat(&plus);
            mm.set_flat(&minus);
            let fd = (mp.forward(&x) - mm.forward(&x)) / (2.0 * h);
            let denom = grad[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max((grad[i] - fd).abs() / denom);
        }
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn noise_free_training_converges() {
    let mut log = noise_free_log(31, 60.0, DrivingStyle::Aggressive);
    log.extend(noise_free_log(32, 60.0, DrivingStyle::StopAndGo));
    let samples = samples_from_log(&log, 1);
    let report = train_offline(&samples, &TrainConfig { seed: 5, ..TrainConfig::default() }).unwrap();
    assert_eq!(report.curve.len(), 1000);
    assert!(report.final_val_rmse() < 0.05, "validation RMSE {}", report.final_val_rmse());

    let curve: Vec<f64> = report.curve.iter().map(|e| e.train_mse).collect();
    assert!(*curve.last().unwrap() < report.initial_train_mse / 10.0);
}

// Full-batch training loss may rise at most 5% from one epoch to the next.
// Fixed-rate mini-batch Adam jitters well past that once the loss plateaus,
// so this is expected to fail with the default hyperparameters.
#[test]
fn training_loss_upticks_stay_within_five_percent() {
    let mut log = noise_free_log(31, 60.0, DrivingStyle::Aggressive);
    log.extend(noise_free_log(32, 60.0, DrivingStyle::StopAndGo));
    let report = train_offline(&samples_from_log(&log, 1), &TrainConfig { seed: 5, ..TrainConfig::default() }).unwrap();
    let curve: Vec<f64> = report.curve.iter().map(|e| e.train_mse).collect();
    for (epoch, w) in curve.windows(2).enumerate() {
        assert!(w[1] <= 1.05 * w[0], "training loss rose from {} to {} at epoch {}", w[0], w[1], epoch + 2);
    }
}

#[test]
fn held_out_one_step_speed_error() {
    let mut train_log = noise_free_log(41, 90.0, DrivingStyle::Aggressive);
    train_log.extend(noise_free_log(42, 90.0, DrivingStyle::Cruise));
    let cfg = TrainConfig { seed: 9, ..TrainConfig::default() };
    let model = train_offline(&true_state_samples(&train_log), &cfg).unwrap().model;

    let params = VehicleParams::default();
    let process = as_process_model(model, &params);
    let held_out = noise_free_log(43, 60.0, DrivingStyle::Aggressive);
    let mut worst: f64 = 0.0;
    for pair in held_out.windows(2) {
        let (now, next) = (&pair[0], &pair[1]);
        let x = nalgebra::DVector::from_vec(vec![now.state.speed_mps, now.state.yaw_rate_rps, now.state.accel_mps2]);
        let u = nalgebra::DVector::from_vec(vec![now.command.unified(), now.command.steer]);
        let predicted = process.predict_state(&x, &u);
        worst = worst.max((predicted[0] - next.state.speed_mps).abs());
    }
    assert!(worst < 0.02, "max one-step speed error {worst}");
}
