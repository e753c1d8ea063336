use cascade_gp::datasets::{self, RawTrajectory, SineExcitationSpec};
use cascade_gp::features::Scheme;
use cascade_gp::gpr::OptConfig;
use cascade_gp::kinchain::{presets, JointState, KinematicChain};
use cascade_gp::learner::{self, DfMeanSource, ModelVariant, ParametricMode, TrainOptions, TrainingSet};
use cascade_gp::Error;
use nalgebra::{DVector, Vector3};

fn data(chain: &KinematicChain, seconds: f64, seed: u64, noise: f64, friction: f64) -> RawTrajectory {
    datasets::generate_sine_dataset(
        chain,
        &SineExcitationSpec {
            duration: seconds,
            seed,
            torque_noise: noise,
            viscous_friction: vec![friction],
            ..Default::default()
        },
    )
    .unwrap()
}

fn opts() -> TrainOptions {
    TrainOptions {
        gp: OptConfig {
            restarts: 2,
            ..OptConfig::default()
        },
        ..TrainOptions::default()
    }
}

fn variant(name: &str) -> ModelVariant {
    name.parse().unwrap()
}

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

#[test]
fn semi_parametric_on_exact_data_is_the_rigid_body_model() {
    let chain = presets::synthetic_6dof();
    let train = data(&chain, 8.0, 1, 0.0, 0.0);
    let test = data(&chain, 5.0, 2, 0.0, 0.0);
    let set = TrainingSet::from_trajectory(&train, 3).unwrap();
    for name in ["SP", "SP-Inward-Cascaded", "SP-Outward-Cascaded"] {
        let model = learner::train(&variant(name), &set, Some(&chain), &opts()).unwrap();
        let pred = model.predict_trajectory(&test).unwrap();
        let err = (pred - test.tau.transpose()).amax();
        assert!(err < 1e-6, "{name}: {err:e}");
        assert!(learner::residual_targets(&chain, &set, 2).unwrap().amax() == 0.0);
    }
    let cols = TrainOptions {
        df_mean: DfMeanSource::DatasetColumns,
        ..opts()
    };
    let model = learner::train(&variant("SP-Inward-Cascaded-DF"), &set, Some(&chain), &cols).unwrap();
    let err = (model.predict_trajectory(&test).unwrap() - test.tau.transpose()).amax();
    assert!(err < 1e-6, "SP-Inward-Cascaded-DF with dataset columns: {err:e}");
}

#[test]
fn input_dimensions_follow_the_scheme() {
    let chain = presets::synthetic_6dof();
    let set = TrainingSet::from_trajectory(&data(&chain, 3.0, 1, 0.0, 0.0), 3).unwrap();
    let inward = learner::train(&variant("NP-Inward-Cascaded"), &set, None, &opts()).unwrap();
    let dims: Vec<usize> = inward.joint_models.iter().map(|j| j.gp.input_dim()).collect();
    assert_eq!(dims, vec![4, 7, 10, 13, 16, 18]);
    let outward = learner::train(&variant("NP-Outward-Cascaded-DF"), &set, None, &opts()).unwrap();
    let dims: Vec<usize> = outward.joint_models.iter().map(|j| j.gp.input_dim()).collect();
    assert_eq!(dims, vec![18, 16, 13, 10, 7, 4]);

    let arm7 = presets::synthetic_7dof();
    let set7 = TrainingSet::from_trajectory(&data(&arm7, 2.0, 1, 0.0, 0.0), 3).unwrap();
    let np = learner::train(&variant("NP"), &set7, None, &opts()).unwrap();
    assert!(np.joint_models.iter().all(|j| j.gp.input_dim() == 21));
    assert_eq!(np.cascade_order, (1..=7).collect::<Vec<_>>());
}

#[test]
fn standard_predictions_ignore_evaluation_order() {
    let chain = presets::synthetic_6dof();
    let set = TrainingSet::from_trajectory(&data(&chain, 4.0, 5, 0.05, 0.2), 3).unwrap();
    let test = data(&chain, 2.0, 6, 0.0, 0.0);
    let mut model = learner::train(&variant("NP"), &set, None, &opts()).unwrap();
    let a = model.predict_trajectory(&test).unwrap();
    model.cascade_order.reverse();
    assert_eq!(a, model.predict_trajectory(&test).unwrap());
}

#[test]
fn far_queries_fall_back_to_the_rigid_body_chain() {
    let chain = presets::synthetic_6dof();
    let set = TrainingSet::from_trajectory(&data(&chain, 6.0, 3, 0.05, 0.3), 3).unwrap();
    let model = learner::train(&variant("SP-Inward-Cascaded"), &set, Some(&chain), &opts()).unwrap();
    let far = JointState::new(
        DVector::from_element(6, 0.4),
        DVector::from_element(6, 400.0),
        DVector::from_element(6, -900.0),
    );
    let s = cascade_gp::features::Sample {
        t: 0.0,
        q: far.q.clone(),
        qd: far.qd.clone(),
        qdd: far.qdd.clone(),
        tau: DVector::zeros(6),
        q_history: vec![],
    };
    let pred = model.predict_sample(&s).unwrap();
    let rbd = chain.rnea(&far).unwrap();
    for jm in &model.joint_models {
        let sigma = jm.gp.kernel().signal_variance().sqrt();
        let i = jm.joint - 1;
        assert!((pred[i] - rbd[i]).abs() < 1e-6 * sigma, "joint {}: {} vs {}", jm.joint, pred[i], rbd[i]);
    }
}

#[test]
fn inward_chain_reproduces_noise_free_training_torques() {
    let chain = presets::synthetic_6dof();
    let train = data(&chain, 6.0, 9, 0.0, 0.0);
    let set = TrainingSet::from_trajectory(&train, 3).unwrap();
    let model = learner::train(&variant("NP-Inward-Cascaded"), &set, None, &opts()).unwrap();
    let pred = model.predict_trajectory(&train).unwrap();
    for j in 0..6 {
        let truth: Vec<f64> = train.tau.column(j).iter().copied().collect();
        let got: Vec<f64> = pred.row(j).iter().copied().collect();
        let range = truth.iter().cloned().fold(f64::MIN, f64::max) - truth.iter().cloned().fold(f64::MAX, f64::min);
        assert!(rms(&got, &truth) < 0.02 * range, "joint {}: {}", j + 1, rms(&got, &truth) / range);
    }
}

#[test]
fn payload_residuals_are_the_payload_torques() {
    let bare = presets::synthetic_6dof();
    let loaded = bare.attach_payload(5, 1.5, Vector3::new(0.05, 0.0, 0.08)).unwrap();
    let tr = data(&loaded, 3.0, 4, 0.0, 0.0);
    let set = TrainingSet::from_trajectory(&tr, 0).unwrap();
    for joint in 1..=6 {
        let r = learner::residual_targets(&bare, &set, joint).unwrap();
        for (k, s) in set.samples().iter().enumerate() {
            let st = JointState::new(s.q.clone(), s.qd.clone(), s.qdd.clone());
            let want = loaded.rnea(&st).unwrap()[joint - 1] - bare.rnea(&st).unwrap()[joint - 1];
            assert!((r[k] - want).abs() < 1e-9);
        }
        assert!(r.amax() > 1e-3);
    }
}

#[test]
fn semi_parametric_beats_non_parametric_on_exact_data() {
    let chain = presets::synthetic_6dof();
    let set = TrainingSet::from_trajectory(&data(&chain, 5.0, 11, 0.0, 0.0), 3).unwrap();
    let test = data(&chain, 5.0, 12, 0.0, 0.0);
    let err = |name: &str| {
        let m = learner::train(&variant(name), &set, Some(&chain), &opts()).unwrap();
        m.predict_trajectory(&test).unwrap() - test.tau.transpose()
    };
    let (sp, np) = (err("SP"), err("NP"));
    for j in 0..6 {
        assert!(sp.row(j).norm() <= np.row(j).norm());
    }
}

#[test]
fn single_joint_cascades_match_standard() {
    let chain = presets::pendulum(1.2, 0.7);
    let set = TrainingSet::from_trajectory(&data(&chain, 5.0, 2, 0.05, 0.1), 3).unwrap();
    let test = data(&chain, 3.0, 3, 0.0, 0.0);
    let base = learner::train(&variant("NP"), &set, None, &opts()).unwrap().predict_trajectory(&test).unwrap();
    for name in ["NP-Inward-Cascaded", "NP-Outward-Cascaded"] {
        let p = learner::train(&variant(name), &set, None, &opts()).unwrap().predict_trajectory(&test).unwrap();
        assert_eq!(p, base, "{name}");
    }
}

#[test]
fn training_ignores_sample_order() {
    let chain = presets::synthetic_6dof();
    let tr = data(&chain, 4.0, 7, 0.05, 0.2);
    let mut samples = tr.samples(3);
    let a = TrainingSet::new(samples.clone(), "a", tr.rate).unwrap();
    samples.reverse();
    samples.swap(3, 17);
    let b = TrainingSet::new(samples, "b", tr.rate).unwrap();
    let v = variant("NP-Outward-Cascaded-DF");
    let ma = learner::train(&v, &a, None, &opts()).unwrap();
    let mb = learner::train(&v, &b, None, &opts()).unwrap();
    for (x, y) in ma.joint_models.iter().zip(&mb.joint_models) {
        assert_eq!(x.gp.log_hyperparameters(), y.gp.log_hyperparameters());
    }
}

#[test]
fn bundles_round_trip() {
    let chain = presets::synthetic_6dof();
    let set = TrainingSet::from_trajectory(&data(&chain, 3.0, 1, 0.05, 0.2), 3).unwrap();
    let test = data(&chain, 2.0, 2, 0.0, 0.0);
    let dir = tempfile::tempdir().unwrap();
    for name in ["SP-Outward-Cascaded-DF", "NP-Inward-Cascaded"] {
        let mut model = learner::train(&variant(name), &set, Some(&chain), &opts()).unwrap();
        model.dataset_fingerprint = Some("abc".into());
        let path = dir.path().join(name);
        model.save(&path).unwrap();
        let back = learner::InverseDynamicsModel::load(&path).unwrap();
        assert_eq!(back.variant, model.variant);
        assert_eq!(back.dataset_fingerprint.as_deref(), Some("abc"));
        assert_eq!(back.predict_trajectory(&test).unwrap(), model.predict_trajectory(&test).unwrap());
    }
}

#[test]
fn derivative_free_variants_need_history() {
    let chain = presets::synthetic_6dof();
    let tr = data(&chain, 3.0, 1, 0.0, 0.0);
    let no_history = TrainingSet::from_trajectory(&tr, 0).unwrap();
    assert!(matches!(
        learner::train(&variant("NP-DF"), &no_history, None, &opts()),
        Err(Error::DegenerateDataset { .. })
    ));
    let with = TrainingSet::from_trajectory(&tr, 3).unwrap();
    let m = learner::train(&variant("SP-DF"), &with, Some(&chain), &opts()).unwrap();
    assert_eq!(m.history_len, 3);
    // The first two rows lack a full history and are dropped.
    assert_eq!(m.joint_models[0].gp.n_train(), tr.len() - 2);
    assert!(matches!(
        learner::train(&variant("SP"), &with, None, &opts()),
        Err(Error::MissingChain)
    ));
}

#[test]
fn predicted_cascade_inputs_during_training() {
    let chain = presets::synthetic_6dof();
    let set = TrainingSet::from_trajectory(&data(&chain, 3.0, 1, 0.05, 0.2), 3).unwrap();
    let o = TrainOptions {
        chain_predictions: true,
        ..opts()
    };
    let m = learner::train(&variant("NP-Outward-Cascaded"), &set, None, &o).unwrap();
    let measured = learner::train(&variant("NP-Outward-Cascaded"), &set, None, &opts()).unwrap();
    // The root sees no neighbor, so only downstream joints can differ.
    assert_eq!(m.joint_models[0].gp.log_hyperparameters(), measured.joint_models[0].gp.log_hyperparameters());
    assert_ne!(m.joint_models[1].gp.train_inputs(), measured.joint_models[1].gp.train_inputs());
}

#[test]
fn training_is_capped() {
    let chain = presets::planar_2r(1.0, 1.0, 1.0, 1.0);
    let set = TrainingSet::from_trajectory(&data(&chain, 30.0, 1, 0.01, 0.0), 0).unwrap();
    let o = TrainOptions {
        max_points: 40,
        ..opts()
    };
    let m = learner::train(&variant("NP"), &set, None, &o).unwrap();
    assert_eq!(m.joint_models[1].gp.n_train(), 40);
    let _ = Scheme::Standard;
    let _ = ParametricMode::NonParametric;
}
