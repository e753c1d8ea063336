use cascade_gp::features::{build_features, DerivativeMode, DfTransform, FeatureSpec, Sample, Scheme};
use nalgebra::DVector;

fn sample(n: usize) -> Sample {
    Sample {
        t: 0.0,
        q: DVector::from_fn(n, |i, _| i as f64),
        qd: DVector::from_fn(n, |i, _| 100.0 + i as f64),
        qdd: DVector::from_fn(n, |i, _| 200.0 + i as f64),
        tau: DVector::zeros(n),
        q_history: (0..n).map(|i| vec![i as f64, i as f64 - 1.0, i as f64 - 3.0]).collect(),
    }
}

/// Counted directly from the component lists rather than from `FeatureSpec::dim`.
fn expected(scheme: Scheme, n: usize, i: usize) -> usize {
    match scheme {
        Scheme::Standard => 3 * n,
        Scheme::Inward if i < n => 3 * i + 1,
        Scheme::Outward if i > 1 => 3 * (n - i + 1) + 1,
        _ => 3 * n,
    }
}

#[test]
fn dimensions_for_every_chain_up_to_ten_joints() {
    for n in 1..=10 {
        let s = sample(n);
        for i in 1..=n {
            for scheme in [Scheme::Standard, Scheme::Inward, Scheme::Outward] {
                for mode in [DerivativeMode::DerivativeBased, DerivativeMode::DerivativeFree(DfTransform::identity(2))] {
                    let spec = FeatureSpec {
                        scheme,
                        joint_index: i,
                        derivative_mode: mode,
                    };
                    let f = build_features(&spec, &s, Some(1.0)).unwrap();
                    let want = expected(scheme, n, i);
                    assert_eq!(f.dim(), want, "{scheme:?} n={n} i={i}");
                    assert_eq!(spec.dim(n).unwrap(), want);
                    let mut names = f.names();
                    names.sort();
                    names.dedup();
                    assert_eq!(names.len(), want, "slot names must be unique");
                }
            }
        }
    }
}

#[test]
fn dimension_examples() {
    let based = |scheme, joint_index| FeatureSpec {
        scheme,
        joint_index,
        derivative_mode: DerivativeMode::DerivativeBased,
    };
    assert_eq!(based(Scheme::Standard, 1).dim(6).unwrap(), 18);
    assert_eq!(based(Scheme::Inward, 3).dim(6).unwrap(), 10);
    assert_eq!(based(Scheme::Inward, 6).dim(6).unwrap(), 18);
    assert_eq!(based(Scheme::Inward, 2).dim(6).unwrap(), 7);
    assert_eq!(based(Scheme::Outward, 6).dim(6).unwrap(), 4);
    assert_eq!(based(Scheme::Outward, 1).dim(6).unwrap(), 18);
    assert_eq!(based(Scheme::Outward, 4).dim(7).unwrap(), 13);
    assert_eq!(based(Scheme::Standard, 1).dim(7).unwrap(), 21);
    let free = FeatureSpec {
        scheme: Scheme::Standard,
        joint_index: 1,
        derivative_mode: DerivativeMode::DerivativeFree(DfTransform::identity(2)),
    };
    assert_eq!(free.dim(6).unwrap(), 18);
}

#[test]
fn build_is_pure() {
    let s = sample(5);
    let spec = FeatureSpec {
        scheme: Scheme::Outward,
        joint_index: 3,
        derivative_mode: DerivativeMode::DerivativeFree(DfTransform::identity(2)),
    };
    assert_eq!(build_features(&spec, &s, Some(2.0)).unwrap(), build_features(&spec, &s, Some(2.0)).unwrap());
}
