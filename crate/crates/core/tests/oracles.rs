//! Reference values computed outside this crate and frozen here.

use sediment::cloud::{choose_lambda, smoothed_density_eval, LambdaPolicy, ParticleCloud};
use sediment::meanfield::{field_velocity, init_blobs, MeanfieldParams, Rho0Spec};
use sediment::ot::{w1_exact, winf_exact, DiscreteMeasure};
use sediment::reflections::{first_order_velocities, GravitySettings};
use sediment::Vec3;

/// Additive recurrence in the unit cube.
fn sequence(n: usize, offset: usize) -> Vec<Vec3> {
    let a = [0.7548776662466927, 0.5698402909980532, 0.4301597090019468];
    (1..=n)
        .map(|i| {
            let k = (i + offset) as f64;
            Vec3::new((k * a[0]) % 1.0, (k * a[1]) % 1.0, (k * a[2]) % 1.0)
        })
        .collect()
}

#[test]
fn w1_uniform_matches_assignment_solver() {
    let a = DiscreteMeasure::empirical(&sequence(40, 0)).unwrap();
    let b: Vec<Vec3> = sequence(40, 1000).into_iter().map(|p| p + Vec3::new(0.1, 0.0, 0.0)).collect();
    let b = DiscreteMeasure::empirical(&b).unwrap();
    let (d, _) = w1_exact(&a, &b).unwrap();
    assert!((d - 0.15088861399018688).abs() < 1e-12, "{d}");
    let (winf, _) = winf_exact(&a, &b).unwrap();
    assert!((winf - 0.2036681207237352).abs() < 1e-15, "{winf}");
}

#[test]
fn w1_weighted_matches_linear_program() {
    let wa: Vec<f64> = (1..=12).map(|k| k as f64).collect();
    let wb: Vec<f64> = (1..=9).rev().map(|k| k as f64).collect();
    let a = DiscreteMeasure::normalized(sequence(12, 5), wa).unwrap();
    let b = DiscreteMeasure::normalized(sequence(9, 77), wb).unwrap();
    let (d, _) = w1_exact(&a, &b).unwrap();
    assert!((d - 0.3173377764746464).abs() < 1e-10, "{d}");
}

#[test]
fn first_order_three_spheres() {
    let pts = vec![Vec3::zeros(), Vec3::new(0.3, 0.1, -0.2), Vec3::new(-0.25, 0.4, 0.1)];
    let c = ParticleCloud::new(pts, 0.09, 0.0).unwrap();
    let v = first_order_velocities(&c, &GravitySettings::downward()).unwrap();
    let expected = [
        Vec3::new(0.030789127956149437, 0.0005625267981200283, -1.1259846888105154),
        Vec3::new(0.036848577163735345, 0.002548563150671234, -1.1157485448191564),
        Vec3::new(0.016094465608202928, -0.014069989888436024, -1.0871035150946262),
    ];
    for (a, b) in v.velocities.iter().zip(&expected) {
        assert!((a - b).norm() < 1e-14, "{a:?} vs {b:?}");
    }
}

#[test]
fn blob_field_at_bump_center_approaches_radial_integral() {
    // 6π r0 (2/3) ∫ ρ(r) r dr = 6π · 105/(288π) for the unit bump and r0 = 1.
    let exact = 630.0 / 288.0;
    let spec = Rho0Spec::Bump {
        center: Vec3::zeros(),
        radius: 1.0,
    };
    let p = MeanfieldParams::new(1.0, GravitySettings::downward()).unwrap();
    let errors: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&delta| {
            let d = init_blobs(&spec, 60, delta).unwrap();
            (field_velocity(&d, &p, &Vec3::zeros()).z + exact).abs()
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] < 0.03, "{errors:?}");
}

#[test]
fn bump_quadrature_defect_at_32() {
    let spec = Rho0Spec::Bump {
        center: Vec3::new(0.2, 0.0, -0.4),
        radius: 1.0,
    };
    let d = init_blobs(&spec, 32, 0.1).unwrap();
    assert!((d.mass_defect() - 8.557989279123213e-06).abs() < 1e-12, "{}", d.mass_defect());
}

#[test]
fn box_smoothing_is_within_lambda_in_w1() {
    // Each particle's box mass is coupled to the particle itself.
    let pts = sequence(64, 3);
    let c = ParticleCloud::new(pts.clone(), 1e-3, 0.0).unwrap();
    let lambda = choose_lambda(&c, LambdaPolicy::CubeRoot).unwrap().lambda;
    let q = 4;
    let half = lambda / 3.0;
    let mut atoms = Vec::new();
    for p in &pts {
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    let z = (Vec3::new(i as f64, j as f64, k as f64).add_scalar(0.5) * (2.0 / q as f64)).add_scalar(-1.0);
                    atoms.push(p + z * half);
                }
            }
        }
    }
    let smoothed = DiscreteMeasure::empirical(&atoms).unwrap();
    let empirical = DiscreteMeasure::empirical(&pts).unwrap();
    let (d, _) = w1_exact(&empirical, &smoothed).unwrap();
    assert!(d <= lambda, "{d} > {lambda}");
    assert!(smoothed_density_eval(&c, lambda, &pts[0]).unwrap() > 0.0);
}
