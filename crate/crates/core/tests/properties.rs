use proptest::prelude::*;

use sediment::cloud::{concentration_l, concentration_m, min_distance, min_distance_bruteforce, ParticleCloud};
use sediment::kernels::{rotlet_eval, stokeslet_eval, strainlet_eval};
use sediment::meanfield::{advance, field_velocity, init_blobs, BlobDensity, MeanfieldParams, Rho0Spec};
use sediment::ot::{w1_bruteforce, w1_exact, winf_bruteforce, winf_exact, DiscreteMeasure};
use sediment::reflections::{first_order_velocities, neumann_velocity_solve, GravitySettings, NeumannOptions};
use sediment::{Mat3, Vec3};

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-scale..scale).prop_map(|a| Vec3::new(a[0], a[1], a[2]))
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("non-degenerate", |v| v.norm() > 1e-3).prop_map(|v| v.normalize())
}

fn points(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(vec3(1.0), n)
}

fn trace_free() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-1.0..1.0f64).prop_map(|a| {
        let m = Mat3::from_row_slice(&a);
        let s = (m + m.transpose()) * 0.5;
        s - Mat3::identity() * (s.trace() / 3.0)
    })
}

fn separated(pts: Vec<Vec3>, gap: f64) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = Vec::new();
    for p in pts {
        if out.iter().all(|q| (p - q).norm() > gap) {
            out.push(p);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn surface_data_is_rigid(a in vec3(2.0), n in unit(), v in vec3(1.0), w in vec3(1.0), e in trace_free(), r in 0.05..2.0f64) {
        let x = a + n * r;
        let s = stokeslet_eval(&a, r, &v, &x).unwrap();
        prop_assert!((s.velocity - v).norm() <= 1e-12 * (1.0 + v.norm()));
        let t = rotlet_eval(&a, r, &w, &x).unwrap();
        prop_assert!((t.velocity - w.cross(&(x - a))).norm() <= 1e-12 * (1.0 + w.norm() * r));
        let q = strainlet_eval(&a, r, &e, &x).unwrap();
        prop_assert!((q.velocity - e * (x - a)).norm() <= 1e-12 * (1.0 + e.norm() * r));
    }

    #[test]
    fn stokeslet_is_linear(a in vec3(1.0), v1 in vec3(1.0), v2 in vec3(1.0), x in vec3(5.0), c in -3.0..3.0f64) {
        prop_assume!((x - a).norm() > 0.5);
        let f = |v: &Vec3| stokeslet_eval(&a, 0.3, v, &x).unwrap().velocity;
        let lhs = f(&(v1 * c + v2));
        let rhs = f(&v1) * c + f(&v2);
        prop_assert!((lhs - rhs).norm() <= 1e-13 * (1.0 + lhs.norm()));
    }

    #[test]
    fn grid_and_brute_min_distance_agree(pts in points(2..=80)) {
        let c = ParticleCloud::new(pts, 1e-3, 0.0).unwrap();
        let a = min_distance(&c).unwrap();
        let b = min_distance_bruteforce(&c).unwrap();
        prop_assert_eq!(a.distance, b.distance);
    }

    #[test]
    fn concentration_sandwich(pts in points(2..=60), lambda in 0.05..0.6f64) {
        let c = ParticleCloud::new(pts, 1e-3, 0.0).unwrap();
        let m = concentration_m(&c, lambda, true).unwrap();
        let l = concentration_l(&c, lambda);
        let exact = m.exact.unwrap();
        prop_assert!(l <= exact && exact <= 8 * l);
    }

    #[test]
    fn first_order_is_permutation_equivariant(pts in points(2..=20), shift in 0usize..20) {
        let pts = separated(pts, 0.1);
        prop_assume!(pts.len() >= 2);
        let n = pts.len();
        let g = GravitySettings::downward();
        let c = ParticleCloud::new(pts.clone(), 0.02 * n as f64, 0.0).unwrap();
        let rotated: Vec<Vec3> = (0..n).map(|i| pts[(i + shift) % n]).collect();
        let c2 = ParticleCloud::new(rotated, 0.02 * n as f64, 0.0).unwrap();
        let a = first_order_velocities(&c, &g).unwrap();
        let b = first_order_velocities(&c2, &g).unwrap();
        for i in 0..n {
            prop_assert!((a.velocities[(i + shift) % n] - b.velocities[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn reflections_are_linear_in_gravity(pts in points(2..=12), s in 0.1..4.0f64) {
        let pts = separated(pts, 0.3);
        prop_assume!(pts.len() >= 2);
        let n = pts.len() as f64;
        let c = ParticleCloud::new(pts, 0.01 * n, 0.0).unwrap();
        let g = GravitySettings::downward();
        let (a, _) = neumann_velocity_solve(&c, &g, &NeumannOptions::default()).unwrap();
        let (b, _) = neumann_velocity_solve(&c, &g.scaled(s), &NeumannOptions::default()).unwrap();
        for (x, y) in a.velocities.iter().zip(&b.velocities) {
            prop_assert!((x * s - y).norm() <= 1e-12 * s);
        }
    }

    #[test]
    fn w1_metric_axioms(a in points(1..=6), b in points(1..=6), c in points(1..=6)) {
        let (a, b, c) = (
            DiscreteMeasure::empirical(&a).unwrap(),
            DiscreteMeasure::empirical(&b).unwrap(),
            DiscreteMeasure::empirical(&c).unwrap(),
        );
        let ab = w1_exact(&a, &b).unwrap().0;
        let ba = w1_exact(&b, &a).unwrap().0;
        let bc = w1_exact(&b, &c).unwrap().0;
        let ac = w1_exact(&a, &c).unwrap().0;
        prop_assert!(w1_exact(&a, &a).unwrap().0 <= 1e-12);
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn w1_matches_permutations(n in 1usize..=7, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut pts = || -> Vec<Vec3> { (0..n).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect() };
        let a = DiscreteMeasure::empirical(&pts()).unwrap();
        let b = DiscreteMeasure::empirical(&pts()).unwrap();
        let exact = w1_exact(&a, &b).unwrap().0;
        prop_assert!((exact - w1_bruteforce(&a, &b).unwrap()).abs() <= 1e-9);
        let winf = winf_exact(&a, &b).unwrap().0;
        prop_assert!(winf >= exact - 1e-12);
        if n <= 6 {
            prop_assert_eq!(winf, winf_bruteforce(&a, &b).unwrap());
        }
    }

    #[test]
    fn plan_marginals(a in points(1..=30), b in points(1..=30), wa in prop::collection::vec(0.05..1.0f64, 30), wb in prop::collection::vec(0.05..1.0f64, 30)) {
        let mu = DiscreteMeasure::normalized(a.clone(), wa[..a.len()].to_vec()).unwrap();
        let nu = DiscreteMeasure::normalized(b.clone(), wb[..b.len()].to_vec()).unwrap();
        let (d, plan) = w1_exact(&mu, &nu).unwrap();
        prop_assert!(plan.source_residual <= 1e-10 && plan.target_residual <= 1e-10);
        prop_assert!(plan.entries.iter().all(|e| e.2 >= 0.0));
        prop_assert_eq!(d, plan.cost);
    }

    #[test]
    fn blob_field_is_linear(ys in points(1..=10), ws in prop::collection::vec(0.0..1.0f64, 10), x in vec3(2.0), s in 0.1..3.0f64) {
        let n = ys.len();
        let d = BlobDensity::new(ys.clone(), ws[..n].to_vec(), 0.2, 0.0).unwrap();
        let p = MeanfieldParams::new(0.7, GravitySettings::downward()).unwrap();
        let u = field_velocity(&d, &p, &x);
        let ps = MeanfieldParams::new(0.7, GravitySettings::downward().scaled(s)).unwrap();
        prop_assert!((field_velocity(&d, &ps, &x) - u * s).norm() <= 1e-12 * (1.0 + u.norm() * s));
        let d2 = BlobDensity::new(ys, ws[..n].iter().map(|w| w * s).collect(), 0.2, 0.0).unwrap();
        prop_assert!((field_velocity(&d2, &p, &x) - u * s).norm() <= 1e-12 * (1.0 + u.norm() * s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn blob_transport_conserves_mass_and_translates_without_coupling(c in vec3(1.0), a in 0.5..2.0f64, dt in 0.01..0.5f64) {
        let spec = Rho0Spec::Bump { center: c, radius: a };
        let d = init_blobs(&spec, 10, 0.4 * a).unwrap();
        let p0 = MeanfieldParams::new(0.0, GravitySettings::downward()).unwrap();
        let moved = advance(&d, &p0, dt).unwrap();
        for (x, y) in d.centers().iter().zip(moved.centers()) {
            prop_assert!((y - x - Vec3::new(0.0, 0.0, -dt)).norm() <= 1e-14 * (1.0 + x.norm()));
        }
        let p1 = MeanfieldParams::new(1.0, GravitySettings::downward()).unwrap();
        let coupled = advance(&d, &p1, dt).unwrap();
        prop_assert_eq!(coupled.weights(), d.weights());
        prop_assert_eq!(coupled.mass(), d.mass());
    }
}
