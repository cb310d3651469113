use std::f64::consts::PI;

use linestat::fp_kernel::{
    default_pad, probabilistic_kernel, relative_l2_normalized, sample_resolvent_montecarlo, solve_resolvent_fourier,
    symmetrize, FPParams, FourierOptions, GammaConvention, MonteCarloOptions, ResolventVolume, SymmetricKernel,
};

fn fraction(r: &ResolventVolume, pred: impl Fn(i64, i64) -> bool) -> f64 {
    let d = r.d() as i64;
    let (mut hit, mut total) = (0.0, 0.0);
    for j in 0..r.n_theta() {
        for y in -d..=d {
            for x in -d..=d {
                let v = r.get(j, x, y);
                total += v;
                if pred(x, y) {
                    hit += v;
                }
            }
        }
    }
    hit / total
}

fn spread(r: &ResolventVolume) -> f64 {
    let d = r.d() as i64;
    let (mut m2, mut total) = (0.0, 0.0);
    for j in 0..r.n_theta() {
        for y in -d..=d {
            for x in -d..=d {
                let v = r.get(j, x, y);
                m2 += v * (x * x + y * y) as f64;
                total += v;
            }
        }
    }
    m2 / total
}

fn mean_x(r: &ResolventVolume) -> f64 {
    let d = r.d() as i64;
    let (mut mx, mut total) = (0.0, 0.0);
    for j in 0..r.n_theta() {
        for y in -d..=d {
            for x in -d..=d {
                let v = r.get(j, x, y);
                mx += v * x as f64;
                total += v;
            }
        }
    }
    mx / total
}

fn short_lived() -> FPParams {
    FPParams::new(0.05, 0.0017).unwrap().with_blur(1.0).unwrap()
}

#[test]
fn short_lifetime_box_holds_unit_mass() {
    let r = solve_resolvent_fourier(&short_lived(), 150, &FourierOptions { n_theta: 64, pad: 150 }).unwrap();
    assert!((r.mass() - 1.0).abs() < 0.01, "mass {}", r.mass());
}

#[test]
fn short_lifetime_radius_matches_sampler() {
    let p = short_lived();
    let f = solve_resolvent_fourier(&p, 150, &FourierOptions { n_theta: 64, pad: 150 }).unwrap();
    let m = sample_resolvent_montecarlo(
        &p,
        150,
        &MonteCarloOptions {
            n_theta: 64,
            n_samples: 200_000,
            seed: 3,
            dt: 0.5,
        },
    )
    .unwrap();
    let inside = |x: i64, y: i64| x * x + y * y <= 3600;
    let (ff, fm) = (fraction(&f, inside), fraction(&m, inside));
    // unit speed: the radius never exceeds the lifetime
    let bound = 1.0 - (-3.0f64).exp();
    assert!(ff >= bound - 0.002, "spectral {ff} < {bound}");
    assert!((ff - fm).abs() < 0.01, "spectral {ff} vs sampled {fm}");
}

#[test]
fn near_deterministic_motion_stays_ahead() {
    let p = FPParams::new(0.0024, 1e-7).unwrap();
    let r = solve_resolvent_fourier(&p, 33, &FourierOptions { n_theta: 32, pad: 300 }).unwrap();
    let behind = fraction(&r, |x, _| x < 0);
    assert!(behind < 1e-3, "mass at x < 0: {behind}");
    let slice0: f64 = r.slice(0).iter().sum();
    let total: f64 = r.values().iter().sum();
    assert!(slice0 / total > 0.99);
}

#[test]
fn forward_kernel_is_mostly_ahead() {
    for d33 in [1e-3, 1e-4] {
        let p = FPParams::new(0.0024, d33).unwrap();
        let r = solve_resolvent_fourier(&p, 33, &FourierOptions { n_theta: 64, pad: 300 }).unwrap();
        let ahead = fraction(&r, |x, _| x >= 0);
        assert!(ahead >= 0.9, "D33 {d33}: {ahead}");
    }
}

#[test]
fn halving_alpha_widens_the_kernel() {
    let opts = FourierOptions { n_theta: 64, pad: 300 };
    let a = solve_resolvent_fourier(&FPParams::new(0.0024, 0.0017).unwrap(), 33, &opts).unwrap();
    let b = solve_resolvent_fourier(&FPParams::new(0.0012, 0.0017).unwrap(), 33, &opts).unwrap();
    assert!(spread(&b) > spread(&a), "{} <= {}", spread(&b), spread(&a));
}

#[test]
fn sampled_mean_displacement_matches_closed_form() {
    // E[x(T)] = ∫ e^{-αt} E[cos θ_t] dt = 1 / (α + D33)
    let alpha = 0.05;
    let mut means = Vec::new();
    for d33 in [1e-4, 1e-3, 5e-3] {
        let p = FPParams::new(alpha, d33).unwrap();
        let opts = MonteCarloOptions {
            n_theta: 8,
            n_samples: 100_000,
            seed: 11,
            dt: 0.5,
        };
        let r = sample_resolvent_montecarlo(&p, 250, &opts).unwrap();
        let mx = mean_x(&r);
        let want = 1.0 / (alpha + d33);
        assert!((mx - want).abs() < 0.35, "D33 {d33}: {mx} vs {want}");
        means.push(mx);
    }
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

#[test]
fn sampler_converges_to_spectral_solution() {
    let p = FPParams::new(0.05, 0.01).unwrap().with_blur(1.0).unwrap();
    let d = 20;
    let f = solve_resolvent_fourier(
        &p,
        d,
        &FourierOptions {
            n_theta: 128,
            pad: default_pad(p.alpha(), d),
        },
    )
    .unwrap()
    .theta_cell_average(64)
    .unwrap();
    let dist = |n| {
        let opts = MonteCarloOptions {
            n_theta: 64,
            n_samples: n,
            seed: 5,
            dt: 0.5,
        };
        relative_l2_normalized(&f, &sample_resolvent_montecarlo(&p, d, &opts).unwrap()).unwrap()
    };
    let (coarse, fine) = (dist(10_000), dist(1_000_000));
    assert!(coarse >= 2.0 * fine, "{coarse} vs {fine}");
    assert!(fine < 0.1, "{fine}");
}

#[test]
fn sampler_is_independent_of_thread_count() {
    let p = FPParams::new(0.01, 0.002).unwrap().with_blur(0.7).unwrap();
    let opts = MonteCarloOptions {
        n_theta: 32,
        n_samples: 40_000,
        seed: 99,
        dt: 0.5,
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_resolvent_montecarlo(&p, 12, &opts).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

fn reference_kernel_inputs() -> (FPParams, ResolventVolume) {
    let p = FPParams::new(0.0024, 0.0017).unwrap();
    let r = solve_resolvent_fourier(
        &p,
        34,
        &FourierOptions {
            n_theta: 64,
            pad: default_pad(p.alpha(), 34),
        },
    )
    .unwrap();
    (p, r)
}

#[test]
fn symmetrized_kernel_invariants() {
    let (p, r) = reference_kernel_inputs();
    let k = symmetrize(&r, 16, 33, GammaConvention::ReferenceFrame).unwrap();
    assert!(k.values().iter().all(|v| *v >= 0.0));
    assert!((k.l1_norm() - 1.0).abs() < 1e-9);

    // θ = 0 and θ = -π/2 map grid points to grid points under inversion
    let peak = k.values().iter().cloned().fold(0.0, f64::max);
    for y in -33..=33i64 {
        for x in -33..=33i64 {
            assert!((k.get(8, x, y) - k.get(8, -x, -y)).abs() <= 1e-12 * peak);
            // -R_{-π/2}^T (x, y) = (y, -x)
            assert!((k.get(0, x, y) - k.get_or_zero(0, y, -x)).abs() <= 1e-12 * peak);
        }
    }

    let xy = k.xy_marginal();
    let n = xy.len();
    for i in 0..n {
        assert!((xy[i] - xy[n - 1 - i]).abs() <= 1e-12 * peak);
    }

    let tm = k.theta_marginal();
    let argmax = (0..16).max_by(|&a, &b| tm[a].partial_cmp(&tm[b]).unwrap()).unwrap();
    assert_eq!(argmax, 8, "{tm:?}");

    let same = probabilistic_kernel(
        &p,
        33,
        16,
        &FourierOptions {
            n_theta: 64,
            pad: default_pad(p.alpha(), 34),
        },
        GammaConvention::ReferenceFrame,
    )
    .unwrap();
    assert_eq!(same, k);
}

#[test]
fn continuous_inversion_residual_is_negligible() {
    let (_, r) = reference_kernel_inputs();
    for convention in [GammaConvention::ReferenceFrame, GammaConvention::Printed] {
        let e = SymmetricKernel::new(&r, convention);
        let mut scale: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for j in (0..64i64).step_by(3) {
            let t = j as f64 * 2.0 * PI / 64.0;
            let (c, s) = (t.cos(), t.sin());
            for i in 0..40 {
                let (x, y) = (((i * 7) % 41) as f64 * 0.6 - 12.0, ((i * 13) % 37) as f64 * 0.55 - 10.0);
                let a = e.evaluate(x, y, j);
                let b = e.evaluate(-(c * x + s * y), -(-s * x + c * y), -j);
                scale = scale.max(a.abs());
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst <= 1e-6 * scale, "{convention:?}: {worst} vs {scale}");
    }
}
