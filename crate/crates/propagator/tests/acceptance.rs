//! End-to-end verification gate: every numerical claim the library makes,
//! checked at its stated tolerance. Each test prints one summary line so a
//! `--nocapture` run reads as a checklist.

mod common;

use common::extremal_action_linear;
use num_complex::Complex64;
use propagator::{
    build_grid, classical_action_free, classical_action_linear, convergence_study, delta_limit_check,
    evolve_wavefunction, fit_order_loglog, free_kernel, gaussian_closed_form, gaussian_packet,
    hamilton_jacobi_residual, hamilton_jacobi_residual_exact, linear_potential_kernel,
    momentum_kernel_integral, norm, packet_width, schrodinger_residual, semigroup_check_windowed,
    sliced_propagator, BoundaryData, GaussianForm, KernelSpec, LinearPotentialSpec,
    OscillatoryQuadratureConfig, PhysicsConfig, RealVector, SliceConfig, Wavefunction,
    brute_force_gaussian,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn rng(tag: u64) -> StdRng {
    StdRng::seed_from_u64(tag)
}

fn random_vector(r: &mut StdRng, dim: usize, half_width: f64) -> RealVector {
    let comps: Vec<f64> = (0..dim).map(|_| r.gen_range(-half_width..half_width)).collect();
    RealVector::new(&comps).unwrap()
}

/// Battery shared by the route-agreement and semigroup gates.
fn battery() -> Vec<BoundaryData> {
    let mut cases = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        for dx in [0.0, 1.0, 3.0] {
            cases.push(BoundaryData::new(RealVector::from(0.0), RealVector::from(dx), t).unwrap());
        }
    }
    cases
}

#[test]
fn free_action_solves_the_hamilton_jacobi_equation() {
    let mut r = rng(1);
    let mut worst_fd = 0.0f64;
    for k in 0..100 {
        let dim = 1 + k % 3;
        let cfg = PhysicsConfig::new(1.0, 1.0, dim).unwrap();
        let x0 = random_vector(&mut r, dim, 2.0);
        let x = random_vector(&mut r, dim, 2.0);
        let t = r.gen_range(0.8..2.0);
        let b = BoundaryData::new(x0.clone(), x, t).unwrap();
        let exact = hamilton_jacobi_residual_exact(&b, &cfg);
        assert_eq!(exact, 0.0, "exact-derivative residual must vanish identically");
        let action = |y: &RealVector, tt: f64| {
            classical_action_free(&BoundaryData::new(x0.clone(), y.clone(), tt).unwrap(), &cfg).value
        };
        let fd = hamilton_jacobi_residual(action, &b, &cfg, 1e-5).unwrap();
        assert!(fd < 1e-8, "finite-difference residual {fd:.3e} at case {k}");
        worst_fd = worst_fd.max(fd);
    }
    println!("PASS hamilton-jacobi: exact residual 0 at 100 points, fd residual <= {worst_fd:.3e}");
}

#[test]
fn free_kernel_solves_the_schrodinger_equation() {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let dim = 1 + k % 3;
        let cfg = PhysicsConfig::new(1.0, 1.0, dim).unwrap();
        let x0 = random_vector(&mut r, dim, 2.0);
        let point = random_vector(&mut r, dim, 2.0);
        let t = r.gen_range(0.8..2.0);
        let field = |y: &RealVector, tt: f64| {
            free_kernel(&BoundaryData::new(x0.clone(), y.clone(), tt).unwrap(), &cfg).value
        };
        let res = schrodinger_residual(field, &point, t, &cfg, 1e-4, 1e-4, None).unwrap();
        assert!(res.norm() < 1e-6, "residual {:.3e} at case {k}", res.norm());
        worst = worst.max(res.norm());
    }

    // Stencil refinement: the residual is finite-difference truncation, so it
    // must shrink at second order in the step.
    let cfg = PhysicsConfig::default();
    let x0 = RealVector::from(-0.3);
    let point = RealVector::from(0.7);
    let field = |y: &RealVector, tt: f64| {
        free_kernel(&BoundaryData::new(x0.clone(), y.clone(), tt).unwrap(), &cfg).value
    };
    let steps = [4e-3, 2e-3, 1e-3];
    let devs: Vec<f64> = steps
        .iter()
        .map(|&h| schrodinger_residual(field, &point, 1.3, &cfg, h, h, None).unwrap().norm())
        .collect();
    let order = fit_order_loglog(&steps, &devs).unwrap();
    assert!((order - 2.0).abs() <= 0.3, "stencil order {order}");

    // Negative control: a kernel with the wrong prefactor power must light up.
    let bad_field = |y: &RealVector, tt: f64| {
        let b = BoundaryData::new(x0.clone(), y.clone(), tt).unwrap();
        let s = classical_action_free(&b, &cfg).over_hbar(&cfg);
        Complex64::from_polar(1.0 / (2.0 * std::f64::consts::PI * tt), s - std::f64::consts::FRAC_PI_4)
    };
    let bad = schrodinger_residual(bad_field, &point, 1.3, &cfg, 1e-4, 1e-4, None).unwrap();
    assert!(bad.norm() > 1e-2, "negative control too quiet: {:.3e}", bad.norm());
    println!(
        "PASS schrodinger: residual <= {worst:.3e} at 20 points, stencil order {order:.3}, negative control {:.3e}",
        bad.norm()
    );
}

#[test]
fn closed_form_momentum_and_lattice_routes_agree() {
    let cfg = PhysicsConfig::default();
    let mut worst = 0.0f64;
    for b in battery() {
        let closed = free_kernel(&b, &cfg).value;
        let q = OscillatoryQuadratureConfig::for_boundary(&b, &cfg);
        let momentum = momentum_kernel_integral(&b, &q, &cfg).unwrap();
        let sc = SliceConfig::for_boundary(&b, &cfg, 2).unwrap();
        let lattice = sliced_propagator(&b, &sc, &KernelSpec::Free, &cfg).unwrap().value;
        let scale = closed.norm();
        for (name, dev) in [
            ("momentum vs closed", (momentum - closed).norm() / scale),
            ("lattice vs closed", (lattice - closed).norm() / scale),
            ("momentum vs lattice", (momentum - lattice).norm() / scale),
        ] {
            assert!(
                dev <= 1e-4,
                "{name} deviates {dev:.3e} at T = {}, dx = {}",
                b.t(),
                b.displacement()[0]
            );
            worst = worst.max(dev);
        }
    }
    println!("PASS three routes: worst pairwise relative deviation {worst:.3e} over 9 cases");
}

#[test]
fn short_time_evolution_approaches_the_identity() {
    let cfg = PhysicsConfig::default();
    // The shortest rung T = 0.05 needs h <= 2 pi hbar T / (m * packet support
    // width); sigma = 0.8 keeps the support at ~12 units, admitted by h = 0.02.
    let grid = build_grid(&RealVector::from(-10.0), 0.02, &[1001]).unwrap();
    let psi0 = gaussian_packet(&grid, &RealVector::from(0.0), 0.8, &RealVector::from(0.3), &cfg).unwrap();
    let report = delta_limit_check(&psi0, &KernelSpec::Free, &cfg, &[0.2, 0.1, 0.05]).unwrap();
    let order = report.fitted_order.unwrap();
    assert!(report.pass, "delta-limit report failed: {}", report.to_json());
    assert!(order >= 0.9, "vanishing order {order}");
    println!("PASS delta limit: deviation order {order:.3} >= 0.9 on ladder {{0.2, 0.1, 0.05}}");
}

#[test]
fn kernel_composition_obeys_the_semigroup_law() {
    let cfg = PhysicsConfig::default();
    let mut worst = 0.0f64;
    let mut worst_window = 0.0f64;
    for b in battery() {
        let t1 = 0.5 * b.t();
        let t2 = b.t() - t1;
        // Stationary point of the composed phase, with margin in units of the
        // composed Gaussian width.
        let stat = b.x0()[0] + (t1 / b.t()) * b.displacement()[0];
        let sigma = (cfg.hbar() * t1 * t2 / (cfg.mass() * b.t())).sqrt();
        let span = 24.0 * sigma;
        let far_x = (stat - span - b.x()[0]).abs().max((stat + span - b.x()[0]).abs());
        let far_x0 = (stat - span - b.x0()[0]).abs().max((stat + span - b.x0()[0]).abs());
        let slope = (cfg.mass() / cfg.hbar()) * (far_x / t2 + far_x0 / t1);
        let h = (1.8 / slope).min(0.05);
        let count = (2.0 * span / h).ceil() as usize + 1;
        let grid = build_grid(&RealVector::from(stat - span), h, &[count]).unwrap();
        let narrow = semigroup_check_windowed(&b, t1, t2, &grid, &cfg, 0.2).unwrap();
        let wide = semigroup_check_windowed(&b, t1, t2, &grid, &cfg, 0.3).unwrap();
        assert!(narrow.pass, "semigroup failed: {}", narrow.to_json());
        let (r1, r2) = (narrow.max_residual(), wide.max_residual());
        assert!(r1 < 1e-4, "composition residual {r1:.3e}");
        // Both windows land on the same value: their residuals bound the
        // window-to-window difference.
        assert!(r1 + r2 < 1e-4, "window sensitivity {:.3e}", r1 + r2);
        worst = worst.max(r1);
        worst_window = worst_window.max(r1 + r2);
    }
    println!("PASS semigroup: worst residual {worst:.3e}, window sensitivity <= {worst_window:.3e}");
}

#[test]
fn spreading_inversion_recovers_the_kernel_constant() {
    for dim in 1..=3usize {
        let cfg = PhysicsConfig::new(1.0, 1.0, dim).unwrap();
        let report = propagator::ansatz_inversion_check(&cfg);
        assert!(report.pass, "inversion report failed: {}", report.to_json());
        let slope = report.fitted_order.unwrap();
        let slope_dev = report.residuals[1];
        let spread = report.residuals[3];
        assert!(
            (slope + 0.5 * dim as f64).abs() <= 1e-10,
            "D = {dim}: modulus power-law slope {slope} should be {}",
            -0.5 * dim as f64
        );
        assert!(slope_dev <= 1e-10, "D = {dim}: worst pairwise slope deviation {slope_dev:.3e}");
        assert!(spread < 1e-10, "D = {dim}: recovered constant spread {spread:.3e}");
        if dim == 3 {
            println!(
                "PASS ansatz inversion: D=3 slope {slope:.12} (target -1.5), constant spread {spread:.3e}"
            );
        }
    }
}

#[test]
fn gaussian_closed_form_matches_brute_force() {
    let mut r = rng(7);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let dim = 1 + k % 2;
        // Re(A) = G G^T + 0.7 I keeps the smallest eigenvalue >= 0.7 so the
        // brute-force window converges; Im(A) symmetric, source complex.
        let mut re = vec![0.0f64; dim * dim];
        let g: Vec<f64> = (0..dim * dim).map(|_| r.gen_range(-1.0..1.0)).collect();
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = if i == j { 0.7 } else { 0.0 };
                for l in 0..dim {
                    acc += g[i * dim + l] * g[j * dim + l];
                }
                re[i * dim + j] = acc;
            }
        }
        let mut a = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let im = r.gen_range(-0.5..0.5);
                a[i * dim + j] = Complex64::new(re[i * dim + j], im);
                a[j * dim + i] = a[i * dim + j];
            }
        }
        let b: Vec<Complex64> =
            (0..dim).map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
        let form = GaussianForm::new(dim, &a, &b).unwrap();
        let closed = gaussian_closed_form(&form).unwrap();
        let brute = brute_force_gaussian(&form, 12.0, 801).unwrap();
        let dev = (closed - brute).norm() / closed.norm();
        assert!(dev <= 1e-8, "form {k} (D = {dim}): deviation {dev:.3e}");
        worst = worst.max(dev);

        // Determinant branch: with no source, scaling A by 4 must scale the
        // integral by 2^-D (exponent -1/2, not +1/2).
        let zero_b = vec![Complex64::new(0.0, 0.0); dim];
        let base = gaussian_closed_form(&GaussianForm::new(dim, &a, &zero_b).unwrap()).unwrap();
        let scaled_a: Vec<Complex64> = a.iter().map(|z| 4.0 * z).collect();
        let scaled = gaussian_closed_form(&GaussianForm::new(dim, &scaled_a, &zero_b).unwrap()).unwrap();
        let ratio = scaled / base * 2.0f64.powi(dim as i32);
        assert!((ratio - Complex64::new(1.0, 0.0)).norm() <= 1e-12, "det exponent drift: {ratio}");
    }
    println!("PASS gaussian closed form: worst brute-force deviation {worst:.3e} over 20 forms, det exponent -1/2");
}

#[test]
fn linear_potential_kernel_reduces_solves_and_converges() {
    let cfg = PhysicsConfig::default();

    // Switched-off potential reproduces the free kernel bit for bit.
    let zero = LinearPotentialSpec::zero(1);
    for b in battery() {
        let free = free_kernel(&b, &cfg).value;
        let lin = linear_potential_kernel(&b, &zero, &cfg).unwrap().value;
        assert_eq!(lin.re.to_bits(), free.re.to_bits());
        assert_eq!(lin.im.to_bits(), free.im.to_bits());
    }

    // With the force on, the kernel still solves the Schrodinger equation.
    let spec = LinearPotentialSpec::new(0.3, RealVector::from(0.7));
    let x0 = RealVector::from(-0.4);
    let field = |y: &RealVector, tt: f64| {
        linear_potential_kernel(&BoundaryData::new(x0.clone(), y.clone(), tt).unwrap(), &spec, &cfg)
            .unwrap()
            .value
    };
    let mut worst = 0.0f64;
    for (px, t) in [(0.9, 1.0), (-0.6, 0.7), (1.7, 1.6)] {
        let res =
            schrodinger_residual(field, &RealVector::from(px), t, &cfg, 1e-4, 1e-4, Some((&spec, &x0)))
                .unwrap();
        assert!(res.norm() < 1e-6, "residual {:.3e} at x = {px}, t = {t}", res.norm());
        worst = worst.max(res.norm());
    }
    let steps = [4e-3, 2e-3, 1e-3];
    let devs: Vec<f64> = steps
        .iter()
        .map(|&h| {
            schrodinger_residual(field, &RealVector::from(0.9), 1.0, &cfg, h, h, Some((&spec, &x0)))
                .unwrap()
                .norm()
        })
        .collect();
    let stencil_order = fit_order_loglog(&steps, &devs).unwrap();
    assert!((stencil_order - 2.0).abs() <= 0.3, "stencil order {stencil_order}");

    // Slice composition converges at second order in the step.
    let b = BoundaryData::new(RealVector::from(0.0), RealVector::from(1.0), 1.0).unwrap();
    let study = convergence_study(&b, &[2, 4, 8, 16], &KernelSpec::LinearPotential(spec.clone()), &cfg)
        .unwrap();
    assert!(study.pass, "convergence study failed: {}", study.to_json());
    let order = study.fitted_order.unwrap();
    assert!((order - 2.0).abs() <= 0.3, "lattice order {order}");

    // The closed-form action agrees with a minimizer that never saw the formula.
    let mut r = rng(8);
    for _ in 0..6 {
        let dim = 1 + r.gen_range(0..2usize);
        let m = r.gen_range(0.5..2.0);
        let pcfg = PhysicsConfig::new(m, 1.0, dim).unwrap();
        let v = LinearPotentialSpec::new(r.gen_range(-1.0..1.0), random_vector(&mut r, dim, 1.0));
        let b = BoundaryData::new(
            random_vector(&mut r, dim, 2.0),
            random_vector(&mut r, dim, 2.0),
            r.gen_range(0.5..2.0),
        )
        .unwrap();
        let closed = classical_action_linear(&b, &v, &pcfg).unwrap().value;
        let oracle = extremal_action_linear(&b, &v, &pcfg);
        assert!(
            (closed - oracle).abs() <= 1e-9 * (1.0 + closed.abs()),
            "action {closed} vs extremal-path oracle {oracle}"
        );
    }
    println!(
        "PASS linear potential: bitwise free reduction, residual <= {worst:.3e}, stencil order {stencil_order:.3}, lattice order {order:.3}, action oracle agreement"
    );
}

#[test]
fn evolved_packet_spreads_preserves_norm_and_stays_linear() {
    let cfg = PhysicsConfig::default();
    let grid = build_grid(&RealVector::from(-12.0), 0.05, &[481]).unwrap();
    let center = RealVector::from(0.0);
    let psi0 = gaussian_packet(&grid, &center, 1.0, &RealVector::from(0.0), &cfg).unwrap();
    let out = evolve_wavefunction(&psi0, 2.0, &KernelSpec::Free, &cfg).unwrap();

    let width = packet_width(&out).unwrap();
    let expect = 2.0f64.sqrt();
    assert!((width - expect).abs() <= 1e-3, "width {width} vs {expect}");

    let ratio = norm(&out) / norm(&psi0);
    assert!((ratio - 1.0).abs() <= 1e-4, "norm ratio {ratio}");

    // Evolution is a fixed linear map: superpose first or last, same field.
    let psi_a = gaussian_packet(&grid, &RealVector::from(-1.0), 1.0, &RealVector::from(0.3), &cfg).unwrap();
    let psi_b = gaussian_packet(&grid, &RealVector::from(1.5), 0.8, &RealVector::from(-0.2), &cfg).unwrap();
    let (alpha, beta) = (Complex64::new(0.6, -0.2), Complex64::new(0.3, 0.7));
    let combo_values: Vec<Complex64> = psi_a
        .values()
        .iter()
        .zip(psi_b.values())
        .map(|(va, vb)| alpha * va + beta * vb)
        .collect();
    let combo = Wavefunction::from_values(grid.clone(), combo_values).unwrap();
    let lhs = evolve_wavefunction(&combo, 2.0, &KernelSpec::Free, &cfg).unwrap();
    let ea = evolve_wavefunction(&psi_a, 2.0, &KernelSpec::Free, &cfg).unwrap();
    let eb = evolve_wavefunction(&psi_b, 2.0, &KernelSpec::Free, &cfg).unwrap();
    let scale = lhs.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let worst_linearity = lhs
        .values()
        .iter()
        .zip(ea.values().iter().zip(eb.values()))
        .map(|(l, (a, b))| (l - (alpha * a + beta * b)).norm())
        .fold(0.0, f64::max);
    assert!(worst_linearity <= 1e-10 * scale, "linearity violation {worst_linearity:.3e}");
    println!(
        "PASS packet evolution: width {width:.6} (target {expect:.6}), norm ratio drift {:.3e}, linearity {:.3e}",
        (ratio - 1.0).abs(),
        worst_linearity / scale
    );
}
