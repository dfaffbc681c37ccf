//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when any
//! criterion fails.
//!
//! Reference values are computed here, independently of the code under
//! test where possible: a fixed-step RK4 integrator written against the
//! Hamiltonian and jump operators, closed-form overlap laws, and direct
//! matrix checks of the spectral basis.

use std::time::Instant;

use mpemba_cli::commands::{reproduce, Bundle, Figure};
use mpemba_cli::config::ExperimentConfig;
use mpemba_core::dynamics::{evolve_integrator, SpectralPropagator, TimeGrid};
use mpemba_core::linalg::hermitian_eig;
use mpemba_core::mpemba::optimal_unitary;
use mpemba_core::spectral::{analyze, SpectralDecomposition, SpectralTolerances};
use mpemba_core::spin::{
    adiabatic_coefficients, all_to_all_model, amplitude_damping_model, dicke_model, pure_density,
    random_pure_state, AllToAllParams, DecayNormalization, DickeParams,
};
use mpemba_core::superop::{build_adjoint_liouvillian, build_liouvillian, LindbladModel};
use mpemba_core::{ComplexMatrix, C64};

const RATE_BAND: (f64, f64) = (0.95, 1.05);
const ORACLE_TOL: f64 = 1e-6;
const ORTHOGONALITY_TOL: f64 = 1e-9;
const UNITARITY_TOL: f64 = 1e-10;
const LAW_TOL: f64 = 1e-10;
const BIORTHONORMALITY_TOL: f64 = 1e-8;
const POSITIVITY_TOL: f64 = -1e-10;
/// Relative tolerance of the exact structural identities (trace and
/// hermiticity preservation, duality).
const STRUCTURE_TOL: f64 = 1e-10;
/// A computed eigenvalue carries an error of order `ε κ_k ||L||_F`, with
/// `κ_k = ||ℓ_k|| ||r_k|| / |Tr(ℓ_k r_k)|`. Conjugate partners must agree to
/// `CONJUGATE_TOL · max|λ|` or to `CONJUGATE_CONDITION_FACTOR` times that
/// error scale, whichever is larger.
const CONJUGATE_TOL: f64 = 1e-8;
const CONJUGATE_CONDITION_FACTOR: f64 = 16.0;
const RUNTIME_BUDGET_SECONDS: f64 = 600.0;
const RANDOM_STATES: u64 = 100;
const ORACLE_STEP: f64 = 1e-3;

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, criterion: u32, passed: bool, detail: String) {
        println!("criterion {criterion}: {} {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failed.push(criterion);
        }
    }
}

fn within((lo, hi): (f64, f64), x: f64) -> bool {
    x >= lo && x <= hi
}

fn fig3_model(n: usize) -> LindbladModel {
    let p = AllToAllParams {
        decay: DecayNormalization::PerSpin,
        ..AllToAllParams::default()
    };
    all_to_all_model(&p, n).unwrap()
}

fn decompose(model: &LindbladModel) -> SpectralDecomposition {
    analyze(&build_liouvillian(model), &SpectralTolerances::default()).unwrap()
}

/// `-i[H, ρ] + Σ (L ρ L† - ½{L†L, ρ})`, straight from the operators.
fn lindblad_rhs(model: &LindbladModel, rho: &ComplexMatrix) -> ComplexMatrix {
    let h = model.hamiltonian();
    let minus_i = C64::new(0.0, -1.0);
    let comm = &(h * rho) - &(rho * h);
    let mut out = comm.scale(minus_i);
    for l in model.jumps() {
        let ld = l.adjoint();
        let ldl = &ld * l;
        let anti = &(&ldl * rho) + &(rho * &ldl);
        out = &(&out + &(&(l * rho) * &ld)) - &anti.scale_real(0.5);
    }
    out
}

/// Fixed-step classical RK4, sampled at `times` (which must be multiples of
/// the step).
fn rk4_oracle(model: &LindbladModel, rho0: &ComplexMatrix, times: &[f64]) -> Vec<ComplexMatrix> {
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let steps = ((target - t) / ORACLE_STEP).round() as usize;
        for _ in 0..steps {
            let h = ORACLE_STEP;
            let k1 = lindblad_rhs(model, &rho);
            let k2 = lindblad_rhs(model, &(&rho + &k1.scale_real(h / 2.0)));
            let k3 = lindblad_rhs(model, &(&rho + &k2.scale_real(h / 2.0)));
            let k4 = lindblad_rhs(model, &(&rho + &k3.scale_real(h)));
            let sum = &(&(&k1 + &k2.scale_real(2.0)) + &k3.scale_real(2.0)) + &k4;
            rho = &rho + &sum.scale_real(h / 6.0);
        }
        t = target;
        out.push(rho.clone());
    }
    out
}

fn oracle_times() -> Vec<f64> {
    (0..=20).map(|k| 0.5 * k as f64).collect()
}

/// Largest entry-wise deviation between spectral propagation and the RK4
/// oracle over `t ∈ [0, 10]`.
fn spectral_vs_oracle(model: &LindbladModel, rho0: &ComplexMatrix) -> f64 {
    let dec = decompose(model);
    let times = oracle_times();
    let prop = SpectralPropagator::new(&dec, rho0).unwrap();
    let reference = rk4_oracle(model, rho0, &times);
    times
        .iter()
        .zip(&reference)
        .map(|(&t, r)| prop.at(t).unwrap().max_abs_diff(r))
        .fold(0.0, f64::max)
}

/// The library integrator against the same oracle.
fn integrator_vs_oracle(model: &LindbladModel, rho0: &ComplexMatrix) -> f64 {
    let times = oracle_times();
    let grid = TimeGrid::new(times.clone(), mpemba_core::dynamics::Spacing::Linear).unwrap();
    let states = evolve_integrator(model, rho0, &grid).unwrap();
    let reference = rk4_oracle(model, rho0, &times);
    states
        .iter()
        .zip(&reference)
        .map(|(a, b)| a.max_abs_diff(b))
        .fold(0.0, f64::max)
}

fn criterion_1(report: &mut Report, fig2: &Bundle) {
    let dec = &fig2.prepared.decomposition;
    let unrotated = fig2.unrotated_fit.as_ref().map_or(f64::NAN, |f| f.rate / dec.slow_rate());
    let rotated = fig2.rotated_fit.as_ref().map_or(f64::NAN, |f| f.rate / dec.next_rate());
    let model = dicke_model(&DickeParams::default(), 8).unwrap();
    let psi = random_pure_state(8, 1).unwrap();
    let rho0 = pure_density(&psi);
    let dec8 = decompose(&model);
    let rot = optimal_unitary(&dec8, &psi).unwrap();
    let oracle = spectral_vs_oracle(&model, &rho0).max(spectral_vs_oracle(&model, &rot.rotate(&rho0).unwrap()));
    report.line(
        1,
        within(RATE_BAND, unrotated) && within(RATE_BAND, rotated) && oracle <= ORACLE_TOL,
        format!(
            "dicke N=40: fit/|l2| = {unrotated:.4}, fit/|Re l3| = {rotated:.4} (band {RATE_BAND:?}); \
             |l2| = {:.6e}, |Re l3| = {:.6e}; RK4 oracle at N=8 max dev {oracle:.2e} (<= {ORACLE_TOL:e})",
            dec.slow_rate(),
            dec.next_rate()
        ),
    );
}

fn criterion_2(report: &mut Report, fig3: &Bundle) {
    let dec = &fig3.prepared.decomposition;
    let (slow, fast) = (dec.slow_rate(), dec.next_rate());
    let ratio = fast / slow;
    let detail = match fig3.plateau {
        Some(p) => {
            // Recheck the plateau from the raw trajectories.
            let e = &fig3.unrotated.distances[p.start..=p.end];
            let max = e.iter().cloned().fold(f64::MIN, f64::max);
            let min = e.iter().cloned().fold(f64::MAX, f64::min);
            let variation = (max - min) / max;
            let span_ok = p.t_end - p.t_start >= 1.0 / fast;
            let contrast = fig3.unrotated.distances[p.end] / fig3.rotated.distances[p.end];
            let ok = ratio > 1.0 && variation < 0.1 && span_ok && contrast >= 10.0;
            (
                ok,
                format!(
                    "all-to-all N=40: |Re l3|/|Re l2| = {ratio:.3}; plateau t in [{:.2}, {:.2}] (span >= {:.2}), \
                     variation {:.3}, E_unrot/E_rot at end = {contrast:.3e}",
                    p.t_start,
                    p.t_end,
                    1.0 / fast,
                    variation
                ),
            )
        }
        None => (false, format!("all-to-all N=40: ratio {ratio:.3}, no plateau found")),
    };
    report.line(2, detail.0, detail.1);
}

fn slow_overlap(ell: &ComplexMatrix, rho: &ComplexMatrix) -> f64 {
    (ell * rho).trace().unwrap().norm()
}

fn criterion_3(report: &mut Report, bundles: &[&Bundle]) {
    let mut worst_overlap = 0.0_f64;
    let mut worst_unitarity = 0.0_f64;
    let mut failures = 0;
    for b in bundles {
        let dec = &b.prepared.decomposition;
        let n = b.prepared.config.n;
        let ell = dec.left_mode(1);
        let scale = ell.max_abs();
        for seed in 1..=RANDOM_STATES {
            let psi = random_pure_state(n, seed).unwrap();
            let rot = match optimal_unitary(dec, &psi) {
                Ok(r) => r,
                Err(_) => {
                    failures += 1;
                    continue;
                }
            };
            let u = &rot.u;
            let rho = pure_density(&psi);
            let rotated = &(u * &rho) * &u.adjoint();
            worst_overlap = worst_overlap.max(slow_overlap(&ell, &rotated) / scale);
            let gram = &u.adjoint() * u;
            worst_unitarity = worst_unitarity.max(gram.max_abs_diff(&ComplexMatrix::identity(n + 1)));
        }
    }
    report.line(
        3,
        failures == 0 && worst_overlap <= ORTHOGONALITY_TOL && worst_unitarity <= UNITARITY_TOL,
        format!(
            "{RANDOM_STATES} states x 2 models at N=40: max |Tr(l2 U rho U+)|/max|l2| = {worst_overlap:.2e} \
             (<= {ORTHOGONALITY_TOL:e}), max |U+U - 1| = {worst_unitarity:.2e} (<= {UNITARITY_TOL:e}), \
             construction failures {failures}"
        ),
    );
}

fn criterion_4(report: &mut Report, bundles: &[&Bundle]) {
    let mut law = 0.0_f64;
    let mut endpoints = 0.0_f64;
    let mut zero = 0.0_f64;
    let mut eigen = 0.0_f64;
    let mut signs = true;
    for b in bundles {
        let scan = &b.scan;
        let (a1, an) = (scan.alpha_1, scan.alpha_n);
        for p in &scan.points {
            let (c, s) = (p.s.cos(), p.s.sin());
            law = law.max((p.overlap - (a1 * c * c + an * s * s)).abs());
        }
        let first = scan.points.first().unwrap();
        let last = scan.points.last().unwrap();
        assert_eq!(first.s, 0.0);
        assert_eq!(last.s, std::f64::consts::FRAC_PI_2);
        endpoints = endpoints.max((first.overlap - a1).abs()).max((last.overlap - an).abs());
        let s_bar = (a1 / an).abs().sqrt().atan();
        let (c, s) = (s_bar.cos(), s_bar.sin());
        zero = zero.max((a1 * c * c + an * s * s).abs()).max(scan.residual);
        zero = zero.max((s_bar - scan.s_bar).abs());
        signs &= a1 * an < 0.0;
        // Both endpoint values must be eigenvalues of the slow left mode.
        let spectrum = hermitian_eig(&b.prepared.decomposition.left_mode(1)).unwrap();
        for a in [a1, an] {
            let d = spectrum.eigenvalues.iter().map(|v| (v - a).abs()).fold(f64::MAX, f64::min);
            eigen = eigen.max(d);
        }
    }
    report.line(
        4,
        law <= LAW_TOL && endpoints <= LAW_TOL && zero <= LAW_TOL && eigen <= LAW_TOL && signs,
        format!(
            "both models N=40: max |scan - (a1 cos^2 + an sin^2)| = {law:.2e}, endpoint dev {endpoints:.2e}, \
             zero at arctan sqrt|a1/an| dev {zero:.2e}, endpoints as eigenvalues dev {eigen:.2e}, \
             opposite signs {signs} (tol {LAW_TOL:e})"
        ),
    );
}

fn criterion_5(report: &mut Report) {
    let mut worst = 0.0_f64;
    let mut worst_integrator = 0.0_f64;
    for n in [2, 4, 8] {
        let psi = random_pure_state(n, 1).unwrap();
        let rho0 = pure_density(&psi);
        let models = [
            dicke_model(&DickeParams::default(), n).unwrap(),
            all_to_all_model(&AllToAllParams::default(), n).unwrap(),
            fig3_model(n),
        ];
        for model in &models {
            worst = worst.max(spectral_vs_oracle(model, &rho0));
            worst_integrator = worst_integrator.max(integrator_vs_oracle(model, &rho0));
        }
    }
    let kappa = 1.0;
    let model = amplitude_damping_model(kappa).unwrap();
    let excited = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
    let dec = decompose(&model);
    let prop = SpectralPropagator::new(&dec, &excited).unwrap();
    let times = oracle_times();
    let integrated = rk4_oracle(&model, &excited, &times);
    let mut damping = 0.0_f64;
    for (&t, rk) in times.iter().zip(&integrated) {
        let p = (-kappa * t).exp();
        damping = damping.max((prop.at(t).unwrap()[(1, 1)].re - p).abs());
        damping = damping.max((rk[(1, 1)].re - p).abs());
    }
    report.line(
        5,
        worst <= ORACLE_TOL && worst_integrator <= ORACLE_TOL && damping <= ORACLE_TOL,
        format!(
            "N in {{2,4,8}}, dicke + all-to-all (both normalizations), t in [0,10]: spectral vs RK4 oracle {worst:.2e}, \
             library integrator vs oracle {worst_integrator:.2e}; amplitude damping vs exp(-kt) {damping:.2e} \
             (<= {ORACLE_TOL:e})"
        ),
    );
}

/// Deterministic test matrix with entries of order one.
fn probe_matrix(d: usize, phase: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| {
        let x = 1.3 * i as f64 + 0.7 * j as f64 + phase;
        C64::new(x.sin(), (1.1 * x + 0.4).cos())
    })
}

#[derive(Default)]
struct Structure {
    trace: f64,
    hermiticity: f64,
    duality: f64,
    biorthonormality: f64,
    min_eigenvalue: f64,
    /// `max_k min_j |λ_j - conj λ_k| / max|λ|`.
    conjugate: f64,
    /// The same distance over its condition-aware bound; closed when `<= 1`.
    conjugate_over_bound: f64,
}

impl Structure {
    fn passed(&self) -> bool {
        self.trace <= STRUCTURE_TOL
            && self.hermiticity <= STRUCTURE_TOL
            && self.duality <= STRUCTURE_TOL
            && self.biorthonormality <= BIORTHONORMALITY_TOL
            && self.min_eigenvalue >= POSITIVITY_TOL
            && self.conjugate_over_bound <= 1.0
    }
}

fn structure(model: &LindbladModel, dec: &SpectralDecomposition) -> Structure {
    let l = build_liouvillian(model);
    let m = l.matrix();
    let d = model.dim();
    let scale = m.max_abs();

    // vec(1)ᵀ L = 0: every column's diagonal-block entries sum to zero.
    let mut trace = 0.0_f64;
    for col in 0..m.ncols() {
        let s: C64 = (0..d).map(|i| m[(i + i * d, col)]).sum();
        trace = trace.max(s.norm());
    }

    let x = probe_matrix(d, 0.3);
    let herm = &x + &x.adjoint();
    let lx = l.apply(&herm).unwrap();
    let hermiticity = lx.max_abs_diff(&lx.adjoint());

    let a = probe_matrix(d, 1.9);
    let b = probe_matrix(d, -0.8);
    let adj = build_adjoint_liouvillian(model);
    let lhs = (&a * &l.apply(&b).unwrap()).trace().unwrap();
    let rhs = (&adj.apply(&a).unwrap() * &b).trace().unwrap();
    let duality = (lhs - rhs).norm() / (a.frobenius_norm() * b.frobenius_norm());

    let gram = &dec.left_transposed_matrix().transpose() * dec.right_matrix();
    let biorthonormality = gram.max_abs_diff(&ComplexMatrix::identity(gram.nrows()));

    let min_eigenvalue = hermitian_eig(dec.stationary_state()).unwrap().eigenvalues[0];

    let lambdas = dec.eigenvalues();
    let lmax = lambdas.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let kappa: Vec<f64> = (0..lambdas.len())
        .map(|k| {
            let l = dec.left_transposed_matrix().column(k);
            let r = dec.right_matrix().column(k);
            norm(l) * norm(r) / gram[(k, k)].norm()
        })
        .collect();
    let l_norm = m.frobenius_norm();
    let mut conjugate = 0.0_f64;
    let mut conjugate_over_bound = 0.0_f64;
    for (k, z) in lambdas.iter().enumerate() {
        let (j, dist) = lambdas
            .iter()
            .enumerate()
            .map(|(j, w)| (j, (w - z.conj()).norm()))
            .fold((0, f64::MAX), |a, b| if b.1 < a.1 { b } else { a });
        let bound = (CONJUGATE_TOL * lmax)
            .max(CONJUGATE_CONDITION_FACTOR * f64::EPSILON * kappa[k].max(kappa[j]) * l_norm);
        conjugate = conjugate.max(dist / lmax);
        conjugate_over_bound = conjugate_over_bound.max(dist / bound);
    }

    Structure {
        trace: trace / scale,
        hermiticity: hermiticity / scale,
        duality: duality / scale,
        biorthonormality,
        min_eigenvalue,
        conjugate,
        conjugate_over_bound,
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn criterion_6(report: &mut Report, fig2: &Bundle, fig3: &Bundle) {
    let mut all = true;
    let mut rows = Vec::new();
    for n in [4, 8, 20, 40] {
        for (name, model, dec) in [
            ("dicke", &fig2.prepared.model, &fig2.prepared.decomposition),
            ("all-to-all", &fig3.prepared.model, &fig3.prepared.decomposition),
        ] {
            let s = if n == 40 {
                structure(model, dec)
            } else {
                let model = if name == "dicke" {
                    dicke_model(&DickeParams::default(), n).unwrap()
                } else {
                    fig3_model(n)
                };
                let dec = decompose(&model);
                structure(&model, &dec)
            };
            all &= s.passed();
            rows.push(format!(
                "{name} N={n}: {} trace {:.1e} herm {:.1e} dual {:.1e} biorth {:.1e} min-eig {:.1e} conj {:.1e} ({:.2} of bound)",
                if s.passed() { "ok" } else { "FAILED" },
                s.trace,
                s.hermiticity,
                s.duality,
                s.biorthonormality,
                s.min_eigenvalue,
                s.conjugate,
                s.conjugate_over_bound
            ));
        }
    }
    report.line(
        6,
        all,
        format!(
            "bounds: structure {STRUCTURE_TOL:e}, biorth {BIORTHONORMALITY_TOL:e}, min-eig >= {POSITIVITY_TOL:e}, \
             conj max({CONJUGATE_TOL:e} max|l|, {CONJUGATE_CONDITION_FACTOR} eps kappa ||L||_F)\n    {}",
            rows.join("\n    ")
        ),
    );
}

fn criterion_7(report: &mut Report) {
    let c = adiabatic_coefficients(&DickeParams::default()).unwrap();
    let prefactor = 2.0 / 5.0_f64.sqrt();
    let dev = (c.chi - 0.8).abs().max((c.gamma_prefactor - prefactor).abs());
    report.line(
        7,
        dev <= 1e-15,
        format!("chi = {}, prefactor = {} (2/sqrt 5 = {prefactor}), dev {dev:.1e}", c.chi, c.gamma_prefactor),
    );
}

fn main() {
    let out = tempfile::tempdir().unwrap();
    let mut report = Report { failed: Vec::new() };
    let started = Instant::now();
    let fig2 = reproduce(Figure::Fig2, &ExperimentConfig::fig2(), &out.path().join("fig2")).unwrap();
    let fig3 = reproduce(Figure::Fig3, &ExperimentConfig::fig3(), &out.path().join("fig3")).unwrap();
    let bundle_seconds = started.elapsed().as_secs_f64();

    criterion_1(&mut report, &fig2);
    criterion_2(&mut report, &fig3);
    criterion_3(&mut report, &[&fig2, &fig3]);
    criterion_4(&mut report, &[&fig2, &fig3]);
    criterion_5(&mut report);
    criterion_6(&mut report, &fig2, &fig3);
    criterion_7(&mut report);
    report.line(
        8,
        bundle_seconds < RUNTIME_BUDGET_SECONDS,
        format!(
            "fig2 + fig3 bundles: {bundle_seconds:.1} s (fig2 {:.1} s, fig3 {:.1} s; budget {RUNTIME_BUDGET_SECONDS} s)",
            fig2.seconds, fig3.seconds
        ),
    );

    if report.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {:?}", report.failed);
        std::process::exit(1);
    }
}
