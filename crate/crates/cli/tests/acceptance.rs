//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured residuals (visible with --nocapture).

use std::time::Instant;

use instrument_forge::dilation::{
    canonical_extension, choi_matrix, choi_rank, induced_instrument, minimal_stinespring,
    synthesize_measuring_process,
};
use instrument_forge::instrument::{dual_map_distance, joint_distribution, Posterior};
use instrument_forge::localnet::Region;
use instrument_forge::matrix::{cr, identity, matrix_unit, zeros, CMat};
use instrument_forge::sampling::{
    random_block_instrument, random_complex_matrix, random_instrument, random_state, rng,
};
use instrument_forge::{CPInstrument, FiniteVonNeumannAlgebra, LocalNet, OutcomeSpace};

fn verdict(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!(
        "[{}] criterion {id}: {name} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

#[test]
fn criterion_1_realization_round_trip() {
    let started = Instant::now();
    let mut r = rng(0xC1);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let d = 2 + trial % 3;
        let outcomes = 1 + trial % 3;
        let kraus = 1 + (trial / 3) % 2;
        let inst = random_instrument(&mut r, d, outcomes, kraus).unwrap();
        let process = synthesize_measuring_process(&inst).unwrap();
        let induced =
            induced_instrument(&process, &FiniteVonNeumannAlgebra::full(d)).unwrap();
        worst = worst.max(dual_map_distance(&induced, &inst).unwrap());
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = worst < 1e-9 && elapsed < 30.0;
    assert!(
        verdict(
            1,
            "realization round trip",
            pass,
            &format!("max dual-map residual {worst:.3e} over 50 instruments in {elapsed:.1} s"),
        ),
        "residual {worst:.3e}, elapsed {elapsed:.1} s"
    );
}

#[test]
fn criterion_2_subalgebra_extension_realization() {
    let mut r = rng(0xC2);
    let mut worst: f64 = 0.0;
    for trial in 0..25 {
        let (algebra, kraus_per) = if trial % 2 == 0 {
            (FiniteVonNeumannAlgebra::new(&[(2, 2)], None).unwrap(), 1)
        } else {
            (
                FiniteVonNeumannAlgebra::new(&[(1, 1), (2, 1)], None).unwrap(),
                2,
            )
        };
        let inst = random_block_instrument(&mut r, &algebra, 2, kraus_per).unwrap();
        let extension = canonical_extension(&inst).unwrap();
        let process = synthesize_measuring_process(&extension).unwrap();
        let induced = induced_instrument(&process, &algebra).unwrap();
        worst = worst.max(dual_map_distance(&induced, &inst).unwrap());
    }
    let pass = worst < 1e-9;
    assert!(
        verdict(
            2,
            "subalgebra canonical extension realizes the input",
            pass,
            &format!("max restricted dual-map residual {worst:.3e} over 25 instruments"),
        ),
        "residual {worst:.3e}"
    );
}

#[test]
fn criterion_3_measuring_process_axioms() {
    let mut r = rng(0xC3);
    let mut worst_membership: f64 = 0.0;
    let mut all_pure = true;

    // full-algebra processes
    for trial in 0..6 {
        let d = 2 + trial % 3;
        let inst = random_instrument(&mut r, d, 2, 2).unwrap();
        let algebra = inst.algebra().clone();
        let process = synthesize_measuring_process(&inst).unwrap();
        all_pure &= process.sigma().rank(1e-10) == 1;
        for (idx, _) in process.meter().iter().enumerate() {
            for e in algebra.basis_elements() {
                let image = process.dual_atom(&algebra.embed(&e), idx);
                let (_, res) = algebra.is_member(&image).unwrap();
                worst_membership = worst_membership.max(res);
            }
        }
    }

    // subalgebra processes, where the membership condition has content
    for trial in 0..6 {
        let algebra = if trial % 2 == 0 {
            FiniteVonNeumannAlgebra::new(&[(2, 2)], None).unwrap()
        } else {
            FiniteVonNeumannAlgebra::new(&[(1, 1), (2, 1)], None).unwrap()
        };
        let inst = random_block_instrument(&mut r, &algebra, 2, 1).unwrap();
        let extension = canonical_extension(&inst).unwrap();
        let process = synthesize_measuring_process(&extension).unwrap();
        all_pure &= process.sigma().rank(1e-10) == 1;
        for (idx, _) in process.meter().iter().enumerate() {
            for e in algebra.basis_elements() {
                let image = process.dual_atom(&algebra.embed(&e), idx);
                let (_, res) = algebra.is_member(&image).unwrap();
                worst_membership = worst_membership.max(res);
            }
        }
    }

    let pass = worst_membership < 1e-9 && all_pure;
    assert!(
        verdict(
            3,
            "measuring-process axioms",
            pass,
            &format!("max membership residual {worst_membership:.3e}, probes pure: {all_pure}"),
        ),
        "membership {worst_membership:.3e}, pure {all_pure}"
    );
}

#[test]
fn criterion_4_posterior_mixture_identity() {
    let mut r = rng(0xC4);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let d = 2 + trial % 3;
        let outcomes = 2 + trial % 2;
        let inst = random_instrument(&mut r, d, outcomes, 2).unwrap();
        let rho = random_state(&mut r, d);
        let family = inst.posterior_family(&rho).unwrap();

        // random outcome subset Δ
        let labels: Vec<&str> = inst
            .outcomes()
            .labels()
            .iter()
            .enumerate()
            .filter(|(i, _)| (trial >> i) % 2 == 0)
            .map(|(_, l)| l.as_str())
            .collect();

        let lhs = inst.apply_predual(&rho, &labels).unwrap();
        let mut rhs = zeros(d, d);
        for e in &family.entries {
            if !labels.contains(&e.label.as_str()) {
                continue;
            }
            if let Posterior::State(s) = &e.posterior {
                rhs += s.density() * cr(e.weight);
            }
        }
        worst = worst.max((lhs - rhs).norm());
    }
    let pass = worst < 1e-10;
    assert!(
        verdict(
            4,
            "posterior mixture identity",
            pass,
            &format!("max residual {worst:.3e} over 100 random (I, ρ, Δ)"),
        ),
        "residual {worst:.3e}"
    );
}

#[test]
fn criterion_5_joint_distribution_factorization() {
    let mut r = rng(0xC5);
    let mut worst: f64 = 0.0;
    let mut tested = 0usize;
    for trial in 0..25 {
        let d = 2 + trial % 3;
        let first = random_instrument(&mut r, d, 2, 2).unwrap();
        let second = random_instrument(&mut r, d, 3, 1).unwrap();
        let rho = random_state(&mut r, d);
        let joint = joint_distribution(&second, &first, &rho).unwrap();
        let family = first.posterior_family(&rho).unwrap();
        for (s, s_label) in joint.first_labels.iter().enumerate() {
            let entry = family
                .entries
                .iter()
                .find(|e| &e.label == s_label)
                .unwrap();
            if entry.weight <= 1e-8 {
                continue;
            }
            let posterior = match &entry.posterior {
                Posterior::State(state) => state.clone(),
                Posterior::Indefinite => continue,
            };
            for (t, t_label) in joint.second_labels.iter().enumerate() {
                let conditional = second
                    .outcome_probability(&posterior, &[t_label.as_str()])
                    .unwrap();
                worst = worst.max((joint.prob[t][s] - conditional * entry.weight).abs());
                tested += 1;
            }
        }
    }
    let pass = worst < 1e-10 && tested > 0;
    assert!(
        verdict(
            5,
            "joint-distribution factorization",
            pass,
            &format!("max |Pr(t,s) − Pr(t|ρ_s)p(s)| = {worst:.3e} over {tested} entries"),
        ),
        "residual {worst:.3e}"
    );
}

#[test]
fn criterion_6_repeatability_suite() {
    // Lüders instruments: projective on C² and with a degenerate projector on C³
    let lueders2 = CPInstrument::new(
        FiniteVonNeumannAlgebra::full(2),
        OutcomeSpace::new(vec!["0", "1"]).unwrap(),
        vec![vec![matrix_unit(2, 0, 0)], vec![matrix_unit(2, 1, 1)]],
    )
    .unwrap();
    let mut p01 = zeros(3, 3);
    p01[(0, 0)] = cr(1.0);
    p01[(1, 1)] = cr(1.0);
    let lueders3 = CPInstrument::new(
        FiniteVonNeumannAlgebra::full(3),
        OutcomeSpace::new(vec!["low", "high"]).unwrap(),
        vec![vec![p01], vec![matrix_unit(3, 2, 2)]],
    )
    .unwrap();

    let mut pass = true;
    let mut notes = Vec::new();
    for (name, inst) in [("lueders2", &lueders2), ("lueders3", &lueders3)] {
        let (weak, wres) = inst.is_weakly_repeatable();
        let (rep, rres) = inst.is_repeatable();
        pass &= weak && rep;
        notes.push(format!("{name}: weak {wres:.1e} rep {rres:.1e}"));
    }

    // depolarized variant, noise 0.3: posterior gets depolarized per outcome
    let noise: f64 = 0.3;
    let paulis = [
        identity(2),
        CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]),
        CMat::from_row_slice(
            2,
            2,
            &[
                cr(0.0),
                instrument_forge::matrix::c(0.0, -1.0),
                instrument_forge::matrix::c(0.0, 1.0),
                cr(0.0),
            ],
        ),
        CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]),
    ];
    let depolarized_kraus = |s: usize| -> Vec<CMat> {
        let p = matrix_unit(2, s, s);
        let mut set = vec![&p * cr((1.0 - noise).sqrt())];
        for sigma in &paulis {
            set.push(sigma * &p * cr((noise / 4.0).sqrt()));
        }
        set
    };
    let depolarized = CPInstrument::new(
        FiniteVonNeumannAlgebra::full(2),
        OutcomeSpace::new(vec!["0", "1"]).unwrap(),
        vec![depolarized_kraus(0), depolarized_kraus(1)],
    )
    .unwrap();
    let (weak, wres) = depolarized.is_weakly_repeatable();
    let (rep, rres) = depolarized.is_repeatable();
    pass &= !weak && !rep && wres > 1e-3 && rres > 1e-3;
    notes.push(format!("depolarized(0.3): weak {wres:.2e} rep {rres:.2e}"));

    // discreteness: I(Δ) = Σ_{s∈Δ} T(s) exactly, dead atoms excluded
    let mut r = rng(0xC6);
    let base = random_instrument(&mut r, 3, 3, 2).unwrap();
    let mut kraus = base.kraus_sets().to_vec();
    kraus.push(Vec::new());
    let mut labels: Vec<String> = base.outcomes().labels().to_vec();
    labels.push("dead".into());
    let with_dead = CPInstrument::new(
        base.algebra().clone(),
        OutcomeSpace::new(labels.clone()).unwrap(),
        kraus,
    )
    .unwrap();
    let support = with_dead.discrete_support();
    pass &= support == base.outcomes().labels().iter().map(String::as_str).collect::<Vec<_>>();

    let x = random_complex_matrix(&mut r, 3, 3);
    let mut decomposition_residual: f64 = 0.0;
    for mask in 0u32..(1 << labels.len()) {
        let subset: Vec<&str> = labels
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, l)| l.as_str())
            .collect();
        let direct = with_dead.apply_dual_global(&x, &subset).unwrap();
        let mut summed = zeros(3, 3);
        for label in &subset {
            if support.contains(label) {
                let idx = with_dead.outcomes().index_of(label).unwrap();
                summed += with_dead.dual_atom(idx, &x);
            }
        }
        decomposition_residual = decomposition_residual.max((direct - summed).norm());
    }
    pass &= decomposition_residual < 1e-14;
    notes.push(format!("atom decomposition residual {decomposition_residual:.1e}"));

    assert!(
        verdict(6, "repeatability suite", pass, &notes.join("; ")),
        "{notes:?}"
    );
}

#[test]
fn criterion_7_locality_and_intertwining() {
    let net = LocalNet::new(3, 2).unwrap();
    let o1 = Region::new(0, 0);
    let o2 = Region::new(0, 1);
    let mut r = rng(0xC7);

    let mut worst_locality: f64 = 0.0;
    let mut worst_range: f64 = 0.0;
    let mut worst_intertwining: f64 = 0.0;
    for trial in 0..10 {
        let site_inst = random_instrument(&mut r, 2, 2, 1 + trial % 2).unwrap();
        let lifted = net.lift_instrument(&o1, &site_inst).unwrap();
        let extended = net.extend_local(&lifted, &o1, &o2).unwrap();
        let report = net
            .is_local_instrument(&extended, &o1, &o2, &mut r, 3)
            .unwrap();
        worst_locality = worst_locality.max(report.locality_residual);
        worst_range = worst_range.max(report.range_residual);
        let global = canonical_extension(&extended).unwrap();
        worst_intertwining = worst_intertwining.max(net.intertwining_check(&global, &o2).unwrap());
    }

    // deliberately non-local control: Lüders measurement of X on site 2
    let plus = CMat::from_row_slice(2, 2, &[cr(0.5), cr(0.5), cr(0.5), cr(0.5)]);
    let minus = CMat::from_row_slice(2, 2, &[cr(0.5), cr(-0.5), cr(-0.5), cr(0.5)]);
    let control = CPInstrument::new(
        net.global_algebra(),
        OutcomeSpace::new(vec!["+", "-"]).unwrap(),
        vec![
            vec![net.site_operator(2, &plus).unwrap()],
            vec![net.site_operator(2, &minus).unwrap()],
        ],
    )
    .unwrap();
    let control_residual = net.intertwining_check(&control, &o2).unwrap();

    let pass = worst_locality < 1e-9
        && worst_range < 1e-9
        && worst_intertwining < 1e-9
        && control_residual > 0.1;
    assert!(
        verdict(
            7,
            "locality and intertwining",
            pass,
            &format!(
                "locality {worst_locality:.3e}, range {worst_range:.3e}, intertwining {worst_intertwining:.3e}, non-local control {control_residual:.3e}"
            ),
        ),
        "locality {worst_locality:.3e} range {worst_range:.3e} intertwining {worst_intertwining:.3e} control {control_residual:.3e}"
    );
}

#[test]
fn criterion_8_stinespring_minimality() {
    let mut r = rng(0xC8);
    let mut all_match = true;
    let mut checked = 0usize;
    for trial in 0..50 {
        let d = 2 + trial % 3;
        let n_kraus = 1 + trial % 4;
        let algebra = FiniteVonNeumannAlgebra::full(d);
        let kraus: Vec<CMat> = (0..n_kraus)
            .map(|_| random_complex_matrix(&mut r, d, d) / cr((n_kraus * d) as f64).sqrt())
            .collect();
        let triple = minimal_stinespring(&kraus, &algebra).unwrap();
        let choi = choi_matrix(&kraus, d).unwrap();
        let rank = choi_rank(&choi, 1e-9);
        all_match &= triple.dilation_dim() == d * rank;
        checked += 1;
    }
    assert!(
        verdict(
            8,
            "Stinespring minimality vs brute-force Choi rank",
            all_match,
            &format!("dilation dimension = dim(H)·rank on all {checked} maps"),
        ),
        "a dilation dimension diverged from the Choi rank"
    );
}

#[test]
fn criterion_9_deterministic_dilation_artifacts() {
    let dir = std::env::temp_dir().join("forge-acceptance-determinism");
    std::fs::create_dir_all(&dir).unwrap();

    let mut sizes = Vec::new();
    let mut pass = true;
    // both the direct path and the canonical-extension path
    for fixture_name in ["lueders_z.json", "diagonal_meas.json"] {
        let fixture = format!(
            "{}/fixtures/{fixture_name}",
            env!("CARGO_MANIFEST_DIR")
        );
        let out_a = dir.join("a").join(fixture_name);
        let out_b = dir.join("b").join(fixture_name);
        std::fs::create_dir_all(out_a.parent().unwrap()).unwrap();
        std::fs::create_dir_all(out_b.parent().unwrap()).unwrap();

        for out in [&out_a, &out_b] {
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_instrument-forge"))
                .args([
                    "dilate",
                    &fixture,
                    "--process-out",
                    out.to_str().unwrap(),
                    "--out",
                    out.with_extension("report.json").to_str().unwrap(),
                ])
                .status()
                .unwrap();
            assert!(status.success());
        }

        let bytes_a = std::fs::read(&out_a).unwrap();
        let bytes_b = std::fs::read(&out_b).unwrap();
        pass &= bytes_a == bytes_b;
        sizes.push(bytes_a.len());
    }
    assert!(
        verdict(
            9,
            "byte-identical dilation artifacts",
            pass,
            &format!("pairs of runs produced identical process files ({sizes:?} bytes)"),
        ),
        "process files differ between runs"
    );
}
