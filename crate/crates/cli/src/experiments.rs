//! Experiment catalog and dispatch.

use std::fmt::Write as _;

use hypnet_core::assoc::{
    association_study, summary_text, write_long_csv, write_report_csv, AssociationCase, NormKind, SpaceJumpCase,
    TimeJumpCase,
};
use hypnet_core::epsnets::{classify_net, NetSample};
use hypnet_core::garding::{friedrichs_apply, friedrichs_part_1d, garding_probe_on, ProbeConfig};
use hypnet_core::mollify::{MollifierFamily, PiecewiseCoefficient};
use hypnet_core::problems::{acoustics_symbol, AcousticsProblem, ProblemKind, ProblemSpec};
use hypnet_core::reduction::{reduce, root_agreement, roundtrip_solve_check, smooth_data, HigherOrderOperator};
use hypnet_core::symbolgrid::{random_band_limited, spectral_norm, CMat, DenseOperator, SymbolMatrix, TorusGrid, C64};
use hypnet_core::symmetriser::{
    build_r, build_s_on, certify, eigen_decompose, grid_samples, projectors_product_formula, random_hyperbolic_family,
    CertConfig, SamplePoint,
};
use hypnet_core::{HypnetError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{AcousticsSection, ExperimentConfig, Family};
use crate::error::CliError;
use crate::runner::{Artifact, Runner};

pub struct Entry {
    pub name: &'static str,
    pub description: &'static str,
    pub keys: &'static str,
}

/// Alphabetical.
pub const CATALOG: &[Entry] = &[
    Entry {
        name: "associate",
        description: "sweep the ε-grid and measure convergence of the ε-solution to the exact connected solution",
        keys: "[problem]",
    },
    Entry {
        name: "certify-symmetriser",
        description: "eigenvalues, projectors, R0 positivity and skew cancellation on an (x, ξ) sample",
        keys: "[acoustics]",
    },
    Entry {
        name: "friedrichs-demo",
        description: "Friedrichs part of p = mean + amplitude·cos x: positivity and self-adjointness",
        keys: "[friedrichs]",
    },
    Entry {
        name: "garding-probe",
        description: "c1 search for S = R0 + c1<D>^-1 at each ε, independent probe check and c1-net class",
        keys: "[acoustics], optional [garding]",
    },
    Entry {
        name: "reduce-roundtrip",
        description: "companion reduction of w_tt = c(x)² w_xx against the direct second-order solve",
        keys: "[reduce]",
    },
    Entry {
        name: "solve",
        description: "one ε-regularized wave solve with snapshots compared to the exact solution",
        keys: "[problem], [solve]",
    },
];

pub fn list_text() -> String {
    let mut s = String::new();
    for e in CATALOG {
        let _ = writeln!(s, "{:<20} {}\n{:<20} config: {}", e.name, e.description, "", e.keys);
    }
    s
}

fn csv<F>(f: F) -> Vec<u8>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).expect("in-memory write");
    buf
}

fn acoustics_symbol_at(a: &AcousticsSection, eps: f64) -> Result<(SymbolMatrix, TorusGrid)> {
    let g = TorusGrid::new(a.dimension, a.grid)?;
    let (rho, c) = if a.dimension == 1 {
        (
            PiecewiseCoefficient::step_x(a.rho.minus, a.rho.plus)?,
            PiecewiseCoefficient::step_x(a.speed.minus, a.speed.plus)?,
        )
    } else {
        (
            PiecewiseCoefficient::step_x_2d(a.rho.minus, a.rho.plus)?,
            PiecewiseCoefficient::step_x_2d(a.speed.minus, a.speed.plus)?,
        )
    };
    let pr = AcousticsProblem::new(a.dimension, rho, c, 1.0)?;
    let fam = MollifierFamily::new(a.rate, a.dimension)?;
    let co = pr.regularized(&g, &fam, eps)?;
    Ok((acoustics_symbol(&co)?, g))
}

pub fn run(name: &str, cfg: &ExperimentConfig, runner: &mut Runner) -> std::result::Result<(), CliError> {
    match name {
        "certify-symmetriser" => certify_symmetriser(cfg, runner),
        "garding-probe" => garding(cfg, runner),
        "solve" => solve(cfg, runner),
        "associate" => associate(cfg, runner),
        "reduce-roundtrip" => reduce_roundtrip(cfg, runner),
        "friedrichs-demo" => friedrichs_demo(cfg, runner),
        other => Err(CliError::UnknownExperiment(other.to_string())),
    }
}

fn certify_symmetriser(cfg: &ExperimentConfig, runner: &mut Runner) -> std::result::Result<(), CliError> {
    let a = cfg.acoustics()?.clone();
    let seed = cfg.seed();
    runner.stage("certify", || {
        let (k, g) = match a.family {
            Family::Acoustics => acoustics_symbol_at(&a, a.epsilon)?,
            Family::Random => (random_hyperbolic_family(a.random_size, seed), TorusGrid::new(1, a.grid)?),
        };
        let samples = grid_samples(&g, 0.0, a.samples_x, a.samples_xi);
        let rep = certify(&k, &samples, &CertConfig::default())?;
        let bound = 1.0 / (rep.m * rep.m) as f64;
        let mut s = String::new();
        let _ = writeln!(s, "symbol: {}", k.label);
        let _ = writeln!(s, "samples: {}", rep.rows.len());
        let _ = writeln!(s, "min gap: {:.6e}", rep.min_gap);
        let _ = writeln!(s, "min eigenvalue of R0: {:.6e} (bound 1/m^2 = {bound:.6e})", rep.min_r0_eig);
        let _ = writeln!(s, "max cancellation residual: {:.6e}", rep.max_cancellation);
        let _ = writeln!(s, "max projector residual: {:.6e}", rep.max_projector_residual.max());
        let _ = writeln!(s, "positivity holds: {}", rep.min_r0_eig >= bound - 1e-9);
        Ok((
            (),
            vec![
                Artifact::new("certification.csv", csv(|w| rep.write_csv(w))),
                Artifact::text("summary.txt", s),
            ],
        ))
    })
}

fn garding(cfg: &ExperimentConfig, runner: &mut Runner) -> std::result::Result<(), CliError> {
    let a = cfg.acoustics()?.clone();
    let probe = ProbeConfig {
        trials: cfg.garding.as_ref().map(|g| g.trials).unwrap_or(64),
        band: cfg.garding.as_ref().map(|g| g.band).unwrap_or(16.0),
        seed: cfg.seed(),
        ..ProbeConfig::default()
    };
    let grid = a.epsilons.grid().map_err(|e| CliError::Invalid {
        field: "acoustics.epsilons".into(),
        reason: e.to_string(),
    })?;
    let mut c1s = Vec::new();
    let mut lines = String::new();
    for (i, &eps) in grid.epsilons().iter().enumerate() {
        let (c1, line) = runner.stage(&format!("eps{i:02}"), || {
            let (k, g) = acoustics_symbol_at(&a, eps)?;
            let samples = grid_samples(&g, 0.0, a.samples_x.min(g.len()), 16);
            let es = eigen_decompose(&k, &samples, &CertConfig::default())?;
            let r0 = build_r(&projectors_product_formula(&k, &es)?);
            let op = DenseOperator::new(&r0, 0.0, &g);
            let pair = build_s_on(&op, &r0, &g, Some(eps), &probe)?;
            let check = ProbeConfig {
                seed: probe.seed.wrapping_add(1),
                ..probe.clone()
            };
            let rep = garding_probe_on(&op, &r0, &g, pair.c, pair.c1, &check)?;
            let line = format!(
                "eps {eps:.6e}: c {:.6e}, c1 {:.6e}, independent min margin {:.6e} over {} probes, valid {}",
                pair.c,
                pair.c1,
                rep.min_margin,
                rep.trials,
                rep.is_valid()
            );
            Ok(((pair.c1, line), vec![Artifact::new(format!("garding_eps{i:02}.csv"), csv(|w| rep.write_csv(w)))]))
        })?;
        c1s.push(c1);
        lines.push_str(&line);
        lines.push('\n');
    }
    runner.stage("classify", || {
        let net = NetSample::new(grid.clone(), c1s.clone())?;
        let class = if c1s.iter().all(|&v| v == 0.0) {
            "c1 vanishes on the whole grid".to_string()
        } else {
            let positive = NetSample::new(grid.clone(), c1s.iter().map(|v| v.max(1e-300)).collect())?;
            let c = classify_net(&positive, 4)?;
            format!("{} (exponent {:.4}, residual {:.3e})", c.kind, c.fitted_exponent, c.fit_residual)
        };
        lines.push_str(&format!("c1 net: {class}\n"));
        Ok((
            (),
            vec![
                Artifact::new("c1_net.csv", csv(|w| net.write_csv(w))),
                Artifact::text("summary.txt", lines.clone()),
            ],
        ))
    })
}

fn case_for(spec: &ProblemSpec, safety: f64) -> Result<Box<dyn AssociationCase>> {
    let grid = TorusGrid::new(1, spec.grid)?;
    match spec.kind {
        ProblemKind::SpaceJump => {
            let mut c = SpaceJumpCase::new(spec.space_jump(), grid)?;
            c.safety = safety;
            Ok(Box::new(c))
        }
        ProblemKind::TimeJump => {
            let w0 = spec.w0.sample(&grid);
            let w1 = spec.w1.sample(&grid);
            let mut c = TimeJumpCase::new(spec.time_jump(), w0, w1)?;
            c.safety = safety;
            Ok(Box::new(c))
        }
    }
}

fn solve(cfg: &ExperimentConfig, runner: &mut Runner) -> std::result::Result<(), CliError> {
    let spec = cfg.problem()?.clone();
    let s = cfg.solve()?.clone();
    let safety = cfg.solver.safety;
    runner.stage("solve", || {
        let case = case_for(&spec, safety)?;
        let times: Vec<f64> = s.snapshots.iter().map(|f| f * spec.horizon).collect();
        let approx = case.approximate(s.epsilon, &times)?;
        let grid = case.grid();
        let mut files = Vec::new();
        let mut summary = format!("problem: {}\nepsilon: {:.6e}\n", case.id(), s.epsilon);
        for (i, snap) in approx.iter().enumerate() {
            let exact = case.reference(snap.t)?;
            let mut out = String::from("x,w,w_exact\n");
            let mut l2 = 0.0;
            for j in 0..grid.len() {
                let d = snap.values[j] - exact.values[j];
                l2 += d * d;
                let _ = writeln!(out, "{:.12e},{:.12e},{:.12e}", grid.point(j)[0], snap.values[j], exact.values[j]);
            }
            let l2 = (l2 * grid.cell_volume()).sqrt();
            let _ = writeln!(summary, "t {:.6e}: L2 error {l2:.6e}", snap.t);
            if let Some(j) = snap.interface_jump {
                let _ = writeln!(summary, "t {:.6e}: interface flux jump {j:.6e}", snap.t);
            }
            files.push(Artifact::text(format!("snapshot_{i:02}.csv"), out));
        }
        files.push(Artifact::text("summary.txt", summary));
        Ok(((), files))
    })
}

fn associate(cfg: &ExperimentConfig, runner: &mut Runner) -> std::result::Result<(), CliError> {
    let spec = cfg.problem()?.clone();
    let safety = cfg.solver.safety;
    runner.stage("associate", || {
        let case = case_for(&spec, safety)?;
        let report = association_study(case.as_ref(), &spec.epsilon_values(), &NormKind::ALL)?;
        let stem = report.file_stem();
        Ok((
            (),
            vec![
                Artifact::new(format!("{stem}.csv"), csv(|w| write_report_csv(&report, w))),
                Artifact::new(format!("{stem}_long.csv"), csv(|w| write_long_csv(&report, w))),
                Artifact::text(format!("{stem}_summary.txt"), summary_text(&report)),
            ],
        ))
    })
}

fn reduce_roundtrip(cfg: &ExperimentConfig, runner: &mut Runner) -> std::result::Result<(), CliError> {
    let r = cfg.reduce()?.clone();
    let seed = cfg.seed();
    runner.stage("roundtrip", || {
        let g = TorusGrid::new(1, r.grid)?;
        let (base, amp) = (r.base, r.amplitude);
        let op = HigherOrderOperator::wave(1, move |x: &[f64]| base + amp * x[0].sin())?;
        let data = [smooth_data(&g, 0.3), smooth_data(&g, 1.1)];
        let rt = roundtrip_solve_check(&op, &data, r.t_end, r.dt, 1)?;
        let cs = reduce(&op)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<SamplePoint> = (0..r.samples)
            .map(|_| SamplePoint {
                t: 0.0,
                x: vec![rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)],
                xi: vec![rng.gen_range(1.0..200.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }],
            })
            .collect();
        let agree = root_agreement(&cs, &samples)?;
        let mut out = String::from("t,discrepancy\n");
        for (t, e) in rt.times.iter().zip(&rt.errors) {
            let _ = writeln!(out, "{t:.12e},{e:.12e}");
        }
        let summary = format!(
            "{}\nstep size: {:.6e}\nmax roundtrip discrepancy: {:.6e}\nroot agreement over {} samples: {:.6e}\n",
            cs.describe(),
            rt.step_size,
            rt.discrepancy,
            samples.len(),
            agree
        );
        Ok(((), vec![Artifact::text("roundtrip.csv", out), Artifact::text("summary.txt", summary)]))
    })
}

fn friedrichs_demo(cfg: &ExperimentConfig, runner: &mut Runner) -> std::result::Result<(), CliError> {
    let f = cfg.friedrichs()?.clone();
    let seed = cfg.seed();
    runner.stage("friedrichs", || {
        let g = TorusGrid::new(1, f.grid)?;
        let (mean, amp) = (f.mean, f.amplitude);
        let p = SymbolMatrix::new(1, 0.0, true, move |_, x, _| {
            let mut m = CMat::zeros(1, 1);
            m[(0, 0)] = C64::new(mean + amp * x[0].cos(), 0.0);
            m
        });
        let fa = friedrichs_part_1d(&p, &g)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = String::from("probe,form_over_norm2\n");
        let mut worst = f64::INFINITY;
        for i in 0..f.probes {
            let u = random_band_limited(&g, 1, (f.grid / 2 - 1) as f64, &mut rng);
            let q = friedrichs_apply(&fa, &u)?.inner(&u)?.re / u.norm0().powi(2);
            if !q.is_finite() {
                return Err(HypnetError::NumericalFault(format!("probe {i} gave a non-finite form")));
            }
            worst = worst.min(q);
            let _ = writeln!(out, "{i},{q:.12e}");
        }
        let m = fa.matrix();
        let defect = spectral_norm(&(&m - m.adjoint()));
        let summary = format!(
            "symbol: {mean} + {amp} cos x\nprobes: {}\nmin form/|u|^2: {worst:.6e}\nself-adjointness defect: {defect:.6e}\n",
            f.probes
        );
        Ok(((), vec![Artifact::text("form.csv", out), Artifact::text("summary.txt", summary)]))
    })
}
