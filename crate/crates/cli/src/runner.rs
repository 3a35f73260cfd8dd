//! Executes scenarios against the core library.

use std::path::{Path, PathBuf};

use qreduce_core::instrument::AxiomCheck;
use qreduce_core::observable::OutcomeSet;
use qreduce_core::ops::trace_distance;
use qreduce_core::position::{
    build_position_apparatus, momentum_contrast, momentum_nondisturbance_demo,
    verify_translated_posteriors,
};
use qreduce_core::random::{random_mixed_density, rng};
use qreduce_core::{
    ApparatusModel, ComplexOperator, DensityOperator, GridSystem, Instrument, Observable,
};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::json::{self, matrix_value};
use crate::report::{Body, Check, Distribution, Relation, Report, Verdict};
use crate::scenario::{
    InstrumentParams, InstrumentSpec, JointParams, MomentumDemoParams, NonMixtureParams, Params,
    PositionDemoParams, Scenario, Thresholds, LOAD_NORM_TOL,
};

/// Probability below which posteriors are not compared.
const POSTERIOR_FLOOR: f64 = 1e-6;

struct Outcome {
    distribution: Distribution,
    results: Map<String, Value>,
    checks: Vec<Check>,
}

struct Ctx {
    t: Thresholds,
    rng: ChaCha8Rng,
    repetitions: usize,
    seed: u64,
}

pub fn run_path(path: &Path, seed: Option<u64>) -> CliResult<Report> {
    let scenario = Scenario::load(path)?;
    run_scenario(&scenario, seed)
}

pub fn run_scenario(scenario: &Scenario, seed: Option<u64>) -> CliResult<Report> {
    Ok(Report::new(run_body(scenario, seed)?))
}

pub fn run_body(scenario: &Scenario, seed: Option<u64>) -> CliResult<Body> {
    let params = scenario.params()?;
    let seed = seed.unwrap_or(scenario.seed);
    let mut ctx = Ctx {
        t: scenario.tolerances.resolve()?,
        rng: rng(seed),
        repetitions: scenario.repetitions,
        seed,
    };
    let outcome = match &params {
        Params::InstrumentVerify(p) => instrument_verify(p, &mut ctx)?,
        Params::Dilate(p) => dilate(p, &mut ctx)?,
        Params::PositionDemo(p) => position_demo(p, &mut ctx)?,
        Params::MomentumDemo(p) => momentum_demo(p, &ctx)?,
        Params::NonMixtureDemo(p) => non_mixture(p, &ctx.t)?,
        Params::JointDistribution(p) => joint_distribution(p, &mut ctx)?,
    };
    let verdict = if outcome.checks.iter().all(|c| c.pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(Body {
        name: scenario.name.clone(),
        kind: scenario.kind.as_str().to_string(),
        seed,
        repetitions: scenario.repetitions,
        inputs: json!({
            "params": scenario.params,
            "tolerances": scenario.tolerances,
        }),
        distribution: outcome.distribution,
        results: outcome.results,
        checks: outcome.checks,
        verdict,
    })
}

/// `*.json` files of a directory in lexicographic order.
pub fn scenario_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn distribution(label: &str, outcomes: &[f64], probabilities: Vec<f64>) -> Distribution {
    Distribution {
        label: label.to_string(),
        outcomes: outcomes.to_vec(),
        probabilities,
    }
}

fn state_value(s: &DensityOperator) -> Value {
    matrix_value(s.operator())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn prior_or_mixed(
    spec: &Option<crate::scenario::StateSpec>,
    dim: usize,
) -> CliResult<DensityOperator> {
    match spec {
        Some(s) => s.build(dim),
        None => Ok(DensityOperator::maximally_mixed(dim)),
    }
}

fn posteriors_value(ins: &Instrument, rho: &DensityOperator) -> CliResult<Value> {
    Ok(Value::Array(
        ins.posterior_family(rho)?
            .iter()
            .map(|p| {
                json!({
                    "outcome": p.outcome,
                    "probability": p.probability,
                    "state": p.state.as_ref().map(state_value),
                })
            })
            .collect(),
    ))
}

fn instrument_of(p: &InstrumentParams) -> CliResult<(Observable, Instrument)> {
    let obs = p.observable.build()?;
    let ins = p.instrument.build(&obs)?;
    Ok((obs, ins))
}

fn instrument_verify(p: &InstrumentParams, ctx: &mut Ctx) -> CliResult<Outcome> {
    let (obs, ins) = instrument_of(p)?;
    let dim = obs.dim();
    let t = ctx.t;
    let axioms = ins.verify_axioms_with(&AxiomCheck {
        cp_tol: t.cp,
        additivity_tol: t.additivity,
        compat_tol: t.compat,
        seed: ctx.seed,
        partitions: ctx.repetitions,
    });

    let full = OutcomeSet::full(obs.outcome_count());
    let family = match &p.instrument {
        InstrumentSpec::ControlledPosterior(f) => Some(
            f.iter()
                .map(|s| s.build(dim))
                .collect::<CliResult<Vec<_>>>()?,
        ),
        _ => None,
    };
    let (mut trace_dev, mut born_dev, mut posterior_dev) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..ctx.repetitions {
        let rho = random_mixed_density(&mut ctx.rng, dim);
        trace_dev = trace_dev.max((ins.apply(&full, &rho)?.trace().re - 1.0).abs());
        born_dev = born_dev.max(max_abs_diff(
            &ins.outcome_distribution(&rho)?,
            &obs.distribution(&rho)?,
        ));
        if let Some(family) = &family {
            for (a, post) in ins.posterior_family(&rho)?.iter().enumerate() {
                if let (Some(state), true) = (&post.state, post.probability > POSTERIOR_FLOOR) {
                    posterior_dev =
                        posterior_dev.max(trace_distance(state.operator(), family[a].operator())?);
                }
            }
        }
    }

    let mut checks = vec![
        Check::at_most(
            "choi_negativity",
            (-axioms.min_choi_eigenvalue).max(0.0),
            t.cp,
        ),
        Check::at_most("additivity", axioms.max_additivity_violation, t.additivity),
        Check::at_most("compatibility", axioms.max_compat_violation, t.compat),
        Check::at_most("trace_preservation", trace_dev, t.trace),
        Check::at_most("born_agreement", born_dev, t.born),
    ];
    if family.is_some() {
        checks.push(Check::at_most(
            "posterior_control",
            posterior_dev,
            t.posterior,
        ));
    }

    let prior = prior_or_mixed(&p.prior, dim)?;
    let mut results = Map::new();
    results.insert(
        "min_choi_eigenvalue".into(),
        json!(axioms.min_choi_eigenvalue),
    );
    results.insert(
        "kraus_counts".into(),
        json!(ins
            .atoms()
            .iter()
            .map(|a| a.kraus().len())
            .collect::<Vec<_>>()),
    );
    results.insert("prior".into(), state_value(&prior));
    results.insert("posteriors".into(), posteriors_value(&ins, &prior)?);
    Ok(Outcome {
        distribution: distribution("outcome", obs.outcomes(), ins.outcome_distribution(&prior)?),
        results,
        checks,
    })
}

fn probe_singleton(model: &ApparatusModel, a: usize) -> CliResult<OutcomeSet> {
    let b = model
        .correspondence()
        .iter()
        .position(|c| *c == Some(a))
        .ok_or_else(|| {
            CliError::Validation(format!("measured outcome {a} has no probe partner"))
        })?;
    Ok(OutcomeSet::singleton(model.probe().outcome_count(), b))
}

fn dilate(p: &InstrumentParams, ctx: &mut Ctx) -> CliResult<Outcome> {
    let (obs, ins) = instrument_of(p)?;
    let dim = obs.dim();
    let t = ctx.t;
    let model = ApparatusModel::dilate_instrument(&ins)?;
    let measures = model.measures_check(dim * dim)?;
    let back = model.extract_instrument()?;
    let round_trip = back.choi_distance(&ins)?;

    let (mut born_dev, mut cond_dev) = (0.0f64, 0.0f64);
    for _ in 0..ctx.repetitions {
        let rho = random_mixed_density(&mut ctx.rng, dim);
        let direct = ins.outcome_distribution(&rho)?;
        born_dev = born_dev.max(max_abs_diff(&direct, &model.measured_distribution(&rho)?));
        for (a, &pa) in direct.iter().enumerate() {
            if pa <= POSTERIOR_FLOOR {
                continue;
            }
            let selective = ins.selective_state(&OutcomeSet::singleton(direct.len(), a), &rho)?;
            let conditional = model.conditional_state(&probe_singleton(&model, a)?, &rho)?;
            cond_dev = cond_dev.max(trace_distance(
                selective.operator(),
                conditional.operator(),
            )?);
        }
    }

    let checks = vec![
        Check::at_most("round_trip_choi_distance", round_trip, t.round_trip),
        Check::at_most("measures_violation", measures.max_violation, t.measures),
        Check::at_most("distribution_agreement", born_dev, t.born),
        Check::at_most("conditional_agreement", cond_dev, t.conditional),
    ];

    let prior = prior_or_mixed(&p.prior, dim)?;
    let mut results = Map::new();
    results.insert("probe_dim".into(), json!(model.dim_probe()));
    results.insert("probe_outcomes".into(), json!(model.probe().outcomes()));
    results.insert("correspondence".into(), json!(model.correspondence()));
    results.insert(
        "measures_basis_elements".into(),
        json!(measures.basis_elements),
    );
    results.insert(
        "extracted_kraus_counts".into(),
        json!(back
            .atoms()
            .iter()
            .map(|a| a.kraus().len())
            .collect::<Vec<_>>()),
    );
    results.insert("prior".into(), state_value(&prior));
    results.insert("posteriors".into(), posteriors_value(&back, &prior)?);
    Ok(Outcome {
        distribution: distribution(
            "outcome",
            obs.outcomes(),
            model.measured_distribution(&prior)?,
        ),
        results,
        checks,
    })
}

fn position_demo(p: &PositionDemoParams, ctx: &mut Ctx) -> CliResult<Outcome> {
    let g = GridSystem::new(p.n)?;
    let n = g.size();
    let t = ctx.t;
    let phi = json::unit_vector(&p.phi, "phi", LOAD_NORM_TOL)?;
    let model = build_position_apparatus(&g, &phi)?;
    let prior = match &p.prior {
        Some(s) => s.build(n)?,
        None => random_mixed_density(&mut ctx.rng, n),
    };
    let shift = ComplexOperator::from_fn(n, |r, c| {
        if r == (c + 1) % n {
            qreduce_core::ops::ONE
        } else {
            qreduce_core::ops::ZERO
        }
    });

    let mut priors = vec![prior.clone()];
    priors.extend((0..ctx.repetitions).map(|_| random_mixed_density(&mut ctx.rng, n)));
    let reference = posteriors(&model, &prior)?;
    let (mut density_dev, mut translation, mut covariance, mut independence) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for rho in &priors {
        let dist = model.outcome_distribution(rho)?;
        let diag: Vec<f64> = (0..n).map(|y| rho.operator().get(y, y).re).collect();
        density_dev = density_dev.max(max_abs_diff(&dist, &diag));
        translation =
            translation.max(verify_translated_posteriors(&g, &phi, rho)?.max_trace_distance);
        let family = posteriors(&model, rho)?;
        // Compare each posterior with the shifted first available one.
        let Some((start, first)) = family
            .iter()
            .enumerate()
            .find_map(|(a, s)| s.as_ref().map(|s| (a, s)))
        else {
            continue;
        };
        let mut expected = first.operator().clone();
        for a in 0..n {
            let b = (start + a) % n;
            if let Some(post) = &family[b] {
                covariance = covariance.max((post.operator() - &expected).max_abs());
                if let Some(r) = &reference[b] {
                    independence = independence.max(trace_distance(post.operator(), r.operator())?);
                }
            }
            expected = shift.conjugate(&expected)?;
        }
    }

    let checks = vec![
        Check::at_most("position_density", density_dev, t.density),
        Check::at_most("translated_posteriors", translation, t.translation),
        Check::at_most("translation_covariance", covariance, t.covariance),
        Check::at_most("prior_independence", independence, t.independence),
    ];
    let mut results = Map::new();
    results.insert("phi".into(), json::vector_value(&phi));
    results.insert("prior".into(), state_value(&prior));
    results.insert(
        "posteriors".into(),
        Value::Array(
            reference
                .iter()
                .map(|s| s.as_ref().map_or(Value::Null, state_value))
                .collect(),
        ),
    );
    let outcomes: Vec<f64> = (0..n).map(|y| y as f64).collect();
    Ok(Outcome {
        distribution: distribution("position", &outcomes, model.outcome_distribution(&prior)?),
        results,
        checks,
    })
}

/// Posterior for every probe singleton above the floor.
fn posteriors(
    model: &ApparatusModel,
    rho: &DensityOperator,
) -> CliResult<Vec<Option<DensityOperator>>> {
    let n = model.probe().outcome_count();
    let probs = model.outcome_distribution(rho)?;
    (0..n)
        .map(|b| {
            if probs[b] <= POSTERIOR_FLOOR {
                return Ok(None);
            }
            Ok(Some(
                model.conditional_state(&OutcomeSet::singleton(n, b), rho)?,
            ))
        })
        .collect()
}

fn momentum_demo(p: &MomentumDemoParams, ctx: &Ctx) -> CliResult<Outcome> {
    let g = GridSystem::new(p.n)?;
    let n = g.size();
    let t = ctx.t;
    let report = momentum_nondisturbance_demo(&g, p.p)?;
    let q = p.contrast_prior.unwrap_or((report.prior_momentum + 1) % n);
    if q == report.prior_momentum {
        return Err(CliError::Validation(format!(
            "contrast prior momentum {q} equals the matched prior"
        )));
    }
    let contrast = momentum_contrast(&g, p.p, q)?;

    let checks = vec![
        Check::at_most("fidelity_deficit", report.fidelity_deficit(), t.fidelity),
        Check::at_most("uniform_deviation", report.max_uniform_deviation, t.uniform),
        Check::at_most(
            "nonselective_distance",
            report.nonselective_distance,
            t.nonselective,
        ),
        Check::new(
            "contrast_max_prior_fidelity",
            contrast.max_prior_fidelity(),
            Relation::Below,
            1.0 - t.contrast,
        ),
    ];
    let mut results = Map::new();
    results.insert("momentum".into(), json!(report.momentum));
    results.insert("prior_momentum".into(), json!(report.prior_momentum));
    results.insert(
        "posterior_fidelities".into(),
        json!(report.posterior_fidelities),
    );
    results.insert("contrast_prior_momentum".into(), json!(q));
    results.insert(
        "contrast_prior_fidelities".into(),
        json!(contrast.prior_fidelities),
    );
    results.insert(
        "contrast_reset_fidelities".into(),
        json!(contrast.reset_fidelities),
    );
    let outcomes: Vec<f64> = (0..n).map(|y| y as f64).collect();
    Ok(Outcome {
        distribution: distribution("position", &outcomes, report.distribution),
        results,
        checks,
    })
}

fn non_mixture(p: &NonMixtureParams, t: &Thresholds) -> CliResult<Outcome> {
    let model = p.apparatus.build()?;
    let prior = p.prior.build(model.dim_object())?;
    let probe = model.probe();
    let s = p.set.build(probe)?;
    let first = p.partition[0].build(probe)?;
    let second = p.partition[1].build(probe)?;
    let report = model.demonstrate_non_mixture(&s, (&first, &second), &prior)?;

    let mut results = Map::new();
    results.insert("probability".into(), json!(report.probability));
    results.insert(
        "part_probabilities".into(),
        json!(report.part_probabilities),
    );
    results.insert("trace_distance".into(), json!(report.trace_distance));
    results.insert(
        "object_mixture_residual".into(),
        json!(report.object_mixture_residual),
    );
    results.insert(
        "conditional_state".into(),
        state_value(&model.conditional_state(&s, &prior)?),
    );
    results.insert(
        "composite_state".into(),
        state_value(&model.naive_composite_state(&s, &prior)?),
    );
    Ok(Outcome {
        distribution: distribution(
            "probe",
            probe.outcomes(),
            model.outcome_distribution(&prior)?,
        ),
        results,
        checks: vec![
            Check::new(
                "non_mixture_distance",
                report.trace_distance,
                Relation::Above,
                t.min_distance,
            ),
            Check::at_most(
                "object_mixture_residual",
                report.object_mixture_residual,
                t.mixture,
            ),
        ],
    })
}

fn factorization_residual(
    model: &ApparatusModel,
    x_obs: &Observable,
    rho: &DensityOperator,
) -> CliResult<(f64, f64, f64)> {
    let joint = model.joint_distribution(x_obs, rho)?;
    let marginal = model.outcome_distribution(rho)?;
    let n = model.probe().outcome_count();
    let mut residual = 0.0f64;
    for (b, &pb) in marginal.iter().enumerate() {
        if pb <= POSTERIOR_FLOOR {
            continue;
        }
        let post = model.conditional_state(&OutcomeSet::singleton(n, b), rho)?;
        for (x, row) in joint.probabilities.iter().enumerate() {
            let rhs = x_obs.projection(x).checked_mul(post.operator())?.trace().re * pb;
            residual = residual.max((row[b] - rhs).abs());
        }
    }
    Ok((
        residual,
        (joint.total() - 1.0).abs(),
        max_abs_diff(&joint.probe_marginal(), &marginal),
    ))
}

fn joint_distribution(p: &JointParams, ctx: &mut Ctx) -> CliResult<Outcome> {
    let model = p.apparatus.build()?;
    let x_obs = p.x_observable.build()?;
    let dim = model.dim_object();
    if x_obs.dim() != dim {
        return Err(CliError::Validation(format!(
            "x_observable has dimension {}, expected {dim}",
            x_obs.dim()
        )));
    }
    let t = ctx.t;
    let prior = prior_or_mixed(&p.prior, dim)?;
    let mut priors = vec![prior.clone()];
    priors.extend((0..ctx.repetitions).map(|_| random_mixed_density(&mut ctx.rng, dim)));
    let (mut residual, mut total, mut marginal) = (0.0f64, 0.0f64, 0.0f64);
    for rho in &priors {
        let (r, tt, m) = factorization_residual(&model, &x_obs, rho)?;
        residual = residual.max(r);
        total = total.max(tt);
        marginal = marginal.max(m);
    }
    let checks = vec![
        Check::at_most("factorization_residual", residual, t.factorization),
        Check::at_most("total_probability", total, t.born),
        Check::at_most("marginal_agreement", marginal, t.born),
    ];
    let joint = model.joint_distribution(&x_obs, &prior)?;
    let mut results = Map::new();
    results.insert("x_outcomes".into(), json!(joint.x_outcomes));
    results.insert("probe_outcomes".into(), json!(joint.probe_outcomes));
    results.insert("joint".into(), json!(joint.probabilities));
    results.insert("prior".into(), state_value(&prior));
    Ok(Outcome {
        distribution: distribution("probe", model.probe().outcomes(), joint.probe_marginal()),
        results,
        checks,
    })
}
