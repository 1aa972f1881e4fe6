//! One function per subcommand: validate, compute, tabulate.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use serde::Serialize;
use serde_json::{json, Value};

use huber_pl::amp::{
    amp_fit, gen_dataset, interior_point_fit, irls_fit_detailed, monte_carlo_with, objective, Dataset, McConfig,
    Placement, Solver,
};
use huber_pl::lfse::{breakdown_epsilon, minimax, phase_grid, suboptimality_ratio, PhaseQuantity};
use huber_pl::noise::ContaminationModel;
use huber_pl::scalar::classical_minimax;
use huber_pl::state_evolution::{fixed_point, SeConfig};
use huber_pl::tables::{default_semaps_kappa, lambda_mono, semaps, table1, table2, TABLE1_EPSILONS};

use crate::output::{emit, to_value, Report, RunSpec, Table};
use crate::*;

type CmdResult = Result<Report, CliError>;

fn invalid<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Invalid(msg.into()))
}

fn check_eps(eps: f64) -> Result<(), CliError> {
    if (0.0..1.0).contains(&eps) { Ok(()) } else { invalid(format!("--eps must lie in [0, 1), got {eps}")) }
}

fn check_m(m: f64) -> Result<(), CliError> {
    if m > 1.0 && !m.is_nan() { Ok(()) } else { invalid(format!("--m must exceed 1, got {m}")) }
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && !v.is_nan() { Ok(()) } else { invalid(format!("--{name} must be positive, got {v}")) }
}

fn check_nonempty<T>(name: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() { invalid(format!("--{name} needs at least one value")) } else { Ok(()) }
}

/// `lo:hi:n`, inclusive, `n >= 2`.
fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Invalid(format!("grid `{spec}` is not lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n < 2 || !(lo < hi) {
        return Err(bad());
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// `AxB` with positive counts.
fn parse_cells(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Invalid(format!("grid `{spec}` is not N_EPSxN_INV_M"));
    let (a, b) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn params<T: Serialize>(args: &T) -> BTreeMap<String, Value> {
    match to_value(args) {
        Value::Object(map) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    }
}

pub fn run(command: Command, out: &OutputArgs) -> Result<(), CliError> {
    let (name, parameters, seed, report) = match command {
        Command::Classical(a) => ("classical", params(&a), None, classical(&a)),
        Command::Minimax(a) => ("minimax", params(&a), None, minimax_cmd(&a)),
        Command::Breakdown(a) => ("breakdown", params(&a), None, breakdown(&a)),
        Command::Phase(a) => ("phase", params(&a), None, phase(&a)),
        Command::Semaps(a) => ("semaps", params(&a), None, semaps_cmd(&a)),
        Command::LambdaMono(a) => ("lambda-mono", params(&a), None, lambda_mono_cmd(&a)),
        Command::Table1(a) => ("table1", params(&a), None, table1_cmd(&a)),
        Command::Table2(a) => ("table2", params(&a), Some(a.seed), table2_cmd(&a)),
        Command::AmpRun(a) => ("amp-run", params(&a), Some(a.seed), amp_run(&a)),
        Command::MonteCarlo(a) => ("monte-carlo", params(&a), Some(a.seed), monte_carlo_cmd(&a)),
    };
    let report = report?;
    let spec = RunSpec { command: name, parameters, output_path: out.out.clone(), format: out.format, seed };
    emit(&spec, &report).map_err(|e| CliError::Invalid(format!("cannot write output: {e}")))
}

fn classical(a: &ClassicalArgs) -> CmdResult {
    let eps = match &a.grid {
        Some(g) => parse_range(g)?,
        None => a.eps.clone(),
    };
    check_nonempty("eps", &eps)?;
    for &e in &eps {
        check_eps(e)?;
    }
    let rows = eps.iter().map(|&e| classical_minimax(e)).collect::<huber_pl::error::Result<Vec<_>>>()?;
    let mut t = Table::new(&["epsilon", "kappa_star", "i_star", "v_star"]);
    for r in &rows {
        t.push(vec![r.epsilon.into(), r.kappa_star.into(), r.i_star.into(), r.v_star.into()]);
    }
    Ok(Report { table: t, document: to_value(&rows) })
}

fn minimax_cmd(a: &MinimaxArgs) -> CmdResult {
    check_m(a.m)?;
    check_eps(a.eps)?;
    let s = minimax(a.m, a.eps)?;
    let ratio = if s.breakdown { f64::NAN } else { suboptimality_ratio(a.m, a.eps)? };
    let mut t = Table::new(&[
        "epsilon",
        "m",
        "kappa_star",
        "i_star",
        "v_star_classical",
        "kappa_underline_star",
        "lambda_star",
        "v_star",
        "suboptimality_ratio",
        "breakdown",
    ]);
    t.push(vec![
        s.epsilon.into(),
        s.m.into(),
        s.classical.kappa_star.into(),
        s.classical.i_star.into(),
        s.classical.v_star.into(),
        s.kappa_underline_star.into(),
        s.lambda_star.into(),
        s.v_star.into(),
        ratio.into(),
        s.breakdown.into(),
    ]);
    let mut doc = to_value(&s);
    doc["suboptimality_ratio"] = to_value(&ratio);
    Ok(Report { table: t, document: doc })
}

fn breakdown(a: &BreakdownArgs) -> CmdResult {
    check_nonempty("m", &a.m)?;
    for &m in &a.m {
        check_m(m)?;
    }
    let mut t = Table::new(&["m", "epsilon_star"]);
    let mut doc = Vec::new();
    for &m in &a.m {
        let e = breakdown_epsilon(m)?;
        t.push(vec![m.into(), e.into()]);
        doc.push(json!({ "m": m, "epsilon_star": e }));
    }
    Ok(Report { table: t, document: Value::Array(doc) })
}

fn phase(a: &PhaseArgs) -> CmdResult {
    let (ne, nm) = parse_cells(&a.grid)?;
    let eps: Vec<f64> = (0..ne).map(|j| 0.5 * (j as f64 + 0.5) / ne as f64).collect();
    let inv_m: Vec<f64> = (0..nm).map(|i| (i as f64 + 0.5) / nm as f64).collect();
    let q = match a.quantity {
        Quantity::VStar => PhaseQuantity::VStar,
        Quantity::KappaStar => PhaseQuantity::KappaStar,
        Quantity::LambdaStar => PhaseQuantity::LambdaStar,
    };
    let g = phase_grid(q, &eps, &inv_m)?;
    let mut t = Table::new(&["kind", "epsilon", "inv_m", "m", "value"]);
    for (i, row) in g.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let im = g.inv_m_grid[i];
            t.push(vec!["cell".into(), g.epsilon_grid[j].into(), im.into(), (1.0 / im).into(), v.into()]);
        }
    }
    for &(e, i_star) in &g.critical_curve {
        t.push(vec!["critical".into(), e.into(), i_star.into(), (1.0 / i_star).into(), f64::NAN.into()]);
    }
    Ok(Report { table: t, document: to_value(&g) })
}

fn semaps_cmd(a: &SemapsArgs) -> CmdResult {
    check_m(a.m)?;
    check_eps(a.eps)?;
    check_nonempty("mu", &a.mu)?;
    for &mu in &a.mu {
        check_positive("mu", mu)?;
    }
    check_positive("tau-max", a.tau_max)?;
    if a.points < 2 {
        return invalid("--points must be at least 2");
    }
    let kappa = match a.kappa {
        Some(k) => {
            check_positive("kappa", k)?;
            k
        }
        None => default_semaps_kappa(a.m, a.eps)?,
    };
    let s = semaps(a.m, a.eps, &a.mu, kappa, a.tau_max, a.points)?;
    let mut t = Table::new(&["curve", "mu", "tau_sq", "t"]);
    for &x in &s.tau_sq {
        t.push(vec!["identity".into(), f64::NAN.into(), x.into(), x.into()]);
    }
    for (&x, &y) in s.tau_sq.iter().zip(&s.lfse) {
        t.push(vec!["lfse".into(), f64::INFINITY.into(), x.into(), y.into()]);
    }
    for c in &s.proper {
        for (&x, &y) in s.tau_sq.iter().zip(&c.t) {
            t.push(vec!["proper".into(), c.mu.into(), x.into(), y.into()]);
        }
    }
    let fp = s.lfse_fixed_point;
    t.push(vec!["lfse_fixed_point".into(), f64::INFINITY.into(), fp.into(), fp.into()]);
    for c in &s.proper {
        t.push(vec!["proper_fixed_point".into(), c.mu.into(), c.fixed_point.into(), c.fixed_point.into()]);
    }
    Ok(Report { table: t, document: to_value(&s) })
}

fn lambda_mono_cmd(a: &LambdaMonoArgs) -> CmdResult {
    check_nonempty("m", &a.m)?;
    check_nonempty("eps", &a.eps)?;
    for &m in &a.m {
        check_m(m)?;
    }
    for &e in &a.eps {
        check_eps(e)?;
    }
    if a.points < 2 {
        return invalid("--points must be at least 2");
    }
    let entries = lambda_mono(&a.m, &a.eps, a.points);
    let mut t = Table::new(&["m", "epsilon", "kappa_upper", "kappa", "lambda_bar", "increasing", "note"]);
    for e in &entries {
        match &e.curve {
            Some(c) => {
                for (&k, &l) in c.kappa.iter().zip(&c.lambda) {
                    t.push(vec![e.m.into(), e.epsilon.into(), c.kappa_upper.into(), k.into(), l.into(), c.increasing.into(), "".into()]);
                }
            }
            None => t.push(vec![
                e.m.into(),
                e.epsilon.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                false.into(),
                e.note.clone().unwrap_or_default().into(),
            ]),
        }
    }
    Ok(Report { table: t, document: to_value(&entries) })
}

fn table1_cmd(a: &Table1Args) -> CmdResult {
    check_m(a.m)?;
    let rows = table1(a.m, &TABLE1_EPSILONS)?;
    let mut t = Table::new(&["epsilon", "m", "v_star"]);
    for r in &rows {
        t.push(vec![r.epsilon.into(), r.m.into(), r.v_star.into()]);
    }
    Ok(Report { table: t, document: to_value(&rows) })
}

fn table2_cmd(a: &Table2Args) -> CmdResult {
    if a.reps == 0 {
        return invalid("--reps must be at least 1");
    }
    let rows = table2(a.reps, a.seed)?;
    let mut t = Table::new(&["epsilon", "mu", "lambda", "se_estimate", "se_estimate_std_error", "se_predicted", "failures"]);
    for r in &rows {
        t.push(vec![
            r.epsilon.into(),
            r.mu.into(),
            r.lambda.into(),
            r.se_estimate.into(),
            r.se_estimate_std_error.into(),
            r.se_predicted.into(),
            r.failures.into(),
        ]);
    }
    Ok(Report { table: t, document: to_value(&rows) })
}

fn noise_of(eps: f64, mu: f64) -> Result<ContaminationModel, CliError> {
    check_eps(eps)?;
    check_positive("mu", mu)?;
    Ok(if eps == 0.0 { ContaminationModel::gaussian() } else { ContaminationModel::symmetric(eps, mu)? })
}

fn lambda_or_minimax(lambda: Option<f64>, m: f64, eps: f64) -> Result<f64, CliError> {
    match lambda {
        Some(l) => {
            check_positive("lambda", l)?;
            Ok(l)
        }
        None => match minimax(m, eps)?.lambda_star {
            Some(l) => Ok(l),
            None => invalid(format!("(m, eps) = ({m}, {eps}) is past breakdown; pass --lambda")),
        },
    }
}

fn solver_of(s: SolverArg) -> Solver {
    match s {
        SolverArg::InteriorPoint => Solver::InteriorPoint,
        SolverArg::Irls => Solver::Irls,
        SolverArg::Amp => Solver::Amp,
    }
}

fn amp_run(a: &AmpRunArgs) -> CmdResult {
    let noise = noise_of(a.eps, a.mu)?;
    check_positive("tol", a.tol)?;
    let data = match &a.data {
        Some(path) => {
            let f = File::open(path).map_err(|e| CliError::Invalid(format!("cannot open {}: {e}", path.display())))?;
            Dataset::read_csv(BufReader::new(f), noise)?
        }
        None => {
            if !(a.n > a.p && a.p >= 1) {
                return invalid(format!("need n > p >= 1, got n = {}, p = {}", a.n, a.p));
            }
            gen_dataset(a.n, a.p, noise, a.seed)?
        }
    };
    let lambda = lambda_or_minimax(a.lambda, data.m(), a.eps)?;
    if let Some(path) = &a.write_data {
        let f = File::create(path).map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", path.display())))?;
        data.write_csv(f)?;
    }
    let (theta, iterations, converged, r_trace) = match solver_of(a.solver) {
        Solver::Amp => {
            let s = amp_fit(&data, lambda, a.max_iter, a.tol)?;
            (s.theta, s.t, s.converged, s.r_trace)
        }
        Solver::Irls => {
            let f = irls_fit_detailed(&data, lambda, a.max_iter, a.tol)?;
            (f.theta, f.iterations, f.converged, Vec::new())
        }
        Solver::InteriorPoint if lambda.is_finite() => {
            let f = interior_point_fit(&data, lambda, a.max_iter, a.tol)?;
            (f.theta, f.iterations, f.converged, Vec::new())
        }
        Solver::InteriorPoint => return invalid("the interior-point solver needs a finite --lambda"),
    };
    if !converged {
        return Err(CliError::Numerical(format!("solver did not converge in {iterations} iterations")));
    }
    let mse = (&theta - &data.theta0).norm_squared() / data.p() as f64;
    let mut t = Table::new(&["index", "theta_hat", "theta0"]);
    for j in 0..data.p() {
        t.push(vec![(j + 1).into(), theta[j].into(), data.theta0[j].into()]);
    }
    let doc = json!({
        "n": data.n(),
        "p": data.p(),
        "lambda": lambda,
        "solver": to_value(&solver_of(a.solver)),
        "iterations": iterations,
        "converged": converged,
        "objective": objective(&data, &theta, lambda),
        "per_coordinate_mse": mse,
        "contaminated": data.contaminated,
        "r_trace": r_trace,
        "theta_hat": theta.as_slice(),
        "theta0": data.theta0.as_slice(),
    });
    Ok(Report { table: t, document: doc })
}

fn monte_carlo_cmd(a: &MonteCarloArgs) -> CmdResult {
    let noise = noise_of(a.eps, a.mu)?;
    if !(a.n > a.p && a.p >= 1) {
        return invalid(format!("need n > p >= 1, got n = {}, p = {}", a.n, a.p));
    }
    if a.reps == 0 {
        return invalid("--reps must be at least 1");
    }
    check_positive("tol", a.tol)?;
    let m = a.n as f64 / a.p as f64;
    let lambda = lambda_or_minimax(a.lambda, m, a.eps)?;
    let placement = match a.placement {
        PlacementArg::Bernoulli => Placement::Bernoulli,
        PlacementArg::ExactCount => Placement::ExactCount,
    };
    let mut cfg = McConfig::new(a.n, a.p, noise, lambda, a.reps, a.seed).solver(solver_of(a.solver)).placement(placement);
    cfg.tol = a.tol;
    let s = monte_carlo_with(&cfg)?;
    let fp = fixed_point(&SeConfig::fixed_lambda(m, lambda, noise)?)?;
    let mut t = Table::new(&[
        "n",
        "p",
        "epsilon",
        "mu",
        "lambda",
        "reps",
        "failures",
        "per_coordinate_mse",
        "mc_std_error",
        "se_estimate",
        "se_estimate_std_error",
        "se_predicted",
    ]);
    t.push(vec![
        a.n.into(),
        a.p.into(),
        a.eps.into(),
        a.mu.into(),
        lambda.into(),
        s.reps.into(),
        s.failures.into(),
        s.per_coordinate_mse.into(),
        s.mc_std_error.into(),
        s.se_estimate.into(),
        s.se_estimate_std_error.into(),
        fp.avar.sqrt().into(),
    ]);
    let mut doc = to_value(&s);
    doc["lambda"] = to_value(&lambda);
    doc["se_predicted"] = to_value(&fp.avar.sqrt());
    Ok(Report { table: t, document: doc })
}
