use qpg_core::{
    classical_payoff_table, closed_form_payoff, contribution_of, deviation_search, expected_trials, plan_heterogeneous,
    check_voluntary, ContributionPlan, CostQuery, DeviationReport, EntanglementScheme, Engine, Error, Estimate,
    GameSpec, Interpretation, Method, PayoffReport, Result, VoluntaryCheck,
};
use serde::Serialize;

use crate::config::{RunConfig, StrategyConfig};

/// Payoffs count as operator-independent below this.
pub const INDEPENDENCE_TOL: f64 = 1e-9;

/// Pure-profile outcome lists longer than this are left out of reports.
const MAX_LISTED_OUTCOMES: usize = 1 << 12;

/// A command result: JSON payload plus the rows used for CSV output.
pub struct Output {
    pub json: serde_json::Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn output<T: Serialize>(payload: &T, header: Vec<String>, rows: Vec<Vec<String>>) -> Output {
    Output {
        json: serde_json::to_value(payload).expect("report payloads serialize"),
        header,
        rows,
    }
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |k| format!("{prefix}_{k}"))
}

/// Shortest round-trip form, switching to exponent notation for tiny values.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn cells(values: &[f64]) -> impl Iterator<Item = String> + '_ {
    values.iter().map(|v| num(*v))
}

#[derive(Serialize)]
struct TableRow {
    outcome: String,
    contributions: Vec<f64>,
    payoffs: Vec<f64>,
}

/// Classical game: one bit per player, 0 = contribute.
pub fn payoff_table(config: &RunConfig) -> Result<Output> {
    config.game()?;
    let spec = GameSpec::new(
        config.a,
        config.endowments(),
        Interpretation::Direct,
        EntanglementScheme::Full,
        None,
    )?;
    let layout = qpg_core::build_layout(EntanglementScheme::Full, config.n)?;
    let mut rows = Vec::new();
    for (bits, payoffs) in classical_payoff_table(&spec, &layout)? {
        let contributions = (0..spec.n())
            .map(|k| contribution_of(k, &bits, &spec, &layout))
            .collect::<Result<Vec<_>>>()?;
        rows.push(TableRow {
            outcome: bits.to_string(),
            contributions,
            payoffs,
        });
    }
    let n = spec.n();
    let header = std::iter::once("outcome".to_string())
        .chain(indexed("contribution", n))
        .chain(indexed("payoff", n))
        .collect();
    let csv = rows
        .iter()
        .map(|r| {
            std::iter::once(r.outcome.clone())
                .chain(cells(&r.contributions))
                .chain(cells(&r.payoffs))
                .collect()
        })
        .collect();
    Ok(output(&serde_json::json!({ "rows": rows }), header, csv))
}

#[derive(Serialize)]
struct OutcomeRow {
    outcome: String,
    probability: f64,
    payoffs: Vec<f64>,
}

#[derive(Serialize)]
struct Simulation {
    #[serde(flatten)]
    report: PayoffReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    outcomes: Option<Vec<OutcomeRow>>,
}

pub fn simulate(config: &RunConfig, engine: &Engine) -> Result<Output> {
    let (spec, layout) = config.game()?;
    let profile = config.profile(&layout)?;
    let report = engine.expected_payoffs(&profile, &spec, &layout, config.method())?;
    let is_pure = profile.iter().all(|m| m.support().len() == 1);
    let outcomes = if is_pure && config.method() == Method::Exact {
        let pure: Vec<_> = profile.iter().map(|m| m.support()[0].clone()).collect();
        let dist = engine.run_pure(&pure, &spec, &layout)?;
        if dist.len() <= MAX_LISTED_OUTCOMES {
            let rows = dist
                .iter()
                .map(|(bits, probability)| {
                    Ok(OutcomeRow {
                        outcome: bits.to_string(),
                        probability,
                        payoffs: qpg_core::payoff_vector(bits, &spec, &layout)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(rows)
        } else {
            None
        }
    } else {
        None
    };
    let std_error = match &report.estimate {
        Estimate::MonteCarlo { std_error, .. } => Some(std_error.clone()),
        Estimate::Exact => None,
    };
    let rows = report
        .expected
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let se = std_error.as_ref().map_or(String::new(), |s| num(s[k]));
            vec![k.to_string(), num(*p), se]
        })
        .collect();
    let header = ["player", "expected", "std_error"].map(String::from).to_vec();
    Ok(output(&Simulation { report, outcomes }, header, rows))
}

#[derive(Serialize)]
struct Equilibrium {
    closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_note: Option<String>,
    baseline: Vec<f64>,
    tolerance: f64,
    max_abs_deviation: f64,
    best_response_gap: f64,
    payoff_independent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    matches_closed_form: Option<bool>,
    deviations: Vec<DeviationReport>,
}

pub fn equilibrium(config: &RunConfig, engine: &Engine) -> Result<Output> {
    let (spec, layout) = config.game()?;
    let profile = config.profile(&layout)?;
    let baseline = engine.expected_payoffs(&profile, &spec, &layout, Method::Exact)?.expected;

    let homogeneous = spec.endowments().iter().all(|&y| y == 1.0) && spec.contribution_caps().is_none();
    let (closed_form, closed_form_note) = if config.strategy != StrategyConfig::PaperMixture {
        (None, Some("closed forms describe the canonical mixture only".to_string()))
    } else if !homogeneous {
        (None, Some("closed forms assume unit endowments".to_string()))
    } else {
        match closed_form_payoff(spec.scheme(), spec.interpretation(), spec.n(), spec.a()) {
            Ok(v) => (Some(v), None),
            Err(e @ (Error::NoClosedForm(_) | Error::InvalidArgument(_))) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        }
    };

    let players: Vec<usize> = match config.deviation.player {
        Some(p) if p >= spec.n() => return Err(Error::InvalidArgument(format!("deviator {p} out of range"))),
        Some(p) => vec![p],
        None => (0..spec.n()).collect(),
    };
    let search = config.search();
    let deviations = players
        .iter()
        .map(|&k| deviation_search(engine, &spec, &layout, &profile, k, &search))
        .collect::<Result<Vec<_>>>()?;
    let max_abs_deviation = deviations.iter().map(DeviationReport::max_abs_deviation).fold(0.0, f64::max);
    let best_response_gap = deviations.iter().map(|d| d.max_gain.max(0.0)).fold(0.0, f64::max);
    let matches_closed_form = closed_form.map(|c| baseline.iter().all(|b| (b - c).abs() < INDEPENDENCE_TOL));

    let rows = deviations
        .iter()
        .map(|d| {
            vec![
                d.player.to_string(),
                num(d.baseline),
                num(d.max_gain),
                num(d.min_gain),
                num(d.max_abs_deviation()),
                d.evaluated.to_string(),
            ]
        })
        .collect();
    let header = ["player", "baseline", "max_gain", "min_gain", "max_abs_deviation", "evaluated"]
        .map(String::from)
        .to_vec();
    let report = Equilibrium {
        closed_form,
        closed_form_note,
        baseline,
        tolerance: INDEPENDENCE_TOL,
        max_abs_deviation,
        best_response_gap,
        payoff_independent: max_abs_deviation < INDEPENDENCE_TOL,
        matches_closed_form,
        deviations,
    };
    Ok(output(&report, header, rows))
}

#[derive(Serialize)]
struct Plan {
    plan: ContributionPlan,
    voluntary: VoluntaryCheck,
}

pub fn plan(config: &RunConfig) -> Result<Output> {
    let (spec, _) = config.game()?;
    let plan = plan_heterogeneous(spec.endowments(), spec.a())?;
    let voluntary = check_voluntary(&plan, &spec)?;
    let rows = (0..spec.n())
        .map(|k| {
            vec![
                k.to_string(),
                num(spec.endowments()[k]),
                num(plan.contributions[k]),
                num(voluntary.margins[k]),
            ]
        })
        .collect();
    let header = ["player", "endowment", "contribution", "margin"].map(String::from).to_vec();
    Ok(output(&Plan { plan, voluntary }, header, rows))
}

#[derive(Serialize)]
struct SchemeCost {
    scheme: EntanglementScheme,
    trials: f64,
}

#[derive(Serialize)]
struct Cost {
    n: usize,
    beta: f64,
    scheme: EntanglementScheme,
    trials: f64,
    all_schemes: Vec<SchemeCost>,
}

pub fn cost(config: &RunConfig) -> Result<Output> {
    config.game()?;
    let beta = config
        .beta
        .ok_or_else(|| Error::InvalidArgument("the cost model needs \"beta\" in the config".into()))?;
    let query = |scheme| expected_trials(CostQuery { scheme, n: config.n, beta });
    let all_schemes = [EntanglementScheme::Full, EntanglementScheme::AllPairs, EntanglementScheme::NeighborRing]
        .into_iter()
        .map(|scheme| Ok(SchemeCost { scheme, trials: query(scheme)? }))
        .collect::<Result<Vec<_>>>()?;
    let rows = all_schemes
        .iter()
        .map(|c| vec![c.scheme.name().to_string(), num(c.trials)])
        .collect();
    let report = Cost {
        n: config.n,
        beta,
        scheme: config.scheme,
        trials: query(config.scheme)?,
        all_schemes,
    };
    Ok(output(&report, vec!["scheme".into(), "trials".into()], rows))
}
