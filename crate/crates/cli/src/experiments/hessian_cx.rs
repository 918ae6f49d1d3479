use quantflow::hessian::{counterexample_value_on, CounterexampleSpec, COUNTEREXAMPLE_GRID};

use super::num;
use crate::config::Config;
use crate::error::CliError;
use crate::report::Outputs;

pub fn run(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let epsilons = cfg.f64_list("epsilon", &[0.1])?;
    let mut deltas = cfg.f64_list("delta", &[1e-3, 1e-4, 1e-5])?;
    let grid = cfg.usize("grid", COUNTEREXAMPLE_GRID)?;
    let tolerance = cfg.f64("tolerance", 0.05)?;
    deltas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let specs = epsilons
        .iter()
        .map(|&e| {
            deltas
                .iter()
                .map(|&d| CounterexampleSpec::new(e, d))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    cfg.finish("hessian-cx")?;

    let mut rows = Vec::new();
    let mut all_negative = true;
    for sweep in &specs {
        let mut last = None;
        for spec in sweep {
            let value = counterexample_value_on(spec, grid)?;
            all_negative &= value < 0.0;
            rows.push(vec![num(spec.epsilon()), num(spec.delta()), num(value), num(spec.limit())]);
            last = Some((spec, value));
        }
        let (spec, value) = last.expect("at least one delta");
        let rel = ((value - spec.limit()) / spec.limit()).abs();
        let eps = spec.epsilon();
        out.metric(&format!("eps{eps}_value_at_smallest_delta"), value);
        out.metric(&format!("eps{eps}_limit"), spec.limit());
        out.at_most(&format!("eps{eps}_relative_error"), rel, tolerance);
    }
    out.flag("all_values_negative", all_negative);
    out.csv("hessian_cx.csv", &["epsilon", "delta", "hessian_value", "limit_value"], rows)?;
    Ok(())
}
