// Assumption checks for every bundled model.

use entire_fronts::checker::{verify_assumptions, AssumptionSuite};
use entire_fronts::config::build_model;
use entire_fronts::config::ModelConfig;
use entire_fronts::model::GKind;
use entire_fronts::Result;

pub fn run_example() -> Result<Vec<AssumptionSuite>> {
    let configs = [
        ModelConfig::Fisher { d: 1.0, r: 1.0 },
        ModelConfig::Buffered { d1: 1.0, d2: 1.0, k1: 1.0, k2: 0.5, b: 1.0 },
        ModelConfig::Epidemic { d1: 1.0, d2: 1.0, gamma: 1.0, beta: 1.0, g: GKind::G2, omega: 3.0, nu: 1.0 },
        ModelConfig::Population { d1: 1.0, d2: 1.0, r1: 2.0, r2: 1.0, alpha: 1.0, delta: 1.0 },
    ];
    let mut suites = Vec::new();
    for c in &configs {
        let (m, env) = build_model(c)?;
        let suite = verify_assumptions(&m, env.as_ref(), 2000, 7);
        println!("{}", suite.table());
        suites.push(suite);
    }
    Ok(suites)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
