use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: String,
    },
    #[error("no positive equilibrium: {0}")]
    NoPositiveEquilibrium(String),
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("envelope construction not needed: {0}")]
    EnvelopeNotNeeded(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("block dominance violated: {0}")]
    A1bViolation(String),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        what: String,
        iterations: usize,
        residual: f64,
    },
    #[error("linearization at 0 is not unstable: s(f'(0)) = {0}")]
    Monostability(f64),
    #[error("critical speed scan failed: {0}")]
    ScanFailure(String),
    #[error("speed {c} is not above the critical speed {c_star}")]
    SpeedBelowCritical { c: f64, c_star: f64 },
    #[error("domain too short: {0}")]
    DomainTooShort(String),
    #[error("relaxation collapsed: {0}")]
    DegenerateLimit(String),
    #[error("grid must be extended: {0}")]
    ExtendGrid(String),
    #[error("timestep {dt} exceeds the order-preserving bound {bound}")]
    Timestep { dt: f64, bound: f64 },
    #[error("state left the admissible box at node {node}, component {component}: value {value}")]
    Stability {
        node: usize,
        component: usize,
        value: f64,
    },
    #[error("ordering violated by {excess:.3e} at node {node}, component {component}, t = {time}")]
    SchemeMonotonicity {
        node: usize,
        component: usize,
        time: f64,
        excess: f64,
    },
    #[error("construction failed: {what} margin {margin:.3e} at x = {x}, t = {t}")]
    ConstructionFailure {
        what: String,
        margin: f64,
        x: f64,
        t: f64,
    },
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 2 hypothesis, 3 numerical verification, 4 config.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) | Error::InvalidParameter { .. } => 4,
            Error::NoPositiveEquilibrium(_)
            | Error::AssumptionViolation(_)
            | Error::EnvelopeNotNeeded(_)
            | Error::A1bViolation(_)
            | Error::Monostability(_)
            | Error::SpeedBelowCritical { .. }
            | Error::HypothesisViolation(_) => 2,
            Error::Io { .. } | Error::Serialize(_) => 1,
            _ => 3,
        }
    }
}
