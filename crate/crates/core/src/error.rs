use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies on an interface")]
    AmbiguousPoint { x: f64, y: f64 },

    #[error("geometry hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("degenerate cut: piece covers only {ratio:e} of the element area")]
    DegenerateCut { ratio: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("triple point ({x}, {y}) lies outside the element")]
    TriplePointOutside { x: f64, y: f64 },

    #[error("degenerate polygon with area {area:e}")]
    DegeneratePolygon { area: f64 },

    #[error("singular local IFE system (pivot {pivot:e}): {detail}")]
    SingularLocalSystem { pivot: f64, detail: String },

    #[error("point ({x}, {y}) lies outside the element")]
    PointOutsideElement { x: f64, y: f64 },

    #[error("solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("problem has no exact solution attached")]
    MissingExactSolution,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("element {element}: {source}")]
    Element {
        element: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_element(self, element: usize) -> Error {
        match self {
            e @ Error::Element { .. } => e,
            other => Error::Element {
                element,
                source: Box::new(other),
            },
        }
    }
}
