use thiserror::Error;

use crate::pmap::Point;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("word {0} does not use x0")]
    DoesNotUseX0(String),

    #[error("trivial word where a nontrivial one is required")]
    TrivialWord,

    #[error("injectivity violated: {0}")]
    Injectivity(String),

    #[error("atom block {0} uses x0")]
    MalformedAtom(String),

    #[error("generator x{gen} has no map bound to it ({bound} maps available)")]
    UnboundGenerator { gen: u32, bound: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("candidate stream exhausted while extending at {0}")]
    CandidatesExhausted(Point),

    #[error("map is not an isomorphism on the window: {0}")]
    NotAnIsomorphism(String),

    #[error("conditions do not share a class key")]
    MixedClassKeys,

    #[error("extension strategy broke its contract: {0}")]
    Strategy(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
