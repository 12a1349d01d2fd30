//! Constructive tools for dense, strongly independent families of
//! permutations of the naturals.
//!
//! * [`words`]: reduced free-group words and their block/atom decompositions.
//! * [`pmap`]: finite partial bijections and lazily realized permutations.
//! * [`itinerary`]: itineraries of words with respect to partial maps.
//! * [`structures`]: inductively flexible structures and their extension families.
//! * [`independence`]: collision-avoiding extension and dense families.
//! * [`generic`]: the condition poset and a countable generic-filter engine.
//! * [`files`]: text formats for families and isomorphism fragments.

pub mod error;
pub mod files;
pub mod generic;
pub mod independence;
pub mod itinerary;
pub mod pmap;
pub mod structures;
pub mod words;

pub use error::{CoreError, Result};
pub use files::{FamilyFile, IsoFile};
pub use generic::{Condition, FilterRun, Handle, Requirement};
pub use independence::{FamilyBuilder, StrongIndependenceReport};
pub use itinerary::{Itinerary, Slot};
pub use pmap::{FiniteSupportPerm, LazyPermutation, PartialBijection, Point, PointMap};
pub use structures::{FlexibleStructure, Structure, StructureDescriptor, StructureKind};
pub use words::{Atom, AtomSequence, Letter, Word};
