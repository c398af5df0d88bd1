//! Finite-scale engine for localization relations, largeness transfer,
//! creature calculus and exact measure arithmetic.

pub mod constructions;
pub mod creatures;
pub mod finsets;
pub mod gen;
pub mod largeness;
pub mod localizers;
pub mod measure;
pub mod relations;
pub mod suite;

pub use creatures::{ConditionFragment, Creature, NiceNorm, PairCondition};
pub use gen::Gen;
pub use measure::{ExactRational, LSequence, McRate, NameModel};
pub use finsets::{BlockFamily, IntervalPartition, WSet, Window};
pub use largeness::FamilyUniverse;
pub use localizers::{KTree, Slalom};
pub use relations::{FiniteRelationInstance, QuantifierReport};
pub use suite::{ExperimentConfig, SuiteName, SuiteReport};
