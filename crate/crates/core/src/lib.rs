//! Storage codes for distributed storage systems with one super node that
//! stores two coded blocks: finite-field arithmetic, the three code
//! constructions, exact repair with bandwidth accounting, analytical bounds,
//! availability analysis and a shard-file store.

pub mod availability;
pub mod bounds;
pub mod code;
pub mod error;
pub mod field;
pub mod matrix;
pub mod repair;
pub mod schemes;
pub mod store;

pub use code::{
    check_mds, collect, encode, BlockId, CodeCoefficients, CodedStripe, Collector, MdsReport, NodeId, NodeLayout,
    Stripe, SystemParams,
};
pub use error::{Error, Result};
pub use field::{FieldElement, PrimeField};
pub use matrix::Mat;
pub use repair::{
    repair_double, repair_parity, repair_single, repair_super, verify_plan, BandwidthReport, Parity, RepairMethod,
    RepairOutcome, RepairPlan,
};
pub use schemes::{
    build_scheme_a, build_scheme_b_53, build_scheme_c_64, parity_viewpoint, search_projections,
    verify_constraints, ConstraintReport, ParityViewpoint, SchemeId, SchemeInstance, SearchConfig,
};
