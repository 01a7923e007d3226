//! Value-function approximators: the goal-gated controller network and the
//! tabular meta-controller values.

mod gaussian;
mod meta_table;
mod net;

pub use gaussian::{GaussianCoder, ACTIVATION_FLOOR};
pub use meta_table::{MetaDiscount, MetaQTable, META_TABLE_FORMAT_VERSION};
pub use net::{
    kwta, sigmoid, CheckpointManifest, ForwardPass, NetConfig, RowActivity, StateCoding, StateGoalNet,
    CHECKPOINT_FORMAT_VERSION, KWTA_SUPPRESSED,
};
