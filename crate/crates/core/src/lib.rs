//! Multi-objective balanced covering for embedding sets.
//!
//! Given visual embeddings `V` (`N × d`) and prompt embeddings `P`
//! (`L × d`), [`covering::mob_prune`] keeps `K` rows of `V`: `K_p` prompt
//! centers chosen by k-fold nearest-neighbour covering of `P`, and
//! `K − K_p` visual centers chosen by farthest point sampling. Alongside the
//! selector the crate measures prompt-visual coupling with exact Hausdorff
//! distances, evaluates the closed-form error bounds and trade-off floor,
//! and ships brute-force oracles used to check all of the above.

pub mod bounds;
pub mod covering;
pub mod embedding;
pub mod error;
pub mod hausdorff;
pub mod io;
pub mod oracle;
pub mod synth;

pub use covering::{mob_prune, PruneConfig, SelectionResult};
pub use embedding::{EmbeddingSet, IndexList};
pub use error::{MobError, Result};
pub use hausdorff::{coupling, CouplingReport, Metric};
