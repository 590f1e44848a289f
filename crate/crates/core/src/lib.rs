//! Quality-guided generative label aggregation.
//!
//! Labeling functions (LFs) vote on unlabeled instances, optionally with a
//! confidence score. The CAGE model combines per-class discrete potentials
//! with Beta potentials on scores, and is trained on unlabeled data by
//! maximizing the marginal likelihood plus a regularizer built from the
//! user's quality guides.
//!
//! ```
//! use cage::model::lf::LfSpec;
//! use cage::model::params::ModelParams;
//! use cage::model::cage::posterior;
//!
//! let lfs = vec![LfSpec::discrete("kw_refund", 1), LfSpec::continuous("sim_spam", 2)];
//! let mut params = ModelParams::zeros(2, 2);
//! params.theta[0] = vec![1.0, -1.0];
//! let post = posterior(&params, &lfs, &[1, 0], &[0.0, 0.0]).unwrap();
//! assert_eq!(post.prediction, 1);
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod model;
pub mod parallel;
pub mod special;
pub mod training;
pub mod variants;

pub use error::InputError;
pub use model::lf::LfSpec;
pub use model::observations::ObservationSet;
pub use model::params::ModelParams;
pub use model::posterior::LabelPosterior;
pub use parallel::Parallelism;
pub use training::{fit, GuideMode, InitScheme, TrainConfig};
pub use variants::{TrainedModel, VariantId};
