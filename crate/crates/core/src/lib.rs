//! Channel models, link evaluation and deployment optimizers for networks
//! aided by intelligent reflecting surfaces (IRS).

pub mod deploy;
pub mod error;
pub mod fieldtrial;
pub mod irs;
pub mod link;
pub mod propagation;
pub mod routing;

pub use error::{Error, Result};
