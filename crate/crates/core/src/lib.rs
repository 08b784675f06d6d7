pub mod convexset;
pub mod embed;
pub mod error;
pub mod harmonics;
pub mod hypgroup;
pub mod par;
pub mod prinseries;
pub mod quadspace;
pub mod simcocycle;
pub mod treerep;

pub use error::{Error, Result};
