pub mod certifier;
pub mod error;
pub mod fracops;
pub mod grid;
pub mod gronwall;
pub mod io;
pub mod mlf;
pub mod picard;
pub mod problem;
pub mod solution_ops;
pub mod special;
pub mod trajectory;

pub use error::{Error, Result};
