pub mod cli;
pub mod explorer;
pub mod rational;
pub mod reductions;
pub mod sampler;
pub mod semantics;
pub mod syntax;
