//! Test support shared by the ssc crates: a seeded model generator,
//! independent oracles, and the auditor mutation set.

pub mod gen;
pub mod mutate;
pub mod oracle;

pub use gen::{generate_graph_model, generate_model};
pub use mutate::{mutation_set, Mutation};
pub use oracle::{cyclic_functions, naive_eval, to_cents};

/// The Trading and Profit and Loss Account fixture source.
pub const TRADING_PL: &str = include_str!("../../../fixtures/trading_pl.ssm");
