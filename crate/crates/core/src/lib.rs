pub mod cli;
pub mod compare;
pub mod engine;
pub mod generate;
pub mod model;
pub mod oracle;
pub mod scenario_io;
