pub mod algebra;
pub mod model;
pub mod noise;
pub mod sequences;
pub mod propagation;
pub mod analytics;
pub mod ensemble;
pub mod cli;
