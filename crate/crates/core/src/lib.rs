pub mod amp;
pub mod error;
pub mod lfse;
pub mod noise;
pub mod normal;
pub mod roots;
pub mod scalar;
pub mod state_evolution;
pub mod tables;
