pub mod numcore;
pub mod roadgraph;
pub mod dataset;
pub mod sstgcn;
pub mod training;
