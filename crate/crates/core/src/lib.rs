pub mod graph;
pub mod solver;
pub mod pattern;
pub mod expansion;
pub mod matcher;
pub mod dsl;
pub mod catalog;
