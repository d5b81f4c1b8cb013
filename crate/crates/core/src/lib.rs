pub mod bounds;
pub mod graph;
pub mod hypothesis;
pub mod io;
pub mod numeric;
pub mod rules;
pub mod sim;
