pub mod compiler;
pub mod io;
pub mod levels;
pub mod protocols;
pub mod pulse;
pub mod spin;
pub mod zcosy;
