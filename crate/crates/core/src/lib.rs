pub mod config;
pub mod dtmf;
pub mod gateway;
pub mod jam;
pub mod link;
pub mod phy;
pub mod pulse;
pub mod session;
pub mod signal;
pub mod wav;

pub use signal::SampleBuffer;
