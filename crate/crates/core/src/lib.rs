pub mod chain;
pub mod clock;
pub mod lifecycle;
pub mod mock;
pub mod node;
pub mod oracle;
pub mod session;
pub mod snapshot;
