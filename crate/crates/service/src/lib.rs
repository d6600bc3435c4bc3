//! Real-time shared-autonomy sessions over websockets.
//!
//! A connection to `/session` gets its own environment, stepped at a fixed
//! tick rate. Each tick the held pilot input (or a surrogate pilot) is passed
//! through the copilot and the resulting state is broadcast as JSON.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, ProtocolError, ServerMessage, PROTOCOL_VERSION};
pub use server::{router, serve};
pub use session::{PilotMode, Session, SessionSetup};
