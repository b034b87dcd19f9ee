//! The live game service: wire protocol, room state machine, privacy
//! audit, message-log replay and the websocket server.

pub mod audit;
pub mod protocol;
pub mod replay;
pub mod room;
pub mod server;
