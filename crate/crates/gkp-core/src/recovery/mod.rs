//! Recovery channels.

pub mod sdp;
