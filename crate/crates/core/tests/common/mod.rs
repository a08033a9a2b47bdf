//! Oracles and property checks shared by the integration tests.
#![allow(dead_code)]

pub mod gradcheck;
pub mod oracle;
pub mod props;
