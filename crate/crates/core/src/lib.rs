//! Discrete-event simulation and scaling analysis of superconducting
//! optoelectronic spiking networks.

pub mod cli;
pub mod devices;
pub mod engine;
pub mod layout;
pub mod photonics;
pub mod time;
pub mod scaling;
pub mod topology;
