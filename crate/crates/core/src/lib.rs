pub mod formula;
mod gf2_moduli;
pub mod gf2hash;
pub mod encoder;
pub mod oracle;
pub mod counters;
pub mod auditors;
