pub mod basegeo;
pub mod bundle;
pub mod commands;
pub mod exterior;
pub mod fieldexpr;
pub mod kkcurv;
pub mod liealg;
pub mod registry;
pub mod samples;
pub mod structure;
