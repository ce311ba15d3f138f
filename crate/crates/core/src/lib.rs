//! Throughput bounds, product-form verification and discrete-event simulation
//! for dispatcher-driven load balancing with a strict queue limit.

pub mod analytic;
pub mod productform;
pub mod schemes;
pub mod simcore;
