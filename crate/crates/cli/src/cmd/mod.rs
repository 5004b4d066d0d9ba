pub mod convert;
pub mod eval;
pub mod f0prep;
pub mod toy;
pub mod train;
pub mod wavelet;
