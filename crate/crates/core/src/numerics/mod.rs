//! Exact rationals, rational intervals, certified base-2 logarithms and the
//! bound functions `J` and `f`.

mod interval;
mod log;
mod rational;
mod sets;

pub use interval::{iv_arith, Interval, IntervalOp};
pub use log::{eval_f, eval_f_prec, eval_j, f_f64, f_interval, j_f64, j_interval, log2_enclosure, log2_interval};
pub use rational::{q, Rational};
pub use sets::{CylinderSet, IntervalSet, Piece};
