//! Long-time behaviour: straightened velocities, infinite-horizon characteristics and the
//! limiting density profile, plus closed-form solutions for a frozen fluid.

mod history;
pub(crate) mod linalg;
mod linear;
mod moments;
mod picard;
mod profile;
mod straighten;

pub use history::{FrozenHistory, SpatialEval, VelocityHistory, VelocitySample, TAIL_SWITCH_RATIO};
pub use linear::{linear_asymptotic_profile, linear_density, linear_solution, velocity_nodes};
pub use moments::{adaptive_simpson, moment_bound_check, moment_integral, MomentBoundReport, MomentBoundRow};
pub use picard::{
    contraction_constant, jacobian_a, limit_position, picard_y_infinity, CharacteristicPath, JacobianReport,
    LimitPoint, PicardOptions,
};
pub use profile::{rho_infinity, rho_infinity_pushforward, ProfileOptions, ProfileResult, PushforwardResult};
pub use straighten::{straightening_map, JacobianMethod, StraightenOptions, Straightening};
