//! Closed-form and quadrature evaluation of the limit laws.

pub mod brightness;
pub mod lambda;
pub mod product;
pub mod quadrature;
pub mod step;
pub mod tau;

pub use brightness::{brightness_constant, rim_brightness_constant};
pub use lambda::{lambda_from_ladders, LambdaEstimate};
pub use product::{
    arccos_survival, product_survival, product_survival_defect, product_tail_constant,
    product_tail_constant_closed, ArccosineLaw, TailConstant,
};
pub use step::{
    second_moment, step_survival, step_survival_3d, step_tail_constant, step_tail_limit,
    truncated_second_moment, SecondMoment,
};
pub use tau::{
    rho_infty, tau_infty, tau_infty_indicator_mc, tau_infty_mc, tau_infty_rotated, McEstimate,
    OffsetDisc, Region,
};
