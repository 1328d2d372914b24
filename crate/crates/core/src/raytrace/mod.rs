//! Bicharacteristics of `P(x, ξ) = |ξ|²_{g*}` and quantities carried by them.

pub mod cone;
pub mod flow;
pub mod jacobi;
pub mod transport;

pub use cone::{earliest_obs, forward_light_cone, write_rays_csv, ObservationSet, ObserverHit, ObserverTube};
pub use flow::{hamilton_flow, hamilton_flow_with, p_defect, FlowOptions, PhasePoint, RaySample, RayTrajectory};
pub use jacobi::{first_conjugate_parameter, jacobi_fields, JacobiSample};
pub use transport::{transport_amplitude, AmplitudeSample};
