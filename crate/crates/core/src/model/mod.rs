//! Physical building blocks: Pauli strings, gate parameters, the local
//! gates and the dense Lindblad generator.

pub mod gate;
pub mod lindblad;
pub mod network;
pub mod params;
pub mod pauli;

pub use gate::{boundary_gate, build_gate, two_site_operator, LocalGate};
pub use lindblad::{lindblad_apply, lindblad_superoperator, DENSE_MAX_SITES};
pub use network::{Boundary, NetworkConfig};
pub use params::{Coeff, ParamSet, Part, Slot};
pub use pauli::Pauli;
