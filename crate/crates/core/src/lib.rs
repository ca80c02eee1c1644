//! Exact combinatorics of broken lines: linear preorders and amalgams, the
//! coordinates `Rep(I)`, universal families, constructible and global sheaves,
//! the twisted arrow category with Day convolution, and a numerical gradient
//! flow demo.

pub mod acceptance;
pub mod ext;
pub mod family;
pub mod fiber_product;
pub mod line;
pub mod linalg;
pub mod morse;
pub mod oracle;
pub mod order;
pub mod rep;
pub mod sheaf;
pub mod tw;

pub use ext::{Ext, Q};
pub use family::{SampledFamily, Sample};
pub use fiber_product::Configuration;
pub use line::{BrokenLine, LineIso, LinePoint, MarkedLine};
pub use linalg::{LinMap, Matrix, NonunitalAlgebra};
pub use morse::{MorseConfig, SurfaceModel};
pub use order::{Amalgam, ConvexEquiv, LinOrder, LinPreorder, OrderMorphism};
pub use rep::RepPoint;
pub use sheaf::{ConstructibleSheaf, GlobalSheaf};
pub use tw::{TwCategory, TwFunctor, TwMorphism, TwObject};
