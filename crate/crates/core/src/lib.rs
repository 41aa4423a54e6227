//! Tree-size complexity of two- to four-qubit pure states: SLOCC
//! classification, exact tree sizes with minimal trees, approximate tree
//! size by overlap optimization, and mixed-state bounds for the
//! generalized Werner family.

pub mod abcd;
pub mod approx;
pub mod error;
pub mod linalg;
pub mod mixed;
pub mod par;
pub mod slocc;
pub mod state;
pub mod tree;
pub mod treesize;

pub use error::{Error, Result};
pub use state::{DensityMatrix, Ilo, PureState};
pub use tree::{LeafAmp, Tree, TreeNode, TreeShape};
pub use treesize::{Method, TsResult};
