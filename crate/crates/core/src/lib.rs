//! Exact computation and verification engine for the twisted Gromov–Witten
//! theory of O(3) over P² at the mirror point: Picard–Fuchs data, the
//! R-matrix, Γ₀(3) quasi-modular forms, the Givental–Teleman graph sum and the
//! holomorphic anomaly equation, all over exact rationals.

pub mod anomaly;
pub mod check;
pub mod graph_sum;
pub mod intersections;
pub mod linalg;
pub mod mirror;
pub mod modular;
pub mod rmatrix;
pub mod series;
