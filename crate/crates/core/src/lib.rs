pub mod gaugeforms;
pub mod linalg;
pub mod ncengine;
pub mod par;
pub mod rmx;
pub mod scalar;
pub mod tensor;
pub mod twistoralg;
