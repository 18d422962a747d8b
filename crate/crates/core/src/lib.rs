pub mod group;
pub mod rational;
pub mod region;
pub mod tower;
pub mod constructions;
pub mod diamond;
pub mod koopman;
pub mod spectral;
pub mod poisson;
pub mod workbench;
