pub mod hardness;
pub mod lce;
pub mod regret;
pub mod selfplay;
pub mod verify;
