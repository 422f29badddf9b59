pub mod adam;
pub mod gradcheck;
pub mod gumbel;
pub mod mlp;
