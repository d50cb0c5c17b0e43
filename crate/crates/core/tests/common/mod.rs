#![allow(dead_code)]

pub mod gradcheck;
pub mod auc_oracle;
pub mod dice_oracle;
pub mod polar_suite;
pub mod reference_tables;
