pub mod qp_oracle;
pub mod rank_oracle;
