pub mod gen;
pub mod rd_oracle;
