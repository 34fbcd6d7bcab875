//! Prints the 1200-square block dictionary (120x100 grid) as JSON.
//!
//! `cargo run -p shapecomp-cli --example block_dictionary > blocks.json`

use shapecomp_cli::dictionary::{default_block_grid, render_dictionary};

fn main() {
    print!("{}", render_dictionary(&default_block_grid()));
}
