//! The scalar recursion y <- u y + p (1 - y) and its fixed point.

use symga::experiment::{recursion_limit, recursion_oracle};

fn main() {
    let (u, p) = (0.9, 0.1);
    for k in [0, 10, 50, 100, 500] {
        println!("k = {k:3}: y = {:.12}", recursion_oracle(u, p, 0.0, k));
    }
    println!("limit p / (1 - u + p) = {}", recursion_limit(u, p));
}
