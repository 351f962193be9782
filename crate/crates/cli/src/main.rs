fn main() { println!("loewner"); }
