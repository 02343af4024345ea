fn main() { std::process::exit(causal_attn_cli::run(std::env::args().skip(1).collect())); }
