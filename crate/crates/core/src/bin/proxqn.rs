fn main() { proxqn::cli::main() }
