fn main() {
    std::process::exit(subspace_bounds::cli::main_with_env());
}
