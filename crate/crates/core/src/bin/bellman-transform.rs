fn main() {
    std::process::exit(bellman_transform::cli::main_with_args(std::env::args_os()));
}
