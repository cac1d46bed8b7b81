fn main() {
    std::process::exit(tvp_sparse::cli::main_with_args(std::env::args_os()));
}
