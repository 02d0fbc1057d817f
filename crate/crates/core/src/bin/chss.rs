fn main() {
    std::process::exit(camassa_selfsim::cli::main_with_args(std::env::args_os()));
}
