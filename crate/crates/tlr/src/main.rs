fn main() {
    std::process::exit(tlr::cli::main_with_args(std::env::args_os()));
}
