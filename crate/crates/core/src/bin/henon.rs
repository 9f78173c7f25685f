fn main() {
    std::process::exit(henon_core::cli::main_with_args(std::env::args_os()));
}
