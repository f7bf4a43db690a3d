fn main() {
    std::process::exit(simlab::cli::main_with_args(std::env::args_os()));
}
