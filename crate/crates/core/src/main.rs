fn main() {
    std::process::exit(ddgate::cli::main_with_args(std::env::args_os()));
}
