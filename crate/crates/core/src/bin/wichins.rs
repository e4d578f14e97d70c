fn main() {
    std::process::exit(wichins::cli::main_with_args(std::env::args_os()));
}
