fn main() {
    std::process::exit(slicesched::cli::main_with_args(std::env::args_os()));
}
