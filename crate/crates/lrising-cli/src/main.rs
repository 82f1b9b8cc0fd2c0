fn main() {
    std::process::exit(lrising_cli::main_with_args(std::env::args_os()));
}
