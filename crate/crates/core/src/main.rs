fn main() {
    std::process::exit(euler_line::cli::main_with_args(std::env::args_os()));
}
