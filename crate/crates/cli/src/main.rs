fn main() {
    std::process::exit(mirage_cli::main_with_args(std::env::args_os()));
}
