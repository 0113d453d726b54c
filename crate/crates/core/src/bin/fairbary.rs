fn main() {
    std::process::exit(fairbary::cli::main_with_args(std::env::args_os()));
}
