fn main() {
    std::process::exit(qdifab::cli::main_with_args(std::env::args_os()));
}
