fn main() {
    std::process::exit(rsma_isac::cli::main_with_args(std::env::args_os()));
}
