fn main() {
    std::process::exit(dcnmf::cli::main_with_args(std::env::args_os()));
}
