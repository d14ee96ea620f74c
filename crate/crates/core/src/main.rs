fn main() {
    std::process::exit(hopfield_md::cli::main_with_args(std::env::args_os()));
}
