fn main() {
    std::process::exit(twofold::cli::main_with_args(std::env::args_os()));
}
