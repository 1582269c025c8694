fn main() {
    std::process::exit(kacsim::cli::main_with_args(std::env::args_os()));
}
