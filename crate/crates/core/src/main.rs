fn main() {
    std::process::exit(econfit::cli::run(std::env::args_os()));
}
