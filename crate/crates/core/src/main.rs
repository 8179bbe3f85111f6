fn main() {
    std::process::exit(symattn::cli::run(std::env::args_os()));
}
