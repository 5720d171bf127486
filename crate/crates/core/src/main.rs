fn main() {
    std::process::exit(fefm::cli::run(std::env::args_os()));
}
