fn main() {
    std::process::exit(tempora::cli::run(std::env::args_os()));
}
