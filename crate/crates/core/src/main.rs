fn main() {
    std::process::exit(kahler_core::cli::run(std::env::args_os()));
}
