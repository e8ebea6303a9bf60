fn main() {
    std::process::exit(fdamimo::cli::run(std::env::args_os()));
}
