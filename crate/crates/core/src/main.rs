fn main() {
    std::process::exit(trishare::cli::run(std::env::args_os()));
}
