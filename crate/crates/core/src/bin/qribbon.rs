fn main() {
    std::process::exit(qribbon::cli::run(std::env::args_os()));
}
