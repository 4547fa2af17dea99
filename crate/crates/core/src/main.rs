fn main() {
    std::process::exit(entanglecert::cli::run(std::env::args_os()));
}
