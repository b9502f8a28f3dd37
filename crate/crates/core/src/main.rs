fn main() {
    std::process::exit(sefron::cli::run(std::env::args_os()));
}
