fn main() {
    std::process::exit(hornlab_cli::run(std::env::args_os()));
}
