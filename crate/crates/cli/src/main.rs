fn main() {
    std::process::exit(mpemba_cli::run(std::env::args_os()));
}
