fn main() {
    std::process::exit(freshblend_cli::run(std::env::args_os()));
}
