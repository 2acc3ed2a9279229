fn main() {
    std::process::exit(rfae_cli::run(std::env::args_os()));
}
