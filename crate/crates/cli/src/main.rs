fn main() {
    std::process::exit(pccd_cli::run(std::env::args_os()));
}
