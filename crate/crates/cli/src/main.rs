fn main() {
    std::process::exit(wsaw_cli::run(std::env::args_os()));
}
