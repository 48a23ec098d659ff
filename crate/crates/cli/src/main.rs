fn main() {
    std::process::exit(friable_cli::app::run(std::env::args_os()));
}
