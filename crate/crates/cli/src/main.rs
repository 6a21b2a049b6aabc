fn main() {
    std::process::exit(stratalloc_cli::run(std::env::args_os()));
}
