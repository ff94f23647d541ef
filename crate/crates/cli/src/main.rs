fn main() {
    std::process::exit(oldroyd_cli::run(std::env::args_os()));
}
