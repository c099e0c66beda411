fn main() {
    std::process::exit(equisum_cli::run(std::env::args_os()));
}
