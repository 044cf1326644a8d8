fn main() {
    std::process::exit(uppnc::cli::run(std::env::args_os()));
}
