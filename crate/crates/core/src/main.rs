fn main() {
    std::process::exit(holowave::cli::run(std::env::args_os()));
}
