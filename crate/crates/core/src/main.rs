fn main() {
    std::process::exit(chaoscope::cli::run(std::env::args_os()));
}
