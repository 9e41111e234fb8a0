fn main() {
    std::process::exit(floodpipe_cli::run_cli(std::env::args_os()));
}
