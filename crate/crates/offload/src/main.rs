fn main() {
    std::process::exit(offload::run_cli(std::env::args_os()));
}
