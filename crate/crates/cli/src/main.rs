fn main() {
    std::process::exit(sphdecon_cli::run(std::env::args_os()));
}
